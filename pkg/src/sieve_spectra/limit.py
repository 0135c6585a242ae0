"""Limiting moments M_ell(alpha) of the scaled large-sieve spectrum.

For ell >= 2 the moment is a lattice sum

    M_ell(alpha) = 6 / (pi^2 alpha) * sum over (A, B) of  ∬_{D_{A,B}} F dx dy

with F = sinc(pi a h_1) sinc(pi a h_k) prod sinc(pi a (h_i - h_{i+1})),
h_i = B_i / (y (A_i y - B_i x)) and k = ell - 1. The sum is absolutely
convergent but has no effective rate, so it is truncated at
max(|A_i|, |B_i|) <= R and R is doubled until successive truncations agree.

M_2 has an independent closed form through the Farey pair-correlation
density g_2; ``m2_via_g2`` evaluates it for cross-checking.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.special

from .errors import ValidationError
from .lattice import LatticePair, PairBatch, domain_polygon, feasible_batches, polygon_areas
from .ntheory import sieve_tables
from .quadrature import integrate_triangles, triangulate
from .spectra import MomentReport

__all__ = [
    "sinc",
    "h_fn",
    "integrand",
    "QuadratureConfig",
    "PairIntegral",
    "integrate_pair",
    "integrate_batch",
    "shell_sum",
    "limit_moment",
    "g2",
    "m2_via_g2",
    "M2Result",
    "write_pair_ledger",
    "limit_summary_json",
]

SIX_OVER_PI2 = 6.0 / math.pi**2
THREE_OVER_PI2 = 3.0 / math.pi**2


def sinc(x):
    """sin(x)/x with sinc(0) = 1; a short series is used for |x| < 1e-4."""
    x0 = np.asarray(x, dtype=float)
    x = np.atleast_1d(x0)
    big = np.abs(x) >= 1e-4
    out = np.sin(x)
    np.divide(out, x, out=out, where=big)
    if not big.all():
        xs = x[~big]
        x2 = xs * xs
        out[~big] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return out.reshape(x0.shape) if x0.ndim else float(out[0])


def h_fn(A: int, B: int, x: float, y: float) -> float:
    """B / (y (A y - B x)); rejects the poles y = 0 and A y = B x."""
    if y <= 0:
        raise ValidationError(f"h is undefined for y={y}")
    t = A * y - B * x
    if t == 0:
        raise ValidationError(f"h has a pole at A y - B x = 0 (A={A}, B={B}, x={x}, y={y})")
    return B / (y * t)


def _integrand_arrays(A, B, alpha, X, Y, absolute=False):
    """Vectorized integrand.

    A, B have shape (T, k); X, Y have shape (T, n). Points with some
    A_i y - B_i x <= 0 lie on a boundary (or just outside through rounding)
    and contribute 0.
    """
    A = A.astype(float)[:, :, None]
    B = B.astype(float)[:, :, None]
    k = A.shape[1]
    Xs = X[:, None, :]
    Ys = Y[:, None, :]
    t = A * Ys - B * Xs
    bad = (t <= 0).any(axis=1) | (Y <= 0)
    t = np.where(t > 0, t, 1.0)
    Ysafe = np.where(Y > 0, Y, 1.0)
    pa = math.pi * alpha
    h = B / (Ysafe[:, None, :] * t)
    first = sinc(pa * h[:, 0])
    last = sinc(pa * h[:, k - 1])
    if absolute:
        first, last = np.abs(first), np.abs(last)
    val = first * last
    if k > 1:
        # h_i - h_{i+1} = (A_{i+1} B_i - A_i B_{i+1}) / (t_i t_{i+1})
        D = A[:, 1:, :] * B[:, :-1, :] - A[:, :-1, :] * B[:, 1:, :]
        mid = sinc(pa * D / (t[:, :-1] * t[:, 1:]))
        if absolute:
            mid = np.abs(mid)
        val = val * mid.prod(axis=1)
    return np.where(bad, 0.0, val)


def integrand(p: LatticePair, alpha: float, x, y):
    """The sinc product at interior points (x, y) of D_{A,B}.

    ``p`` is a LatticePair or a raw (A, B) pair of integer sequences.
    """
    Av, Bv = _as_vectors(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.asarray(Av, dtype=float)
    B = np.asarray(Bv, dtype=float)
    t = A[:, None] * y.ravel()[None, :] - B[:, None] * x.ravel()[None, :]
    if (y <= 0).any() or (t == 0).any():
        raise ValidationError("integrand evaluated at a pole of h")
    out = _integrand_arrays(
        np.asarray(Av)[None, :], np.asarray(Bv)[None, :], alpha,
        x.reshape(1, -1), y.reshape(1, -1),
    )
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def _magnitude_bound(A, B, alpha, tris):
    """Upper bound of |integrand| on each triangle.

    Uses |sinc(pi a h)| <= 1 / (pi a |h|) for the first and last factors,
    with |h_i| >= |B_i| / (max y * max t_i) since y and t_i are linear and
    therefore maximal at vertices.
    """
    A = A.astype(float)
    B = B.astype(float)
    ymax = tris[:, :, 1].max(axis=1)
    k = A.shape[1]
    out = np.ones(len(tris))
    for i in {0, k - 1}:
        t = A[:, i, None] * tris[:, :, 1] - B[:, i, None] * tris[:, :, 0]
        tmax = np.maximum(t.max(axis=1), 0.0)
        absB = np.abs(B[:, i])
        with np.errstate(divide="ignore"):
            b = np.where(absB > 0, ymax * tmax / (math.pi * alpha * absB), 1.0)
        b = np.minimum(b, 1.0)
        out *= b * b if k == 1 else b
    return out


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation controls for the lattice sum.

    ``atol`` is the absolute quadrature tolerance per tuple integral.
    ``R_start``/``R_max`` bound the truncation radius, which doubles until
    two successive partial sums differ by less than
    ``cauchy_tol * max(1, |value|)``.
    ``max_pairs`` stops doubling before a shell that would enumerate more
    tuples than that (the count grows like R^(2 ell - 2)).
    """

    atol: float = 1e-6
    max_depth: int = 10
    R_start: int = 16
    R_max: int = 128
    cauchy_tol: float = 1e-3
    order: tuple = (4, 6)
    batch_pairs: int = 4096
    max_pairs: int = 4_000_000

    def __post_init__(self):
        if not self.atol > 0:
            raise ValidationError("atol must be > 0")
        if self.R_start < 1 or self.R_max < self.R_start:
            raise ValidationError("need 1 <= R_start <= R_max")
        if not self.cauchy_tol > 0:
            raise ValidationError("cauchy_tol must be > 0")


@dataclass
class PairIntegral:
    """Integral of the sinc product over one domain."""

    pair: object
    value: float
    error: float
    area: float
    converged: bool


def integrate_batch(batch: PairBatch, alpha: float, cfg: QuadratureConfig, absolute: bool = False):
    """Integrals for every tuple of a PairBatch; returns (values, errors, converged)."""
    n = len(batch)
    values = np.zeros(n)
    errors = np.zeros(n)
    conv = np.ones(n, dtype=bool)
    step = max(1, cfg.batch_pairs)
    for s in range(0, n, step):
        sub = batch.take(slice(s, s + step))
        tris, owner = triangulate(sub.V, sub.cnt)
        A, B = sub.A, sub.B

        def func(X, Y, own):
            return _integrand_arrays(A[own], B[own], alpha, X, Y, absolute)

        def bound(T, own):
            return _magnitude_bound(A[own], B[own], alpha, T)

        res = integrate_triangles(tris, owner, len(sub), func, cfg.atol, cfg.order, cfg.max_depth, bound)
        values[s : s + step] = res.value
        errors[s : s + step] = res.error
        conv[s : s + step] = res.converged
    return values, errors, conv


def _as_vectors(p):
    if isinstance(p, LatticePair):
        return p.A, p.B
    A, B = p
    return tuple(int(a) for a in A), tuple(int(b) for b in B)


def _single_batch(p):
    A, B = _as_vectors(p)
    dom = domain_polygon((A, B))
    if dom.is_empty:
        return dom, None
    k = len(A)
    V = dom.vertices[None, :, :]
    cnt = np.array([len(dom.vertices)])
    return dom, PairBatch(np.array([A], dtype=np.int64).reshape(1, k),
                          np.array([B], dtype=np.int64).reshape(1, k), V, cnt)


def integrate_pair(p, alpha: float, cfg: QuadratureConfig = QuadratureConfig(),
                   absolute: bool = False) -> PairIntegral:
    """Adaptive quadrature of the sinc product over D_{A,B}; 0 on empty domains.

    ``p`` is a LatticePair or a raw (A, B) pair of sequences; the latter
    skips the primitivity check, as in ``domain_polygon``. When the depth
    limit is hit the best estimate is returned with ``converged=False``.
    """
    if not alpha > 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    dom, batch = _single_batch(p)
    if batch is None:
        return PairIntegral(p, 0.0, 0.0, 0.0, True)
    v, e, c = integrate_batch(batch, alpha, cfg, absolute)
    return PairIntegral(p, float(v[0]), float(e[0]), dom.area, bool(c[0]))


@dataclass
class ShellResult:
    """Sum of tuple integrals over r_min < max coordinate <= R."""

    r_min: int
    R: int
    value: float
    abs_value: float
    error: float
    count: int
    unconverged: int
    ledger: list = field(default_factory=list)


def shell_sum(ell: int, alpha: float, r_min: int, R: int, cfg: QuadratureConfig = QuadratureConfig(),
              absolute: bool = False, keep_ledger: bool = False) -> ShellResult:
    """Sum the tuple integrals of one shell.

    Sums use ``math.fsum``, which is correctly rounded, so the result does
    not depend on batch boundaries or enumeration order. Ledger rows are
    sorted by (max coordinate, A, B).
    """
    vals, errs, rows = [], [], []
    count = unconverged = 0
    for batch in feasible_batches(ell, R, r_min):
        v, e, c = integrate_batch(batch, alpha, cfg, absolute)
        vals.append(v)
        errs.append(e)
        count += len(batch)
        unconverged += int((~c).sum())
        if keep_ledger:
            areas = polygon_areas(batch.V, batch.cnt)
            for i in range(len(batch)):
                rows.append((tuple(batch.A[i]), tuple(batch.B[i]), float(areas[i]), float(v[i])))
    if count == 0:
        return ShellResult(r_min, R, 0.0, 0.0, 0.0, 0, 0, rows)
    vals = np.concatenate(vals)
    errs = np.concatenate(errs)
    if keep_ledger:
        rows.sort(key=lambda r: (max(max(abs(a), abs(b)) for a, b in zip(r[0], r[1])),) + r[0] + r[1])
    return ShellResult(
        r_min, R, math.fsum(vals), math.fsum(np.abs(vals)), math.fsum(errs),
        count, unconverged, rows,
    )


def limit_moment(ell: int, alpha: float, cfg: QuadratureConfig = QuadratureConfig(),
                 extrapolate: bool = False, keep_ledger: bool = False) -> MomentReport:
    """M_ell(alpha) by the truncated lattice sum with R-doubling.

    ell = 1 returns 3 / (pi^2 alpha). For ell >= 2 shells (R/2, R] are
    added until the last shell is smaller than ``cfg.cauchy_tol`` in the
    normalized moment (relative once the moment exceeds 1), R reaches
    ``cfg.R_max``, or the next shell would exceed ``cfg.max_pairs``
    tuples. The report's ``details`` carry R_final, cauchy_gap, converged
    and the per-shell history.

    With ``extrapolate=True`` the value adds a geometric estimate of the
    remaining tail, last_shell * rho / (1 - rho) where rho is the ratio of
    the last two shells; this is only applied when 0 < rho < 1.
    """
    if int(ell) != ell or ell < 1:
        raise ValidationError(f"ell must be a positive integer, got {ell!r}")
    if not alpha > 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    ell = int(ell)
    pref = SIX_OVER_PI2 / alpha
    if ell == 1:
        return MomentReport(1, THREE_OVER_PI2 / alpha, "lattice", alpha=alpha, error=0.0,
                            details={"R_final": 0, "cauchy_gap": 0.0, "converged": True})

    R = cfg.R_start
    # the initial block is split at R/2 so that the tail ratio below always
    # compares two genuine shells
    half = R // 2
    shells = []
    if half >= 1:
        shells.append(shell_sum(ell, alpha, 0, half, cfg, keep_ledger=keep_ledger))
    shells.append(shell_sum(ell, alpha, half, R, cfg, keep_ledger=keep_ledger))
    total = sum(s.value for s in shells)
    gap = math.inf
    converged = False
    stop_reason = "R_max"
    while R < cfg.R_max:
        nxt = 2 * R
        estimate = shells[-1].count * 2 ** (2 * ell - 2)
        if estimate > cfg.max_pairs:
            stop_reason = "max_pairs"
            break
        sh = shell_sum(ell, alpha, R, nxt, cfg, keep_ledger=keep_ledger)
        shells.append(sh)
        total += sh.value
        R = nxt
        gap = abs(pref * sh.value)
        if gap < cfg.cauchy_tol * max(1.0, abs(pref * total)):
            converged = True
            stop_reason = "cauchy"
            break
    value = pref * total
    tail = 0.0
    if len(shells) >= 2 and shells[-2].r_min > 0:
        a, b = shells[-2].value, shells[-1].value
        if a != 0:
            rho = b / a
            if 0 < rho < 1:
                tail = pref * b * rho / (1 - rho)
    quad_err = pref * sum(s.error for s in shells)
    details = {
        "R_final": R,
        "cauchy_gap": gap if math.isfinite(gap) else None,
        "converged": converged,
        "stop_reason": stop_reason,
        "raw_value": value,
        "tail_estimate": tail,
        "extrapolated": bool(extrapolate),
        "pairs": sum(s.count for s in shells),
        "unconverged_pairs": sum(s.unconverged for s in shells),
        "shells": [
            {"r_min": s.r_min, "R": s.R, "sum": pref * s.value, "abs_sum": pref * s.abs_value, "count": s.count}
            for s in shells
        ],
    }
    if keep_ledger:
        details["ledger"] = [row for s in shells for row in s.ledger]
    if extrapolate:
        value += tail
    err = quad_err + (abs(tail) if not extrapolate else abs(tail) / 2) + (gap if math.isfinite(gap) else 0.0)
    return MomentReport(ell, value, "lattice", alpha=alpha, error=err, details=details)


# ---------------------------------------------------------------------------
# second moment through the pair-correlation density


@lru_cache(maxsize=8)
def _phi_prefix(bound):
    phi = sieve_tables(bound).phi[: bound + 1].astype(float)
    K = np.arange(bound + 1, dtype=float)
    logK = np.log(np.where(K > 0, K, 1.0))
    return np.cumsum(phi), np.cumsum(phi * logK)


def g2(u):
    """g_2 at (3/pi^2) u, i.e. 2 pi^2 / (3 u^2) * sum_{1 <= K < u} phi(K) log(u / K).

    Zero for u <= 1. Vectorized over u.
    """
    u = np.asarray(u, dtype=float)
    if (u <= 0).any():
        raise ValidationError("g2 needs u > 0")
    top = int(math.ceil(float(u.max()))) + 1
    S0, S1 = _phi_prefix(max(top, 16))
    m = np.ceil(u).astype(np.int64) - 1  # largest K < u
    m = np.maximum(m, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (S0[m] * np.log(u) - S1[m]) * (2 * math.pi**2 / 3) / (u * u)
    out = np.where(u > 1, val, 0.0)
    return out if out.ndim else float(out)


@dataclass
class M2Result:
    """Second limiting moment from the g_2 integral."""

    alpha: float
    value: float
    error: float
    quad_error: float
    tail_bound: float
    cutoff: float

    def as_report(self) -> MomentReport:
        return MomentReport(2, self.value, "g2", alpha=self.alpha, error=self.error,
                            details={"cutoff": self.cutoff, "tail_bound": self.tail_bound})


def _segment_integral(f, a, b, n):
    g, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * g[None, :]
    return (f(x) @ w) * half


def m2_via_g2(alpha: float, cutoff: float = 1000.0, rtol: float = 1e-12) -> M2Result:
    """M_2(alpha) = 3/(pi^2 a) + (3/pi^2)^2 (2/a) ∫_0^inf sinc^2(pi a u) g2(u) du.

    The integral runs over [1, cutoff] (g2 vanishes below 1) on unit
    segments, where g2 is smooth; each segment is refined until a Gauss
    rule and its doubled-order partner agree. The tail beyond ``cutoff`` is
    not added to the value; its bound from |sinc x| <= 1/|x| and
    g2(u) <= 1 + c/u is reported in ``error``.
    """
    if not alpha > 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    if not cutoff > 1:
        raise ValidationError("cutoff must exceed 1")
    pa = math.pi * alpha

    def f(u):
        return sinc(pa * u) ** 2 * g2(u)

    # each unit segment holds about alpha oscillations of sinc^2
    pieces = max(1, int(math.ceil(2 * alpha)))
    edges = np.concatenate([np.arange(1.0, cutoff, 1.0 / pieces), [cutoff]])
    a, b = edges[:-1], edges[1:]
    n = 12
    while True:
        lo = _segment_integral(f, a, b, n)
        hi = _segment_integral(f, a, b, 2 * n)
        diff = np.abs(hi - lo)
        if diff.sum() <= rtol * abs(hi.sum()) or n >= 96:
            break
        n *= 2
    integral = math.fsum(hi)
    quad_err = float(diff.sum())
    coef = THREE_OVER_PI2**2 * 2 / alpha
    # g2(u) <= 1 + c/u; c = 2 bounds the constant comfortably for u >= 1
    c = 2.0
    tail = (1 / (pa**2 * cutoff) + c / (2 * pa**2 * cutoff**2))
    value = THREE_OVER_PI2 / alpha + coef * integral
    return M2Result(alpha, value, coef * (quad_err + tail), coef * quad_err, coef * tail, cutoff)


def m2_tail_asymptotic(alpha: float, cutoff: float) -> float:
    """∫_cutoff^inf sinc^2(pi a u) du in closed form (g2 replaced by 1)."""
    X = math.pi * alpha * cutoff
    si, _ = scipy.special.sici(2 * X)
    return (math.sin(X) ** 2 / X + (math.pi / 2 - si)) / (math.pi * alpha)


# ---------------------------------------------------------------------------
# artifacts


def write_pair_ledger(report: MomentReport, path) -> Path:
    """CSV of per-tuple contributions: ell, alpha, A..., B..., area, integral."""
    rows = report.details.get("ledger")
    if rows is None:
        raise ValidationError("report was computed without keep_ledger=True")
    k = report.ell - 1
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ell", "alpha"] + [f"A{i + 1}" for i in range(k)] + [f"B{i + 1}" for i in range(k)]
                   + ["area", "integral"])
        for A, B, area, val in rows:
            w.writerow([report.ell, format(report.alpha, ".12g")] + list(A) + list(B)
                       + [format(area, ".12g"), format(val, ".12g")])
    return path


def _round12(x):
    if x is None:
        return None
    return float(format(float(x), ".12g"))


def limit_summary_json(report: MomentReport) -> str:
    """Canonical JSON summary {ell, alpha, R_final, value, cauchy_gap}."""
    d = report.details
    payload = {
        "ell": report.ell,
        "alpha": _round12(report.alpha),
        "R_final": d.get("R_final"),
        "value": _round12(report.value),
        "cauchy_gap": _round12(d.get("cauchy_gap")),
        "converged": d.get("converged"),
    }
    return json.dumps(payload, sort_keys=True)
