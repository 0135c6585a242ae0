"""Smooth plateau weights f_delta and the smoothed moments M_{ell;delta}(Q).

f_delta is 1 on [delta, 1], rises over [0, delta] and falls over
[1, 1 + delta] through a fixed C-infinity profile Xi. Replacing the sharp
cutoff n <= N by the weights f_delta(n / N) changes every moment by O(delta);
``smoothed_moment`` lets that be checked directly at small Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.interpolate
import scipy.linalg
import scipy.special

from .config import DEFAULT_LIMITS, Limits, check_cap
from .errors import ConvergenceError, ValidationError
from .ntheory import _positive_int, farey_count, farey_set
from .spectra import MomentReport

__all__ = [
    "xi",
    "xi_prime",
    "SmoothBump",
    "f_delta",
    "WindowSpectrum",
    "phi_win",
    "fhat_delta",
    "transfer_matrix",
    "smoothed_moment",
]

def _profile_exponent(x):
    # 1/x - 1/(1-x) on the open interval
    return 1.0 / x - 1.0 / (1.0 - x)


def xi(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1, Xi(x) + Xi(1 - x) = 1.

    Xi(x) = s(x) / (s(x) + s(1 - x)) with s(t) = exp(-1/t), written as a
    logistic function of 1/(1-x) - 1/x to avoid underflow.
    """
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    val = scipy.special.expit(-_profile_exponent(xs))
    out = np.where(inside, val, np.where(x >= 1, 1.0, 0.0))
    return out if out.ndim else float(out)


def xi_prime(x):
    """Derivative of Xi, Xi(1 - Xi) (1/x^2 + 1/(1-x)^2) on (0, 1), else 0."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    X = scipy.special.expit(-_profile_exponent(xs))
    d = X * (1.0 - X) * (1.0 / xs**2 + 1.0 / (1.0 - xs) ** 2)
    out = np.where(inside, d, 0.0)
    return out if out.ndim else float(out)


def _check_delta(delta):
    if not (0 < delta < 0.5):
        raise ValidationError(f"delta must lie in (0, 1/2), got {delta}")
    return float(delta)


def f_delta(x, delta: float):
    """Plateau weight: Xi(x/delta) on [0, delta], 1 on [delta, 1],
    Xi((1 + delta - x)/delta) on [1, 1 + delta], 0 elsewhere."""
    delta = _check_delta(delta)
    x = np.asarray(x, dtype=float)
    rise = xi(x / delta)
    fall = xi((1.0 + delta - x) / delta)
    out = np.where(x <= 1.0, rise, fall)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SmoothBump:
    """f_delta for one delta, callable."""

    delta: float

    def __post_init__(self):
        _check_delta(self.delta)

    def __call__(self, x):
        return f_delta(x, self.delta)

    @property
    def support(self):
        return (0.0, 1.0 + self.delta)

    def integral(self) -> float:
        d = self.delta
        a, _ = scipy.integrate.quad(lambda t: f_delta(t, d), 0.0, d, epsabs=1e-14, epsrel=1e-14)
        b, _ = scipy.integrate.quad(lambda t: f_delta(t, d), 1.0, 1.0 + d, epsabs=1e-14, epsrel=1e-14)
        return a + (1.0 - d) + b


def _phi_direct(u: float) -> complex:
    """int_0^1 Xi'(y) e(-u y) dy by adaptive oscillatory quadrature."""
    if u == 0:
        return 1.0 + 0.0j
    w = 2 * math.pi * u
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    re, _ = scipy.integrate.quad(xi_prime, 0.0, 1.0, weight="cos", wvar=w, **opts)
    im, _ = scipy.integrate.quad(xi_prime, 0.0, 1.0, weight="sin", wvar=w, **opts)
    return complex(re, -im)


def _phi_gauss(u, tol=1e-14, n=32, n_max=4096):
    """Vectorized phi_win on many u: Gauss-Legendre with the node count
    doubled until the largest change is below ``tol``."""
    u = np.asarray(u, dtype=float)
    prev = None
    while True:
        g, w = np.polynomial.legendre.leggauss(n)
        y = (g + 1) / 2
        wy = w / 2 * xi_prime(y)
        cur = np.exp(-2j * math.pi * np.outer(u, y)) @ wy
        if prev is not None and np.max(np.abs(cur - prev)) < tol:
            return cur
        if n >= n_max:
            raise ConvergenceError("window transform did not converge")
        prev = cur
        n *= 2


@dataclass
class WindowSpectrum:
    """phi_win(u) = int_0^1 Xi'(y) e(-u y) dy with a cached grid.

    Samples on [0, u_max] at spacing ``step`` are computed once by
    Gauss-Legendre quadrature refined until stable. Values inside the grid
    come from a cubic spline; outside it the same quadrature runs directly. phi_win(-u) = conj(phi_win(u)).
    """

    u_max: float = 8.0
    step: float = 1.0 / 512
    _spline: object = field(default=None, repr=False)

    def _build(self):
        grid = np.arange(0.0, self.u_max + self.step / 2, self.step)
        vals = _phi_gauss(grid)
        vals[0] = 1.0  # exact: Xi' integrates to 1
        self._spline = (
            scipy.interpolate.CubicSpline(grid, vals.real),
            scipy.interpolate.CubicSpline(grid, vals.imag),
        )

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        au = np.abs(u).ravel()
        out = np.empty(au.shape, dtype=complex)
        inside = au <= self.u_max
        if inside.any():
            if self._spline is None:
                self._build()
            sr, si = self._spline
            out[inside] = sr(au[inside]) + 1j * si(au[inside])
        outside = np.flatnonzero(~inside)
        if len(outside):
            try:
                out[outside] = _phi_gauss(au[outside])
            except ConvergenceError:
                for i in outside:
                    out[i] = _phi_direct(float(au[i]))
        out = out.reshape(u.shape)
        out = np.where(u < 0, np.conj(out), out)
        return out if out.ndim else complex(out)


_WINDOW = WindowSpectrum()


def phi_win(u, cached: bool = True):
    """Fourier transform of the profile derivative, int_0^1 Xi'(y) e(-u y) dy."""
    if cached:
        return _WINDOW(u)
    u = np.asarray(u, dtype=float)
    out = np.array([_phi_direct(abs(float(v))) for v in u.ravel()], dtype=complex).reshape(u.shape)
    out = np.where(u < 0, np.conj(out), out)
    return out if out.ndim else complex(out)


def fhat_delta(u, delta: float, cached: bool = True):
    """Fourier transform of f_delta: e^{-pi i u} sinc(pi u) phi_win(delta u)."""
    delta = _check_delta(delta)
    u = np.asarray(u, dtype=float)
    # np.sinc is the normalized sinc, sin(pi u)/(pi u)
    out = np.exp(-1j * math.pi * u) * np.sinc(u) * phi_win(delta * u, cached)
    return out if out.ndim else complex(out)


def transfer_matrix(Q: int, N: int, delta: float, limits: Limits = DEFAULT_LIMITS) -> np.ndarray:
    """Hermitian T with T(theta, theta') = sum_{0<n<(1+delta)N} f_delta(n/N) e(n (theta' - theta)).

    Assembled as B diag(w) B^* with B[theta, n] = e(-n theta); phases
    n a mod q are reduced exactly in integers.
    """
    Q = _positive_int("Q", Q)
    N = _positive_int("N", N)
    delta = _check_delta(delta)
    check_cap("Q", Q, limits.max_smooth_order)
    check_cap("|F_Q|", farey_count(Q), limits.max_farey)
    F = farey_set(Q)
    a, q = F.numerators, F.denominators
    n_max = math.ceil((1 + delta) * N) - 1
    n = np.arange(1, n_max + 1, dtype=np.int64)
    w = f_delta(n / N, delta)
    # B[theta, n] = e(-n theta), T = B diag(w) B^*
    r = np.mod(np.outer(a, n), q[:, None])
    Bm = np.exp(-2j * math.pi * (r / q[:, None]))
    T = (Bm * w[None, :]) @ Bm.conj().T
    T = 0.5 * (T + T.conj().T)
    return T


def smoothed_moment(Q: int, N: int, ell: int, delta: float, limits: Limits = DEFAULT_LIMITS) -> MomentReport:
    """M_{ell;delta}(Q) = Tr(T^ell) / N^(ell+1) from the eigenvalues of T.

    Q is capped by ``limits.max_smooth_order`` (50 by default).
    """
    if int(ell) != ell or ell < 1:
        raise ValidationError(f"moment order must be a positive integer, got {ell!r}")
    ell = int(ell)
    T = transfer_matrix(Q, N, delta, limits)
    try:
        lam = scipy.linalg.eigvalsh(T)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    value = float(np.sum((lam / N) ** ell) / N)
    weight_sum = float(np.sum(f_delta(np.arange(1, math.ceil((1 + delta) * N)) / N, delta)))
    return MomentReport(
        ell, value, "smoothed", Q, N, N / Q**2,
        details={"delta": delta, "trace": float(np.sum(lam)), "weight_sum": weight_sum,
                 "farey_size": T.shape[0]},
    )
