"""Eigenvalues, the empirical measure mu_{Q,N}, and moments of A*A / N.

Three independent routes to the moments are provided: from the spectrum,
from traces of matrix powers of A*A, and from traces of powers of the dual
AA*. They agree because the two Gram matrices share their nonzero spectrum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .config import DEFAULT_LIMITS, Limits, check_cap
from .errors import ConvergenceError, ValidationError
from .gram import DualGramMatrix, GramMatrix

__all__ = [
    "Spectrum",
    "EmpiricalMeasure",
    "MomentReport",
    "eigenvalues",
    "empirical_measure",
    "moment_spectral",
    "moment_trace",
    "moment_dual",
    "histogram",
    "small_eigenvalue_fraction",
    "write_eigenvalues_csv",
    "write_histogram_csv",
]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted descending, with the (Q, N) they came from.

    ``source`` is ``"gram"`` for A*A (N values) or ``"dual"`` for AA*
    (|F_Q| values). Raw values are kept, including tiny negatives.
    """

    eigenvalues: np.ndarray
    Q: int
    N: int
    source: str = "gram"

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def smallest(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def alpha(self) -> float:
        return self.N / self.Q**2

    def nonzero(self, tol: float) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues > tol]


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """N atoms at lambda_i / N, each of mass 1/N."""

    atoms: np.ndarray
    Q: int
    N: int

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.atoms), 1.0 / self.N)

    @property
    def total_mass(self) -> float:
        return len(self.atoms) / self.N

    def moment(self, ell: int) -> float:
        return float(np.sum(np.clip(self.atoms, 0.0, None) ** ell) / self.N)


@dataclass
class MomentReport:
    """One moment value with its provenance.

    ``method`` names the route: spectral, trace, dual, smoothed, lattice or
    g2. ``error`` is an error estimate when the route has one.
    """

    ell: int
    value: float
    method: str
    Q: int | None = None
    N: int | None = None
    alpha: float | None = None
    error: float | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "ell": self.ell,
            "value": self.value,
            "method": self.method,
            "Q": self.Q,
            "N": self.N,
            "alpha": self.alpha,
            "error": self.error,
        }
        out.update(self.details)
        return out


def _check_ell(ell):
    if int(ell) != ell or ell < 1:
        raise ValidationError(f"moment order must be a positive integer, got {ell!r}")
    return int(ell)


def eigenvalues(m: GramMatrix | DualGramMatrix, limits: Limits = DEFAULT_LIMITS) -> Spectrum:
    """Full spectrum of A*A or AA*, sorted descending."""
    if isinstance(m, GramMatrix):
        check_cap("N", m.N, limits.max_n)
        dense, source = m.dense(), "gram"
    elif isinstance(m, DualGramMatrix):
        check_cap("|F_Q|", m.farey_size, limits.max_farey)
        dense, source = m.dense(), "dual"
    else:
        raise ValidationError(f"expected a GramMatrix or DualGramMatrix, got {type(m).__name__}")
    try:
        vals = scipy.linalg.eigvalsh(dense, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    vals = vals[::-1].copy()
    vals.setflags(write=False)
    return Spectrum(vals, m.Q, m.N, source)


def empirical_measure(s: Spectrum) -> EmpiricalMeasure:
    """mu_{Q,N} from a spectrum.

    A dual spectrum has |F_Q| values rather than N; it is padded with zeros
    (N > |F_Q|) or has its |F_Q| - N smallest values dropped (N < |F_Q|),
    which are the structurally zero eigenvalues.
    """
    vals = np.asarray(s.eigenvalues, dtype=float)
    if len(vals) < s.N:
        vals = np.concatenate([vals, np.zeros(s.N - len(vals))])
    elif len(vals) > s.N:
        vals = vals[: s.N]
    return EmpiricalMeasure(vals / s.N, s.Q, s.N)


def moment_spectral(s: Spectrum, ell: int) -> MomentReport:
    """(1/N) sum (lambda_i / N)^ell with negative eigenvalues clamped to 0."""
    ell = _check_ell(ell)
    lam = np.clip(np.asarray(s.eigenvalues, dtype=float), 0.0, None) / s.N
    value = float(np.sum(lam**ell) / s.N)
    return MomentReport(ell, value, "spectral", s.Q, s.N, s.alpha)


def _trace_power(M, ell):
    # Tr(M^ell) = sum(M^a * (M^b)^T) with a + b = ell
    a = ell // 2
    b = ell - a
    powers = {1: M}
    P = M
    for k in range(2, b + 1):
        P = P @ M
        powers[k] = P
    Ma = powers[a] if a else None
    Mb = powers[b]
    if Ma is None:
        return np.trace(Mb)
    return np.sum(Ma * Mb.T)


def moment_trace(m: GramMatrix, ell: int, limits: Limits = DEFAULT_LIMITS) -> MomentReport:
    """Tr((A*A)^ell) / N^(ell+1) from matrix products in floating point."""
    ell = _check_ell(ell)
    check_cap("ell", ell, limits.max_trace_power)
    check_cap("N", m.N, limits.max_n)
    if ell == 1:
        value = m.farey_size / m.N
    else:
        value = float(_trace_power(m.dense() / m.N, ell)) / m.N
    return MomentReport(ell, value, "trace", m.Q, m.N, m.alpha)


def moment_dual(d: DualGramMatrix, ell: int, limits: Limits = DEFAULT_LIMITS) -> MomentReport:
    """Tr((AA*)^ell) / N^(ell+1); same value as moment_trace for equal (Q, N)."""
    ell = _check_ell(ell)
    check_cap("ell", ell, limits.max_trace_power)
    value = float(np.real(_trace_power(d.dense() / d.N, ell))) / d.N
    return MomentReport(ell, value, "dual", d.Q, d.N, d.alpha)


def histogram(e: EmpiricalMeasure, bin_width: float = 0.01, omit_below: float | None = None):
    """Density histogram of mu_{Q,N} on the grid of multiples of ``bin_width``.

    Bin k covers [(k - 1/2) w, (k + 1/2) w) and is reported at its centre
    k*w, the abscissa convention of the published figure. Densities are
    count / (N w), so they integrate to the retained mass. Atoms below
    ``omit_below`` are dropped. Returns (centre, density) pairs for every bin
    between the lowest and highest occupied one.
    """
    if not bin_width > 0:
        raise ValidationError(f"bin_width must be > 0, got {bin_width}")
    atoms = np.asarray(e.atoms, dtype=float)
    if omit_below is not None:
        atoms = atoms[atoms >= omit_below]
    if len(atoms) == 0:
        return []
    idx = np.floor(atoms / bin_width + 0.5).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    dens = counts / (e.N * bin_width)
    return [(k * bin_width, float(d)) for k, d in zip(range(lo, hi + 1), dens)]


def small_eigenvalue_fraction(e: EmpiricalMeasure, threshold: float = 0.01) -> float:
    """Fraction of atoms in [0, threshold]; a diagnostic, not an invariant."""
    atoms = np.asarray(e.atoms)
    return float(np.count_nonzero(atoms <= threshold) / e.N)


def _fmt(x):
    return format(float(x), ".12g")


def write_eigenvalues_csv(s: Spectrum, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("eigenvalue\n")
        for v in s.eigenvalues:
            fh.write(_fmt(v) + "\n")
    return path


def write_histogram_csv(hist, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "density"])
        for c, d in hist:
            w.writerow([_fmt(c), _fmt(d)])
    return path
