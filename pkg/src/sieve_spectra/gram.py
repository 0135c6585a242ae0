"""The large-sieve Gram matrix A*A and its dual AA*.

``A`` is the |F_Q| x N matrix (e(n theta)). A*A is N x N, integer,
symmetric Toeplitz, and is stored as its first row only. AA* is
|F_Q| x |F_Q| Hermitian with Dirichlet-kernel entries and is stored dense.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .config import DEFAULT_LIMITS, Limits, check_cap
from .errors import ValidationError
from .ntheory import farey_count, farey_exp_sums, farey_set, _positive_int

__all__ = [
    "GramMatrix",
    "DualGramMatrix",
    "build_gram",
    "gram_dense_oracle",
    "build_dual_gram",
    "dirichlet_kernel",
    "save_gram_binary",
    "load_gram_binary",
    "save_gram_csv",
]

GRAM_MAGIC = b"LSGRAM01"
_HEADER = struct.Struct("<8sII")


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """A*A for Farey order Q and frequencies 1..N.

    ``first_row[k]`` is the Farey exponential sum at frequency k, so the
    (i, j) entry is ``first_row[|i - j|]``.
    """

    Q: int
    N: int
    first_row: np.ndarray

    @property
    def shape(self):
        return (self.N, self.N)

    @property
    def farey_size(self) -> int:
        return int(self.first_row[0])

    @property
    def alpha(self) -> float:
        return self.N / self.Q**2

    def entry(self, i: int, j: int) -> int:
        return int(self.first_row[abs(i - j)])

    def trace(self) -> int:
        """Exact integer trace, |F_Q| * N."""
        return int(self.first_row[0]) * self.N

    def dense(self, dtype=np.float64) -> np.ndarray:
        return scipy.linalg.toeplitz(self.first_row.astype(dtype))


@dataclass(frozen=True, eq=False)
class DualGramMatrix:
    """AA* indexed by the Farey fractions of order Q."""

    Q: int
    N: int
    entries: np.ndarray

    @property
    def shape(self):
        return self.entries.shape

    @property
    def farey_size(self) -> int:
        return self.entries.shape[0]

    @property
    def alpha(self) -> float:
        return self.N / self.Q**2

    def dense(self) -> np.ndarray:
        return self.entries


def build_gram(Q: int, N: int, limits: Limits = DEFAULT_LIMITS) -> GramMatrix:
    """Build A*A from the divisor identity for Farey exponential sums."""
    Q = _positive_int("Q", Q)
    N = _positive_int("N", N)
    check_cap("N", N, limits.max_n)
    row = farey_exp_sums(N, Q)
    row.setflags(write=False)
    return GramMatrix(Q, N, row)


def gram_dense_oracle(Q: int, N: int) -> np.ndarray:
    """A*A by direct complex summation over F_Q.

    Test oracle only; guarded to Q <= 12, N <= 64.
    """
    Q = _positive_int("Q", Q)
    N = _positive_int("N", N)
    if Q > 12 or N > 64:
        raise ValidationError(f"oracle is limited to Q <= 12 and N <= 64, got Q={Q}, N={N}")
    theta = farey_set(Q).values
    n = np.arange(1, N + 1)
    A = np.exp(2j * np.pi * np.outer(theta, n))
    # (n1, n2) entry is sum e((n1 - n2) theta)
    G = (A.conj().T @ A).T
    imag = np.abs(G.imag).max()
    if imag >= 1e-9:
        raise AssertionError(f"oracle imaginary residue {imag:.3e}")
    return G.real.copy()


def dirichlet_kernel(N: int, num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Sum of e(n x) for n = 1..N at rational x = num/den, elementwise.

    Phases are reduced exactly in integers before going to floating point,
    and x in Z returns N.
    """
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    r1 = np.mod(num, den)
    rN = np.mod(r1 * np.mod(N, den), den)
    integral = r1 == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.exp(2j * np.pi * (r1 / den))
        eN = np.exp(2j * np.pi * (rN / den))
        out = e1 * (1 - eN) / (1 - e1)
    return np.where(integral, complex(N), out)


def build_dual_gram(Q: int, N: int, limits: Limits = DEFAULT_LIMITS) -> DualGramMatrix:
    """Build AA*, entry (theta, theta') = sum_{n<=N} e(n (theta' - theta))."""
    Q = _positive_int("Q", Q)
    N = _positive_int("N", N)
    check_cap("|F_Q|", farey_count(Q), limits.max_farey)
    F = farey_set(Q)
    a, q = F.numerators, F.denominators
    # theta' - theta = (a' q - a q') / (q q') with theta along rows.
    num = a[None, :] * q[:, None] - a[:, None] * q[None, :]
    den = q[:, None] * q[None, :]
    K = dirichlet_kernel(N, num, den)
    K = 0.5 * (K + K.conj().T)
    np.fill_diagonal(K, N)
    K.setflags(write=False)
    return DualGramMatrix(Q, N, K)


def save_gram_binary(gram: GramMatrix, path) -> Path:
    """Write the first row as little-endian int64 after a 16-byte header.

    Header layout: 8-byte magic ``LSGRAM01``, then Q and N as uint32.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(GRAM_MAGIC, gram.Q, gram.N))
        fh.write(np.asarray(gram.first_row, dtype="<i8").tobytes())
    return path


def load_gram_binary(path) -> GramMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError("file too short for an LSGRAM01 header")
    magic, Q, N = _HEADER.unpack_from(raw)
    if magic != GRAM_MAGIC:
        raise ValidationError(f"bad magic {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != 8 * N:
        raise ValidationError(f"expected {N} int64 values, found {len(body)} bytes")
    row = np.frombuffer(body, dtype="<i8").astype(np.int64)
    row.setflags(write=False)
    return GramMatrix(Q, N, row)


def save_gram_csv(gram: GramMatrix, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "c"])
        for k, c in enumerate(gram.first_row):
            w.writerow([k, int(c)])
    return path
