"""Integer number theory: totient, Möbius, Mertens, Farey fractions.

All arithmetic here is exact. The sieve tables are built once per bound,
grown on demand, and shared read-only; setting ``SIEVE_SPECTRA_CACHE`` to a
directory persists them between processes as ``.npz`` files.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = [
    "FareyFraction",
    "FareySet",
    "SieveTables",
    "sieve_tables",
    "totient",
    "mobius",
    "mertens",
    "divisors",
    "farey_count",
    "farey_set",
    "farey_exp_sum",
    "farey_exp_sums",
]

DEFAULT_SIEVE_BOUND = 1 << 12
CACHE_ENV = "SIEVE_SPECTRA_CACHE"


@dataclass(frozen=True)
class SieveTables:
    """phi, mu and the Mertens prefix sums on ``0..bound``.

    Index 0 is a placeholder (phi[0] = mu[0] = M[0] = 0).
    """

    bound: int
    phi: np.ndarray
    mu: np.ndarray
    mertens: np.ndarray


def _build_tables(bound):
    phi = np.arange(bound + 1, dtype=np.int64)
    mu = np.ones(bound + 1, dtype=np.int64)
    mu[0] = 0
    composite = np.zeros(bound + 1, dtype=bool)
    for p in range(2, bound + 1):
        if composite[p]:
            continue
        composite[2 * p :: p] = True
        phi[p::p] -= phi[p::p] // p
        mu[p::p] *= -1
        if p * p <= bound:
            mu[p * p :: p * p] = 0
    for arr in (phi, mu):
        arr.setflags(write=False)
    mert = np.cumsum(mu)
    mert.setflags(write=False)
    return SieveTables(bound, phi, mu, mert)


def _cache_file(bound):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"sieve_{bound}.npz"


def _load_or_build(bound):
    path = _cache_file(bound)
    if path is not None and path.exists():
        with np.load(path) as data:
            phi, mu, mert = data["phi"], data["mu"], data["mertens"]
        for arr in (phi, mu, mert):
            arr.setflags(write=False)
        return SieveTables(bound, phi, mu, mert)
    tables = _build_tables(bound)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, phi=tables.phi, mu=tables.mu, mertens=tables.mertens)
    return tables


_lock = threading.Lock()
_tables = None


def sieve_tables(bound: int = DEFAULT_SIEVE_BOUND) -> SieveTables:
    """Return tables covering at least ``0..bound``.

    The shared table is regrown to the next power of two when a caller asks
    past its end, so repeated small requests cost nothing.
    """
    global _tables
    current = _tables
    if current is not None and current.bound >= bound:
        return current
    with _lock:
        if _tables is None or _tables.bound < bound:
            size = DEFAULT_SIEVE_BOUND
            while size < bound:
                size *= 2
            _tables = _load_or_build(size)
        return _tables


def _positive_int(name, n):
    if isinstance(n, bool) or int(n) != n:
        raise ValidationError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValidationError(f"{name} must be >= 1, got {n}")
    return n


def totient(n: int) -> int:
    """Euler's phi(n)."""
    n = _positive_int("n", n)
    return int(sieve_tables(n).phi[n])


def mobius(n: int) -> int:
    """Möbius mu(n)."""
    n = _positive_int("n", n)
    return int(sieve_tables(n).mu[n])


def mertens(x: float) -> int:
    """M(x) = sum of mu(n) over 1 <= n <= floor(x); zero for x < 1."""
    if x < 0:
        raise ValidationError(f"x must be >= 0, got {x}")
    m = math.floor(x)
    if m < 1:
        return 0
    return int(sieve_tables(m).mertens[m])


def divisors(n: int) -> list[int]:
    """Positive divisors of |n| in increasing order, by trial division."""
    n = abs(int(n))
    if n == 0:
        raise ValidationError("0 has infinitely many divisors")
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


@dataclass(frozen=True, order=False)
class FareyFraction:
    """A reduced fraction a/q with 0 < a <= q."""

    a: int
    q: int

    def __post_init__(self):
        if not (0 < self.a <= self.q) or math.gcd(self.a, self.q) != 1:
            raise ValidationError(f"{self.a}/{self.q} is not a reduced fraction in (0, 1]")

    @property
    def value(self) -> float:
        return self.a / self.q

    def __lt__(self, other):
        return self.a * other.q < other.a * self.q

    def __str__(self):
        return f"{self.a}/{self.q}"


@dataclass(frozen=True, eq=False)
class FareySet:
    """Farey fractions of order Q in increasing order.

    Stored as parallel numerator/denominator arrays; ``fractions`` builds the
    object view on demand.
    """

    order: int
    numerators: np.ndarray
    denominators: np.ndarray

    def __len__(self):
        return len(self.numerators)

    @property
    def size(self) -> int:
        return len(self.numerators)

    @property
    def values(self) -> np.ndarray:
        return self.numerators / self.denominators

    @property
    def fractions(self) -> list[FareyFraction]:
        return [FareyFraction(int(a), int(q)) for a, q in zip(self.numerators, self.denominators)]

    def __iter__(self):
        return iter(self.fractions)

    def __getitem__(self, i):
        return FareyFraction(int(self.numerators[i]), int(self.denominators[i]))


def farey_count(Q: int) -> int:
    """|F_Q| = sum of phi(q) for q <= Q."""
    Q = _positive_int("Q", Q)
    return int(sieve_tables(Q).phi[1 : Q + 1].sum())


def farey_set(Q: int) -> FareySet:
    """All reduced a/q with 0 < a <= q <= Q, ascending.

    Uses the neighbour recurrence, which walks the sequence in order
    without sorting.
    """
    Q = _positive_int("Q", Q)
    size = farey_count(Q)
    num = np.empty(size, dtype=np.int64)
    den = np.empty(size, dtype=np.int64)
    a, b, c, d = 0, 1, 1, Q
    i = 0
    while True:
        num[i], den[i] = c, d
        i += 1
        if c == d:
            break
        k = (Q + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
    assert i == size
    num.setflags(write=False)
    den.setflags(write=False)
    return FareySet(Q, num, den)


def farey_exp_sum(n: int, Q: int) -> int:
    """Sum of e(n*theta) over theta in F_Q, as an exact integer.

    Uses the divisor identity: the sum equals sum of d*M(Q/d) over positive
    divisors d of n with d <= Q (every d <= Q when n = 0).
    """
    Q = _positive_int("Q", Q)
    tables = sieve_tables(Q)
    mert = tables.mertens
    if n == 0:
        ds = range(1, Q + 1)
    else:
        ds = (d for d in divisors(n) if d <= Q)
    return int(sum(d * int(mert[Q // d]) for d in ds))


def farey_exp_sums(N: int, Q: int) -> np.ndarray:
    """``[farey_exp_sum(k, Q) for k in range(N)]`` in O(N log Q).

    Each d <= Q adds d*M(Q/d) to every multiple of d, index 0 included.
    """
    Q = _positive_int("Q", Q)
    N = _positive_int("N", N)
    mert = sieve_tables(Q).mertens
    out = np.zeros(N, dtype=np.int64)
    for d in range(1, Q + 1):
        m = int(mert[Q // d])
        if m:
            out[::d] += d * m
    return out
