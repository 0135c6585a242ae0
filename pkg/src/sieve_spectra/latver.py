"""Exact checks for chained determinant equations and lattice-sum tails.

A coprime pair (A1, B1) and an integer D define the line of integer
solutions (A2, B2) of A1 B2 - A2 B1 = D. Chains of such equations are what
the tail estimate for the lattice sum counts; here they are enumerated
exactly, both by walking the parameterized lines and by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import ResourceGuardError, ValidationError
from .lattice import gcd0

__all__ = [
    "DetEquation",
    "LineSolution",
    "extended_gcd",
    "solve_line",
    "line_solutions_in_box",
    "brute_force_line",
    "dyadic_box",
    "enumerate_chain",
    "brute_force_chain",
    "shell_tail",
]

MAX_BOX_SIDE = 64


def extended_gcd(a: int, b: int):
    """(g, u, v) with a u + b v = g = gcd(|a|, |b|) >= 0."""
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    if old_r < 0:
        old_r, old_u, old_v = -old_r, -old_u, -old_v
    return old_r, old_u, old_v


@dataclass(frozen=True)
class DetEquation:
    """A1 * B2 - A2 * B1 = D in the unknowns (A2, B2)."""

    A1: int
    B1: int
    D: int

    def __post_init__(self):
        if gcd0(self.A1, self.B1) != 1:
            raise ValidationError(
                f"({self.A1}, {self.B1}) is not a coprime pair; gcd(A, 0) counts as |A|"
            )

    def holds(self, A2: int, B2: int) -> bool:
        return self.A1 * B2 - A2 * self.B1 == self.D


@dataclass(frozen=True)
class LineSolution:
    """Solutions base + k * direction for k in Z."""

    base: tuple
    direction: tuple

    def point(self, k: int):
        return (self.base[0] + k * self.direction[0], self.base[1] + k * self.direction[1])


def solve_line(eq: DetEquation) -> LineSolution:
    """Parameterize all integer solutions of A1 B2 - A2 B1 = D.

    With A1 u + B1 v = 1 from the extended Euclidean algorithm, the base
    solution is (A2, B2) = (-D v, D u); adding multiples of (A1, B1) gives
    every other solution.
    """
    g, u, v = extended_gcd(eq.A1, eq.B1)
    assert g == 1
    return LineSolution((-eq.D * v, eq.D * u), (eq.A1, eq.B1))


def _k_range(x0, step, lo, hi):
    """Integers k with lo <= x0 + k step <= hi; None means unconstrained."""
    if step == 0:
        return None if lo <= x0 <= hi else (1, 0)
    # exact integer ceil/floor of the rational bounds
    if step > 0:
        k_lo = -((x0 - lo) // step)
        k_hi = (hi - x0) // step
    else:
        s = -step
        k_lo = -((hi - x0) // s)
        k_hi = (x0 - lo) // s
    return (k_lo, k_hi)


def _check_box(box):
    (alo, ahi), (blo, bhi) = box
    for lo, hi in ((alo, ahi), (blo, bhi)):
        if hi - lo + 1 > MAX_BOX_SIDE:
            raise ResourceGuardError(f"box side {hi - lo + 1} exceeds {MAX_BOX_SIDE}")
    return (int(alo), int(ahi)), (int(blo), int(bhi))


def line_solutions_in_box(eq: DetEquation, box, coprime: bool = False):
    """Solutions (A2, B2) inside box = ((A_lo, A_hi), (B_lo, B_hi)), sorted."""
    (alo, ahi), (blo, bhi) = box
    sol = solve_line(eq)
    (x0, y0), (dx, dy) = sol.base, sol.direction
    ra = _k_range(x0, dx, alo, ahi)
    rb = _k_range(y0, dy, blo, bhi)
    ranges = [r for r in (ra, rb) if r is not None]
    # (A1, B1) != (0, 0) so at least one coordinate moves with k
    k_lo = max(r[0] for r in ranges)
    k_hi = min(r[1] for r in ranges)
    out = []
    for k in range(k_lo, k_hi + 1):
        p = sol.point(k)
        if coprime and gcd0(*p) != 1:
            continue
        out.append(p)
    return sorted(out)


def brute_force_line(eq: DetEquation, box):
    """Scan the whole box for solutions; the oracle for line_solutions_in_box."""
    (alo, ahi), (blo, bhi) = box
    return sorted(
        (a, b) for a in range(alo, ahi + 1) for b in range(blo, bhi + 1) if eq.holds(a, b)
    )


def dyadic_box(a: int, b: int):
    """The box [2^a - 1, 2^(a+1)] x [2^b - 1, 2^(b+1)]."""
    return ((2**a - 1, 2 ** (a + 1)), (2**b - 1, 2 ** (b + 1)))


def _coprime_in_box(box):
    (alo, ahi), (blo, bhi) = box
    return [
        (a, b) for a in range(alo, ahi + 1) for b in range(blo, bhi + 1) if gcd0(a, b) == 1
    ]


def _chain_args(ell, boxes, D):
    if int(ell) != ell or ell < 2:
        raise ValidationError(f"ell must be an integer >= 2, got {ell!r}")
    k = int(ell) - 1
    boxes = [_check_box(b) for b in boxes]
    if len(boxes) != k:
        raise ValidationError(f"need {k} boxes for ell={ell}, got {len(boxes)}")
    D = [int(d) for d in D]
    if len(D) != k - 1:
        raise ValidationError(f"need {k - 1} right-hand sides for ell={ell}, got {len(D)}")
    return k, boxes, D


def enumerate_chain(ell: int, boxes, D):
    """All chains ((A_1, B_1), ..., (A_k), B_k)), k = ell - 1, with each pair
    coprime and in its box and A_i B_{i+1} - A_{i+1} B_i = D_i.

    Built by walking solve_line from each admissible first pair. Returned as
    a sorted list of (A, B) tuples, A = (A_1..A_k), B = (B_1..B_k).
    """
    k, boxes, D = _chain_args(ell, boxes, D)
    chains = [[p] for p in _coprime_in_box(boxes[0])]
    for i in range(1, k):
        nxt = []
        for chain in chains:
            a, b = chain[-1]
            eq = DetEquation(a, b, D[i - 1])
            for p in line_solutions_in_box(eq, boxes[i], coprime=True):
                nxt.append(chain + [p])
        chains = nxt
    return sorted((tuple(p[0] for p in c), tuple(p[1] for p in c)) for c in chains)


def brute_force_chain(ell: int, boxes, D):
    """Same set as enumerate_chain, from a full scan of the product of boxes."""
    k, boxes, D = _chain_args(ell, boxes, D)
    out = []
    for chain in product(*(_coprime_in_box(b) for b in boxes)):
        if all(
            chain[i][0] * chain[i + 1][1] - chain[i + 1][0] * chain[i][1] == D[i] for i in range(k - 1)
        ):
            out.append((tuple(p[0] for p in chain), tuple(p[1] for p in chain)))
    return sorted(out)


def shell_tail(ell: int, alpha: float, R: int, cfg=None) -> float:
    """Sum over feasible tuples with max coordinate in (R, 2R] of the
    integral of |integrand| over each domain.

    This dominates the shell's contribution to the lattice sum, so its
    decay under doubling of R is a direct measure of absolute convergence.
    """
    from .limit import QuadratureConfig, shell_sum

    if int(ell) != ell or ell < 2:
        raise ValidationError(f"ell must be an integer >= 2, got {ell!r}")
    if int(R) != R or R < 8:
        raise ValidationError(f"R must be an integer >= 8, got {R!r}")
    if not alpha > 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")
    cfg = cfg or QuadratureConfig()
    res = shell_sum(int(ell), alpha, int(R), 2 * int(R), cfg, absolute=True)
    return max(res.value, 0.0)
