from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sieve_spectra.errors import ValidationError
from sieve_spectra.lattice import (
    LatticePair,
    brute_force_feasible,
    clip_batch,
    count_feasible,
    domain_polygon,
    enumerate_pairs,
    feasible_batches,
    polygon_areas,
    primitive_points,
)


def test_pair_validation():
    with pytest.raises(ValidationError):
        LatticePair((0,), (0,))
    with pytest.raises(ValidationError):
        LatticePair((2,), (4,))
    with pytest.raises(ValidationError):
        LatticePair((2,), (0,))  # gcd(2, 0) = 2
    with pytest.raises(ValidationError):
        LatticePair((1, 1), (0,))
    p = LatticePair((1, -1), (0, 1))
    assert p.ell == 3 and p.max_coord == 1


def test_domain_examples():
    full = domain_polygon(LatticePair((1,), (0,)))
    assert full.exact_area == Fraction(1, 2)
    # (2, 0) is not primitive, but its strip is still a valid geometric object
    half = domain_polygon(((2,), (0,)))
    assert half.exact_area == Fraction(1, 8)
    assert domain_polygon(LatticePair((-1,), (0,))).is_empty


@st.composite
def primitive_tuples(draw, max_len=3, R=6):
    k = draw(st.integers(1, max_len))
    A, B = [], []
    for _ in range(k):
        a = draw(st.integers(-R, R))
        b = draw(st.integers(-R, R).filter(lambda b, a=a: np.gcd(a, b) == 1))
        A.append(a)
        B.append(b)
    return LatticePair(tuple(A), tuple(B))


@given(primitive_tuples())
def test_domain_is_convex_and_inside_triangle(p):
    dom = domain_polygon(p)
    if dom.is_empty:
        return
    V = dom.vertices
    x, y = V[:, 0], V[:, 1]
    assert np.all(x >= -1e-12) and np.all(y <= 1 + 1e-12) and np.all(x <= y + 1e-12)
    t = np.outer(y, p.A) - np.outer(x, p.B)
    assert np.all(t >= -1e-12) and np.all(t <= 1 + 1e-12)
    # counter-clockwise and convex: every turn is a left turn
    e = np.roll(V, -1, axis=0) - V
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    assert np.all(cross >= -1e-12)
    assert 0 < dom.area <= 0.5


@given(primitive_tuples())
def test_batched_clip_matches_exact(p):
    dom = domain_polygon(p)
    V = np.array([[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]])
    cnt = np.array([3])
    for a, b in zip(p.A, p.B):
        V, cnt = clip_batch(V, cnt, np.array([float(b)]), np.array([float(-a)]), np.array([0.0]))
        V, cnt = clip_batch(V, cnt, np.array([float(-b)]), np.array([float(a)]), np.array([1.0]))
    area = polygon_areas(V, cnt)[0]
    assert area == pytest.approx(dom.area, abs=1e-12)


def test_primitive_points():
    P = primitive_points(3)
    assert all(np.gcd(a, b) == 1 for a, b in P)
    assert (0, 0) not in map(tuple, P)
    m = np.maximum(np.abs(P[:, 0]), np.abs(P[:, 1]))
    assert np.all(np.diff(m) >= 0)
    # 8 primitive points on the unit square boundary, 8 more at radius 2
    assert np.count_nonzero(m == 1) == 8 and np.count_nonzero(m == 2) == 8


def test_enumerate_examples_l2_r1():
    pairs = list(enumerate_pairs(2, 1))
    keys = {(p.A, p.B) for p in pairs}
    assert ((1,), (0,)) in keys and ((1,), (1,)) in keys
    assert ((-1,), (0,)) not in keys


@pytest.mark.parametrize("ell,R", [(2, 2), (2, 5), (3, 2), (3, 3), (4, 2)])
def test_enumeration_matches_brute_force(ell, R):
    fast = [(p.A, p.B) for p in enumerate_pairs(ell, R)]
    slow = [(p.A, p.B) for p in brute_force_feasible(ell, R)]
    assert fast == slow
    assert count_feasible(ell, R) == len(slow)


def test_enumeration_sorted_and_shells_partition():
    keys = [p.sort_key() for p in enumerate_pairs(3, 6)]
    assert keys == sorted(keys)
    total = count_feasible(3, 8)
    assert total == count_feasible(3, 4) + count_feasible(3, 8, r_min=4)


def test_chunking_does_not_change_result():
    a = sorted((tuple(A), tuple(B)) for b in feasible_batches(3, 5, chunk=50) for A, B in zip(b.A, b.B))
    b = sorted((tuple(A), tuple(B)) for b in feasible_batches(3, 5) for A, B in zip(b.A, b.B))
    assert a == b


def test_known_counts():
    # regression value; the enumerator itself is checked against brute force above
    assert count_feasible(3, 8) == 11419


def test_bad_arguments():
    with pytest.raises(ValidationError):
        list(feasible_batches(1, 4))
    with pytest.raises(ValidationError):
        primitive_points(0)
