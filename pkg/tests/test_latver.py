import random

import pytest
from hypothesis import given, strategies as st

from sieve_spectra.errors import ResourceGuardError, ValidationError
from sieve_spectra.latver import (
    DetEquation,
    brute_force_chain,
    brute_force_line,
    dyadic_box,
    enumerate_chain,
    extended_gcd,
    line_solutions_in_box,
    shell_tail,
    solve_line,
)
from sieve_spectra.lattice import gcd0


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_extended_gcd(a, b):
    g, u, v = extended_gcd(a, b)
    assert g == gcd0(a, b) and a * u + b * v == g


def test_solve_line_examples():
    sol = solve_line(DetEquation(1, 0, 1))
    assert sol.base == (0, 1) and sol.direction == (1, 0)
    assert [sol.point(k) for k in (-2, 5)] == [(-2, 1), (5, 1)]
    sol = solve_line(DetEquation(1, 1, 0))
    assert all(sol.point(k)[0] == sol.point(k)[1] for k in range(-5, 6))
    with pytest.raises(ValidationError):
        DetEquation(2, 0, 1)
    with pytest.raises(ValidationError):
        DetEquation(0, 0, 1)


@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(-20, 20), st.integers(-5, 5))
def test_line_points_solve_equation(a, b, D, k):
    if gcd0(a, b) != 1:
        return
    eq = DetEquation(a, b, D)
    assert eq.holds(*solve_line(eq).point(k))


def test_random_instances_match_brute_force():
    rng = random.Random(0)
    box = ((-50, 50), (-50, 50))
    done = 0
    while done < 100:
        a, b = rng.randint(-20, 20), rng.randint(-20, 20)
        if gcd0(a, b) != 1:
            continue
        eq = DetEquation(a, b, rng.randint(-10, 10))
        assert line_solutions_in_box(eq, box) == brute_force_line(eq, box)
        done += 1


def test_line_in_box_coprime_filter():
    eq = DetEquation(3, 1, 2)
    box = ((-10, 10), (-10, 10))
    pts = line_solutions_in_box(eq, box, coprime=True)
    assert pts == [p for p in brute_force_line(eq, box) if gcd0(*p) == 1]


def test_chain_examples():
    boxes = [((1, 2), (1, 2))] * 2
    got = enumerate_chain(3, boxes, [1])
    assert got == brute_force_chain(3, boxes, [1])
    assert got  # (1,1) -> (1,2) solves 1*2 - 1*1 = 1
    zero = enumerate_chain(3, boxes, [0])
    coprime = [(1, 1), (1, 2), (2, 1)]
    assert zero == [((a, a), (b, b)) for a, b in coprime]
    assert enumerate_chain(3, [((1, 2), (1, 2)), ((40, 41), (0, 0))], [1]) == []


@pytest.mark.parametrize("ell", [2, 3, 4])
def test_dyadic_chains_match_brute_force(ell):
    rng = random.Random(ell)
    for _ in range(5):
        boxes = [dyadic_box(rng.randint(0, 2), rng.randint(0, 2)) for _ in range(ell - 1)]
        D = [rng.randint(-6, 6) for _ in range(ell - 2)]
        assert enumerate_chain(ell, boxes, D) == brute_force_chain(ell, boxes, D)


def test_dyadic_box():
    assert dyadic_box(0, 2) == ((0, 2), (3, 8))


def test_chain_guards():
    with pytest.raises(ResourceGuardError):
        enumerate_chain(2, [((0, 64), (0, 3))], [])
    with pytest.raises(ValidationError):
        enumerate_chain(3, [((0, 3), (0, 3))], [1])
    with pytest.raises(ValidationError):
        enumerate_chain(3, [((0, 3), (0, 3))] * 2, [])
    with pytest.raises(ValidationError):
        enumerate_chain(1, [], [])


def test_shell_tail_validation():
    with pytest.raises(ValidationError):
        shell_tail(2, 1.0, 4)
    with pytest.raises(ValidationError):
        shell_tail(2, 0.0, 8)


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_shell_tail_ell2_monotone(alpha, tail_cache):
    t = [tail_cache(2, alpha, R) for R in (8, 16, 32)]
    assert all(v >= 0 for v in t)
    assert t[0] > t[1] > t[2]


@pytest.mark.slow
def test_shell_tail_ell3_example(tail_cache):
    t8, t16 = tail_cache(3, 1.0, 8), tail_cache(3, 1.0, 16)
    assert 0 <= t16 < t8


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_shell_tail_ell3_monotone(alpha, tail_cache):
    # the (32, 64] shell holds ~37M tuples; shared with the acceptance suite
    t = [tail_cache(3, alpha, R) for R in (8, 16, 32)]
    assert t[0] > t[1] > t[2] >= 0
