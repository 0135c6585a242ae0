import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sieve_spectra.errors import ValidationError
from sieve_spectra.lattice import LatticePair, domain_polygon
from sieve_spectra.limit import (
    QuadratureConfig,
    g2,
    h_fn,
    integrand,
    integrate_pair,
    limit_moment,
    limit_summary_json,
    m2_tail_asymptotic,
    m2_via_g2,
    sinc,
    write_pair_ledger,
)

ALPHA0 = 3 / math.pi**2


def test_sinc_examples():
    assert sinc(0.0) == 1.0
    assert abs(sinc(math.pi)) < 1e-16
    x = 1e-6
    assert abs(sinc(x) - math.sin(x) / x) < 1e-15


@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_sinc_matches_numpy(x):
    assert sinc(x) == pytest.approx(np.sinc(x / math.pi), abs=1e-15)


def test_sinc_vectorized_shape():
    out = sinc(np.zeros((2, 3)))
    assert out.shape == (2, 3) and np.all(out == 1)


def test_h_examples():
    assert h_fn(3, 0, 0.2, 0.7) == 0
    assert h_fn(1, 1, 0, 1) == 1
    assert h_fn(2, 1, 0.5, 0.5) == pytest.approx(4)


@pytest.mark.parametrize("args", [(1, 1, 0.5, 0.0), (1, 1, 0.5, 0.5), (2, 4, 0.5, 1.0)])
def test_h_rejects_poles(args):
    with pytest.raises(ValidationError):
        h_fn(*args)


def test_integrand_examples():
    p = ((1, 2), (0, 0))
    xs = np.array([0.1, 0.2, 0.05])
    ys = np.array([0.3, 0.4, 0.45])
    assert np.all(integrand(p, 0.7, xs, ys) == 1.0)
    v = integrand(LatticePair((1,), (1,)), ALPHA0, 1e-300, 1.0)
    assert v == pytest.approx(np.sinc(3 / math.pi**2) ** 2, rel=1e-12)


def test_integrand_rejects_poles():
    with pytest.raises(ValidationError):
        integrand(LatticePair((1,), (1,)), 1.0, 0.5, 0.5)


def test_integrand_ell3_matches_formula():
    p = LatticePair((2, 3), (1, 2))
    x, y, a = 0.1, 0.4, 0.8
    h1, h2 = h_fn(2, 1, x, y), h_fn(3, 2, x, y)
    ref = sinc(math.pi * a * h1) * sinc(math.pi * a * h2) * sinc(math.pi * a * (h1 - h2))
    assert integrand(p, a, x, y) == pytest.approx(ref, rel=1e-12)


def test_integrand_bounded_at_random_interior_points():
    rng = np.random.default_rng(0)
    pairs = [LatticePair((1,), (1,)), LatticePair((3, 2), (1, 1)), LatticePair((1, 2, 1), (-1, 1, 0))]
    for p in pairs:
        dom = domain_polygon(p)
        V = dom.vertices
        # random convex combinations of the vertices are interior
        w = rng.dirichlet(np.ones(len(V)), size=10_000)
        P = w @ V
        vals = integrand(p, 0.6, P[:, 0], P[:, 1])
        assert np.all(np.abs(vals) <= 1.0 + 1e-15)


def test_integrate_pair_examples():
    for alpha in (0.1, 1.0, 7.0):
        assert integrate_pair(LatticePair((1,), (0,)), alpha).value == pytest.approx(0.5, abs=1e-12)
        assert integrate_pair(((2,), (0,)), alpha).value == pytest.approx(1 / 8, abs=1e-12)
    r = integrate_pair(LatticePair((-1,), (0,)), 1.0)
    assert r.value == 0.0 and r.area == 0.0 and r.converged


def test_integrate_pair_monte_carlo_oracle():
    rng = np.random.default_rng(0)
    n = 1_000_000
    x, y = rng.random(n), rng.random(n)
    inside = y > x
    vals = np.zeros(n)
    vals[inside] = integrand(LatticePair((1,), (1,)), ALPHA0, x[inside], y[inside])
    mc, se = vals.mean(), vals.std(ddof=1) / math.sqrt(n)
    q = integrate_pair(LatticePair((1,), (1,)), ALPHA0).value
    assert abs(mc - q) <= 3 * se


def test_depth_exhaustion_is_flagged():
    r = integrate_pair(LatticePair((5,), (7,)), 1.0, QuadratureConfig(atol=1e-14, max_depth=2))
    assert not r.converged
    assert r.value == pytest.approx(integrate_pair(LatticePair((5,), (7,)), 1.0).value, abs=1e-5)


def test_config_validation():
    with pytest.raises(ValidationError):
        QuadratureConfig(atol=0)
    with pytest.raises(ValidationError):
        QuadratureConfig(R_start=0)
    with pytest.raises(ValidationError):
        QuadratureConfig(R_start=32, R_max=16)


def test_first_moment_shortcut():
    assert limit_moment(1, ALPHA0).value == pytest.approx(1.0, rel=1e-15)
    assert limit_moment(1, 2.0).value == pytest.approx(3 / (2 * math.pi**2))


def test_limit_moment_validation():
    with pytest.raises(ValidationError):
        limit_moment(0, 1.0)
    with pytest.raises(ValidationError):
        limit_moment(2, -1.0)


@pytest.fixture(scope="module")
def m2_alpha1():
    return limit_moment(2, 1.0)


def test_m2_lattice_vs_g2(m2_alpha1):
    assert m2_alpha1.value == pytest.approx(m2_via_g2(1.0).value, rel=1e-2)
    d = m2_alpha1.details
    assert d["converged"] and d["R_final"] >= 16


def test_m2_continuity(m2_alpha1):
    cfg = QuadratureConfig()
    near = limit_moment(2, 1.001, cfg).value
    assert abs(near - m2_alpha1.value) < 1e-2
    half = limit_moment(2, 0.5, cfg).value
    assert math.isfinite(half) and abs(half - m2_alpha1.value) < 10


@pytest.mark.parametrize("alpha", [0.3, 0.7, 2.0, 5.0])
def test_m2_nonnegative(alpha):
    cfg = QuadratureConfig(R_start=8, R_max=32)
    assert limit_moment(2, alpha, cfg).value >= -1e-6


def test_summation_is_deterministic():
    cfg = QuadratureConfig(R_start=8, R_max=16)
    a = limit_moment(2, 0.9, cfg)
    b = limit_moment(2, 0.9, cfg)
    assert a.value == b.value
    assert limit_summary_json(a) == limit_summary_json(b)


def test_ledger_and_summary(tmp_path):
    rep = limit_moment(2, 1.0, QuadratureConfig(R_start=4, R_max=8), keep_ledger=True)
    path = write_pair_ledger(rep, tmp_path / "ledger.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "ell,alpha,A1,B1,area,integral"
    vals = [float(l.split(",")[-1]) for l in lines[1:]]
    assert len(vals) == rep.details["pairs"]
    assert 6 / math.pi**2 * math.fsum(vals) == pytest.approx(rep.details["raw_value"], rel=1e-9)
    summary = json.loads(limit_summary_json(rep))
    assert set(summary) >= {"ell", "alpha", "R_final", "value", "cauchy_gap"}
    with pytest.raises(ValidationError):
        write_pair_ledger(limit_moment(2, 1.0, QuadratureConfig(R_start=2, R_max=2)), tmp_path / "x.csv")


def test_g2_examples():
    assert g2(0.5) == 0.0
    assert g2(1.0) == 0.0
    assert g2(2.0) == pytest.approx(math.pi**2 / 6 * math.log(2), rel=1e-14)
    assert abs(g2(1000.0) - 1) < 0.01


def test_g2_matches_direct_sum():
    from sieve_spectra.ntheory import totient

    for u in (1.5, 3.0, 3.7, 10.0, 57.3):
        direct = 2 * math.pi**2 / (3 * u * u) * sum(totient(K) * math.log(u / K) for K in range(1, math.ceil(u)))
        assert g2(u) == pytest.approx(direct, rel=1e-12)


def test_m2_via_g2_properties():
    r = m2_via_g2(1.0)
    assert r.value > 3 / math.pi**2
    assert r.value > (3 / math.pi**2) ** 2
    assert abs(m2_via_g2(1.0, 2000.0).value - r.value) < 1e-4
    assert r.error >= r.tail_bound > 0


def test_m2_via_g2_against_frozen_oracle():
    # independent evaluation with scipy.integrate.quad on the same integrand, cutoff 1000
    assert m2_via_g2(1.0).value == pytest.approx(0.3138383, abs=2e-7)
    assert m2_via_g2(0.2).value == pytest.approx(3.0239074, abs=2e-6)
    assert m2_via_g2(ALPHA0).value == pytest.approx(1.4474374, abs=2e-6)


def test_m2_tail_bound_dominates_asymptotic_tail():
    for alpha in (0.2, 1.0, 3.0):
        r = m2_via_g2(alpha, 500.0)
        coef = (3 / math.pi**2) ** 2 * 2 / alpha
        assert r.tail_bound >= coef * m2_tail_asymptotic(alpha, 500.0)
