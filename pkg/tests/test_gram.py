import cmath
import math
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sieve_spectra.config import limits_with
from sieve_spectra.errors import ResourceGuardError, ValidationError
from sieve_spectra.gram import (
    build_dual_gram,
    build_gram,
    dirichlet_kernel,
    gram_dense_oracle,
    load_gram_binary,
    save_gram_binary,
    save_gram_csv,
)
from sieve_spectra.ntheory import farey_count, farey_set


def test_q1_is_all_ones():
    g = build_gram(1, 4)
    assert g.first_row.tolist() == [1, 1, 1, 1]
    assert np.array_equal(g.dense(), np.ones((4, 4)))


def test_q2_first_row():
    assert build_gram(2, 3).first_row.tolist() == [2, 0, 2]


def test_diagonal_is_farey_size():
    g = build_gram(5, 17)
    assert np.all(np.diag(g.dense()) == 10)
    assert g.farey_size == 10


def test_oracle_small_cases():
    assert np.allclose(gram_dense_oracle(1, 2), [[1, 1], [1, 1]])
    G = gram_dense_oracle(3, 4)
    assert np.abs(G - G.T).max() < 1e-12
    assert np.abs(gram_dense_oracle(2, 3) - build_gram(2, 3).dense()).max() <= 1e-9


def test_gram_matches_oracle_everywhere():
    worst = 0.0
    for Q in range(1, 13):
        for N in range(1, 41):
            worst = max(worst, np.abs(build_gram(Q, N).dense() - gram_dense_oracle(Q, N)).max())
    assert worst <= 1e-9


def test_oracle_guard():
    with pytest.raises(ValidationError):
        gram_dense_oracle(13, 4)
    with pytest.raises(ValidationError):
        gram_dense_oracle(3, 65)


@given(st.integers(1, 60), st.integers(1, 200))
def test_toeplitz_symmetry_and_exact_trace(Q, N):
    g = build_gram(Q, N)
    D = g.dense()
    assert np.array_equal(D, D.T)
    assert np.array_equal(D[:-1, :-1], D[1:, 1:])
    assert g.trace() == farey_count(Q) * N
    assert g.entry(0, N - 1) == g.entry(N - 1, 0) == g.first_row[N - 1]


@given(st.integers(1, 40), st.integers(1, 150))
def test_gram_is_psd_up_to_rounding(Q, N):
    lam = np.linalg.eigvalsh(build_gram(Q, N).dense())
    assert lam.min() >= -1e-8 * (N + Q * Q)


def test_guards_and_validation():
    with pytest.raises(ResourceGuardError):
        build_gram(10, 50, limits_with(max_n=49))
    with pytest.raises(ValidationError):
        build_gram(0, 10)
    with pytest.raises(ValidationError):
        build_gram(3, 0)
    with pytest.raises(ResourceGuardError):
        build_dual_gram(30, 10, limits_with(max_farey=100))


def test_dirichlet_kernel_against_direct_sum():
    rng = np.random.default_rng(0)
    for _ in range(200):
        den = int(rng.integers(1, 500))
        num = int(rng.integers(-10**6, 10**6))
        N = int(rng.integers(1, 300))
        direct = sum(cmath.exp(2j * math.pi * n * num / den) for n in range(1, N + 1))
        got = dirichlet_kernel(N, np.array([num]), np.array([den]))[0]
        assert abs(got - direct) < 1e-9 * N


def test_dual_small_cases():
    d = build_dual_gram(1, 7)
    assert d.dense().shape == (1, 1) and d.dense()[0, 0] == 7
    d = build_dual_gram(3, 5)
    F = farey_set(3)
    i = [k for k, f in enumerate(F) if (f.a, f.q) == (1, 3)][0]
    j = [k for k, f in enumerate(F) if (f.a, f.q) == (2, 3)][0]
    direct = sum(cmath.exp(2j * math.pi * n * (2 / 3 - 1 / 3)) for n in range(1, 6))
    assert abs(d.dense()[i, j] - direct) < 1e-12


@given(st.integers(1, 25), st.integers(1, 120))
def test_dual_hermitian_with_constant_diagonal(Q, N):
    M = build_dual_gram(Q, N).dense()
    assert np.abs(M - M.conj().T).max() == 0.0
    assert np.all(np.diag(M) == N)


def test_dual_matches_direct_sums():
    Q, N = 9, 23
    theta = farey_set(Q).values
    n = np.arange(1, N + 1)
    # entry (theta, theta') = sum_n e(n (theta' - theta))
    direct = np.exp(2j * np.pi * (theta[None, :, None] - theta[:, None, None]) * n).sum(axis=2)
    assert np.abs(build_dual_gram(Q, N).dense() - direct).max() < 1e-9


def test_binary_roundtrip_and_layout(tmp_path):
    g = build_gram(17, 33)
    p = save_gram_binary(g, tmp_path / "g.bin")
    raw = p.read_bytes()
    assert raw[:8] == b"LSGRAM01"
    assert struct.unpack_from("<II", raw, 8) == (17, 33)
    assert len(raw) == 16 + 8 * 33
    assert np.array_equal(np.frombuffer(raw[16:], dtype="<i8"), g.first_row)
    h = load_gram_binary(p)
    assert (h.Q, h.N) == (17, 33) and np.array_equal(h.first_row, g.first_row)


def test_binary_rejects_corruption(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTMAGIC" + struct.pack("<II", 1, 1) + b"\0" * 8)
    with pytest.raises(ValidationError):
        load_gram_binary(p)
    p.write_bytes(b"LSGRAM01" + struct.pack("<II", 1, 2) + b"\0" * 8)
    with pytest.raises(ValidationError):
        load_gram_binary(p)


def test_csv_export(tmp_path):
    g = build_gram(4, 6)
    lines = save_gram_csv(g, tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "k,c"
    assert [int(x.split(",")[1]) for x in lines[1:]] == g.first_row.tolist()
