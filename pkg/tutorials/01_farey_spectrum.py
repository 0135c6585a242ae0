"""Eigenvalues of the Farey Gram matrix.

Run with ``python tutorials/01_farey_spectrum.py``. Takes a few seconds.
"""

import numpy as np

from sieve_spectra import build_gram, eigenvalues, empirical_measure, farey_count, farey_set
from sieve_spectra.spectra import histogram, moment_spectral, moment_trace, small_eigenvalue_fraction

# %% Farey fractions of order 5, and the count at order 500
F = farey_set(5)
print([str(f) for f in F])
print("|F_500| =", farey_count(500))

# %% The Gram matrix A*A is an integer Toeplitz matrix; only its first row is stored
Q = 40
N = farey_count(Q)
g = build_gram(Q, N)
print("first row:", g.first_row[:8], "...")
print("trace =", g.trace(), "= |F_Q| N =", N * N)

# %% Its spectrum sits below the large sieve constant N + Q^2 - 1
s = eigenvalues(g)
print(f"lambda_1 = {s.largest:.3f}  <=  N + Q^2 - 1 = {N + Q * Q - 1}")
print(f"lambda_N = {s.smallest:.3e}  (tiny but positive in exact arithmetic)")

# %% Scaled eigenvalues lambda/N form the empirical measure; moments agree two ways
mu = empirical_measure(s)
for ell in (1, 2, 3):
    print(ell, moment_spectral(s, ell).value, moment_trace(g, ell).value)

# %% Density histogram with the near-zero mass omitted, as in the usual picture
h = histogram(mu, bin_width=0.05, omit_below=0.01)
print("share of eigenvalues below 0.01:", small_eigenvalue_fraction(mu, 0.01))
peak = h[int(np.argmax([row[1] for row in h]))]
print(f"densest bin centre: {peak[0]:.3f}")
