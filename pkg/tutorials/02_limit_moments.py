"""The limiting moments M_ell(alpha) and convergence of the finite moments.

Run with ``python tutorials/02_limit_moments.py``. Takes about ten seconds.
"""

import math

from sieve_spectra import build_gram, eigenvalues, farey_count
from sieve_spectra.limit import QuadratureConfig, integrate_pair, limit_moment, m2_via_g2
from sieve_spectra.lattice import LatticePair, domain_polygon
from sieve_spectra.spectra import moment_spectral

alpha0 = 3 / math.pi**2

# %% Each lattice tuple (A, B) contributes a sinc-product integral over a convex polygon
p = LatticePair((1,), (1,))
print(domain_polygon(p).vertices)
print("integral:", integrate_pair(p, alpha0).value)

# %% Summing shells of growing radius R gives M_2; the pair-correlation route is a cross-check
rep = limit_moment(2, alpha0)
print(f"lattice sum: {rep.value:.6f} (R = {rep.details['R_final']}, gap = {rep.details['cauchy_gap']:.1e})")
print(f"via g2:      {m2_via_g2(alpha0).value:.6f}")

# %% Finite moments with N = |F_Q| approach M_2(N / Q^2)
for Q in (20, 40, 80):
    N = farey_count(Q)
    finite = moment_spectral(eigenvalues(build_gram(Q, N)), 2).value
    limit = m2_via_g2(N / Q**2).value
    print(f"Q={Q:3d}  finite {finite:.5f}  limit {limit:.5f}  error {abs(finite - limit):.2e}")

# %% Third moment at a cheap truncation
print("M_3(3/pi^2) ~", limit_moment(3, alpha0, QuadratureConfig(R_start=8, R_max=8)).value)
