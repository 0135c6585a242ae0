"""Smoothed moments and the counting lemma behind the tail estimate.

Run with ``python tutorials/03_smoothing_and_tails.py``. Takes a few seconds.
"""

from sieve_spectra import build_gram, farey_count
from sieve_spectra.latver import DetEquation, dyadic_box, enumerate_chain, line_solutions_in_box, shell_tail
from sieve_spectra.smooth import f_delta, fhat_delta, smoothed_moment
from sieve_spectra.spectra import moment_trace

# %% A plateau weight and its Fourier transform
print([round(float(f_delta(x, 0.1)), 4) for x in (0.0, 0.05, 0.5, 1.05, 1.1)])
print("fhat(0) =", fhat_delta(0.0, 0.1), " fhat(2.3) =", fhat_delta(2.3, 0.1))

# %% Smoothing changes the second moment by O(delta)
Q = 40
N = farey_count(Q)
sharp = moment_trace(build_gram(Q, N), 2).value
for d in (0.2, 0.1, 0.05):
    sm = smoothed_moment(Q, N, 2, d).value
    print(f"delta={d:<5} smoothed {sm:.5f}  |difference|/delta = {abs(sharp - sm) / d:.4f}")

# %% Solutions of A1 B2 - A2 B1 = D lie on a line through an extended-gcd base point
eq = DetEquation(3, 5, 2)
print(line_solutions_in_box(eq, ((-10, 10), (-10, 10))))
print(len(enumerate_chain(3, [dyadic_box(1, 1), dyadic_box(1, 2)], [1])), "chains in a dyadic box pair")

# %% Shell tails of the lattice sum shrink as R doubles
print([f"{shell_tail(2, 1.0, R):.2e}" for R in (8, 16, 32)])
