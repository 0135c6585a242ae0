"""Spectra of the large-sieve Gram matrix over Farey fractions.

Finite-Q eigenvalues and moments of A*A / N, their limiting moments as
N ~ alpha Q^2 through a lattice sum of sinc-product integrals, the
closed form of the second moment, smoothed moments, and exact oracles for
the underlying counting problems.
"""

__version__ = "0.1.0"

from .config import DEFAULT_LIMITS, Limits, limits_with
from .errors import ConvergenceError, ResourceGuardError, SieveSpectraError, ValidationError
from .gram import (
    DualGramMatrix,
    GramMatrix,
    build_dual_gram,
    build_gram,
    dirichlet_kernel,
    gram_dense_oracle,
    load_gram_binary,
    save_gram_binary,
    save_gram_csv,
)
from .lattice import DomainPolygon, LatticePair, count_feasible, domain_polygon, enumerate_pairs
from .latver import DetEquation, enumerate_chain, shell_tail, solve_line
from .limit import (
    QuadratureConfig,
    g2,
    h_fn,
    integrand,
    integrate_pair,
    limit_moment,
    m2_via_g2,
    sinc,
)
from .ntheory import (
    FareyFraction,
    FareySet,
    divisors,
    farey_count,
    farey_exp_sum,
    farey_exp_sums,
    farey_set,
    mertens,
    mobius,
    sieve_tables,
    totient,
)
from .smooth import SmoothBump, f_delta, fhat_delta, phi_win, smoothed_moment, xi
from .spectra import (
    EmpiricalMeasure,
    MomentReport,
    Spectrum,
    eigenvalues,
    empirical_measure,
    histogram,
    moment_dual,
    moment_spectral,
    moment_trace,
)
