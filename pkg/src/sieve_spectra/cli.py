"""Command-line front end.

Every subcommand writes its artifacts into ``--out`` together with a run
manifest ``<subcommand>_manifest.json``. JSON summaries round floats to 12
significant digits, so identical arguments give byte-identical summaries.

Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 resource guard, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import limits_with
from .errors import ConvergenceError, ResourceGuardError, SieveSpectraError, ValidationError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_NONCONVERGENCE = 4


def round12(x):
    """Round floats (recursively) to 12 significant digits for serialization."""
    if isinstance(x, (bool, np.bool_)) or x is None:
        return x if x is None else bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(format(x, ".12g"))
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, dict):
        return {str(k): round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round12(v) for v in x]
    return x


def dumps(obj) -> str:
    return json.dumps(round12(obj), sort_keys=True, indent=2) + "\n"


@dataclass
class RunManifest:
    """Record of one CLI run: inputs, outputs, timing, version."""

    subcommand: str
    parameters: dict
    wall_time: float = 0.0
    artifacts: list = field(default_factory=list)
    version: str = __version__
    exit_code: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# argument types


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _n_value(text):
    if text == "farey":
        return text
    return _positive_int(text)


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {v}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _resolve_n(Q, n):
    from .ntheory import farey_count

    return farey_count(Q) if n == "farey" else int(n)


# ---------------------------------------------------------------------------
# subcommands; each returns (summary dict, artifact paths, exit code)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([format(v, ".12g") if isinstance(v, float) else v for v in r])
    return path


def cmd_farey(args, out):
    from .ntheory import farey_set

    F = farey_set(args.Q)
    path = _write_rows(out / f"farey_Q{args.Q}.csv", ["a", "q"],
                       zip(F.numerators.tolist(), F.denominators.tolist()))
    return {"Q": args.Q, "size": F.size}, [path], EXIT_OK


def cmd_gram(args, out):
    from .gram import build_gram, save_gram_binary, save_gram_csv

    N = _resolve_n(args.Q, args.n)
    g = build_gram(args.Q, N, args.limits)
    stem = out / f"gram_Q{args.Q}_N{N}"
    if args.format == "bin":
        path = save_gram_binary(g, stem.with_suffix(".bin"))
    else:
        path = save_gram_csv(g, stem.with_suffix(".csv"))
    return {"Q": args.Q, "N": N, "farey_size": g.farey_size, "trace": g.trace()}, [path], EXIT_OK


def _spectrum(args):
    from .gram import build_dual_gram, build_gram
    from .spectra import eigenvalues

    N = _resolve_n(args.Q, args.n)
    if getattr(args, "dual", False):
        return eigenvalues(build_dual_gram(args.Q, N, args.limits), args.limits)
    return eigenvalues(build_gram(args.Q, N, args.limits), args.limits)


def cmd_spectrum(args, out):
    from .spectra import write_eigenvalues_csv

    s = _spectrum(args)
    tag = "dual_" if s.source == "dual" else ""
    path = write_eigenvalues_csv(s, out / f"eigenvalues_{tag}Q{s.Q}_N{s.N}.csv")
    summary = {"Q": s.Q, "N": s.N, "alpha": s.alpha, "source": s.source,
               "largest": s.largest, "smallest": s.smallest, "sum": float(np.sum(s.eigenvalues))}
    return summary, [path], EXIT_OK


def cmd_moments(args, out):
    from .gram import build_dual_gram, build_gram
    from .spectra import eigenvalues, moment_dual, moment_spectral, moment_trace

    N = _resolve_n(args.Q, args.n)
    g = build_gram(args.Q, N, args.limits)
    methods = ["spectral", "trace", "dual"] if args.method == "all" else [args.method]
    spec = eigenvalues(g, args.limits) if "spectral" in methods else None
    dual = build_dual_gram(args.Q, N, args.limits) if "dual" in methods else None
    rows = []
    for ell in range(1, args.ell + 1):
        for m in methods:
            if m == "spectral":
                r = moment_spectral(spec, ell)
            elif m == "trace":
                r = moment_trace(g, ell, args.limits)
            else:
                r = moment_dual(dual, ell, args.limits)
            rows.append((ell, m, r.value))
    path = _write_rows(out / f"moments_Q{args.Q}_N{N}.csv", ["ell", "method", "value"], rows)
    summary = {"Q": args.Q, "N": N, "alpha": N / args.Q**2,
               "moments": [{"ell": e, "method": m, "value": v} for e, m, v in rows]}
    return summary, [path], EXIT_OK


def cmd_histogram(args, out):
    from .spectra import empirical_measure, histogram, small_eigenvalue_fraction, write_histogram_csv

    s = _spectrum(args)
    mu = empirical_measure(s)
    h = histogram(mu, args.bin_width, args.omit_below)
    path = write_histogram_csv(h, out / f"histogram_Q{s.Q}_N{s.N}.csv")
    summary = {"Q": s.Q, "N": s.N, "bin_width": args.bin_width, "omit_below": args.omit_below,
               "bins": len(h), "small_fraction": small_eigenvalue_fraction(mu, 0.01)}
    return summary, [path], EXIT_OK


def _quad_config(args):
    from .limit import QuadratureConfig

    return QuadratureConfig(atol=args.atol, max_depth=args.max_depth, R_start=args.R_start,
                            R_max=args.R_max, cauchy_tol=args.cauchy_tol)


def cmd_limit_moment(args, out):
    from .limit import limit_moment, limit_summary_json, write_pair_ledger

    rep = limit_moment(args.ell, args.alpha, _quad_config(args), extrapolate=args.extrapolate,
                       keep_ledger=args.ledger)
    arts = []
    if args.ledger and args.ell >= 2:
        arts.append(write_pair_ledger(rep, out / f"limit_ledger_l{args.ell}.csv"))
    summary = json.loads(limit_summary_json(rep))
    summary["error"] = rep.error
    summary["stop_reason"] = rep.details.get("stop_reason")
    code = EXIT_OK if rep.details.get("converged", True) else EXIT_NONCONVERGENCE
    return summary, arts, code


def cmd_m2(args, out):
    from .limit import m2_via_g2

    r = m2_via_g2(args.alpha, args.cutoff)
    return {"alpha": r.alpha, "value": r.value, "error": r.error, "cutoff": r.cutoff,
            "tail_bound": r.tail_bound}, [], EXIT_OK


def cmd_smooth_check(args, out):
    from .gram import build_gram
    from .smooth import smoothed_moment
    from .spectra import eigenvalues, moment_spectral

    N = _resolve_n(args.Q, args.n)
    sharp = moment_spectral(eigenvalues(build_gram(args.Q, N, args.limits), args.limits), args.ell).value
    rows = []
    for d in args.delta:
        if not 0 < d < 0.5:
            raise ValidationError(f"--delta values must lie in (0, 1/2), got {d}")
        sm = smoothed_moment(args.Q, N, args.ell, d, args.limits).value
        rows.append((d, sharp, sm, abs(sharp - sm) / d))
    path = _write_rows(out / f"smooth_Q{args.Q}_N{N}_l{args.ell}.csv",
                       ["delta", "moment", "smoothed_moment", "ratio"], rows)
    ratios = [r[3] for r in rows]
    summary = {"Q": args.Q, "N": N, "ell": args.ell, "moment": sharp,
               "rows": [{"delta": r[0], "smoothed": r[2], "ratio": r[3]} for r in rows],
               "ratio_band": max(ratios) / min(ratios) if min(ratios) > 0 else None}
    return summary, [path], EXIT_OK


def cmd_converge(args, out):
    from .gram import build_gram
    from .limit import limit_moment, m2_via_g2
    from .spectra import eigenvalues, moment_spectral

    rows = []
    converged = True
    for Q in args.Q:
        N = _resolve_n(Q, args.n)
        alpha = N / Q**2
        finite = moment_spectral(eigenvalues(build_gram(Q, N, args.limits), args.limits), args.ell).value
        if args.ell == 2 and args.via == "g2":
            limit = m2_via_g2(alpha).value
        else:
            rep = limit_moment(args.ell, alpha, _quad_config(args), extrapolate=args.extrapolate)
            converged &= bool(rep.details.get("converged", True))
            limit = rep.value
        rows.append((Q, N, alpha, finite, limit, abs(finite - limit)))
    path = _write_rows(out / f"converge_l{args.ell}.csv",
                       ["Q", "N", "alpha", "moment", "limit_moment", "abs_error"], rows)
    summary = {"ell": args.ell, "rows": [dict(zip(["Q", "N", "alpha", "moment", "limit_moment", "abs_error"], r))
                                         for r in rows]}
    return summary, [path], EXIT_OK if converged else EXIT_NONCONVERGENCE


def cmd_verify(args, out):
    """Fast self-checks against independent oracles; seeded by --seed."""
    import random

    from .gram import build_gram, gram_dense_oracle
    from .lattice import LatticePair, brute_force_feasible, count_feasible
    from .latver import DetEquation, brute_force_line, line_solutions_in_box
    from .ntheory import farey_count
    from .limit import QuadratureConfig, _integrand_arrays, integrate_pair

    rng = random.Random(args.seed)
    checks = {}
    checks["farey_count_500"] = farey_count(500) == 76116
    worst = 0.0
    for Q in range(1, 9):
        for N in (1, 7, 20):
            worst = max(worst, float(np.max(np.abs(build_gram(Q, N).dense() - gram_dense_oracle(Q, N)))))
    checks["gram_oracle"] = bool(worst <= 1e-9)
    checks["pair_count_l2_R2"] = count_feasible(2, 2) == len(brute_force_feasible(2, 2))
    ok = True
    for _ in range(args.instances):
        while True:
            a, b = rng.randint(-20, 20), rng.randint(-20, 20)
            if math.gcd(a, b) == 1:
                break
        eq = DetEquation(a, b, rng.randint(-10, 10))
        box = ((-50, 50), (-50, 50))
        ok &= line_solutions_in_box(eq, box) == brute_force_line(eq, box)
    checks["counting_lemma"] = bool(ok)
    # Monte Carlo estimate for the pair (1, 1) at alpha = 3/pi^2
    alpha = 3 / math.pi**2
    gen = np.random.default_rng(args.seed)
    n = args.mc_points
    x, y = gen.random(n), gen.random(n)
    inside = y > x
    vals = np.zeros(n)
    vals[inside] = _integrand_arrays(np.array([[1]]), np.array([[1]]), alpha,
                                     x[inside][None, :], y[inside][None, :])[0]
    mc, se = vals.mean(), vals.std(ddof=1) / math.sqrt(n)
    quad = integrate_pair(LatticePair((1,), (1,)), alpha, QuadratureConfig()).value
    checks["monte_carlo_pair"] = bool(abs(mc - quad) <= 3 * se)
    summary = {"seed": args.seed, "checks": checks, "monte_carlo": {"estimate": mc, "stderr": se, "quadrature": quad}}
    return summary, [], EXIT_OK if all(checks.values()) else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--out", default=".", help="directory for artifacts and the manifest")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    p.add_argument("--threads", type=_positive_int, default=None, help="BLAS/LAPACK thread count")
    p.add_argument("--max-n", type=_positive_int, default=None, help="override the N resource cap")
    p.add_argument("--max-farey", type=_positive_int, default=None, help="override the |F_Q| resource cap")


def _add_qn(p):
    p.add_argument("--Q", type=_positive_int, required=True, help="Farey order")
    p.add_argument("--n", type=_n_value, default="farey",
                   help="number of frequencies N, or 'farey' for N = |F_Q|")


def _add_quad(p):
    p.add_argument("--atol", type=_positive_float, default=1e-6)
    p.add_argument("--max-depth", type=_positive_int, default=10)
    p.add_argument("--R-start", dest="R_start", type=_positive_int, default=16)
    p.add_argument("--R-max", dest="R_max", type=_positive_int, default=128)
    p.add_argument("--cauchy-tol", type=_positive_float, default=1e-3)
    p.add_argument("--extrapolate", action="store_true", help="add the geometric tail estimate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sieve-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("farey", help="list the Farey fractions of order Q")
    p.add_argument("--Q", type=_positive_int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_farey)

    p = sub.add_parser("gram", help="first row of A*A as CSV or binary")
    _add_qn(p)
    p.add_argument("--format", choices=["csv", "bin"], default="csv")
    _add_common(p)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("spectrum", help="eigenvalues of A*A (or AA* with --dual)")
    _add_qn(p)
    p.add_argument("--dual", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("moments", help="moments for ell = 1..--ell")
    _add_qn(p)
    p.add_argument("--ell", type=_positive_int, default=4)
    p.add_argument("--method", choices=["spectral", "trace", "dual", "all"], default="all")
    _add_common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("histogram", help="density histogram of the scaled eigenvalues")
    _add_qn(p)
    p.add_argument("--bin-width", type=_positive_float, default=0.01)
    p.add_argument("--omit-below", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("limit-moment", help="M_ell(alpha) by the lattice sum")
    p.add_argument("--ell", type=_positive_int, required=True)
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--ledger", action="store_true", help="write the per-tuple CSV ledger")
    _add_quad(p)
    _add_common(p)
    p.set_defaults(func=cmd_limit_moment)

    p = sub.add_parser("m2", help="M_2(alpha) through the pair-correlation density")
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--cutoff", type=_positive_float, default=1000.0)
    _add_common(p)
    p.set_defaults(func=cmd_m2)

    p = sub.add_parser("smooth-check", help="compare sharp and smoothed moments")
    _add_qn(p)
    p.add_argument("--ell", type=_positive_int, default=2)
    p.add_argument("--delta", type=_float_list, default=[0.2, 0.1, 0.05],
                   help="comma-separated values in (0, 1/2)")
    _add_common(p)
    p.set_defaults(func=cmd_smooth_check)

    p = sub.add_parser("converge", help="finite-Q moments against the limit")
    p.add_argument("--Q", type=_int_list, required=True, help="comma-separated Farey orders")
    p.add_argument("--n", type=_n_value, default="farey")
    p.add_argument("--ell", type=_positive_int, default=2)
    p.add_argument("--via", choices=["lattice", "g2"], default="g2",
                   help="route for ell = 2 (higher ell always use the lattice sum)")
    _add_quad(p)
    _add_common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="fast self-checks against independent oracles")
    p.add_argument("--instances", type=_positive_int, default=100)
    p.add_argument("--mc-points", type=_positive_int, default=1_000_000)
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _limits(args):
    over = {}
    if args.max_n:
        over["max_n"] = args.max_n
    if args.max_farey:
        over["max_farey"] = args.max_farey
    return limits_with(**over)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reports bad flags with status 2, --help/--version with 0
        return int(exc.code or 0)
    args.limits = _limits(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "limits", "out")}
    manifest = RunManifest(args.subcommand, round12(params))
    manifest_path = out / f"{args.subcommand}_manifest.json"
    t0 = time.perf_counter()
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(args.threads):
                summary, arts, code = args.func(args, out)
        else:
            summary, arts, code = args.func(args, out)
    except SieveSpectraError as exc:
        if isinstance(exc, ResourceGuardError):
            code, label = EXIT_RESOURCE, "resource guard"
        elif isinstance(exc, ConvergenceError):
            code, label = EXIT_NONCONVERGENCE, "no convergence"
        else:
            code, label = EXIT_VALIDATION, "error"
        print(f"{label}: {exc}", file=sys.stderr)
        manifest.wall_time = time.perf_counter() - t0
        manifest.exit_code = code
        manifest_path.write_text(manifest.to_json(), encoding="utf-8")
        return code
    summary_path = out / f"{args.subcommand}_summary.json"
    summary_path.write_text(dumps(summary), encoding="utf-8")
    manifest.wall_time = time.perf_counter() - t0
    manifest.artifacts = [str(p) for p in arts] + [str(summary_path)]
    manifest.exit_code = code
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    sys.stdout.write(dumps(summary))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
