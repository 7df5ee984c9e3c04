"""Command-line front end: reproducible studies with CSV/JSON artifacts.

Subcommands
-----------
limits        series CDF/survival table with the sandwich bounds, plus a
              survival-inverse quantile table (no randomness)
lasttime-sim  scaled tail statistics of a concrete estimator's error
              trajectory (mean, median, ecdf-sup, nelson-aalen)
figure-r      quantile curve of the limit band ratio R(1, b) over a b-grid
confset       read a censored-data CSV, emit the hazard curve and the
              sized sample-size band as JSON
saa           sizing and sequential coverage on an enumerable scenario toy
verify        run the end-to-end verification suite (--quick for smoke)

Every invocation takes one master seed; all module streams derive from
it, so a single number reproduces a study.  Artifacts embed the seed,
grid resolution, replication count, and module versions (run.json), and
contain no timestamps: the same configuration writes byte-identical
files.  CSV artifacts use RFC-4180 framing (CRLF, '.' decimals).

Exit codes: 0 success; 1 verification failures; 2 usage errors (unknown
subcommand, bad flags); 3 unreadable or invalid input; 4 budget
exceeded (grid or replication limits).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .acceptance import run_all
from .estimators import estimator_model
from .gp_sim import GridSizeError
from .last_time import (
    default_limit_s_grid,
    band_ratio_curve,
    scaled_bm_limit_sampler,
    tail_stats,
)
from .limit_laws import (
    ks_abs_sup_cdf,
    ks_abs_sup_survival,
    ks_abs_sup_survival_inverse,
    quantile_with_se,
    reflection_sandwich,
)
from .rng import SeedSpec
from .saa import (
    exact_sigma2,
    exact_solution,
    sample_size_n,
    shapiro_size,
    toy_problem,
    verify_sequential_coverage,
)
from .survival import (
    CensoredSample,
    CsvFormatError,
    EmptyRiskSetError,
    band_size,
    nelson_aalen,
    read_censored_csv,
    sigma2_hat,
)

DEFAULT_SEED = 20260816

# documented replication/grid budgets (exit code 4 beyond them)
MAX_REPS = 200_000
MAX_TOTAL_DRAWS = 1 << 31
MIN_GRID_EXP, MAX_GRID_EXP = 4, 16


class BudgetError(ValueError):
    """A requested replication count or grid exceeds the documented budget."""


def _check_budget(replications: int, per_replicate: int) -> None:
    if replications > MAX_REPS:
        raise BudgetError(
            f"{replications} replications exceed the budget of {MAX_REPS}"
        )
    if replications * per_replicate > MAX_TOTAL_DRAWS:
        raise BudgetError(
            f"{replications} x {per_replicate} draws exceed the "
            f"budget of {MAX_TOTAL_DRAWS}"
        )


# ---------------------------------------------------------------------------
# artifact plumbing


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True))
        fh.write("\n")


def _write_run_meta(
    out: Path,
    subcommand: str,
    seed: Optional[int],
    grid: Optional[int],
    replications: Optional[int],
    parameters: dict,
) -> None:
    _write_json(
        out / "run.json",
        {
            "subcommand": subcommand,
            "seed": seed,
            "grid": grid,
            "replications": replications,
            "parameters": parameters,
            "versions": {
                "lastexit": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        },
    )


def _stat_rows_to_csv(rows):
    for r in rows:
        yield (
            r.statistic,
            r.band_a,
            r.band_b,
            r.q05,
            r.q50,
            r.q95,
            r.mc_se,
            r.replications,
            r.censored_fraction,
        )


_STAT_HEADER = (
    "statistic",
    "band_a",
    "band_b",
    "q05",
    "q50",
    "q95",
    "mc_se",
    "replications",
    "censored_fraction",
)


# ---------------------------------------------------------------------------
# subcommands


def cmd_limits(args) -> int:
    out = Path(args.out)
    lams = [round(0.05 * i, 2) for i in range(1, 81)]
    rows = []
    for lam in lams:
        sand = reflection_sandwich(lam)
        rows.append(
            (lam, ks_abs_sup_cdf(lam), ks_abs_sup_survival(lam), sand.lower, sand.upper)
        )
    _write_csv(
        out / "limits.csv",
        ("lam", "cdf", "survival", "sandwich_lower", "sandwich_upper"),
        rows,
    )
    levels = (0.5, 0.25, 0.2, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001)
    _write_csv(
        out / "quantiles.csv",
        ("level", "survival_inverse"),
        [(p, ks_abs_sup_survival_inverse(p)) for p in levels],
    )
    _write_run_meta(out, "limits", None, None, None, {})
    return 0


def cmd_lasttime_sim(args) -> int:
    out = Path(args.out)
    model = estimator_model(args.estimator)
    eps = args.eps
    horizon = int(math.ceil(args.horizon_mult / (eps * eps)))
    _check_budget(args.reps, horizon)
    seed = SeedSpec(args.seed, 0)

    n_vals = np.empty(args.reps)
    q_vals = np.empty(args.reps)
    m_vals = np.empty(args.reps)
    r_vals = np.empty(args.reps)
    censored = 0
    for r in range(args.reps):
        traj = model.trajectory(seed, horizon, replicate_index=r)
        stats = tail_stats(traj, eps, band=(1.0, 1.53))
        n_vals[r] = eps * eps * stats.n_eps
        q_vals[r] = eps * eps * stats.q_eps
        m_vals[r] = np.nan if stats.m_eps is None else stats.m_eps / eps
        r_vals[r] = np.nan if stats.r_eps is None else stats.r_eps
        censored += stats.censored
    cens_frac = censored / args.reps

    rows = []
    for name, band, samples in (
        ("last_exit_scaled", (None, None), n_vals),
        ("exceed_count_scaled", (None, None), q_vals),
        ("mean_exceed_scaled", (None, None), m_vals),
        ("band_ratio", (1.0, 1.53), r_vals),
    ):
        vals = samples[np.isfinite(samples)]
        if vals.size < 2:
            q05 = q50 = q95 = se = float("nan")
        else:
            q05, _ = quantile_with_se(vals, 0.05)
            q50, se = quantile_with_se(vals, 0.50)
            q95, _ = quantile_with_se(vals, 0.95)
        rows.append(
            (name, band[0], band[1], q05, q50, q95, se, args.reps, cens_frac)
        )
    _write_csv(out / "lasttime.csv", _STAT_HEADER, rows)
    _write_run_meta(
        out,
        "lasttime-sim",
        args.seed,
        horizon,
        args.reps,
        {
            "estimator": args.estimator,
            "eps": eps,
            "horizon_mult": args.horizon_mult,
        },
    )
    return 0


def cmd_figure_r(args) -> int:
    out = Path(args.out)
    if not MIN_GRID_EXP <= args.grid <= MAX_GRID_EXP:
        raise BudgetError(
            f"grid exponent {args.grid} outside [{MIN_GRID_EXP}, {MAX_GRID_EXP}]"
        )
    points = 1 << args.grid
    _check_budget(args.reps, points)
    b_grid = [round(1.05 + 0.04 * i, 2) for i in range(50)]  # includes 1.53
    sampler = scaled_bm_limit_sampler(1.0, default_limit_s_grid(points))
    rows = band_ratio_curve(b_grid, args.reps, SeedSpec(args.seed, 0), sampler)
    _write_csv(out / "figure_r.csv", _STAT_HEADER, _stat_rows_to_csv(rows))
    _write_run_meta(out, "figure-r", args.seed, points, args.reps, {})
    return 0


def cmd_confset(args) -> int:
    out = Path(args.out)
    times, events = read_censored_csv(args.input)
    if not np.any(times >= args.tau):
        raise EmptyRiskSetError(
            f"no subject is still at risk at tau={args.tau:g}; "
            "shrink the window or collect more data"
        )
    sample = CensoredSample(times, events, tau=args.tau)
    curve = nelson_aalen(sample)
    s2 = sigma2_hat(sample)
    band = band_size(s2, args.eps0, args.alpha, paper_literal=args.paper_literal)
    _write_csv(
        out / "hazard.csv",
        ("time", "increment", "cumulative_hazard"),
        zip(curve.jump_times, curve.increments, curve.cumulative),
    )
    _write_json(
        out / "confset.json",
        {
            "n": sample.n,
            "tau": args.tau,
            "eps0": args.eps0,
            "alpha": args.alpha,
            "paper_literal": args.paper_literal,
            "sigma2_hat": s2,
            "m_low": band.m_low,
            "m_high": band.m_high,
            "recommended_m": band.recommended_m,
        },
    )
    _write_run_meta(
        out,
        "confset",
        None,
        None,
        None,
        {
            "input": str(args.input),
            "tau": args.tau,
            "eps0": args.eps0,
            "alpha": args.alpha,
            "paper_literal": args.paper_literal,
        },
    )
    return 0


def cmd_saa(args) -> int:
    out = Path(args.out)
    _check_budget(args.reps, 1)
    prob = toy_problem(args.problem)
    x_star, v = exact_solution(prob)
    s2 = exact_sigma2(prob, paper_literal=args.paper_literal)
    n_direct = sample_size_n(args.alpha, args.eps, s2, paper_literal=args.paper_literal)
    n_conservative = shapiro_size(args.c1, args.c2, args.alpha, args.eps)
    cov = verify_sequential_coverage(
        prob,
        alpha=args.alpha,
        eps=args.eps,
        horizon_multiple=args.horizon_mult,
        replications=args.reps,
        seed=SeedSpec(args.seed, 0),
        paper_literal=args.paper_literal,
    )
    _write_json(
        out / "saa.json",
        {
            "problem": args.problem,
            "alpha": args.alpha,
            "eps": args.eps,
            "paper_literal": args.paper_literal,
            "exact": {"x_star": x_star, "v": v, "sigma2": s2},
            "n_direct": n_direct,
            "n_conservative": n_conservative,
            "coverage": cov.coverage,
            "coverage_mc_se": cov.mc_se,
            "n_start": cov.n_start,
            "horizon": cov.horizon,
            "replications": cov.replications,
        },
    )
    _write_run_meta(
        out,
        "saa",
        args.seed,
        None,
        args.reps,
        {
            "problem": args.problem,
            "alpha": args.alpha,
            "eps": args.eps,
            "c1": args.c1,
            "c2": args.c2,
            "horizon_mult": args.horizon_mult,
            "paper_literal": args.paper_literal,
        },
    )
    return 0


def cmd_verify(args) -> int:
    results = run_all(quick=args.quick, report=lambda r: print(r.line(), flush=True))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(
            out / "verify.json",
            {
                "quick": args.quick,
                "results": [
                    {
                        "index": r.index,
                        "name": r.name,
                        "passed": r.passed,
                        "detail": r.detail,
                    }
                    for r in results
                ],
            },
        )
        _write_run_meta(out, "verify", None, None, None, {"quick": args.quick})
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lastexit",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, seed=True, reps=None, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                           help="master seed; every stream derives from it")
        if reps is not None:
            p.add_argument("--reps", type=int, default=reps,
                           help=f"Monte Carlo replications (default {reps})")
        if out:
            p.add_argument("--out", default=".",
                           help="artifact directory (default: current)")

    p = sub.add_parser("limits", help="series CDF/survival/sandwich tables")
    add_common(p, seed=False)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("lasttime-sim", help="tail statistics of an estimator")
    add_common(p, reps=2000)
    p.add_argument("--estimator", default="mean",
                   choices=("mean", "median", "ecdf-sup", "nelson-aalen"))
    p.add_argument("--eps", type=float, default=0.05,
                   help="error threshold (default 0.05)")
    p.add_argument("--horizon-mult", type=float, default=50.0,
                   help="horizon = ceil(mult / eps^2) steps (default 50)")
    p.set_defaults(func=cmd_lasttime_sim)

    p = sub.add_parser("figure-r", help="limit band-ratio quantile curve")
    add_common(p, reps=10000)
    p.add_argument("--grid", type=int, default=12,
                   help="time-grid exponent: 2^g points (default 12)")
    p.set_defaults(func=cmd_figure_r)

    p = sub.add_parser("confset", help="size a band from censored-data CSV")
    add_common(p, seed=False)
    p.add_argument("--input", required=True, help="CSV with header time,event")
    p.add_argument("--tau", type=float, required=True,
                   help="window end (subjects must remain at risk)")
    p.add_argument("--eps0", type=float, default=0.15, help="band half-width")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="miss probability (default 0.1)")
    p.add_argument("--paper-literal", action="store_true",
                   help="use the sqrt(alpha) compatibility sizing")
    p.set_defaults(func=cmd_confset)

    p = sub.add_parser("saa", help="scenario-program sizing and coverage")
    add_common(p, reps=1000)
    p.add_argument("--problem", default="quadratic",
                   choices=("quadratic", "absolute"))
    p.add_argument("--eps", type=float, default=0.02,
                   help="half-width for the optimal value (default 0.02)")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="miss probability (default 0.1)")
    p.add_argument("--c1", type=float, default=1.0,
                   help="conservative-size scale constant")
    p.add_argument("--c2", type=float, default=1.0,
                   help="conservative-size log-argument constant")
    p.add_argument("--horizon-mult", type=float, default=3.0,
                   help="simulated horizon as a multiple of the start index")
    p.add_argument("--paper-literal", action="store_true",
                   help="sqrt(alpha) sizing and the literal third-term variance")
    p.set_defaults(func=cmd_saa)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--quick", action="store_true",
                   help="reduced-scale smoke run (non-normative)")
    p.add_argument("--out", default=None,
                   help="also write verify.json/run.json here")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "out", None) is not None and args.subcommand != "verify":
            Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except (GridSizeError, BudgetError) as err:
        print(f"budget error: {err}", file=sys.stderr)
        return 4
    except (CsvFormatError, OSError, ValueError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
