"""Command-line interface.

Subcommands
-----------
run
    Full Monte Carlo sweep from a config file; writes report artifacts.
calibrate
    Energy-detector threshold only: H0 trials at the first grid point,
    written to ``calibration.json``.
decompose
    Regularized CP decomposition of a single ``.ct3`` tensor file;
    writes factor matrices ``A.csv``/``B.csv``/``C.csv`` and a
    ``decompose.json`` summary (the tensor is used as-is, with no
    noise-referenced rescaling).
plot
    Re-render the SVG curve plots from a previously written CSV report.
simulate
    Draw one received-signal tensor (H0 or H1) at the first grid point
    and write it as a ``.ct3`` file.

Common flags: ``--config``, ``--out-dir``, ``--seed`` (overrides
``master_seed``), ``--threads``, ``--formats``.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .cpd import best_cpd, estimate_rank
from .harness import (
    HYP_H0,
    HYP_H1,
    SweepReport,
    emit_report,
    parse_report_csv,
    run_sweep,
    simulate_trial,
    trial_seed,
)
from .detect import ebd_calibrate
from .tensor_ops import as_array, read_ct3, write_ct3

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, metavar="PATH",
                        help="config file (key = value lines); defaults used if absent")
    common.add_argument("--out-dir", default=".", metavar="PATH",
                        help="output directory (created if needed)")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override master_seed from the config")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker processes (never changes output bytes)")
    common.add_argument("--formats", default="csv,json,svg", metavar="LIST",
                        help="comma-separated subset of csv,json,svg")

    parser = argparse.ArgumentParser(
        prog="debrisense",
        description="Tensor-based space-debris detection simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="run a Monte Carlo sweep")
    p_run.set_defaults(func=_cmd_run)

    p_cal = sub.add_parser("calibrate", parents=[common],
                           help="calibrate the energy-detector threshold")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_dec = sub.add_parser("decompose", parents=[common],
                           help="decompose a .ct3 tensor file")
    p_dec.add_argument("tensor", help="input .ct3 file")
    p_dec.set_defaults(func=_cmd_decompose)

    p_plot = sub.add_parser("plot", parents=[common],
                            help="re-render plots from a CSV report")
    p_plot.add_argument("csv", help="input report.csv")
    p_plot.set_defaults(func=_cmd_plot)

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="write one simulated received tensor")
    p_sim.add_argument("output", help="output .ct3 file name")
    p_sim.add_argument("--hypothesis", choices=("h0", "h1"), default="h1",
                       help="scene hypothesis (default h1)")
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def _load(args):
    overrides = None
    if args.seed is not None:
        overrides = {"master_seed": str(args.seed)}
    return load_config(args.config, overrides)


def _formats(args) -> list[str]:
    return [f for f in args.formats.split(",") if f.strip()]


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    scenario, spec = _load(args)
    report = run_sweep(spec, scenario, threads=args.threads)
    for row in report.rows:
        print(
            f"power={row.power_w:g}W mu={row.mu:g} K={row.k} "
            f"{row.detector}: p_d={row.p_d:.3f} p_fa={row.p_fa:.3f} "
            f"(n={row.n_trials}, failures={row.n_failures})"
        )
    files = emit_report(report, _formats(args), args.out_dir)
    for path in files:
        print(f"wrote {path}")
    return 0


def _cmd_calibrate(args) -> int:
    scenario, spec = _load(args)
    power_w, mu, k = spec.power_grid[0], spec.mu_grid[0], spec.k_grid[0]
    n = max(spec.trials_per_point, 100)
    energies = []
    for i in range(n):
        rng = np.random.default_rng(
            trial_seed(spec.master_seed, power_w, mu, k, HYP_H0, i)
        )
        _, Y, _ = simulate_trial(scenario, power_w, k, HYP_H0, rng)
        energies.append(float(np.linalg.norm(as_array(Y)) ** 2))
    cal = ebd_calibrate(energies, scenario.target_pfa)
    payload = {
        "power_w": power_w,
        "k": k,
        "target_pfa": cal.target_pfa,
        "threshold": cal.threshold,
        "achieved_pfa": cal.achieved_pfa,
        "trials_used": cal.trials_used,
    }
    path = _out_dir(args) / "calibration.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"energy threshold {cal.threshold!r} "
          f"(target p_fa={cal.target_pfa:g}, achieved {cal.achieved_pfa:.4f})")
    print(f"wrote {path}")
    return 0


def _complex_cell(z: complex) -> str:
    re, im = float(z.real), float(z.imag)
    sign = "+" if im >= 0 or np.isnan(im) else "-"
    return f"{re!r}{sign}{abs(im)!r}j"


def _write_factor_csv(path: Path, M: np.ndarray) -> None:
    lines = [",".join(_complex_cell(z) for z in row) for row in M]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_decompose(args) -> int:
    scenario, spec = _load(args)
    Y = read_ct3(args.tensor)
    seed = args.seed if args.seed is not None else spec.master_seed
    cfg = scenario.als_config(spec.mu_grid[0], seed=seed)
    fs = best_cpd(Y, cfg)
    est = estimate_rank(fs, scenario.threshold_rel)
    out = _out_dir(args)
    for name, M in (("A", fs.A), ("B", fs.B), ("C", fs.C)):
        _write_factor_csv(out / f"{name}.csv", M)
    payload = {
        "combined_rank": est.combined_rank,
        "per_factor_ranks": list(est.per_factor_ranks),
        "mu": cfg.mu,
        "l_hat": cfg.L_hat,
        "iterations_used": fs.iterations_used,
        "final_residual": fs.final_residual,
    }
    path = out / "decompose.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"estimated rank {est.combined_rank} "
          f"(per-factor {tuple(est.per_factor_ranks)}, "
          f"{fs.iterations_used} iterations)")
    for name in ("A.csv", "B.csv", "C.csv", "decompose.json"):
        print(f"wrote {out / name}")
    return 0


def _cmd_plot(args) -> int:
    rows = parse_report_csv(args.csv)
    report = SweepReport(rows=rows, config_echo={})
    files = emit_report(report, ["svg"], args.out_dir)
    for path in files:
        print(f"wrote {path}")
    return 0


def _cmd_simulate(args) -> int:
    scenario, spec = _load(args)
    power_w, mu, k = spec.power_grid[0], spec.mu_grid[0], spec.k_grid[0]
    hyp = HYP_H1 if args.hypothesis == "h1" else HYP_H0
    rng = np.random.default_rng(
        trial_seed(spec.master_seed, power_w, mu, k, hyp, 0)
    )
    paths, Y, _ = simulate_trial(
        scenario, power_w, k, hyp, rng, spec.debris_count_h1
    )
    path = _out_dir(args) / args.output
    write_ct3(Y, path)
    print(f"simulated {args.hypothesis} tensor "
          f"{Y.dims} with {paths.L} path(s) at {power_w:g} W")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # runtime failure -> exit 3
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
