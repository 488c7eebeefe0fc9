"""Command-line entry point ``cpve``.

Exit codes: 0 success, 2 validation error, 3 exact-engine budget exceeded,
4 internal invariant violated.  Output files go to ``--output-dir``, else to
``$CPVE_OUTPUT_DIR``, else to the current directory.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

from .exact import BudgetError
from .martingale import InvariantError, NormalizerError
from .model import ModelFileError, parse_model_file
from .report import (EXACT_HEADER, MARTINGALE_HEADER, MC_HEADER, RunConfig,
                     dumps, matrix_rows, mc_rows, run_criteria, run_exact,
                     run_martingale, run_report, run_simulate)

OUTPUT_ENV = "CPVE_OUTPUT_DIR"
EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4


def _grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("model", help="model file (TOML)")
        p.add_argument("--output-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--eps", type=float, default=1e-12, help="truncation tolerance for the exact engine")
        p.add_argument("--state-cap", type=int, default=10**6)

    def stochastic(p, horizon):
        p.add_argument("--horizon", type=int, default=horizon)
        p.add_argument("--replications", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=None, help="master seed (required)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--band", type=int, default=20, help="mid-band upper edge B for 0 < Z <= B")
        p.add_argument("--pop-cap", type=int, default=10**12, help="paths above this size are marked exploded")

    def probes(p):
        p.add_argument("--k-max", type=int, default=10**4)
        p.add_argument("--n-max", type=int, default=10**3)
        p.add_argument("--s-grid", type=_grid, default=None, help="comma-separated s values in [0, 1)")
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--delta-prime", type=float, default=None)
        p.add_argument("--matrix-n", type=int, default=20, help="growth-rate matrix rows")
        p.add_argument("--matrix-k", type=int, default=50, help="growth-rate matrix columns")

    p = sub.add_parser("simulate", help="Monte Carlo replications")
    common(p)
    stochastic(p, 200)

    p = sub.add_parser("exact", help="exact propagation of the law of Z_n")
    common(p)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--absorb-above", type=int, default=None,
                   help="freeze states above this size instead of failing on the state cap")
    p.add_argument("--pmf-json", action="store_true", help="also write the law of Z_horizon")

    p = sub.add_parser("criteria", help="extinction and survival criteria")
    common(p)
    probes(p)

    p = sub.add_parser("martingale", help="normalized process W_n")
    common(p)
    stochastic(p, 60)

    p = sub.add_parser("report", help="combined JSON report")
    common(p)
    stochastic(p, 100)
    probes(p)
    p.add_argument("--exact-horizon", type=int, default=None, help="default min(horizon, 60)")
    p.add_argument("--absorb-above", type=int, default=None, help="default min(2^18, state cap)")
    p.add_argument("--martingale-horizon", type=int, default=12,
                   help="horizon of the exact E[W_n] and E[W_n^2] checks")
    return parser


def config_from_args(args) -> RunConfig:
    keys = set(RunConfig.__dataclass_fields__)
    kw = {k: v for k, v in vars(args).items() if k in keys and v is not None}
    kw["model_path"] = args.model
    kw["output_dir"] = args.output_dir or os.environ.get(OUTPUT_ENV) or "."
    return RunConfig(**kw)


def _cell(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else x


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _write_json(path: Path, doc):
    path.write_text(dumps(doc))


def execute(cfg: RunConfig) -> list[Path]:
    """Run one subcommand and write its outputs; returns the written paths."""
    cfg.validate()
    model = parse_model_file(cfg.model_path)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, writer, *a):
        writer(out / name, *a)
        written.append(out / name)

    if cfg.subcommand == "simulate":
        rep = run_simulate(model, cfg)
        put("mc_report.json", _write_json, {"config": cfg.document(), "report": rep.to_dict()})
        put("mc_by_gen.csv", _write_csv, MC_HEADER, mc_rows(rep))
    elif cfg.subcommand == "exact":
        pmfs, rows = run_exact(model, cfg)
        put("exact_bounds.csv", _write_csv, EXACT_HEADER, rows)
        if cfg.pmf_json:
            put("exact_pmf.json", _write_json, {"config": cfg.document(), "pmf": pmfs[-1].to_dict()})
    elif cfg.subcommand == "criteria":
        bundle, mat = run_criteria(model, cfg)
        put("criteria.json", _write_json, {"config": cfg.document(), **bundle})
        put("growth_rate.csv", _write_csv, *matrix_rows(mat))
    elif cfg.subcommand == "martingale":
        _, rows, hist, _ = run_martingale(model, cfg)
        put("martingale.csv", _write_csv, MARTINGALE_HEADER, rows)
        put("w_histogram.json", _write_json, hist)
    else:
        put("report.json", _write_json, run_report(model, cfg))
    return written


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        paths = execute(cfg)
    except (ModelFileError, NormalizerError, ValueError) as exc:
        print(f"cpve {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BudgetError as exc:
        print(f"cpve {args.subcommand}: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantError as exc:
        print(f"cpve {args.subcommand}: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
