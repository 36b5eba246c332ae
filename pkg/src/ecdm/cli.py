"""Command-line front end.

Exit codes: 0 success (whatever the decision), 2 input error, 3 degenerate
statistic.
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

from ecdm import __version__
from ecdm.core import PairedSample, estimate_bundle
from ecdm.errors import DegenerateScale
from ecdm.inference import (
    KAPPA_THRESHOLD,
    StructureHypothesis,
    decide,
    diagnostics,
    structure_stat,
    structure_test,
)

EXIT_INPUT = 2
EXIT_DEGENERATE = 3


class InputError(Exception):
    pass


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_matrix(path) -> tuple[Optional[list[str]], np.ndarray]:
    """Read a comma-separated numeric matrix; a non-numeric first row is a header."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise InputError(f"{path}: no data")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: header but no data rows")
    width = len(header) if header is not None else len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = i + (2 if header is not None else 1)
        if len(row) != width:
            raise InputError(f"{path}, line {line}: expected {width} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}, line {line}, field {j + 1}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}, line {line}, field {j + 1}: non-finite value")
            values[i, j] = v
    return header, values


def write_matrix(path, matrix: np.ndarray, header: Optional[Sequence[str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in np.asarray(matrix):
            w.writerow([format(float(v), ".17g") for v in row])


def _names(header, width):
    return header if header is not None else [f"V{j + 1}" for j in range(width)]


def load_sample(args) -> PairedSample:
    """Apply the block declaration (and optional row limit / log2) to the data file."""
    header, x = read_matrix(args.data)
    names = _names(header, x.shape[1])
    if args.first_rows is not None:
        x = x[: args.first_rows]
    if args.log2:
        if np.any(x <= 0):
            raise InputError("--log2 needs strictly positive data")
        x = np.log2(x)

    if args.block1_cols is not None:
        if header is None:
            raise InputError("--block1-cols needs a header row")
        lookup = {name: j for j, name in enumerate(names)}
        b1 = _resolve(args.block1_cols, lookup, "--block1-cols")
        if args.block2_cols is not None:
            b2 = _resolve(args.block2_cols, lookup, "--block2-cols")
        else:
            b2 = [j for j in range(len(names)) if j not in set(b1)]
        overlap = set(b1) & set(b2)
        if overlap:
            raise InputError(f"column {names[min(overlap)]} is in both blocks")
        order = b1 + b2
        p1 = len(b1)
    else:
        p1 = args.p1
        if p1 is None:
            raise InputError("declare blocks with --p1 or --block1-cols")
        if args.block2_cols is not None:
            raise InputError("--block2-cols needs --block1-cols")
        order = list(range(x.shape[1]))
    if not order or p1 < 1 or p1 >= len(order):
        raise InputError(f"block 1 must hold between 1 and {len(order) - 1} columns, got {p1}")
    try:
        return PairedSample(x[:, order], p1, names=[names[j] for j in order])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _resolve(spec: str, lookup: dict, flag: str) -> list[int]:
    cols = [c.strip() for c in spec.split(",") if c.strip()]
    missing = [c for c in cols if c not in lookup]
    if missing:
        raise InputError(f"{flag}: unknown column(s): {', '.join(missing)}")
    return [lookup[c] for c in cols]


def _emit(args, report: dict, text: str) -> None:
    out = json.dumps(report, indent=2) + "\n" if args.format == "json" else text
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _g(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return format(v, ".6g")


def _text(title: str, fields: list[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in fields)
    lines = [title] + [f"  {k.ljust(width)}  {_g(v)}" for k, v in fields]
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    sample = load_sample(args)
    bundle = estimate_bundle(sample)
    outcome = decide(bundle.t_hat, bundle.delta_scale, args.alpha, bundle=bundle)
    diag = diagnostics(bundle, args.kappa_threshold)
    report = {
        "n": sample.n,
        "p1": sample.p1,
        "p2": sample.p2,
        "t_hat": bundle.t_hat,
        "w1": bundle.w1,
        "w2": bundle.w2,
        "delta_scale": bundle.delta_scale,
        "statistic": outcome.statistic,
        "critical_value": outcome.critical_value,
        "p_value": outcome.p_value,
        "alpha": outcome.alpha,
        "reject": outcome.reject,
        "ci_lower": outcome.ci_lower,
        "ci_upper": outcome.ci_upper,
        "ci_degenerate": outcome.ci_degenerate,
        "kappa": diag.kappa,
        "kappa_threshold": diag.threshold,
        "kappa_small": diag.kappa_small,
        "rv": diag.rv,
        "rv_clamped": diag.rv_clamped,
    }
    text = _text(
        "ECDM correlation test",
        [
            ("n", sample.n), ("p1", sample.p1), ("p2", sample.p2),
            ("T_n", bundle.t_hat), ("W_1n", bundle.w1), ("W_2n", bundle.w2),
            ("delta_hat", bundle.delta_scale), ("statistic", outcome.statistic),
            ("z_alpha", outcome.critical_value), ("p-value", outcome.p_value),
            ("reject H0", outcome.reject),
            (f"{100 * (1 - args.alpha):g}% CI lower", outcome.ci_lower),
            (f"{100 * (1 - args.alpha):g}% CI upper", outcome.ci_upper),
            ("kappa_hat", diag.kappa), ("kappa small", diag.kappa_small),
            ("rv_hat", diag.rv),
        ],
    )
    _emit(args, report, text)
    return 0


def cmd_structure(args) -> int:
    sample = load_sample(args)
    _, sigma0 = read_matrix(args.sigma0)
    hyp = StructureHypothesis(sigma0)
    try:
        hyp.check(sample)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    outcome = structure_test(sample, hyp, args.alpha, two_sided=args.two_sided)
    t0 = structure_stat(sample, hyp)
    bundle = outcome.bundle
    report = {
        "n": sample.n,
        "p1": sample.p1,
        "p2": sample.p2,
        "t_hat": bundle.t_hat,
        "t0_hat": t0,
        "sigma0_norm_sq": hyp.sigma0_norm_sq,
        "w1": bundle.w1,
        "w2": bundle.w2,
        "delta_scale": bundle.delta_scale,
        "statistic": outcome.statistic,
        "critical_value": outcome.critical_value,
        "p_value": outcome.p_value,
        "alpha": outcome.alpha,
        "two_sided": outcome.two_sided,
        "reject": outcome.reject,
        "ci_lower": outcome.ci_lower,
        "ci_upper": outcome.ci_upper,
        "ci_degenerate": outcome.ci_degenerate,
    }
    text = _text(
        "ECDM covariance-structure test",
        [
            ("n", sample.n), ("T_n0", t0), ("||Sigma0||_F^2", hyp.sigma0_norm_sq),
            ("delta_hat", bundle.delta_scale), ("statistic", outcome.statistic),
            ("critical value", outcome.critical_value), ("p-value", outcome.p_value),
            ("two-sided", outcome.two_sided), ("reject H0", outcome.reject),
        ],
    )
    _emit(args, report, text)
    return 0


def cmd_simulate(args) -> int:
    # imported lazily: the simulation stack is not needed for data analysis
    from dataclasses import replace

    from ecdm.simulation import ConfigError, gen_sample, load_scenario, replication_stream
    from ecdm.simulation import run_monte_carlo, scenario_model

    try:
        scenario = load_scenario(args.config)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
    except ConfigError as exc:
        raise InputError(f"config error in {exc}") from None
    except OSError as exc:
        raise InputError(f"cannot read {args.config}: {exc.strerror}") from None
    if args.workers < 1:
        raise InputError("--workers must be at least 1")
    report = run_monte_carlo(scenario, workers=args.workers)
    summary, table = report.write(args.out)
    if args.export_samples:
        sample_dir = Path(args.out) / "samples"
        sample_dir.mkdir(exist_ok=True)
        p1, p2 = scenario.cov.p1, scenario.cov.p2
        header = [f"x1_{j + 1}" for j in range(p1)] + [f"x2_{j + 1}" for j in range(p2)]
        for rep in range(min(args.export_samples, scenario.replications)):
            sample = gen_sample(scenario, replication_stream(scenario.seed, rep))
            write_matrix(sample_dir / f"rep_{rep:05d}.csv", sample.data, header)
        write_matrix(sample_dir / "sigma_star.csv", scenario_model(scenario).sigma_star())
    s = report.summary
    rate = s["reject_rate"]
    print(f"wrote {summary} and {table}")
    print(f"rejection rate {rate['rate']:.6g} (MC s.e. {rate['se']:.3g}) over {rate['count']} replications")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", required=True, help="CSV, rows = samples, columns = variables")
    blocks = data.add_mutually_exclusive_group()
    blocks.add_argument("--p1", type=int, help="first P1 columns form block 1")
    blocks.add_argument("--block1-cols", help="comma-separated header names forming block 1")
    data.add_argument("--block2-cols", help="names forming block 2 (default: all other columns)")
    data.add_argument("--first-rows", type=int, help="use only the first N samples")
    data.add_argument("--log2", action="store_true", help="log2-transform the data first")
    data.add_argument("--alpha", type=float, default=0.05)
    data.add_argument("--format", choices=("text", "json"), default="text")
    data.add_argument("--out", help="write the report here instead of stdout")

    t = sub.add_parser("test", parents=[data], help="test zero cross-correlation between blocks")
    t.add_argument("--kappa-threshold", type=float, default=KAPPA_THRESHOLD)
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("structure", parents=[data], help="test a candidate cross-covariance")
    s.add_argument("--sigma0", required=True, help="dense p1 x p2 CSV matrix")
    s.add_argument("--two-sided", action="store_true")
    s.set_defaults(func=cmd_structure)

    m = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    m.add_argument("--config", required=True, help="YAML scenario file")
    m.add_argument("--out", required=True, help="output directory")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--seed", type=int, help="override the scenario seed")
    m.add_argument("--export-samples", type=int, default=0, metavar="K",
                   help="also write the first K replication datasets and the true Sigma_*")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("version", help="print the package version")
    v.set_defaults(func=lambda args: print(__version__) or 0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateScale as exc:
        print(f"error: degenerate statistic: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
