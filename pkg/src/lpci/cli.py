"""Command-line interface: ``lpci test | bench | calibrate | generate``.

Exit codes: 0 on completion (the statistical decision is in the report), 2 on
invalid input or flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from dataclasses import asdict

import numpy as np

from .bench import TrialGrid, calibrate_null, rank_sweep, run_grid, scenario_label, write_csv, write_json
from .ci_test import TestConfig, run_test
from .errors import LpciError
from .ind_test import run_independence_test
from .numerics import DEFAULT_MC_SAMPLES
from .synthetic import FAMILIES, NOISES, ScenarioSpec, generate

EXIT_OK = 0
EXIT_INPUT = 2
_COLUMN = re.compile(r"^([xyz])(\d+)$")


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# data files
# ---------------------------------------------------------------------------
def read_data(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a data CSV whose header names columns ``x1.., z1.., y1..``."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        blocks: dict[str, list[tuple[int, int]]] = {"x": [], "y": [], "z": []}
        for pos, name in enumerate(header):
            match = _COLUMN.match(name)
            if not match:
                raise InputError(f"unexpected column {name!r} in header; expected x1.., z1.., y1..")
            blocks[match.group(1)].append((int(match.group(2)), pos))
        for key, cols in blocks.items():
            if not cols:
                raise InputError(f"header has no {key} columns")
            if sorted(i for i, _ in cols) != list(range(1, len(cols) + 1)):
                raise InputError(f"{key} columns must be numbered {key}1..{key}{len(cols)}")
        rows = []
        for row_idx, rec in enumerate(reader, start=1):
            if not rec or all(not cell.strip() for cell in rec):
                continue
            if len(rec) != len(header):
                raise InputError(f"row {row_idx}: expected {len(header)} fields, got {len(rec)}")
            values = []
            for name, cell in zip(header, rec):
                try:
                    value = float(cell)
                except ValueError:
                    raise InputError(f"row {row_idx}, column {name}: not a number ({cell!r})") from None
                if not math.isfinite(value):
                    raise InputError(f"row {row_idx}, column {name}: non-finite value ({cell!r})")
                values.append(value)
            rows.append(values)
    if not rows:
        raise InputError(f"{path} has no data rows")
    table = np.array(rows)
    out = []
    for key in ("x", "y", "z"):
        cols = [pos for _, pos in sorted(blocks[key])]
        out.append(table[:, cols])
    return out[0], out[1], out[2]


def write_data(path: str, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> None:
    header = [f"x{i + 1}" for i in range(x.shape[1])] + [f"z{i + 1}" for i in range(z.shape[1])]
    header += [f"y{i + 1}" for i in range(y.shape[1])]
    table = np.hstack([x, z, y])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------
def parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_rank(text: str):
    if str(text).strip().lower() == "full":
        return "full"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"rank must be 'full' or a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("rank must be positive")
    return value


def parse_prob(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def default_seed() -> int:
    env = os.environ.get("KCI_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"KCI_SEED must be an integer, got {env!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_test_flags(p: argparse.ArgumentParser, with_seed: bool = True) -> None:
    p.add_argument("--alpha", type=parse_prob, default=None, help="test level (default 0.05)")
    p.add_argument("--p", type=float, default=None, help="l^p exponent, >= 1 (default 2)")
    p.add_argument("--locations", type=int, default=None, help="number of test locations J (default 5)")
    p.add_argument("--rank", type=parse_rank, default=None, help="regression rank: 'full' or an integer r <= n")
    p.add_argument("--delta", type=float, default=None, help="ridge added to the covariance before whitening (default 1e-8)")
    p.add_argument(
        "--optimize-hyperparams",
        type=parse_bool,
        default=None,
        metavar="BOOL",
        help="select regression hyperparameters by GP evidence (default true)",
    )
    p.add_argument("--mc-samples", type=int, default=None, help=f"Monte-Carlo null draws when p != 2 (default {DEFAULT_MC_SAMPLES})")
    if with_seed:
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $KCI_SEED or 0)")


def _config_from(values: dict, seed: int) -> TestConfig:
    kwargs = {"seed": seed}
    mapping = {
        "alpha": "alpha",
        "p": "p",
        "locations": "j_count",
        "rank": "r",
        "delta": "delta",
        "optimize_hyperparams": "optimize_hyperparams",
        "mc_samples": "mc_samples",
    }
    for key, field_name in mapping.items():
        if values.get(key) is not None:
            kwargs[field_name] = values[key]
    if "p" in kwargs and float(kwargs["p"]).is_integer():
        kwargs["p"] = int(kwargs["p"])
    try:
        return TestConfig(**kwargs)
    except LpciError as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_test(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    config = _config_from(vars(args), seed)
    x, y, z = read_data(args.data)
    try:
        if args.mode == "independence":
            result = run_independence_test(x, y, config)
        else:
            result = run_test(x, y, z, config)
    except LpciError as exc:
        raise InputError(f"{type(exc).__name__}: {exc}") from None

    report = {
        "format_version": 1,
        "mode": args.mode,
        "n": int(x.shape[0]),
        "statistic": result.statistic,
        "threshold": result.threshold,
        "p_value": result.p_value,
        "reject": result.reject,
        "config": {k: v for k, v in asdict(config).items()},
        "diagnostics": result.diagnostics,
    }
    if config.p != 2:
        report["mc_samples"] = config.mc_samples
    print(f"mode:      {args.mode}")
    print(f"statistic: {result.statistic:.6g}")
    print(f"threshold: {result.threshold:.6g}")
    print(f"p-value:   {result.p_value:.6g}")
    print(f"decision:  {'reject H0' if result.reject else 'do not reject H0'} at alpha={config.alpha}")
    if config.p != 2:
        print(f"null:      Monte Carlo with {config.mc_samples} samples")
    if args.out:
        _write_test_report(report, args.out, args.format)
    return EXIT_OK


def _write_test_report(report: dict, path: str, fmt: str) -> None:
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, default=_json_default)
        return
    cols = ["mode", "n", "statistic", "threshold", "p_value", "reject", "p", "j_count", "r", "delta", "alpha", "seed"]
    row = dict(report)
    row.update({k: report["config"][k] for k in ("p", "j_count", "r", "delta", "alpha", "seed")})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# format_version: 1\n")
        writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items() if k in cols})


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


BENCH_KEYS = {
    "scenarios": str,
    "noise": str,
    "n_values": _int_list,
    "d_z_values": _int_list,
    "trials": int,
    "master_seed": int,
    "ratios": _float_list,
    "oracle": parse_bool,
    "alpha": float,
    "p": float,
    "locations": int,
    "rank": parse_rank,
    "delta": float,
    "optimize_hyperparams": parse_bool,
    "mc_samples": int,
}
BENCH_REQUIRED = ("scenarios", "n_values", "d_z_values")


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` text with ``#`` comments; lists are comma-separated."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split(sep, 1))
        if key not in BENCH_KEYS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = BENCH_KEYS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def cmd_bench(args) -> int:
    values = parse_config_file(args.config) if args.config else {}
    inline = {
        "scenarios": args.scenarios,
        "noise": args.noise,
        "n_values": _int_list(args.n_values) if args.n_values else None,
        "d_z_values": _int_list(args.dz_values) if args.dz_values else None,
        "trials": args.trials,
        "master_seed": args.master_seed,
        "ratios": _float_list(args.ratios) if args.ratios else None,
        "oracle": args.oracle,
        "alpha": args.alpha,
        "p": args.p,
        "locations": args.locations,
        "rank": args.rank,
        "delta": args.delta,
        "optimize_hyperparams": args.optimize_hyperparams,
        "mc_samples": args.mc_samples,
    }
    values.update({k: v for k, v in inline.items() if v is not None})
    for key in BENCH_REQUIRED:
        if key not in values or not values[key]:
            raise InputError(f"missing required key: {key}")

    families = [s.strip() for s in values["scenarios"].split(",") if s.strip()]
    noise = values.get("noise", "gaussian")
    try:
        templates = [ScenarioSpec(family=f, n=1, noise=noise) for f in families]
    except LpciError as exc:
        raise InputError(str(exc)) from None
    master_seed = values.get("master_seed", default_seed())
    config = _config_from(values, seed=0)
    trials = values.get("trials", 100)
    if trials < 1:
        raise InputError("trials must be >= 1")

    if values.get("ratios"):
        report = rank_sweep(templates, values["ratios"], values["n_values"], values["d_z_values"], trials, config, master_seed, jobs=args.jobs)
        grid = TrialGrid(templates, values["n_values"], values["d_z_values"], trials, config, master_seed)
    else:
        grid = TrialGrid(
            templates, values["n_values"], values["d_z_values"], trials, config, master_seed, use_oracle=values.get("oracle", False)
        )
        report = run_grid(grid, jobs=args.jobs)

    write_csv(report, args.out_csv)
    write_json(report, args.out_json, grid)
    print(f"{'scenario':<32} {'n':>6} {'d_z':>4} {'metric':>8} {'rate':>7} {'ks':>7} {'aupc':>7} {'ms':>9} {'err':>4}")
    for s in report.summaries:
        print(
            f"{s['scenario']:<32} {s['n']:>6} {s['d_z']:>4} {s['metric']:>8} {s['error_rate']:>7.3f} "
            f"{s['ks']:>7.3f} {s['aupc']:>7.3f} {s['mean_runtime_ms']:>9.1f} {s['errors']:>4}"
        )
    print(f"wrote {args.out_csv} and {args.out_json}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    config = _config_from(vars(args), seed=0)
    if config.p != 2:
        raise InputError("calibration compares against chi2(J) and requires --p 2")
    if args.reps < 1 or args.n < 4 or args.dz < 1:
        raise InputError("--reps >= 1, --n >= 4 and --dz >= 1 are required")
    scenario = ScenarioSpec(family=args.model, n=args.n, d_z=args.dz)
    stats, ks = calibrate_null(scenario, args.reps, config, use_oracle=not args.rls, master_seed=seed, jobs=args.jobs)
    lines = [repr(float(s)) for s in stats]
    lines.append(f"# ks_chi2: {ks!r} (J={config.j_count}, reps={args.reps}, {'rls' if args.rls else 'oracle'})")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"ks_chi2: {ks:.4f}; wrote {len(stats)} statistics to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    try:
        data = generate(ScenarioSpec(family=args.scenario, n=args.n, d_z=args.dz, noise=args.noise, rng_seed=seed))
    except LpciError as exc:
        raise InputError(str(exc)) from None
    write_data(args.out, data.x, data.y, data.z)
    print(f"wrote {args.n} rows of {scenario_label(ScenarioSpec(args.scenario, args.n, args.dz, args.noise))} to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpci", description="l^p kernel-embedding (conditional) independence tests")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a test on a data CSV")
    p_test.add_argument("--data", required=True, help="CSV with header x1..,z1..,y1..")
    p_test.add_argument("--mode", choices=("conditional", "independence"), default="conditional")
    _add_test_flags(p_test)
    p_test.add_argument("--out", default=None, help="write the report to this path")
    p_test.add_argument("--format", choices=("json", "csv"), default="json", help="report format (default json)")
    p_test.set_defaults(func=cmd_test)

    p_bench = sub.add_parser("bench", help="run a trial grid on synthetic scenarios")
    p_bench.add_argument("--config", default=None, help="key = value config file")
    p_bench.add_argument("--scenarios", default=None, help=f"comma-separated families from {', '.join(FAMILIES)}")
    p_bench.add_argument("--noise", choices=NOISES, default=None)
    p_bench.add_argument("--n-values", default=None, help="comma-separated sample sizes")
    p_bench.add_argument("--dz-values", default=None, help="comma-separated dimensions of Z")
    p_bench.add_argument("--trials", type=int, default=None, help="trials per cell (default 100)")
    p_bench.add_argument("--master-seed", type=int, default=None)
    p_bench.add_argument("--ratios", default=None, help="comma-separated r/n ratios for a rank sweep")
    p_bench.add_argument("--oracle", type=parse_bool, default=None, metavar="BOOL", help="use exact conditional means (illus families)")
    _add_test_flags(p_bench, with_seed=False)
    p_bench.add_argument("--out-csv", default="bench.csv")
    p_bench.add_argument("--out-json", default="bench.json")
    p_bench.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers (default: available cores)")
    p_bench.set_defaults(func=cmd_bench)

    p_cal = sub.add_parser("calibrate", help="null calibration of n*NCI against chi2(J)")
    p_cal.add_argument("--model", choices=("illus_h0", "illus_h1"), default="illus_h0")
    p_cal.add_argument("--reps", type=int, default=1000)
    p_cal.add_argument("--n", type=int, default=1000)
    p_cal.add_argument("--dz", type=int, default=5)
    path = p_cal.add_mutually_exclusive_group()
    path.add_argument("--oracle", action="store_true", help="exact conditional means (default)")
    path.add_argument("--rls", action="store_true", help="ridge-regression conditional means")
    _add_test_flags(p_cal)
    p_cal.add_argument("--out", default=None, help="output file (default stdout)")
    p_cal.add_argument("--jobs", type=int, default=1)
    p_cal.set_defaults(func=cmd_calibrate)

    p_gen = sub.add_parser("generate", help="export a synthetic dataset as a data CSV")
    p_gen.add_argument("--scenario", choices=FAMILIES, required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--dz", type=int, default=1)
    p_gen.add_argument("--noise", choices=NOISES, default="gaussian")
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
