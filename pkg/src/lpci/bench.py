"""Repeated-trial harness: type-I/type-II error, KS and AUPC per grid cell."""

from __future__ import annotations

import csv
import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .ci_test import TestConfig, prepare, run_oracle_test, run_test
from .errors import DomainError, LpciError
from .numerics import aupc, child_seed, ks_chi2, ks_uniform
from .synthetic import ScenarioSpec, generate, oracle_means

FORMAT_VERSION = 1
CSV_COLUMNS = ("scenario", "n", "d_z", "trial", "seed", "p_value", "statistic", "reject", "runtime_ms", "error")


@dataclass(frozen=True)
class TrialGrid:
    scenarios: Sequence[ScenarioSpec]  # templates; n, d_z and seed are overridden per cell
    n_values: Sequence[int]
    d_z_values: Sequence[int]
    trials: int = 100
    test_config: TestConfig = TestConfig()
    master_seed: int = 0
    use_oracle: bool = False
    rank_ratio: Optional[float] = None  # r = ceil(ratio * n) when set

    def cells(self):
        for template in self.scenarios:
            for n in self.n_values:
                for d_z in self.d_z_values:
                    yield replace(template, n=int(n), d_z=int(d_z))


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    summaries: list = field(default_factory=list)


def scenario_label(spec: ScenarioSpec, rank_ratio: float | None = None) -> str:
    label = f"{spec.family}-{spec.noise}"
    if spec.functions is not None:
        label += "-" + "+".join(spec.functions)
    if rank_ratio is not None:
        label += f"@r={rank_ratio:g}"
    return label


def _cell_key(spec: ScenarioSpec) -> int:
    # rank ratio is deliberately excluded so every ratio sees the same datasets
    return zlib.crc32(f"{scenario_label(spec)}|{spec.n}|{spec.d_z}".encode())


def trial_seed(master_seed: int, spec: ScenarioSpec, trial: int) -> int:
    return child_seed(master_seed, _cell_key(spec), trial)


def _run_trial(cell: ScenarioSpec, trial: int, grid: TrialGrid) -> dict:
    seed = trial_seed(grid.master_seed, cell, trial)
    row = {
        "scenario": scenario_label(cell, grid.rank_ratio),
        "n": cell.n,
        "d_z": cell.d_z,
        "trial": trial,
        "seed": seed,
        "p_value": math.nan,
        "statistic": math.nan,
        "reject": False,
        "runtime_ms": math.nan,
        "error": "",
    }
    try:
        data = generate(cell.with_seed(child_seed(seed, 0)))
        config = replace(grid.test_config, seed=child_seed(seed, 1))
        if grid.rank_ratio is not None:
            config = replace(config, r=min(cell.n, math.ceil(grid.rank_ratio * cell.n)))
        start = time.perf_counter()
        if grid.use_oracle:
            prepared = prepare(data.x, data.y, data.z, config)
            f_x, f_y = oracle_means(prepared.locations, prepared.spec, cell.family)
            result = run_oracle_test(data.x, data.y, data.z, config, f_x, f_y, prepared=prepared)
        else:
            result = run_test(data.x, data.y, data.z, config)
        row["runtime_ms"] = (time.perf_counter() - start) * 1e3
        row.update(p_value=result.p_value, statistic=result.statistic, reject=result.reject)
    except (LpciError, ValueError, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def summarize(rows: list, null_by_scenario: dict) -> list:
    """Per-cell summaries; error rows count as non-rejections and are excluded from KS/AUPC."""
    cells: dict = {}
    for row in rows:
        cells.setdefault((row["scenario"], row["n"], row["d_z"]), []).append(row)
    out = []
    for (scenario, n, d_z), group in cells.items():
        is_null = null_by_scenario[scenario]
        rejects = np.array([bool(r["reject"]) and not r["error"] for r in group])
        pvals = np.array([r["p_value"] for r in group if not r["error"]], dtype=np.float64)
        runtimes = [r["runtime_ms"] for r in group if not r["error"]]
        rate = float(rejects.mean()) if is_null else float(1.0 - rejects.mean())
        out.append(
            {
                "scenario": scenario,
                "n": n,
                "d_z": d_z,
                "trials": len(group),
                "errors": int(sum(1 for r in group if r["error"])),
                "metric": "type_I" if is_null else "type_II",
                "error_rate": rate,
                "ks": ks_uniform(pvals) if pvals.size else math.nan,
                "aupc": aupc(pvals) if pvals.size else math.nan,
                "mean_runtime_ms": float(np.mean(runtimes)) if runtimes else math.nan,
            }
        )
    return out


def run_grid(grid: TrialGrid, jobs: int = 1) -> BenchReport:
    cells = list(grid.cells())
    if not cells or grid.trials < 1:
        raise DomainError("grid is empty")
    tasks = [(cell, t) for cell in cells for t in range(grid.trials)]
    if jobs == 1:
        rows = [_run_trial(cell, t, grid) for cell, t in tasks]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=jobs)(delayed(_run_trial)(cell, t, grid) for cell, t in tasks)
    null_by_scenario = {scenario_label(c, grid.rank_ratio): c.is_null for c in cells}
    return BenchReport(rows=rows, summaries=summarize(rows, null_by_scenario))


def rank_sweep(
    scenarios: Sequence[ScenarioSpec],
    ratios: Sequence[float],
    n_values: Sequence[int],
    d_z_values: Sequence[int] = (1,),
    trials: int = 100,
    config: TestConfig = TestConfig(),
    master_seed: int = 0,
    jobs: int = 1,
) -> BenchReport:
    """Run the grid once per rank ratio ``r / n``; all ratios share the same datasets and test seeds."""
    if not ratios:
        raise DomainError("ratios must be nonempty")
    report = BenchReport()
    for ratio in ratios:
        if not 0 < ratio <= 1:
            raise DomainError(f"ratio must lie in (0, 1], got {ratio}")
        grid = TrialGrid(scenarios, n_values, d_z_values, trials, config, master_seed, rank_ratio=float(ratio))
        part = run_grid(grid, jobs=jobs)
        for summary in part.summaries:
            summary["rank_ratio"] = float(ratio)
        report.rows.extend(part.rows)
        report.summaries.extend(part.summaries)
    return report


def calibrate_null(
    scenario: ScenarioSpec,
    reps: int,
    config: TestConfig = TestConfig(),
    use_oracle: bool = True,
    master_seed: int = 0,
    jobs: int = 1,
) -> tuple[np.ndarray, float]:
    """Null statistics over ``reps`` datasets and their KS distance to chi2(J)."""
    if config.p != 2:
        raise DomainError("null calibration compares against chi2(J) and requires p = 2")
    if not scenario.family.startswith("illus") and use_oracle:
        raise DomainError("oracle calibration needs an illustration family")
    grid = TrialGrid([scenario], [scenario.n], [scenario.d_z], reps, config, master_seed, use_oracle=use_oracle)
    report = run_grid(grid, jobs=jobs)
    failed = [r for r in report.rows if r["error"]]
    if failed:
        raise LpciError(f"{len(failed)} calibration trials failed, first: {failed[0]['error']}")
    stats = np.array([r["statistic"] for r in report.rows])
    return stats, ks_chi2(stats, config.j_count)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
def write_csv(report: BenchReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# format_version: {FORMAT_VERSION}\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in report.rows:
            writer.writerow({**row, "reject": int(bool(row["reject"]))})


def read_csv(path) -> list:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        rows.append(
            {
                "scenario": rec["scenario"],
                "n": int(rec["n"]),
                "d_z": int(rec["d_z"]),
                "trial": int(rec["trial"]),
                "seed": int(rec["seed"]),
                "p_value": float(rec["p_value"]),
                "statistic": float(rec["statistic"]),
                "reject": rec["reject"] == "1",
                "runtime_ms": float(rec["runtime_ms"]),
                "error": rec["error"],
            }
        )
    return rows


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_json(report: BenchReport, path, grid: TrialGrid | None = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "summaries": [{k: _jsonable(v) for k, v in s.items()} for s in report.summaries],
    }
    if grid is not None:
        doc["grid"] = {
            "scenarios": [scenario_label(s) for s in grid.scenarios],
            "n_values": list(grid.n_values),
            "d_z_values": list(grid.d_z_values),
            "trials": grid.trials,
            "master_seed": grid.master_seed,
            "test_config": {k: _jsonable(v) for k, v in asdict(grid.test_config).items()},
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
