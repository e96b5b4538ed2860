"""
Batch experiments: every method × scenario × seed, one CSV row per run.

Successful runs are re-checked by the validator and their trajectory files are
written next to the CSV; anything that fails validation is recorded as a failure.
"""
import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

import config
from baselines import baseline_composite_rrt, baseline_prioritized
from config import PlannerConfig, planner_config_from_dict
from guided_dash import PlanningFailure, Solution, plan, save_solution, validate
from scenarios import Scenario, scenario_from_dict, scenario_to_dict

logger = logging.getLogger(__name__)

CSV_FIELDS = ["method", "scenario", "robots", "seed", "success", "plan_s", "makespan_s"]

METHODS: Dict[str, Callable[[Scenario, PlannerConfig], Solution]] = {
    "wg-dash": plan,
    "composite-rrt": baseline_composite_rrt,
    "prioritized": baseline_prioritized,
}


@dataclass
class RunRecord:
    method: str
    scenario: str
    robots: int
    seed: int
    success: bool
    plan_s: float
    makespan_s: Optional[float] = None
    note: str = ""   # not part of the CSV; e.g. why a run counts as failed

    def to_row(self) -> List[str]:
        return [
            self.method,
            self.scenario,
            str(self.robots),
            str(self.seed),
            "true" if self.success else "false",
            repr(float(self.plan_s)),
            "" if self.makespan_s is None else repr(float(self.makespan_s)),
        ]


def solution_filename(method: str, scenario: str, seed: int) -> str:
    return f"{method}__{scenario}__s{seed}.json"


def run_single(method: str, scenario: Scenario, seed: int, timeout: float,
               cfg: Optional[PlannerConfig] = None, out_dir: Optional[Union[str, Path]] = None) -> RunRecord:
    """
    One run of one method; never raises for planning failures.

    Failures record the timeout as planning time and no makespan.
    """
    if method not in METHODS:
        raise ValueError(f"Unknown method {method!r}; choose from {', '.join(METHODS)}")
    data = (cfg or PlannerConfig()).to_dict()
    data.update(seed=seed, timeout_s=timeout)
    run_cfg = planner_config_from_dict(data)
    n = len(scenario.robots)

    def failed(note: str) -> RunRecord:
        return RunRecord(method, scenario.name, n, seed, False, float(timeout), None, note)

    started = time.perf_counter()
    try:
        solution = METHODS[method](scenario, run_cfg)
    except PlanningFailure as e:
        logger.info(f"{method} {scenario.name} seed {seed}: failed ({e})")
        return failed(str(e))
    elapsed = time.perf_counter() - started
    if elapsed > timeout:
        return failed(f"finished after the {timeout}s budget")

    report = validate(solution, scenario, run_cfg)
    if not report.ok:
        logger.error(f"❌ {method} {scenario.name} seed {seed}: invalid solution ({report.summary()})")
        return failed(f"validator: {report.summary()}")

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        save_solution(solution, Path(out_dir) / solution_filename(method, scenario.name, seed))
    return RunRecord(method, scenario.name, n, seed, True, elapsed, solution.makespan_s)


def _run_worker(method: str, scenario_data: Dict[str, Any], seed: int, timeout: float,
                cfg_data: Dict[str, Any], out_dir: Optional[str]) -> RunRecord:
    # Scenarios cross the process boundary as plain dicts
    scenario = scenario_from_dict(scenario_data)
    return run_single(method, scenario, seed, timeout, planner_config_from_dict(cfg_data), out_dir)


def run_batch(methods: Sequence[str], scenarios: Sequence[Scenario], seeds: Sequence[int],
              timeout: float = config.DEFAULT_TIMEOUT_S, workers: int = config.BENCH_WORKERS,
              out_dir: Optional[Union[str, Path]] = None, csv_path: Optional[Union[str, Path]] = None,
              cfg: Optional[PlannerConfig] = None) -> List[RunRecord]:
    """
    Run the full cross product and collect one RunRecord per run.

    Args:
        methods: Names from METHODS
        scenarios: Scenarios to plan
        seeds: Seeds per (method, scenario)
        timeout: Wall-clock budget per run in seconds
        workers: Parallel worker processes (1 = in-process)
        out_dir: Where validated solutions are written (None = not written)
        csv_path: CSV file to write (None = not written)
        cfg: Base planner config; seed and timeout are set per run

    Returns:
        Records in (method, scenario, seed) order
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"Unknown method {method!r}; choose from {', '.join(METHODS)}")
    cfg_data = (cfg or PlannerConfig()).to_dict()
    jobs = [(m, s, seed) for m in methods for s in scenarios for seed in seeds]
    logger.info(f"Running {len(jobs)} runs ({len(methods)} methods, {len(scenarios)} scenarios, "
                f"{len(seeds)} seeds) on {workers} worker(s)")
    out = str(out_dir) if out_dir is not None else None

    records: List[RunRecord] = []
    if workers <= 1:
        for i, (method, scenario, seed) in enumerate(jobs, 1):
            records.append(run_single(method, scenario, seed, timeout, planner_config_from_dict(cfg_data), out))
            logger.info(f"[{i}/{len(jobs)}] {method} {scenario.name} seed {seed}: "
                        f"{'✅' if records[-1].success else '❌'}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_worker, method, scenario_to_dict(scenario), seed, timeout, cfg_data, out)
                for method, scenario, seed in jobs
            ]
            records = [f.result() for f in futures]

    if csv_path is not None:
        write_records(records, csv_path)
    successes = sum(r.success for r in records)
    logger.info(f"Batch done: {successes}/{len(records)} successful runs")
    return records


def write_records(records: Sequence[RunRecord], path: Union[str, Path]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(CSV_FIELDS)
        for record in records:
            writer.writerow(record.to_row())
    logger.info(f"Wrote {len(records)} rows to {path}")


def read_records(path: Union[str, Path]) -> List[RunRecord]:
    records = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_FIELDS:
            raise ValueError(f"Unexpected CSV header {reader.fieldnames}; expected {CSV_FIELDS}")
        for row in reader:
            records.append(RunRecord(
                method=row["method"],
                scenario=row["scenario"],
                robots=int(row["robots"]),
                seed=int(row["seed"]),
                success=row["success"] == "true",
                plan_s=float(row["plan_s"]),
                makespan_s=float(row["makespan_s"]) if row["makespan_s"] else None,
            ))
    return records


def summarize(records: Sequence[RunRecord]) -> List[Dict[str, Any]]:
    """
    Per (method, scenario, robots): run count, success rate, and mean/std of
    planning time and makespan over successful runs (None without successes).
    """
    groups: Dict[tuple, List[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.method, record.scenario, record.robots), []).append(record)

    rows = []
    for (method, scenario, robots), runs in sorted(groups.items()):
        ok = [r for r in runs if r.success]
        plan_s = np.array([r.plan_s for r in ok], dtype=float)
        makespan = np.array([r.makespan_s for r in ok], dtype=float)
        rows.append({
            "method": method,
            "scenario": scenario,
            "robots": robots,
            "runs": len(runs),
            "success_rate": len(ok) / len(runs),
            "plan_s_mean": float(plan_s.mean()) if len(ok) else None,
            "plan_s_std": float(plan_s.std()) if len(ok) else None,
            "makespan_s_mean": float(makespan.mean()) if len(ok) else None,
            "makespan_s_std": float(makespan.std()) if len(ok) else None,
        })
    return rows


def aggregate(csv_path: Union[str, Path]) -> List[Dict[str, Any]]:
    """summarize() recomputed from a CSV written by run_batch."""
    return summarize(read_records(csv_path))
