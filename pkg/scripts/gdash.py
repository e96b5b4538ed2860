#!/usr/bin/env python3
"""
Command-line interface for the Guided-DaSH planner

Subcommands:
  gen        generate a warehouse or gridmaze scenario (JSON)
  skeleton   build the workspace skeleton of a scenario (JSON)
  plan       plan one scenario with one method and save the solution
  bench      run methods x scenarios x seeds and write a CSV
  aggregate  summarize a benchmark CSV
  render     draw a scenario (and optionally skeleton and solution) as SVG
  validate   re-check a solution against its scenario
"""
import argparse
import logging
import sys
from pathlib import Path

# Add parent directory to path to import our modules
sys.path.insert(0, str(Path(__file__).parent.parent))

import config
from benchmark import METHODS, aggregate, run_batch, solution_filename
from guided_dash import PlanningFailure, load_solution, save_solution, validate
from scenarios import GenerationError, gen_gridmaze, gen_warehouse, load_scenario, save_scenario
from skeleton import SkeletonConstructionError, build_grid_skeleton, load_skeleton, save_skeleton
from svg_render import render_svg, write_svg
from workspace import CarDynamics

logger = logging.getLogger("gdash")


def _seed_for(args, scenario) -> int:
    if args.seed is not None:
        return args.seed
    if config.SEED_OVERRIDE is not None:
        return config.SEED_OVERRIDE
    return scenario.seed


def cmd_gen(args) -> int:
    dynamics = None
    if args.cars:
        from scenarios import CAR_A_MAX, CAR_STEER_MAX, CAR_WHEELBASE
        dynamics = CarDynamics(wheelbase=CAR_WHEELBASE, a_max=CAR_A_MAX, steer_max=CAR_STEER_MAX)
    try:
        if args.kind == "warehouse":
            scenario = gen_warehouse(
                aisles=args.aisles or max(1, args.robots // 2),
                aisle_width_factor=args.width_factor if args.width_factor is not None else 2.5,
                robots=args.robots,
                dynamics=dynamics,
                seed=args.seed or 0,
            )
        else:
            scenario = gen_gridmaze(
                cells=tuple(args.cells),
                passage_width_factor=args.width_factor if args.width_factor is not None else 2.1,
                robots=args.robots,
                seed=args.seed or 0,
                dynamics=dynamics,
            )
    except GenerationError as e:
        print(f"❌ Error: {e}")
        return 1
    config.ensure_data_dirs()
    out = Path(args.out) if args.out else config.SCENARIOS_DIR / f"{scenario.name}.json"
    save_scenario(scenario, out)
    print(f"✅ {scenario.name}: {len(scenario.robots)} robots, {len(scenario.workspace.obstacles)} obstacles")
    print(f"   Saved to {out}")
    return 0


def cmd_skeleton(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = config.load_planner_config(args.config)
    cell = args.cell or cfg.cell_for(min(r.radius for r in scenario.robots))
    try:
        sk = build_grid_skeleton(scenario.workspace, cell)
    except SkeletonConstructionError as e:
        print(f"❌ Error: {e}")
        return 1
    save_skeleton(sk, args.out)
    print(f"✅ Skeleton: {len(sk.vertices)} vertices, {len(sk.edges)} edges (cell {cell:g} m)")
    print(f"   Saved to {args.out}")
    return 0


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = _seed_for(args, scenario)
    cfg = config.load_planner_config(args.config, seed=seed, timeout_s=args.timeout_s)

    print("=" * 60)
    print(f"Planning {scenario.name} with {args.method} (seed {seed})")
    print("=" * 60)
    try:
        solution = METHODS[args.method](scenario, cfg)
    except PlanningFailure as e:
        print(f"❌ Planning failed: {e}")
        for line in e.diagnostics:
            print(f"   {line}")
        return 1

    report = validate(solution, scenario, cfg)
    if not report.ok:
        print(f"❌ Solution failed validation: {report.summary()}")
        return 1
    config.ensure_data_dirs()
    out = Path(args.out) if args.out else config.SOLUTIONS_DIR / solution_filename(args.method, scenario.name, seed)
    save_solution(solution, out)
    stats = solution.stats
    print(f"✅ Makespan {solution.makespan_s:.1f} s, planning {stats.get('plan_s', 0.0):.2f} s, "
          f"{stats.get('restarts', 0)} restarts")
    print(f"   Saved to {out}")
    return 0


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        print(f"❌ Unknown methods: {', '.join(unknown)} (choose from {', '.join(METHODS)})")
        return 1
    scenarios = [load_scenario(p) for p in args.scenarios]
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    cfg = config.load_planner_config(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else config.SOLUTIONS_DIR

    print("=" * 60)
    print(f"Benchmark: {len(methods)} methods x {len(scenarios)} scenarios x {len(seeds)} seeds")
    print("=" * 60)
    records = run_batch(methods, scenarios, seeds, timeout=args.timeout_s, workers=args.workers,
                        out_dir=out_dir, csv_path=args.csv, cfg=cfg)
    successes = sum(r.success for r in records)
    print(f"✅ {successes}/{len(records)} runs succeeded; rows written to {args.csv}")
    return 0


def cmd_aggregate(args) -> int:
    rows = aggregate(args.csv)
    header = f"{'method':<15} {'scenario':<32} {'robots':>6} {'runs':>5} {'success':>8} {'plan_s':>16} {'makespan_s':>16}"
    print(header)
    print("-" * len(header))

    def fmt(mean, std):
        return "-" if mean is None else f"{mean:.2f}±{std:.2f}"

    for row in rows:
        print(f"{row['method']:<15} {row['scenario']:<32} {row['robots']:>6} {row['runs']:>5} "
              f"{row['success_rate']:>8.1%} {fmt(row['plan_s_mean'], row['plan_s_std']):>16} "
              f"{fmt(row['makespan_s_mean'], row['makespan_s_std']):>16}")
    return 0


def cmd_render(args) -> int:
    scenario = load_scenario(args.scenario)
    solution = load_solution(args.solution) if args.solution else None
    skeleton = load_skeleton(args.skeleton) if args.skeleton else None
    write_svg(render_svg(scenario, solution, skeleton), args.out)
    print(f"✅ Wrote {args.out}")
    return 0


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    solution = load_solution(args.solution)
    report = validate(solution, scenario, config.load_planner_config(args.config))
    if report.ok:
        print("✅ No violations")
        return 0
    print(f"❌ {report.summary()}")
    for v in report.violations:
        print(f"   t={v.time:.1f}s {v.kind:<10} robots {list(v.robots)}: {v.detail}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Guided-DaSH multi-robot motion planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="Generate a scenario")
    p.add_argument("--kind", choices=["warehouse", "gridmaze"], default="warehouse")
    p.add_argument("--robots", type=int, default=2)
    p.add_argument("--aisles", type=int, help="Warehouse aisles (default: robots/2)")
    p.add_argument("--width-factor", type=float, help="Corridor width in robot diameters")
    p.add_argument("--cells", type=int, nargs=2, default=[4, 4], metavar=("NX", "NY"))
    p.add_argument("--cars", action="store_true", help="Second-order car robots")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="Output JSON (default: scenarios directory)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("skeleton", help="Build a workspace skeleton")
    p.add_argument("--scenario", required=True)
    p.add_argument("--cell", type=float, help="Grid cell size in meters")
    p.add_argument("--config", help="Planner config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_skeleton)

    p = sub.add_parser("plan", help="Plan one scenario")
    p.add_argument("--method", choices=sorted(METHODS), default="wg-dash")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, help="Overrides GDASH_SEED and the scenario seed")
    p.add_argument("--timeout-s", type=float)
    p.add_argument("--config", help="Planner config JSON")
    p.add_argument("--out", help="Solution JSON (default: solutions directory)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="Run a benchmark batch")
    p.add_argument("--methods", default=",".join(METHODS), help="Comma-separated method names")
    p.add_argument("--scenarios", nargs="+", required=True, help="Scenario JSON files")
    p.add_argument("--seeds", type=int, default=config.DEFAULT_BENCH_SEEDS, help="Number of seeds")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--timeout-s", type=float, default=config.DEFAULT_TIMEOUT_S)
    p.add_argument("--workers", type=int, default=config.BENCH_WORKERS)
    p.add_argument("--config", help="Planner config JSON")
    p.add_argument("--csv", default=str(config.RESULTS_DIR / "runs.csv"))
    p.add_argument("--out-dir", help="Directory for validated solutions")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("aggregate", help="Summarize a benchmark CSV")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("render", help="Render SVG")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solution")
    p.add_argument("--skeleton")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="Validate a solution")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--config", help="Planner config JSON (goal tolerance)")
    p.set_defaults(func=cmd_validate)
    return parser


def main():
    args = build_parser().parse_args()

    # Setup logging
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL),
        format=config.LOG_FORMAT
    )
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"❌ Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
