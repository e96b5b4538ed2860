#!/usr/bin/env python3
"""
MCP Server for the Guided-DaSH planner
Exposes scenario generation, planning and validation to MCP clients (Cursor, Claude Desktop)
"""
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

import config
from benchmark import METHODS, solution_filename
from guided_dash import PlanningFailure, load_solution, save_solution, validate
from scenarios import GenerationError, gen_gridmaze, gen_warehouse, load_scenario, save_scenario

# Setup logging - use absolute path to avoid read-only filesystem errors
LOG_FILE = Path(__file__).parent / "mcp_server.log"
logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL),
    format=config.LOG_FORMAT,
    filename=str(LOG_FILE)
)
logger = logging.getLogger("mcp_server")

# Create MCP server
server = Server("guided-dash-planner")

DIVIDER = "━" * 54


def _text(message: str) -> list[TextContent]:
    return [TextContent(type="text", text=message)]


def _resolve(path: str, default_dir: Path) -> Path:
    """Relative names are looked up in the matching data directory."""
    p = Path(path)
    return p if p.is_absolute() or p.exists() else default_dir / p


@server.list_tools()
async def list_tools() -> list[Tool]:
    """
    List available tools for the MCP client
    """
    return [
        Tool(
            name="generate_scenario",
            description=(
                "Generate a benchmark scenario and save it as JSON in the scenarios directory. "
                "'warehouse' builds shelf rows where vertically aligned robot pairs swap places; "
                "'gridmaze' builds a braided maze with random start and goal cells."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "kind": {"type": "string", "enum": ["warehouse", "gridmaze"]},
                    "robots": {"type": "integer", "minimum": 1, "description": "Number of robots"},
                    "aisles": {"type": "integer", "minimum": 1, "description": "Warehouse aisles (default: robots/2)"},
                    "width_factor": {
                        "type": "number",
                        "description": "Corridor width in robot diameters (default 2.5 warehouse, 2.1 gridmaze)"
                    },
                    "cells": {
                        "type": "array",
                        "items": {"type": "integer"},
                        "description": "Gridmaze cells [nx, ny] (default [4, 4])"
                    },
                    "seed": {"type": "integer", "default": 0},
                    "name": {"type": "string", "description": "Output file name (default: generated name)"}
                },
                "required": ["kind", "robots"]
            }
        ),
        Tool(
            name="plan_scenario",
            description=(
                "Plan a saved scenario with one method (wg-dash, composite-rrt or prioritized). "
                "Validates the result and saves the solution JSON in the solutions directory."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "scenario": {"type": "string", "description": "Scenario file (name or path)"},
                    "method": {"type": "string", "enum": sorted(METHODS), "default": "wg-dash"},
                    "seed": {"type": "integer", "description": "Seed (default: scenario seed)"},
                    "timeout_s": {
                        "type": "number",
                        "description": f"Wall-clock budget (default: {config.DEFAULT_TIMEOUT_S})"
                    }
                },
                "required": ["scenario"]
            }
        ),
        Tool(
            name="validate_solution",
            description="Re-check a saved solution against its scenario and list every violation.",
            inputSchema={
                "type": "object",
                "properties": {
                    "scenario": {"type": "string"},
                    "solution": {"type": "string"}
                },
                "required": ["scenario", "solution"]
            }
        ),
        Tool(
            name="get_planner_config",
            description="Show data directories, budgets and every planner tunable with its default.",
            inputSchema={
                "type": "object",
                "properties": {},
                "required": []
            }
        ),
    ]


def _generate(arguments: Dict[str, Any]) -> str:
    kind = arguments.get("kind")
    robots = int(arguments.get("robots", 2))
    seed = int(arguments.get("seed", 0))
    if kind == "warehouse":
        scenario = gen_warehouse(
            aisles=int(arguments.get("aisles", max(1, robots // 2))),
            aisle_width_factor=float(arguments.get("width_factor", 2.5)),
            robots=robots,
            seed=seed,
        )
    elif kind == "gridmaze":
        cells = arguments.get("cells", [4, 4])
        scenario = gen_gridmaze(cells=tuple(cells), passage_width_factor=float(arguments.get("width_factor", 2.1)),
                                robots=robots, seed=seed)
    else:
        return f"Error: unknown scenario kind {kind!r}"
    config.ensure_data_dirs()
    path = config.SCENARIOS_DIR / (arguments.get("name") or f"{scenario.name}.json")
    save_scenario(scenario, path)
    xmin, ymin, xmax, ymax = scenario.workspace.bounds
    return "\n".join([
        f"Scenario {scenario.name}",
        DIVIDER,
        f"Robots: {len(scenario.robots)}",
        f"Obstacles: {len(scenario.workspace.obstacles)}",
        f"Bounds: [{xmin:g}, {xmax:g}] x [{ymin:g}, {ymax:g}]",
        f"Saved to: {path}",
        DIVIDER,
    ])


def _plan(arguments: Dict[str, Any]) -> str:
    scenario = load_scenario(_resolve(arguments["scenario"], config.SCENARIOS_DIR))
    method = arguments.get("method", "wg-dash")
    if method not in METHODS:
        return f"Error: unknown method {method!r}"
    seed = arguments.get("seed")
    if seed is None:
        seed = config.SEED_OVERRIDE if config.SEED_OVERRIDE is not None else scenario.seed
    cfg = config.load_planner_config(seed=int(seed), timeout_s=arguments.get("timeout_s"))
    try:
        solution = METHODS[method](scenario, cfg)
    except PlanningFailure as e:
        lines = [f"❌ {method} failed on {scenario.name}: {e}", DIVIDER]
        lines.extend(e.diagnostics[-10:])
        return "\n".join(lines)
    report = validate(solution, scenario, cfg)
    config.ensure_data_dirs()
    path = config.SOLUTIONS_DIR / solution_filename(method, scenario.name, int(seed))
    if report.ok:
        save_solution(solution, path)
    stats = solution.stats
    return "\n".join([
        f"{'✅' if report.ok else '❌'} {method} on {scenario.name} (seed {seed})",
        DIVIDER,
        f"Makespan: {solution.makespan_s:.1f} s",
        f"Planning time: {stats.get('plan_s', 0.0):.2f} s",
        f"Restarts: {stats.get('restarts', 0)}",
        f"Validation: {report.summary()}",
        f"Solution: {path if report.ok else 'not saved'}",
        DIVIDER,
    ])


def _validate(arguments: Dict[str, Any]) -> str:
    scenario = load_scenario(_resolve(arguments["scenario"], config.SCENARIOS_DIR))
    solution = load_solution(_resolve(arguments["solution"], config.SOLUTIONS_DIR))
    report = validate(solution, scenario)
    lines = [f"Validation of {scenario.name}: {report.summary()}", DIVIDER]
    for v in report.violations[:50]:
        lines.append(f"  • t={v.time:.1f}s {v.kind} robots {list(v.robots)}: {v.detail}")
    if len(report.violations) > 50:
        lines.append(f"  ... {len(report.violations) - 50} more")
    return "\n".join(lines)


@server.call_tool()
async def call_tool(name: str, arguments: Any) -> list[TextContent]:
    """
    Handle tool calls from MCP clients
    """
    logger.info(f"Tool called: {name} with arguments: {arguments}")
    arguments = arguments or {}
    try:
        if name == "generate_scenario":
            return _text(_generate(arguments))
        elif name == "plan_scenario":
            if not arguments.get("scenario"):
                return _text("Error: 'scenario' parameter is required")
            # Planning is CPU-bound; keep the event loop responsive
            return _text(await asyncio.to_thread(_plan, arguments))
        elif name == "validate_solution":
            if not arguments.get("scenario") or not arguments.get("solution"):
                return _text("Error: 'scenario' and 'solution' parameters are required")
            return _text(_validate(arguments))
        elif name == "get_planner_config":
            summary = dict(config.get_config_summary())
            summary["planner"] = config.PlannerConfig().to_dict()
            return _text(json.dumps(summary, indent=2))
        else:
            return _text(f"Unknown tool: {name}")
    except (GenerationError, ValueError, FileNotFoundError) as e:
        logger.warning(f"Tool {name} rejected input: {e}")
        return _text(f"Error: {e}")
    except Exception as e:
        logger.error(f"Error in tool {name}: {e}", exc_info=True)
        return _text(f"Error executing {name}: {str(e)}")


async def main():
    """
    Main entry point for the MCP server
    """
    logger.info("Starting MCP server for the Guided-DaSH planner...")
    config.ensure_data_dirs()
    scenarios = sorted(config.SCENARIOS_DIR.glob("*.json"))
    if not scenarios:
        logger.warning("No scenarios yet; use generate_scenario or 'python scripts/gdash.py gen'")
        print("⚠️  Warning: No scenarios generated yet!", file=sys.stderr)
    else:
        logger.info(f"Found {len(scenarios)} scenarios in {config.SCENARIOS_DIR}")

    # Run the stdio server
    async with stdio_server() as (read_stream, write_stream):
        logger.info("MCP server running on stdio")
        await server.run(
            read_stream,
            write_stream,
            server.create_initialization_options()
        )


if __name__ == "__main__":
    asyncio.run(main())
