"""
Configuration file for the Guided-DaSH planner
All paths and settings are defined here for easy customization
"""
import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv

# Base directory
BASE_DIR = Path(__file__).parent

# Load environment variables from .env file
load_dotenv(BASE_DIR / '.env')

# Data directories
DATA_DIR = Path(os.getenv("GDASH_DATA_DIR", str(BASE_DIR / "data")))
SCENARIOS_DIR = DATA_DIR / "scenarios"
SOLUTIONS_DIR = DATA_DIR / "solutions"
RESULTS_DIR = DATA_DIR / "results"

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Planning budgets
DEFAULT_TIMEOUT_S = float(os.getenv("GDASH_TIMEOUT_S", "600"))
DEFAULT_RESTART_BUDGET = int(os.getenv("GDASH_RESTART_BUDGET", "50"))
CBS_NODE_BUDGET = int(os.getenv("GDASH_CBS_NODE_BUDGET", "10000"))

# Batch runner
BENCH_WORKERS = int(os.getenv("GDASH_BENCH_WORKERS", "1"))
DEFAULT_BENCH_SEEDS = int(os.getenv("GDASH_BENCH_SEEDS", "15"))

# GDASH_SEED overrides the seed stored in a scenario file
_seed_env = os.getenv("GDASH_SEED", "").strip()
SEED_OVERRIDE: Optional[int] = int(_seed_env) if _seed_env else None

# Robots in generated scenarios
DEFAULT_ROBOT_RADIUS = float(os.getenv("GDASH_ROBOT_RADIUS", "0.25"))
DEFAULT_ROBOT_VMAX = float(os.getenv("GDASH_ROBOT_VMAX", "1.0"))

CAPACITY_MODES = ("radius", "passing")
PROHIBITION_MATCH_MODES = ("exact", "subset")


@dataclass
class PlannerConfig:
    """
    Every tunable of the local planners and the orchestrator.

    Fields left as None are relative to the robot radius and are resolved by the
    accessor methods below (see `region_radius_for` and friends).
    """
    seed: int = 0
    dt: float = 0.1                      # seconds between trajectory samples
    step_duration: float = 1.0           # seconds per skeleton search step
    timeout_s: float = DEFAULT_TIMEOUT_S
    restart_budget: int = DEFAULT_RESTART_BUDGET

    # Skeleton / search
    skeleton_cell: Optional[float] = None
    capacity_mode: str = "radius"
    prohibition_match: str = "exact"
    cbs_node_budget: int = CBS_NODE_BUDGET
    mapf_horizon: Optional[int] = None

    # Region-guided RRT
    region_radius: Optional[float] = None
    delta: Optional[float] = None
    advance_step: Optional[float] = None
    advance_threshold: Optional[float] = None
    step_size: Optional[float] = None
    region_goal_tolerance: Optional[float] = None
    goal_tolerance: Optional[float] = None
    n_fail: int = 300
    max_iterations: int = 20000
    goal_bias: float = 0.1
    goal_retry: int = 50

    # Kinodynamic extension
    k_controls: int = 16
    dt_min: float = 0.2
    dt_max: float = 1.0
    max_tree_nodes: int = 5000

    # Baselines
    baseline_max_iterations: int = 200000

    def __post_init__(self):
        if self.dt <= 0 or self.step_duration <= 0:
            raise ValueError("dt and step_duration must be positive")
        if self.capacity_mode not in CAPACITY_MODES:
            raise ValueError(f"capacity_mode must be one of {CAPACITY_MODES}, got {self.capacity_mode!r}")
        if self.prohibition_match not in PROHIBITION_MATCH_MODES:
            raise ValueError(
                f"prohibition_match must be one of {PROHIBITION_MATCH_MODES}, got {self.prohibition_match!r}"
            )
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must lie in [0, 1]")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.n_fail < 1 or self.k_controls < 1 or self.goal_retry < 1:
            raise ValueError("n_fail, k_controls and goal_retry must be >= 1")

    def region_radius_for(self, robot_radius: float) -> float:
        return self.region_radius if self.region_radius is not None else 2.0 * robot_radius

    def delta_for(self, robot_radius: float) -> float:
        # delta equals the region diameter unless set explicitly
        return self.delta if self.delta is not None else 2.0 * self.region_radius_for(robot_radius)

    def advance_step_for(self, robot_radius: float) -> float:
        if self.advance_step is not None:
            return self.advance_step
        return 0.5 * self.region_radius_for(robot_radius)

    def advance_threshold_for(self, robot_radius: float) -> float:
        if self.advance_threshold is not None:
            return self.advance_threshold
        return self.region_radius_for(robot_radius)

    def step_size_for(self, robot_radius: float) -> float:
        return self.step_size if self.step_size is not None else robot_radius

    def cell_for(self, robot_radius: float) -> float:
        return self.skeleton_cell if self.skeleton_cell is not None else 0.5 * robot_radius

    def goal_tolerance_for(self, robot_radius: float) -> float:
        return self.goal_tolerance if self.goal_tolerance is not None else robot_radius

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def planner_config_from_dict(data: Dict[str, Any]) -> PlannerConfig:
    """Build a PlannerConfig from a (possibly partial) dict of overrides."""
    known = {f.name for f in fields(PlannerConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"Unknown planner config keys: {', '.join(unknown)}")
    return PlannerConfig(**data)


def load_planner_config(path: Optional[Union[str, Path]] = None, **overrides) -> PlannerConfig:
    """
    Load planner tunables from a JSON file, then apply keyword overrides.

    Args:
        path: JSON file with any subset of PlannerConfig fields (None = defaults)
        **overrides: Values that win over the file (e.g. seed from the CLI)

    Returns:
        PlannerConfig
    """
    data: Dict[str, Any] = {}
    if path is not None:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError(f"Config file {path} must contain a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return planner_config_from_dict(data)


def get_config_summary():
    """Return a summary of current configuration"""
    return {
        "data_dir": str(DATA_DIR),
        "scenarios_path": str(SCENARIOS_DIR),
        "solutions_path": str(SOLUTIONS_DIR),
        "results_path": str(RESULTS_DIR),
        "log_level": LOG_LEVEL,
        "timeout_s": DEFAULT_TIMEOUT_S,
        "restart_budget": DEFAULT_RESTART_BUDGET,
        "cbs_node_budget": CBS_NODE_BUDGET,
        "bench_workers": BENCH_WORKERS,
        "seed_override": SEED_OVERRIDE,
    }


def ensure_data_dirs():
    """Create the data directories used by the CLI and the MCP server."""
    for directory in (SCENARIOS_DIR, SOLUTIONS_DIR, RESULTS_DIR):
        directory.mkdir(parents=True, exist_ok=True)


if __name__ == "__main__":
    # Print configuration when run directly
    print("Guided-DaSH Configuration")
    print("=" * 50)
    for key, value in get_config_summary().items():
        print(f"{key:.<30} {value}")
    print()
    print("Planner defaults")
    print("-" * 50)
    for key, value in PlannerConfig().to_dict().items():
        print(f"{key:.<30} {value}")
