"""Kicked-top experiments.

Named, configuration-driven runs that write tables and a summary per run.
"""

from .config import RunConfig, resolve_config
from .core import EXPERIMENTS, RunResult, run_experiment
from .io import write_result

__all__ = [
    "EXPERIMENTS",
    "RunConfig",
    "RunResult",
    "resolve_config",
    "run_experiment",
    "write_result",
]
