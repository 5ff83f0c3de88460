from .agent import build_agent
from .batch_runner import BatchRunner, evaluate_batch
from .history import History
from .workflows import (
    ExperimentProgress,
    ExperimentResult,
    fit_records,
    run_experiment,
    top_policies,
)

__all__ = [
    "build_agent",
    "BatchRunner",
    "evaluate_batch",
    "History",
    "ExperimentProgress",
    "ExperimentResult",
    "fit_records",
    "run_experiment",
    "top_policies",
]
