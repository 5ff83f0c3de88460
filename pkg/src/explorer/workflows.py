"""
Experiment workflows: the propose / evaluate / record loop and the reports
built from its history.

Loop per batch i = 1..I:
1. The agent proposes B policies from the history so far
2. The batch runner evaluates them in parallel → RunRecords in proposal order
3. Records are appended to the history and flushed to the results store
After the last batch a GP is regressed on every successful record; its
posterior-mean surface gives the top policies and the reference comparison.
"""

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from models.config import ExperimentConfig, GPConfig
from models.models import Policy, RunRecord, TopPolicy
from src.explorer.agent import build_agent
from src.explorer.batch_runner import BatchRunner
from src.explorer.history import History
from tools.data_tools import format_summary, reference_table, summarize_runs, surface_frame, top_table, write_surface_csv
from tools.gaussian_process import GPModel, fit, posterior
from tools.policy_space import CandidateSet, discretize
from tools.results_store import ResultsStore
from tools.sim_env import Simulator, build_simulator
from utils.errors import BatchAbortedError, EmptyRunsError

logger = logging.getLogger(__name__)

# Entropy tag separating the agents' proposal stream from simulation streams
_AGENT_STREAM_TAG = 0x41474E

SURFACE_FILE = "surface.csv"
TOP_FILE = "top_policies.txt"


class ExperimentProgress:
    """Track progress through the batches of one experiment."""

    def __init__(self, iterations: int, batch_size: int):
        self.iterations = iterations
        self.batch_size = batch_size
        self.counts = {
            "batches": 0,
            "evaluated": 0,
            "failed": 0,
            "penalized": 0,
        }
        self.errors: List[Dict[str, Any]] = []

    def update(self, records: Sequence[RunRecord]) -> None:
        """Count one finished (or aborted) batch."""
        self.counts["batches"] += 1
        for record in records:
            if record.ok:
                self.counts["evaluated"] += 1
                if record.econ is not None and record.econ.penalized:
                    self.counts["penalized"] += 1
            else:
                self.add_error(record.batch, record.proposal, record.error or "unknown error")

    def add_error(self, batch: int, proposal: int, error: str) -> None:
        self.errors.append(
            {
                "batch": batch,
                "proposal": proposal,
                "error": error,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )
        self.counts["failed"] += 1

    def get_summary(self) -> Dict[str, Any]:
        planned = self.iterations * self.batch_size
        return {
            "planned": planned,
            "counts": self.counts.copy(),
            "errors": len(self.errors),
            "completion_percentage": (self.counts["evaluated"] / planned * 100) if planned > 0 else 0,
        }


@dataclass
class ExperimentResult:
    history: History
    model: GPModel
    surface: pd.DataFrame
    top: List[TopPolicy]
    references: Dict[str, Dict[str, Any]]
    progress: ExperimentProgress
    agent: str = ""


def agent_rng(master_seed: int) -> np.random.Generator:
    """Proposal stream of the agent; every random choice an agent makes comes from here."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, _AGENT_STREAM_TAG])))


def fit_records(records: Sequence[RunRecord], gp: GPConfig) -> GPModel:
    """GP over every successful record; EmptyRunsError when there is nothing to regress."""
    ok = [r for r in records if r.ok]
    if not ok:
        raise EmptyRunsError("no successful run records to regress")
    return fit([r.policy for r in ok], [r.reward for r in ok], gp.noise_variance, gp.kernel())


def top_policies(
    records: Sequence[RunRecord],
    model: GPModel,
    grid: CandidateSet,
    k: int,
    separation: float,
) -> List[TopPolicy]:
    """
    k posterior-mean maxima over the grid, greedily separated by at least
    `separation`, each snapped to the nearest evaluated record. A record backs
    at most one entry; fewer than k entries are returned with a warning.
    """
    ok = [r for r in records if r.ok]
    if not ok:
        raise EmptyRunsError("no successful run records to rank")
    if k < 1:
        raise ValueError("k must be >= 1")
    evaluated = np.array([r.policy.as_array() for r in ok])
    mean, var = model.predict(grid.coords)
    order = np.argsort(-mean, kind="stable")

    picked: List[int] = []
    used = set()
    tops: List[TopPolicy] = []
    for index in order:
        if len(tops) == k:
            break
        point = grid.coords[index]
        if picked and np.min(np.linalg.norm(grid.coords[picked] - point, axis=1)) < separation:
            continue
        nearest = int(np.argmin(np.linalg.norm(evaluated - point, axis=1)))
        if nearest in used:
            continue
        picked.append(int(index))
        used.add(nearest)
        tops.append(
            TopPolicy(
                rank=len(tops) + 1,
                policy=grid.policy(int(index)),
                post_mean=float(mean[index]),
                post_sd=float(np.sqrt(var[index])),
                nearest=ok[nearest],
            )
        )
    if len(tops) < k:
        logger.warning("[WARN] only %d separable maxima for k=%d", len(tops), k)
    return tops


def reference_posteriors(model: GPModel, references: Dict[str, Policy]) -> Dict[str, Dict[str, Any]]:
    """Posterior mean and sd of the reward at each named reference policy."""
    out = {}
    for name, policy in references.items():
        mean, var = posterior(model, policy)
        out[name] = {"label": policy.label(), "post_mean": mean, "post_sd": float(np.sqrt(var))}
    return out


def _ok_best(history: History) -> str:
    best = history.best_so_far()
    return f"{best[-1]:.4g}" if best and np.isfinite(best[-1]) else "n/a"


async def run_experiment(
    config: ExperimentConfig,
    simulator: Optional[Simulator] = None,
    store: Optional[ResultsStore] = None,
) -> ExperimentResult:
    """
    Run I batches of B proposals and regress the final surface.

    Each batch is flushed to `store` as soon as it is evaluated, so a failure
    part-way through leaves every completed batch (and an aborted batch's
    records) on disk before the error propagates.
    """
    if simulator is None:
        simulator = build_simulator(config.scenario, config.external)
    candidates = discretize(config.grid)
    agent = build_agent(config, candidates)
    rng = agent_rng(config.master_seed)
    history = History()
    progress = ExperimentProgress(config.iterations, config.batch_size)

    workers = config.effective_workers
    print(f"\n[Setup] {agent} on {len(candidates)} candidates, {workers} worker(s)")
    async with BatchRunner(
        simulator, config.costs, config.master_seed, workers, config.penalty, agent=agent.name
    ) as runner:
        for i in range(config.iterations):
            print(f"\n[Batch {i + 1}/{config.iterations}] {agent.log_tag}: evaluating {config.batch_size} policies...")
            policies = agent.propose(history, rng)
            try:
                records = await runner.evaluate(policies, i)
            except BatchAbortedError as e:
                history.extend(e.records)
                progress.update(e.records)
                if store is not None:
                    store.append_batch(e.records)
                print(f"  [ERROR] {e}")
                raise
            history.extend(records)
            progress.update(records)
            if store is not None:
                store.append_batch(records)
            ok = sum(1 for r in records if r.ok)
            print(f"  [OK] {ok}/{len(records)} evaluated, best reward so far {_ok_best(history)}")

    print(f"\n[Surface] Regressing {len(history.successful())} records...")
    model = fit_records(history.records, config.gp)
    surface_df = surface_frame(model, candidates)
    tops = top_policies(history.records, model, candidates, config.top_k, config.gp.lengthscale)
    references = reference_posteriors(model, config.reference_policies)
    print(f"  [OK] Surface over {len(surface_df)} grid points")
    return ExperimentResult(history, model, surface_df, tops, references, progress, agent=agent.name)


def format_report(
    tops: Sequence[TopPolicy],
    references: Dict[str, Dict[str, Any]],
    records: Sequence[RunRecord],
    agent: str,
) -> str:
    """Top-K table, posterior at the reference policies, per-batch summary."""
    sections = [
        top_table(tops, title=f"Top {len(tops)} policies ({agent})"),
        "",
        "Posterior at reference policies",
        reference_table(references),
        "",
        "Per-batch summary",
        format_summary(summarize_runs(records)),
    ]
    return "\n".join(sections) + "\n"


def top_report(result: ExperimentResult) -> str:
    """Contents of top_policies.txt."""
    return format_report(result.top, result.references, result.history.records, result.agent)


def write_outputs(result: ExperimentResult, output_dir: Path) -> Dict[str, Path]:
    """surface.csv and top_policies.txt next to the runs log."""
    output_dir = Path(output_dir)
    surface_path = write_surface_csv(result.surface, output_dir / SURFACE_FILE)
    top_path = output_dir / TOP_FILE
    top_path.write_text(top_report(result), encoding="utf-8")
    return {"surface": surface_path, "top": top_path}
