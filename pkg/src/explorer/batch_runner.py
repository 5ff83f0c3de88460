"""
Parallel, deterministic evaluation of one proposed batch.

Surrogate runs are dispatched to a process pool with run_in_executor and
collected with asyncio.gather; external simulator runs are child processes
bounded by a semaphore. Workers only return OutcomeSummary values; economics,
penalties and RunRecords are assembled here, in proposal order.
"""

import asyncio
import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.config import PenaltyConfig
from models.models import CostParams, OutcomeSummary, Policy, RunRecord, SimSeed
from tools.reward_model import RewardTracker, summarize_outcome
from tools.sim_env import ExternalSimulator, Simulator
from utils.errors import BatchAbortedError

logger = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.5


def batch_seed(master_seed: int, batch: int) -> int:
    """Scenario seed shared by every proposal (and the baseline) of one batch."""
    state = np.random.SeedSequence([master_seed, batch]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def proposal_seed(master_seed: int, batch: int, proposal: int) -> SimSeed:
    return SimSeed(scenario_seed=batch_seed(master_seed, batch), replicate_index=proposal)


def _summarize_run(
    simulator: Simulator, policy: Optional[Policy], seed: SimSeed, costs: CostParams
) -> Tuple[OutcomeSummary, float]:
    """Worker entry point: one simulation reduced to its summary, plus wall time in ms."""
    start = time.perf_counter()
    outcome = simulator.baseline(seed) if policy is None else simulator.simulate(policy, seed)
    summary = summarize_outcome(outcome, costs)
    return summary, (time.perf_counter() - start) * 1000.0


class BatchRunner:
    """
    Evaluates batches against one simulator for the lifetime of an experiment.

    The no-benefit penalty tracker and the baseline summaries live here, so
    rewards depend only on the records seen so far in proposal order.
    """

    def __init__(
        self,
        simulator: Simulator,
        costs: CostParams,
        master_seed: int,
        workers: int = 1,
        penalty: Optional[PenaltyConfig] = None,
        agent: str = "",
    ):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.simulator = simulator
        self.costs = costs
        self.master_seed = master_seed
        self.workers = workers
        self.agent = agent
        self.tracker = RewardTracker(penalty)
        self._baselines: Dict[Tuple[str, int], OutcomeSummary] = {}
        self._executor: Optional[Executor] = None
        self._slots: Optional[asyncio.Semaphore] = None

    async def __aenter__(self) -> "BatchRunner":
        if self.workers > 1 and not self.is_external:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        else:
            self._executor = ThreadPoolExecutor(max_workers=1)
        self._slots = asyncio.Semaphore(self.workers)
        return self

    async def __aexit__(self, exc_type, exc, tb) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=exc is not None)
            self._executor = None

    @property
    def is_external(self) -> bool:
        return isinstance(self.simulator, ExternalSimulator)

    async def _run(self, policy: Optional[Policy], seed: SimSeed) -> Tuple[OutcomeSummary, float]:
        if self._executor is None:
            raise RuntimeError("BatchRunner must be used as an async context manager")
        if self.is_external:
            async with self._slots:
                start = time.perf_counter()
                outcome = await self.simulator.arun(policy, seed)
                return summarize_outcome(outcome, self.costs), (time.perf_counter() - start) * 1000.0
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, _summarize_run, self.simulator, policy, seed, self.costs)

    async def baseline(self, seed: SimSeed) -> OutcomeSummary:
        """No-intervention summary, computed once per (scenario, scenario seed)."""
        key = self.simulator.cache_key(seed)
        if key not in self._baselines:
            summary, elapsed = await self._run(None, SimSeed(scenario_seed=seed.scenario_seed))
            logger.debug(
                "baseline scenario_seed=%d daly=%.6g hsc=%.6g wall_ms=%.1f",
                seed.scenario_seed, summary.daly, summary.hsc_usd, elapsed,
            )
            self._baselines[key] = summary
        return self._baselines[key]

    async def evaluate(self, policies: Sequence[Policy], batch: int) -> List[RunRecord]:
        """
        Evaluate a batch of distinct policies; records come back in proposal order.

        A failed simulation yields a failed record. A failed baseline, or more
        than half the proposals failing, raises BatchAbortedError carrying
        every record of the batch.
        """
        if len({(p.a_itn, p.a_irs) for p in policies}) != len(policies):
            raise ValueError("policies within a batch must be distinct")
        seeds = [proposal_seed(self.master_seed, batch, j) for j in range(len(policies))]
        if not policies:
            return []
        try:
            base = await self.baseline(seeds[0])
        except Exception as e:
            error = f"baseline {type(e).__name__}: {e}"
            logger.error("[ERROR] batch %d baseline failed: %s", batch, e)
            failed_records = [
                RunRecord(
                    batch=batch, proposal=j, agent=self.agent, policy=policy, seed=seed,
                    stream_seed=seed.stream_seed(policy), status="failed", error=error,
                )
                for j, (policy, seed) in enumerate(zip(policies, seeds))
            ]
            raise BatchAbortedError(f"batch {batch}: baseline simulation failed: {e}", failed_records) from e

        results = await asyncio.gather(
            *(self._run(policy, seed) for policy, seed in zip(policies, seeds)),
            return_exceptions=True,
        )

        records: List[RunRecord] = []
        for j, (policy, seed, result) in enumerate(zip(policies, seeds, results)):
            common = dict(
                batch=batch, proposal=j, agent=self.agent, policy=policy,
                seed=seed, stream_seed=seed.stream_seed(policy),
            )
            if isinstance(result, BaseException):
                if not isinstance(result, Exception):
                    raise result
                logger.warning("[WARN] batch %d proposal %d (%s) failed: %s", batch, j, policy.label(), result)
                records.append(RunRecord(status="failed", error=f"{type(result).__name__}: {result}", **common))
                continue
            summary, elapsed = result
            report = self.tracker.score(policy, summary, base, self.costs)
            records.append(RunRecord(reward=report.reward, econ=report, wall_time_ms=elapsed, **common))

        failed = sum(1 for r in records if not r.ok)
        if failed > MAX_FAILED_FRACTION * len(records):
            raise BatchAbortedError(f"batch {batch}: {failed}/{len(records)} simulations failed", records)
        return records


def evaluate_batch(
    simulator: Simulator,
    costs: CostParams,
    policies: Sequence[Policy],
    master_seed: int,
    batch: int,
    workers: int = 1,
    penalty: Optional[PenaltyConfig] = None,
    agent: str = "",
) -> List[RunRecord]:
    """Synchronous one-shot evaluation with a fresh penalty tracker."""

    async def _evaluate() -> List[RunRecord]:
        async with BatchRunner(simulator, costs, master_seed, workers, penalty, agent) as runner:
            return await runner.evaluate(policies, batch)

    return asyncio.run(_evaluate())
