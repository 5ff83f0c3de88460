"""
Tests for parallel batch evaluation.

Tests:
1. A batch of one equals scoring the simulation directly
2. Records do not depend on the worker count
3. Per-proposal seeds and the shared baseline
4. Failed proposals, batch abort and the no-benefit penalty
"""

import asyncio
import os
import time

import pytest

from models.models import CostParams, Policy, ScenarioParams
from src.explorer.batch_runner import BatchRunner, batch_seed, evaluate_batch, proposal_seed
from tools.reward_model import RewardTracker, summarize_outcome
from tools.sim_env import ExternalSimulator, SurrogateSimulator
from utils.errors import BatchAbortedError

COSTS = CostParams()
POLICIES = [Policy(a_itn=0.1 * (j + 1), a_irs=0.05 * (j + 1)) for j in range(8)]


def test_single_proposal_matches_direct_scoring():
    simulator = SurrogateSimulator(ScenarioParams(population_size=3_000))
    policy = Policy(a_itn=0.56, a_irs=0.70)
    [record] = evaluate_batch(simulator, COSTS, [policy], master_seed=17, batch=0)

    seed = proposal_seed(17, 0, 0)
    expected = RewardTracker().score(
        policy,
        summarize_outcome(simulator.simulate(policy, seed), COSTS),
        summarize_outcome(simulator.baseline(seed), COSTS),
        COSTS,
    )
    assert record.ok
    assert record.reward == expected.reward
    assert record.econ == expected
    assert record.seed == seed and record.stream_seed == seed.stream_seed(policy)
    print("  [OK] B=1 batch equals direct scoring")


def test_worker_count_does_not_change_records():
    simulator = SurrogateSimulator(ScenarioParams(population_size=2_000))
    serial = evaluate_batch(simulator, COSTS, POLICIES, master_seed=3, batch=2, workers=1)
    parallel = evaluate_batch(simulator, COSTS, POLICIES, master_seed=3, batch=2, workers=4)
    assert [r.model_dump_json() for r in serial] == [r.model_dump_json() for r in parallel]
    assert [r.proposal for r in parallel] == list(range(8))
    print("  [OK] workers=1 and workers=4 give byte-identical records")


def test_seeds_are_per_proposal_and_per_batch():
    simulator = SurrogateSimulator(ScenarioParams(population_size=500))
    records = evaluate_batch(simulator, COSTS, POLICIES, master_seed=9, batch=1)
    assert len({r.stream_seed for r in records}) == len(records)
    assert {r.seed.scenario_seed for r in records} == {batch_seed(9, 1)}
    assert [r.seed.replicate_index for r in records] == list(range(8))
    assert batch_seed(9, 1) != batch_seed(9, 2) != batch_seed(10, 1)
    # Every proposal is scored against one baseline
    assert len({(r.econ.baseline_daly, r.econ.baseline_hsc_usd) for r in records}) == 1


def test_duplicate_and_empty_batches():
    simulator = SurrogateSimulator(ScenarioParams(population_size=100))
    with pytest.raises(ValueError):
        evaluate_batch(simulator, COSTS, [POLICIES[0], POLICIES[0]], master_seed=1, batch=0)
    assert evaluate_batch(simulator, COSTS, [], master_seed=1, batch=0) == []


def test_runner_requires_context():
    runner = BatchRunner(SurrogateSimulator(ScenarioParams(population_size=100)), COSTS, master_seed=1)
    with pytest.raises(RuntimeError):
        asyncio.run(runner.evaluate([POLICIES[0]], 0))
    with pytest.raises(ValueError):
        BatchRunner(runner.simulator, COSTS, master_seed=1, workers=0)


def test_no_benefit_policies_are_penalised():
    # Practically no disease in either arm, so nothing can be averted
    simulator = SurrogateSimulator(ScenarioParams(population_size=1, baseline_episodes_per_person_year=1e-9))
    records = evaluate_batch(simulator, COSTS, POLICIES[:3], master_seed=1, batch=0)
    assert all(r.ok and r.econ.penalized for r in records)
    assert all(r.econ.c_da_usd_per_daly is None for r in records)
    assert [r.reward for r in records] == [-1e6] * 3


def test_partial_external_failure_keeps_batch(external_adapter):
    simulator = ExternalSimulator(external_adapter("partial", failure_threshold=10))
    policies = [Policy(a_itn=0.2, a_irs=0.1), Policy(a_itn=0.95, a_irs=0.1), Policy(a_itn=0.4, a_irs=0.3)]
    records = evaluate_batch(simulator, COSTS, policies, master_seed=5, batch=0, workers=2)
    assert [r.status for r in records] == ["ok", "failed", "ok"]
    failed = records[1]
    assert failed.reward is None and failed.econ is None
    assert failed.error.startswith("ExternalSimError")
    assert records[0].econ.dalys_averted == pytest.approx(records[0].econ.baseline_daly - records[0].econ.daly)


def test_majority_failure_aborts_batch(external_adapter):
    simulator = ExternalSimulator(external_adapter("partial", failure_threshold=10))
    policies = [Policy(a_itn=0.2, a_irs=0.1), Policy(a_itn=0.95, a_irs=0.1), Policy(a_itn=0.97, a_irs=0.3)]
    with pytest.raises(BatchAbortedError) as info:
        evaluate_batch(simulator, COSTS, policies, master_seed=5, batch=4, workers=3)
    records = info.value.records
    assert [r.status for r in records] == ["ok", "failed", "failed"]
    assert all(r.batch == 4 for r in records)


def test_failed_baseline_aborts_batch_with_failed_records(external_adapter):
    simulator = ExternalSimulator(external_adapter("nobaseline", failure_threshold=10))
    policies = [Policy(a_itn=0.2, a_irs=0.1), Policy(a_itn=0.4, a_irs=0.3)]
    with pytest.raises(BatchAbortedError) as info:
        evaluate_batch(simulator, COSTS, policies, master_seed=5, batch=2, workers=2, agent="gp_ulcb")
    assert "baseline" in str(info.value)
    records = info.value.records
    assert [(r.batch, r.proposal, r.status) for r in records] == [(2, 0, "failed"), (2, 1, "failed")]
    assert [r.policy for r in records] == policies
    assert all(r.error.startswith("baseline ExternalSimError") and r.econ is None for r in records)
    assert records[0].seed == proposal_seed(5, 2, 0)


@pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="needs at least 4 cores")
def test_parallel_batch_is_faster():
    simulator = SurrogateSimulator(ScenarioParams(population_size=1_000_000))
    start = time.perf_counter()
    evaluate_batch(simulator, COSTS, POLICIES, master_seed=2, batch=0, workers=1)
    serial = time.perf_counter() - start
    start = time.perf_counter()
    evaluate_batch(simulator, COSTS, POLICIES, master_seed=2, batch=0, workers=4)
    parallel = time.perf_counter() - start
    print(f"  [OK] serial {serial:.2f}s, 4 workers {parallel:.2f}s")
    assert parallel < serial
