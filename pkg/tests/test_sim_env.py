"""
Tests for the surrogate simulator and the external simulator adapter.

Tests:
1. Seeded reproducibility and stream separation
2. Episode and death statistics of the surrogate
3. Baseline caching
4. External adapter: success, failure, timeout, malformed output, open circuit
"""

import pickle

import numpy as np
import pytest

from models.config import ExternalAdapterConfig
from models.models import Policy, ScenarioParams, SimSeed
from models.outcome import SimOutcome
from tools.sim_env import ExternalSimulator, SurrogateSimulator, build_simulator, run_external, simulate
from utils.errors import ExternalSimError

def test_simulate_is_reproducible():
    theta = ScenarioParams(population_size=2_000)
    seed = SimSeed(scenario_seed=11, replicate_index=2)
    policy = Policy(a_itn=0.56, a_irs=0.70)
    first, second = simulate(theta, policy, seed), simulate(theta, policy, seed)
    assert np.array_equal(first.episodes.age_years, second.episodes.age_years)
    assert np.array_equal(first.episodes.duration_years, second.episodes.duration_years)
    assert np.array_equal(first.deaths.age_years, second.deaths.age_years)
    assert first.to_json() == second.to_json()
    print("  [OK] identical outcome for an identical (scenario, policy, seed)")


def test_streams_are_distinct():
    seed = SimSeed(scenario_seed=5)
    a, b = Policy(a_itn=0.5, a_irs=0.5), Policy(a_itn=0.5, a_irs=0.51)
    seeds = {
        seed.stream_seed(a),
        seed.stream_seed(b),
        seed.stream_seed(None),
        SimSeed(scenario_seed=5, replicate_index=1).stream_seed(a),
        SimSeed(scenario_seed=6).stream_seed(a),
    }
    assert len(seeds) == 5
    assert all(0 <= s < 2**64 for s in seeds)


def test_episode_counts_follow_poisson_rate():
    theta = ScenarioParams(population_size=20_000, horizon_years=1.0)
    policy = Policy(a_itn=1.0, a_irs=1.0)
    expected = 20_000 * 0.35 * theta.transmission_multiplier(policy)
    assert theta.transmission_multiplier(policy) == pytest.approx(0.45 * 0.70)
    outcome = simulate(theta, policy, SimSeed(scenario_seed=1))
    assert abs(len(outcome.episodes) - expected) < 5 * np.sqrt(expected)

    baseline = simulate(theta, None, SimSeed(scenario_seed=1))
    assert abs(len(baseline.episodes) - 7_000) < 5 * np.sqrt(7_000)


REPLICATES = 120


def episode_means(theta: ScenarioParams, policy, replicates: int = REPLICATES):
    """Mean and standard error of the episode count over seeded replicates."""
    counts = np.array([
        len(simulate(theta, policy, SimSeed(scenario_seed=s, replicate_index=1)).episodes)
        for s in range(replicates)
    ])
    return counts.mean(), counts.std(ddof=1) / np.sqrt(replicates)


@pytest.mark.parametrize("axis", ["a_itn", "a_irs"])
def test_mean_episodes_non_increasing_in_coverage(axis):
    theta = ScenarioParams(population_size=500, horizon_years=1.0)
    levels = [0.1, 0.4, 0.7, 1.0]
    means = []
    for level in levels:
        policy = Policy(**{"a_itn": 0.1, "a_irs": 0.1, axis: level})
        mean, se = episode_means(theta, policy)
        expected = 500 * 0.35 * theta.transmission_multiplier(policy)
        assert abs(mean - expected) < 4 * se
        means.append((mean, se))

    for (low_mean, low_se), (high_mean, high_se) in zip(means, means[1:]):
        assert high_mean <= low_mean + 3 * np.hypot(low_se, high_se)
    print(f"  [OK] {axis}: " + ", ".join(f"{m:.1f}" for m, _ in means))


def test_baseline_mean_dominates_every_policy():
    theta = ScenarioParams(population_size=500, horizon_years=1.0)
    base_mean, base_se = episode_means(theta, None)
    for policy in (Policy(a_itn=0.01, a_irs=0.01), Policy(a_itn=0.56, a_irs=0.70), Policy(a_itn=1.0, a_irs=1.0)):
        mean, se = episode_means(theta, policy)
        assert base_mean >= mean - 3 * np.hypot(base_se, se)


def test_baseline_ignores_efficacies():
    seed = SimSeed(scenario_seed=17)
    reference = simulate(ScenarioParams(population_size=1_000), None, seed)
    for itn, irs in [(0.9, 0.3), (0.0, 0.0), (1.0, 1.0)]:
        theta = ScenarioParams(population_size=1_000, itn_efficacy=itn, irs_efficacy=irs)
        assert simulate(theta, None, seed).to_json() == reference.to_json()
        assert SurrogateSimulator(theta).baseline(seed).to_json() == reference.to_json()


def test_surrogate_outcome_invariants():
    theta = ScenarioParams(population_size=5_000, case_fatality_per_episode=1.0)
    outcome = simulate(theta, None, SimSeed(scenario_seed=3))
    e, d = outcome.episodes, outcome.deaths

    # Every episode is fatal, so deaths equal the number of people with at least one episode
    rate = 0.35 * 5.0
    p_any = 1.0 - np.exp(-rate)
    expected = 5_000 * p_any
    assert abs(len(d) - expected) < 5 * np.sqrt(5_000 * p_any * (1 - p_any))
    assert len(d) <= outcome.population_size

    assert np.all(e.duration_years > 0)
    assert np.all((e.age_years >= 0) & (e.age_years <= 100))
    assert np.all(e.treatment_cost_usd[~e.in_hospital] == 0)
    assert np.all(e.recovery_cost_usd[~e.in_hospital] == 0)
    assert np.all(e.treatment_cost_usd[e.in_hospital] == theta.hospital_costs.treatment)
    assert np.all(d.hospital_death_cost_usd[~d.in_hospital] == 0)
    assert set(np.unique(e.disability_weight)) <= {0.21, 0.17, 0.13}


def test_full_efficacy_removes_disease():
    theta = ScenarioParams(population_size=1_000, itn_efficacy=1.0)
    outcome = simulate(theta, Policy(a_itn=1.0, a_irs=1.0), SimSeed(scenario_seed=9))
    assert len(outcome.episodes) == 0 and len(outcome.deaths) == 0


def test_baseline_is_cached_and_not_pickled():
    simulator = SurrogateSimulator(ScenarioParams(population_size=500))
    seed = SimSeed(scenario_seed=21, replicate_index=4)
    first = simulator.baseline(seed)
    assert simulator.baseline(SimSeed(scenario_seed=21, replicate_index=0)) is first
    assert simulator.cache_key(seed) == (simulator.theta_hash, 21)

    clone = pickle.loads(pickle.dumps(simulator))
    assert clone._baselines == {}
    assert clone.baseline(seed).to_json() == first.to_json()


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioParams(age_distribution=[{"lower": 0, "upper": 50, "share": 1.0}])
    with pytest.raises(ValueError):
        ScenarioParams(unknown_field=1)
    assert isinstance(build_simulator(None, None), SurrogateSimulator)


def test_external_simulator_success(external_adapter):
    adapter = external_adapter("ok")
    simulator = build_simulator(None, adapter)
    assert isinstance(simulator, ExternalSimulator)

    policy = Policy(a_itn=0.6, a_irs=0.04)
    seed = SimSeed(scenario_seed=7)
    argv = simulator.argv(policy, seed)
    assert argv[-5:] == [adapter.scenario_path, "--policy", "0.6,0.04", "--seed", str(seed.stream_seed(policy))]
    assert simulator.argv(None, seed)[-3] == "0,0"

    outcome = run_external(adapter, policy, seed)
    assert isinstance(outcome, SimOutcome)
    assert len(outcome.episodes) == 4
    assert outcome.episodes.duration_years[0] == pytest.approx(12.0 / 365.0)

    baseline = simulator.baseline(seed)
    assert len(baseline.episodes) == 10 and len(baseline.deaths) == 1
    print("  [OK] external outcome parsed")


def test_external_simulator_failure_reasons(external_adapter, tmp_path):
    with pytest.raises(ExternalSimError) as info:
        run_external(external_adapter("fail"), Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1))
    assert info.value.reason == "failed"
    assert info.value.returncode == 3
    assert "simulator crashed" in info.value.stderr

    with pytest.raises(ExternalSimError) as info:
        run_external(external_adapter("garbage"), Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1))
    assert info.value.reason == "malformed"

    adapter = external_adapter("sleep", timeout_seconds=0.5)
    with pytest.raises(ExternalSimError) as info:
        run_external(adapter, Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1))
    assert info.value.reason == "timeout"

    adapter = ExternalAdapterConfig(command=[str(tmp_path / "missing-binary")], scenario_path="x")
    with pytest.raises(ExternalSimError) as info:
        run_external(adapter, Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1))
    assert info.value.reason == "failed"


def test_external_circuit_opens_after_repeated_failures(external_adapter):
    simulator = ExternalSimulator(external_adapter("fail", failure_threshold=2))
    policy, seed = Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1)
    for _ in range(2):
        with pytest.raises(ExternalSimError) as info:
            simulator.simulate(policy, seed)
        assert info.value.reason == "failed"
    with pytest.raises(ExternalSimError) as info:
        simulator.simulate(policy, seed)
    assert info.value.reason == "circuit_open"


def test_external_retries_transient_failures(external_adapter):
    simulator = ExternalSimulator(external_adapter("fail", max_attempts=2, failure_threshold=5))
    with pytest.raises(ExternalSimError):
        simulator.simulate(Policy(a_itn=0.5, a_irs=0.5), SimSeed(scenario_seed=1))
    # One breaker failure for the whole retried call
    assert simulator.breaker.failure_count == 1
