"""
Simulation environment.

SurrogateSimulator is a seedable stochastic stand-in for a full transmission
model: per person, episodes ~ Poisson(lambda0 * horizon * m(policy)) with
m = (1 - e_ITN a_ITN)(1 - e_IRS a_IRS). ExternalSimulator spawns a real
simulator through a small command-line contract and parses one JSON outcome
from its standard output.

Random streams use numpy's counter-based Philox generator keyed by
SimSeed.stream_seed, so a (scenario, policy, seed) triple reproduces the same
outcome on any platform and in any worker.
"""

import asyncio
import hashlib
import json
import logging
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np

from models.config import ExternalAdapterConfig
from models.models import Policy, ScenarioParams, SimSeed
from models.outcome import DAYS_PER_YEAR, DeathTable, EpisodeTable, SimOutcome
from utils.errors import ExternalSimError
from utils.resilience import CircuitBreaker, CircuitBreakerOpenError, retry_with_backoff

logger = logging.getLogger(__name__)

STDERR_TAIL_CHARS = 2000


class Simulator(Protocol):
    """Anything that turns a policy and a seed into a SimOutcome."""

    def simulate(self, policy: Policy, seed: SimSeed) -> SimOutcome: ...

    def baseline(self, seed: SimSeed) -> SimOutcome: ...

    def cache_key(self, seed: SimSeed) -> Tuple[str, int]: ...


def stream(seed: SimSeed, policy: Optional[Policy]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed.stream_seed(policy)))


def scenario_hash(theta: ScenarioParams) -> str:
    return hashlib.sha256(theta.model_dump_json().encode("utf-8")).hexdigest()


def _band_lookup(ages: np.ndarray, bands, attribute: str) -> np.ndarray:
    ordered = sorted(bands, key=lambda band: band.lower)
    uppers = np.array([band.upper for band in ordered])
    values = np.array([getattr(band, attribute) for band in ordered])
    slot = np.minimum(np.searchsorted(uppers, ages, side="right"), len(ordered) - 1)
    return values[slot]


def simulate(theta: ScenarioParams, policy: Optional[Policy], seed: SimSeed) -> SimOutcome:
    """
    One surrogate run. policy=None simulates no intervention (m = 1).

    Each episode draws an age from the episode age distribution, a duration
    ~ Exponential(mean), a hospital flag ~ Bernoulli(seek probability) and a
    fatality flag ~ Bernoulli(case fatality). A person dies at most once: the
    first fatal episode in that person's episode list.
    """
    rng = stream(seed, policy)
    population = theta.population_size
    rate = theta.baseline_episodes_per_person_year * theta.horizon_years * theta.transmission_multiplier(policy)

    counts = rng.poisson(rate, size=population)
    owners = np.repeat(np.arange(population), counts)
    n = owners.size

    bands = sorted(theta.age_distribution, key=lambda band: band.lower)
    shares = np.array([band.share for band in bands])
    band_of = rng.choice(len(bands), size=n, p=shares / shares.sum())
    lowers = np.array([band.lower for band in bands])[band_of]
    uppers = np.array([band.upper for band in bands])[band_of]
    ages = lowers + (uppers - lowers) * rng.random(n)

    durations = rng.exponential(theta.mean_episode_duration_days, size=n) / DAYS_PER_YEAR
    # Exponential draws of exactly zero are not valid episode lengths
    durations = np.maximum(durations, np.finfo(float).tiny)
    weights = _band_lookup(ages, theta.disability_weights, "weight")
    in_hospital = rng.random(n) < theta.hospital_seek_probability
    fatal = rng.random(n) < theta.case_fatality_per_episode

    costs = theta.hospital_costs
    episodes = EpisodeTable(
        age_years=ages,
        duration_years=durations,
        disability_weight=weights,
        in_hospital=in_hospital,
        treatment_cost_usd=np.where(in_hospital, costs.treatment, 0.0),
        recovery_cost_usd=np.where(in_hospital, costs.recovery, 0.0),
    )

    fatal_idx = np.flatnonzero(fatal)
    _, first = np.unique(owners[fatal_idx], return_index=True)
    death_idx = fatal_idx[first]
    died_in_hospital = in_hospital[death_idx]
    deaths = DeathTable(
        age_years=ages[death_idx],
        in_hospital=died_in_hospital,
        hospital_death_cost_usd=np.where(died_in_hospital, costs.death, 0.0),
    )
    return SimOutcome(episodes=episodes, deaths=deaths, population_size=population)


class SurrogateSimulator:
    """Built-in stochastic surrogate; picklable so it can be shipped to worker processes."""

    def __init__(self, theta: ScenarioParams):
        self.theta = theta
        self.theta_hash = scenario_hash(theta)
        self._baselines: Dict[Tuple[str, int], SimOutcome] = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_baselines"] = {}
        return state

    def simulate(self, policy: Policy, seed: SimSeed) -> SimOutcome:
        return simulate(self.theta, policy, seed)

    def cache_key(self, seed: SimSeed) -> Tuple[str, int]:
        return self.theta_hash, seed.scenario_seed

    def baseline(self, seed: SimSeed) -> SimOutcome:
        """No-intervention arm, cached per (scenario hash, scenario seed)."""
        key = self.cache_key(seed)
        if key not in self._baselines:
            self._baselines[key] = simulate(self.theta, None, SimSeed(scenario_seed=seed.scenario_seed))
        return self._baselines[key]


def _policy_argument(policy: Optional[Policy]) -> str:
    if policy is None:
        return "0,0"
    return f"{policy.a_itn!r},{policy.a_irs!r}"


class ExternalSimulator:
    """
    Adapter around an external simulator process.

    The child receives the scenario path, --policy a_itn,a_irs and --seed N
    (the derived stream seed) and must print exactly one JSON object:
    {population_size, episodes:[{age, duration_days, weight, in_hospital,
    treat_cost, recover_cost}], deaths:[{age, in_hospital, death_cost}]}.
    The no-intervention baseline is requested as --policy 0,0.
    """

    def __init__(self, adapter: ExternalAdapterConfig):
        self.adapter = adapter
        self.breaker = CircuitBreaker(
            failure_threshold=adapter.failure_threshold,
            recovery_timeout=adapter.timeout_seconds,
            expected_exception=ExternalSimError,
            name="external-simulator",
        )
        self._baselines: Dict[Tuple[str, int], SimOutcome] = {}
        self._scenario_key = hashlib.sha256(
            json.dumps(adapter.model_dump(), sort_keys=True).encode("utf-8")
        ).hexdigest()

    def argv(self, policy: Optional[Policy], seed: SimSeed) -> List[str]:
        values = {
            "scenario": self.adapter.scenario_path,
            "policy": _policy_argument(policy),
            "seed": str(seed.stream_seed(policy)),
        }
        return list(self.adapter.command) + [arg.format(**values) for arg in self.adapter.arguments]

    async def _spawn(self, argv: List[str]) -> SimOutcome:
        try:
            process = await asyncio.create_subprocess_exec(
                *argv, stdout=asyncio.subprocess.PIPE, stderr=asyncio.subprocess.PIPE
            )
        except OSError as e:
            raise ExternalSimError(f"cannot start simulator: {e}", reason="failed", command=argv) from e
        try:
            stdout, stderr = await asyncio.wait_for(process.communicate(), timeout=self.adapter.timeout_seconds)
        except asyncio.TimeoutError:
            process.kill()
            await process.wait()
            raise ExternalSimError(
                f"simulator exceeded {self.adapter.timeout_seconds:g}s", reason="timeout", command=argv
            )
        stderr_tail = stderr.decode("utf-8", errors="replace")[-STDERR_TAIL_CHARS:]
        if process.returncode != 0:
            raise ExternalSimError(
                "simulator exited with an error", reason="failed", command=argv,
                returncode=process.returncode, stderr=stderr_tail,
            )
        try:
            payload = json.loads(stdout.decode("utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("expected one JSON object")
            return SimOutcome.from_wire(payload)
        except ValueError as e:
            raise ExternalSimError(
                f"malformed simulator output: {str(e)[:500]}", reason="malformed", command=argv,
                returncode=process.returncode, stderr=stderr_tail,
            ) from e

    async def arun(self, policy: Optional[Policy], seed: SimSeed) -> SimOutcome:
        argv = self.argv(policy, seed)
        attempt = retry_with_backoff(
            max_attempts=self.adapter.max_attempts,
            initial_delay=1.0,
            max_delay=30.0,
            retry_on=(ExternalSimError,),
            retry_if=lambda e: getattr(e, "reason", "") in ("timeout", "failed"),
        )(self._spawn)
        try:
            return await self.breaker.call_async(attempt, argv)
        except CircuitBreakerOpenError as e:
            raise ExternalSimError(str(e), reason="circuit_open", command=argv) from e

    def cache_key(self, seed: SimSeed) -> Tuple[str, int]:
        return self._scenario_key, seed.scenario_seed

    async def abaseline(self, seed: SimSeed) -> SimOutcome:
        key = self.cache_key(seed)
        if key not in self._baselines:
            self._baselines[key] = await self.arun(None, SimSeed(scenario_seed=seed.scenario_seed))
        return self._baselines[key]

    def simulate(self, policy: Policy, seed: SimSeed) -> SimOutcome:
        return asyncio.run(self.arun(policy, seed))

    def baseline(self, seed: SimSeed) -> SimOutcome:
        return asyncio.run(self.abaseline(seed))


def run_external(adapter: ExternalAdapterConfig, policy: Policy, seed: SimSeed) -> SimOutcome:
    """Spawn the configured external simulator once and parse its outcome."""
    return ExternalSimulator(adapter).simulate(policy, seed)


def build_simulator(scenario: Optional[ScenarioParams], external: Optional[ExternalAdapterConfig]) -> Simulator:
    if external is not None:
        return ExternalSimulator(external)
    return SurrogateSimulator(scenario or ScenarioParams())
