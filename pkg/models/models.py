"""
Domain types shared across the policy explorer.

Everything that crosses a module boundary or lands in a results file is a
pydantic model here; numpy-backed outcome columns live in models/outcome.py.
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

AGE_LIMIT_YEARS = 100.0
SEED_MODULUS = 2**64

# Entropy tags keeping policy and baseline streams apart
_POLICY_STREAM_TAG = 0x504F4C
_BASELINE_STREAM_TAG = 0x42534C


class Policy(BaseModel):
    """A point in the coverage space: fraction covered by nets and by spraying."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    a_itn: float = Field(..., gt=0.0, le=1.0, description="ITN coverage fraction")
    a_irs: float = Field(..., gt=0.0, le=1.0, description="IRS coverage fraction")

    def as_array(self) -> np.ndarray:
        return np.array([self.a_itn, self.a_irs], dtype=float)

    @classmethod
    def from_array(cls, values) -> "Policy":
        return cls(a_itn=float(values[0]), a_irs=float(values[1]))

    def distance(self, other: "Policy") -> float:
        """Unweighted Euclidean distance in coverage units."""
        return math.hypot(self.a_itn - other.a_itn, self.a_irs - other.a_irs)

    def label(self) -> str:
        """Percent label, e.g. {60,4}."""
        return f"{{{round(self.a_itn * 100)},{round(self.a_irs * 100)}}}"


class GridSpec(BaseModel):
    """Regular discretisation of the coverage space."""
    model_config = ConfigDict(extra="forbid")

    resolution_itn: int = Field(100, ge=2)
    resolution_irs: int = Field(100, ge=2)
    bounds_itn: tuple[float, float] = (0.01, 1.0)
    bounds_irs: tuple[float, float] = (0.01, 1.0)

    @field_validator("bounds_itn", "bounds_irs")
    @classmethod
    def _check_bounds(cls, bounds: tuple[float, float]) -> tuple[float, float]:
        lower, upper = bounds
        if not (0.0 < lower < upper <= 1.0):
            raise ValueError(f"bounds must satisfy 0 < lower < upper <= 1, got {bounds}")
        return bounds

    def axes(self) -> list[tuple[float, float, int]]:
        """(lower, upper, resolution) per intervention axis."""
        return [
            (self.bounds_itn[0], self.bounds_itn[1], self.resolution_itn),
            (self.bounds_irs[0], self.bounds_irs[1], self.resolution_irs),
        ]

    def cell_size(self) -> float:
        """Largest spacing between neighbouring grid levels."""
        return max((upper - lower) / (n - 1) for lower, upper, n in self.axes())


class KernelParams(BaseModel):
    """Matern-5/2 kernel parameters; nu is fixed at 5/2."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    lengthscale: float = Field(0.15, gt=0.0)
    signal_variance: float = Field(1.0, gt=0.0)


class CostParams(BaseModel):
    """Unit costs and DALY constants."""
    model_config = ConfigDict(extra="forbid")

    net_cost_usd_per_person: float = Field(8.52, ge=0.0)
    irs_cost_usd_per_person: float = Field(0.73, ge=0.0)
    hospital_seek_cost_usd: float = Field(0.60, ge=0.0)
    discount_factor: float = Field(0.97, gt=0.0, lt=1.0)
    life_expectancy_years: float = Field(46.6, gt=0.0)


class AgeShare(BaseModel):
    """Share of malaria episodes occurring in an age band [lower, upper)."""
    model_config = ConfigDict(extra="forbid")

    lower: float = Field(..., ge=0.0)
    upper: float = Field(..., le=AGE_LIMIT_YEARS)
    share: float = Field(..., ge=0.0, le=1.0)


class DisabilityBand(BaseModel):
    """Disability weight applied to episodes in an age band [lower, upper)."""
    model_config = ConfigDict(extra="forbid")

    lower: float = Field(..., ge=0.0)
    upper: float = Field(..., le=AGE_LIMIT_YEARS)
    weight: float = Field(..., ge=0.0, le=1.0)


class HospitalCosts(BaseModel):
    """In-hospital unit costs, USD."""
    model_config = ConfigDict(extra="forbid")

    treatment: float = Field(4.20, ge=0.0)
    recovery: float = Field(2.10, ge=0.0)
    death: float = Field(25.0, ge=0.0)


def _check_contiguous(bands, name: str) -> None:
    edges = sorted((band.lower, band.upper) for band in bands)
    if not edges or edges[0][0] != 0.0 or edges[-1][1] != AGE_LIMIT_YEARS:
        raise ValueError(f"{name} must cover ages 0-{AGE_LIMIT_YEARS:g}")
    for (lo, hi), (next_lo, _) in zip(edges, edges[1:]):
        if hi != next_lo:
            raise ValueError(f"{name} has a gap or overlap at age {hi:g}")
    if any(lo >= hi for lo, hi in edges):
        raise ValueError(f"{name} has an empty band")


class ScenarioParams(BaseModel):
    """
    Parameterisation of the surrogate epidemic.

    Defaults are illustrative, chosen so the current district policy lands at a
    cost per DALY averted in the tens of USD; they are not a calibration.
    """
    model_config = ConfigDict(extra="forbid")

    population_size: int = Field(100_000, gt=0)
    horizon_years: float = Field(5.0, gt=0.0)
    baseline_episodes_per_person_year: float = Field(0.35, gt=0.0)
    itn_efficacy: float = Field(0.55, ge=0.0, le=1.0)
    irs_efficacy: float = Field(0.30, ge=0.0, le=1.0)
    case_fatality_per_episode: float = Field(0.0035, ge=0.0, le=1.0)
    hospital_seek_probability: float = Field(0.40, ge=0.0, le=1.0)
    mean_episode_duration_days: float = Field(12.0, gt=0.0)
    age_distribution: list[AgeShare] = Field(
        default_factory=lambda: [
            AgeShare(lower=0, upper=5, share=0.45),
            AgeShare(lower=5, upper=15, share=0.30),
            AgeShare(lower=15, upper=100, share=0.25),
        ]
    )
    disability_weights: list[DisabilityBand] = Field(
        default_factory=lambda: [
            DisabilityBand(lower=0, upper=5, weight=0.21),
            DisabilityBand(lower=5, upper=15, weight=0.17),
            DisabilityBand(lower=15, upper=100, weight=0.13),
        ]
    )
    hospital_costs: HospitalCosts = Field(default_factory=HospitalCosts)

    @model_validator(mode="after")
    def _check_tables(self) -> "ScenarioParams":
        _check_contiguous(self.age_distribution, "age_distribution")
        _check_contiguous(self.disability_weights, "disability_weights")
        total = sum(band.share for band in self.age_distribution)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"age_distribution shares must sum to 1, got {total:.6g}")
        return self

    def transmission_multiplier(self, policy: Optional[Policy]) -> float:
        """m = (1 - e_ITN a_ITN)(1 - e_IRS a_IRS); 1 for the no-intervention baseline."""
        if policy is None:
            return 1.0
        return (1.0 - self.itn_efficacy * policy.a_itn) * (1.0 - self.irs_efficacy * policy.a_irs)


class SimSeed(BaseModel):
    """Scenario seed plus replicate index; together with a policy they fix a random stream."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario_seed: int = Field(..., ge=0, lt=SEED_MODULUS)
    replicate_index: int = Field(0, ge=0)

    def stream_seed(self, policy: Optional[Policy]) -> int:
        """Stable 64-bit hash of (scenario_seed, policy, replicate_index)."""
        if policy is None:
            entropy = [self.scenario_seed, self.replicate_index, 0, 0, _BASELINE_STREAM_TAG]
        else:
            entropy = [
                self.scenario_seed,
                self.replicate_index,
                round(policy.a_itn * 1e9),
                round(policy.a_irs * 1e9),
                _POLICY_STREAM_TAG,
            ]
        state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
        return int(state[0])


class EpisodeRecord(BaseModel):
    """One malaria episode."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    age_years: float = Field(..., ge=0.0)
    duration_years: float = Field(..., gt=0.0)
    disability_weight: float = Field(..., ge=0.0, le=1.0)
    in_hospital: bool = False
    treatment_cost_usd: float = Field(0.0, ge=0.0)
    recovery_cost_usd: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _no_cost_outside_hospital(self) -> "EpisodeRecord":
        if not self.in_hospital and (self.treatment_cost_usd or self.recovery_cost_usd):
            raise ValueError("hospital costs must be zero for episodes treated outside hospital")
        return self


class DeathRecord(BaseModel):
    """One malaria death."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    age_years: float = Field(..., ge=0.0)
    in_hospital: bool = False
    hospital_death_cost_usd: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _no_cost_outside_hospital(self) -> "DeathRecord":
        if not self.in_hospital and self.hospital_death_cost_usd:
            raise ValueError("hospital death cost must be zero for deaths outside hospital")
        return self


class OutcomeSummary(BaseModel):
    """Health burden and health-system cost of one simulated run."""
    model_config = ConfigDict(extra="forbid")

    yld: float
    yll: float
    daly: float
    ttc_usd: float
    trc_usd: float
    death_cost_usd: float
    seek_cost_usd: float
    hsc_usd: float
    population_size: int
    episodes: int
    deaths: int


class EconReport(BaseModel):
    """Derived economics for one policy evaluation."""
    model_config = ConfigDict(extra="forbid")

    yld: float
    yll: float
    daly: float
    ttc_usd: float
    trc_usd: float
    hsc_usd: float
    c_int_usd: float
    dalys_averted: float
    c_da_usd_per_daly: Optional[float] = None
    reward: float
    baseline_daly: float
    baseline_hsc_usd: float
    population_size: int
    penalized: bool = False


class RunRecord(BaseModel):
    """One evaluated (policy, seed, outcome) tuple; a line of runs.jsonl."""
    model_config = ConfigDict(extra="forbid")

    batch: int = Field(..., ge=0)
    proposal: int = Field(..., ge=0)
    agent: str = ""
    status: Literal["ok", "failed"] = "ok"
    policy: Policy
    seed: SimSeed
    stream_seed: int = 0
    reward: Optional[float] = None
    econ: Optional[EconReport] = None
    error: Optional[str] = None
    wall_time_ms: float = Field(0.0, exclude=True)

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.reward is not None


class TopPolicy(BaseModel):
    """A separated posterior-mean maximum and the evaluated run nearest to it."""

    rank: int
    policy: Policy
    post_mean: float
    post_sd: float
    nearest: RunRecord
