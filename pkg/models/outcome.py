"""
Columnar simulation outcome.

A surrogate run at population 100,000 produces ~10^5 episodes, so episodes and
deaths are held as parallel numpy columns rather than one model per record.
EpisodeRecord / DeathRecord (models.models) remain the per-record view and the
unit of the external wire format.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from models.models import DeathRecord, EpisodeRecord

DAYS_PER_YEAR = 365.0


def _column(values: Iterable[float], dtype=float) -> np.ndarray:
    return np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=dtype)


@dataclass(frozen=True)
class EpisodeTable:
    """Parallel columns, one row per episode."""

    age_years: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duration_years: np.ndarray = field(default_factory=lambda: np.zeros(0))
    disability_weight: np.ndarray = field(default_factory=lambda: np.zeros(0))
    in_hospital: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    treatment_cost_usd: np.ndarray = field(default_factory=lambda: np.zeros(0))
    recovery_cost_usd: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.age_years.shape[0])

    @classmethod
    def from_records(cls, records: Iterable[EpisodeRecord]) -> "EpisodeTable":
        records = list(records)
        return cls(
            age_years=_column(r.age_years for r in records),
            duration_years=_column(r.duration_years for r in records),
            disability_weight=_column(r.disability_weight for r in records),
            in_hospital=_column((r.in_hospital for r in records), dtype=bool),
            treatment_cost_usd=_column(r.treatment_cost_usd for r in records),
            recovery_cost_usd=_column(r.recovery_cost_usd for r in records),
        )

    def records(self) -> List[EpisodeRecord]:
        return [
            EpisodeRecord(
                age_years=float(self.age_years[i]),
                duration_years=float(self.duration_years[i]),
                disability_weight=float(self.disability_weight[i]),
                in_hospital=bool(self.in_hospital[i]),
                treatment_cost_usd=float(self.treatment_cost_usd[i]),
                recovery_cost_usd=float(self.recovery_cost_usd[i]),
            )
            for i in range(len(self))
        ]


@dataclass(frozen=True)
class DeathTable:
    """Parallel columns, one row per death."""

    age_years: np.ndarray = field(default_factory=lambda: np.zeros(0))
    in_hospital: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    hospital_death_cost_usd: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.age_years.shape[0])

    @classmethod
    def from_records(cls, records: Iterable[DeathRecord]) -> "DeathTable":
        records = list(records)
        return cls(
            age_years=_column(r.age_years for r in records),
            in_hospital=_column((r.in_hospital for r in records), dtype=bool),
            hospital_death_cost_usd=_column(r.hospital_death_cost_usd for r in records),
        )

    def records(self) -> List[DeathRecord]:
        return [
            DeathRecord(
                age_years=float(self.age_years[i]),
                in_hospital=bool(self.in_hospital[i]),
                hospital_death_cost_usd=float(self.hospital_death_cost_usd[i]),
            )
            for i in range(len(self))
        ]


def as_episode_table(episodes) -> EpisodeTable:
    return episodes if isinstance(episodes, EpisodeTable) else EpisodeTable.from_records(episodes)


def as_death_table(deaths) -> DeathTable:
    return deaths if isinstance(deaths, DeathTable) else DeathTable.from_records(deaths)


@dataclass(frozen=True)
class SimOutcome:
    """Everything the reward model consumes from one simulated run."""

    episodes: EpisodeTable
    deaths: DeathTable
    population_size: int

    def __post_init__(self):
        if self.population_size <= 0:
            raise ValueError("population_size must be positive")
        if len(self.deaths) > self.population_size:
            raise ValueError("more deaths than people")

    @classmethod
    def from_records(
        cls,
        episodes: Iterable[EpisodeRecord],
        deaths: Iterable[DeathRecord],
        population_size: int,
    ) -> "SimOutcome":
        return cls(EpisodeTable.from_records(episodes), DeathTable.from_records(deaths), population_size)

    def to_wire(self) -> Dict[str, Any]:
        """External adapter schema (durations in days)."""
        e, d = self.episodes, self.deaths
        return {
            "population_size": int(self.population_size),
            "episodes": [
                {
                    "age": float(e.age_years[i]),
                    "duration_days": float(e.duration_years[i] * DAYS_PER_YEAR),
                    "weight": float(e.disability_weight[i]),
                    "in_hospital": bool(e.in_hospital[i]),
                    "treat_cost": float(e.treatment_cost_usd[i]),
                    "recover_cost": float(e.recovery_cost_usd[i]),
                }
                for i in range(len(e))
            ],
            "deaths": [
                {
                    "age": float(d.age_years[i]),
                    "in_hospital": bool(d.in_hospital[i]),
                    "death_cost": float(d.hospital_death_cost_usd[i]),
                }
                for i in range(len(d))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_wire(), sort_keys=True)

    @classmethod
    def from_wire(cls, payload: Dict[str, Any]) -> "SimOutcome":
        """Parse the external adapter schema; raises ValueError on any violation."""
        try:
            wire = WireOutcome.model_validate(payload)
        except ValidationError as e:
            raise ValueError(str(e)) from e
        episodes = [
            EpisodeRecord(
                age_years=ep.age,
                duration_years=ep.duration_days / DAYS_PER_YEAR,
                disability_weight=ep.weight,
                in_hospital=ep.in_hospital,
                treatment_cost_usd=ep.treat_cost,
                recovery_cost_usd=ep.recover_cost,
            )
            for ep in wire.episodes
        ]
        deaths = [
            DeathRecord(age_years=dz.age, in_hospital=dz.in_hospital, hospital_death_cost_usd=dz.death_cost)
            for dz in wire.deaths
        ]
        return cls.from_records(episodes, deaths, wire.population_size)


class WireEpisode(BaseModel):
    model_config = ConfigDict(extra="forbid")

    age: float = Field(..., ge=0.0)
    duration_days: float = Field(..., gt=0.0)
    weight: float = Field(..., ge=0.0, le=1.0)
    in_hospital: bool
    treat_cost: float = Field(0.0, ge=0.0)
    recover_cost: float = Field(0.0, ge=0.0)


class WireDeath(BaseModel):
    model_config = ConfigDict(extra="forbid")

    age: float = Field(..., ge=0.0)
    in_hospital: bool
    death_cost: float = Field(0.0, ge=0.0)


class WireOutcome(BaseModel):
    model_config = ConfigDict(extra="forbid")

    population_size: int = Field(..., gt=0)
    episodes: List[WireEpisode]
    deaths: List[WireDeath]
