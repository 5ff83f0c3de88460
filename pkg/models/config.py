"""
Experiment configuration models.

An experiment document is validated in one pass against ExperimentConfig;
unknown keys anywhere are rejected.
"""

import os
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.models import CostParams, GridSpec, KernelParams, Policy, ScenarioParams


class GPConfig(BaseModel):
    """Fixed GP hyperparameters shared by every agent and every surface."""
    model_config = ConfigDict(extra="forbid")

    lengthscale: float = Field(0.15, gt=0.0)
    signal_variance: float = Field(1.0, gt=0.0)
    # Likelihood variance, in standardised reward units
    noise_variance: float = Field(0.01, gt=0.0)

    def kernel(self) -> KernelParams:
        return KernelParams(lengthscale=self.lengthscale, signal_variance=self.signal_variance)


class ULCBConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ulcb"] = "ulcb"
    mixing_factor: float = Field(0.75, ge=0.0, le=1.0)
    masking_factor: float = Field(1.0, ge=0.0)
    beta: float = Field(2.0, ge=0.0)


class GAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["genetic"] = "genetic"
    mutation_probability: float = Field(0.3, ge=0.0, le=1.0)
    mutation_sd: float = Field(0.05, ge=0.0)
    max_resample_attempts: int = Field(100, ge=1)


class PGConfig(BaseModel):
    """
    Batch policy gradient over per-candidate logits.

    epsilon is the probability of the GREEDY pick (argmax logit); a uniform
    random candidate is drawn with probability 1 - epsilon. This is the reverse
    of the usual epsilon-greedy convention.
    """
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gradient"] = "gradient"
    epsilon: float = Field(0.5, ge=0.0, le=1.0)
    learning_rate: float = Field(0.05, gt=0.0)
    epochs: int = Field(50, ge=1)


AgentConfig = Annotated[Union[ULCBConfig, GAConfig, PGConfig], Field(discriminator="kind")]


class ExternalAdapterConfig(BaseModel):
    """How to spawn an external simulator for one (policy, seed)."""
    model_config = ConfigDict(extra="forbid")

    command: List[str] = Field(..., min_length=1)
    scenario_path: str
    arguments: List[str] = Field(
        default_factory=lambda: ["{scenario}", "--policy", "{policy}", "--seed", "{seed}"]
    )
    timeout_seconds: float = Field(600.0, gt=0.0)
    max_attempts: int = Field(1, ge=1)
    failure_threshold: int = Field(5, ge=1)


class PenaltyConfig(BaseModel):
    """Reward assigned when a policy averts no DALYs."""
    model_config = ConfigDict(extra="forbid")

    multiplier: float = Field(10.0, gt=0.0)
    floor: float = Field(-1e6, lt=0.0)


def default_workers() -> int:
    return os.cpu_count() or 1


def default_reference_policies() -> Dict[str, Policy]:
    """The district policy in force (56% ITN, 70% IRS) and the expert recommendation (80% ITN, 90% IRS)."""
    return {
        "current": Policy(a_itn=0.56, a_irs=0.70),
        "expert": Policy(a_itn=0.80, a_irs=0.90),
    }


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Optional[ScenarioParams] = None
    external: Optional[ExternalAdapterConfig] = None
    grid: GridSpec = Field(default_factory=GridSpec)
    agent: AgentConfig = Field(default_factory=ULCBConfig)
    gp: GPConfig = Field(default_factory=GPConfig)
    costs: CostParams = Field(default_factory=CostParams)
    penalty: PenaltyConfig = Field(default_factory=PenaltyConfig)
    iterations: int = Field(8, ge=1)
    batch_size: int = Field(64, ge=1)
    master_seed: int = Field(..., ge=0)
    output_dir: str = "results"
    workers: Optional[int] = Field(None, ge=1)
    store_sqlite: bool = False
    reference_policies: Dict[str, Policy] = Field(default_factory=default_reference_policies)
    top_k: int = Field(3, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _require_simulator(cls, data):
        if isinstance(data, dict) and data.get("scenario") is None and data.get("external") is None:
            raise ValueError("scenario: Field required (or provide an 'external' adapter)")
        return data

    @model_validator(mode="after")
    def _check_agent(self) -> "ExperimentConfig":
        if self.scenario is not None and self.external is not None:
            raise ValueError("give either 'scenario' or 'external', not both")
        if isinstance(self.agent, GAConfig) and self.batch_size < 2:
            raise ValueError("the genetic agent needs batch_size >= 2")
        return self

    @property
    def effective_workers(self) -> int:
        """Hardware parallelism (or the configured cap), never wider than a batch."""
        return max(1, min(self.workers or default_workers(), self.batch_size))

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)
