"""Agent construction from a validated experiment config."""

from models.config import ExperimentConfig, GAConfig, PGConfig, ULCBConfig
from src.explorer.base import ExplorationAgent
from src.explorer.genetic_agent.agent import GeneticAgent
from src.explorer.gradient_agent.agent import GradientAgent
from src.explorer.ulcb_agent.agent import ULCBAgent
from tools.policy_space import CandidateSet


def build_agent(config: ExperimentConfig, candidates: CandidateSet) -> ExplorationAgent:
    agent_cfg = config.agent
    if isinstance(agent_cfg, ULCBConfig):
        return ULCBAgent(candidates, agent_cfg, config.gp, config.batch_size)
    if isinstance(agent_cfg, GAConfig):
        floor = (config.grid.bounds_itn[0], config.grid.bounds_irs[0])
        return GeneticAgent(candidates, agent_cfg, config.batch_size, floor)
    if isinstance(agent_cfg, PGConfig):
        return GradientAgent(candidates, agent_cfg, config.batch_size)
    raise ValueError(f"unknown agent kind: {agent_cfg!r}")
