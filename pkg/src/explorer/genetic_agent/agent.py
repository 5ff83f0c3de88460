import logging
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from models.config import GAConfig
from models.models import Policy
from src.explorer.base import ExplorationAgent
from src.explorer.history import History
from tools.policy_space import CandidateSet
from utils.config import load_config
from utils.errors import DomainError

config = load_config(Path(__file__).parent / "genetic.yaml")

logger = logging.getLogger(__name__)


def fitness_normalize(rewards: Sequence[float]) -> np.ndarray:
    """Min-max scale rewards into [0, 1]; higher reward, higher fitness. Constant input maps to 0.5."""
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        raise DomainError("cannot normalise an empty reward list")
    spread = r.max() - r.min()
    if spread <= 0:
        return np.full(r.shape, 0.5)
    return (r - r.min()) / spread


def roulette_probabilities(fitness: Sequence[float]) -> np.ndarray:
    """p_j = f_j / sum_k f_k; uniform when the wheel has no area or all fitness is equal."""
    f = np.asarray(fitness, dtype=float)
    total = f.sum()
    if total <= 0 or np.all(f == f[0]):
        return np.full(f.shape, 1.0 / f.size)
    return f / total


def roulette_select(probabilities: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.choice(probabilities.size, size=size, p=probabilities)


def _breed(
    parents: np.ndarray,
    probabilities: np.ndarray,
    cfg: GAConfig,
    floor: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    first, second = roulette_select(probabilities, rng, 2)
    from_first = rng.random(parents.shape[1]) < 0.5
    child = np.where(from_first, parents[first], parents[second])
    mutate = rng.random(parents.shape[1]) < cfg.mutation_probability
    child = child + mutate * rng.normal(0.0, cfg.mutation_sd, parents.shape[1])
    return np.clip(child, floor, 1.0)


def ga_next(
    prev_batch: Sequence[Tuple[Policy, float]],
    cfg: GAConfig,
    batch_size: int,
    rng: np.random.Generator,
    floor: Sequence[float] = (0.01, 0.01),
) -> List[Policy]:
    """
    Next generation of batch_size distinct children.

    Parents are drawn by roulette wheel over normalised fitness; each child
    component is copied from a uniformly chosen parent, then perturbed with
    probability mutation_probability by N(0, mutation_sd) and clamped into
    [floor, 1]. Duplicate children are redrawn.
    """
    if len(prev_batch) < 2:
        raise DomainError("the genetic agent needs at least two evaluated parents")
    parents = np.array([policy.as_array() for policy, _ in prev_batch])
    probabilities = roulette_probabilities(fitness_normalize([reward for _, reward in prev_batch]))
    floor = np.asarray(floor, dtype=float)

    children: List[np.ndarray] = []
    seen = set()
    for j in range(batch_size):
        for _ in range(cfg.max_resample_attempts):
            child = _breed(parents, probabilities, cfg, floor, rng)
            if tuple(child) not in seen:
                break
        else:
            # Selection collapsed onto one parent: force distinct children by mutation
            spread = max(cfg.mutation_sd, 0.01)
            for _ in range(cfg.max_resample_attempts):
                child = np.clip(child + rng.normal(0.0, spread, child.size), floor, 1.0)
                if tuple(child) not in seen:
                    break
            else:
                raise DomainError("could not derive a distinct child; widen mutation_sd")
        seen.add(tuple(child))
        children.append(child)
        logger.debug("[GA] child=%d a_itn=%.4f a_irs=%.4f", j, child[0], child[1])
    return [Policy.from_array(child) for child in children]


class GeneticAgent(ExplorationAgent):
    name = config["name"]
    log_tag = config["log_tag"]

    def __init__(self, candidates: CandidateSet, cfg: GAConfig, batch_size: int, floor: Sequence[float]):
        if batch_size < 2:
            raise ValueError("the genetic agent needs batch_size >= 2")
        super().__init__(candidates, batch_size)
        self.cfg = cfg
        self.floor = tuple(floor)

    def propose(self, history: History, rng: np.random.Generator) -> List[Policy]:
        if not history.successful():
            return self.initial_batch(rng)
        parents = [(r.policy, r.reward) for r in history.last_batch()]
        if len(parents) < 2:
            logger.warning("[WARN] fewer than two parents survived the last batch; restarting from random policies")
            return self.initial_batch(rng)
        logger.debug(
            "[GA] batch=%d parents=%d roulette=%s",
            history.next_batch, len(parents),
            np.array2string(roulette_probabilities(fitness_normalize([p[1] for p in parents])), precision=3),
        )
        return ga_next(parents, self.cfg, self.batch_size, rng, self.floor)
