import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from models.config import PGConfig
from models.models import Policy
from src.explorer.base import ExplorationAgent
from src.explorer.genetic_agent.agent import fitness_normalize
from src.explorer.history import History
from tools.policy_space import CandidateSet, reset
from utils.config import load_config
from utils.errors import DomainError, NumericalError

config = load_config(Path(__file__).parent / "gradient.yaml")

logger = logging.getLogger(__name__)


def pg_loss(logits: np.ndarray, indices: Sequence[int], weights: Sequence[float]) -> float:
    """L(w) = -sum_j g_j log softmax(w)[idx_j]."""
    log_p = log_softmax(logits)
    return float(-np.sum(np.asarray(weights, dtype=float) * log_p[np.asarray(indices, dtype=int)]))


def pg_gradient(logits: np.ndarray, indices: Sequence[int], weights: Sequence[float]) -> np.ndarray:
    """dL/dw = (sum_j g_j) softmax(w) - sum_j g_j e_{idx_j}."""
    g = np.asarray(weights, dtype=float)
    sampled = np.bincount(np.asarray(indices, dtype=int), weights=g, minlength=logits.size)
    return g.sum() * softmax(logits) - sampled


def pg_train(
    logits: np.ndarray,
    indices: Sequence[int],
    rewards: Sequence[float],
    cfg: PGConfig,
    normalize: bool = True,
) -> np.ndarray:
    """
    Gradient descent on the negative log-likelihood of the batch-normalised rewards.

    Unsampled candidates only move through the softmax normaliser. Returns new
    logits; the input array is left untouched.
    """
    idx = np.asarray(indices, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= logits.size):
        raise DomainError("candidate index out of range")
    weights = fitness_normalize(rewards) if normalize else np.asarray(rewards, dtype=float)
    w = np.array(logits, dtype=float, copy=True)
    for _ in range(cfg.epochs):
        grad = pg_gradient(w, idx, weights)
        if not np.all(np.isfinite(grad)):
            raise NumericalError("non-finite policy gradient")
        w -= cfg.learning_rate * grad
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite logits after update")
    return w


def pg_propose(
    logits: np.ndarray,
    candidates: CandidateSet,
    cfg: PGConfig,
    batch_size: int,
    rng: np.random.Generator,
    batch_index: int = 0,
) -> List[Policy]:
    """
    Sequential picks without replacement: with probability epsilon the top
    logit among the remaining candidates (lowest index on ties), otherwise a
    uniform random remaining candidate.
    """
    remaining = candidates.snapshot()
    if remaining.available_count < batch_size:
        raise DomainError(f"need {batch_size} available candidates, have {remaining.available_count}")
    chosen = []
    for j in range(batch_size):
        if rng.random() < cfg.epsilon:
            index, branch = int(np.argmax(np.where(remaining.mask, logits, -np.inf))), "greedy"
        else:
            index, branch = int(rng.choice(remaining.available_indices())), "random"
        remaining.remove([index])
        chosen.append(index)
        logger.debug(
            "[PG] batch=%d j=%d branch=%s index=%d logit=%.6g", batch_index, j, branch, index, logits[index]
        )
    return [candidates.policy(i) for i in chosen]


class GradientAgent(ExplorationAgent):
    name = config["name"]
    log_tag = config["log_tag"]

    def __init__(self, candidates: CandidateSet, cfg: PGConfig, batch_size: int):
        super().__init__(candidates, batch_size)
        self.cfg = cfg
        self.logits = np.zeros(len(candidates))

    def _candidate_index(self, policy: Policy) -> int:
        try:
            return self.candidates.index_of(policy)
        except KeyError:
            return self.candidates.nearest_index(policy)

    def propose(self, history: History, rng: np.random.Generator) -> List[Policy]:
        if not history.successful():
            return self.initial_batch(rng)
        batch = history.last_batch()
        if batch:
            indices = [self._candidate_index(r.policy) for r in batch]
            self.logits = pg_train(self.logits, indices, [r.reward for r in batch], self.cfg)
        reset(self.candidates)
        return pg_propose(self.logits, self.candidates, self.cfg, self.batch_size, rng, history.next_batch)

    def top_candidate(self) -> Policy:
        return self.candidates.policy(int(np.argmax(self.logits)))
