"""Common interface of the exploration agents."""

import logging
from typing import List

import numpy as np

from models.models import Policy
from src.explorer.history import History
from tools.policy_space import CandidateSet, reset, sample_random

logger = logging.getLogger(__name__)


class ExplorationAgent:
    """
    Proposes B policies per batch from the accumulated history.

    Agent state (history, logits, GP) only changes between batches; propose
    itself is single-threaded.
    """

    name = "agent"
    log_tag = "AGENT"

    def __init__(self, candidates: CandidateSet, batch_size: int):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.candidates = candidates
        self.batch_size = batch_size

    def initial_batch(self, rng: np.random.Generator) -> List[Policy]:
        """Random discretised actions, the shared starting point of every agent."""
        reset(self.candidates)
        batch = sample_random(self.candidates, self.batch_size, rng)
        logger.debug("[%s] initial random batch of %d", self.log_tag, len(batch))
        return batch

    def propose(self, history: History, rng: np.random.Generator) -> List[Policy]:
        raise NotImplementedError(f"{self.__class__.__name__} must implement propose()")

    def __str__(self) -> str:
        return f"{self.name} (B={self.batch_size})"
