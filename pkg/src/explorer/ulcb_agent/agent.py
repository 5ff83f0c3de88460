import logging
from pathlib import Path
from typing import List

import numpy as np

from models.config import GPConfig, ULCBConfig
from models.models import Policy
from src.explorer.base import ExplorationAgent
from src.explorer.history import History
from tools.gaussian_process import GPModel, fit
from tools.policy_space import CandidateSet, mask_near, reset
from utils.config import load_config
from utils.errors import DomainError

config = load_config(Path(__file__).parent / "ulcb.yaml")

logger = logging.getLogger(__name__)


def fit_history(history: History, gp: GPConfig) -> GPModel:
    """GP over every successful record; the prior when there is none."""
    policies, rewards = history.observations()
    if not policies:
        return GPModel.prior(gp.kernel(), gp.noise_variance)
    return fit(policies, rewards, gp.noise_variance, gp.kernel())


def ulcb_propose(
    history: History,
    candidates: CandidateSet,
    cfg: ULCBConfig,
    gp: GPConfig,
    batch_size: int,
    batch_index: int = 0,
) -> List[Policy]:
    """
    One GP-ULCB batch.

    Picks j = 0..B-1: while j < B * f_m take argmax of mu + beta*sigma over the
    available candidates, afterwards argmin of mu - beta*sigma. Each pick masks
    every candidate closer than l * f_c. Upper and lower picks share one mask.
    Ties go to the lowest candidate index.
    """
    if batch_size > len(candidates):
        raise DomainError(f"batch of {batch_size} exceeds {len(candidates)} candidates")
    reset(candidates)
    model = fit_history(history, gp)
    mean, var = model.predict(candidates.coords)
    sd = np.sqrt(var)
    upper = mean + cfg.beta * sd
    lower = mean - cfg.beta * sd
    radius = gp.lengthscale * cfg.masking_factor

    chosen: List[int] = []
    for j in range(batch_size):
        if candidates.available_count == 0:
            logger.warning(
                "[WARN] batch %d: masking exhausted the candidates after %d picks; un-masking",
                batch_index, j,
            )
            reset(candidates)
            candidates.remove(chosen)
        if j < batch_size * cfg.mixing_factor:
            branch = "ucb"
            index = int(np.argmax(np.where(candidates.mask, upper, -np.inf)))
        else:
            branch = "lcb"
            index = int(np.argmin(np.where(candidates.mask, lower, np.inf)))
        chosen.append(index)
        policy = candidates.policy(index)
        masked = candidates.remove([index]) + mask_near(candidates, policy, radius)
        logger.debug(
            "[ULCB] batch=%d j=%d branch=%s a_itn=%.4f a_irs=%.4f mean=%.6g sd=%.6g masked=%d remaining=%d",
            batch_index, j, branch, policy.a_itn, policy.a_irs,
            mean[index], sd[index], masked, candidates.available_count,
        )
    return [candidates.policy(i) for i in chosen]


class ULCBAgent(ExplorationAgent):
    name = config["name"]
    log_tag = config["log_tag"]

    def __init__(self, candidates: CandidateSet, cfg: ULCBConfig, gp: GPConfig, batch_size: int):
        super().__init__(candidates, batch_size)
        self.cfg = cfg
        self.gp = gp

    def propose(self, history: History, rng: np.random.Generator) -> List[Policy]:
        if not history.successful():
            return self.initial_batch(rng)
        return ulcb_propose(history, self.candidates, self.cfg, self.gp, self.batch_size, history.next_batch)
