"""
Economics of a simulated run: DALYs, health-system cost, intervention cost,
cost per DALY averted, and the scalar reward the agents maximise.

DALY = YLL + YLD
    YLD = sum_k Duration(ME_k) * Weight(Age(ME_k))
    YLL = sum_z YLL_z * gamma ** YLL_z,  YLL_z = max(0, LifeExpectancy - Age(D_z))
HSC = TTC + TRC + in-hospital death costs + seek cost per in-hospital episode
C_DA = (HSC_int - HSC_no_int + C_int) / DA,  DA = DALY_no_int - DALY_int
reward = -C_DA
"""

import logging
from typing import Optional, Tuple

import numpy as np

from models.config import PenaltyConfig
from models.models import CostParams, EconReport, OutcomeSummary, Policy
from models.outcome import SimOutcome, as_death_table, as_episode_table
from utils.errors import NonPositiveAverted

logger = logging.getLogger(__name__)


def yld(episodes) -> float:
    """Years lived with disability."""
    table = as_episode_table(episodes)
    return float(np.sum(table.duration_years * table.disability_weight))


def yll_per_death(ages: np.ndarray, params: CostParams) -> np.ndarray:
    years = np.maximum(0.0, params.life_expectancy_years - np.asarray(ages, dtype=float))
    return years * params.discount_factor ** years


def yll(deaths, params: CostParams) -> float:
    """Discounted years of life lost."""
    table = as_death_table(deaths)
    return float(np.sum(yll_per_death(table.age_years, params)))


def daly(outcome: SimOutcome, params: CostParams) -> float:
    return yld(outcome.episodes) + yll(outcome.deaths, params)


def cost_breakdown(outcome: SimOutcome, params: CostParams) -> dict:
    """TTC, TRC, in-hospital death cost and seek cost; out-of-hospital records cost nothing."""
    e, d = outcome.episodes, outcome.deaths
    in_hospital = e.in_hospital.astype(bool)
    return {
        "ttc_usd": float(np.sum(e.treatment_cost_usd[in_hospital])),
        "trc_usd": float(np.sum(e.recovery_cost_usd[in_hospital])),
        "death_cost_usd": float(np.sum(d.hospital_death_cost_usd[d.in_hospital.astype(bool)])),
        "seek_cost_usd": params.hospital_seek_cost_usd * int(in_hospital.sum()),
    }


def health_system_cost(outcome: SimOutcome, params: CostParams) -> float:
    parts = cost_breakdown(outcome, params)
    return parts["ttc_usd"] + parts["trc_usd"] + parts["death_cost_usd"] + parts["seek_cost_usd"]


def summarize_outcome(outcome: SimOutcome, params: CostParams) -> OutcomeSummary:
    """Everything C_DA needs from one arm, small enough to ship between processes."""
    parts = cost_breakdown(outcome, params)
    burden_yld = yld(outcome.episodes)
    burden_yll = yll(outcome.deaths, params)
    return OutcomeSummary(
        yld=burden_yld,
        yll=burden_yll,
        daly=burden_yld + burden_yll,
        hsc_usd=parts["ttc_usd"] + parts["trc_usd"] + parts["death_cost_usd"] + parts["seek_cost_usd"],
        population_size=outcome.population_size,
        episodes=len(outcome.episodes),
        deaths=len(outcome.deaths),
        **parts,
    )


def intervention_cost(policy: Policy, population_size: int, params: CostParams) -> float:
    """Nets and spraying for the covered share of the population."""
    if population_size <= 0:
        raise ValueError("population_size must be positive")
    return population_size * (
        policy.a_itn * params.net_cost_usd_per_person + policy.a_irs * params.irs_cost_usd_per_person
    )


def cost_per_daly_averted(
    intervention: OutcomeSummary,
    baseline: OutcomeSummary,
    c_int: float,
) -> Tuple[float, float]:
    """Returns (C_DA, DA); raises NonPositiveAverted when DA <= 0."""
    averted = baseline.daly - intervention.daly
    if averted <= 0:
        raise NonPositiveAverted(averted)
    return (intervention.hsc_usd - baseline.hsc_usd + c_int) / averted, averted


def reward(c_da: float) -> float:
    return -c_da


class RewardTracker:
    """
    Running state for the no-benefit penalty.

    The penalty is -multiplier x the largest C_DA observed so far (at least 1
    USD per DALY), never below the configured floor. With nothing observed the
    floor applies.
    """

    def __init__(self, penalty: Optional[PenaltyConfig] = None):
        self.penalty = penalty or PenaltyConfig()
        self.largest_cda: Optional[float] = None

    def observe(self, c_da: float) -> None:
        if self.largest_cda is None or c_da > self.largest_cda:
            self.largest_cda = c_da

    def penalty_reward(self) -> float:
        if self.largest_cda is None:
            return self.penalty.floor
        return max(-self.penalty.multiplier * max(self.largest_cda, 1.0), self.penalty.floor)

    def score(
        self,
        policy: Policy,
        intervention: OutcomeSummary,
        baseline: OutcomeSummary,
        params: CostParams,
    ) -> EconReport:
        """Full economics for one arm against its baseline."""
        c_int = intervention_cost(policy, intervention.population_size, params)
        try:
            c_da, averted = cost_per_daly_averted(intervention, baseline, c_int)
            value, penalized = reward(c_da), False
            self.observe(c_da)
        except NonPositiveAverted as e:
            c_da, averted = None, e.dalys_averted
            value, penalized = self.penalty_reward(), True
            logger.warning(
                "[WARN] policy %s averted %.4g DALYs; penalty reward %.4g",
                policy.label(), averted, value,
            )
        return EconReport(
            yld=intervention.yld,
            yll=intervention.yll,
            daly=intervention.daly,
            ttc_usd=intervention.ttc_usd,
            trc_usd=intervention.trc_usd,
            hsc_usd=intervention.hsc_usd,
            c_int_usd=c_int,
            dalys_averted=averted,
            c_da_usd_per_daly=c_da,
            reward=value,
            baseline_daly=baseline.daly,
            baseline_hsc_usd=baseline.hsc_usd,
            population_size=intervention.population_size,
            penalized=penalized,
        )


def recomputed_reward(report: EconReport) -> Optional[float]:
    """Reward implied by a stored report, or None for penalised reports."""
    if report.penalized or report.c_da_usd_per_daly is None:
        return None
    return reward(report.c_da_usd_per_daly)
