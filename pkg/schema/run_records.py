"""
Relational mirror of runs.jsonl.

One row per RunRecord, written when an experiment sets store_sqlite. The
JSONL log stays the source of truth; this table exists for ad-hoc SQL over
many experiments.
"""

from enum import Enum

from sqlalchemy import Boolean, Column, DateTime, Float, Integer, String, Text, UniqueConstraint, func
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class AgentKind(str, Enum):
    """Exploration strategy that produced a record."""
    ULCB = "gp_ulcb"                       # GP upper/lower confidence bound
    GENETIC = "genetic_algorithm"          # Roulette wheel GA
    GRADIENT = "batch_policy_gradient"     # Tabular softmax policy gradient


class RunRecordRow(Base):
    """
    A single evaluated policy.

    Economics columns are NULL for failed records; c_da_usd_per_daly is also
    NULL for penalised (no DALYs averted) records.
    """
    __tablename__ = "run_records"
    __table_args__ = (UniqueConstraint("experiment", "batch", "proposal", name="uq_run_key"),)

    id = Column(Integer, primary_key=True)
    experiment = Column(String(255), nullable=False, index=True)   # Output directory name
    agent = Column(String(50), nullable=False)

    batch = Column(Integer, nullable=False)
    proposal = Column(Integer, nullable=False)
    status = Column(String(20), nullable=False)

    a_itn = Column(Float, nullable=False)
    a_irs = Column(Float, nullable=False)
    scenario_seed = Column(String(20), nullable=False)   # uint64 does not fit SQLite INTEGER
    replicate_index = Column(Integer, nullable=False)
    stream_seed = Column(String(20), nullable=False)

    reward = Column(Float, nullable=True)
    c_da_usd_per_daly = Column(Float, nullable=True)
    dalys_averted = Column(Float, nullable=True)
    c_int_usd = Column(Float, nullable=True)
    daly = Column(Float, nullable=True)
    hsc_usd = Column(Float, nullable=True)
    penalized = Column(Boolean, nullable=True)
    error = Column(Text, nullable=True)

    wall_time_ms = Column(Float, nullable=False, default=0.0)
    created_at = Column(DateTime, server_default=func.now())
