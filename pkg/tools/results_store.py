"""
Experiment output files.

runs.jsonl    one RunRecord per line, flushed after every batch
timings.csv   batch, proposal, wall_time_ms (kept out of runs.jsonl so the log is reproducible)
results.db    optional SQLAlchemy mirror of the records (table run_records)
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ValidationError
from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker

from models.config import ExperimentConfig
from models.models import RunRecord
from schema.run_records import AgentKind, Base, RunRecordRow
from tools.reward_model import recomputed_reward
from utils.config import format_validation_error, load_model
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

RUNS_FILE = "runs.jsonl"
TIMINGS_FILE = "timings.csv"
DATABASE_FILE = "results.db"
RESOLVED_CONFIG_FILE = "resolved_config.json"


def _row(record: RunRecord, experiment: str) -> RunRecordRow:
    econ = record.econ
    return RunRecordRow(
        experiment=experiment,
        agent=AgentKind(record.agent).value if record.agent else "",
        batch=record.batch,
        proposal=record.proposal,
        status=record.status,
        a_itn=record.policy.a_itn,
        a_irs=record.policy.a_irs,
        scenario_seed=str(record.seed.scenario_seed),
        replicate_index=record.seed.replicate_index,
        stream_seed=str(record.stream_seed),
        reward=record.reward,
        c_da_usd_per_daly=econ.c_da_usd_per_daly if econ else None,
        dalys_averted=econ.dalys_averted if econ else None,
        c_int_usd=econ.c_int_usd if econ else None,
        daly=econ.daly if econ else None,
        hsc_usd=econ.hsc_usd if econ else None,
        penalized=econ.penalized if econ else None,
        error=record.error,
        wall_time_ms=record.wall_time_ms,
    )


class ResultsStore:
    """
    Append-only writer for one experiment's output directory.

    Use as a context manager; every append_batch call is durable on return.
    """

    def __init__(self, output_dir: Union[str, Path], store_sqlite: bool = False):
        self.output_dir = Path(output_dir)
        self.store_sqlite = store_sqlite
        self.experiment = self.output_dir.resolve().name
        self._runs = None
        self._session: Optional[Session] = None
        self._timings_written = False

    @property
    def runs_path(self) -> Path:
        return self.output_dir / RUNS_FILE

    @property
    def timings_path(self) -> Path:
        return self.output_dir / TIMINGS_FILE

    def __enter__(self) -> "ResultsStore":
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._runs = open(self.runs_path, "w", encoding="utf-8", newline="\n")
        if self.timings_path.exists():
            self.timings_path.unlink()
        if self.store_sqlite:
            db_path = self.output_dir / DATABASE_FILE
            engine = create_engine(f"sqlite:///{db_path.as_posix()}", echo=False)
            Base.metadata.create_all(engine)
            self._session = sessionmaker(bind=engine)()
            # A rerun into the same directory replaces this experiment's rows
            self._session.query(RunRecordRow).filter(RunRecordRow.experiment == self.experiment).delete()
            self._session.commit()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def append_batch(self, records: Sequence[RunRecord]) -> None:
        if self._runs is None:
            raise RuntimeError("ResultsStore is not open")
        for record in records:
            self._runs.write(record.model_dump_json() + "\n")
        self._runs.flush()

        timings = pd.DataFrame(
            [(r.batch, r.proposal, r.wall_time_ms) for r in records],
            columns=["batch", "proposal", "wall_time_ms"],
        )
        timings.to_csv(self.timings_path, mode="a", header=not self._timings_written, index=False)
        self._timings_written = True

        if self._session is not None:
            try:
                self._session.add_all([_row(r, self.experiment) for r in records])
                self._session.commit()
            except Exception as e:
                self._session.rollback()
                logger.error("[ERROR] could not mirror %d records to %s: %s", len(records), DATABASE_FILE, e)
                raise

    def close(self) -> None:
        if self._runs is not None:
            self._runs.close()
            self._runs = None
        if self._session is not None:
            self._session.close()
            self._session = None


def write_resolved_config(config: BaseModel, output_dir: Union[str, Path]) -> Path:
    """Validated config with every default filled in."""
    path = Path(output_dir) / RESOLVED_CONFIG_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def runs_directory(path: Union[str, Path]) -> Path:
    """Directory holding a runs log, given the log or the directory itself."""
    path = Path(path)
    return path if path.is_dir() else path.parent


def load_resolved_config(runs_path: Union[str, Path]) -> Optional[ExperimentConfig]:
    """The resolved_config.json written next to a runs log by explore, or None."""
    path = runs_directory(runs_path) / RESOLVED_CONFIG_FILE
    if not path.exists():
        return None
    return load_model(ExperimentConfig, path)


def load_runs(path: Union[str, Path]) -> List[RunRecord]:
    """Parse a runs.jsonl file (or a directory holding one); blank lines are skipped."""
    path = Path(path)
    if path.is_dir():
        path = path / RUNS_FILE
    if not path.exists():
        raise ConfigurationError(f"Runs log not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = RunRecord.model_validate_json(line)
            except ValidationError as e:
                lines = format_validation_error(e)
                raise ConfigurationError(
                    f"{path}:{line_number}: not a run record:\n  " + "\n  ".join(lines),
                    fields=[line.split(":")[0] for line in lines],
                ) from e
            _check_reward(record, path, line_number)
            records.append(record)
    return records


def _check_reward(record: RunRecord, path: Path, line_number: int) -> None:
    """The stored reward must be the one the economics imply."""
    if record.econ is None:
        return
    expected = recomputed_reward(record.econ)
    if expected is None:
        expected = record.econ.reward
    if record.reward != expected:
        raise ConfigurationError(
            f"{path}:{line_number}: reward {record.reward} does not match its economics ({expected})",
            fields=["reward"],
        )
