"""Append-only experiment history."""

from typing import Iterable, List, Set, Tuple

import numpy as np

from models.models import Policy, RunRecord


class History:
    """Ordered RunRecords; (batch, proposal) pairs are unique."""

    def __init__(self, records: Iterable[RunRecord] = ()):
        self._records: List[RunRecord] = []
        self._keys: Set[Tuple[int, int]] = set()
        self.extend(records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> List[RunRecord]:
        return list(self._records)

    def append(self, record: RunRecord) -> None:
        key = (record.batch, record.proposal)
        if key in self._keys:
            raise ValueError(f"duplicate record for batch {record.batch}, proposal {record.proposal}")
        self._keys.add(key)
        self._records.append(record)

    def extend(self, records: Iterable[RunRecord]) -> None:
        for record in records:
            self.append(record)

    def successful(self) -> List[RunRecord]:
        return [r for r in self._records if r.ok]

    @property
    def next_batch(self) -> int:
        return max((r.batch for r in self._records), default=-1) + 1

    def batch(self, index: int) -> List[RunRecord]:
        return [r for r in self._records if r.batch == index]

    def last_batch(self) -> List[RunRecord]:
        """Successful records of the most recent batch, in proposal order."""
        if not self._records:
            return []
        latest = self._records[-1].batch
        return [r for r in self.batch(latest) if r.ok]

    def observations(self) -> Tuple[List[Policy], np.ndarray]:
        ok = self.successful()
        return [r.policy for r in ok], np.array([r.reward for r in ok], dtype=float)

    def best_so_far(self) -> List[float]:
        """Running maximum reward in record order (failed records repeat the previous value)."""
        best, out = -np.inf, []
        for record in self._records:
            if record.ok:
                best = max(best, record.reward)
            out.append(best)
        return out
