"""
Policy domain: regular discretisation, random draws, and distance masking.

Candidates are stored as an (n, d) coordinate array in row-major grid order;
every tie-break elsewhere refers to this order.
"""

import logging
from typing import Iterable, List, Mapping, Union

import numpy as np

from models.models import GridSpec, Policy
from utils.config import validate_model
from utils.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)


class CandidateSet:
    """
    Ordered candidate policies with an available/removed mask.

    Single writer: only the agent loop masks and resets. Points are never
    created or dropped, so available + removed always equals the original set.
    """

    def __init__(self, coords: np.ndarray):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2:
            raise ValueError("coords must be a 2-D array")
        if len(np.unique(coords, axis=0)) != len(coords):
            raise ValueError("candidate points must be unique")
        coords.setflags(write=False)
        self.coords = coords
        self.mask = np.ones(len(coords), dtype=bool)
        self._index = {tuple(row): i for i, row in enumerate(coords.tolist())}

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def available_count(self) -> int:
        return int(self.mask.sum())

    def available_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def available(self) -> List[Policy]:
        return [self.policy(i) for i in self.available_indices()]

    def policy(self, index: int) -> Policy:
        return Policy.from_array(self.coords[index])

    def points(self) -> List[Policy]:
        return [self.policy(i) for i in range(len(self))]

    def index_of(self, policy: Policy) -> int:
        """Exact grid index of a policy; KeyError if it is not a candidate."""
        return self._index[(policy.a_itn, policy.a_irs)]

    def nearest_index(self, policy: Policy) -> int:
        distances = np.linalg.norm(self.coords - policy.as_array(), axis=1)
        return int(np.argmin(distances))

    def remove(self, indices: Iterable[int]) -> int:
        """Mark specific indices removed; returns how many were still available."""
        idx = np.asarray(list(indices), dtype=int)
        if idx.size == 0:
            return 0
        newly = int(self.mask[idx].sum())
        self.mask[idx] = False
        return newly

    def snapshot(self) -> "CandidateSet":
        """Independent copy sharing the read-only coordinates."""
        clone = CandidateSet.__new__(CandidateSet)
        clone.coords = self.coords
        clone.mask = self.mask.copy()
        clone._index = self._index
        return clone


def discretize(spec: Union[GridSpec, Mapping]) -> CandidateSet:
    """Full regular grid, all points available, row-major by (itn index, irs index)."""
    if not isinstance(spec, GridSpec):
        spec = validate_model(GridSpec, spec, source="grid spec")
    else:
        spec = validate_model(GridSpec, spec.model_dump(), source="grid spec")
    levels = [np.linspace(lower, upper, n) for lower, upper, n in spec.axes()]
    if any(np.unique(axis).size != axis.size for axis in levels):
        raise ConfigurationError("grid levels collapse at this resolution")
    mesh = np.meshgrid(*levels, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    return CandidateSet(coords)


def sample_random(candidates: CandidateSet, n: int, rng: np.random.Generator) -> List[Policy]:
    """n distinct available points, uniform without replacement."""
    pool = candidates.available()
    if n < 0 or n > len(pool):
        raise DomainError(f"cannot draw {n} policies from {len(pool)} available candidates")
    if n == 0:
        return []
    return [pool[i] for i in rng.choice(len(pool), size=n, replace=False)]


def mask_near(candidates: CandidateSet, center: Policy, radius: float) -> int:
    """Remove every available point strictly closer than radius to center."""
    if radius < 0:
        raise DomainError("radius must be non-negative")
    distances = np.linalg.norm(candidates.coords - center.as_array(), axis=1)
    hit = candidates.mask & (distances < radius)
    removed = int(hit.sum())
    candidates.mask[hit] = False
    return removed


def reset(candidates: CandidateSet) -> CandidateSet:
    """Make every point available again."""
    candidates.mask[:] = True
    return candidates
