# aspem/operations/alias.py
"""Alias tables: O(1) draws from a fixed discrete distribution (Vose's method)."""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from aspem.core.errors import AspemError


@dataclass(frozen=True)
class AliasTable:
    """
    Probability and alias rows of a Vose alias table.

    Slot ``i`` is kept with probability ``prob[i]`` and otherwise replaced by
    ``alias[i]``.
    """
    prob: np.ndarray
    alias: np.ndarray

    def __len__(self) -> int:
        return int(self.prob.shape[0])

    def sample(self, rng: np.random.Generator) -> int:
        slot = int(rng.integers(len(self)))
        if rng.random() < self.prob[slot]:
            return slot
        return int(self.alias[slot])

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        slots = rng.integers(len(self), size=size)
        keep = rng.random(size) < self.prob[slots]
        return np.where(keep, slots, self.alias[slots])

    def probabilities(self) -> np.ndarray:
        """The distribution the table encodes (for checks and diagnostics)."""
        n = len(self)
        p = self.prob / n
        np.add.at(p, self.alias, (1.0 - self.prob) / n)
        return p


def build_alias_table(weights: Union[Sequence[float], np.ndarray]) -> AliasTable:
    """
    Build an alias table for ``P(i) = w_i / sum(w)``.

    Raises:
        AspemError: for an empty vector, a negative or non-finite weight, or
            weights that are all zero
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise AspemError("Cannot build an alias table from an empty weight vector")
    if not np.all(np.isfinite(w)):
        raise AspemError("Alias table weights must be finite")
    if np.any(w < 0):
        raise AspemError("Alias table weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0:
        raise AspemError("Alias table needs at least one strictly positive weight")

    n = w.size
    scaled = w * (n / total)
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]

    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    # leftovers are 1 up to rounding
    for i in large + small:
        prob[i] = 1.0
        alias[i] = i

    prob.setflags(write=False)
    alias.setflags(write=False)
    return AliasTable(prob=prob, alias=alias)


def sample(table: AliasTable, rng: np.random.Generator) -> int:
    """Draw one index from ``table``."""
    return table.sample(rng)
