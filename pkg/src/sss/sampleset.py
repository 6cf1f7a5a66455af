"""Ordered sampling sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SampleSet:
    """Selected vertices in selection order, plus the ambient vertex count."""

    selected: tuple[int, ...]
    n: int

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if len(set(sel)) != len(sel):
            raise ParameterError("sampling set contains duplicates")
        if any(i < 0 or i >= self.n for i in sel):
            raise ParameterError(f"sampling set index out of range [0, {self.n})")
        object.__setattr__(self, "selected", sel)

    def __len__(self) -> int:
        return len(self.selected)

    def __iter__(self):
        return iter(self.selected)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.selected, dtype=np.int64)

    def complement(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.selected)] = False
        return np.flatnonzero(mask)

    def prefix(self, m: int) -> "SampleSet":
        return SampleSet(self.selected[:m], self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "selected": list(self.selected)}


def check_budget(F: int, n: int) -> int:
    if int(F) != F or not 1 <= F <= n:
        raise ParameterError(f"sample budget must be an integer in [1, {n}], got {F}")
    return int(F)
