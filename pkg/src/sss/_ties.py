"""Greedy argmax/argmin with reproducible lowest-index tie-breaking.

Scores within ``TIE_RTOL`` (relative) of the optimum count as tied, so that
mathematically equal scores that differ only by rounding resolve to the
lowest vertex index on every platform.
"""

from __future__ import annotations

import numpy as np

TIE_RTOL = 1e-10


def argmax_first(scores: np.ndarray, rtol: float = TIE_RTOL) -> int:
    scores = np.asarray(scores, dtype=float)
    valid = ~np.isnan(scores)
    if not valid.any():
        return 0
    best = np.max(scores[valid])
    if np.isinf(best):
        return int(np.flatnonzero(scores == best)[0])
    thresh = best - rtol * abs(best)
    return int(np.flatnonzero(valid & (scores >= thresh))[0])


def argmin_first(scores: np.ndarray, rtol: float = TIE_RTOL) -> int:
    return argmax_first(-np.asarray(scores, dtype=float), rtol)
