"""Covering-area greedy selection on a localization operator.

Each step picks the vertex whose localized kernel best fills the part of the
graph that the already-selected kernels cover least. With a polynomial kernel
the operator is a sparse polynomial in L, so no eigendecomposition is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from ._ties import TIE_RTOL, argmax_first
from .errors import ParameterError
from .graph import Graph, build_laplacian
from .sampleset import SampleSet, check_budget
from .spectral import HeatKernel, LocalizationOperator, estimate_lambda_max

DEFAULT_NU = 220.0


@dataclass(frozen=True)
class GreedyCoverState:
    covered: np.ndarray
    eta: float
    iteration: int


def _abs_operator(T, use_abs: bool):
    M = T.matrix if isinstance(T, LocalizationOperator) else T
    if sp.issparse(M):
        M = sp.csc_matrix(M)
        return abs(M) if use_abs else M
    M = np.asarray(M, dtype=float)
    return np.abs(M) if use_abs else M


def iter_greedy_cover(T, F: int, use_abs: bool = True, rtol: float = TIE_RTOL) -> Iterator[tuple[int, GreedyCoverState]]:
    """Yield ``(vertex, state_before_pick)`` for each of the F greedy steps."""
    A = _abs_operator(T, use_abs)
    n = A.shape[0]
    F = check_budget(F, n)
    sparse = sp.issparse(A)
    At = A.T.tocsr() if sparse else A.T
    covered = np.zeros(n)
    chosen = np.zeros(n, dtype=bool)
    for m in range(F):
        if m == 0:
            # nothing covered yet: weigh every vertex equally
            eta = 0.0
            w = np.ones(n)
        else:
            eta = float(covered.mean())
            w = np.maximum(eta - covered, 0.0)
        scores = np.asarray(At @ w).ravel()
        scores[chosen] = -np.inf
        y = argmax_first(scores, rtol)
        yield y, GreedyCoverState(covered.copy(), eta, m)
        chosen[y] = True
        col = A[:, [y]].toarray().ravel() if sparse else A[:, y]
        covered += col


def select_proposed(T, F: int, use_abs: bool = True) -> SampleSet:
    """Greedy covering selection of F vertices; ties go to the lowest index."""
    n = (T.matrix if isinstance(T, LocalizationOperator) else T).shape[0]
    picks = [y for y, _ in iter_greedy_cover(T, F, use_abs)]
    return SampleSet(tuple(picks), n)


def greedy_cover_trace(T, F: int, use_abs: bool = True) -> list[GreedyCoverState]:
    return [state for _, state in iter_greedy_cover(T, F, use_abs)]


@dataclass(frozen=True)
class HeatParams:
    nu: float
    p_e: float
    p_s: float
    p_f: float
    lambda_max: float

    @property
    def s(self) -> float:
        if self.lambda_max <= 0:
            return 0.0
        return self.nu * self.p_e * self.p_s * self.p_f / self.lambda_max


def heat_params(g: Graph, F: int, band_size: int, nu: float = DEFAULT_NU, lambda_max: float | None = None) -> HeatParams:
    n = g.n
    if not 0 <= band_size <= n:
        raise ParameterError(f"band size must lie in [0, {n}], got {band_size}")
    check_budget(F, n)
    if nu < 0:
        raise ParameterError(f"nu must be >= 0, got {nu}")
    if lambda_max is None:
        lambda_max = estimate_lambda_max(build_laplacian(g))
    return HeatParams(float(nu), g.num_edges / n, F / n, band_size / n, float(lambda_max))


def heat_kernel_for_selection(
    g: Graph, F: int, band_size: int, nu: float = DEFAULT_NU, lambda_max: float | None = None
) -> HeatKernel:
    """Heat kernel whose diffusion scale grows with density, sampling ratio and bandwidth."""
    return HeatKernel(heat_params(g, F, band_size, nu, lambda_max).s)
