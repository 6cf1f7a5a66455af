"""Error covariance of localized-kernel reconstruction, optimal-design selection,
and numerical checks of how the classical criteria rewrite in terms of
localization operators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._ties import argmax_first, argmin_first
from .errors import ParameterError
from .graph import Graph, build_laplacian, generate
from .rng import make_rng, sub_seed
from .sampleset import SampleSet, check_budget
from .spectral import (
    EigenSystem,
    ExactDense,
    IdealLowpass,
    InverseShift,
    LocalizationOperator,
    eigendecompose,
    localization_matrix,
)

EPS = np.finfo(float).eps


class DesignKind(str, enum.Enum):
    A = "A"
    D = "D"
    E = "E"
    T = "T"

    @classmethod
    def parse(cls, value) -> "DesignKind":
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"design kind must be one of A, D, E, T; got {value!r}") from None


def _power_matrix(T: LocalizationOperator, p: float) -> np.ndarray:
    if T.eigensystem is None:
        raise ParameterError("this computation needs an exact (eigendecomposition-based) operator")
    es = T.eigensystem
    g = T.kernel.on_spectrum(es.eigenvalues)
    if np.any(g < 0) and p != int(p):
        raise ParameterError("fractional power of a kernel with negative values")
    U = es.eigenvectors
    M = (U * g**p) @ U.T
    return 0.5 * (M + M.T)


def _kernel_rank(T: LocalizationOperator, k: int) -> int:
    gk = np.abs(T.kernel.on_spectrum(T.eigensystem.eigenvalues)) ** k
    top = float(gk.max()) if gk.size else 0.0
    return int(np.count_nonzero(gk > top * gk.size * EPS)) if top > 0 else 0


def _check_even(k):
    if int(k) != k or k < 2 or k % 2:
        raise ParameterError(f"k must be a positive even integer, got {k}")


@dataclass(frozen=True, eq=False)
class ErrorCovariance:
    matrix: np.ndarray


def error_covariance(T: LocalizationOperator, k: int, S) -> ErrorCovariance:
    """``T^{k/2} ((T^{k/2})_{SV}^T (T^{k/2})_{SV})^+ T^{k/2}``."""
    _check_even(k)
    H = _power_matrix(T, k // 2)
    idx = np.asarray(list(S), dtype=np.int64)
    rows = H[idx]
    E = H @ np.linalg.pinv(rows.T @ rows, hermitian=True) @ H
    return ErrorCovariance(0.5 * (E + E.T))


def _top_eigs(sub_eigs: np.ndarray, r: int) -> np.ndarray:
    # eigenvalues are ascending along the last axis; keep the r largest
    return sub_eigs[..., sub_eigs.shape[-1] - r :]


def _functional(kind: DesignKind, eigs: np.ndarray, r: int, trace: np.ndarray) -> np.ndarray:
    """Objective from the sampled-block spectrum, restricted to its r leading eigenvalues."""
    if kind is DesignKind.T:
        return trace
    if r == 0:
        return np.full(eigs.shape[:-1], np.inf)
    top = _top_eigs(eigs, r)
    scale = np.maximum(top[..., -1], 0.0)
    singular = top[..., 0] <= scale * top.shape[-1] * EPS * 10
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is DesignKind.A:
            val = np.sum(1.0 / top, axis=-1)
        elif kind is DesignKind.D:
            val = -np.sum(np.log(top), axis=-1)
        else:
            val = 1.0 / np.sqrt(top[..., 0])
    return np.where(singular, np.inf, val)


def design_objective(kind, T: LocalizationOperator, k: int, S) -> float:
    """Value of one optimal-design criterion for sample set S.

    A: trace of the inverse of ``(T^k)_S``; D: log-determinant of that inverse;
    E: spectral norm of the pseudo-inverse of ``(T^{k/2})_{SV}``; T: trace of
    ``(T^k)_S``. Inverses and determinants run over the leading
    ``min(|S|, rank T^k)`` eigenvalues, so rank-deficient operators (ideal
    kernel with more samples than band) are measured on their range. A
    singular block within that range scores +inf.
    """
    kind = DesignKind.parse(kind)
    idx = np.asarray(list(S), dtype=np.int64)
    if kind is DesignKind.E:
        _check_even(k)
        H = _power_matrix(T, k // 2)[idx]
        s = np.linalg.svd(H, compute_uv=False)
        r = min(idx.size, _kernel_rank(T, k))
        if r == 0 or s[r - 1] <= s[0] * max(H.shape) * EPS * 10:
            return float("inf")
        return float(1.0 / s[r - 1])
    P = _power_matrix(T, k)
    sub = P[np.ix_(idx, idx)]
    r = min(idx.size, _kernel_rank(T, k))
    eigs = np.linalg.eigvalsh(sub)
    return float(_functional(kind, eigs, r, np.trace(sub)))


def select_by_design(kind, T: LocalizationOperator, k: int, F: int) -> SampleSet:
    """Greedy optimal-design selection: argmin for A, D, E and argmax for T."""
    kind = DesignKind.parse(kind)
    if kind is DesignKind.E:
        _check_even(k)
    P = _power_matrix(T, k)
    n = P.shape[0]
    F = check_budget(F, n)
    rank = _kernel_rank(T, k)
    diag = np.diag(P).copy()
    picks: list[int] = []
    chosen = np.zeros(n, dtype=bool)
    for m in range(F):
        cand = np.flatnonzero(~chosen)
        trace = float(np.sum(diag[picks])) + diag[cand]
        if kind is DesignKind.T:
            vals = trace
        else:
            d = m + 1
            G = np.empty((cand.size, d, d))
            if m:
                G[:, :m, :m] = P[np.ix_(picks, picks)]
                G[:, :m, m] = P[np.ix_(cand, picks)]
                G[:, m, :m] = P[np.ix_(cand, picks)]
            G[:, m, m] = diag[cand]
            eigs = np.linalg.eigvalsh(G)
            vals = _functional(kind, eigs, min(d, rank), trace)
        scores = np.full(n, np.nan)
        scores[cand] = vals
        if kind is DesignKind.T:
            scores[chosen] = -np.inf
            y = argmax_first(scores)
        else:
            scores[chosen] = np.inf
            y = argmin_first(scores)
        chosen[y] = True
        picks.append(y)
    return SampleSet(tuple(picks), n)


# ---------------------------------------------------------------------------
# identity validators


IDENTITIES = ("minspec", "mintrac", "minfrob", "maxfrob", "maxpvol", "entropy", "mi")
BOUNDS = ("maxcutoff",)


@dataclass(frozen=True)
class IdentityCase:
    """One random instance: graph, band size and sample set."""

    graph: Graph
    es: EigenSystem
    band: int
    selected: np.ndarray


def _rel(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def _ideal(case: IdentityCase) -> np.ndarray:
    T = localization_matrix(None, IdealLowpass(band_size=case.band), ExactDense(case.es))
    return T.dense()


def _sv(M):
    return np.linalg.svd(M, compute_uv=False)


def validate_identity(which: str, case: IdentityCase, delta: float = 0.01, k: int = 2) -> float:
    """Residual ``|lhs - rhs| / max(1, |rhs|)`` of a criterion written two ways.

    The left side uses the eigenvector block ``U_SF`` (or the covariance K),
    the right side the localization operator. For ``"maxcutoff"`` the return
    value is the signed gap of a two-sided interlacing bound instead; it is
    nonnegative when the bound holds.
    """
    S = case.selected
    U = case.es.eigenvectors
    UF = U[:, : case.band]
    US = UF[S]
    if which in ("minspec", "mintrac", "minfrob", "maxfrob", "maxpvol"):
        TI = _ideal(case)
    if which == "minspec":
        r = min(S.size, case.band)
        return _rel(_sv(US)[r - 1], _sv(TI[:, S])[r - 1])
    if which == "mintrac":
        # more samples than band: the Gram is invertible, the sampled block is not
        lhs = float(np.trace(np.linalg.inv(US.T @ US)))
        rhs = float(np.trace(np.linalg.pinv(TI[np.ix_(S, S)], hermitian=True, rcond=1e-10)))
        return _rel(lhs, rhs)
    if which == "minfrob":
        lhs = float(np.sum(1.0 / _sv(US) ** 2))
        rhs = float(np.trace(np.linalg.inv(TI[np.ix_(S, S)])))
        return _rel(lhs, rhs)
    if which == "maxfrob":
        Dver = np.zeros((case.es.n, case.es.n))
        Dver[S, S] = 1.0
        lhs = float(np.linalg.norm(UF.T @ Dver, "fro") ** 2)
        return _rel(lhs, float(np.trace(TI[np.ix_(S, S)])))
    if which == "maxpvol":
        return _rel(float(np.linalg.det(US @ US.T)), float(np.linalg.det(TI[np.ix_(S, S)])))
    L = build_laplacian(case.graph).dense()
    n = L.shape[0]
    if which == "entropy":
        K = np.linalg.inv(L + delta * np.eye(n))
        TK = localization_matrix(None, InverseShift(delta), ExactDense(case.es)).dense()
        return _rel(float(np.linalg.det(K[np.ix_(S, S)])), float(np.linalg.det(TK[np.ix_(S, S)])))
    if which == "mi":
        K = np.linalg.inv(L + delta * np.eye(n))
        Q = L + delta * np.eye(n)
        worst = 0.0
        for y in np.setdiff1d(np.arange(n), S):
            rest = np.setdiff1d(np.arange(n), np.r_[S, y])
            num = K[y, y] - (K[y, S] @ np.linalg.solve(K[np.ix_(S, S)], K[S, y]) if S.size else 0.0)
            den = K[y, y] - (K[y, rest] @ np.linalg.solve(K[np.ix_(rest, rest)], K[rest, y]) if rest.size else 0.0)
            ratio = num / den
            qs = Q[y, y] - (Q[y, S] @ np.linalg.solve(Q[np.ix_(S, S)], Q[S, y]) if S.size else 0.0)
            worst = max(worst, _rel(ratio, num * qs))
        return worst
    if which == "maxcutoff":
        Tk = np.linalg.matrix_power(np.linalg.inv(L + delta * np.eye(n)), k)
        Qk = np.linalg.matrix_power(L + delta * np.eye(n), k)
        comp = np.setdiff1d(np.arange(n), S)
        x = float(_sv(Tk[np.ix_(S, S)])[-1])
        mid = float(_sv(Qk[np.ix_(comp, comp)])[-1])
        a_t = 1.0 / np.linalg.norm(Tk, 2) ** 2
        b_t = np.linalg.norm(Qk, 2) ** 2
        return min(mid - a_t * x, b_t * x - mid) / max(1.0, mid)
    raise ParameterError(f"unknown identity {which!r}; expected one of {IDENTITIES + BOUNDS}")


def random_case(which: str, n: int, seed: int, trial: int, edge_prob: float = 0.4) -> IdentityCase:
    """Random connected graph, band and sample set suited to the named check."""
    g = generate("erdos_renyi", n, {"p": edge_prob}, seed=sub_seed(seed, "identity-graph", trial))
    es = eigendecompose(build_laplacian(g))
    rng = make_rng(seed, "identity-case", which, trial)
    band = int(rng.integers(2, n // 2 + 1))
    if which == "mintrac":
        size = int(rng.integers(band, n))
    elif which in ("minfrob", "maxpvol"):
        size = int(rng.integers(1, band + 1))
    else:
        size = int(rng.integers(1, n))
    selected = np.sort(rng.choice(n, size=size, replace=False))
    return IdentityCase(g, es, band, selected)


def run_identity_suite(n: int = 12, trials: int = 20, seed: int = 0, delta: float = 0.01, k: int = 2) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for which in IDENTITIES + BOUNDS:
        out[which] = [validate_identity(which, random_case(which, n, seed, t), delta, k) for t in range(trials)]
    return out
