"""Comparison sampling-set selectors.

Gaussian-process criteria (Entropy, MI) work on the covariance
``K = (L + delta I)^-1``. The graph-frequency criteria (MinSpec, MinTrac,
MinFrob, MaxFrob, MaxPVol, RandSamp) work on the rows of the low-frequency
eigenvector block ``U_F``. MaxCutoff works on powers of L only.

Every greedy step scores all remaining candidates exactly; inverses are
updated with bordered-matrix / rank-one identities instead of being
refactorized per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from ._ties import TIE_RTOL, argmax_first, argmin_first
from .errors import NumericalError, ParameterError
from .graph import Laplacian
from .rng import make_rng
from .sampleset import SampleSet, check_budget
from .spectral import EigenSystem, _laplacian_matrix, estimate_lambda_max

DEFAULT_DELTA = 0.01
DEFAULT_CUTOFF_POWER = 14
DEFAULT_RIDGE = 1e-8
SINGULAR_TOL = 1e-14
COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# shared types


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """GP prior with precision ``Q = L + delta I`` and covariance ``K = Q^-1``."""

    K: np.ndarray
    Q: np.ndarray
    delta: float


def covariance_model(L, delta: float = DEFAULT_DELTA) -> CovarianceModel:
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta}")
    M = _laplacian_matrix(L).toarray()
    Q = M + delta * np.eye(M.shape[0])
    K = sla.cho_solve(sla.cho_factor(Q, lower=True), np.eye(M.shape[0]))
    K = 0.5 * (K + K.T)
    return CovarianceModel(K, Q, float(delta))


@dataclass(frozen=True)
class BandSet:
    """The lowest ``size`` graph frequencies, optionally with a cutoff frequency."""

    size: int
    omega: float | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ParameterError(f"band size must be a positive integer, got {self.size}")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.size)


def _band_rows(es: EigenSystem, band) -> np.ndarray:
    size = band.size if isinstance(band, BandSet) else int(band)
    if not 1 <= size <= es.n:
        raise ParameterError(f"band size must lie in [1, {es.n}], got {size}")
    return np.ascontiguousarray(es.eigenvectors[:, :size])


@dataclass(frozen=True)
class SamplingDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)


# ---------------------------------------------------------------------------
# Gaussian-process criteria


class _ConditionalVariance:
    """Conditional variances ``C(y,y) - C_yS C_S^-1 C_Sy`` for all y, updated per pick.

    This is a pivoted Cholesky factorization of C with externally chosen pivots.
    """

    def __init__(self, C: np.ndarray):
        self.C = C
        self.var = np.diag(C).astype(float).copy()
        self.cols: list[np.ndarray] = []
        self.scale = float(np.max(np.abs(self.var))) if self.var.size else 1.0

    def add(self, y: int) -> float:
        piv = self.var[y]
        col = self.C[:, y].astype(float).copy()
        for c in self.cols:
            col -= c * c[y]
        if piv <= COND_LIMIT**-1 * self.scale:
            return piv
        col /= np.sqrt(piv)
        self.cols.append(col)
        self.var -= col * col
        self.var[y] = 0.0
        return piv


def select_entropy(K: CovarianceModel | np.ndarray, F: int) -> SampleSet:
    """Greedy maximum conditional variance (the entropy criterion for Gaussians)."""
    C = K.K if isinstance(K, CovarianceModel) else np.asarray(K, dtype=float)
    n = C.shape[0]
    F = check_budget(F, n)
    cv = _ConditionalVariance(C)
    chosen = np.zeros(n, dtype=bool)
    picks = []
    for m in range(F):
        scores = np.where(chosen, -np.inf, cv.var)
        y = argmax_first(scores)
        piv = cv.add(y)
        if piv <= cv.scale / COND_LIMIT:
            raise NumericalError(f"entropy greedy: conditioning of K_S exceeds {COND_LIMIT:g} at iteration {m}")
        chosen[y] = True
        picks.append(y)
    return SampleSet(tuple(picks), n)


def select_mi(K: CovarianceModel, F: int) -> SampleSet:
    """Greedy mutual-information criterion.

    Score of y is var(y | S) / var(y | V minus S and y). The denominator is
    ``1 / (Q_yy - Q_yS Q_S^-1 Q_Sy)`` with Q the precision, so both parts are
    conditional variances of K and Q on the selected set.
    """
    if not isinstance(K, CovarianceModel):
        raise ParameterError("select_mi needs a CovarianceModel (covariance and precision)")
    n = K.K.shape[0]
    F = check_budget(F, n)
    cov = _ConditionalVariance(K.K)
    prec = _ConditionalVariance(K.Q)
    chosen = np.zeros(n, dtype=bool)
    picks = []
    for m in range(F):
        with np.errstate(divide="ignore"):
            denom = np.where(prec.var > 0, 1.0 / prec.var, 0.0)
        scores = np.where(denom <= SINGULAR_TOL, np.inf, cov.var * prec.var)
        scores[chosen] = -np.inf
        y = argmax_first(scores)
        piv = cov.add(y)
        if piv <= cov.scale / COND_LIMIT:
            raise NumericalError(f"MI greedy: conditioning of K_S exceeds {COND_LIMIT:g} at iteration {m}")
        prec.add(y)
        chosen[y] = True
        picks.append(y)
    return SampleSet(tuple(picks), n)


# ---------------------------------------------------------------------------
# MaxCutoff


def _smallest_singular_pair(R: np.ndarray, v0: np.ndarray | None):
    """Smallest singular value and right singular vector of a square triangular R."""
    r = R.shape[0]
    if r <= 400:
        _, s, Vt = np.linalg.svd(R)
        return float(s[-1]), Vt[-1]
    d = np.abs(np.diag(R))
    floor = np.finfo(float).eps * max(float(d.max()), 1.0)
    R = R.copy()
    small = d < floor
    R[small, small] = floor

    def inv_gram(x):
        z = sla.solve_triangular(R, x, trans="T")
        return sla.solve_triangular(R, z)

    op = LinearOperator((r, r), matvec=inv_gram, dtype=float)
    try:
        vals, vecs = eigsh(op, k=1, which="LA", tol=1e-8, v0=v0, maxiter=5000)
    except ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
    v = vecs[:, 0]
    sigma = float(np.linalg.norm(R @ v))
    return sigma, v


def select_maxcutoff(L, F: int, k: int = DEFAULT_CUTOFF_POWER) -> tuple[SampleSet, float]:
    """Greedy cutoff-frequency maximization.

    Each step takes the smallest eigenpair of ``(L^k)`` restricted to the
    unselected vertices and picks the vertex with the largest squared
    eigenvector entry. The restriction is handled as
    ``(L^k)_{c,c} = B^T B`` with ``B = (L^{k/2})[:, c]``; a QR factor of B is
    downdated column by column, so the small eigenvalues are never squared
    in floating point.

    Returns the sample set and the cutoff estimate ``mu_min^(1/k)``.
    """
    M = _laplacian_matrix(L)
    n = M.shape[0]
    F = check_budget(F, n)
    if int(k) != k or k < 2 or k % 2:
        raise ParameterError(f"cutoff power k must be a positive even integer, got {k}")
    scale = estimate_lambda_max(M)
    if scale <= 0:
        scale = 1.0
    Ms = (M / scale).tocsr()
    B = np.eye(n)
    for _ in range(k // 2):
        B = np.asarray(Ms @ B)
    Q, R = sla.qr(B)
    remaining = list(range(n))
    picks = []
    v0 = None
    for _ in range(F):
        r = len(remaining)
        _, v = _smallest_singular_pair(R[:r, :r], v0)
        pos = argmax_first(v * v)
        picks.append(remaining[pos])
        del remaining[pos]
        v0 = np.delete(v, pos) if r > 1 else None
        if remaining:
            Q, R = sla.qr_delete(Q, R, pos, 1, which="col", overwrite_qr=True, check_finite=False)
    if remaining:
        r = len(remaining)
        sigma, _ = _smallest_singular_pair(R[:r, :r], v0)
        omega = scale * (sigma * sigma) ** (1.0 / k)
    else:
        # nothing left to bound: every frequency is recoverable
        omega = scale / 1.01
    return SampleSet(tuple(picks), n), float(omega)


# ---------------------------------------------------------------------------
# graph-frequency criteria on rows of U_F


class _RowSpace:
    """Orthonormal basis of the span of the selected rows of U_F and derived quantities.

    For a candidate row u with coefficients ``a = Q^T u`` in the basis of the
    selected rows and residual norm ``rho``, the Gram matrix of the enlarged
    row set is bordered: its eigen-structure is that of ``R^T R`` (selected
    rows) extended by ``w = P^T a`` and ``rho``, where ``R = P diag(s) V^T``.
    """

    def __init__(self, UF: np.ndarray, selected: list[int]):
        self.UF = UF
        f = UF.shape[1]
        m = len(selected)
        if m == 0:
            self.Q = np.zeros((f, 0))
            self.theta = np.zeros(0)
            self.W = np.zeros((UF.shape[0], 0))
            self.rho2 = np.einsum("ij,ij->i", UF, UF)
            return
        Q, R = np.linalg.qr(UF[selected].T)
        P, s, _ = np.linalg.svd(R)
        self.Q = Q
        self.theta = s * s
        A = UF @ Q
        self.W = A @ P
        resid = UF - A @ Q.T
        self.rho2 = np.einsum("ij,ij->i", resid, resid)


class _TallSpace:
    """Eigenstructure of ``G = U_S^T U_S`` (f x f) for rank-one updated candidates."""

    def __init__(self, UF: np.ndarray, selected: list[int], ridge: float = 0.0):
        G = UF[selected].T @ UF[selected] if selected else np.zeros((UF.shape[1],) * 2)
        theta, V = np.linalg.eigh(G)
        self.theta = np.maximum(theta, 0.0) + ridge
        self.Z = UF @ V


def _bordered_min_eig(theta: np.ndarray, W: np.ndarray, rho2: np.ndarray, iters: int = 200) -> np.ndarray:
    """Smallest eigenvalue of ``[[diag(theta), diag(sqrt(theta)) w], [., |w|^2 + rho^2]]``.

    That matrix is the Gram of the selected rows plus one candidate expressed
    in the selected rows' singular basis. The root solves
    ``rho^2 = mu (1 + sum_i w_i^2 / (theta_i - mu))`` on ``[0, min(theta)]``.
    """
    n = W.shape[0]
    if theta.size == 0:
        return rho2.copy()
    t1 = float(theta.min())
    lo = np.zeros(n)
    hi = np.minimum(np.full(n, t1), np.einsum("ij,ij->i", W, W) + rho2)
    w2 = W * W

    def h(mu):
        d = theta[None, :] - mu[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            return rho2 - mu * (1.0 + np.sum(np.where(d > 0, w2 / d, np.where(w2 > 0, np.inf, 0.0)), axis=1))

    top = hi.copy()
    done = h(hi) >= 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = h(mid) >= 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    return np.where(done, top, 0.5 * (lo + hi))


def _rank_one_min_eig(theta: np.ndarray, Z: np.ndarray, iters: int = 200) -> np.ndarray:
    """Smallest eigenvalue of ``diag(theta) + z z^T`` for each row z of Z."""
    n = Z.shape[0]
    t1 = float(theta[0])
    t2 = float(theta[1]) if theta.size > 1 else np.inf
    z2 = Z * Z
    lo = np.full(n, t1)
    hi = np.minimum(np.full(n, t2), t1 + np.sum(z2, axis=1))

    def g(lam):
        d = theta[None, :] - lam[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(d != 0, z2 / d, np.where(z2 > 0, -np.inf, 0.0))
        return 1.0 + np.sum(terms, axis=1)

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = g(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    return np.where(z2[:, 0] == 0, t1, 0.5 * (lo + hi))


def candidate_spectra(UF: np.ndarray, selected: list[int], candidates: np.ndarray, chunk_elems: int = 4_000_000):
    """Eigenvalues of the Gram matrix of ``U_F[S + y]`` for each candidate y.

    While the enlarged block has at most |F| rows the Gram is the
    ``(m+1) x (m+1)`` matrix ``M M^T``; afterwards it is ``M^T M``
    (|F| x |F|). Either way the spectrum holds the squared singular values.
    """
    f = UF.shape[1]
    m = len(selected)
    base = UF[selected]
    if m + 1 <= f:
        GS = base @ base.T
        Bc = base @ UF[candidates].T
        cc = np.einsum("ij,ij->i", UF[candidates], UF[candidates])
        d = m + 1
    else:
        Gt = base.T @ base
        d = f
    out = np.empty((candidates.size, d))
    step = max(1, chunk_elems // (d * d))
    for start in range(0, candidates.size, step):
        idx = slice(start, start + step)
        cnt = min(step, candidates.size - start)
        G = np.empty((cnt, d, d))
        if m + 1 <= f:
            G[:, :m, :m] = GS
            G[:, :m, m] = Bc[:, idx].T
            G[:, m, :m] = Bc[:, idx].T
            G[:, m, m] = cc[idx]
        else:
            rows = UF[candidates[idx]]
            G[:] = Gt
            G += rows[:, :, None] * rows[:, None, :]
        out[idx] = np.linalg.eigvalsh(G)
    return out


def _direct(functional):
    def score(UF, selected):
        n = UF.shape[0]
        cand = np.setdiff1d(np.arange(n), np.asarray(selected, dtype=np.int64))
        scores = np.full(n, np.nan)
        scores[cand] = functional(np.maximum(candidate_spectra(UF, selected, cand), 0.0))
        return scores

    return score


def _minspec_functional(mu):
    return np.sqrt(mu[:, 0])


def _minfrob_functional(mu):
    with np.errstate(divide="ignore"):
        vals = np.sum(1.0 / mu, axis=1)
    return np.where(mu[:, 0] < SINGULAR_TOL**2, np.inf, vals)


def _maxpvol_functional(mu):
    with np.errstate(divide="ignore"):
        return np.sum(np.log(mu), axis=1)


def _greedy_rows(es: EigenSystem, band, F: int, score_fn, maximize: bool) -> SampleSet:
    UF = _band_rows(es, band)
    n = UF.shape[0]
    F = check_budget(F, n)
    chosen = np.zeros(n, dtype=bool)
    picks: list[int] = []
    for _ in range(F):
        scores = np.asarray(score_fn(UF, picks), dtype=float)
        scores[chosen] = -np.inf if maximize else np.inf
        y = argmax_first(scores) if maximize else argmin_first(scores)
        chosen[y] = True
        picks.append(y)
    return SampleSet(tuple(picks), n)


def minspec_scores(UF: np.ndarray, selected: list[int]) -> np.ndarray:
    """sigma_min of the enlarged row block for every candidate."""
    f = UF.shape[1]
    if len(selected) + 1 <= f:
        rs = _RowSpace(UF, selected)
        mu = _bordered_min_eig(rs.theta, rs.W, rs.rho2)
    else:
        ts = _TallSpace(UF, selected)
        mu = _rank_one_min_eig(ts.theta, ts.Z)
    return np.sqrt(np.maximum(mu, 0.0))


def minfrob_scores(UF: np.ndarray, selected: list[int]) -> np.ndarray:
    """Sum of 1/sigma_i^2 over the nonzero singular values of the enlarged row block."""
    f = UF.shape[1]
    if len(selected) + 1 <= f:
        rs = _RowSpace(UF, selected)
        base = float(np.sum(1.0 / rs.theta))
        w2_over = np.sum(rs.W**2 / rs.theta[None, :], axis=1) if rs.theta.size else np.zeros(UF.shape[0])
        with np.errstate(divide="ignore"):
            scores = base + (1.0 + w2_over) / rs.rho2
        return np.where(rs.rho2 < SINGULAR_TOL**2, np.inf, scores)
    ts = _TallSpace(UF, selected)
    if ts.theta[0] < SINGULAR_TOL**2:
        return _pinv_trace_dense(UF, selected)
    Z, D = ts.Z, ts.theta
    a = np.sum(Z**2 / D, axis=1)
    b = np.sum(Z**2 / D**2, axis=1)
    return float(np.sum(1.0 / D)) - b / (1.0 + a)


def _pinv_trace_dense(UF, selected):
    # selected rows do not span the band: evaluate the definition per candidate
    out = np.empty(UF.shape[0])
    base = UF[selected]
    for y in range(UF.shape[0]):
        s = np.linalg.svd(np.vstack([base, UF[y]]), compute_uv=False)
        nz = s[s > SINGULAR_TOL]
        out[y] = np.sum(1.0 / nz**2) if nz.size == min(len(selected) + 1, UF.shape[1]) else np.inf
    return out


def maxpvol_scores(UF: np.ndarray, selected: list[int]) -> np.ndarray:
    """Log of the product of the nonzero eigenvalues of the enlarged row Gram."""
    f = UF.shape[1]
    if len(selected) + 1 <= f:
        rs = _RowSpace(UF, selected)
        base = float(np.sum(np.log(rs.theta)))
        with np.errstate(divide="ignore"):
            return base + np.log(rs.rho2)
    ts = _TallSpace(UF, selected)
    D = np.maximum(ts.theta, np.finfo(float).tiny)
    return float(np.sum(np.log(D))) + np.log1p(np.sum(ts.Z**2 / D, axis=1))


def mintrac_scores(UF: np.ndarray, selected: list[int], ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """``tr[(U_{S+y}^T U_{S+y} + ridge I)^-1]`` for every candidate."""
    ts = _TallSpace(UF, selected, ridge)
    Z, D = ts.Z, ts.theta
    a = np.sum(Z**2 / D, axis=1)
    b = np.sum(Z**2 / D**2, axis=1)
    return float(np.sum(1.0 / D)) - b / (1.0 + a)


def _mintrac_gain(UF, selected, ridge):
    # the trace decrement; argmax of it avoids differencing two huge traces
    ts = _TallSpace(UF, selected, ridge)
    Z, D = ts.Z, ts.theta
    a = np.sum(Z**2 / D, axis=1)
    b = np.sum(Z**2 / D**2, axis=1)
    return b / (1.0 + a)


EVALUATIONS = ("direct", "updated")

_ROW_CRITERIA = {
    "minspec": (_direct(_minspec_functional), minspec_scores, True),
    "minfrob": (_direct(_minfrob_functional), minfrob_scores, False),
    "maxpvol": (_direct(_maxpvol_functional), maxpvol_scores, True),
}


def _select_rows(name, es, band, F, evaluation):
    if evaluation not in EVALUATIONS:
        raise ParameterError(f"evaluation must be one of {EVALUATIONS}, got {evaluation!r}")
    direct, updated, maximize = _ROW_CRITERIA[name]
    return _greedy_rows(es, band, F, direct if evaluation == "direct" else updated, maximize)


def select_minspec(es: EigenSystem, band, F: int, evaluation: str = "direct") -> SampleSet:
    """Greedy maximization of the smallest singular value of ``U_F[S + y]``.

    ``evaluation="direct"`` computes every candidate's spectrum;
    ``"updated"`` solves the bordered / rank-one secular equation instead.
    Both give the same selection up to rounding-level ties.
    """
    return _select_rows("minspec", es, band, F, evaluation)


def select_minfrob(es: EigenSystem, band, F: int, evaluation: str = "direct") -> SampleSet:
    """Greedy minimization of ``sum 1/sigma_i^2``, the squared Frobenius norm of the pseudo-inverse."""
    return _select_rows("minfrob", es, band, F, evaluation)


def select_maxpvol(es: EigenSystem, band, F: int, evaluation: str = "direct") -> SampleSet:
    """Greedy maximization of the product of the nonzero Gram eigenvalues (log scale)."""
    return _select_rows("maxpvol", es, band, F, evaluation)


def select_mintrac(es: EigenSystem, band, F: int, ridge: float = DEFAULT_RIDGE) -> SampleSet:
    if not ridge > 0:
        raise ParameterError(f"ridge must be > 0, got {ridge}")
    return _greedy_rows(es, band, F, lambda UF, S: _mintrac_gain(UF, S, ridge), maximize=True)


def select_maxfrob(es: EigenSystem, band, F: int) -> SampleSet:
    """Top-F rows of U_F by squared norm, ties to the lowest index."""
    UF = _band_rows(es, band)
    n = UF.shape[0]
    F = check_budget(F, n)
    scores = np.einsum("ij,ij->i", UF, UF)
    picks = []
    for _ in range(F):
        y = argmax_first(scores)
        picks.append(y)
        scores[y] = -np.inf
    return SampleSet(tuple(picks), n)


def randsamp_distribution(es: EigenSystem, band) -> SamplingDistribution:
    UF = _band_rows(es, band)
    p = np.einsum("ij,ij->i", UF, UF) / UF.shape[1]
    p = np.maximum(p, 0.0)
    return SamplingDistribution(p / p.sum())


def select_randsamp(dist: SamplingDistribution, F: int, seed: int = 0) -> SampleSet:
    """Weighted sampling without replacement by sequential draws.

    Once every remaining vertex has probability zero, the rest are drawn
    uniformly among the remaining vertices.
    """
    p = dist.probabilities
    n = p.size
    F = check_budget(F, n)
    rng = make_rng(seed, "randsamp", n, F)
    available = np.ones(n, dtype=bool)
    picks = []
    for _ in range(F):
        weights = np.where(available, p, 0.0)
        mass = weights.sum()
        u = rng.random()
        if mass > 0:
            cdf = np.cumsum(weights)
            y = int(np.searchsorted(cdf, u * mass, side="right"))
            y = min(y, n - 1)
            while weights[y] <= 0:
                y -= 1
        else:
            remaining = np.flatnonzero(available)
            y = int(remaining[min(int(u * remaining.size), remaining.size - 1)])
        available[y] = False
        picks.append(y)
    return SampleSet(tuple(picks), n)
