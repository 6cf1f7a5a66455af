"""Reconstruction of full graph signals from their samples."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .baselines import BandSet, _band_rows, _smallest_singular_pair
from .errors import DimensionError, NumericalError, ParameterError
from .sampleset import SampleSet
from .spectral import EigenSystem, LocalizationOperator, _laplacian_matrix, estimate_lambda_max

COND_LIMIT = 1e12


@dataclass(frozen=True)
class ReconConfig:
    k: int = 12
    gamma: float = 1.0
    reg_power: int = 4
    pinv_tol: float = 1e-10
    cg_tol: float = 1e-10

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"operator power k must be an integer >= 1, got {self.k}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if int(self.reg_power) != self.reg_power or self.reg_power < 1:
            raise ParameterError(f"regularizer power must be an integer >= 1, got {self.reg_power}")


def _indices(S, n: int) -> np.ndarray:
    idx = S.indices if isinstance(S, SampleSet) else np.asarray(list(S), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise DimensionError(f"sample index out of range [0, {n})")
    if np.unique(idx).size != idx.size:
        raise ParameterError("sample set contains duplicates")
    return idx


def _samples(f_S, size: int) -> np.ndarray:
    f_S = np.asarray(f_S, dtype=float)
    if f_S.shape[0] != size:
        raise DimensionError(f"expected {size} sampled values, got {f_S.shape[0]}")
    return f_S


def recon_bandlimited(es: EigenSystem, band, S, f_S, pinv_tol: float = 1e-10) -> np.ndarray:
    """Least-squares fit of the band coefficients to the samples: U_F pinv(U_SF) f_S."""
    UF = _band_rows(es, band)
    idx = _indices(S, es.n)
    f_S = _samples(f_S, idx.size)
    if idx.size < UF.shape[1]:
        warnings.warn(
            f"{idx.size} samples for a band of {UF.shape[1]}: underdetermined, returning the least-norm fit",
            RuntimeWarning,
            stacklevel=2,
        )
    coef = np.linalg.pinv(UF[idx], rcond=pinv_tol) @ f_S
    return UF @ coef


def recon_localized(es: EigenSystem, band, S, f, pinv_tol: float = 1e-10) -> np.ndarray:
    """Pseudo-inverse of the band-projected sampling operator applied to the zero-padded samples.

    The operator ``D_sp D_ver D_sp`` equals ``U_F (U_SF^T U_SF) U_F^T``, so its
    eigendecomposition is that of the |F| x |F| middle factor.
    """
    UF = _band_rows(es, band)
    idx = _indices(S, es.n)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != es.n:
        raise DimensionError(f"signal length {f.shape[0]} does not match n={es.n}")
    US = UF[idx]
    G = US.T @ US
    theta, V = np.linalg.eigh(G)
    keep = theta > pinv_tol * max(float(theta.max()), 0.0) if theta.size else theta > 0
    inv = np.zeros_like(theta)
    inv[keep] = 1.0 / theta[keep]
    rhs = US.T @ f[idx]
    return UF @ (V @ (inv * (V.T @ rhs)))


def operator_power_columns(T: LocalizationOperator, k: int, idx: np.ndarray) -> np.ndarray:
    """Columns ``(T^k)[:, idx]`` without forming T^k."""
    if T.eigensystem is not None and not T.is_sparse:
        es = T.eigensystem
        g = T.kernel.on_spectrum(es.eigenvalues) ** k
        U = es.eigenvectors
        return (U * g) @ U[idx].T
    X = np.zeros((T.n, idx.size))
    X[idx, np.arange(idx.size)] = 1.0
    for _ in range(k):
        X = np.asarray(T.matrix @ X)
    return X


def recon_locop(T: LocalizationOperator, k: int, S, f_S, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Interpolation with localized kernels: (T^k)_{VS} ((T^k)_S)^-1 f_S.

    Raises NumericalError if the sampled block is too ill-conditioned to
    solve; in that regime a smaller k or a larger diffusion scale is needed.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"operator power k must be an integer >= 1, got {k}")
    idx = _indices(S, T.n)
    f_S = _samples(f_S, idx.size)
    cols = operator_power_columns(T, int(k), idx)
    sub = 0.5 * (cols[idx] + cols[idx].T)
    s = np.linalg.svd(sub, compute_uv=False)
    cond = np.inf if s[-1] == 0 else s[0] / s[-1]
    if not cond <= cond_limit:
        raise NumericalError(
            f"(T^{k})_S has condition number {cond:.3g} > {cond_limit:.0e}; use a smaller k or a larger kernel scale"
        )
    beta = sla.solve(sub, f_S, assume_a="sym")
    return cols @ beta


def recon_regularized(L, S, o, cfg: ReconConfig | None = None) -> np.ndarray:
    """Minimize ``|z_S - o|^2 + gamma z^T L^p z`` by conjugate gradients."""
    cfg = cfg or ReconConfig()
    M = _laplacian_matrix(L)
    n = M.shape[0]
    idx = _indices(S, n)
    o = np.asarray(o, dtype=float)
    if o.shape[0] == n:
        rhs = np.zeros(n)
        rhs[idx] = o[idx]
    else:
        rhs = np.zeros(n)
        rhs[idx] = _samples(o, idx.size)
    if cfg.gamma == 0 and idx.size < n:
        raise ParameterError("gamma = 0 leaves the unsampled vertices undetermined")
    mask = np.zeros(n)
    mask[idx] = 1.0

    def apply(z):
        y = z
        for _ in range(cfg.reg_power):
            y = M @ y
        return mask * z + cfg.gamma * y

    A = LinearOperator((n, n), matvec=apply, dtype=float)
    z, info = cg(A, rhs, rtol=cfg.cg_tol, atol=0.0, maxiter=10 * n)
    if info != 0:
        res = np.linalg.norm(apply(z) - rhs) / max(np.linalg.norm(rhs), 1e-300)
        raise NumericalError(f"conjugate gradient did not converge in {10 * n} iterations (relative residual {res:.3g})")
    return z


# ---------------------------------------------------------------------------
# cutoff frequency


def estimate_cutoff(L, S, k: int) -> float:
    """``mu_min((L^k)_{S^c})^(1/k)``: the bandwidth the set S can be trusted to recover.

    Computed as the smallest singular value of ``(L^{k/2})[:, S^c]`` (k even)
    on a spectrum-normalized L. An empty complement returns lambda_max.
    """
    M = _laplacian_matrix(L)
    n = M.shape[0]
    if int(k) != k or k < 2 or k % 2:
        raise ParameterError(f"cutoff power k must be a positive even integer, got {k}")
    idx = _indices(S, n)
    rest = np.setdiff1d(np.arange(n), idx)
    scale = estimate_lambda_max(M)
    if rest.size == 0:
        return scale / 1.01
    if scale <= 0:
        return 0.0
    Ms = (M / scale).tocsr()
    B = sp.identity(n, format="csr")[:, rest].toarray()
    for _ in range(k // 2):
        B = np.asarray(Ms @ B)
    R = sla.qr(B, mode="r")[0][: rest.size]
    sigma, _ = _smallest_singular_pair(R, None)
    return float(scale * (sigma * sigma) ** (1.0 / k))


def band_from_cutoff(es: EigenSystem, omega: float) -> BandSet:
    """All frequencies at or below omega (always at least the zero frequency)."""
    tol = 1e-12 * max(1.0, es.lambda_max)
    size = int(np.count_nonzero(es.eigenvalues <= omega + tol))
    return BandSet(max(size, 1), float(omega))
