"""Eigendecomposition, graph Fourier transform, spectral filters and localization operators."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import CapacityError, DimensionError, ParameterError, UnsupportedKernelError
from .graph import Laplacian
from .rng import make_rng

DENSE_CAP = 4096
QUAD_POINTS = 1000


def _laplacian_matrix(L) -> sp.csr_matrix:
    if isinstance(L, Laplacian):
        return L.matrix
    return sp.csr_matrix(L, dtype=float)


# ---------------------------------------------------------------------------
# eigen-decomposition and GFT


@dataclass(frozen=True, eq=False)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def fix_signs(U: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Flip columns so the first component with magnitude above ``tol`` is positive."""
    U = np.array(U, dtype=float, copy=True)
    big = np.abs(U) > tol
    first = np.argmax(big, axis=0)
    flip = U[first, np.arange(U.shape[1])] < 0
    U[:, flip] *= -1.0
    return U


def eigendecompose(L, cap: int = DENSE_CAP) -> EigenSystem:
    """Full symmetric eigendecomposition, eigenvalues ascending.

    Uses LAPACK's divide-and-conquer symmetric solver. Graphs larger than
    ``cap`` are rejected; use the polynomial representation there instead.
    """
    M = _laplacian_matrix(L)
    n = M.shape[0]
    if n > cap:
        raise CapacityError(
            f"n={n} exceeds the dense eigensolver cap {cap}; use the polynomial (PolySparse) path"
        )
    if M.nnz == 0 or not np.any(M.data):
        return EigenSystem(np.zeros(n), np.eye(n))
    lam, U = np.linalg.eigh(M.toarray())
    scale = max(1.0, float(lam[-1]))
    # the Laplacian is PSD and singular: round-off below zero is clipped
    lam = np.where(lam < 0, 0.0, lam)
    if lam[0] < 1e-9 * scale:
        lam[0] = 0.0
    return EigenSystem(lam, fix_signs(U))


def _check_length(es: EigenSystem, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == 0 or f.shape[0] != es.n:
        raise DimensionError(f"signal length {f.shape[0] if f.ndim else 0} does not match n={es.n}")
    return f


def gft(es: EigenSystem, f) -> np.ndarray:
    f = _check_length(es, f)
    return es.eigenvectors.T @ f


def igft(es: EigenSystem, fbar) -> np.ndarray:
    fbar = _check_length(es, fbar)
    return es.eigenvectors @ fbar


# ---------------------------------------------------------------------------
# kernels


class SpectralKernel:
    """Scalar filter kernel g(lambda).

    ``__call__`` evaluates on arbitrary frequencies; ``on_spectrum`` evaluates
    on a sorted eigenvalue vector and is what the exact paths use.
    """

    continuous = True

    def __call__(self, lam):
        raise NotImplementedError

    def on_spectrum(self, eigenvalues: np.ndarray) -> np.ndarray:
        return np.asarray(self(np.asarray(eigenvalues, dtype=float)), dtype=float)


@dataclass(frozen=True)
class HeatKernel(SpectralKernel):
    s: float

    def __post_init__(self):
        if not math.isfinite(self.s) or self.s < 0:
            raise ParameterError(f"heat scale s must be finite and >= 0, got {self.s}")

    def __call__(self, lam):
        return np.exp(-self.s * np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class IdealLowpass(SpectralKernel):
    """Indicator of the lowest ``band_size`` frequencies, or of ``lambda <= omega``."""

    band_size: int | None = None
    omega: float | None = None
    continuous = False

    def __post_init__(self):
        if (self.band_size is None) == (self.omega is None):
            raise ParameterError("IdealLowpass needs exactly one of band_size or omega")
        if self.band_size is not None and self.band_size < 0:
            raise ParameterError("band_size must be >= 0")

    def __call__(self, lam):
        if self.omega is None:
            raise UnsupportedKernelError("index-based ideal low-pass can only be evaluated on a full spectrum")
        return (np.asarray(lam, dtype=float) <= self.omega).astype(float)

    def on_spectrum(self, eigenvalues):
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        if self.band_size is not None:
            out = np.zeros(eigenvalues.size)
            out[: min(self.band_size, eigenvalues.size)] = 1.0
            return out
        return self(eigenvalues)


@dataclass(frozen=True)
class Monomial(SpectralKernel):
    power: int

    def __post_init__(self):
        if int(self.power) != self.power or self.power < 0:
            raise ParameterError(f"monomial power must be a nonnegative integer, got {self.power}")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.power == 0:
            return np.ones_like(lam)
        return lam ** int(self.power)


@dataclass(frozen=True)
class InverseShift(SpectralKernel):
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"delta must be > 0, got {self.delta}")

    def __call__(self, lam):
        return 1.0 / (np.asarray(lam, dtype=float) + self.delta)


@dataclass(frozen=True)
class ConstantKernel(SpectralKernel):
    value: float = 1.0

    def __call__(self, lam):
        return np.full(np.shape(lam), float(self.value))


class CustomKernel(SpectralKernel):
    """User kernel, either a vectorized callable or a table interpolated linearly."""

    def __init__(self, func: Callable | None = None, grid=None, values=None):
        if (func is None) == (grid is None):
            raise ParameterError("CustomKernel needs either func or (grid, values)")
        if grid is not None:
            grid = np.asarray(grid, dtype=float)
            values = np.asarray(values, dtype=float)
            if grid.shape != values.shape or grid.ndim != 1 or grid.size < 2:
                raise ParameterError("grid and values must be equal-length 1-D arrays (>= 2 points)")
            if np.any(np.diff(grid) <= 0):
                raise ParameterError("grid must be strictly increasing")
        self.func, self.grid, self.values = func, grid, values

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(lam), dtype=float) * np.ones_like(lam)
        return np.interp(lam, self.grid, self.values)

    def __repr__(self):
        return f"CustomKernel({'func' if self.func is not None else 'table'})"


# ---------------------------------------------------------------------------
# filtering


def filter_exact(es: EigenSystem, kernel: SpectralKernel, f) -> np.ndarray:
    f = _check_length(es, f)
    g = kernel.on_spectrum(es.eigenvalues)
    coef = es.eigenvectors.T @ f
    coef = g * coef if coef.ndim == 1 else g[:, None] * coef
    return es.eigenvectors @ coef


def chebyshev_coefficients(
    kernel: SpectralKernel, order: int, lambda_max: float, quad_points: int = QUAD_POINTS
) -> np.ndarray:
    """Coefficients ``a_0..a_P`` with g(lambda) ~ sum_k a_k T_k(2 lambda / lambda_max - 1).

    The zeroth coefficient already carries the 1/2 factor.
    """
    if not kernel.continuous:
        raise UnsupportedKernelError(f"{kernel!r} is discontinuous; use the exact eigen-based path")
    if int(order) != order or order < 1:
        raise ParameterError(f"Chebyshev order must be an integer >= 1, got {order}")
    if not lambda_max > 0:
        raise ParameterError(f"lambda_max must be > 0, got {lambda_max}")
    theta = np.pi * (np.arange(quad_points) + 0.5) / quad_points
    lam = 0.5 * lambda_max * (np.cos(theta) + 1.0)
    g = kernel(lam)
    k = np.arange(int(order) + 1)
    coeffs = (2.0 / quad_points) * (np.cos(np.outer(k, theta)) @ g)
    coeffs[0] *= 0.5
    return coeffs


def chebyshev_eval(coeffs, lam, lambda_max: float) -> np.ndarray:
    """Evaluate the expansion at scalar frequencies (used for checking accuracy)."""
    x = 2.0 * np.asarray(lam, dtype=float) / lambda_max - 1.0
    return np.polynomial.chebyshev.chebval(x, np.asarray(coeffs, dtype=float))


def filter_chebyshev(L, coeffs, lambda_max: float, f, true_lambda_max: float | None = None) -> np.ndarray:
    """Apply the Chebyshev expansion of a kernel to ``f`` with sparse products only.

    ``f`` may be a vector or a block of column signals.
    """
    M = _laplacian_matrix(L)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != M.shape[0]:
        raise DimensionError(f"signal length {f.shape[0]} does not match n={M.shape[0]}")
    if not lambda_max > 0:
        raise ParameterError(f"lambda_max must be > 0, got {lambda_max}")
    if true_lambda_max is not None and lambda_max < true_lambda_max - 1e-6:
        warnings.warn(
            f"Chebyshev interval upper end {lambda_max:.6g} is below the spectrum bound "
            f"{true_lambda_max:.6g}; the expansion is extrapolated",
            RuntimeWarning,
            stacklevel=2,
        )
    coeffs = np.asarray(coeffs, dtype=float)
    alpha = 2.0 / lambda_max

    def shifted(x):
        return alpha * (M @ x) - x

    t_prev = f
    out = coeffs[0] * t_prev
    if coeffs.size == 1:
        return out
    t_cur = shifted(f)
    out = out + coeffs[1] * t_cur
    for c in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * shifted(t_cur) - t_prev
        out = out + c * t_cur
    return out


# ---------------------------------------------------------------------------
# localization operators


@dataclass(frozen=True)
class ExactDense:
    eigensystem: EigenSystem


@dataclass(frozen=True)
class PolySparse:
    order: int = 12
    drop_tol: float = 1e-10
    lambda_max: float | None = None
    block: int = 256


@dataclass(frozen=True, eq=False)
class LocalizationOperator:
    """T = U g(Lambda) U^T, dense (exact) or sparse (Chebyshev polynomial in L)."""

    matrix: np.ndarray | sp.csr_matrix
    kernel: SpectralKernel
    representation: str
    order: int | None = None
    lambda_max: float | None = None
    eigensystem: EigenSystem | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def abs(self):
        return abs(self.matrix) if self.is_sparse else np.abs(self.matrix)

    def scaled(self, c: float) -> "LocalizationOperator":
        return LocalizationOperator(
            self.matrix * c, self.kernel, self.representation, self.order, self.lambda_max, self.eigensystem
        )


def localization_matrix(L, kernel: SpectralKernel, mode: ExactDense | PolySparse) -> LocalizationOperator:
    if isinstance(mode, ExactDense):
        es = mode.eigensystem
        g = kernel.on_spectrum(es.eigenvalues)
        U = es.eigenvectors
        T = (U * g) @ U.T
        T = 0.5 * (T + T.T)
        return LocalizationOperator(T, kernel, "exact", None, es.lambda_max, es)
    if not isinstance(mode, PolySparse):
        raise ParameterError(f"unknown localization mode {mode!r}")

    M = _laplacian_matrix(L)
    n = M.shape[0]
    lmax = mode.lambda_max if mode.lambda_max is not None else estimate_lambda_max(M)
    if lmax <= 0:
        # edgeless graph: every frequency is zero
        T = sp.identity(n, format="csr") * float(kernel(np.zeros(1))[0])
        return LocalizationOperator(T.tocsr(), kernel, "poly", mode.order, 0.0)
    coeffs = chebyshev_coefficients(kernel, mode.order, lmax)
    pieces = []
    for start in range(0, n, mode.block):
        stop = min(n, start + mode.block)
        E = np.zeros((n, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        pieces.append(sp.csc_matrix(filter_chebyshev(M, coeffs, lmax, E)))
    T = sp.hstack(pieces, format="csr")
    T = (0.5 * (T + T.T)).tocsr()
    if mode.drop_tol > 0 and T.nnz:
        cut = mode.drop_tol * np.abs(T.data).max()
        T.data[np.abs(T.data) < cut] = 0.0
        T.eliminate_zeros()
    T.sort_indices()
    return LocalizationOperator(T, kernel, "poly", mode.order, lmax)


def estimate_lambda_max(L, tol: float = 1e-4, max_iters: int = 500) -> float:
    """Largest-eigenvalue estimate inflated by 1%, a safe upper end for Chebyshev intervals.

    Plain power iteration stalls far below the top eigenvalue when the upper
    spectrum is clustered, so the estimate comes from a Lanczos iteration
    (ARPACK) with a fixed start vector, which keeps it deterministic. Small
    matrices are handled densely.
    """
    M = _laplacian_matrix(L)
    n = M.shape[0]
    if M.nnz == 0 or not np.any(M.data):
        return 0.0
    if n <= 64:
        return 1.01 * float(np.linalg.eigvalsh(M.toarray())[-1])
    v0 = make_rng(0, "lambda-max-start", n).standard_normal(n)
    try:
        top = eigsh(M, k=1, which="LA", tol=tol, maxiter=max_iters, v0=v0, return_eigenvectors=False)
        est = float(top[0])
    except ArpackNoConvergence as exc:
        est = float(np.max(exc.eigenvalues)) if len(exc.eigenvalues) else _power_iteration(M, v0, max_iters)
    return 1.01 * est


def _power_iteration(M, x, max_iters):
    x = x / np.linalg.norm(x)
    best = 0.0
    for _ in range(max_iters):
        y = M @ x
        best = max(best, float(x @ y))
        norm = np.linalg.norm(y)
        if norm == 0:
            break
        x = y / norm
    return best
