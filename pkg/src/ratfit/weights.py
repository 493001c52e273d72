"""Weight matrices for the weighted least-squares norm ``||W (f - r)||_2``.

Besides the identity and diagonal weights accepted by every fitter, this
module builds the dense weight used in projected H2 model reduction: the
inverse square root of the Cauchy mass matrix ``M_jk = 1 / (z_j + conj(z_k))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "Weight",
    "CauchyMassFactorization",
    "IllConditionedError",
    "cauchy_mass",
    "inverse_sqrt_weight",
    "cauchy_weight",
    "apply",
]

# smallest admissible sigma_min / sigma_max of the mass matrix
SIGMA_CUTOFF = 1e-15


class IllConditionedError(ValueError):
    """Raised when the mass matrix is too ill-conditioned to invert its square root."""

    def __init__(self, ratio: float):
        super().__init__(f"mass matrix numerically singular: sigma_min/sigma_max = {ratio:.3e}")
        self.ratio = ratio


@dataclass(frozen=True, eq=False)
class Weight:
    """A left weighting applied to residual vectors.

    Use the constructors :meth:`identity`, :meth:`diagonal` and :meth:`dense`
    rather than building instances directly.
    """

    kind: str
    data: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "Weight":
        return cls("identity")

    @classmethod
    def diagonal(cls, d) -> "Weight":
        d = np.asarray(d)
        if d.ndim != 1:
            raise ValueError("diagonal weight must be a vector")
        if not np.all(np.isfinite(d)):
            raise ValueError("diagonal weight entries must be finite")
        return cls("diagonal", d)

    @classmethod
    def dense(cls, W) -> "Weight":
        W = np.asarray(W)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("dense weight must be a square matrix")
        return cls("dense", W)

    @property
    def is_dense(self) -> bool:
        return self.kind == "dense"

    def check_size(self, N: int) -> None:
        if self.kind != "identity" and self.data.shape[0] != N:
            raise ValueError(f"weight of size {self.data.shape[0]} does not match {N} samples")

    def matrix(self, N: int) -> np.ndarray:
        """Materialize ``W`` as an ``N x N`` array."""
        self.check_size(N)
        if self.kind == "identity":
            return np.eye(N)
        if self.kind == "diagonal":
            return np.diag(self.data)
        return self.data

    def __matmul__(self, X):
        return apply(self, X)

    def adjoint(self, X):
        """Apply ``W^*`` to ``X``."""
        if self.kind == "identity":
            return X
        if self.kind == "diagonal":
            d = np.conj(self.data)
            return d * X if np.ndim(X) == 1 else d[:, None] * X
        return self.data.conj().T @ X


def apply(w: Weight, X):
    """Left-multiply ``X`` (vector or matrix) by the weight."""
    if w.kind == "identity":
        return X
    X = np.asarray(X)
    if X.shape[0] != w.data.shape[0]:
        raise ValueError(f"shape mismatch: weight of size {w.data.shape[0]} applied to {X.shape}")
    if w.kind == "diagonal":
        return w.data * X if X.ndim == 1 else w.data[:, None] * X
    return w.data @ X


@dataclass(frozen=True, eq=False)
class CauchyMassFactorization:
    """SVD-based factorization ``M = U diag(sigma) U^*`` with ``W = diag(sigma)^{-1/2} U^*``."""

    M: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    W: np.ndarray

    def whitening_error(self) -> float:
        """``||W M W^* - I||_F``."""
        N = self.M.shape[0]
        return float(np.linalg.norm(self.W @ self.M @ self.W.conj().T - np.eye(N)))

    def weight(self) -> Weight:
        return Weight.dense(self.W)


def cauchy_mass(points) -> np.ndarray:
    """Hermitian Cauchy matrix ``1 / (z_j + conj(z_k))`` for right-half-plane points."""
    z = np.asarray(points, dtype=complex).ravel()
    bad = np.flatnonzero(z.real <= 0)
    if bad.size:
        raise ValueError(f"points must lie in the open right half plane; offending index {bad[0]}")
    M = 1.0 / (z[:, None] + np.conj(z)[None, :])
    # enforce exact Hermitian symmetry
    iu = np.triu_indices(len(z), 1)
    M[(iu[1], iu[0])] = np.conj(M[iu])
    M[np.diag_indices(len(z))] = M.diagonal().real
    return M


def inverse_sqrt_weight(M) -> CauchyMassFactorization:
    """Factor a Hermitian positive definite ``M`` and return its inverse square root weight."""
    M = np.asarray(M)
    U, s, _ = scipy.linalg.svd(M)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    if ratio <= SIGMA_CUTOFF:
        raise IllConditionedError(ratio)
    W = (U / np.sqrt(s)).conj().T
    return CauchyMassFactorization(M=M, U=U, sigma=s, W=W)


def cauchy_weight(points) -> CauchyMassFactorization:
    return inverse_sqrt_weight(cauchy_mass(points))
