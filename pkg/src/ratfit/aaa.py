"""Adaptive Anderson-Antoulas (AAA) rational approximation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import BarycentricRational, SampleSet, _eval_barycentric

__all__ = ["AaaState", "build_loewner", "aaa_fit", "barycentric_poles", "barycentric_residues"]


@dataclass(frozen=True, eq=False)
class AaaState:
    """Snapshot after one greedy step."""

    active: np.ndarray
    remaining: np.ndarray
    weights: np.ndarray
    residuals: np.ndarray
    sigma_min: float
    stopped_early: bool = False

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def build_loewner(samples: SampleSet, active) -> np.ndarray:
    """Loewner matrix ``(f(zc_j) - f(zh_k)) / (zc_j - zh_k)``, rows over the non-active samples."""
    active = np.asarray(active, dtype=int)
    if active.size == 0:
        raise ValueError("at least one active node is required")
    if np.any(active < 0) or np.any(active >= samples.N) or len(np.unique(active)) != len(active):
        raise IndexError("active node indices out of range or repeated")
    mask = np.ones(samples.N, dtype=bool)
    mask[active] = False
    zc, fc = samples.points[mask], samples.values[mask]
    zh, fh = samples.points[active], samples.values[active]
    return (fc[:, None] - fh[None, :]) / (zc[:, None] - zh[None, :])


def _min_singular_vector(L: np.ndarray):
    if L.shape[0] == 0:
        b = np.zeros(L.shape[1], dtype=complex)
        b[-1] = 1
        return b, 0.0
    _, _, vh = scipy.linalg.svd(L, full_matrices=True)
    b = vh[-1].conj()
    return b, float(np.linalg.norm(L @ b))


def aaa_fit(samples: SampleSet, n: int, tol: float = 1e-13, cleanup: bool = False):
    """Greedy AAA fit of type ``(n, n)``.

    Parameters
    ----------
    samples : SampleSet
    n : int
        Target degree; at most ``n + 1`` support nodes are selected.
    tol : float
        Stop once ``max_j |f_j - r(z_j)| <= tol * ||f||_inf``.
    cleanup : bool
        Run one pass of Froissart-doublet removal on the final fit.

    Returns
    -------
    BarycentricRational, list of AaaState
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if samples.N < n + 2:
        raise ValueError(f"AAA of degree {n} needs at least {n + 2} samples, got {samples.N}")
    z, f = samples.points, samples.values
    fnorm = np.max(np.abs(f))
    res = f.copy()
    active: list[int] = []
    history: list[AaaState] = []
    mask = np.ones(samples.N, dtype=bool)
    for _ in range(n + 1):
        j = int(np.argmax(np.where(mask, np.abs(res), -1.0)))
        active.append(j)
        mask[j] = False
        L = build_loewner(samples, active)
        b, smin = _min_singular_vector(L)
        r = BarycentricRational(z[active], f[active], b)
        res = np.zeros_like(f)
        res[mask] = f[mask] - _eval_barycentric(r, z[mask])
        done = np.max(np.abs(res)) <= tol * fnorm
        history.append(
            AaaState(np.array(active), np.flatnonzero(mask), r.weights, res, smin, stopped_early=done and len(active) < n + 1)
        )
        if done:
            break
    if cleanup:
        r = _cleanup(samples, r, fnorm)
    return r, history


def barycentric_poles(r: BarycentricRational) -> np.ndarray:
    """Finite zeros of ``sum_k b_k / (z - z_k)`` from the arrowhead pencil."""
    k = len(r.nodes)
    if k < 2:
        raise ValueError("pole computation needs at least two nodes")
    E = np.zeros((k + 1, k + 1), dtype=complex)
    E[0, 1:] = r.weights
    E[1:, 0] = 1
    E[1:, 1:] = np.diag(r.nodes)
    B = np.eye(k + 1, dtype=complex)
    B[0, 0] = 0
    try:
        lam = scipy.linalg.eigvals(E, B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError("generalized eigensolver failed") from exc
    limit = 1e13 * (np.max(np.abs(r.nodes)) + 1)
    lam = lam[np.isfinite(lam)]
    lam = lam[np.abs(lam) < limit]
    keep = []
    for x in lam:
        d = x - r.nodes
        dist = np.min(np.abs(d))
        if dist == 0:
            continue
        if abs(np.sum(r.weights / d)) < 1e-8 * np.sum(np.abs(r.weights)) / dist:
            keep.append(x)
    return np.asarray(keep, dtype=complex)


def barycentric_residues(r: BarycentricRational, poles) -> np.ndarray:
    """Residues of ``r`` at the given (simple) poles."""
    lam = np.asarray(poles, dtype=complex)
    C = 1.0 / (lam[:, None] - r.nodes[None, :])
    num = C @ (r.weights * r.node_values)
    dden = -(C**2) @ r.weights
    return num / dden


def _cleanup(samples: SampleSet, r: BarycentricRational, fnorm: float) -> BarycentricRational:
    poles = barycentric_poles(r)
    if poles.size == 0:
        return r
    rho = barycentric_residues(r, poles)
    spurious = poles[np.abs(rho) < 1e-13 * fnorm]
    if spurious.size == 0:
        return r
    z = samples.points
    active = [int(np.flatnonzero(z == x)[0]) for x in r.nodes]
    for lam in spurious:
        if len(active) <= 1:
            break
        nodes = z[active]
        active.pop(int(np.argmin(np.abs(nodes - lam))))
    b, _ = _min_singular_vector(build_loewner(samples, active))
    return BarycentricRational(z[active], samples.values[active], b)
