"""Vector Fitting with eigenvalue-based pole relocation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bases import Basis, make_basis, vandermonde
from .core import DomainError, FitReport, PartialFraction, SampleSet, residual_norm
from .sk import _cond, diagonal_of
from .varpro import VarproProblem
from .weights import Weight

__all__ = ["VfState", "vf_pole_update", "vf_fit", "auto_poles"]


@dataclass(frozen=True, eq=False)
class VfState:
    iteration: int
    poles: np.ndarray
    a: np.ndarray
    b: np.ndarray
    iteration_matrix_cond: float


def vf_pole_update(poles, b) -> np.ndarray:
    """Roots of ``1 + sum_k b_k / (z - poles_k)``: eigenvalues of ``diag(poles) - 1 b^T``."""
    lam = np.asarray(poles, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if lam.shape != b.shape:
        raise ValueError("poles and b must have equal length")
    if lam.size == 0:
        return lam.copy()
    A = np.diag(lam) - np.outer(np.ones_like(lam), b)
    try:
        return scipy.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError("eigensolver failed during pole relocation") from exc


def auto_poles(samples: SampleSet, n: int, symmetric: bool | None = None) -> np.ndarray:
    """Default starting poles spread along the sample range, just left of the samples.

    Imaginary parts are linearly spaced over the imaginary extent of the
    samples and real parts sit ``span / 100`` to the left of the leftmost
    sample.  Conjugate-symmetric data gets conjugate pairs (plus one real
    pole when ``n`` is odd).
    """
    if n == 0:
        return np.zeros(0, dtype=complex)
    z = samples.points
    if symmetric is None:
        symmetric = samples.is_conjugate_symmetric()
    lo, hi = z.imag.min(), z.imag.max()
    span = hi - lo
    if span <= 1e-12 * max(1.0, np.max(np.abs(z))):
        # samples on a horizontal line: spread along the real range instead
        rlo, rhi = z.real.min(), z.real.max()
        rspan = max(rhi - rlo, 1.0)
        re = np.linspace(rlo, rhi, n)
        return re + 1j * (z.imag.mean() + rspan / 100 * (1 + np.arange(n) % 2 * -2))
    shift = z.real.min() - span / 100
    if symmetric:
        k = n // 2
        top = max(abs(lo), abs(hi))
        beta = np.linspace(top / (k + 1), top, k) if k else np.zeros(0)
        poles = [shift + 1j * x for x in beta] + [shift - 1j * x for x in beta]
        if n % 2:
            poles.append(shift - span / 100)
        return np.array(poles, dtype=complex)
    return shift + 1j * np.linspace(lo, hi, n)


def _separate(lam, z, scale, notes):
    lam = lam.copy()
    for k in range(len(lam)):
        if np.min(np.abs(z - lam[k])) < 1e-14 * scale:
            lam[k] += 1e-8 * scale * (1 + 1j)
            notes.append(f"pole {k} collided with a sample and was perturbed")
    for k in range(1, len(lam)):
        while np.min(np.abs(lam[:k] - lam[k])) < 1e-12 * scale:
            lam[k] += 1e-10 * scale * 1j
            notes.append(f"pole {k} coincided with another pole and was perturbed")
    return lam


def vf_fit(
    samples: SampleSet,
    n: int,
    m: int | None = None,
    initial_poles=None,
    tail_basis: Basis | None = None,
    weight: Weight | None = None,
    max_iter: int = 50,
    tol: float = 1e-10,
):
    """Fit a degree ``(m, n)`` rational function (``m >= n - 1``) by Vector Fitting.

    Parameters
    ----------
    samples : SampleSet
    n : int
        Number of poles.
    m : int, optional
        Numerator degree, default ``n - 1``.  ``m - n + 1`` polynomial tail
        terms are appended when ``m >= n``.
    initial_poles : array_like or 'auto', optional
    tail_basis : Basis, optional
        Defaults to Legendre polynomials scaled to the samples.
    weight : Weight, optional
        Identity (default) or diagonal.
    max_iter, tol : int, float
        Stop once ``||b||_2 < tol`` or after ``max_iter`` relocations.

    Returns
    -------
    PartialFraction, FitReport, list of VfState
    """
    m = n - 1 if m is None else m
    if m < n - 1:
        raise ValueError("partial-fraction form requires m >= n - 1")
    N = samples.N
    if N < m + n + 2:
        raise ValueError(f"Vector Fitting of degree ({m}, {n}) needs at least {m + n + 2} samples")
    dw = diagonal_of(weight, N)
    z, f = samples.points, samples.values
    scale = max(np.max(np.abs(z)), 1.0)
    nt = m - n + 1
    if nt > 0:
        tail_basis = tail_basis or make_basis("scaled_legendre", nt - 1, samples)
        Phi = vandermonde(tail_basis, z)
    else:
        tail_basis = None
        Phi = np.zeros((N, 0), dtype=complex)

    if initial_poles is None or (isinstance(initial_poles, str) and initial_poles == "auto"):
        lam = auto_poles(samples, n)
    else:
        lam = np.asarray(initial_poles, dtype=complex).ravel()
        if len(lam) != n:
            raise ValueError(f"expected {n} initial poles, got {len(lam)}")
        if len(np.unique(lam)) != n:
            raise ValueError("initial poles must be distinct")
    notes: list[str] = []
    lam = _separate(lam, z, scale, notes)

    history: list[VfState] = []
    converged = False
    for it in range(1, max_iter + 1):
        if n == 0:
            converged = True
            break
        C = 1.0 / (z[:, None] - lam[None, :])
        A = dw[:, None] * np.hstack([C, Phi, -f[:, None] * C])
        x, *_ = scipy.linalg.lstsq(A, dw * f)
        a, b = x[: n + nt], x[n + nt :]
        history.append(VfState(it, lam, a, b, _cond(A)))
        lam = _separate(vf_pole_update(lam, b), z, scale, notes)
        if np.linalg.norm(b) < tol:
            converged = True
            break

    # residues and tail for the final poles
    C = 1.0 / (z[:, None] - lam[None, :])
    A = dw[:, None] * np.hstack([C, Phi])
    d, *_ = scipy.linalg.lstsq(A, dw * f) if A.shape[1] else (np.zeros(0),)
    model = PartialFraction(lam, d[:n], d[n:], tail_basis)

    w = weight or Weight.identity()
    try:
        prob = VarproProblem(samples, w, m, n, "pf", tail_basis=tail_basis)
        grad = float(np.linalg.norm(prob.evaluate(prob.pack(lam)).gradient))
    except DomainError:
        grad = np.nan
    report = FitReport(
        model=model,
        residual_norm=residual_norm(samples, model),
        weighted_residual_norm=residual_norm(samples, model, w),
        gradient_norm=grad,
        iterations=len(history),
        converged=converged,
        diagnostics={
            "iteration_matrix_cond": history[-1].iteration_matrix_cond if history else np.nan,
            "b_norm": float(np.linalg.norm(history[-1].b)) if history else 0.0,
            "warnings": notes,
        },
    )
    return model, report, history
