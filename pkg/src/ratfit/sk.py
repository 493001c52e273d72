"""Generalized Sanathanan-Koerner iteration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bases import Basis, make_basis, vandermonde
from .core import DomainError, FitReport, PolyRatio, SampleSet, residual_norm
from .varpro import VarproProblem
from .weights import Weight

__all__ = ["SkState", "UnsupportedWeightError", "sk_fit", "diagonal_of"]


class UnsupportedWeightError(ValueError):
    """The linearized fixed-point methods accept only identity or diagonal weights."""


@dataclass(frozen=True, eq=False)
class SkState:
    iteration: int
    a: np.ndarray
    b: np.ndarray
    iteration_matrix_cond: float
    step_norm: float


def diagonal_of(weight: Weight | None, N: int) -> np.ndarray:
    if weight is None or weight.kind == "identity":
        return np.ones(N)
    if weight.kind == "diagonal":
        weight.check_size(N)
        return np.asarray(weight.data)
    raise UnsupportedWeightError("dense weights are not supported by SK or Vector Fitting")


def _cond(A):
    if A.size == 0:
        return 1.0
    s = scipy.linalg.svdvals(A)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


def sk_fit(
    samples: SampleSet,
    m: int,
    n: int,
    weight: Weight | None = None,
    num_basis: Basis | None = None,
    den_basis: Basis | None = None,
    max_iter: int = 50,
    tol: float = 1e-10,
    b_init=None,
):
    """Fit a degree ``(m, n)`` rational function by SK iteration.

    Each step solves the linearized problem scaled by the previous
    denominator with the coefficient of the constant member ``psi_0`` held at
    ``psi_0(0)``.

    Parameters
    ----------
    samples : SampleSet
    m, n : int
        Numerator and denominator degrees.
    weight : Weight, optional
        Identity (default) or diagonal.
    num_basis, den_basis : Basis, optional
        Defaults to Legendre polynomials scaled to the samples.
    max_iter, tol : int, float
        Stop once ``||b_l - b_{l-1}||_2 < tol`` or after ``max_iter`` steps.
    b_init : array_like, optional
        Starting denominator; rescaled so that its constant coefficient is
        ``psi_0(0)``.  Defaults to ``psi_0(0) e_0``.

    Returns
    -------
    PolyRatio, FitReport, list of SkState
    """
    if m < 0 or n < 0:
        raise ValueError("degrees must be nonnegative")
    N = samples.N
    if N < m + n + 2:
        raise ValueError(f"SK of degree ({m}, {n}) needs at least {m + n + 2} samples")
    dw = diagonal_of(weight, N)
    num_basis = num_basis or make_basis("scaled_legendre", m, samples)
    den_basis = den_basis or make_basis("scaled_legendre", n, samples)
    z, f = samples.points, samples.values
    Phi = vandermonde(num_basis, z)
    Psi = vandermonde(den_basis, z)
    psi0 = Psi[0, 0]
    if not np.allclose(Psi[:, 0], psi0, rtol=1e-14, atol=0) or psi0 == 0:
        raise ValueError("the first denominator basis member must be a nonzero constant")
    b0 = psi0

    if b_init is None:
        b = np.zeros(n + 1, dtype=complex)
        b[0] = b0
    else:
        b = np.asarray(b_init, dtype=complex).copy()
        if b[0] == 0:
            raise ValueError("starting denominator has zero constant coefficient")
        b *= b0 / b[0]

    base = np.hstack([-Phi, f[:, None] * Psi[:, 1:]])
    history: list[SkState] = []
    converged = False
    a = np.zeros(m + 1, dtype=complex)
    for it in range(1, max_iter + 1):
        q = Psi @ b
        bad = np.flatnonzero(np.abs(q) < 1e-300)
        if bad.size:
            raise DomainError("SK denominator vanishes", int(bad[0]))
        s = dw / q
        A = s[:, None] * base
        rhs = s * (b0 * Psi[:, 0] * f)
        x, *_ = scipy.linalg.lstsq(A, -rhs)
        a = x[: m + 1]
        b_new = np.concatenate([[b0], x[m + 1 :]])
        step = float(np.linalg.norm(b_new - b))
        history.append(SkState(it, a, b_new, _cond(A), step))
        b = b_new
        if step < tol:
            converged = True
            break

    model = PolyRatio(num_basis, den_basis, a, b)
    w = weight or Weight.identity()
    try:
        ev = VarproProblem(samples, w, m, n, "poly", num_basis, den_basis).evaluate(np.concatenate([b.real, b.imag]))
        grad = float(np.linalg.norm(ev.gradient))
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
            "step_norm": history[-1].step_norm if history else np.nan,
        },
    )
    return model, report, history
