"""Gauss-Newton driver and the AAA-initialized fitting pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .aaa import aaa_fit, barycentric_poles, barycentric_residues
from .bases import coefficients_from_roots
from .core import ConversionError, DomainError, FitReport, SampleSet, residual_norm
from .varpro import VarproProblem, poles_to_quadratic
from .vecfit import auto_poles
from .weights import Weight

__all__ = [
    "GnOptions",
    "OptResult",
    "FitError",
    "TERMINATION_REASONS",
    "gn_step",
    "gauss_newton",
    "aaa_init_poles",
    "random_init_poles",
    "fit_rational",
]

TERMINATION_REASONS = ("grad_tol", "step_tol", "max_iter", "line_search_failure")
MIN_STEP = 1e-14
PAIR_RTOL = 0.1

# Errors an evaluator may raise at an infeasible point; the line search
# treats them as a rejected trial step.
_EVAL_ERRORS = (DomainError, ConversionError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


class FitError(RuntimeError):
    """A fit could not be started or finished; the cause is chained."""


@dataclass(frozen=True)
class GnOptions:
    max_iter: int = 100
    grad_tol: float = 1e-10
    step_tol: float = 1e-12
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    svd_truncation: float = 1e-10

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        for name in ("grad_tol", "step_tol", "svd_truncation"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass
class OptResult:
    x: np.ndarray
    residual_norms: list[float]
    gradient_norm: float
    iterations: int
    converged: bool
    termination_reason: str
    line_search_steps: list[float] = field(default_factory=list)


def gn_step(J: np.ndarray, r: np.ndarray, rtol: float = 1e-10):
    """Minimum-norm solution of ``min ||J d + r||`` with truncated SVD.

    Returns
    -------
    d : ndarray
        The step.
    discarded : ndarray
        Right singular vectors (as columns) of the truncated directions.
    """
    if J.shape[1] == 0:
        return np.zeros(0), np.zeros((0, 0))
    U, s, Vt = scipy.linalg.svd(J, full_matrices=False)
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, dtype=bool)
    k = int(np.count_nonzero(keep))
    d = -Vt[:k].T @ ((U[:, :k].T @ r) / s[:k])
    discarded = Vt[k:].T
    if Vt.shape[0] < J.shape[1]:
        # more unknowns than residuals: complete the nullspace basis
        discarded = scipy.linalg.null_space(Vt[:k]) if k else np.eye(J.shape[1])
    return d, discarded


def gauss_newton(
    eval_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    x0,
    opts: GnOptions | None = None,
) -> OptResult:
    """Minimize ``||r(x)||_2`` by Gauss-Newton with Armijo backtracking.

    Parameters
    ----------
    eval_fn : callable
        Maps a real vector to the real residual and its Jacobian.  It may
        raise at infeasible points (e.g. a pole on a sample); such trial
        steps are rejected.
    x0 : array_like
        Starting point, where ``eval_fn`` must succeed.
    opts : GnOptions, optional

    Returns
    -------
    OptResult
    """
    opts = opts or GnOptions()
    x = np.asarray(x0, dtype=float).copy()
    r, J = eval_fn(x)
    rn2 = float(r @ r)
    traj = [np.sqrt(rn2)]
    steps: list[float] = []
    it = 0
    while True:
        g = J.T @ r
        gnorm = float(np.linalg.norm(g))
        if gnorm <= opts.grad_tol * max(1.0, traj[-1]):
            return OptResult(x, traj, gnorm, it, True, "grad_tol", steps)
        if it >= opts.max_iter:
            return OptResult(x, traj, gnorm, it, False, "max_iter", steps)
        d, _ = gn_step(J, r, opts.svd_truncation)
        if np.linalg.norm(d) <= opts.step_tol * max(1.0, np.linalg.norm(x)):
            return OptResult(x, traj, gnorm, it, True, "step_tol", steps)
        slope = 2.0 * float(g @ d)  # directional derivative of ||r||^2
        t = 1.0
        while True:
            xt = x + t * d
            try:
                rt, Jt = eval_fn(xt)
                ok = np.all(np.isfinite(rt)) and float(rt @ rt) <= rn2 + opts.armijo_c * t * slope
            except _EVAL_ERRORS:
                ok = False
            if ok:
                break
            t *= opts.backtrack_factor
            if t < MIN_STEP:
                return OptResult(x, traj, gnorm, it, False, "line_search_failure", steps)
        it += 1
        steps.append(t)
        x, r, J = xt, rt, Jt
        rn2 = float(r @ r)
        traj.append(np.sqrt(rn2))
        if t * np.linalg.norm(d) <= opts.step_tol * max(1.0, np.linalg.norm(x)):
            gnorm = float(np.linalg.norm(J.T @ r))
            return OptResult(x, traj, gnorm, it, True, "step_tol", steps)


def _distinct_padding(poles: np.ndarray, extra: np.ndarray, scale: float) -> np.ndarray:
    out = list(poles)
    for p in extra:
        while out and np.min(np.abs(np.asarray(out) - p)) < 1e-8 * scale:
            p = p - 1e-3 * scale
        out.append(p)
    return np.asarray(out, dtype=complex)


def _select_real(lam: np.ndarray, order: np.ndarray, n: int) -> np.ndarray:
    """Greedily pick a conjugation-closed set of at most ``n`` poles by importance.

    Each off-axis pole is matched with the unused pole in the opposite
    half-plane closest to its conjugate (within ``PAIR_RTOL |lambda|``); the
    pair is replaced by the average of the two mirror images.
    """
    lam = np.asarray(lam, dtype=complex).copy()
    near = np.abs(lam.imag) < 1e-10 * np.abs(lam)
    lam[near] = lam[near].real
    used = np.zeros(len(lam), dtype=bool)
    chosen: list[complex] = []
    for i in order:
        if used[i]:
            continue
        used[i] = True
        x = lam[i]
        if x.imag == 0:
            if len(chosen) < n:
                chosen.append(complex(x.real))
            continue
        up = complex(x.real, abs(x.imag))
        cand = np.flatnonzero(~used & (np.sign(lam.imag) == -np.sign(x.imag)))
        if cand.size:
            j = cand[np.argmin(np.abs(lam[cand] - np.conj(x)))]
            if abs(lam[j] - np.conj(x)) <= PAIR_RTOL * abs(x):
                used[j] = True
                other = complex(lam[j].real, abs(lam[j].imag))
                up = (up + other) / 2
        if len(chosen) + 2 <= n:
            chosen += [up, np.conj(up)]
    return np.asarray(chosen, dtype=complex)


def _pad(samples: SampleSet, lam: np.ndarray, n: int, real: bool) -> np.ndarray:
    deficit = n - len(lam)
    if deficit <= 0:
        return lam
    scale = max(1.0, float(np.max(np.abs(samples.points))))
    extra = auto_poles(samples, deficit, symmetric=real)
    if real:
        # shift the whole padding block so exact closure survives the distinctness fix
        while lam.size and np.min(np.abs(lam[:, None] - extra[None, :])) < 1e-8 * scale:
            extra = extra - 1e-3 * scale
    return _distinct_padding(lam, extra, scale)


def _mirrored(samples: SampleSet) -> SampleSet:
    """Samples augmented with ``(conj z, conj f)`` where the mirror point is new.

    A real rational function satisfies ``r(conj z) = conj r(z)``, so the
    augmented set carries the same information for a real fit and makes
    AAA produce (nearly) conjugate pole pairs.
    """
    z, f = samples.points, samples.values
    scale = max(1.0, float(np.max(np.abs(z))))
    keep = [j for j in range(len(z)) if np.min(np.abs(z - np.conj(z[j]))) > 1e-14 * scale]
    if not keep:
        return samples
    return SampleSet(np.concatenate([z, np.conj(z[keep])]), np.concatenate([f, np.conj(f[keep])]))


def aaa_init_poles(samples: SampleSet, n: int, real: bool = False) -> np.ndarray:
    """Starting poles from an AAA fit of degree ``n`` to the same data.

    Keeps the ``n`` poles with the largest residues, pads a deficit with
    the Vector Fitting default poles, and for ``real=True`` returns a set
    closed under conjugation exactly.
    """
    if n == 0:
        return np.zeros(0, dtype=complex)
    r, _ = aaa_fit(_mirrored(samples) if real else samples, n)
    lam = barycentric_poles(r) if len(r.nodes) >= 2 else np.zeros(0, dtype=complex)
    if lam.size:
        order = np.argsort(-np.abs(barycentric_residues(r, lam)), kind="stable")
    else:
        order = np.zeros(0, dtype=int)
    if real:
        lam = _select_real(lam, order, n)
    else:
        lam = lam[order[:n]]
    return _pad(samples, lam, n, real)


def random_init_poles(samples: SampleSet, n: int, seed=None, real: bool = False) -> np.ndarray:
    """Random starting poles drawn from the bounding box of the samples.

    Poles are uniform on the box; when the samples lie near the imaginary
    axis the real parts are instead drawn from ``[-w, 0)`` with ``w`` the
    larger of the real extent and a tenth of the imaginary extent.
    """
    rng = np.random.default_rng(seed)
    z = samples.points
    rlo, rhi = z.real.min(), z.real.max()
    ilo, ihi = z.imag.min(), z.imag.max()
    near_axis = np.max(np.abs(z.real)) <= 0.05 * max(np.max(np.abs(z.imag)), 1e-300)
    if real:
        ilo, ihi = 0.0, max(abs(ilo), abs(ihi))
    k = (n + 1) // 2 if real else n
    im = rng.uniform(ilo, ihi, k)
    if near_axis:
        w = max(rhi - rlo, 0.1 * (ihi - ilo))
        re = -w * (1.0 - rng.uniform(0.0, 1.0, k))
    else:
        re = rng.uniform(rlo, rhi, k)
    if not real:
        return re + 1j * im
    out = []
    for j in range(n // 2):
        up = complex(re[j], abs(im[j]))
        out += [up, np.conj(up)]
    if n % 2:
        out.append(complex(re[-1]))
    return np.asarray(out, dtype=complex)


def _params_from_poles(problem: VarproProblem, poles: np.ndarray) -> np.ndarray:
    par = problem.parameterization
    if par == "pf":
        return problem.pack(poles)
    if par == "pf_real":
        return poles_to_quadratic(poles)
    b = coefficients_from_roots(problem.den_basis, poles)
    if par == "poly_real":
        b = b.real
    b = b / np.linalg.norm(b)
    return problem.pack(b)


def fit_rational(
    samples: SampleSet,
    m: int,
    n: int,
    weight: Weight | None = None,
    parameterization: str = "pf",
    init: str = "aaa",
    seed=None,
    initial_poles=None,
    options: GnOptions | None = None,
    kind: str = "scaled_legendre",
) -> FitReport:
    """Least-squares rational fit by variable projection and Gauss-Newton.

    Parameters
    ----------
    samples : SampleSet
    m, n : int
        Numerator and denominator degrees; the partial-fraction forms need
        ``m >= n - 1``.
    weight : Weight, optional
        Identity, diagonal or dense weight.
    parameterization : {'poly', 'poly_real', 'pf', 'pf_real'}
    init : {'aaa', 'random', 'user'}
        Source of the starting poles.  ``'random'`` uses ``seed`` and
        ``'user'`` uses ``initial_poles``.  For the real forms, user poles
        are made conjugation-closed the same way as AAA poles.
    options : GnOptions, optional
    kind : str
        Basis family for the polynomial parts.

    Returns
    -------
    FitReport
        ``model`` is a :class:`PolyRatio` for the polynomial forms and a
        :class:`PartialFraction` for the partial-fraction forms.
    """
    if parameterization.startswith("pf") and m < n - 1:
        raise ValueError(f"{parameterization} requires m >= n - 1, got ({m}, {n})")
    if m < 0 or n < 0:
        raise ValueError("degrees must be nonnegative")
    real = parameterization.endswith("_real")
    w = weight or Weight.identity()
    if parameterization.startswith("poly"):
        problem = VarproProblem.polynomial(samples, m, n, w, real=real, kind=kind)
    elif parameterization.startswith("pf"):
        problem = VarproProblem.partial_fraction(samples, m, n, w, real=real, kind=kind)
    else:
        raise ValueError(f"unknown parameterization {parameterization!r}")

    if init == "aaa":
        poles = aaa_init_poles(samples, n, real=real)
    elif init == "random":
        poles = random_init_poles(samples, n, seed, real=real)
    elif init == "user":
        if initial_poles is None:
            raise ValueError("init='user' requires initial_poles")
        poles = np.asarray(initial_poles, dtype=complex).ravel()
        if len(poles) != n:
            raise ValueError(f"expected {n} initial poles, got {len(poles)}")
        if real:
            poles = _pad(samples, _select_real(poles, np.arange(n), n), n, real)
    else:
        raise ValueError(f"unknown init {init!r}")

    try:
        x0 = _params_from_poles(problem, poles)
    except (ValueError, ConversionError) as exc:
        raise FitError(f"cannot convert initial poles for {parameterization}: {exc}") from exc

    cache: dict[bytes, object] = {}

    def eval_fn(x):
        ev = problem.evaluate(x)
        cache.clear()
        cache[x.tobytes()] = ev
        return ev.stacked_residual, ev.jacobian

    try:
        eval_fn(x0)
    except _EVAL_ERRORS as exc:
        raise FitError(f"{parameterization} evaluator failed at the initial point ({init} init): {exc}") from exc
    res = gauss_newton(eval_fn, x0, options)
    ev = cache.get(res.x.tobytes()) or problem.evaluate(res.x)
    try:
        model = problem.model(problem.unpack(res.x), ev)
    except (ConversionError, ValueError) as exc:
        raise FitError(f"{parameterization} result cannot be converted: {exc}") from exc
    return FitReport(
        model=model,
        residual_norm=residual_norm(samples, model),
        weighted_residual_norm=float(np.linalg.norm(ev.stacked_residual)),
        gradient_norm=res.gradient_norm,
        iterations=res.iterations,
        converged=res.converged,
        diagnostics={
            "parameterization": parameterization,
            "init": init,
            "initial_poles": poles,
            "termination_reason": res.termination_reason,
            "residual_trajectory": res.residual_norms,
            "basis_cond": ev.cond,
            "parameters": res.x,
        },
    )
