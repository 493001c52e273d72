"""Seeded synthetic models, sampling schemes and random VARPRO instances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import make_basis
from .core import PartialFraction, SampleSet, evaluate
from .varpro import VarproProblem, poles_to_quadratic
from .weights import Weight

__all__ = [
    "random_stable_model",
    "imaginary_segment",
    "layered_scheme",
    "sample_model",
    "JacobianInstance",
    "random_instance",
]

# Real parts and counts of the layered sampling scheme.
LAYERS = ((0.001, 80), (0.01, 40), (0.1, 20), (1.0, 10))


def random_stable_model(n_poles: int, seed=None, band: float = 1000.0) -> PartialFraction:
    """A real, strictly proper rational function with ``n_poles`` stable poles.

    Pairs have imaginary parts uniform on ``[band/100, band]`` and damping
    ratios uniform on ``[0.01, 0.1]``.  Residues scale with the real part of
    their pole so all resonance peaks have comparable height.  An odd count
    adds one real pole uniform on ``[-band, -band/100]``.
    """
    rng = np.random.default_rng(seed)
    k = n_poles // 2
    im = rng.uniform(band / 100, band, k)
    re = -im * rng.uniform(0.01, 0.1, k)
    up = re + 1j * im
    rho = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * np.abs(re)
    lam = np.concatenate([up, up.conj()])
    res = np.concatenate([rho, rho.conj()])
    if n_poles % 2:
        p = -rng.uniform(band / 100, band)
        lam = np.append(lam, p)
        res = np.append(res, rng.standard_normal() * abs(p))
    return PartialFraction(lam, res, real_flag=True)


def imaginary_segment(N: int, half_width: float = 1000.0) -> np.ndarray:
    """``N`` equispaced points on ``[-i h, i h]``."""
    return 1j * np.linspace(-half_width, half_width, N)


def layered_scheme(seed=None, half_width: float = 1000.0) -> np.ndarray:
    """150 points in four vertical layers off the imaginary axis.

    80, 40, 20 and 10 points with real parts 0.001, 0.01, 0.1 and 1, and
    imaginary parts uniform on ``[-h, h]``.
    """
    rng = np.random.default_rng(seed)
    return np.concatenate([x + 1j * rng.uniform(-half_width, half_width, c) for x, c in LAYERS])


def sample_model(model, points) -> SampleSet:
    points = np.asarray(points, dtype=complex)
    return SampleSet(points, evaluate(model, points))


@dataclass
class JacobianInstance:
    problem: VarproProblem
    x: np.ndarray
    weight_matrix: np.ndarray | None


def random_instance(parameterization: str, seed: int, N: int = 50, n: int = 3, m: int | None = None,
                    weight_kind: str = "identity") -> JacobianInstance:
    """A random fitting problem and parameter point for Jacobian checks.

    Samples are uniform in the square ``[-1, 1] x [-i, i]`` with random complex
    data.  Poles lie on the annulus ``1.5 <= |z| <= 2`` so they stay away from
    the samples; polynomial parameterizations use the perturbed
    coefficients of the monic polynomial with those roots.  Bases are monomial.
    """
    rng = np.random.default_rng(seed)
    if m is None:
        m = n - 1
    z = rng.uniform(-1, 1, N) + 1j * rng.uniform(-1, 1, N)
    f = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    samples = SampleSet(z, f)
    if weight_kind == "identity":
        w, Wm = Weight.identity(), None
    elif weight_kind == "diagonal":
        d = rng.uniform(0.5, 2.0, N)
        w, Wm = Weight.diagonal(d), np.diag(d).astype(complex)
    elif weight_kind == "dense":
        Wm = np.eye(N) + 0.1 * (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(N)
        w = Weight.dense(Wm)
    else:
        raise ValueError(f"unknown weight kind {weight_kind!r}")
    real = parameterization.endswith("_real")
    k = (n + 1) // 2 if real else n
    radius = rng.uniform(1.5, 2.0, k)
    angle = rng.uniform(0, 2 * np.pi, k)
    poles = radius * np.exp(1j * angle)
    if real:
        base = poles
        poles = np.concatenate([base[: n // 2], base[: n // 2].conj()])
        if n % 2:
            poles = np.append(poles, base[-1].real)
    if parameterization.startswith("poly"):
        num = make_basis("monomial", m)
        den = make_basis("monomial", n)
        problem = VarproProblem(samples, w, m, n, parameterization, num, den)
        b = np.poly(poles)[::-1] if n else np.ones(1)
        b = b + 0.1 * rng.standard_normal(n + 1)
        x = problem.pack(b.real if real else b)
    else:
        tail = make_basis("monomial", m - n) if m >= n else None
        problem = VarproProblem(samples, w, m, n, parameterization, tail_basis=tail)
        x = poles_to_quadratic(poles) if real else problem.pack(poles)
    return JacobianInstance(problem, np.asarray(x, dtype=float), Wm)
