"""Rational-function representations, evaluation and residual norms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.polynomial import Polynomial

from .bases import Basis, vandermonde
from .weights import Weight

__all__ = [
    "SampleSet",
    "PolyRatio",
    "PartialFraction",
    "BarycentricRational",
    "FitReport",
    "DomainError",
    "ConversionError",
    "evaluate",
    "to_partial_fraction",
    "residual_norm",
    "conjugate_pairs",
]

TOL_ROOT_SEP = 1e-8
# A double root perturbed by rounding splits by about sqrt(eps) |lambda|, so
# the effective separation test can never be tighter than a few sqrt(eps).
_ROOT_SEP = max(TOL_ROOT_SEP, 8 * np.sqrt(np.finfo(float).eps))
# relative distance under which a barycentric evaluation point snaps to its node
NODE_SNAP = 1e-13
TINY = 1e-300


class DomainError(ValueError):
    """Evaluation at a pole (or a zero of the denominator)."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (point index {index})")
        self.index = index


class ConversionError(ValueError):
    """A representation change that cannot be carried out, e.g. repeated poles."""


def _readonly(x):
    x = np.array(x)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Points ``z_j`` and values ``f(z_j)``."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.points, dtype=complex).ravel()
        f = np.asarray(self.values, dtype=complex).ravel()
        if len(z) != len(f):
            raise ValueError(f"{len(z)} points but {len(f)} values")
        if len(z) == 0:
            raise ValueError("at least one sample is required")
        if len(np.unique(z)) != len(z):
            _, first, counts = np.unique(z, return_index=True, return_counts=True)
            dup = z[first[counts > 1][0]]
            rows = np.flatnonzero(z == dup).tolist()
            raise ValueError(f"duplicate sample points at indices {rows}")
        object.__setattr__(self, "points", _readonly(z))
        object.__setattr__(self, "values", _readonly(f))

    @property
    def N(self) -> int:
        return len(self.points)

    def subset(self, mask) -> "SampleSet":
        return SampleSet(self.points[mask], self.values[mask])

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        """True if the samples are closed under ``(z, f) -> (conj z, conj f)``."""
        z, f = self.points, self.values
        scale = max(np.max(np.abs(z)), 1.0)
        fscale = max(np.max(np.abs(f)), 1e-300)
        for j in range(self.N):
            d = np.abs(z - np.conj(z[j]))
            k = int(np.argmin(d))
            if d[k] > rtol * scale or abs(f[k] - np.conj(f[j])) > 1e-10 * fscale:
                return False
        return True


@dataclass(frozen=True, eq=False)
class PolyRatio:
    """``r(z) = sum_k a_k phi_k(z) / sum_k b_k psi_k(z)``."""

    num_basis: Basis
    den_basis: Basis
    a: np.ndarray
    b: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        a = np.asarray(self.a).ravel()
        b = np.asarray(self.b).ravel()
        if len(a) != self.num_basis.size or len(b) != self.den_basis.size:
            raise ValueError("coefficient lengths must match basis sizes")
        if not np.any(b):
            raise ValueError("denominator coefficients must not all vanish")
        if self.real_flag:
            if np.any(np.imag(a)) or np.any(np.imag(b)):
                raise ValueError("real PolyRatio requires real coefficients")
            if not (self.num_basis.is_real and self.den_basis.is_real):
                raise ValueError("real PolyRatio requires real-coefficient bases")
            a, b = np.real(a).astype(float), np.real(b).astype(float)
        else:
            a, b = a.astype(complex), b.astype(complex)
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))

    @property
    def degree(self) -> tuple[int, int]:
        return self.num_basis.degree, self.den_basis.degree


@dataclass(frozen=True, eq=False)
class PartialFraction:
    """``r(z) = sum_k rho_k / (z - lambda_k) + sum_k c_k varphi_k(z)``."""

    poles: np.ndarray
    residues: np.ndarray
    tail: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tail_basis: Basis | None = None
    real_flag: bool = False

    def __post_init__(self):
        lam = np.asarray(self.poles, dtype=complex).ravel()
        rho = np.asarray(self.residues, dtype=complex).ravel()
        c = np.asarray(self.tail).ravel()
        if len(lam) != len(rho):
            raise ValueError("poles and residues must have equal length")
        if len(np.unique(lam)) != len(lam):
            raise ValueError("poles must be pairwise distinct")
        if len(c):
            if self.tail_basis is None or self.tail_basis.size != len(c):
                raise ValueError("tail coefficients need a tail basis of matching size")
        if self.real_flag:
            _check_real_partial_fraction(lam, rho, c, self.tail_basis)
            c = np.real(c).astype(float)
        else:
            c = c.astype(complex)
        object.__setattr__(self, "poles", _readonly(lam))
        object.__setattr__(self, "residues", _readonly(rho))
        object.__setattr__(self, "tail", _readonly(c))

    @property
    def n(self) -> int:
        return len(self.poles)


def _check_real_partial_fraction(lam, rho, c, tail_basis):
    for k, (l, r) in enumerate(zip(lam, rho)):
        if l.imag == 0:
            if r.imag != 0:
                raise ValueError(f"real pole {k} must carry a real residue")
            continue
        partner = np.flatnonzero(lam == np.conj(l))
        if partner.size != 1:
            raise ValueError(f"pole {k} has no exact conjugate partner")
        if rho[partner[0]] != np.conj(r):
            raise ValueError(f"residues of conjugate poles {k}, {partner[0]} are not conjugate")
    if np.any(np.imag(c)):
        raise ValueError("real PartialFraction requires real tail coefficients")
    if len(c) and not tail_basis.is_real:
        raise ValueError("real PartialFraction requires a real tail basis")


@dataclass(frozen=True, eq=False)
class BarycentricRational:
    """``r(z) = sum_k f_k b_k / (z - z_k) / sum_k b_k / (z - z_k)``."""

    nodes: np.ndarray
    node_values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.nodes, dtype=complex).ravel()
        f = np.asarray(self.node_values, dtype=complex).ravel()
        w = np.asarray(self.weights, dtype=complex).ravel()
        if not len(z) == len(f) == len(w):
            raise ValueError("nodes, node_values and weights must have equal length")
        if len(np.unique(z)) != len(z):
            raise ValueError("barycentric nodes must be pairwise distinct")
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise ValueError("barycentric weights must not all vanish")
        if abs(nrm - 1) > 1e-12:
            w = w / nrm
        object.__setattr__(self, "nodes", _readonly(z))
        object.__setattr__(self, "node_values", _readonly(f))
        object.__setattr__(self, "weights", _readonly(w))


Rational = Union[PolyRatio, PartialFraction, BarycentricRational]


@dataclass
class FitReport:
    """Outcome of one fit."""

    model: Rational
    residual_norm: float
    weighted_residual_norm: float
    gradient_norm: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.residual_norm < 0 or self.weighted_residual_norm < 0:
            raise ValueError("residual norms must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iteration count must be nonnegative")

    def normalized_residual(self, samples: SampleSet) -> float:
        return self.residual_norm / np.linalg.norm(samples.values)


def evaluate(r: Rational, points) -> np.ndarray:
    """Evaluate any representation at ``points``."""
    z = np.asarray(points, dtype=complex).ravel()
    if isinstance(r, PolyRatio):
        q = vandermonde(r.den_basis, z) @ r.b
        bad = np.flatnonzero(np.abs(q) < TINY)
        if bad.size:
            raise DomainError("denominator vanishes", int(bad[0]))
        return (vandermonde(r.num_basis, z) @ r.a) / q
    if isinstance(r, PartialFraction):
        out = np.zeros(len(z), dtype=complex)
        if r.n:
            D = z[:, None] - r.poles[None, :]
            hit = np.argwhere(D == 0)
            if hit.size:
                raise DomainError("evaluation at a pole", int(hit[0, 0]))
            out += (1.0 / D) @ r.residues
        if len(r.tail):
            out += vandermonde(r.tail_basis, z) @ r.tail
        return out
    if isinstance(r, BarycentricRational):
        return _eval_barycentric(r, z)
    raise TypeError(f"cannot evaluate {type(r).__name__}")


def _eval_barycentric(r: BarycentricRational, z: np.ndarray) -> np.ndarray:
    D = z[:, None] - r.nodes[None, :]
    near = np.abs(D) <= NODE_SNAP * np.maximum(1.0, np.abs(r.nodes))[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        C = 1.0 / D
        out = (C @ (r.weights * r.node_values)) / (C @ r.weights)
    rows, cols = np.nonzero(near)
    out[rows] = r.node_values[cols]
    return out


def conjugate_pairs(values, tol: float = 1e-10):
    """Split complex values into real entries and conjugate pairs.

    Returns ``(real_idx, pairs)`` where ``pairs`` lists ``(upper, lower)``
    index tuples; values with ``|Im| <= tol * max(1, |v|)`` count as real.
    Raises :class:`ConversionError` if some value lacks a partner.
    """
    v = np.asarray(values, dtype=complex)
    real_idx, pairs = [], []
    unused = set(range(len(v)))
    order = np.argsort(-np.abs(v.imag))
    for j in order:
        if j not in unused:
            continue
        unused.discard(j)
        if abs(v[j].imag) <= tol * max(1.0, abs(v[j])):
            real_idx.append(int(j))
            continue
        cand = [k for k in unused]
        if not cand:
            raise ConversionError("value without conjugate partner")
        k = min(cand, key=lambda k: abs(v[k] - np.conj(v[j])))
        if abs(v[k] - np.conj(v[j])) > 1e-6 * max(1.0, abs(v[j])):
            raise ConversionError("value without conjugate partner")
        unused.discard(k)
        up, lo = (j, k) if v[j].imag > 0 else (k, j)
        pairs.append((int(up), int(lo)))
    return real_idx, pairs


def _symmetrize(lam, rho):
    real_idx, pairs = conjugate_pairs(lam)
    lam, rho = lam.copy(), rho.copy()
    for j in real_idx:
        lam[j] = lam[j].real
        rho[j] = rho[j].real
    for up, lo in pairs:
        lam[lo] = np.conj(lam[up])
        rho[up] = (rho[up] + np.conj(rho[lo])) / 2
        rho[lo] = np.conj(rho[up])
    return lam, rho


def to_partial_fraction(r: PolyRatio, tail_basis: Basis | None = None) -> PartialFraction:
    """Convert a polynomial ratio to pole-residue form.

    Poles are the roots of ``q`` from a companion-matrix eigensolve in the
    denominator's local variable; residues are ``rem(lambda) / q'(lambda)``
    where ``rem`` is the remainder of ``p / q``; the quotient becomes the
    polynomial tail, expressed in ``tail_basis`` (default: the denominator's
    basis kind with degree ``m - n``).
    """
    c, h = r.den_basis.center, r.den_basis.scale
    qc = r.den_basis.local_coefficients() @ r.b
    nz = np.flatnonzero(np.abs(qc) > 1e-14 * np.max(np.abs(qc)))
    qc = qc[: nz[-1] + 1]
    Q = Polynomial(qc)
    n = len(qc) - 1

    cp, hp = r.num_basis.center, r.num_basis.scale
    P = Polynomial(r.num_basis.local_coefficients() @ r.a)(Polynomial([(c - cp) / hp, h / hp]))
    quot, rem = divmod(P, Q)

    x = Q.roots() if n else np.zeros(0, dtype=complex)
    lam = c + h * x
    if n > 1:
        dist = np.abs(lam[:, None] - lam[None, :])
        dist[np.diag_indices(n)] = np.inf
        if dist.min() <= _ROOT_SEP * np.max(np.abs(lam)):
            raise ConversionError("denominator has numerically repeated roots")
    rho = h * rem(x) / Q.deriv()(x) if n else np.zeros(0, dtype=complex)

    m = r.num_basis.degree
    ntail = m - n + 1 if m >= n else 0
    tail = np.zeros(0)
    tb = None
    if ntail:
        tb = tail_basis or _default_tail_basis(r.den_basis, ntail - 1, r.real_flag)
        ct, ht = tb.center, tb.scale
        T = quot(Polynomial([(ct - c) / h, ht / h])).coef
        rhs = np.zeros(tb.size, dtype=complex)
        k = min(len(T), tb.size)
        rhs[:k] = T[:k]
        tail = np.linalg.solve(tb.local_coefficients(), rhs)

    if r.real_flag:
        lam, rho = _symmetrize(lam, rho)
        tail = np.real(tail)
    return PartialFraction(lam, rho, tail, tb, real_flag=r.real_flag)


def _default_tail_basis(den: Basis, degree: int, real: bool) -> Basis:
    if den.kind == "scaled_legendre":
        return Basis("scaled_legendre", degree, interval=den.interval, real=den.real)
    return Basis("monomial", degree)


def residual_norm(samples: SampleSet, r: Rational, w: Weight | None = None) -> float:
    """``||W (f(Z) - r(Z))||_2``."""
    res = samples.values - evaluate(r, samples.points)
    if w is not None:
        w.check_size(samples.N)
        res = w @ res
    return float(np.linalg.norm(res))
