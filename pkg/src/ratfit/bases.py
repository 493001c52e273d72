"""Polynomial bases and their Vandermonde matrices.

Three kinds are supported:

``monomial``
    ``phi_k(z) = z**k``.
``scaled_legendre``
    Legendre polynomials ``P_k(x)`` (``P_k(1) = 1``) in the local variable
    ``x = (z - center) / half``, where ``[center - half, center + half]`` is the
    principal segment of the sample cloud.
``lagrange``
    Unnormalized node polynomials ``phi_k(z) = prod_{j != k} (z - node_j)``;
    the common factor ``prod_j (z - node_j)`` is never formed.

Every basis also exposes its power-series coefficients in the local variable
(:meth:`Basis.local_coefficients`), which is what root finding and change of
basis work with.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

__all__ = ["Basis", "make_basis", "vandermonde", "principal_segment", "coefficients_from_roots"]

KINDS = ("monomial", "scaled_legendre", "lagrange")


@dataclass(frozen=True)
class Basis:
    """Handle describing a polynomial basis of a fixed degree.

    Parameters
    ----------
    kind : {'monomial', 'scaled_legendre', 'lagrange'}
    degree : int
        Highest polynomial degree; the basis has ``degree + 1`` members.
    interval : tuple of complex, optional
        Endpoints of the segment mapped onto ``[-1, 1]`` (``scaled_legendre``).
    nodes : tuple of complex, optional
        Interpolation nodes (``lagrange``); ``len(nodes) == degree + 1``.
    real : bool
        For ``scaled_legendre`` on a segment parallel to the imaginary axis,
        column ``k`` is multiplied by ``1j**k`` so every member has real
        coefficients in ``z``.
    """

    kind: str
    degree: int
    interval: tuple[complex, complex] | None = None
    nodes: tuple[complex, ...] | None = None
    real: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {KINDS}")
        if self.degree < 0:
            raise ValueError("basis degree must be nonnegative")
        if self.kind == "scaled_legendre":
            if self.interval is None:
                raise ValueError("scaled_legendre basis requires an interval")
            a, b = self.interval
            if a == b:
                raise ValueError("scaled_legendre interval endpoints must be distinct")
        if self.kind == "lagrange":
            if self.nodes is None or len(self.nodes) != self.degree + 1:
                raise ValueError("lagrange basis requires exactly degree + 1 nodes")
            nd = np.asarray(self.nodes, dtype=complex)
            if len(np.unique(nd)) != len(nd):
                raise ValueError("lagrange nodes must be pairwise distinct")

    @property
    def size(self) -> int:
        return self.degree + 1

    @property
    def center(self) -> complex:
        if self.kind == "scaled_legendre":
            a, b = self.interval
            return (a + b) / 2
        if self.kind == "lagrange":
            return complex(np.mean(np.asarray(self.nodes, dtype=complex)))
        return 0j

    @property
    def scale(self) -> complex:
        if self.kind == "scaled_legendre":
            a, b = self.interval
            return (b - a) / 2
        if self.kind == "lagrange":
            nd = np.asarray(self.nodes, dtype=complex)
            s = float(np.max(np.abs(nd - self.center)))
            return complex(s if s > 0 else 1.0)
        return 1 + 0j

    @property
    def _rotated(self) -> bool:
        h = self.scale
        return self.kind == "scaled_legendre" and self.real and abs(h.imag) > abs(h.real)

    @property
    def is_real(self) -> bool:
        """True when every basis member has real coefficients in ``z``."""
        if self.kind == "monomial":
            return True
        if self.kind == "lagrange":
            return bool(np.all(np.asarray(self.nodes).imag == 0))
        c, h = self.center, self.scale
        if c.imag != 0:
            return False
        return h.imag == 0 or (self._rotated and h.real == 0)

    def local_coefficients(self) -> np.ndarray:
        """Matrix ``T`` with ``phi_k(z) = sum_j T[j, k] x**j``, ``x = (z - center)/scale``."""
        d = self.degree
        T = np.zeros((d + 1, d + 1), dtype=complex)
        if self.kind == "monomial":
            T[:, :] = np.eye(d + 1)
        elif self.kind == "scaled_legendre":
            for k in range(d + 1):
                e = np.zeros(k + 1)
                e[k] = 1.0
                T[: k + 1, k] = npleg.leg2poly(e)
                if self._rotated:
                    T[:, k] *= 1j**k
        else:
            nd = np.asarray(self.nodes, dtype=complex)
            c, h = self.center, self.scale
            xn = (nd - c) / h
            for k in range(d + 1):
                T[:, k] = h**d * nppoly.polyfromroots(np.delete(xn, k))
        return T


def principal_segment(points) -> tuple[complex, complex]:
    """Segment between the two samples of extreme projection on the dominant direction."""
    z = np.asarray(points, dtype=complex).ravel()
    dev = z - z.mean()
    X = np.column_stack([dev.real, dev.imag])
    if not np.any(X):
        raise ValueError("degenerate interval: all sample points coincide")
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    direction = vt[0, 0] + 1j * vt[0, 1]
    proj = (dev * np.conj(direction)).real
    a, b = z[np.argmin(proj)], z[np.argmax(proj)]
    return complex(a), complex(b)


def _real_segment(a: complex, b: complex) -> tuple[complex, complex]:
    # snap to a segment symmetric about the real axis (or lying on it)
    c = ((a + b) / 2).real
    h = (b - a) / 2
    if abs(h.imag) > abs(h.real):
        s = max(abs(a.imag), abs(b.imag))
        return complex(c, -s), complex(c, s)
    s = max(abs(a.real - c), abs(b.real - c))
    return complex(c - s), complex(c + s)


def make_basis(kind: str, degree: int, samples=None, real: bool = False, nodes=None) -> Basis:
    """Build a basis of the given kind and degree adapted to ``samples``.

    ``samples`` may be a :class:`~ratfit.core.SampleSet` or an array of points.
    With ``real=True`` the basis is forced to have real coefficients.
    """
    if degree < 0:
        raise ValueError("basis degree must be nonnegative")
    if kind == "monomial":
        return Basis("monomial", degree)
    points = getattr(samples, "points", samples)
    if kind == "scaled_legendre":
        if points is None:
            raise ValueError("scaled_legendre needs sample points to fix its interval")
        a, b = principal_segment(points)
        if real:
            a, b = _real_segment(a, b)
        return Basis("scaled_legendre", degree, interval=(a, b), real=real)
    if kind == "lagrange":
        if nodes is None:
            if points is None:
                raise ValueError("lagrange basis needs nodes or sample points")
            z = np.asarray(points, dtype=complex)
            nodes = z[np.linspace(0, len(z) - 1, degree + 1).round().astype(int)]
        b = Basis("lagrange", len(nodes) - 1, nodes=tuple(complex(x) for x in nodes))
        if b.degree != degree:
            raise ValueError("lagrange basis degree must equal len(nodes) - 1")
        if real and not b.is_real:
            raise ValueError("lagrange basis with non-real nodes cannot be real")
        return b
    raise ValueError(f"unknown basis kind {kind!r}")


def vandermonde(basis: Basis, points) -> np.ndarray:
    """Matrix with entries ``phi_k(z_j)``, shape ``(len(points), degree + 1)``."""
    z = np.asarray(points, dtype=complex).ravel()
    d = basis.degree
    V = np.empty((len(z), d + 1), dtype=complex)
    if basis.kind == "monomial":
        V[:, 0] = 1
        for k in range(1, d + 1):
            V[:, k] = V[:, k - 1] * z
    elif basis.kind == "scaled_legendre":
        x = (z - basis.center) / basis.scale
        V[:, 0] = 1
        if d >= 1:
            V[:, 1] = x
        for k in range(1, d):
            V[:, k + 1] = ((2 * k + 1) * x * V[:, k] - k * V[:, k - 1]) / (k + 1)
        if basis._rotated:
            V *= 1j ** np.arange(d + 1)
    else:
        # product form: no division, so points on a node need no special case
        nd = np.asarray(basis.nodes, dtype=complex)
        diff = z[:, None] - nd[None, :]
        for k in range(d + 1):
            V[:, k] = np.prod(np.delete(diff, k, axis=1), axis=1)
    return V


def coefficients_from_roots(basis: Basis, roots) -> np.ndarray:
    """Coefficients in ``basis`` of the monic polynomial ``prod_k (z - roots_k)``."""
    roots = np.asarray(roots, dtype=complex).ravel()
    n = len(roots)
    if n > basis.degree:
        raise ValueError("basis degree too small for the number of roots")
    c, h = basis.center, basis.scale
    local = h**n * nppoly.polyfromroots((roots - c) / h) if n else np.ones(1, dtype=complex)
    rhs = np.zeros(basis.size, dtype=complex)
    rhs[: n + 1] = local
    return np.linalg.solve(basis.local_coefficients(), rhs)
