"""Variable-projection residuals and Jacobians for rational least squares.

Four parameterizations are provided, each eliminating the linear
coefficients through an orthogonal projection and returning the residual
``P_perp W f`` together with its Jacobian with respect to the remaining
nonlinear parameters, split into real and imaginary parts:

``poly``       denominator coefficients ``b`` (complex), ``Omega = W diag(Psi b)^-1 Phi``
``poly_real``  real ``b``, projection on the real-stacked ``Omega``
``pf``         poles ``lambda`` (complex), ``Lambda = W [C(lambda)  Phi]``
``pf_real``    real quadratic-factor coefficients, ``Theta(b)``

The Jacobian is always the full variable-projection Jacobian, including
both the ``K`` and the ``L`` term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bases import Basis, make_basis, vandermonde
from .core import ConversionError, DomainError, PartialFraction, PolyRatio, SampleSet
from .weights import Weight

__all__ = [
    "PARAMETERIZATIONS",
    "VarproProblem",
    "VarproEval",
    "poly_residual_jacobian",
    "poly_real_residual_jacobian",
    "pf_residual_jacobian",
    "pf_real_residual_jacobian",
    "quad_to_partial_fraction",
    "poles_to_quadratic",
]

PARAMETERIZATIONS = ("poly", "poly_real", "pf", "pf_real")
PINV_RTOL = 1e-12
TINY = 1e-300


@dataclass(frozen=True, eq=False)
class VarproProblem:
    """Data shared by every evaluation of one fitting problem.

    Build with :meth:`polynomial` or :meth:`partial_fraction`.
    """

    samples: SampleSet
    weight: Weight
    m: int
    n: int
    parameterization: str
    num_basis: Basis | None = None
    den_basis: Basis | None = None
    tail_basis: Basis | None = None

    def __post_init__(self):
        if self.parameterization not in PARAMETERIZATIONS:
            raise ValueError(f"unknown parameterization {self.parameterization!r}")
        self.weight.check_size(self.samples.N)
        if self.parameterization.startswith("pf"):
            if self.m < self.n - 1:
                raise ValueError("partial-fraction forms require m >= n - 1")
            nt = self.m - self.n + 1
            if (nt > 0) != (self.tail_basis is not None) or (nt > 0 and self.tail_basis.size != nt):
                raise ValueError("tail basis must have degree m - n (absent when m = n - 1)")
            tail = vandermonde(self.tail_basis, self.samples.points) if nt > 0 else np.zeros((self.samples.N, 0))
            object.__setattr__(self, "Phi", tail)
        else:
            if self.num_basis.degree != self.m or self.den_basis.degree != self.n:
                raise ValueError("basis degrees must equal (m, n)")
            object.__setattr__(self, "Phi", vandermonde(self.num_basis, self.samples.points))
            object.__setattr__(self, "Psi", vandermonde(self.den_basis, self.samples.points))
        if self.realness:
            bases = [b for b in (self.num_basis, self.den_basis, self.tail_basis) if b is not None]
            if not all(b.is_real for b in bases):
                raise ValueError("real parameterizations need real-coefficient bases")
        object.__setattr__(self, "Wf", self.weight @ self.samples.values)

    @property
    def realness(self) -> bool:
        return self.parameterization.endswith("_real")

    @property
    def num_params(self) -> int:
        return {"poly": 2 * (self.n + 1), "poly_real": self.n + 1, "pf": 2 * self.n, "pf_real": self.n}[
            self.parameterization
        ]

    @classmethod
    def polynomial(cls, samples, m, n, weight=None, num_basis=None, den_basis=None, real=False, kind="scaled_legendre"):
        num_basis = num_basis or make_basis(kind, m, samples, real=real)
        den_basis = den_basis or make_basis(kind, n, samples, real=real)
        return cls(samples, weight or Weight.identity(), m, n, "poly_real" if real else "poly", num_basis, den_basis)

    @classmethod
    def partial_fraction(cls, samples, m, n, weight=None, tail_basis=None, real=False, kind="scaled_legendre"):
        if tail_basis is None and m >= n:
            tail_basis = make_basis(kind, m - n, samples, real=real)
        return cls(samples, weight or Weight.identity(), m, n, "pf_real" if real else "pf", tail_basis=tail_basis)

    def evaluate(self, x) -> "VarproEval":
        """Evaluate at a real parameter vector ``x`` (see :meth:`unpack`)."""
        p = self.unpack(x)
        fn = {
            "poly": poly_residual_jacobian,
            "poly_real": poly_real_residual_jacobian,
            "pf": pf_residual_jacobian,
            "pf_real": pf_real_residual_jacobian,
        }[self.parameterization]
        return fn(p, self)

    def pack(self, p) -> np.ndarray:
        """Natural parameters (complex ``b``/poles or real ``b``) to a real vector."""
        p = np.asarray(p)
        if self.realness:
            return np.real(p).astype(float)
        p = p.astype(complex)
        return np.concatenate([p.real, p.imag])

    def unpack(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.realness:
            return x
        k = len(x) // 2
        return x[:k] + 1j * x[k:]

    def model(self, p, ev: "VarproEval | None" = None):
        """Rational function for natural parameters ``p`` with optimal linear coefficients."""
        if ev is None:
            ev = self.evaluate(self.pack(p))
        if self.parameterization.startswith("poly"):
            return PolyRatio(self.num_basis, self.den_basis, ev.linear_coeffs, p, real_flag=self.realness)
        if self.parameterization == "pf":
            d = ev.linear_coeffs
            return PartialFraction(p, d[: self.n], d[self.n :], self.tail_basis)
        d = ev.linear_coeffs
        return quad_to_partial_fraction(p, d[: self.n], d[self.n :], self.tail_basis)


@dataclass(frozen=True, eq=False)
class VarproEval:
    """One residual/Jacobian evaluation."""

    basis_matrix: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    rank: int
    singular_values: np.ndarray
    residual: np.ndarray
    stacked_residual: np.ndarray
    K: np.ndarray
    L: np.ndarray
    jacobian: np.ndarray
    linear_coeffs: np.ndarray

    @property
    def gradient(self) -> np.ndarray:
        """Gradient of ``||r||^2 / 2``, i.e. ``J^T r``."""
        return self.jacobian.T @ self.stacked_residual

    @property
    def cond(self) -> float:
        s = self.singular_values
        if s.size == 0:
            return 1.0
        return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


@dataclass(frozen=True, eq=False)
class _Projection:
    Q: np.ndarray  # orthonormal basis of the numerical range
    R: np.ndarray
    s: np.ndarray
    coeffs: np.ndarray
    residual: np.ndarray
    pinv_adj: np.ndarray  # (A^+)^*, same shape as A
    rank: int

    def perp(self, X):
        return X - self.Q @ (self.Q.conj().T @ X)


def _project(A: np.ndarray, y: np.ndarray) -> _Projection:
    N, p = A.shape
    if p == 0:
        e = np.zeros((N, 0), dtype=A.dtype)
        return _Projection(e, np.zeros((0, 0)), np.zeros(0), np.zeros(0, dtype=A.dtype), y.copy(), e, 0)
    Q, R = scipy.linalg.qr(A, mode="economic")
    U, s, vh = scipy.linalg.svd(R)
    r = int(np.sum(s > PINV_RTOL * s[0])) if s[0] > 0 else 0
    Qt = Q @ U[:, :r]
    qy = Qt.conj().T @ y
    coeffs = vh[:r].conj().T @ (qy / s[:r])
    residual = y - Qt @ qy
    pinv_adj = Qt @ (vh[:r] / s[:r, None])
    return _Projection(Qt, R, s, coeffs, residual, pinv_adj, r)


def _stack(x):
    return np.concatenate([x.real, x.imag], axis=0)


def _unstack(x):
    N = x.shape[0] // 2
    return x[:N] + 1j * x[N:]


def _assemble_complex(K, L):
    return np.block([[K.real + L.real, -K.imag + L.imag], [K.imag + L.imag, K.real - L.real]])


def _check_denominator(q):
    bad = np.flatnonzero(np.abs(q) < TINY)
    if bad.size:
        raise DomainError("denominator vanishes at a sample", int(bad[0]))


def poly_residual_jacobian(b, problem: VarproProblem) -> VarproEval:
    """Residual and Jacobian over complex denominator coefficients ``b``."""
    b = np.asarray(b, dtype=complex)
    W = problem.weight
    Phi, Psi = problem.Phi, problem.Psi
    q = Psi @ b
    _check_denominator(q)
    Omega = W @ (Phi / q[:, None])
    pr = _project(Omega, problem.Wf)
    a, r = pr.coeffs, pr.residual
    Psi_q2 = Psi / (q**2)[:, None]
    K = pr.perp(W @ (Psi_q2 * (Phi @ a)[:, None]))
    H = Phi.conj().T @ (Psi_q2.conj() * W.adjoint(r)[:, None])
    L = pr.pinv_adj @ H
    return VarproEval(Omega, pr.Q, pr.R, pr.rank, pr.s, r, _stack(r), K, L, _assemble_complex(K, L), a)


def poly_real_residual_jacobian(b, problem: VarproProblem) -> VarproEval:
    """Residual and Jacobian over real denominator coefficients ``b`` (real bases)."""
    b = np.asarray(b, dtype=float)
    W = problem.weight
    Phi, Psi = problem.Phi, problem.Psi
    q = Psi @ b
    _check_denominator(q)
    Omega = W @ (Phi / q[:, None])
    pr = _project(_stack(Omega), _stack(problem.Wf))
    a, rs = pr.coeffs, pr.residual
    r = _unstack(rs)
    Psi_q2 = Psi / (q**2)[:, None]
    K = pr.perp(_stack(W @ (Psi_q2 * (Phi @ a)[:, None])))
    H = Phi.conj().T @ (Psi_q2.conj() * W.adjoint(r)[:, None])
    L = pr.pinv_adj @ H.real
    return VarproEval(Omega, pr.Q, pr.R, pr.rank, pr.s, r, rs, K, L, K + L, a)


def _check_poles(lam, z):
    n = len(lam)
    scale = max(np.max(np.abs(z)), 1.0)
    D = np.abs(z[:, None] - lam[None, :])
    if n and D.min() < 1e-14 * scale:
        j, k = np.unravel_index(np.argmin(D), D.shape)
        raise DomainError(f"pole {k} collides with a sample", int(j))
    if n > 1:
        P = np.abs(lam[:, None] - lam[None, :])
        P[np.diag_indices(n)] = np.inf
        if P.min() < 1e-12 * scale:
            raise DomainError("poles collide", int(np.argmin(P.min(axis=1))))


def pf_residual_jacobian(lam, problem: VarproProblem) -> VarproEval:
    """Residual and Jacobian over complex poles ``lam``."""
    lam = np.asarray(lam, dtype=complex)
    z = problem.samples.points
    W = problem.weight
    n = len(lam)
    _check_poles(lam, z)
    C = 1.0 / (z[:, None] - lam[None, :])
    Lam = W @ np.hstack([C, problem.Phi]) if problem.Phi.shape[1] or n else np.zeros((len(z), 0), dtype=complex)
    pr = _project(Lam, problem.Wf)
    d, r = pr.coeffs, pr.residual
    rho = d[:n]
    # d/d lambda_k of 1/(z - lambda_k) is 1/(z - lambda_k)^2
    WC2 = W @ (C**2)
    K = -pr.perp(WC2 * rho[None, :])
    L = -pr.pinv_adj[:, :n] * (WC2.conj().T @ r)[None, :]
    return VarproEval(Lam, pr.Q, pr.R, pr.rank, pr.s, r, _stack(r), K, L, _assemble_complex(K, L), d)


def _quad_blocks(b, z):
    """Denominators for each quadratic block and the trailing linear factor (odd n)."""
    n = len(b)
    quads = [z**2 + b[2 * k + 1] * z + b[2 * k] for k in range(n // 2)]
    lin = z + b[n - 1] if n % 2 else None
    return quads, lin


def pf_real_residual_jacobian(b, problem: VarproProblem) -> VarproEval:
    """Residual and Jacobian over the real quadratic-factor coefficients ``b``.

    ``b[2k]`` and ``b[2k+1]`` are the constant and linear coefficients of the
    ``k``-th monic quadratic ``z**2 + b[2k+1] z + b[2k]``; for odd ``n`` the
    last entry defines the linear factor ``z + b[n-1]``.  The linear
    coefficients come back ordered the same way: ``a[2k]`` multiplies
    ``1/q_k`` and ``a[2k+1]`` multiplies ``z/q_k``; the tail follows.
    """
    b = np.asarray(b, dtype=float)
    z = problem.samples.points
    W = problem.weight
    n = len(b)
    quads, lin = _quad_blocks(b, z)
    for q in quads + ([lin] if lin is not None else []):
        _check_denominator(q)
    cols = []
    for q in quads:
        cols += [1 / q, z / q]
    if lin is not None:
        cols.append(1 / lin)
    raw = np.column_stack(cols) if cols else np.zeros((len(z), 0), dtype=complex)
    Theta = W @ np.hstack([raw, problem.Phi])
    pr = _project(_stack(Theta), _stack(problem.Wf))
    d, rs = pr.coeffs, pr.residual
    r = _unstack(rs)
    a = d[:n]
    Wr = W.adjoint(r)

    Kc = np.zeros((len(z), n), dtype=complex)
    Lc = np.zeros((pr.pinv_adj.shape[1], n))
    for k, q in enumerate(quads):
        i0, i1 = 2 * k, 2 * k + 1
        num = (a[i0] + a[i1] * z) / q**2
        Kc[:, i0] = num
        Kc[:, i1] = z * num
        g0 = np.conj(1 / q**2) @ Wr
        g1 = np.conj(z / q**2) @ Wr
        g2 = np.conj(z**2 / q**2) @ Wr
        Lc[i0, i0], Lc[i1, i0] = g0.real, g1.real
        Lc[i0, i1], Lc[i1, i1] = g1.real, g2.real
    if lin is not None:
        Kc[:, n - 1] = a[n - 1] / lin**2
        Lc[n - 1, n - 1] = (np.conj(1 / lin**2) @ Wr).real
    K = pr.perp(_stack(W @ Kc))
    L = pr.pinv_adj @ Lc
    return VarproEval(Theta, pr.Q, pr.R, pr.rank, pr.s, r, rs, K, L, K + L, d)


def quad_to_partial_fraction(b, a, c=(), tail_basis: Basis | None = None) -> PartialFraction:
    """Expand the real quadratic partial-fraction form into poles and residues."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    n = len(b)
    poles, res = [], []
    for k in range(n // 2):
        c0, c1 = b[2 * k], b[2 * k + 1]
        a0, a1 = a[2 * k], a[2 * k + 1]
        disc = c1 * c1 - 4 * c0
        if abs(disc) <= 1e-14 * (c1 * c1 + 4 * abs(c0)) or disc == 0:
            raise ConversionError(f"quadratic block {k} has a repeated root")
        if disc < 0:
            lam = complex(-c1 / 2, np.sqrt(-disc) / 2)
            rho = (a1 * lam + a0) / (lam - np.conj(lam))
            poles += [lam, np.conj(lam)]
            res += [rho, np.conj(rho)]
        else:
            sq = np.sqrt(disc)
            # avoid cancellation in the smaller root
            l1 = (-c1 - np.copysign(sq, c1)) / 2
            l2 = c0 / l1 if l1 != 0 else (-c1 + sq) / 2
            for lam, other in ((l1, l2), (l2, l1)):
                poles.append(complex(lam))
                res.append(complex((a1 * lam + a0) / (lam - other)))
    if n % 2:
        poles.append(complex(-b[n - 1]))
        res.append(complex(a[n - 1]))
    c = np.asarray(c, dtype=float)
    return PartialFraction(np.array(poles, dtype=complex), np.array(res, dtype=complex), c,
                           tail_basis if len(c) else None, real_flag=True)


def poles_to_quadratic(poles) -> np.ndarray:
    """Real quadratic-factor coefficients for a conjugation-closed pole set.

    Conjugate pairs become ``(|lambda|^2, -2 Re lambda)``; real poles are
    paired off into quadratics with one left over as the linear factor when
    ``n`` is odd.
    """
    from .core import conjugate_pairs

    lam = np.asarray(poles, dtype=complex)
    real_idx, pairs = conjugate_pairs(lam)
    b = []
    for up, _ in pairs:
        l = lam[up]
        b += [abs(l) ** 2, -2 * l.real]
    reals = sorted(lam[real_idx].real)
    while len(reals) >= 2:
        l1, l2 = reals.pop(0), reals.pop(0)
        b += [l1 * l2, -(l1 + l2)]
    if reals:
        b.append(-reals[0])
    return np.array(b, dtype=float)
