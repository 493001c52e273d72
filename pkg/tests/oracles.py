"""Independent extended-precision oracles used by the test-suite.

The residual functions here rebuild each model matrix from scratch in
mpmath (monomial bases only) and solve the linear least-squares problem by
normal equations at 40 digits, so central differences with a 1e-6 step are
limited by truncation error alone.
"""
import mpmath as mp
import numpy as np

DPS = 40


def _mpc(x):
    return mp.mpc(complex(x).real, complex(x).imag)


def _columns(par, p, z, m, n):
    """Model columns (before weighting) as lists of mp values per sample."""
    N = len(z)
    cols = []
    if par.startswith("poly"):
        q = [mp.fsum(p[k] * z[j] ** k for k in range(n + 1)) for j in range(N)]
        for k in range(m + 1):
            cols.append([z[j] ** k / q[j] for j in range(N)])
        return cols
    if par == "pf":
        for lam in p:
            cols.append([1 / (z[j] - lam) for j in range(N)])
    else:
        for k in range(n // 2):
            c0, c1 = p[2 * k], p[2 * k + 1]
            q = [z[j] ** 2 + c1 * z[j] + c0 for j in range(N)]
            cols.append([1 / q[j] for j in range(N)])
            cols.append([z[j] / q[j] for j in range(N)])
        if n % 2:
            cols.append([1 / (z[j] + p[n - 1]) for j in range(N)])
    for k in range(m - n + 1):
        cols.append([z[j] ** k for j in range(N)])
    return cols


class MpProblem:
    """Fixed data of one problem converted to mpmath once."""

    def __init__(self, par, z, f, W, m, n):
        self.par, self.m, self.n = par, m, n
        self.real = par.endswith("_real")
        with mp.workdps(DPS):
            self.z = [_mpc(v) for v in z]
            N = len(self.z)
            self.W = None if W is None else mp.matrix([[_mpc(W[i, j]) for j in range(N)] for i in range(N)])
            y = mp.matrix([_mpc(v) for v in f])
            self.y = y if self.W is None else self.W * y

    def residual(self, x):
        """Stacked residual ``[Re r; Im r]`` at mp parameters ``x`` (list of mpf)."""
        if self.real:
            p = list(x)
        else:
            k = len(x) // 2
            p = [mp.mpc(x[i], x[k + i]) for i in range(k)]
        N = len(self.z)
        cols = _columns(self.par, p, self.z, self.m, self.n)
        A = mp.matrix(N, len(cols))
        for k, col in enumerate(cols):
            for j in range(N):
                A[j, k] = col[j]
        if self.W is not None:
            A = self.W * A
        y = self.y
        if self.real:
            As = mp.matrix(2 * N, A.cols)
            ys = mp.matrix(2 * N, 1)
            for j in range(N):
                ys[j], ys[N + j] = mp.re(y[j]), mp.im(y[j])
                for k in range(A.cols):
                    As[j, k], As[N + j, k] = mp.re(A[j, k]), mp.im(A[j, k])
            A, y = As, ys
        if A.cols:
            AH = A.T if self.real else A.H
            r = y - A * mp.lu_solve(AH * A, AH * y)
        else:
            r = y
        if self.real:
            return [r[j] for j in range(2 * N)]
        return [mp.re(r[j]) for j in range(N)] + [mp.im(r[j]) for j in range(N)]

    def stacked_residual(self, x):
        with mp.workdps(DPS):
            return np.array([float(v) for v in self.residual([mp.mpf(float(v)) for v in x])])

    def fd_jacobian(self, x, h=1e-6):
        """Central differences with step ``h`` on the extended-precision residual."""
        cols = []
        with mp.workdps(DPS):
            xm = [mp.mpf(float(v)) for v in x]
            hh = mp.mpf(h)
            for i in range(len(xm)):
                up, dn = list(xm), list(xm)
                up[i] += hh
                dn[i] -= hh
                rp, rm = self.residual(up), self.residual(dn)
                cols.append([float((a - b) / (2 * hh)) for a, b in zip(rp, rm)])
        return np.array(cols).T
