"""The eleven acceptance criteria, each at its stated tolerance.

Every test prints a single ``CRITERION k PASS|FAIL`` line (see conftest.py).
The synthetic models are fixed by seed; see the decisions ledger for the
surrogate designs.
"""
import time

import numpy as np
import pytest

from ratfit.aaa import aaa_fit
from ratfit.bases import coefficients_from_roots, make_basis, vandermonde
from ratfit.core import SampleSet, evaluate, residual_norm, to_partial_fraction
from ratfit.optimizer import fit_rational
from ratfit.sk import sk_fit
from ratfit.synthetic import imaginary_segment, layered_scheme, random_instance, random_stable_model, sample_model
from ratfit.varpro import VarproProblem
from ratfit.vecfit import vf_fit
from ratfit.weights import cauchy_weight

from oracles import MpProblem

PARAMS = ("poly", "poly_real", "pf", "pf_real")
WEIGHT_KINDS = ("identity", "diagonal", "dense")
# Golden AAA residual for criterion 11, recorded on the first run.
GOLDEN_TAN_RESIDUAL = 2.1021979002481477e-10


def nrm(samples, model):
    return residual_norm(samples, model) / np.linalg.norm(samples.values)


def jacobian_instances():
    """Five seeded instances per parameterization, cycling degrees and weights."""
    out = []
    for par in PARAMS:
        for seed in range(5):
            n = (2, 3, 5)[seed % 3]
            m = n - 1 if seed % 2 == 0 else n + 2
            wk = WEIGHT_KINDS[seed % 3]
            out.append((par, seed, n, m, wk, random_instance(par, seed, N=50, n=n, m=m, weight_kind=wk)))
    return out


@pytest.fixture(scope="module")
def jac_cases():
    cases = []
    for par, seed, n, m, wk, inst in jacobian_instances():
        p = inst.problem
        oracle = MpProblem(par, p.samples.points, p.samples.values, inst.weight_matrix, m, n)
        cases.append((par, seed, inst, p.evaluate(inst.x), oracle.fd_jacobian(inst.x, h=1e-6)))
    return cases


def test_criterion_01_exact_recovery(criterion):
    model = random_stable_model(6, 0, band=20)
    s = sample_model(model, imaginary_segment(200, half_width=20))
    t0 = time.perf_counter()
    r_aaa, _ = aaa_fit(s, 6)
    vf_model, _, _ = vf_fit(s, 6, 5)
    gn = fit_rational(s, 5, 6, parameterization="pf", init="aaa")
    elapsed = time.perf_counter() - t0
    res = {"aaa": nrm(s, r_aaa), "vf": nrm(s, vf_model), "gn-pf": nrm(s, gn.model)}
    ok = all(v < 1e-8 for v in res.values()) and elapsed < 10
    detail = ", ".join(f"{k}={v:.2e}" for k, v in res.items()) + f", {elapsed:.2f}s"
    criterion(1, "exact recovery of a 6-pole model", ok, detail)


def test_criterion_02_jacobian_finite_differences(criterion, jac_cases):
    worst = {}
    for par, seed, inst, ev, F in jac_cases:
        mask = np.abs(F) > 1e-8
        err = float(np.max(np.abs(ev.jacobian - F)[mask] / np.abs(F[mask])))
        worst[par] = max(worst.get(par, 0.0), err)
    ok = all(v < 1e-5 for v in worst.values())
    criterion(2, "Jacobians match central differences", ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_criterion_03_projector_orthogonality(criterion, jac_cases):
    worst = 0.0
    for par, seed, inst, ev, F in jac_cases:
        A = ev.basis_matrix
        scale = np.linalg.norm(inst.problem.Wf)
        if par.endswith("_real"):
            As = np.vstack([A.real, A.imag]) if np.iscomplexobj(A) else A
            val = np.linalg.norm(As.T @ ev.stacked_residual)
        else:
            val = np.linalg.norm(A.conj().T @ ev.residual)
        worst = max(worst, val / scale)
    criterion(3, "residual orthogonal to the basis matrix", worst < 1e-10, f"worst {worst:.1e} x ||Wf||")


def test_criterion_04_structural_nullspace(criterion, jac_cases):
    counts = []
    for par, seed, inst, ev, F in jac_cases:
        if par == "poly":
            s = np.linalg.svd(ev.jacobian, compute_uv=False)
            counts.append(int(np.sum(s < 1e-8 * s[0])))
    criterion(4, "complex polynomial Jacobian has a 2-dimensional nullspace", all(c == 2 for c in counts),
              f"counts {counts}")


def test_criterion_05_real_constraint_symmetry(criterion):
    model = random_stable_model(6, 0)
    z = imaginary_segment(200)
    s = sample_model(model, z)
    upper = s.subset(z.imag > 0)
    lower = s.subset(z.imag < 0)
    grid = 0.5 + imaginary_segment(200, half_width=1200)

    sym, ratio = {}, {}
    for par in ("pf_real", "poly_real", "pf"):
        rep = fit_rational(upper, 3, 4, parameterization=par)
        r = rep.model
        ratio[par] = nrm(lower, r) / nrm(upper, r)
        if par.endswith("_real"):
            full = fit_rational(s, 3, 4, parameterization=par).model
            vals = evaluate(full, grid)
            sym[par] = float(np.max(np.abs(evaluate(full, grid.conj()) - vals.conj())) / np.max(np.abs(vals)))
    ok = (all(v < 1e-12 for v in sym.values()) and ratio["pf_real"] <= 10 and ratio["poly_real"] <= 10
          and ratio["pf"] >= 100)
    detail = ", ".join(f"sym[{k}]={v:.1e}" for k, v in sym.items()) + ", " + ", ".join(
        f"lower/upper[{k}]={v:.3g}" for k, v in ratio.items())
    criterion(5, "real-constrained fits are conjugate symmetric and extrapolate", ok, detail)


def test_criterion_06_basis_conditioning(criterion):
    pts = imaginary_segment(1000)
    conds = [np.linalg.cond(vandermonde(make_basis("scaled_legendre", d, pts), pts)) for d in range(22)]
    criterion(6, "scaled Legendre conditioning up to degree 21", max(conds) < 10, f"max cond {max(conds):.3f}")


def test_criterion_07_aaa_initialization(criterion):
    s = sample_model(random_stable_model(12, 0), imaginary_segment(400))
    results = []
    for n in (4, 8, 12):
        aaa = fit_rational(s, n - 1, n, parameterization="pf", init="aaa").normalized_residual(s)
        rand = [fit_rational(s, n - 1, n, parameterization="pf", init="random", seed=k).normalized_residual(s)
                for k in range(10)]
        results.append((n, aaa, float(np.median(rand))))
    ok = all(a <= med for _, a, med in results)
    detail = ", ".join(f"n={n}: aaa {a:.3g} vs median {med:.3g}" for n, a, med in results)
    criterion(7, "AAA init no worse than the median random init", ok, detail)


def pf_gradient(samples, poles):
    n = len(poles)
    prob = VarproProblem.partial_fraction(samples, n - 1, n)
    return float(np.linalg.norm(prob.evaluate(prob.pack(poles)).gradient))


def test_criterion_08_fixed_point_optimality_gap(criterion):
    s = sample_model(random_stable_model(12, 0), imaginary_segment(400))
    wins, total, lines = 0, 0, []
    for n in range(2, 11):
        gn = fit_rational(s, n - 1, n, parameterization="pf")
        g_gn = pf_gradient(s, gn.model.poles)
        den = make_basis("scaled_legendre", n, s)
        sk_model, _, _ = sk_fit(s, n - 1, n, b_init=coefficients_from_roots(den, gn.model.poles))
        g_sk = pf_gradient(s, to_partial_fraction(sk_model).poles)
        vf_model, _, _ = vf_fit(s, n, n - 1, initial_poles=gn.model.poles)
        g_vf = pf_gradient(s, vf_model.poles)
        total += 1
        win = g_gn <= 1e-3 * g_sk and g_gn <= 1e-3 * g_vf
        wins += win
        lines.append(f"n={n}:{'y' if win else 'n'}")
    criterion(8, "GN gradient far below SK and VF fixed points", wins >= 0.8 * total,
              f"{wins}/{total} degrees; " + " ".join(lines))


def test_criterion_09_weighted_fit_advantage(criterion):
    pts = layered_scheme(0)
    s = sample_model(random_stable_model(12, 0), pts)
    W = cauchy_weight(pts).weight()
    wins, total, miss = 0, 0, []
    for n in range(2, 13):
        gn = fit_rational(s, n - 1, n, W, parameterization="pf_real")
        vf_model, _, _ = vf_fit(s, n, n - 1)
        total += 1
        if gn.weighted_residual_norm <= residual_norm(s, vf_model, W):
            wins += 1
        else:
            miss.append(n)
    criterion(9, "Cauchy-weighted real GN beats identity-weight VF", wins >= 0.8 * total,
              f"{wins}/{total} degrees, misses at n={miss}")


def test_criterion_10_cauchy_whitening(criterion):
    worst = 0.0
    for seed in range(300):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(1, 51))
        pts: list[complex] = []
        while len(pts) < N:
            c = complex(rng.choice([0.001, 0.01, 0.1, 1.0]), rng.uniform(-1000, 1000))
            if all(abs(c - p) >= 0.01 for p in pts):
                pts.append(c)
        worst = max(worst, cauchy_weight(np.array(pts)).whitening_error())
    criterion(10, "Cauchy whitening error", worst < 1e-6, f"worst {worst:.1e} over 300 point sets")


def tan_residuals():
    z = np.exp(2j * np.pi * np.arange(1000) / 1000)
    s = SampleSet(z, np.tan(256 * z))
    return [nrm(s, aaa_fit(s, n)[0]) for n in range(0, 51)]


def test_criterion_11_aaa_stress(criterion):
    res = tan_residuals()
    rises = [n for n in range(1, len(res)) if res[n] > res[n - 1]]
    ok = not rises and res[50] < 1e-6
    criterion(11, "AAA on tan(256 z): nonincreasing and below 1e-6 by degree 50", ok,
              f"degree 50 residual {res[50]:.3e}; increases at n={rises[:8]}{'...' if len(rises) > 8 else ''}")


def test_tan_golden_value():
    res = tan_residuals()[50]
    assert res < 1e-6
    assert res == pytest.approx(GOLDEN_TAN_RESIDUAL, rel=0.5)
