import numpy as np
import pytest

from ratfit.bases import coefficients_from_roots, make_basis, vandermonde
from ratfit.core import DomainError, PolyRatio, SampleSet, evaluate
from ratfit.sk import UnsupportedWeightError, sk_fit
from ratfit.weights import Weight


def rational_samples():
    z = 1j * np.linspace(-5, 5, 30) + 0.2
    f = (1 + 2 * z) / ((z + 1) * (z - 2 + 1j))
    return SampleSet(z, f)


def test_exact_rational_after_one_iteration():
    s = rational_samples()
    mono1, mono2 = make_basis("monomial", 1), make_basis("monomial", 2)
    model, report, hist = sk_fit(s, 1, 2, num_basis=mono1, den_basis=mono2)
    assert hist[0].b[0] == 1.0
    first = PolyRatio(mono1, mono2, hist[0].a, hist[0].b)
    assert np.linalg.norm(s.values - evaluate(first, s.points)) < 1e-10
    assert report.residual_norm < 1e-10


def test_constant_data():
    s = SampleSet(np.arange(1.0, 5.0), np.full(4, 2.5))
    model, report, hist = sk_fit(s, 0, 0)
    assert report.converged and report.iterations == 1
    assert model.a[0] / model.b[0] == pytest.approx(2.5)


def test_b0_fixed_every_iteration_and_telemetry():
    s = rational_samples()
    den = make_basis("scaled_legendre", 3, s)
    psi0 = vandermonde(den, [0.0])[0, 0]
    _, report, hist = sk_fit(s, 2, 3, max_iter=8)
    assert all(h.b[0] == psi0 for h in hist)
    assert all(np.isfinite(h.iteration_matrix_cond) and h.iteration_matrix_cond >= 1 for h in hist)
    assert "iteration_matrix_cond" in report.diagnostics


def test_fixed_point_start():
    s = rational_samples()
    den = make_basis("scaled_legendre", 2, s)
    b_true = coefficients_from_roots(den, [-1, 2 - 1j])
    _, report, hist = sk_fit(s, 1, 2, den_basis=den, b_init=b_true, tol=1e-8)
    b_true = b_true * (hist[0].b[0] / b_true[0])
    assert report.iterations <= 2
    np.testing.assert_allclose(hist[-1].b, b_true, atol=1e-8 * np.linalg.norm(b_true))


def test_diagonal_weight_accepted_dense_rejected():
    s = rational_samples()
    _, rep, _ = sk_fit(s, 1, 2, Weight.diagonal(np.linspace(1, 2, s.N)))
    assert rep.residual_norm < 1e-10
    with pytest.raises(UnsupportedWeightError):
        sk_fit(s, 1, 2, Weight.dense(np.eye(s.N)))


def test_denominator_vanishing():
    s = SampleSet([0.0, 1.0, 2.0, 3.0], [1, 2, 3, 4])
    mono = make_basis("monomial", 1)
    with pytest.raises(DomainError):
        sk_fit(s, 0, 1, num_basis=make_basis("monomial", 0), den_basis=mono, b_init=[-1, 1])


def test_preconditions():
    s = SampleSet([0.0, 1.0, 2.0], [1, 2, 3])
    with pytest.raises(ValueError):
        sk_fit(s, 1, 1)


def test_nonconvergence_returns_last_iterate():
    rng = np.random.default_rng(0)
    z = 1j * np.linspace(-3, 3, 40)
    s = SampleSet(z, rng.standard_normal(40) + 1j * rng.standard_normal(40))
    model, report, hist = sk_fit(s, 4, 5, max_iter=3)
    assert report.iterations == 3 and not report.converged
    np.testing.assert_array_equal(model.b, hist[-1].b)
