import numpy as np
import pytest

from corona_lab.analytic import AnalyticPoly, PolyRow, PsiSpec, psi_eval, validate_scenario
from corona_lab.errors import LabError
from corona_lab.fields import (
    alpha_gradient_check,
    compute_fields,
    d_pi_norm2_formula,
    measure_density,
    phi_field,
    pi_field,
    sample_fields,
    sample_nodes,
    verify_laplacian_formula,
    verify_measure_laplace,
    verify_pi_identities,
)
from corona_lab.quadrature import numeric_wirtinger

from conftest import poly

ZC = PolyRow.from_coeffs([[0, 1], [1]])
N3 = PolyRow.from_coeffs([[1 / 3, 1 / 6], [1 / 4, -1 / 8], [1 / 6]])


class TestSampleFields:
    def test_scalar_constant(self):
        s = sample_fields(PolyRow.from_coeffs([[1]]), poly(1), 0.3 + 0.1j)
        np.testing.assert_array_equal(s.phi, [1])
        np.testing.assert_array_equal(s.pi, [[0]])
        np.testing.assert_array_equal(s.d_pi, [[0]])
        np.testing.assert_array_equal(s.dbar_phi, [0])
        assert s.alpha == 1 and s.beta == 0

    def test_zc_at_origin(self):
        s = sample_fields(ZC, poly(1), 0.0)
        np.testing.assert_allclose(s.phi, [0, 1])
        np.testing.assert_allclose(s.pi, np.diag([1, 0]))
        np.testing.assert_allclose(s.F_deriv, [1, 0])

    @pytest.mark.parametrize("F", [ZC, N3, PolyRow.from_coeffs([[0.5, 0.25], [0.25]])])
    def test_pointwise_invariants(self, F):
        z = np.array([0.0, 0.4 - 0.3j, -0.9j, 0.7])
        fl = compute_fields(F, None, z)
        np.testing.assert_allclose(np.trace(fl.pi, axis1=1, axis2=2), F.n - 1, atol=1e-14)
        np.testing.assert_allclose(fl.pi @ fl.pi, fl.pi, atol=1e-14)
        np.testing.assert_allclose(np.conj(np.swapaxes(fl.pi, 1, 2)), fl.pi, atol=1e-15)
        np.testing.assert_allclose(np.einsum("sij,sj->si", fl.pi, np.conj(fl.F_val)), 0, atol=1e-15)
        np.testing.assert_allclose(np.sum(fl.F_val * fl.phi, axis=-1), 1, atol=1e-14)

    def test_small_norm(self):
        with pytest.raises(LabError) as e:
            sample_fields(PolyRow.from_coeffs([[0, 1]]), poly(1), 0.0)
        assert e.value.code == "SMALL_NORM"
        with pytest.raises(LabError):
            pi_field(PolyRow.from_coeffs([[0, 1], [0, 2]]), np.array([1e-8]))

    @pytest.mark.parametrize("F", [ZC, N3])
    def test_closed_forms_match_finite_differences_relative(self, F):
        z = np.array([0.2 + 0.1j, -0.5 + 0.4j, 0.8j])
        fl = compute_fields(F, None, z)
        d_pi, _ = numeric_wirtinger(lambda w: pi_field(F, w), z, 1e-4)
        _, dbar_phi = numeric_wirtinger(lambda w: phi_field(F, w), z, 1e-4)
        rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
        assert rel(fl.d_pi, d_pi) <= 1e-5
        assert rel(fl.dbar_phi, dbar_phi) <= 1e-5

    def test_norm_formula_fubini_study(self):
        z = np.linspace(-0.9, 0.9, 7) * np.exp(0.4j)
        fl = compute_fields(ZC, None, z)
        np.testing.assert_allclose(d_pi_norm2_formula(fl), 1 / (1 + np.abs(z) ** 2) ** 2, rtol=1e-13)
        np.testing.assert_allclose(np.linalg.norm(fl.d_pi, 2, axis=(1, 2)) ** 2, 1 / (1 + np.abs(z) ** 2) ** 2, rtol=1e-12)


class TestIdentities:
    def test_scalar_all_vanish(self, q):
        F = PolyRow.from_coeffs([[2 / 3, 1 / 3]])
        fl = compute_fields(F, None, sample_nodes(q, 200, 0))
        assert np.max(np.abs(fl.d_pi)) == 0
        assert np.max(np.abs(fl.dbar_phi)) <= 1e-12
        # the finite-difference oracle bottoms out near h**2 |f'''| / 3 ~ 1e-8
        rep = verify_pi_identities(F, q, 200)
        assert rep.max_residual <= 1e-6
        assert rep.residuals["pi_d_pi"] == 0 and rep.residuals["d_pi_adjoint_pi"] == 0

    @pytest.mark.parametrize("F", [ZC, PolyRow.from_coeffs([[0.5, 0.25], [0.25]]), N3])
    def test_residuals(self, q, F):
        rep = verify_pi_identities(F, q, 200)
        assert set(rep.residuals) >= {"pi_dbar_phi", "dbar_phi_adjoint", "d_dbar_phi", "pi_d_pi",
                                      "d_pi_adjoint_pi", "norm_d_pi_vs_dbar_phi", "norm_d_pi_formula"}
        assert rep.max_residual <= 1e-6
        assert rep.extras["projection_idempotent"] <= 1e-10
        assert rep.extras["projection_selfadjoint"] <= 1e-12
        assert rep.extras["rank_ratio"] <= 1e-8
        assert rep.extras["op_vs_hs_relative"] <= 1e-8

    def test_seed_recorded_and_deterministic(self, q):
        a = verify_pi_identities(ZC, q, 50, seed=7)
        c = verify_pi_identities(ZC, q, 50, seed=7)
        assert a.to_dict() == c.to_dict() and a.seed == 7

    def test_sample_nodes_empty_pool(self, q):
        with pytest.raises(LabError) as e:
            sample_nodes(q, 5, 0, np.zeros(q.size, dtype=bool))
        assert e.value.code == "NEAR_ZERO_OF_F"


class TestLaplacianFormula:
    def test_log_fubini_study(self, q):
        assert verify_laplacian_formula(ZC, "log", q, 200) <= 1e-6

    def test_reciprocal_constant(self, q):
        assert verify_laplacian_formula(PolyRow.from_coeffs([[1]]), "reciprocal", q, 50) == 0.0

    def test_log_scale_invariant(self, q):
        a = verify_laplacian_formula(ZC, "log", q, 100)
        for c in (0.25, 3.0):
            r = verify_laplacian_formula(ZC.scaled(c), "log", q, 100)
            assert r <= 1e-6
            assert abs(r - a) <= 1e-6

    def test_unknown_kind(self, q):
        with pytest.raises(ValueError):
            verify_laplacian_formula(ZC, "cube", q, 5)


class TestMeasureLaplace:
    def test_constant_f(self, q):
        F = ZC.scaled(1 / np.sqrt(2))
        z = sample_nodes(q, 20, 1)
        fl = compute_fields(F, poly(0.3), z)
        cross = np.abs(np.sum(fl.F_deriv * np.conj(fl.F_val), axis=-1)) ** 2
        np.testing.assert_allclose(measure_density(fl), 0.3 * cross / fl.norm2**3, rtol=1e-13)
        assert verify_measure_laplace(F, poly(0.3), q, 200) <= 1e-6

    def test_trivial(self, q):
        assert verify_measure_laplace(PolyRow.from_coeffs([[1]]), poly(1), q, 50) <= 1e-12

    def test_matched_pair(self, q, row_A):
        assert verify_measure_laplace(*row_A, q, 200) <= 1e-5

    def test_zero_f(self, q):
        with pytest.raises(LabError) as e:
            verify_measure_laplace(ZC, AnalyticPoly([]), q)
        assert e.value.code == "ZERO_F"

    def test_density_branch_free_against_explicit_root(self):
        # away from zeros a local branch of f^(1/2) is fine for an oracle
        F = ZC.scaled(0.5)
        f = F.square_sum() ** 2
        z = np.array([0.3 + 0.2j, -0.4j])
        fl = compute_fields(F, f, z)
        sq = np.sqrt(f(z))
        dsq = f.derivative()(z) / (2 * sq)
        dF = (fl.F_deriv * sq[:, None] - fl.F_val * dsq[:, None]) / sq[:, None] ** 2
        direct = np.abs(f(z)) ** 2 / fl.norm2**3 * np.abs(np.sum(dF * np.conj(fl.F_val), axis=-1)) ** 2
        np.testing.assert_allclose(measure_density(fl), direct, rtol=1e-12)


class TestAlpha:
    def test_alpha_range_under_hypothesis(self, q, row_A):
        F, f = row_A
        psi = PsiSpec()
        assert validate_scenario(F, f, psi).ok
        fl = compute_fields(F, f, q.nodes)
        bound = psi_eval(psi, np.maximum(-np.log(fl.norm2), 0))
        assert np.all(fl.alpha >= 0) and np.all(fl.alpha <= bound + 1e-12)

    def test_gradient_bound(self, q):
        F = ZC.scaled(1 / np.sqrt(1.0625))
        f = F.square_sum() ** 2
        z = sample_nodes(q, 200, 3)
        z = z[np.min(np.abs(z[:, None] - np.array([0.25j, -0.25j])[None, :]), axis=1) > 1e-3]
        grad, bound = alpha_gradient_check(F, f, z)
        assert np.all(grad <= bound * (1 + 1e-6) + 1e-8)
