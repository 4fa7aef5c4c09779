import numpy as np
import pytest

from specsplit import (
    NearSpectrumError,
    OperatorError,
    axis_grid,
    block_commutant_check,
    build_block_operator,
    dense_operator,
    diag_operator,
    halfplane_bound_check,
    m_subspace,
    multiset_match_distance,
    opposite_halfplane_grid,
    oracle_projection,
    parabola_probe,
    random_gap_operator,
    resolvent_sweep,
    sectoriality_report,
    spectral_norm,
    split,
    spectrum,
    subspace_angle,
)


def block23(n):
    return np.array([[n, 2.0 * n * n], [0.0, -n]], dtype=complex)


class TestSplit:
    def test_diag(self):
        result = split(diag_operator([1, -1]))
        assert np.allclose(result.p_plus, np.diag([1.0, 0.0]), atol=1e-8)
        assert result.max_residual() <= 1e-8
        assert result.passes(1e-8)
        assert result.spectrum_margin_plus == pytest.approx(1.0, abs=1e-8)

    def test_dichotomy_blocks(self):
        op = build_block_operator("dichotomy-2.3", 4)
        result = split(op)
        for n, sl in zip(range(1, 5), op.family_tag.block_slices()):
            assert np.abs(result.p_plus[sl, sl] - [[1, n], [0, 0]]).max() <= 1e-8
            assert np.abs(result.p_minus[sl, sl] - [[0, -n], [0, 1]]).max() <= 1e-8
        assert result.rank_plus == 4 and result.rank_minus == 4

    @pytest.mark.parametrize("seed", [1, 8])
    def test_matches_oracle(self, seed):
        op = random_gap_operator(8, seed=seed)
        result = split(op)
        pair = oracle_projection(op)
        assert spectral_norm(result.p_plus - pair.p_plus) <= 1e-6
        assert result.max_residual() <= 1e-6

    def test_refuses_axis_spectrum(self):
        with pytest.raises(NearSpectrumError):
            split(diag_operator([1j, -1j]))

    def test_scale_invariance_of_subspaces(self):
        op = random_gap_operator(7, seed=4)
        scaled = dense_operator(3.7 * op.entries)
        r1, r2 = split(op), split(scaled)
        assert subspace_angle(r1.basis_g_plus, r2.basis_g_plus) <= 1e-6
        assert subspace_angle(r1.basis_g_minus, r2.basis_g_minus) <= 1e-6

    def test_uniqueness_against_oracle_bases(self):
        op = random_gap_operator(9, seed=17)
        result = split(op)
        pair = oracle_projection(op)
        assert subspace_angle(result.basis_g_plus, pair.basis_plus) <= 1e-6
        assert subspace_angle(result.basis_g_minus, pair.basis_minus) <= 1e-6

    def test_spectrum_multiset_preserved(self):
        op = random_gap_operator(8, seed=30)
        result = split(op)
        joint = np.concatenate(
            [np.linalg.eigvals(result.restricted_plus), np.linalg.eigvals(result.restricted_minus)]
        )
        assert multiset_match_distance(joint, spectrum(op).eigenvalues) <= 1e-6

    def test_with_b_operators(self):
        op = diag_operator([1, -1])
        result = split(op, with_b=True)
        assert np.allclose(result.b_plus, np.diag([1.0, 0.0]), atol=1e-8)
        # P = S B on both sides
        assert spectral_norm(op.entries @ result.b_plus - result.p_plus) <= 1e-7

    def test_json_dict(self):
        payload = split(diag_operator([1, -1])).to_json_dict()
        assert payload["rank_plus"] == 1
        assert set(payload["residuals"]) >= {"a_sum", "p_sum_identity", "r_minus_identity"}


class TestSweep:
    def test_axis_bound_small_truncation(self):
        op = build_block_operator("bound-4.6", 10)
        report = resolvent_sweep(op, axis_grid(1e-2, 1e3, 16))
        assert report.sup_norm <= 3.0 + 1e-9

    def test_bisectorial_exponent(self):
        report = resolvent_sweep(diag_operator([1, -1]), axis_grid())
        assert report.fitted_beta == pytest.approx(1.0, abs=0.05)
        assert report.fit_residual <= 0.05

    def test_almost_bisect_exponent(self):
        op = build_block_operator("almost-bisect-5.5", 50, {"p": 0.5})
        report = resolvent_sweep(op, axis_grid(), fit_window=(10.0, 25.0))
        assert report.fitted_beta == pytest.approx(0.5, abs=0.05)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            resolvent_sweep(diag_operator([1, -1]), [])

    def test_near_spectrum_points_skipped(self):
        op = diag_operator([1, -1])
        grid = np.array([1.0 + 0j, 2j, 3j])  # first point is an eigenvalue
        with pytest.warns(UserWarning, match="skipped"):
            report = resolvent_sweep(op, grid)
        assert report.skipped == 1
        assert report.lambdas.size == 2

    def test_csv_shape(self):
        report = resolvent_sweep(diag_operator([1, -1]), axis_grid(1, 10, 4))
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "re_lambda,im_lambda,resolvent_norm"
        assert len(lines) == report.lambdas.size + 1
        # plain decimal floats, three columns per row
        for line in lines[1:]:
            parts = line.split(",")
            assert len(parts) == 3
            float(parts[0]), float(parts[1]), float(parts[2])


class TestHalfplaneChecks:
    def test_diag(self):
        result = split(diag_operator([1, -1]))
        grid = opposite_halfplane_grid("+")
        report = resolvent_sweep(diag_operator([1, -1]), axis_grid(1e-1, 1e3, 8))
        check = halfplane_bound_check(result, "+", grid, report.sup_norm)
        assert check.passed

    def test_dichotomy_truncation(self):
        op = build_block_operator("dichotomy-2.3", 4)
        result = split(op)
        sup = resolvent_sweep(op, axis_grid(1e-2, 1e3, 16)).sup_norm
        for side in "+-":
            check = halfplane_bound_check(result, side, opposite_halfplane_grid(side), sup)
            assert check.passed, check

    def test_mcintosh_yagi_block(self):
        op = build_block_operator("mcintosh-yagi", 1, {"Mconst": 10.0})
        result = split(op)
        sup = resolvent_sweep(op, axis_grid(1e-2, 1e3, 16)).sup_norm
        check = halfplane_bound_check(result, "+", opposite_halfplane_grid("+"), sup)
        assert check.passed

    def test_wrong_halfplane_grid(self):
        result = split(diag_operator([1, -1]))
        with pytest.raises(ValueError):
            halfplane_bound_check(result, "+", np.array([1.0 + 0j]), 10.0)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_mcintosh_yagi_oracle_restriction(self, m):
        # for the larger blocks the P = S^2 A route is out of float range, so
        # the restriction comes from the oracle basis instead of split()
        op = build_block_operator("mcintosh-yagi", m, {"Mconst": 10.0})
        basis = oracle_projection(op).basis_plus
        restricted = dense_operator(basis.conj().T @ op.entries @ basis)
        sup = 10.0  # the family's axis bound M/|lambda| gives sup M at |lambda| -> gap
        grid = opposite_halfplane_grid("+")
        from specsplit import resolvent_norms

        norms = resolvent_norms(restricted, grid, tol=0.0)
        assert norms.max() <= sup


class TestResidualVsEstimate:
    def test_projection_residuals_within_estimate(self):
        # complementarity/idempotency residuals stay within 10x the combined
        # quadrature error estimate (scaled through S^2 for the P level)
        op = random_gap_operator(8, seed=55)
        result = split(op)
        amplification = 1.0 + spectral_norm(op.entries @ op.entries)
        budget = 10.0 * result.est_error * amplification
        for key in ("p_sum_identity", "p_cross", "p_idempotent_plus", "p_idempotent_minus"):
            assert result.residuals[key] <= budget


class TestSectoriality:
    def test_diag_sectorial(self):
        op = diag_operator([1, -1])
        result = split(op)
        report = resolvent_sweep(op, axis_grid(1e-1, 1e3, 16))
        m_axis = float((np.abs(report.lambdas) ** 1.0 * report.norms).max())
        check = sectoriality_report(result, 1.0, opposite_halfplane_grid("+"), m_axis)
        assert check.passed

    def test_almost_bisect(self):
        op = build_block_operator("almost-bisect-5.5", 12, {"p": 0.5})
        result = split(op)
        report = resolvent_sweep(op, axis_grid(1e-2, 1e3, 16))
        beta = 0.5
        m_axis = float((np.abs(report.lambdas) ** beta * report.norms).max())
        check = sectoriality_report(result, beta, opposite_halfplane_grid("+"), m_axis)
        assert check.passed, check

    def test_dichotomy_family_beta_one(self):
        op = build_block_operator("dichotomy-2.3", 4)
        result = split(op)
        report = resolvent_sweep(op, axis_grid(1e-2, 1e3, 16))
        m_axis = float((np.abs(report.lambdas) * report.norms).max())
        check = sectoriality_report(result, 1.0, opposite_halfplane_grid("+"), m_axis)
        assert check.passed


class TestParabolaProbe:
    @staticmethod
    def region_grid(alpha, beta, n=200):
        # points strictly inside the parabola region, away from 0
        b = np.logspace(-1, 3, n // 2)
        a = 0.5 * alpha * b**beta
        pts = np.concatenate([a + 1j * b, -a - 1j * b])
        return pts

    def test_almost_bisect_passes(self):
        op = build_block_operator("almost-bisect-5.5", 30, {"p": 0.5})
        report = resolvent_sweep(op, axis_grid(1e-1, 1e3, 16), fit_window=(10.0, 15.0))
        m = report.sup_norm
        alpha = 0.5 / m
        probe = parabola_probe(op, alpha, 0.5, m, self.region_grid(alpha, 0.5))
        assert probe.passed, (probe.intrusions, probe.violations[:3])

    def test_diag_passes(self):
        op = diag_operator([1, -1])
        m = resolvent_sweep(op, axis_grid(1e-1, 1e3, 16)).sup_norm
        alpha = 0.5 / m
        probe = parabola_probe(op, alpha, 1.0, m, self.region_grid(alpha, 1.0))
        assert probe.passed

    def test_negative_control_reports_violations(self):
        op = build_block_operator("dichotomy-2.3", 4)
        m = resolvent_sweep(op, axis_grid(1e-1, 1e3, 16)).sup_norm
        alpha = 2.0 / m  # alpha*M = 2 > 1: the guaranteed bound is vacuous
        probe = parabola_probe(op, alpha, 1.0, m, self.region_grid(alpha, 1.0))
        assert not probe.passed
        assert probe.violations

    def test_grid_outside_region_rejected(self):
        op = diag_operator([1, -1])
        with pytest.raises(ValueError):
            parabola_probe(op, 0.1, 1.0, 1.0, np.array([100.0 + 0.1j]))


class TestMSubspace:
    def test_diag(self):
        basis = m_subspace(np.diag([1.0, 0.0]))
        assert basis.shape == (2, 1)
        assert abs(abs(basis[0, 0]) - 1.0) <= 1e-12

    def test_block_n1(self):
        a_plus = np.array([[1.0, 1.0], [0.0, 0.0]])
        basis = m_subspace(a_plus)
        assert basis.shape == (2, 1)
        assert abs(abs(basis[0, 0]) - 1.0) <= 1e-12
        assert abs(basis[1, 0]) <= 1e-12

    def test_coincides_with_invariant_subspace(self):
        # ranges of the integral operators equal the invariant subspaces
        op = random_gap_operator(8, seed=2)
        result = split(op)
        pair = oracle_projection(op)
        assert subspace_angle(m_subspace(result.a_plus), pair.basis_plus) <= 1e-6
        assert subspace_angle(m_subspace(result.a_minus), pair.basis_minus) <= 1e-6
        assert subspace_angle(m_subspace(result.a_plus), result.basis_g_plus) <= 1e-6


class TestBlockCommutant:
    def test_dichotomy_family(self):
        op = build_block_operator("dichotomy-2.3", 5)
        assert block_commutant_check(op, 2, lams=[1j]) <= 1e-12

    def test_almost_bisect_family(self):
        op = build_block_operator("almost-bisect-5.5", 5, {"p": 0.5})
        assert block_commutant_check(op, 3) <= 1e-12

    def test_dense_rejected(self):
        with pytest.raises(OperatorError, match="not block-diagonal"):
            block_commutant_check(random_gap_operator(6, seed=0), 1)

    def test_block_count_range(self):
        op = build_block_operator("dichotomy-2.3", 3)
        with pytest.raises(OperatorError):
            block_commutant_check(op, 4)


class TestSubspaceAngle:
    def test_same_span(self):
        v = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 2)))[0]
        rot = np.linalg.qr(np.random.default_rng(1).standard_normal((2, 2)))[0]
        assert subspace_angle(v, v @ rot) <= 1e-12

    def test_orthogonal(self):
        v = np.eye(4)[:, :1]
        w = np.eye(4)[:, 1:2]
        assert subspace_angle(v, w) == pytest.approx(np.pi / 2)

    def test_rank_mismatch(self):
        assert subspace_angle(np.eye(4)[:, :1], np.eye(4)[:, :2]) == pytest.approx(np.pi / 2)


class TestMultisetMatch:
    def test_exact(self):
        a = np.array([1 + 1j, -2.0, 3.0])
        assert multiset_match_distance(a, a[::-1]) == 0.0

    def test_perturbed(self):
        a = np.array([1.0, 2.0, -5.0])
        b = a + 1e-8
        assert multiset_match_distance(a, b) <= 1e-8

    def test_size_mismatch(self):
        assert multiset_match_distance([1.0], [1.0, 2.0]) == np.inf
