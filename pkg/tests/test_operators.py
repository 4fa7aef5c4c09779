import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specsplit import (
    NearSpectrumError,
    OperatorError,
    build_block_operator,
    choose_h,
    dense_operator,
    descriptor_of,
    diag_operator,
    operator_from_descriptor,
    oracle_projection,
    random_gap_operator,
    resolvent,
    resolvent_many,
    spectral_norm,
    spectrum,
)
from specsplit.operators import mcintosh_yagi_pick_n


def block23(n):
    return np.array([[n, 2.0 * n * n], [0.0, -n]], dtype=complex)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class TestFamilies:
    def test_dichotomy_block_n1(self):
        op = build_block_operator("dichotomy-2.3", 1)
        assert np.array_equal(op.entries, np.array([[1, 2], [0, -1]], dtype=complex))

    def test_constant_diag_default(self):
        op = build_block_operator("constant-diag", 1)
        assert np.array_equal(op.entries, np.diag([1.0 + 0j, -1.0 + 0j]))

    def test_almost_bisect_blocks(self):
        op = build_block_operator("almost-bisect-5.5", 2, {"p": 0.5})
        expect = np.zeros((4, 4), dtype=complex)
        expect[:2, :2] = [[1, 2], [0, -1]]
        expect[2:, 2:] = [[2, 2 * 2**1.5], [0, -2]]
        assert np.allclose(op.entries, expect, rtol=0, atol=0)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.3, 2.0])
    def test_almost_bisect_rejects_bad_p(self, p):
        with pytest.raises(OperatorError):
            build_block_operator("almost-bisect-5.5", 2, {"p": p})

    def test_unknown_family(self):
        with pytest.raises(OperatorError):
            build_block_operator("no-such-family", 3)

    def test_unknown_parameter(self):
        with pytest.raises(OperatorError):
            build_block_operator("dichotomy-2.3", 2, {"bogus": 1})

    def test_family_tag(self):
        op = build_block_operator("almost-bisect-5.5", 3, {"p": 0.25})
        tag = op.family_tag
        assert tag.family == "almost-bisect-5.5"
        assert tag.n_blocks == 3
        assert tag.block_dims == (2, 2, 2)
        assert [s.start for s in tag.block_slices()] == [0, 2, 4]

    def test_bit_identical_regeneration(self):
        a = build_block_operator("mcintosh-yagi", 2, {"Mconst": 10.0})
        b = build_block_operator("mcintosh-yagi", 2, {"Mconst": 10.0})
        assert np.array_equal(a.entries, b.entries)

    def test_mcintosh_yagi_pick_n(self):
        # M = 10, m = 1: the inequality needs log(n/2 + 1) >= pi*sqrt(18)/9
        assert mcintosh_yagi_pick_n(10.0, 1) == 7
        c = 9.0 / (np.pi * np.sqrt(18.0))
        assert c * np.log(6 / 2 + 1) < 1.0  # the next smaller order fails

    def test_entries_immutable(self):
        op = build_block_operator("dichotomy-2.3", 1)
        with pytest.raises(ValueError):
            op.entries[0, 0] = 5.0

    def test_non_square_rejected(self):
        with pytest.raises(OperatorError):
            dense_operator(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


class TestResolvent:
    def test_block_n1_at_zero(self):
        op = dense_operator(block23(1))
        assert np.allclose(resolvent(op, 0.0), [[1, 2], [0, -1]], atol=1e-14)

    def test_diag_at_i(self):
        op = diag_operator([1, -1])
        expect = np.diag([1.0 / (1 - 1j), -1.0 / (1 + 1j)])
        assert np.allclose(resolvent(op, 1j), expect, atol=1e-14)

    def test_block_n1_at_i(self):
        # Substituting n=1, lambda=i into the closed-form block resolvent:
        # [[1/(1-i), 2/((1-i)(1+i))], [0, -1/(1+i)]] = [[(1+i)/2, 1], [0, -(1-i)/2]]
        op = dense_operator(block23(1))
        expect = np.array([[(1 + 1j) / 2, 1.0], [0.0, -(1 - 1j) / 2]])
        assert np.allclose(resolvent(op, 1j), expect, atol=1e-14)

    def test_near_spectrum_error_carries_eigenvalue(self):
        op = diag_operator([1, -1])
        with pytest.raises(NearSpectrumError) as err:
            resolvent(op, 1.0 + 1e-12j)
        assert err.value.eigenvalue == pytest.approx(1.0)
        assert err.value.distance <= err.value.tol

    def test_resolvent_many_matches_single(self):
        op = random_gap_operator(6, seed=3)
        lams = np.array([1j, 2j, 0.1 + 5j])
        stack = resolvent_many(op, lams)
        for lam, res in zip(lams, stack):
            assert np.allclose(res, resolvent(op, lam), atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        t1=st.floats(-20, 20),
        t2=st.floats(-20, 20),
        off=st.floats(0.05, 3),
    )
    def test_first_resolvent_identity(self, t1, t2, off):
        op = dense_operator(block23(2))
        lam, mu = off + 1j * t1, -off + 1j * t2
        r_lam = resolvent(op, lam)
        r_mu = resolvent(op, mu)
        lhs = r_lam - r_mu
        rhs = (lam - mu) * r_lam @ r_mu
        assert spectral_norm(lhs - rhs) <= 1e-9 * (1 + abs(lam - mu))

    def test_block_functoriality(self):
        op = build_block_operator("dichotomy-2.3", 4)
        full = resolvent(op, 0.3 + 2j)
        for n, sl in zip(range(1, 5), op.family_tag.block_slices()):
            single = resolvent(dense_operator(block23(n)), 0.3 + 2j)
            assert np.allclose(full[sl, sl], single, atol=1e-12)
        off_diag = full.copy()
        for sl in op.family_tag.block_slices():
            off_diag[sl, sl] = 0.0
        assert spectral_norm(off_diag) <= 1e-12


# ---------------------------------------------------------------------------
# spectrum / gap
# ---------------------------------------------------------------------------


class TestSpectrum:
    def test_diag(self):
        spec = spectrum(diag_operator([1, -1]))
        assert sorted(spec.eigenvalues.real.tolist()) == [-1.0, 1.0]
        assert spec.min_abs_real == pytest.approx(1.0)

    def test_dichotomy_truncation(self):
        spec = spectrum(build_block_operator("dichotomy-2.3", 3))
        assert np.allclose(np.sort(spec.eigenvalues.real), [-3, -2, -1, 1, 2, 3], atol=1e-12)
        assert spec.min_abs_real == pytest.approx(1.0, abs=1e-12)

    def test_mcintosh_yagi_block_eigenvalues(self):
        # block-triangular structure: eigenvalues are +-2^0..+-2^n
        op = build_block_operator("mcintosh-yagi", 1, {"Mconst": 10.0})
        n = op.dim // 2 - 1
        expect = np.sort(np.concatenate([2.0 ** np.arange(n + 1), -(2.0 ** np.arange(n + 1))]))
        assert np.allclose(np.sort(spectrum(op).eigenvalues.real), expect, rtol=1e-12)

    def test_choose_h(self):
        assert choose_h(build_block_operator("dichotomy-2.3", 4), 0.5) == pytest.approx(0.5)
        assert choose_h(diag_operator([1, -1]), 0.9) == pytest.approx(0.9)
        assert choose_h(
            build_block_operator("mcintosh-yagi", 1, {"Mconst": 10.0}), 0.5
        ) == pytest.approx(0.5)

    def test_choose_h_zero_gap(self):
        with pytest.raises(NearSpectrumError):
            choose_h(diag_operator([1j, -1j]), 0.5)

    def test_choose_h_bad_safety(self):
        with pytest.raises(OperatorError):
            choose_h(diag_operator([1, -1]), 1.5)


# ---------------------------------------------------------------------------
# spectral norm
# ---------------------------------------------------------------------------


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0)

    def test_zero(self):
        assert spectral_norm(np.zeros((2, 2))) == 0.0

    @pytest.mark.parametrize("n", [1, 2, 5, 50])
    def test_projection_block_norm(self, n):
        m = np.array([[1.0, n], [0.0, 0.0]])
        assert spectral_norm(m) == pytest.approx(np.sqrt(1 + n * n), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_submultiplicative_and_scaling(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) * (1 + 1e-12)
        assert spectral_norm(2.5 * a) == pytest.approx(2.5 * spectral_norm(a), rel=1e-12)


# ---------------------------------------------------------------------------
# the projection oracle
# ---------------------------------------------------------------------------


class TestOracle:
    def test_diag(self):
        pair = oracle_projection(diag_operator([1, -1]))
        assert np.allclose(pair.p_plus, np.diag([1.0, 0.0]), atol=1e-14)
        assert np.allclose(pair.p_minus, np.diag([0.0, 1.0]), atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_dichotomy_block(self, n):
        pair = oracle_projection(dense_operator(block23(n)))
        assert np.allclose(pair.p_plus, [[1, n], [0, 0]], atol=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_almost_bisect_block(self, n):
        block = np.array([[n, 2.0 * n**1.5], [0, -n]], dtype=complex)
        pair = oracle_projection(dense_operator(block))
        assert np.allclose(pair.p_plus, [[1, np.sqrt(n)], [0, 0]], atol=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_invariants_on_random_operators(self, seed):
        op = random_gap_operator(8, seed=seed)
        pair = oracle_projection(op)
        s = op.entries
        tol = 1e-10 * (1 + spectral_norm(s))
        assert spectral_norm(pair.p_plus @ pair.p_plus - pair.p_plus) <= tol
        assert spectral_norm(pair.p_plus + pair.p_minus - np.eye(8)) <= tol
        assert spectral_norm(pair.p_plus @ pair.p_minus) <= tol
        assert spectral_norm(pair.p_plus @ s - s @ pair.p_plus) <= tol
        assert pair.rank_plus + pair.rank_minus == 8

    def test_range_splitting(self):
        op = random_gap_operator(9, seed=42)
        pair = oracle_projection(op)
        restr = pair.basis_plus.conj().T @ op.entries @ pair.basis_plus
        assert np.linalg.eigvals(restr).real.min() > 0
        restr_m = pair.basis_minus.conj().T @ op.entries @ pair.basis_minus
        assert np.linalg.eigvals(restr_m).real.max() < 0

    def test_refuses_axis_eigenvalue(self):
        with pytest.raises(NearSpectrumError):
            oracle_projection(diag_operator([1j, 1.0]))

    def test_one_sided_spectrum(self):
        pair = oracle_projection(diag_operator([1, 2, 3]))
        assert np.allclose(pair.p_plus, np.eye(3), atol=1e-14)
        assert pair.rank_minus == 0

    def test_block_diagonal_structure(self):
        op = build_block_operator("dichotomy-2.3", 3)
        pair = oracle_projection(op)
        for n, sl in zip(range(1, 4), op.family_tag.block_slices()):
            assert np.allclose(pair.p_plus[sl, sl], [[1, n], [0, 0]], atol=1e-10)


# ---------------------------------------------------------------------------
# random gap operators
# ---------------------------------------------------------------------------


class TestRandomGapOperator:
    @pytest.mark.parametrize("seed", [0, 7, 123])
    def test_contract(self, seed):
        op = random_gap_operator(8, seed=seed)
        spec = spectrum(op)
        assert spec.min_abs_real >= 0.5 - 1e-9
        assert spectral_norm(op.entries) <= 10.0

    def test_deterministic(self):
        a = random_gap_operator(7, seed=11)
        b = random_gap_operator(7, seed=11)
        assert np.array_equal(a.entries, b.entries)


# ---------------------------------------------------------------------------
# JSON descriptors
# ---------------------------------------------------------------------------


class TestDescriptors:
    def test_family_round_trip(self):
        desc = {"kind": "family", "family": "almost-bisect-5.5", "params": {"p": 0.5}, "N": 3}
        op = operator_from_descriptor(desc)
        assert descriptor_of(op) == desc

    def test_dense_round_trip(self):
        entries = np.array([[1 + 2j, 0.5], [0, -1 - 1j]])
        desc = descriptor_of(dense_operator(entries))
        op = operator_from_descriptor(desc)
        assert np.allclose(op.entries, entries, atol=0)

    def test_rejects_unknown_fields(self):
        with pytest.raises(OperatorError):
            operator_from_descriptor(
                {"kind": "family", "family": "dichotomy-2.3", "N": 2, "extra": 1}
            )
        with pytest.raises(OperatorError):
            operator_from_descriptor(
                {"kind": "dense", "entries": [[[1, 0]]], "note": "hi"}
            )

    def test_rejects_bad_kind_and_shapes(self):
        with pytest.raises(OperatorError):
            operator_from_descriptor({"kind": "sparse"})
        with pytest.raises(OperatorError):
            operator_from_descriptor({"kind": "dense", "entries": [[1, 0], [0, 1]]})
        with pytest.raises(OperatorError):
            operator_from_descriptor({"kind": "family", "family": "dichotomy-2.3", "N": 0})

    def test_requires_mandatory_fields(self):
        with pytest.raises(OperatorError):
            operator_from_descriptor({"kind": "family", "N": 2})
        with pytest.raises(OperatorError):
            operator_from_descriptor({"kind": "dense"})
