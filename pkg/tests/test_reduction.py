import numpy as np
import numpy.testing as npt
import pytest

from helpers import (
    random_complex,
    random_cpmap,
    random_hermitian,
    random_partition,
    random_pd,
    random_upper,
)
from opscale import (
    AllZeroSpectrum,
    CPMap,
    MarginalSpec,
    NonIntegralSpectrum,
    Partition,
    ScalingPair,
    build_truncation,
    conjugate_partition,
    ds_distance,
    gadget_apply,
    gadget_dual_apply,
    relative_det,
)
from opscale.cpmap import apply, dual_apply, scale


class TestPartition:
    def test_conjugate_of_three_one(self):
        assert conjugate_partition((3, 1)) == (2, 1, 1)

    def test_conjugate_is_involutive(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            lam = random_partition(rng)
            assert lam.conjugate().conjugate().parts == lam.parts

    def test_from_vector_strips_zeros(self):
        lam = Partition.from_vector([3.0, 2.0, 0.0])
        assert lam.parts == (3, 2)

    def test_all_zero_rejected(self):
        with pytest.raises(AllZeroSpectrum):
            Partition.from_vector([0.0, 0.0])

    def test_increasing_rejected(self):
        with pytest.raises(ValueError):
            Partition((1, 2))

    def test_totals(self):
        lam = Partition((2, 2, 1))
        assert (lam.total, lam.k) == (5, 3)


class TestGadget:
    def test_worked_example_structure(self):
        lam = Partition((2, 2, 1))
        X = np.arange(9, dtype=float).reshape(3, 3) + 1.0
        G = gadget_apply(lam, X.astype(complex))
        assert G.shape == (5, 5)
        npt.assert_array_equal(G[:3, :3], X)
        npt.assert_array_equal(G[3:, 3:], X[:2, :2])
        npt.assert_array_equal(G[:3, 3:], np.zeros((3, 2)))
        npt.assert_array_equal(G[3:, :3], np.zeros((2, 3)))

    def test_marginal_identities_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            lam = random_partition(rng)
            k, total = lam.k, lam.total
            npt.assert_array_equal(gadget_apply(lam, np.eye(k, dtype=complex)),
                                   np.eye(total))
            npt.assert_array_equal(
                gadget_dual_apply(lam, np.eye(total, dtype=complex)),
                np.diag(np.array(lam.parts, dtype=float)),
            )

    def test_homomorphism_for_upper_triangular(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            lam = random_partition(rng)
            X = random_complex(rng, (lam.k, lam.k))
            h = random_upper(rng, lam.k)
            lhs = gadget_apply(lam, X @ h)
            rhs = gadget_apply(lam, X) @ gadget_apply(lam, h)
            npt.assert_allclose(lhs, rhs, atol=1e-10)

    def test_determinant_matches_relative_det(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            lam = random_partition(rng)
            X = random_pd(rng, lam.k)
            det = np.linalg.det(gadget_apply(lam, X)).real
            npt.assert_allclose(det,
                                relative_det(np.array(lam.parts, float), X),
                                rtol=1e-8)

    def test_dual_reassembles_corner_sums(self):
        lam = Partition((2, 1))
        Y = np.diag([1.0, 2.0, 3.0]).astype(complex)
        out = gadget_dual_apply(lam, Y)
        npt.assert_allclose(out, np.diag([4.0, 2.0]), atol=1e-14)

    def test_dimension_check(self):
        lam = Partition((2, 2, 1))
        with pytest.raises(ValueError):
            gadget_apply(lam, np.eye(2, dtype=complex))


class TestTruncation:
    def test_all_ones_spectra_reproduce_the_map(self):
        rng = np.random.default_rng(4)
        T = random_cpmap(rng, 2, 3, 2)
        M = MarginalSpec(np.ones(3), np.ones(2))
        trun, Mu = build_truncation(T, M)
        assert len(trun.kraus) == len(T.kraus)
        X = random_hermitian(rng, 3)
        npt.assert_allclose(apply(trun, X), apply(T, X), atol=1e-12)
        npt.assert_array_equal(Mu.p, np.ones(3))

    def test_identity_kraus_integral_spectra_marginals(self):
        T = CPMap([np.eye(2)])
        M = MarginalSpec([2.0, 1.0], [2.0, 1.0])
        trun, Mu = build_truncation(T, M)
        assert trun.m == trun.n == 3
        lam_q = Partition((2, 1))
        expected = gadget_apply(lam_q, apply(T, np.diag(M.p).astype(complex)))
        npt.assert_allclose(apply(trun, np.eye(3)), expected, atol=1e-10)

    def test_kraus_count(self):
        rng = np.random.default_rng(5)
        T = random_cpmap(rng, 2, 2, 3)
        M = MarginalSpec([2.0, 1.0], [2.0, 1.0])
        trun, _ = build_truncation(T, M)
        # r Kraus operators per (row block, column block) pair
        assert len(trun.kraus) == 3 * 2 * 2

    def test_marginal_identities_random_integral(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            T = random_cpmap(rng, 2, 3, 2)
            M = MarginalSpec([2.0, 1.0, 1.0], [3.0, 1.0])
            trun, _ = build_truncation(T, M)
            lam_p, lam_q = Partition((2, 1, 1)), Partition((3, 1))
            npt.assert_allclose(
                apply(trun, np.eye(trun.n)),
                gadget_apply(lam_q, apply(T, np.diag(M.p).astype(complex))),
                atol=1e-10)
            npt.assert_allclose(
                dual_apply(trun, np.eye(trun.m)),
                gadget_apply(lam_p, dual_apply(T, np.diag(M.q).astype(complex))),
                atol=1e-10)

    def test_ds_agreement_integral(self):
        rng = np.random.default_rng(7)
        T = random_cpmap(rng, 3, 4, 2)
        M = MarginalSpec([2.0, 1.0, 1.0, 1.0], [2.0, 2.0, 1.0])
        trun, Mu = build_truncation(T, M)
        npt.assert_allclose(ds_distance(trun, Mu), ds_distance(T, M),
                            rtol=1e-8)

    def test_ds_of_rational_input_matches_scaled_integer_instance(self):
        rng = np.random.default_rng(8)
        T = random_cpmap(rng, 2, 2, 3)
        M = MarginalSpec([0.75, 0.25], [0.5, 0.5])
        trun, Mu = build_truncation(T, M)
        M_int = MarginalSpec([3.0, 1.0], [2.0, 2.0])
        npt.assert_allclose(ds_distance(trun, Mu), ds_distance(T, M_int),
                            rtol=1e-8)

    def test_scaling_transport(self):
        rng = np.random.default_rng(9)
        T = random_cpmap(rng, 2, 2, 2)
        M = MarginalSpec([2.0, 1.0], [2.0, 1.0])
        g0, h0 = random_upper(rng, 2), random_upper(rng, 2)
        lam = Partition((2, 1))
        lhs, _ = build_truncation(scale(T, ScalingPair(g0, h0)), M)
        base, _ = build_truncation(T, M)
        rhs = scale(base, ScalingPair(gadget_apply(lam, g0),
                                      gadget_apply(lam, h0)))
        X = random_hermitian(rng, 3)
        npt.assert_allclose(apply(lhs, X), apply(rhs, X), atol=1e-10)

    def test_fine_denominator_rejected(self):
        T = CPMap([np.eye(2)])
        with pytest.raises(NonIntegralSpectrum):
            build_truncation(T, MarginalSpec([1.0 + 1 / 97, 1 - 1 / 97],
                                             [1.0, 1.0]))
