import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from gausscap.capacity import accessible_information, chi_capacity, gaussian_ensemble_information
from gausscap.duality import (DiscreteEnsemble, DiscretePOVM, JointDistribution, coarse_grain,
                              dual_gaussian_observable, dual_pair_finite, ensemble_average_state, joint_distribution,
                              mutual_information_discrete, verify_capacity_identity, verify_dual_pair)
from gausscap.errors import InvalidInputError, UnsupportedInputError
from gausscap.gauss_core import GaussianEnsemble, GaussianObservable, HermitianMatrix
from gausscap.verification import random_ensemble, random_invertible, random_povm, random_psd

KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
MINUS = np.array([1.0, -1.0]) / np.sqrt(2)


def projector(ket):
    return np.outer(ket, ket.conj())


def H(value):
    return HermitianMatrix([[value]])


class DualGaussianObservableTests(SimpleTestCase):
    def test_scalar_example(self):
        dual = dual_gaussian_observable(GaussianEnsemble(H(1.0), H(1.0)))
        self.assertAlmostEqual(dual.sigma_tilde.entries[0, 0].real, 2.0, places=12)
        self.assertAlmostEqual(dual.dual_noise.entries[0, 0].real, 3.0, places=12)
        self.assertAlmostEqual(dual.rescale[0, 0].real, np.sqrt(6.0), places=12)

    def test_sigma_tilde_is_exact_sum(self):
        rng = np.random.default_rng(30)
        ens = GaussianEnsemble(random_psd(rng, 3), random_psd(rng, 3))
        dual = dual_gaussian_observable(ens)
        np.testing.assert_array_equal(dual.sigma_tilde.entries, (ens.prior_cov + ens.state_noise).entries)
        self.assertGreaterEqual(dual.dual_noise.eigvalsh()[0], 0.0)

    def test_degenerate_noise_is_unsupported(self):
        with self.assertRaises(UnsupportedInputError):
            dual_gaussian_observable(GaussianEnsemble(H(1.0), H(1e-12)))

    def test_dual_observable_is_usable(self):
        dual = dual_gaussian_observable(GaussianEnsemble(HermitianMatrix.diag([1, 2]), HermitianMatrix.diag([1, 1])))
        self.assertIsInstance(dual.observable, GaussianObservable)
        self.assertEqual(set(dual.to_json()), {'rescale', 'dual_noise', 'sigma_tilde'})


class CapacityIdentityTests(SimpleTestCase):
    def test_scalar_example(self):
        result = verify_capacity_identity(GaussianEnsemble(H(1.0), H(1.0)))
        self.assertAlmostEqual(result.lhs, 1.5, places=12)
        self.assertAlmostEqual(result.rhs, 1.5, places=12)

    def test_scalar_multiple_of_identity(self):
        a, b = 0.7, 1.9
        eye = HermitianMatrix.identity(2)
        result = verify_capacity_identity(GaussianEnsemble(a * eye, b * eye))
        expected = (1 + a / (b + 1)) ** 2
        self.assertAlmostEqual(result.lhs, expected, places=12)
        self.assertAlmostEqual(result.rhs, expected, places=12)

    def test_random_instances(self):
        rng = np.random.default_rng(31)
        for dim in range(1, 5):
            for _ in range(100):
                result = verify_capacity_identity(GaussianEnsemble(random_psd(rng, dim), random_psd(rng, dim)))
                self.assertLess(result.residual, 1e-10)
                self.assertLess(result.similarity_residual, 1e-9)

    def test_theorems_agree(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            dim = int(rng.integers(1, 5))
            ens = GaussianEnsemble(random_psd(rng, dim), random_psd(rng, dim))
            value = accessible_information(ens).value
            dual = dual_gaussian_observable(ens)
            self.assertAlmostEqual(value, chi_capacity(dual.observable, dual.sigma_tilde).value, delta=1e-10)
            heterodyne = GaussianObservable.heterodyne(dim)
            self.assertAlmostEqual(value, gaussian_ensemble_information(ens, heterodyne), delta=1e-10)
            rescaled = GaussianObservable(random_invertible(rng, dim), HermitianMatrix.zeros(dim))
            self.assertAlmostEqual(value, gaussian_ensemble_information(ens, rescaled), delta=1e-12)


class DiscreteTypeTests(SimpleTestCase):
    def test_ensemble_validation(self):
        with self.assertRaises(InvalidInputError):
            DiscreteEnsemble([0.5, 0.6], [projector(KET0), projector(KET1)])
        with self.assertRaises(InvalidInputError):
            DiscreteEnsemble([1.0], [2 * projector(KET0)])
        with self.assertRaises(InvalidInputError):
            DiscreteEnsemble([1.0], [np.array([[1.0, 1.0], [0.0, 0.0]])])
        with self.assertRaises(InvalidInputError):
            DiscreteEnsemble([0.5, 0.5], [projector(KET0)])

    def test_povm_validation(self):
        with self.assertRaises(InvalidInputError):
            DiscretePOVM([np.diag([1.0, -0.5])])
        with self.assertRaises(InvalidInputError):
            DiscretePOVM([np.eye(2)], weights=[0.0])
        self.assertAlmostEqual(DiscretePOVM([projector(PLUS), projector(MINUS)]).completeness_defect(), 0.0,
                               places=14)

    def test_json_documents(self):
        ens = DiscreteEnsemble.from_json({'probs': [1.0], 'states': [{'dim': 2, 're': [[1, 0], [0, 0]]}]})
        self.assertEqual(ens.dim, 2)
        povm = DiscretePOVM.from_json({'elements': [[[1, 0], [0, 1]]]})
        assert_allclose(povm.weights, [1.0])
        with self.assertRaises(InvalidInputError):
            DiscreteEnsemble.from_json({'states': []})

    def test_joint_distribution_validation(self):
        with self.assertRaises(InvalidInputError):
            JointDistribution([[0.5, 0.6]])
        with self.assertRaises(InvalidInputError):
            JointDistribution([[1.1, -0.1]])
        self.assertEqual(JointDistribution([[1.0 + 1e-15, -1e-15]]).matrix[0, 1], 0.0)


class FiniteDualityTests(SimpleTestCase):
    def test_identity_case(self):
        ens = DiscreteEnsemble([1.0], [projector(KET0)])
        pair = dual_pair_finite(ens, DiscretePOVM([np.eye(2)]))
        assert_allclose(pair.ensemble.probs, [1.0])
        assert_allclose(pair.ensemble.states[0], projector(KET0), atol=1e-12)
        assert_allclose(pair.povm.elements[0], np.eye(2), atol=1e-12)
        self.assertEqual(pair.diagnostics.pinv_rank, 1)

    def test_qubit_example(self):
        ens = DiscreteEnsemble([0.5, 0.5], [projector(KET0), projector(KET1)])
        povm = DiscretePOVM([projector(PLUS), projector(MINUS)])
        assert_allclose(ensemble_average_state(ens), np.eye(2) / 2)
        pair = dual_pair_finite(ens, povm)
        assert_allclose(pair.ensemble.probs, [0.5, 0.5], atol=1e-12)
        assert_allclose(pair.ensemble.states[0], projector(PLUS), atol=1e-12)
        assert_allclose(pair.ensemble.states[1], projector(MINUS), atol=1e-12)
        assert_allclose(pair.povm.elements[0], projector(KET0), atol=1e-12)
        assert_allclose(pair.povm.elements[1], projector(KET1), atol=1e-12)

        joint = joint_distribution(ens, povm)
        assert_allclose(joint.matrix, np.full((2, 2), 0.25), atol=1e-12)
        self.assertAlmostEqual(mutual_information_discrete(joint), 0.0, places=14)

    def test_mutual_information_examples(self):
        self.assertAlmostEqual(mutual_information_discrete(JointDistribution(np.full((3, 2), 1 / 6))), 0.0, places=14)
        self.assertAlmostEqual(mutual_information_discrete(JointDistribution(np.diag([0.5, 0.5]))), np.log(2),
                               places=14)
        self.assertEqual(mutual_information_discrete(JointDistribution([[1.0]])), 0.0)

    def test_random_instances(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            dim = int(rng.integers(2, 7))
            ens = random_ensemble(rng, dim, int(rng.integers(1, 7)))
            povm = random_povm(rng, dim, int(rng.integers(1, 7)))
            joint = joint_distribution(ens, povm)
            assert_allclose(joint.row_marginal, ens.probs, atol=1e-12)
            pair = dual_pair_finite(ens, povm)
            assert_allclose(joint.column_marginal, pair.ensemble.probs, atol=1e-12)
            residuals = verify_dual_pair(ens, povm, pair)
            self.assertLess(residuals['joint'], 1e-12)
            self.assertLess(residuals['average_state'], 1e-12)
            self.assertLess(residuals['mutual_information'], 1e-12)
            self.assertLess(residuals['ide'], 1e-12)
            self.assertLess(residuals['completeness'], 1e-10)

    def test_singular_average_state_uses_kernel_extension(self):
        # both states live in span{|0>, |1>} of a qutrit
        e0, e1 = np.eye(3)[0], np.eye(3)[1]
        ens = DiscreteEnsemble([0.3, 0.7], [projector(e0), projector((e0 + e1) / np.sqrt(2))])
        povm = DiscretePOVM([np.diag([1.0, 0.0, 0.5]), np.diag([0.0, 1.0, 0.5])])
        pair = dual_pair_finite(ens, povm)
        self.assertEqual(pair.diagnostics.pinv_rank, 2)
        self.assertLess(pair.diagnostics.dual_completeness_defect, 1e-10)
        # the kernel |2><2| is shared out in proportion to the prior weights
        assert_allclose(pair.povm.elements[:, 2, 2].real, [0.3, 0.7], atol=1e-12)
        residuals = verify_dual_pair(ens, povm, pair)
        self.assertLess(residuals['joint'], 1e-12)
        self.assertLess(residuals['average_state'], 1e-12)

    def test_zero_weight_outcome_is_dropped(self):
        e = np.eye(3)
        ens = DiscreteEnsemble([0.5, 0.5], [projector(e[0]), projector(e[1])])
        povm = DiscretePOVM([projector(e[0]), projector(e[1]), projector(e[2])])
        with self.assertLogs('gausscap.duality', level='WARNING'):
            pair = dual_pair_finite(ens, povm)
        self.assertEqual(pair.diagnostics.dropped_outcomes, [2])
        self.assertEqual(list(pair.kept_outcomes), [0, 1])
        self.assertEqual(len(pair.ensemble), 2)

    def test_incomplete_povm_is_rejected(self):
        ens = DiscreteEnsemble([1.0], [projector(KET0)])
        with self.assertRaises(InvalidInputError):
            dual_pair_finite(ens, DiscretePOVM([projector(KET0)]))
        with self.assertRaises(InvalidInputError):
            dual_pair_finite(ens, DiscretePOVM([np.eye(3)]))

    def test_coarse_graining_never_increases_information(self):
        rng = np.random.default_rng(34)
        for _ in range(50):
            dim = int(rng.integers(2, 5))
            ens = random_ensemble(rng, dim, 4)
            povm = random_povm(rng, dim, 5)
            merged = coarse_grain(povm, [[0, 3], [1], [2, 4]])
            self.assertLess(merged.completeness_defect(), 1e-10)
            fine = mutual_information_discrete(joint_distribution(ens, povm))
            coarse = mutual_information_discrete(joint_distribution(ens, merged))
            self.assertLessEqual(coarse, fine + 1e-12)

    def test_coarse_grain_rejects_bad_partition(self):
        povm = DiscretePOVM([projector(PLUS), projector(MINUS)])
        with self.assertRaises(InvalidInputError):
            coarse_grain(povm, [[0]])
        with self.assertRaises(InvalidInputError):
            coarse_grain(povm, [[0, 1], []])
