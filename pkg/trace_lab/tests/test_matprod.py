import itertools
import unittest

import numpy as np

from trace_lab.errors import (
    DiagonalMismatchError,
    DimensionMismatchError,
    InvalidRepresentationError,
    NoAdmissibleRankError,
    PreconditionError,
    SpectrumAvoidanceError,
    UnsupportedDimensionError,
)
from trace_lab.linalg import (
    check_structure,
    dagger,
    derive_seed,
    haar_unitary,
    identity,
    normalized_trace,
    operator_norm,
)
from trace_lab.matprod import (
    MnMnRep,
    amplify_mn,
    approx_by_amplification,
    choose_lambdas,
    claim_targets,
    conjugate_units,
    corner_amplification,
    extract_unitaries,
    generator_distances,
    is_standard,
    joint_rep,
    mn_rep_from_unitaries,
    perturb_mn_to_surjective,
    perturbed_rep,
    random_mn_rep,
    standardize,
    verify_perturbation,
)
from trace_lab.words import monomial_ball, moment_vector


class TestMnMnRep(unittest.TestCase):
    def test_matrix_unit_suite(self):
        '''
        Test 200 seeded representations are valid matrix-unit systems

        Parameters:
        n (int): 2 through 5
        d (int): 1 through 4
        seed (int): Ten seeds per (n, d)
        '''
        cases = list(itertools.product(range(2, 6), range(1, 5), range(10)))
        self.assertGreaterEqual(len(cases), 160)
        cases += [(4, 2, 100 + s) for s in range(200 - len(cases))]
        for n, d, seed in cases:
            rep = random_mn_rep(n, d, seed)
            self.assertLessEqual(max(rep.residuals().values()), 1e-9 * rep.k)
            for i in range(n):
                self.assertAlmostEqual(normalized_trace(rep.e_units[i, i]), 1.0 / n, delta=1e-12)
                self.assertAlmostEqual(normalized_trace(rep.f_units[i, i]), 1.0 / n, delta=1e-12)

    def test_from_unitaries_checks(self):
        with self.assertRaises(PreconditionError):
            mn_rep_from_unitaries(3, [haar_unitary(2, 0)])
        with self.assertRaises(DimensionMismatchError):
            mn_rep_from_unitaries(3, [haar_unitary(2, 0), haar_unitary(3, 1)])
        rep = random_mn_rep(3, 2, 4)
        with self.assertRaises(InvalidRepresentationError):
            MnMnRep(3, 2 * rep.e_units, rep.f_units).validate()

    def test_dict_roundtrip(self):
        rep = random_mn_rep(3, 2, 1)
        restored = MnMnRep.from_dict(rep.to_dict())
        np.testing.assert_array_equal(restored.e_units, rep.e_units)
        np.testing.assert_array_equal(restored.f_units, rep.f_units)

    def test_extract_unitaries(self):
        us = [haar_unitary(2, derive_seed(3, j)) for j in range(3)]
        rep = mn_rep_from_unitaries(4, us)
        self.assertTrue(is_standard(rep))
        for u, back in zip(us, extract_unitaries(rep)):
            np.testing.assert_allclose(back, u, atol=1e-12)
        twisted = conjugate_units(rep, identity(rep.k), haar_unitary(rep.k, 9))
        with self.assertRaises(DiagonalMismatchError):
            extract_unitaries(twisted)

    def test_standardize_preserves_moments(self):
        rep = random_mn_rep(3, 2, 5)
        w = haar_unitary(rep.k, 6)
        moved = conjugate_units(rep, w, w)
        self.assertFalse(is_standard(moved))
        std, conjugator = standardize(moved)
        self.assertTrue(is_standard(std))
        self.assertTrue(check_structure(conjugator, "unitary"))
        words = monomial_ball(3, 2)
        np.testing.assert_allclose(moment_vector(std, words), moment_vector(rep, words), atol=1e-10)
        unitaries = extract_unitaries(std)
        self.assertEqual(len(unitaries), 2)

    def test_amplify_preserves_moments(self):
        rep = random_mn_rep(3, 2, 8)
        words = monomial_ball(3, 2)
        amplified = amplify_mn(rep, 3)
        self.assertEqual(amplified.k, 3 * rep.k)
        self.assertTrue(is_standard(amplified))
        np.testing.assert_allclose(moment_vector(amplified, words), moment_vector(rep, words), atol=1e-12)

    def test_joint_rep_is_midpoint(self):
        rep1, rep2 = random_mn_rep(3, 2, 1), random_mn_rep(3, 3, 2)
        joint = joint_rep(rep1, rep2)
        self.assertEqual(joint.k, 2 * 3 * 2 * 3)
        self.assertTrue(is_standard(joint))
        words = monomial_ball(3, 3)
        expected = 0.5 * (moment_vector(rep1, words) + moment_vector(rep2, words))
        np.testing.assert_allclose(moment_vector(joint, words), expected, atol=1e-12)

    def test_corner_amplification(self):
        amp = corner_amplification(3, 1)
        self.assertEqual(amp.total, 4)
        np.testing.assert_allclose(dagger(amp.v) @ amp.v, amp.p)
        np.testing.assert_allclose(amp.v @ dagger(amp.v), amp.r_embedded)
        np.testing.assert_allclose(amp.q @ amp.r_embedded, amp.r_embedded)
        np.testing.assert_allclose(amp.q + amp.p, identity(4))
        with self.assertRaises(NoAdmissibleRankError):
            corner_amplification(3, 3)

    def test_choose_lambdas(self):
        spectra = [np.array([1.0, 1j]), np.array([-1.0])]
        lambda1, lambda2 = choose_lambdas(spectra)
        self.assertAlmostEqual(abs(lambda1), 1.0)
        self.assertAlmostEqual(abs(lambda2), 1.0)
        for z in np.concatenate(spectra):
            self.assertGreater(abs(lambda1 - z), 1e-6)
            self.assertGreater(abs(lambda2 - z), 1e-6)
        self.assertEqual((lambda1, lambda2), choose_lambdas(spectra))
        grid = np.exp(2j * np.pi * np.arange(4) / 4)
        with self.assertRaises(SpectrumAvoidanceError):
            choose_lambdas([grid], points=4)

    def test_perturbed_rep_preconditions(self):
        with self.assertRaises(UnsupportedDimensionError):
            perturbed_rep(random_mn_rep(3, 3, 1), random_mn_rep(3, 3, 2), 0.34)
        with self.assertRaises(NoAdmissibleRankError):
            perturbed_rep(random_mn_rep(4, 2, 1), random_mn_rep(4, 2, 2), 0.1)
        with self.assertRaises(DimensionMismatchError):
            perturbed_rep(random_mn_rep(4, 3, 1), random_mn_rep(5, 3, 2), 0.34)

    def test_perturb_mn_to_surjective(self):
        rep = amplify_mn(random_mn_rep(3, 1, 4), 2)
        out, report = perturb_mn_to_surjective(rep, 0.05, seed=2)
        self.assertTrue(report.surjective)
        self.assertLessEqual(report.achieved_generator_distance, 0.05 + 1e-10)
        self.assertLessEqual(max(out.residuals().values()), 1e-9 * out.k)

    def test_amplification_density(self):
        '''
        Test an extreme trace at dimension 4 is approximated at dimension 8

        Parameters:
        eps (float): 0.1 and 0.03
        '''
        rep = random_mn_rep(4, 1, 12)
        deltas = []
        for eps in (0.1, 0.03):
            out, report = approx_by_amplification(rep, 2, eps, radius=3, seed=1)
            self.assertEqual(out.k, 8)
            self.assertTrue(report.surjective)
            self.assertLessEqual(report.moment_report.sup_delta, 5 * eps)
            deltas.append(report.moment_report.sup_delta)
        self.assertGreaterEqual(deltas[0], deltas[1])


class TestPerturbation(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.eps = 0.34
        cls.rep1 = random_mn_rep(4, 3, derive_seed(0, 1))
        cls.rep2 = random_mn_rep(4, 3, derive_seed(0, 2))
        cls.bundle = perturbed_rep(cls.rep1, cls.rep2, cls.eps, r_rank=1)
        cls.report = verify_perturbation(cls.bundle, radius=3, diagnostics=True)

    def test_dimensions(self):
        self.assertEqual(self.bundle.perturbed.k, 128)
        self.assertEqual(self.bundle.dims, (4, 3, 3, 1, 128))
        self.assertLessEqual(max(self.bundle.perturbed.residuals().values()), 1e-9 * 128)

    def test_generator_distances(self):
        distances = generator_distances(self.bundle)
        self.assertEqual(len(distances), 6)
        for name, value in distances.items():
            with self.subTest(generator=name):
                self.assertLessEqual(value, 4 * self.eps)

    def test_generates_ambient(self):
        self.assertTrue(self.report.surjective)
        self.assertEqual(self.report.generated_dim, 128 * 128)

    def test_claims(self):
        self.assertEqual(set(self.report.claim_residuals), set(claim_targets(self.bundle)))
        for name, value in self.report.claim_residuals.items():
            with self.subTest(claim=name):
                self.assertLessEqual(value, 1e-7)
        for name, value in self.report.membership_residuals.items():
            with self.subTest(member=name):
                self.assertLessEqual(value, 1e-7)
        gate_names = {gate.name for gate in self.report.gates}
        self.assertTrue(all(f"claim[{name}]" in gate_names for name in self.report.claim_residuals))
        self.assertFalse(any(name.startswith("membership") for name in gate_names))

    def test_moments_and_gates(self):
        self.assertLessEqual(self.report.moment_report.sup_delta, 10 * 3 * self.eps)
        failed = [gate.name for gate in self.report.gates if not gate.passed]
        self.assertEqual(failed, [])
        self.assertTrue(self.report.passed)

    def test_lambdas_avoid_spectrum(self):
        for z in self.bundle.a_spectrum:
            self.assertGreater(abs(self.bundle.lambda1 - z), 1e-6)
            self.assertGreater(abs(self.bundle.lambda2 - z), 1e-6)
        self.assertGreater(abs(self.bundle.lambda1 - self.bundle.lambda2), 1e-6)

    def test_embedding_is_midpoint(self):
        words = monomial_ball(4, 2)
        embedded = self.bundle.embedded
        values = moment_vector(embedded, words) / normalized_trace(embedded.unit())
        expected = 0.5 * (moment_vector(self.rep1, words) + moment_vector(self.rep2, words))
        np.testing.assert_allclose(values, expected, atol=1e-10)
        self.assertLess(operator_norm(embedded.unit() @ embedded.unit() - embedded.unit()), 1e-12)


if __name__ == "__main__":
    unittest.main()
