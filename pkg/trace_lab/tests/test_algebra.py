import unittest

import numpy as np

from trace_lab.algebra import (
    algebra_dimension,
    certificate_is_basis,
    commutant,
    commutant_and_center,
    corner_generation_check,
    format_label,
    generated_algebra,
    is_factor,
    is_surjective,
    membership_residual,
    parse_label,
    tensor_generation_check,
)
from trace_lab.errors import PreconditionError
from trace_lab.linalg import (
    cycle_matrix,
    derive_seed,
    direct_sum,
    haar_unitary,
    identity,
    perturb_unitary,
    structured_generators,
    unit_matrix,
)


class TestAlgebra(unittest.TestCase):
    def test_generator_triples_span_full_algebra(self):
        '''
        Test the structured triples generate M_n

        Parameters:
        n (int): 2 through 8
        k (int): Every split 0 <= k < n
        '''
        for n in range(2, 9):
            for k in range(n):
                with self.subTest(n=n, k=k):
                    self.assertEqual(generated_algebra(structured_generators(n, k)).dim, n * n)

    def test_basis_is_orthonormal(self):
        algebra = generated_algebra([haar_unitary(3, 0), haar_unitary(3, 1)])
        self.assertEqual(algebra.dim, 9)
        self.assertLess(algebra.gram_defect(), 1e-10)

    def test_diagonal_algebra(self):
        gens = [np.diag([1.0, 2.0, 3.0]).astype(np.complex128)]
        algebra = generated_algebra(gens)
        self.assertEqual(algebra.dim, 3)
        self.assertLess(algebra.residual(np.diag([5.0, -1.0, 0.5])), 1e-10)
        self.assertGreater(algebra.residual(unit_matrix(1, 2, 3)), 0.5)

    def test_corner_and_tensor_checks(self):
        self.assertEqual(corner_generation_check().dim, 25)
        self.assertEqual(tensor_generation_check().dim, 36)
        with self.assertRaises(PreconditionError):
            corner_generation_check(k=5, q_rank=2)

    def test_commutant_of_block_diagonal(self):
        '''
        Test commutant and center of U ⊕ U and of U ⊕ V

        Parameters:
        gens (list): Block-diagonal unitaries built from Haar samples
        '''
        u, v = haar_unitary(2, 3), haar_unitary(2, 4)
        w = haar_unitary(2, 5)
        doubled = [direct_sum([u, u]), direct_sum([w, w])]
        comm, center = commutant_and_center(doubled)
        self.assertEqual(comm.dim, 4)
        self.assertEqual(center.dim, 1)
        self.assertTrue(is_factor(doubled))

        split = [direct_sum([u, v]), direct_sum([w, w])]
        comm, center = commutant_and_center(split)
        self.assertEqual(comm.dim, 2)
        self.assertEqual(center.dim, 2)
        self.assertFalse(is_factor(split))

    def test_commutant_of_identity(self):
        self.assertEqual(commutant([identity(3)]).dim, 9)

    def test_is_surjective_with_certificate(self):
        gens = [haar_unitary(4, 10), haar_unitary(4, 11)]
        verdict = is_surjective(gens)
        self.assertTrue(verdict.flag)
        self.assertEqual(len(verdict.certificate), 16)
        self.assertTrue(certificate_is_basis(gens, verdict.certificate))
        perturbed = [perturb_unitary(g, 1e-3, 7 + j) for j, g in enumerate(gens)]
        self.assertTrue(certificate_is_basis(perturbed, verdict.certificate))
        self.assertFalse(certificate_is_basis(gens, verdict.certificate[:-1]))

    def test_is_surjective_rejects_reducible(self):
        gens = [direct_sum([haar_unitary(2, 1), haar_unitary(1, 2)])]
        self.assertFalse(is_surjective(gens).flag)
        self.assertIsNone(is_surjective(gens).certificate)

    def test_commutant_route_matches_closure(self):
        gens = [haar_unitary(5, 20), haar_unitary(5, 21)]
        self.assertTrue(is_surjective(gens, closure_max_dim=2).flag)
        self.assertEqual(algebra_dimension(gens, closure_max_dim=2), 25)
        reducible = [direct_sum([g, g]) for g in gens]
        self.assertEqual(algebra_dimension(reducible, closure_max_dim=2), 25)
        self.assertEqual(algebra_dimension(reducible), 25)

    def test_labels(self):
        self.assertEqual(format_label((0, 3), 2), "g1 g2*")
        self.assertEqual(parse_label("g1 g2*", 2), (0, 3))
        self.assertEqual(parse_label("1", 2), ())
        with self.assertRaises(PreconditionError):
            parse_label("g3", 2)

    def test_small_examples(self):
        self.assertEqual(commutant([cycle_matrix(3)]).dim, 3)
        self.assertEqual(commutant([unit_matrix(1, 1, 2), cycle_matrix(2)]).dim, 1)
        self.assertEqual(generated_algebra([unit_matrix(1, 1, 2), cycle_matrix(2)]).dim, 4)
        self.assertFalse(is_factor([np.diag([1.0, -1.0]).astype(np.complex128)]))
        self.assertTrue(is_factor([identity(2)]))

    def test_double_commutant_is_generated_algebra(self):
        '''
        Test A'' and the closure span the same algebra

        Parameters:
        gens (list): U ⊕ U and W ⊕ W, generating M_2 ⊗ 1
        '''
        u, w = haar_unitary(2, 3), haar_unitary(2, 5)
        gens = [direct_sum([u, u]), direct_sum([w, w])]
        algebra = generated_algebra(gens)
        double = commutant(list(commutant(gens).basis))
        self.assertEqual(double.dim, algebra.dim)
        for x in double.basis:
            self.assertLess(algebra.residual(x), 1e-9)
        for x in algebra.basis:
            self.assertLess(double.residual(x), 1e-9)

    def test_haar_pairs_are_surjective_factors(self):
        for seed in range(100):
            gens = [haar_unitary(5, derive_seed(seed, 0)), haar_unitary(5, derive_seed(seed, 1))]
            verdict = is_surjective(gens)
            with self.subTest(seed=seed):
                self.assertTrue(verdict.flag)
                self.assertTrue(verdict.certified)
                self.assertEqual(verdict.route, "closure")
                self.assertTrue(is_factor(gens))

    def test_commutant_route_has_no_certificate(self):
        '''
        Test surjectivity above the closure dimension is flagged as uncertified

        Parameters:
        gens (list): A Haar pair in dimension 41
        '''
        gens = [haar_unitary(41, 3), haar_unitary(41, 4)]
        with self.assertLogs("trace_lab.algebra", level="WARNING"):
            verdict = is_surjective(gens)
        self.assertTrue(verdict.flag)
        self.assertIsNone(verdict.certificate)
        self.assertEqual(verdict.route, "commutant")
        self.assertFalse(verdict.certified)

    def test_membership_residual(self):
        gens = [direct_sum([haar_unitary(2, 1), haar_unitary(2, 2)])]
        comm = commutant(gens)
        self.assertLess(membership_residual(gens[0] @ gens[0], comm), 1e-9)
        self.assertGreater(membership_residual(unit_matrix(1, 3, 4), comm), 1e-3)


if __name__ == "__main__":
    unittest.main()
