import itertools
import unittest

import numpy as np

from trace_lab.channels import (
    TransferChannel,
    channel_distance,
    channel_from_moments,
    channel_from_rep,
    midpoint_channel,
    moment_table,
    solve_adjoint_pairing,
    verify_channel,
)
from trace_lab.errors import DimensionMismatchError, PreconditionError
from trace_lab.linalg import dagger, derive_seed, haar_unitary, identity, unit_matrix
from trace_lab.matprod import MnMnRep, mn_rep_from_unitaries, perturbed_rep, random_mn_rep


def _units(n):
    return np.array([[unit_matrix(i, j, n) for j in range(1, n + 1)] for i in range(1, n + 1)])


class TestChannels(unittest.TestCase):
    def test_identity_channel(self):
        '''
        Test the representation with f = e gives the identity channel

        Parameters:
        n (int): 3, with the e-system used for both families
        '''
        rep = random_mn_rep(3, 2, 1)
        same = MnMnRep(3, rep.e_units, rep.e_units)
        channel = channel_from_rep(same)
        identity_channel = TransferChannel.from_values(3, _units(3))
        self.assertLessEqual(channel_distance(channel, identity_channel), 1e-10)
        y = np.arange(9).reshape(3, 3).astype(np.complex128)
        np.testing.assert_allclose(channel.apply(y), y, atol=1e-10)

    def test_random_channels_verify(self):
        cases = list(itertools.product((2, 3, 4), (1, 2, 3)))
        for index in range(50):
            n, d = cases[index % len(cases)]
            channel = channel_from_rep(random_mn_rep(n, d, derive_seed(11, index)))
            report = verify_channel(channel)
            with self.subTest(index=index, n=n, d=d):
                self.assertTrue(report.passed)
                self.assertTrue(report.unital and report.trace_preserving and report.choi_psd)

    def test_transpose_is_not_completely_positive(self):
        values = np.array([[unit_matrix(j, i, 2) for j in range(1, 3)] for i in range(1, 3)])
        report = verify_channel(TransferChannel.from_values(2, values))
        self.assertTrue(report.unital)
        self.assertTrue(report.trace_preserving)
        self.assertFalse(report.choi_psd)
        self.assertAlmostEqual(report.min_choi_eigenvalue, -1.0)

    def test_channel_from_moments_is_affine(self):
        first = moment_table(random_mn_rep(3, 2, 3))
        second = moment_table(random_mn_rep(3, 2, 4))
        for t in (0.0, 0.25, 0.5, 1.0):
            mixed = channel_from_moments(3, t * first + (1 - t) * second)
            expected = t * channel_from_moments(3, first).values + (1 - t) * channel_from_moments(3, second).values
            np.testing.assert_allclose(mixed.values, expected, atol=1e-15)

    def test_channel_from_moments_rejects(self):
        with self.assertRaises(PreconditionError):
            channel_from_moments(2, np.zeros((2, 2, 2)))
        table = np.zeros((2, 2, 2, 2))
        table[0, 0, 0, 0] = np.nan
        with self.assertRaises(PreconditionError):
            channel_from_moments(2, table)

    def test_entry_formula_matches_adjoint_pairing(self):
        for seed in range(5):
            rep = random_mn_rep(3, 2, seed)
            self.assertLessEqual(channel_distance(channel_from_rep(rep), solve_adjoint_pairing(rep)), 1e-12)

    def test_sign_flip(self):
        '''
        Test n = 2 with u = -1

        Parameters:
        u (CMatrix): The 1x1 unitary -1, so f_12 = -e_12
        '''
        rep = mn_rep_from_unitaries(2, [-identity(1)])
        channel = channel_from_rep(rep)
        np.testing.assert_allclose(channel.values[0, 1], -unit_matrix(1, 2, 2), atol=1e-12)
        np.testing.assert_allclose(channel.values[0, 0], unit_matrix(1, 1, 2), atol=1e-12)

    def test_conjugation_covariance(self):
        '''
        Test the f-system u* e u gives the channel y -> u y u*

        Parameters:
        u (CMatrix): Haar unitaries of size n = k = 3
        '''
        e = _units(3)
        for seed in range(3):
            u = haar_unitary(3, seed)
            f = np.einsum("ab,ijbc,cd->ijad", dagger(u), e, u)
            channel = channel_from_rep(MnMnRep(3, e, f))
            y = haar_unitary(3, 10 + seed) + unit_matrix(1, 2, 3)
            with self.subTest(seed=seed):
                np.testing.assert_allclose(channel.apply(y), u @ y @ dagger(u), atol=1e-12)

    def test_phase_representation_is_a_schur_multiplier(self):
        phases = [1j, -1.0, np.exp(0.7j)]
        rep = mn_rep_from_unitaries(4, [c * identity(1) for c in phases])
        c = np.array([1.0] + phases)
        channel = channel_from_rep(rep)
        y = np.arange(16).reshape(4, 4).astype(np.complex128)
        np.testing.assert_allclose(channel.apply(y), np.outer(c, c.conj()) * y, atol=1e-12)

    def test_dict_roundtrip(self):
        channel = channel_from_rep(random_mn_rep(2, 2, 0))
        restored = TransferChannel.from_dict(channel.to_dict())
        self.assertEqual(channel_distance(channel, restored), 0.0)
        with self.assertRaises(DimensionMismatchError):
            channel_distance(channel, channel_from_rep(random_mn_rep(3, 1, 0)))
        with self.assertRaises(DimensionMismatchError):
            channel.apply(identity(3))


def _perturbed_channel_distance(rep, eps):
    bundle = perturbed_rep(rep, rep, eps)
    return channel_distance(channel_from_rep(bundle.perturbed), channel_from_rep(rep))


class TestMidpointChannel(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.rep1 = random_mn_rep(4, 3, derive_seed(0, 1))
        cls.rep2 = random_mn_rep(4, 3, derive_seed(0, 2))
        cls.channel, cls.report = midpoint_channel(cls.rep1, cls.rep2, 0.34, radius=2)

    def test_midpoint_channel(self):
        self.assertTrue(self.report.surjective)
        self.assertTrue(self.report.passed, [g.name for g in self.report.gates if not g.passed])
        self.assertTrue(verify_channel(self.channel).passed)
        gates = {g.name: g for g in self.report.gates}
        self.assertEqual(gates["channel_distance"].threshold, 0.34)
        self.assertLessEqual(self.report.distance_to_midpoint, 0.34)

    def test_channel_threshold_gate_fails_when_tight(self):
        _, report = midpoint_channel(self.rep1, self.rep2, 0.34, radius=2, threshold=0.05)
        gates = {g.name: g for g in report.gates}
        self.assertFalse(gates["channel_distance"].passed)
        self.assertTrue(gates["channel_moment_consistency"].passed)
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.distance_to_midpoint, self.report.distance_to_midpoint, places=12)

    def test_same_inputs_stay_near_input_channel(self):
        '''
        Test rep1 = rep2 keeps the perturbed channel within 2·eps of T1

        Parameters:
        eps (float): 0.34, so the added corner has rank 1 on d = 3
        '''
        self.assertLessEqual(_perturbed_channel_distance(self.rep1, 0.34), 2 * 0.34)

    def test_distance_shrinks_with_eps(self):
        '''
        Test the channel distance over an eps sweep on phase representations

        For f_1j = c_j ⊗ E_1j the channel is a Schur multiplier with unimodular
        entries, and the perturbed entries lose exactly the weight of the added
        corner; the largest loss is (3dr + r²)/(d + r)².

        Parameters:
        eps (float): 0.34 with d = 3 and 0.26 with d = 4, rank r = 1
        '''
        phases = [1j, -1.0, np.exp(0.7j)]
        distances = []
        for d, eps in ((3, 0.34), (4, 0.26)):
            rep = mn_rep_from_unitaries(4, [c * identity(d) for c in phases])
            distances.append(_perturbed_channel_distance(rep, eps))
        self.assertAlmostEqual(distances[0], 10 / 16, places=9)
        self.assertAlmostEqual(distances[1], 13 / 25, places=9)
        self.assertGreaterEqual(distances[0], distances[1])

    def test_midpoint_channel_needs_radius_two(self):
        with self.assertRaises(PreconditionError):
            midpoint_channel(random_mn_rep(4, 3, 1), random_mn_rep(4, 3, 2), 0.34, radius=1)


if __name__ == "__main__":
    unittest.main()
