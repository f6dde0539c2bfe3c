import os
import tempfile
import unittest

import numpy as np

from trace_lab.errors import PreconditionError, SchemaError
from trace_lab.linalg import dagger, haar_unitary, identity, unit_matrix
from trace_lab.words import (
    GroupWord,
    MatrixAssignment,
    StarMonomial,
    ball,
    compare_moments,
    evaluate,
    load_words,
    monomial_ball,
    moment_vector,
    parse_word,
)


def _naive_moments(mats, words):
    values = []
    for word in words:
        product = identity(mats[0].shape[0])
        for j, s in word.letters:
            product = product @ (mats[j - 1] if s == 1 else dagger(mats[j - 1]))
        values.append(np.trace(product) / product.shape[0])
    return np.array(values)


class TestWords(unittest.TestCase):
    def test_ball_sizes(self):
        '''
        Test ball counts reduced words

        Parameters:
        d (int): 2 generators, so 1 + 4 + 12 + 36 words up to length 3
        '''
        words = ball(2, 3)
        self.assertEqual(len(words), 1 + 4 + 12 + 36)
        self.assertEqual(len(words[0]), 0)
        self.assertEqual(len(set(words)), len(words))
        with self.assertRaises(PreconditionError):
            ball(0, 2)

    def test_group_word_reduction(self):
        word = GroupWord.reduce([(1, 1), (2, 1), (2, -1), (1, 1)])
        self.assertEqual(word.letters, ((1, 1), (1, 1)))
        self.assertEqual(len(word * word.inverse()), 0)
        with self.assertRaises(PreconditionError):
            GroupWord(((1, 1), (1, -1)))

    def test_moment_vector_matches_naive_products(self):
        mats = [haar_unitary(3, 1), haar_unitary(3, 2)]
        words = ball(2, 3)
        np.testing.assert_allclose(moment_vector(mats, words), _naive_moments(mats, words), atol=1e-12)

    def test_evaluate_empty_word(self):
        np.testing.assert_allclose(evaluate(GroupWord(), [haar_unitary(2, 0)]), identity(2))

    def test_monomial_ball(self):
        words = monomial_ball(2, 2)
        # 8 symbols, then pairs from different families
        self.assertEqual(len(words), 1 + 8 + 8 * 4)
        for word in words:
            for left, right in zip(word.factors, word.factors[1:]):
                self.assertNotEqual(left[0], right[0])

    def test_star_monomial(self):
        word = StarMonomial((("e", 1, 2), ("f", 2, 3)))
        self.assertEqual(str(word), "e.1.2 f.2.3")
        self.assertEqual(word.adjoint().factors, (("f", 3, 2), ("e", 2, 1)))
        with self.assertRaises(PreconditionError):
            StarMonomial((("g", 1, 1),))

    def test_parse_word(self):
        self.assertEqual(parse_word("1 -2").letters, ((1, 1), (2, -1)))
        self.assertEqual(parse_word("e.1.2 f.2.1*").factors, (("e", 1, 2), ("f", 1, 2)))
        self.assertIsInstance(parse_word("id", "monomial"), StarMonomial)
        self.assertIsInstance(parse_word("id"), GroupWord)
        with self.assertRaises(SchemaError):
            parse_word("1 e.1.1")
        with self.assertRaises(SchemaError):
            parse_word("0")

    def test_load_words(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "words.txt")
            with open(path, "w") as f:
                f.write("id\ne.1.2 f.2.1\n\nf.1.1\n")
            words = load_words(path)
        self.assertEqual(len(words), 3)
        self.assertTrue(all(isinstance(w, StarMonomial) for w in words))

    def test_compare_moments_normalizes_corner(self):
        '''
        Test compare_moments with a non-unital second representation

        Parameters:
        normalize_b (bool): Divides by the trace of the corner unit
        '''
        full = MatrixAssignment({("e", 1, 1): identity(2)})
        corner = MatrixAssignment({("e", 1, 1): np.kron(unit_matrix(1, 1, 2), identity(2))})
        corner.unit = lambda: np.kron(unit_matrix(1, 1, 2), identity(2))
        words = [StarMonomial(), StarMonomial((("e", 1, 1),))]
        report = compare_moments(full, corner, words, normalize_b=True)
        self.assertAlmostEqual(report.sup_delta, 0.0)
        raw = compare_moments(full, corner, words)
        self.assertAlmostEqual(raw.sup_delta, 0.5)

    def test_inverse_word_conjugates_moment(self):
        for seed in range(5):
            mats = [haar_unitary(3, 2 * seed), haar_unitary(3, 2 * seed + 1)]
            words = ball(2, 3)
            values = moment_vector(mats, words)
            inverses = moment_vector(mats, [w.inverse() for w in words])
            with self.subTest(seed=seed):
                np.testing.assert_allclose(inverses, values.conj(), atol=1e-12)

    def test_moments_are_conjugation_invariant(self):
        '''
        Test φ(u w u⁻¹) = φ(w)

        Parameters:
        u (GroupWord): Each generator and a length-2 word
        w (GroupWord): Every word of length at most 3
        '''
        mats = [haar_unitary(4, 8), haar_unitary(4, 9)]
        words = ball(2, 3)
        values = moment_vector(mats, words)
        for u in (GroupWord(((1, 1),)), GroupWord(((2, -1),)), GroupWord(((1, 1), (2, 1)))):
            conjugated = moment_vector(mats, [u * w * u.inverse() for w in words])
            with self.subTest(u=str(u)):
                np.testing.assert_allclose(conjugated, values, atol=1e-12)

    def test_load_words_checks_kind_and_encoding(self):
        with tempfile.TemporaryDirectory() as tmp:
            group = os.path.join(tmp, "group.txt")
            with open(group, "w") as f:
                f.write("1 -2\n2\n")
            self.assertEqual([str(w) for w in load_words(group, "group")], ["1 -2", "2"])
            with self.assertRaises(SchemaError):
                load_words(group, "monomial")
            empty = os.path.join(tmp, "empty.txt")
            with open(empty, "w") as f:
                f.write("\n\n")
            with self.assertRaises(SchemaError):
                load_words(empty)
            binary = os.path.join(tmp, "binary.txt")
            with open(binary, "wb") as f:
                f.write(b"1 2\n\xff\xfe\n")
            with self.assertRaises(SchemaError):
                load_words(binary)


if __name__ == "__main__":
    unittest.main()
