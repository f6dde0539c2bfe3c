"""Free-group words, *-monomials in two matrix-unit systems, and their traces."""
import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from trace_lab.errors import DimensionMismatchError, IndexRangeError, PreconditionError, SchemaError
from trace_lab.linalg import (
    as_cmatrix,
    common_dimension,
    complex_to_pair,
    dagger,
    identity,
    normalized_trace,
    trace_norm,
)

logger = logging.getLogger(__name__)

IDENTITY_TOKEN = "id"
FAMILIES = ("e", "f")


class Representation(Protocol):
    dim: int

    def letter(self, symbol): ...

    def unit(self): ...


@dataclass(frozen=True)
class GroupWord:
    """A freely reduced word; letters are (generator index, ±1) with 1-based indices."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple((int(j), int(s)) for j, s in self.letters)
        for position, (j, s) in enumerate(letters):
            if j < 1 or s not in (1, -1):
                raise PreconditionError(f"bad letter ({j},{s})")
            if position > 0 and letters[position - 1] == (j, -s):
                raise PreconditionError(f"word is not freely reduced at position {position}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def reduce(cls, letters):
        stack = []
        for j, s in letters:
            if stack and stack[-1] == (j, -s):
                stack.pop()
            else:
                stack.append((j, s))
        return cls(tuple(stack))

    def inverse(self):
        return GroupWord(tuple((j, -s) for j, s in reversed(self.letters)))

    def __mul__(self, other):
        return GroupWord.reduce(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        if not self.letters:
            return IDENTITY_TOKEN
        return " ".join(str(j * s) for j, s in self.letters)


@dataclass(frozen=True)
class StarMonomial:
    """A product of matrix-unit symbols (family, i, j); the empty product is the identity."""

    factors: tuple = ()

    def __post_init__(self):
        factors = tuple((str(f), int(i), int(j)) for f, i, j in self.factors)
        for family, i, j in factors:
            if family not in FAMILIES or i < 1 or j < 1:
                raise PreconditionError(f"bad symbol ({family},{i},{j})")
        object.__setattr__(self, "factors", factors)

    @property
    def letters(self):
        return self.factors

    def adjoint(self):
        return StarMonomial(tuple((f, j, i) for f, i, j in reversed(self.factors)))

    def __len__(self):
        return len(self.factors)

    def __str__(self):
        if not self.factors:
            return IDENTITY_TOKEN
        return " ".join(f"{f}.{i}.{j}" for f, i, j in self.factors)


@dataclass(frozen=True)
class MomentReport:
    words: tuple
    values_a: np.ndarray
    values_b: np.ndarray
    deltas: np.ndarray
    sup_delta: float
    generator_trace_distances: tuple = field(default_factory=tuple)

    @classmethod
    def from_values(cls, words, values_a, values_b, generator_trace_distances=()):
        values_a = np.asarray(values_a, dtype=np.complex128)
        values_b = np.asarray(values_b, dtype=np.complex128)
        if not len(words) == len(values_a) == len(values_b):
            raise DimensionMismatchError("words and value lists differ in length")
        deltas = np.abs(values_a - values_b)
        sup_delta = float(deltas.max()) if len(deltas) else 0.0
        return cls(tuple(words), values_a, values_b, deltas, sup_delta,
                   tuple(float(x) for x in generator_trace_distances))

    def to_dict(self):
        return {
            "words": [str(w) for w in self.words],
            "values_a": [complex_to_pair(z) for z in self.values_a],
            "values_b": [complex_to_pair(z) for z in self.values_b],
            "deltas": [float(x) for x in self.deltas],
            "sup_delta": self.sup_delta,
            "generator_trace_distances": list(self.generator_trace_distances),
        }


class MatrixAssignment:
    """Adapts a list or dict of matrices to the Representation protocol."""

    def __init__(self, mapping):
        if isinstance(mapping, dict):
            self._mapping = {key: as_cmatrix(m) for key, m in mapping.items()}
        else:
            self._mapping = {j + 1: as_cmatrix(m) for j, m in enumerate(mapping)}
        self.dim = common_dimension(list(self._mapping.values()))

    def letter(self, symbol):
        if isinstance(symbol[0], str):
            if symbol not in self._mapping:
                raise IndexRangeError(f"no matrix assigned to {symbol}")
            return self._mapping[symbol]
        j, s = symbol
        if j not in self._mapping:
            raise IndexRangeError(f"generator {j} not assigned")
        return self._mapping[j] if s == 1 else dagger(self._mapping[j])

    def unit(self):
        return identity(self.dim)


def as_representation(assignment):
    if hasattr(assignment, "letter") and hasattr(assignment, "unit"):
        return assignment
    return MatrixAssignment(assignment)


def _letter_key(symbol):
    if isinstance(symbol[0], str):
        return symbol
    j, s = symbol
    return (j, 0 if s == 1 else 1)


def _word_key(word):
    return tuple(_letter_key(symbol) for symbol in word.letters)


def ball(d, radius):
    """
    Lists all freely reduced words in d generators up to a length.

    Args:
        d (int): Number of generators.
        radius (int): Maximal word length.

    Returns:
        list: GroupWord values, length-lexicographic with a1 < a1^-1 < a2 < ...
    """
    if d < 1 or radius < 0:
        raise PreconditionError(f"ball needs d >= 1 and radius >= 0, got d={d}, radius={radius}")
    alphabet = [(j, s) for j in range(1, d + 1) for s in (1, -1)]
    layer = [()]
    words = [GroupWord()]
    for _ in range(radius):
        layer = [prefix + (a,) for prefix in layer for a in alphabet
                 if not prefix or prefix[-1] != (a[0], -a[1])]
        words.extend(GroupWord(letters) for letters in layer)
    return words


def monomial_ball(n, radius):
    """
    Lists the identity and every reduced *-monomial in e_ij, f_ij up to a length.

    Adjacent factors come from different families, since x_ij x_lm collapses to
    a single unit or to zero inside one family.

    Args:
        n (int): Matrix-unit size.
        radius (int): Maximal monomial length.

    Returns:
        list: StarMonomial values in deterministic order.
    """
    if n < 1 or radius < 0:
        raise PreconditionError(f"monomial_ball needs n >= 1 and radius >= 0, got n={n}, radius={radius}")
    alphabet = [(f, i, j) for f in FAMILIES for i in range(1, n + 1) for j in range(1, n + 1)]
    layer = [()]
    words = [StarMonomial()]
    for _ in range(radius):
        layer = [prefix + (a,) for prefix in layer for a in alphabet
                 if not prefix or prefix[-1][0] != a[0]]
        words.extend(StarMonomial(letters) for letters in layer)
    return words


def evaluate(word, assignment):
    """
    Evaluates a word as the ordered product of its letters' images.

    Args:
        word (GroupWord | StarMonomial): Word to evaluate.
        assignment: A Representation, a list of unitaries or a dict of matrices.

    Returns:
        numpy.ndarray: The image of the word; the unit for the empty word.
    """
    rep = as_representation(assignment)
    result = rep.unit()
    for symbol in word.letters:
        result = result @ rep.letter(symbol)
    return result


def moment_vector(assignment, words):
    """
    Normalized traces of the evaluated words, in input order.

    Words are visited in sorted order so shared prefixes are multiplied once;
    the last letter enters through tr(AB) = sum(A * B^T).

    Args:
        assignment: A Representation, a list of unitaries or a dict of matrices.
        words (list): GroupWord or StarMonomial values.

    Returns:
        numpy.ndarray: complex moments.
    """
    rep = as_representation(assignment)
    values = np.zeros(len(words), dtype=np.complex128)
    unit = rep.unit()
    chain_keys = []
    chain_mats = [unit]
    for idx in sorted(range(len(words)), key=lambda w: _word_key(words[w])):
        letters = words[idx].letters
        if not letters:
            values[idx] = normalized_trace(unit)
            continue
        prefix = letters[:-1]
        common = 0
        while common < min(len(chain_keys), len(prefix)) and chain_keys[common] == prefix[common]:
            common += 1
        del chain_keys[common:]
        del chain_mats[common + 1:]
        for symbol in prefix[common:]:
            chain_mats.append(chain_mats[-1] @ rep.letter(symbol))
            chain_keys.append(symbol)
        last = rep.letter(letters[-1])
        values[idx] = np.sum(chain_mats[-1] * last.T) / rep.dim
    return values


def compare_moments(rep_a, rep_b, words, generators=(), normalize_b=False):
    """
    Builds a MomentReport for two representations over one word list.

    Args:
        rep_a: First representation.
        rep_b: Second representation.
        words (list): Words to compare.
        generators (list): Symbols whose images are compared in trace norm.
        normalize_b (bool): Divide rep_b's moments by the trace of its unit,
            for non-unital embeddings.

    Returns:
        MomentReport: Paired values and deltas.
    """
    rep_a = as_representation(rep_a)
    rep_b = as_representation(rep_b)
    if rep_a.dim != rep_b.dim and generators:
        raise DimensionMismatchError("generator distances need equal dimensions")
    values_a = moment_vector(rep_a, words)
    values_b = moment_vector(rep_b, words)
    if normalize_b:
        values_b = values_b / normalized_trace(rep_b.unit())
    distances = [trace_norm(rep_a.letter(s) - rep_b.letter(s)) for s in generators]
    return MomentReport.from_values(words, values_a, values_b, distances)


def _parse_token(token):
    if token[0] in FAMILIES:
        parts = token.rstrip("*").split(".")
        if len(parts) != 3:
            raise SchemaError(f"bad monomial token {token!r}")
        family, i, j = parts[0], int(parts[1]), int(parts[2])
        return (family, j, i) if token.endswith("*") else (family, i, j)
    value = int(token)
    if value == 0:
        raise SchemaError("generator index 0 is not a letter")
    return (abs(value), 1 if value > 0 else -1)


def parse_word(line, kind=None):
    """
    Parses one line of a word list file.

    Args:
        line (str): Signed integers, e.i.j/f.i.j tokens (a trailing * takes the
            adjoint), or "id".
        kind (str): "group" or "monomial"; decides the type of "id".

    Returns:
        GroupWord | StarMonomial: Parsed word.
    """
    tokens = line.split()
    if not tokens or tokens == [IDENTITY_TOKEN]:
        return StarMonomial() if kind == "monomial" else GroupWord()
    try:
        symbols = [_parse_token(t) for t in tokens]
    except ValueError as e:
        raise SchemaError(f"cannot parse word {line!r}: {e}") from e
    families = {isinstance(s[0], str) for s in symbols}
    if len(families) != 1:
        raise SchemaError(f"word {line!r} mixes group letters and matrix units")
    try:
        if families.pop():
            return StarMonomial(tuple(symbols))
        return GroupWord(tuple(symbols))
    except PreconditionError as e:
        raise SchemaError(str(e)) from e


def load_words(path, kind=None):
    """
    Reads a word list file, one word per line.

    Args:
        path (str): Word list file.
        kind (str): "group" or "monomial" to require one kind; None infers it
            from the first word.

    Returns:
        list: GroupWord or StarMonomial values in file order.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            lines = [line.strip() for line in handle if line.strip()]
    except UnicodeDecodeError as e:
        raise SchemaError(f"{path} is not UTF-8 text: {e}") from e
    found = "group"
    for line in lines:
        if line != IDENTITY_TOKEN:
            found = "monomial" if line.split()[0][0] in FAMILIES else "group"
            break
    if not lines:
        raise SchemaError(f"{path} holds no words")
    if kind is not None and found != kind:
        raise SchemaError(f"{path} holds {found} words, expected {kind} words")
    return [parse_word(line, kind or found) for line in lines]
