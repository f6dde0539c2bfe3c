"""Isolation of the trivial character for finite groups, from character tables."""
import json
import logging
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from trace_lab.errors import InvalidTableError, NotNormalizedError, SchemaError
from trace_lab.linalg import complex_to_pair, pair_to_complex, rng_for

logger = logging.getLogger(__name__)

BUNDLED_TABLES = ("z2", "z3", "z4", "z6", "s3")
ORTHOGONALITY_TOL = 1e-9
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class CharacterTable:
    """
    Irreducible characters of a finite group by conjugacy class.

    Attributes:
        class_sizes (tuple): Class sizes; the first class is the identity.
        characters (numpy.ndarray): One row per irreducible character; row 0 is trivial.
        name (str): Short name, e.g. "s3".
        provenance (str): Where the values come from.
    """

    class_sizes: tuple
    characters: np.ndarray
    name: str = ""
    provenance: str = ""

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.class_sizes)
        chars = np.asarray(self.characters, dtype=np.complex128)
        if not sizes or min(sizes) < 1 or sizes[0] != 1:
            raise InvalidTableError(f"class sizes must be positive with the identity class first, got {sizes}")
        if chars.ndim != 2 or chars.shape[1] != len(sizes):
            raise InvalidTableError(f"characters need {len(sizes)} values per row, got shape {chars.shape}")
        if not np.allclose(chars[0], 1.0, atol=ORTHOGONALITY_TOL):
            raise InvalidTableError("first row must be the trivial character")
        gram = (chars * np.array(sizes)) @ chars.conj().T / sum(sizes)
        defect = float(np.abs(gram - np.eye(len(chars))).max())
        if defect > ORTHOGONALITY_TOL:
            raise InvalidTableError(f"rows are not orthonormal (defect {defect:.2e})")
        object.__setattr__(self, "class_sizes", sizes)
        object.__setattr__(self, "characters", chars)

    @property
    def order(self):
        return sum(self.class_sizes)

    @property
    def degrees(self):
        return self.characters[:, 0].real

    def inner(self, phi, chi):
        return complex(np.sum(np.array(self.class_sizes) * phi * np.conj(chi)) / self.order)

    def to_dict(self):
        return {
            "name": self.name,
            "provenance": self.provenance,
            "class_sizes": list(self.class_sizes),
            "characters": [[complex_to_pair(z) for z in row] for row in self.characters],
        }

    @classmethod
    def from_dict(cls, obj):
        characters = [[pair_to_complex(p) for p in row] for row in obj["characters"]]
        return cls(tuple(obj["class_sizes"]), np.array(characters, dtype=np.complex128),
                   obj.get("name", ""), obj.get("provenance", ""))


@dataclass(frozen=True)
class ClassFunction:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))


@dataclass(frozen=True)
class WeightBoundReport:
    gap: float
    sup_dev: float
    total_dev: float
    sup_bound: float
    bound: float
    actual_trivial_weight: float
    holds: bool

    def to_dict(self):
        return dict(self.__dict__)


def _check_values(table, phi):
    values = phi.values if isinstance(phi, ClassFunction) else np.asarray(phi, dtype=np.complex128)
    if values.shape != (len(table.class_sizes),):
        raise InvalidTableError(f"class function needs {len(table.class_sizes)} values, got {values.shape}")
    if abs(values[0] - 1.0) > NORMALIZATION_TOL:
        raise NotNormalizedError(f"phi(e) = {values[0]}, expected 1")
    return values


def isolation_gap(table):
    """
    min over nontrivial χ of max over classes of 1 - Re χ(c)/χ(e).

    Args:
        table (CharacterTable): At least two characters.

    Returns:
        float: The gap, positive for every finite group.
    """
    if len(table.characters) < 2:
        raise InvalidTableError("the trivial group has no nontrivial character")
    normalized = table.characters[1:] / table.characters[1:, :1]
    return float((1.0 - normalized.real).max(axis=1).min())


def decompose_trace(table, phi):
    """
    Barycentric weights c_χ = ⟨φ, χ⟩·χ(e) of a class function over the normalized characters.

    Args:
        table (CharacterTable): Character table.
        phi (ClassFunction | array-like): Values per class with φ(e) = 1.

    Returns:
        list: One real weight per character; negative weights mean φ is not a trace.
    """
    values = _check_values(table, phi)
    return [float((table.inner(values, chi) * chi[0]).real) for chi in table.characters]


def trace_from_weights(table, weights):
    """Σ c_χ χ/χ(e) for weights over the characters."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(table.characters),):
        raise InvalidTableError(f"need {len(table.characters)} weights, got {weights.shape}")
    normalized = table.characters / table.characters[:, :1]
    return ClassFunction(weights @ normalized)


def random_trace(table, seed):
    weights = rng_for(seed).dirichlet(np.ones(len(table.characters)))
    return trace_from_weights(table, weights), weights


def weight_bound_check(table, phi):
    """
    Compares the trivial-character weight of φ with the bound the isolation gap forces.

    Each nontrivial normalized character deviates from 1 by at least the gap
    on some class, so Σ_c |1 - φ(c)| >= gap·(1 - c_1). The bound is
    1 - total_dev/gap with total_dev the sum over classes; the pointwise
    1 - sup_dev/gap is reported too but not enforced.

    Args:
        table (CharacterTable): Character table.
        phi (ClassFunction | array-like): A trace.

    Returns:
        WeightBoundReport: Gap, deviations, bounds, actual weight and verdict.
    """
    values = _check_values(table, phi)
    gap = isolation_gap(table)
    deviations = np.abs(1.0 - values)
    sup_dev = float(deviations.max())
    total_dev = float(deviations[1:].sum())
    bound = 1.0 - total_dev / gap
    actual = decompose_trace(table, values)[0]
    return WeightBoundReport(gap=gap, sup_dev=sup_dev, total_dev=total_dev, sup_bound=1.0 - sup_dev / gap,
                             bound=bound, actual_trivial_weight=actual, holds=bool(actual >= bound - 1e-9))


def cyclic_table(m):
    """Character table of Z/m: χ_j(g^l) = exp(2πi·jl/m)."""
    if m < 1:
        raise InvalidTableError(f"cyclic group order must be positive, got {m}")
    j, l = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return CharacterTable(tuple([1] * m), np.exp(2j * np.pi * j * l / m), f"z{m}",
                          "roots of unity, computed")


def load_table(name_or_path):
    """
    Loads a bundled table by name or a table file by path.

    Args:
        name_or_path (str): One of z2, z3, z4, z6, s3, or a JSON file path.

    Returns:
        CharacterTable: The parsed table.
    """
    key = os.path.splitext(os.path.basename(str(name_or_path)))[0]
    try:
        if not os.path.exists(str(name_or_path)) and key in BUNDLED_TABLES:
            text = resources.files("trace_lab.data").joinpath(f"{key}.json").read_text(encoding="utf-8")
        else:
            with open(name_or_path, encoding="utf-8") as handle:
                text = handle.read()
        table = CharacterTable.from_dict(json.loads(text))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise SchemaError(f"cannot load character table {name_or_path!r}: {e}") from e
    logger.debug(f"loaded table {table.name or key} of order {table.order}")
    return table


def amalgam_statement(gap):
    return (
        f"The trivial character is isolated with gap {gap:.6g}: a trace within total deviation delta of 1 "
        f"on the classes keeps weight at least 1 - delta/{gap:.6g} on the trivial character. "
        "For an amalgamated free product of two such groups over a common subgroup, traces near the "
        "trivial one stay near it, so extreme traces are not dense and the trace simplex is not Poulsen."
    )
