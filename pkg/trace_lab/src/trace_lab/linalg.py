"""Dense complex matrix helpers shared by every other module.

A CMatrix is a square ``complex128`` numpy array. Indices in the public
constructors are 1-based, matching the way matrix units E_ij are written.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from trace_lab.errors import (
    DimensionMismatchError,
    EmptyInputError,
    IndexRangeError,
    NotUnitaryError,
    PreconditionError,
    TraceLabError,
)

logger = logging.getLogger(__name__)

MAX_TOLERANCE = 1e-2
SEED_MODULUS = 2 ** 64
STRUCTURE_KINDS = ("unitary", "projection", "partial_isometry", "hermitian")
STANDARD_KINDS = ("unit", "cycle", "ublock", "vblock", "identity")


@dataclass(frozen=True)
class Tolerance:
    structural: float = 1e-9
    rank: float = 1e-9

    def __post_init__(self):
        for name in ("structural", "rank"):
            value = getattr(self, name)
            if not 0.0 <= value <= MAX_TOLERANCE:
                raise PreconditionError(f"{name} tolerance {value} outside [0, {MAX_TOLERANCE}]")


DEFAULT_TOLERANCE = Tolerance()


def as_cmatrix(m):
    """
    Validates and converts an array-like into a CMatrix.

    Args:
        m (array-like): Square matrix with finite entries.

    Returns:
        numpy.ndarray: complex128 array of shape (k, k).
    """
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatchError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("matrix has non-finite entries")
    return arr


def complex_to_pair(z):
    z = complex(z)
    return [z.real, z.imag]


def pair_to_complex(pair):
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise TypeError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def cmatrix_to_dict(m):
    """Serializes a CMatrix as {"dim": k, "data": [[re, im], ...]} in row-major order."""
    return {"dim": int(m.shape[0]), "data": [complex_to_pair(z) for z in np.ravel(m)]}


def cmatrix_from_dict(obj):
    dim = int(obj["dim"])
    data = obj["data"]
    if dim < 1 or len(data) != dim * dim:
        raise ValueError(f"CMatrix of dim {dim} needs {dim * dim} entries, got {len(data)}")
    values = np.array([pair_to_complex(p) for p in data], dtype=np.complex128)
    return as_cmatrix(values.reshape(dim, dim))


def common_dimension(mats):
    """
    Returns the shared side length of a non-empty list of matrices.

    Args:
        mats (list): CMatrix values.

    Returns:
        int: The common dimension k.
    """
    if len(mats) == 0:
        raise EmptyInputError("empty matrix list")
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"matrices of different dimensions: {sorted(dims)}")
    return dims.pop()


def identity(n):
    return np.eye(n, dtype=np.complex128)


def unit_matrix(i, j, n):
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexRangeError(f"unit ({i},{j}) outside 1..{n}")
    m = np.zeros((n, n), dtype=np.complex128)
    m[i - 1, j - 1] = 1.0
    return m


def cycle_matrix(n):
    """C_n: ones at (i+1, i) and at (1, n)."""
    if n < 1:
        raise IndexRangeError(f"cycle of size {n}")
    return np.roll(identity(n), 1, axis=0)


def u_block(k, n):
    """U_{k,n} = I_k ⊕ C_{n-k}."""
    if not 0 <= k <= n:
        raise IndexRangeError(f"ublock({k}) outside 0..{n}")
    blocks = [identity(k)] if k > 0 else []
    if n - k > 0:
        blocks.append(cycle_matrix(n - k))
    return direct_sum(blocks)


def v_block(k, n):
    """V_{k,n} = C_k ⊕ I_{n-k}."""
    if not 0 <= k <= n:
        raise IndexRangeError(f"vblock({k}) outside 0..{n}")
    blocks = [cycle_matrix(k)] if k > 0 else []
    if n - k > 0:
        blocks.append(identity(n - k))
    return direct_sum(blocks)


def standard_matrix(kind, n, *indices):
    """
    Builds one of the exact 0/1 matrices used by the generator lemma.

    Args:
        kind (str): One of unit, cycle, ublock, vblock, identity.
        n (int): Matrix size.
        *indices (int): (i, j) for unit, k for ublock and vblock.

    Returns:
        numpy.ndarray: The requested n x n matrix.
    """
    if n < 1:
        raise IndexRangeError(f"matrix size {n} must be positive")
    expected = {"unit": 2, "cycle": 0, "ublock": 1, "vblock": 1, "identity": 0}
    if kind not in expected:
        raise PreconditionError(f"unknown matrix kind {kind!r}; expected one of {STANDARD_KINDS}")
    if len(indices) != expected[kind]:
        raise IndexRangeError(f"{kind} takes {expected[kind]} indices, got {len(indices)}")
    if kind == "unit":
        return unit_matrix(indices[0], indices[1], n)
    if kind == "cycle":
        return cycle_matrix(n)
    if kind == "ublock":
        return u_block(indices[0], n)
    if kind == "vblock":
        return v_block(indices[0], n)
    return identity(n)


def structured_generators(n, k):
    """
    The deterministic generating triple (U_{k,n}, V_{k+1,n}, E_11) of M_n.

    Args:
        n (int): Matrix size.
        k (int): Block split, 0 <= k < n.

    Returns:
        list: Three n x n matrices.
    """
    if not 0 <= k < n:
        raise IndexRangeError(f"split {k} outside 0..{n - 1}")
    return [u_block(k, n), v_block(k + 1, n), unit_matrix(1, 1, n)]


def tensor(a, b):
    return np.kron(a, b)


def direct_sum(blocks):
    if len(blocks) == 0:
        raise EmptyInputError("direct_sum of an empty list")
    return np.asarray(scipy.linalg.block_diag(*blocks), dtype=np.complex128)


def dagger(m):
    return m.conj().T


def normalized_trace(m):
    return complex(np.trace(m)) / m.shape[0]


def hs_inner(a, b):
    """Hilbert–Schmidt inner product tr(a* b)."""
    return complex(np.vdot(a, b))


def trace_norm(m):
    """‖m‖_τ = tr(m* m)^{1/2} for the normalized trace."""
    return float(np.linalg.norm(m, "fro") / np.sqrt(m.shape[0]))


def operator_norm(m):
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def check_structure(m, kind, tol=DEFAULT_TOLERANCE):
    """
    Tests an operator predicate in operator norm.

    Args:
        m (numpy.ndarray): Square matrix.
        kind (str): unitary, projection, partial_isometry or hermitian.
        tol (Tolerance): Uses tol.structural.

    Returns:
        bool: Whether the predicate holds within tolerance.
    """
    eps = tol.structural
    if kind == "unitary":
        return operator_norm(dagger(m) @ m - identity(m.shape[0])) <= eps
    if kind == "projection":
        return operator_norm(m @ m - m) <= eps and operator_norm(dagger(m) - m) <= eps
    if kind == "partial_isometry":
        return operator_norm(m @ dagger(m) @ m - m) <= eps
    if kind == "hermitian":
        return operator_norm(dagger(m) - m) <= eps
    raise PreconditionError(f"unknown structure kind {kind!r}; expected one of {STRUCTURE_KINDS}")


def rng_for(seed):
    return np.random.default_rng(int(seed) % SEED_MODULUS)


def derive_seed(seed, *path):
    """
    Derives an independent 64-bit seed for a sub-task.

    Args:
        seed (int): Parent seed.
        *path (int): Position of the sub-task, e.g. (try, generator).

    Returns:
        int: Child seed.
    """
    entropy = [int(seed) % SEED_MODULUS, *(int(p) for p in path)]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def _ginibre(k, rng):
    return (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2.0)


def haar_unitary(k, seed):
    """
    Samples a Haar-distributed unitary.

    QR of a Ginibre matrix, with the phases of R's diagonal moved into Q.

    Args:
        k (int): Dimension.
        seed (int): Seed.

    Returns:
        numpy.ndarray: k x k unitary.
    """
    if k < 1:
        raise IndexRangeError(f"dimension {k} must be positive")
    q, r = scipy.linalg.qr(_ginibre(k, rng_for(seed)))
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def random_hermitian(k, seed):
    """Seeded GUE sample scaled to unit operator norm."""
    g = _ginibre(k, rng_for(seed))
    h = (g + dagger(g)) / 2.0
    return h / operator_norm(h)


def hermitian_exponential(h, t):
    """exp(i t h) for Hermitian h, unitary to roundoff."""
    w, v = scipy.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ dagger(v)


def perturb_unitary(u, eps, seed, tol=DEFAULT_TOLERANCE):
    """
    Returns u·exp(i·eps·H) for a seeded Hermitian H with ‖H‖ = 1.

    Args:
        u (numpy.ndarray): Unitary matrix.
        eps (float): Perturbation size, nonnegative.
        seed (int): Seed for H; H does not depend on eps.
        tol (Tolerance): Unitarity tolerance for u.

    Returns:
        numpy.ndarray: Unitary within eps of u in operator norm.
    """
    u = as_cmatrix(u)
    if eps < 0:
        raise PreconditionError(f"eps must be nonnegative, got {eps}")
    if not check_structure(u, "unitary", tol):
        raise NotUnitaryError("perturb_unitary needs a unitary input")
    if eps == 0:
        return u.copy()
    out = u @ hermitian_exponential(random_hermitian(u.shape[0], seed), eps)
    distance = operator_norm(out - u)
    if distance > eps + 1e-10:
        raise TraceLabError(f"perturbation moved {distance:.3e}, more than eps={eps}")
    return out
