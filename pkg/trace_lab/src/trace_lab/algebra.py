"""Generated *-algebras, commutants, centers, surjectivity and factoriality."""
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from trace_lab.errors import ClosureError, PreconditionError
from trace_lab.linalg import (
    DEFAULT_TOLERANCE,
    as_cmatrix,
    common_dimension,
    dagger,
    identity,
    operator_norm,
    unit_matrix,
)

logger = logging.getLogger(__name__)

MAX_CLOSURE_PASSES = 50
DEFAULT_CLOSURE_MAX_DIM = 40
COMMUTANT_SAMPLE_SEED = 20240917


@dataclass(frozen=True)
class AlgebraBasis:
    """Orthonormal (Hilbert–Schmidt) basis of a matrix algebra, stacked as (dim, k, k)."""

    ambient_dim: int
    basis: np.ndarray
    labels: tuple = field(default_factory=tuple)

    @property
    def dim(self):
        return int(self.basis.shape[0])

    def _flat(self):
        return self.basis.reshape(self.dim, -1)

    def project(self, x):
        flat = self._flat()
        coefficients = flat.conj() @ np.ravel(x)
        return (coefficients @ flat).reshape(x.shape)

    def residual(self, x):
        """Relative Frobenius distance from x to the span."""
        scale = max(1.0, float(np.linalg.norm(x)))
        return float(np.linalg.norm(x - self.project(x))) / scale

    def gram_defect(self):
        flat = self._flat()
        return operator_norm(flat.conj() @ flat.T - np.eye(self.dim))


class Surjectivity(NamedTuple):
    flag: bool
    certificate: Optional[list]
    route: str = "closure"

    @property
    def certified(self):
        return self.certificate is not None


def _as_generators(gens):
    mats = [as_cmatrix(g) for g in gens]
    common_dimension(mats)
    return mats


class _SpanBuilder:
    """Incremental orthonormal basis with one reorthogonalization pass."""

    def __init__(self, length, tol):
        self.rows = np.zeros((length, length), dtype=np.complex128)
        self.size = 0
        self.tol = tol

    @property
    def full(self):
        return self.size == self.rows.shape[0]

    def offer(self, vectors):
        """Adds the new directions among the candidate rows; returns accepted row indices."""
        thresholds = self.tol.rank * (1.0 + np.abs(vectors).max(axis=1))
        start = self.size
        if start:
            basis = self.rows[:start]
            for _ in range(2):
                vectors = vectors - (vectors @ basis.conj().T) @ basis
        accepted = []
        for idx, vec in enumerate(vectors):
            fresh = self.rows[start:self.size]
            for _ in range(2 if len(fresh) else 0):
                vec = vec - (fresh.conj() @ vec) @ fresh
            norm = float(np.linalg.norm(vec))
            if norm > thresholds[idx]:
                self.rows[self.size] = vec / norm
                self.size += 1
                accepted.append(idx)
                if self.full:
                    break
        return accepted


def _closure(gens, tol, max_passes):
    k = common_dimension(gens)
    extended = list(gens) + [dagger(g) for g in gens]
    span = _SpanBuilder(k * k, tol)
    labels = []
    raw = []

    def absorb(candidates, candidate_labels):
        accepted = span.offer(np.stack([c.ravel() for c in candidates]))
        for idx in accepted:
            labels.append(candidate_labels[idx])
            raw.append(candidates[idx])
        return list(range(len(raw) - len(accepted), len(raw)))

    frontier = absorb([identity(k)] + extended, [()] + [(t,) for t in range(len(extended))])
    passes = 0
    while frontier and not span.full:
        passes += 1
        if passes > max_passes:
            raise ClosureError(f"closure did not stabilize within {max_passes} passes (dim {span.size})")
        candidates = [g @ raw[s] for s in frontier for g in extended]
        candidate_labels = [(t,) + labels[s] for s in frontier for t in range(len(extended))]
        frontier = absorb(candidates, candidate_labels)
        logger.debug(f"closure pass {passes}: dim {span.size} of {k * k}")
    basis = span.rows[:span.size].reshape(span.size, k, k)
    return AlgebraBasis(k, basis.copy(), tuple(labels))


def format_label(label, num_gens):
    """Renders a closure monomial as generator-index tokens, e.g. "g1 g2*"."""
    if not label:
        return "1"
    return " ".join(f"g{t + 1}" if t < num_gens else f"g{t - num_gens + 1}*" for t in label)


def parse_label(text, num_gens):
    if text.strip() == "1":
        return ()
    label = []
    for token in text.split():
        index = int(token.lstrip("g").rstrip("*")) - 1
        if not 0 <= index < num_gens:
            raise PreconditionError(f"certificate token {token!r} outside {num_gens} generators")
        label.append(index + num_gens if token.endswith("*") else index)
    return tuple(label)


def generated_algebra(gens, tol=DEFAULT_TOLERANCE, max_passes=MAX_CLOSURE_PASSES):
    """
    Orthonormal basis of the unital *-algebra generated by gens.

    Seeds with I and gens ∪ gens*, then multiplies each newly found monomial
    by every extended generator until a pass adds no direction.

    Args:
        gens (list): CMatrix generators of common dimension.
        tol (Tolerance): tol.rank decides new directions.
        max_passes (int): Pass cap.

    Returns:
        AlgebraBasis: The algebra, with discovery-order monomial labels.
    """
    return _closure(_as_generators(gens), tol, max_passes)


def _hermitian_parts(mats):
    parts = []
    for g in mats:
        for h in ((g + dagger(g)) / 2.0, (g - dagger(g)) / 2.0j):
            if np.abs(h).max() > 0.0:
                parts.append(h)
    return parts


def _generic_element(hermitians, seed):
    rng = np.random.default_rng(seed)

    def combination():
        return sum(c * h for c, h in zip(rng.standard_normal(len(hermitians)), hermitians))

    a, b, c = combination(), combination(), combination()
    return a + 0.5 * (b @ c + c @ b) + b @ a @ b


def _null_mask(r, size, tol):
    singular = np.zeros(size)
    s = scipy.linalg.svd(r, compute_uv=False)
    singular[:len(s)] = s
    return singular <= tol.rank * (1.0 + float(singular.max()))


def _commutant(mats, tol, seed=COMMUTANT_SAMPLE_SEED):
    k = common_dimension(mats)
    hermitians = _hermitian_parts(mats)
    if not hermitians:
        units = np.stack([unit_matrix(i, j, k) for i in range(1, k + 1) for j in range(1, k + 1)])
        return AlgebraBasis(k, units)
    # the commutant lives inside the block-diagonal algebra of a generic element
    generic = _generic_element(hermitians, seed)
    w, u = scipy.linalg.eigh((generic + dagger(generic)) / 2.0)
    gap = max(np.sqrt(tol.rank), 1e-12) * max(1.0, float(np.abs(w).max()))
    clusters = np.concatenate([[0], np.cumsum(np.diff(w) > gap)])
    rows, cols = np.nonzero(clusters[:, None] == clusters[None, :])
    size = len(rows)
    positions = np.arange(size)
    r = None
    for h in hermitians:
        hp = dagger(u) @ h @ u
        block = np.zeros((k, k, size), dtype=np.complex128)
        block[:, cols, positions] = hp[:, rows]
        block[rows, :, positions] -= hp[cols, :]
        stacked = block.reshape(k * k, size) if r is None else np.vstack([r, block.reshape(k * k, size)])
        r = np.linalg.qr(stacked, mode="r")
        if _null_mask(r, size, tol).sum() <= 1:
            break
    _, _, vh = scipy.linalg.svd(r)
    null = vh[_null_mask(r, size, tol)].conj()
    coords = np.zeros((len(null), k, k), dtype=np.complex128)
    coords[:, rows, cols] = null
    logger.debug(f"commutant: {len(set(clusters))} eigenvalue clusters, dim {len(null)}")
    return AlgebraBasis(k, u @ coords @ dagger(u))


def commutant(gens, tol=DEFAULT_TOLERANCE):
    return _commutant(_as_generators(gens), tol)


def commutant_and_center(gens, tol=DEFAULT_TOLERANCE):
    """
    Commutant of gens and center of the algebra they generate.

    The center is computed as the commutant of gens together with the
    commutant basis, since Z(A) = A' ∩ A''.

    Args:
        gens (list): CMatrix generators of common dimension.
        tol (Tolerance): tol.rank sets the nullspace threshold.

    Returns:
        tuple: (commutant, center) as AlgebraBasis values.
    """
    mats = _as_generators(gens)
    commutant = _commutant(mats, tol)
    center = _commutant(mats + list(commutant.basis), tol)
    return commutant, center


def is_surjective(gens, tol=DEFAULT_TOLERANCE, closure_max_dim=DEFAULT_CLOSURE_MAX_DIM):
    """
    Decides whether gens generate all of M_k.

    Up to closure_max_dim the closure engine runs and the k² spanning
    monomials are returned as certificate. Above it the commutant decides:
    a unital *-algebra with trivial commutant is M_k. That route records
    no certificate and says so in `route`; callers gate on `certified`.

    Args:
        gens (list): CMatrix generators of common dimension.
        tol (Tolerance): Rank tolerance.
        closure_max_dim (int): Largest k handled by closure.

    Returns:
        Surjectivity: (flag, certificate or None, route).
    """
    mats = _as_generators(gens)
    k = mats[0].shape[0]
    if k <= closure_max_dim:
        algebra = _closure(mats, tol, MAX_CLOSURE_PASSES)
        if algebra.dim == k * k:
            return Surjectivity(True, [format_label(label, len(mats)) for label in algebra.labels])
        return Surjectivity(False, None)
    flag = _commutant(mats, tol).dim == 1
    if flag:
        logger.warning(f"k={k} above closure dimension {closure_max_dim}: surjective by trivial commutant, no certificate")
    return Surjectivity(flag, None, "commutant")


def is_factor(gens, tol=DEFAULT_TOLERANCE):
    _, center = commutant_and_center(gens, tol)
    return center.dim == 1


def algebra_dimension(gens, tol=DEFAULT_TOLERANCE, closure_max_dim=DEFAULT_CLOSURE_MAX_DIM):
    """
    Dimension of the generated algebra, by closure or by double commutant.

    Args:
        gens (list): CMatrix generators.
        tol (Tolerance): Rank tolerance.
        closure_max_dim (int): Largest k handled by closure.

    Returns:
        int: Algebra dimension.
    """
    mats = _as_generators(gens)
    k = mats[0].shape[0]
    if k <= closure_max_dim:
        return _closure(mats, tol, MAX_CLOSURE_PASSES).dim
    commutant = _commutant(mats, tol)
    if commutant.dim == 1:
        return k * k
    return _commutant(list(commutant.basis), tol).dim


def certificate_is_basis(gens, certificate, tol=DEFAULT_TOLERANCE):
    """
    Checks that certificate monomials evaluated on gens still span M_k.

    Args:
        gens (list): CMatrix generators, possibly perturbed.
        certificate (list): Monomial strings from is_surjective.
        tol (Tolerance): Rank tolerance on the smallest singular value.

    Returns:
        bool: Whether the k² evaluations are linearly independent.
    """
    mats = _as_generators(gens)
    k = mats[0].shape[0]
    if certificate is None or len(certificate) != k * k:
        return False
    extended = mats + [dagger(g) for g in mats]
    rows = []
    for text in certificate:
        value = identity(k)
        for t in parse_label(text, len(mats)):
            value = value @ extended[t]
        rows.append(value.ravel())
    s = scipy.linalg.svd(np.stack(rows), compute_uv=False)
    return bool(s.min() > tol.rank * max(1.0, float(s.max())))


def membership_residual(x, commutant):
    """Largest commutator norm of x against a commutant basis; zero iff x lies in the algebra."""
    if commutant.dim == 0:
        return 0.0
    return max(operator_norm(x @ c - c @ x) for c in commutant.basis)


def corner_generation_check(k=5, q_rank=3, tol=DEFAULT_TOLERANCE):
    """
    A corner q M_k q plus a partial isometry from the complement into it.

    q = projection onto the first q_rank coordinates, v*v = 1 - q, vv* <= q.

    Args:
        k (int): Ambient dimension.
        q_rank (int): Rank of q, at least k - q_rank.
        tol (Tolerance): Rank tolerance.

    Returns:
        AlgebraBasis: The generated algebra (all of M_k).
    """
    if not k - q_rank <= q_rank < k:
        raise PreconditionError(f"need k - q_rank <= q_rank < k, got k={k}, q_rank={q_rank}")
    corner = [unit_matrix(i, j, k) for i in range(1, q_rank + 1) for j in range(1, q_rank + 1)]
    v = sum(unit_matrix(s + 1, q_rank + s + 1, k) for s in range(k - q_rank))
    return generated_algebra(corner + [v], tol)


def tensor_generation_check(n1=2, n2=3, tol=DEFAULT_TOLERANCE):
    """
    M_{n1} ⊗ 1 together with p ⊗ M_{n2}, p = E_11.

    Args:
        n1 (int): First factor size.
        n2 (int): Second factor size.
        tol (Tolerance): Rank tolerance.

    Returns:
        AlgebraBasis: The generated algebra (all of M_{n1 n2}).
    """
    first = [np.kron(unit_matrix(i, j, n1), identity(n2)) for i in range(1, n1 + 1) for j in range(1, n1 + 1)]
    second = [np.kron(unit_matrix(1, 1, n1), unit_matrix(a, b, n2))
              for a in range(1, n2 + 1) for b in range(1, n2 + 1)]
    return generated_algebra(first + second, tol)
