"""Representations of M_n * M_n as two matrix-unit systems, and the perturbation to a generating one.

A representation of dimension k carries two (n, n, k, k) arrays of matrix
units, ``e_units`` and ``f_units``; ``e_units[i - 1, j - 1]`` is the image of
e_ij. A representation is *standard* when k = n·d and e_ij = I_d ⊗ E_ij
exactly, so the row index of a k-vector is a·n + i with a in N = M_d.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from trace_lab.algebra import DEFAULT_CLOSURE_MAX_DIM, algebra_dimension, commutant, is_surjective, \
    membership_residual
from trace_lab.errors import (
    DiagonalMismatchError,
    DimensionMismatchError,
    IndexRangeError,
    InvalidRepresentationError,
    NoAdmissibleRankError,
    NotUnitaryError,
    PreconditionError,
    RankMismatchError,
    SpectrumAvoidanceError,
    UnsupportedDimensionError,
)
from trace_lab.freegroup import DEFAULT_MAX_TRIES, ApproxReport
from trace_lab.linalg import (
    DEFAULT_TOLERANCE,
    as_cmatrix,
    check_structure,
    cmatrix_from_dict,
    cmatrix_to_dict,
    cycle_matrix,
    dagger,
    derive_seed,
    haar_unitary,
    hermitian_exponential,
    identity,
    normalized_trace,
    operator_norm,
    random_hermitian,
    trace_norm,
    unit_matrix,
)
from trace_lab.utils import Gate, retry_until
from trace_lab.words import FAMILIES, MomentReport, StarMonomial, compare_moments, evaluate, monomial_ball, \
    moment_vector

logger = logging.getLogger(__name__)

MIN_PERTURBATION_N = 4
LAMBDA_POINTS = 360
LAMBDA_MARGIN = 1e-6
MEMBERSHIP_TOL = 1e-7
MOMENT_SLOPE = 10.0
DISTANCE_FACTOR = 4.0
SPECTRUM_WORD = StarMonomial((("e", 1, 4), ("f", 4, 1), ("e", 1, 1)))


def _units_array(units, n):
    arr = np.asarray(units, dtype=np.complex128)
    if arr.ndim != 4 or arr.shape[:2] != (n, n) or arr.shape[2] != arr.shape[3]:
        raise DimensionMismatchError(f"expected an ({n}, {n}, k, k) unit array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidRepresentationError("matrix units have non-finite entries")
    return arr


def _from_first_row(row):
    """x_ij = x_1i* x_1j from the first row of a matrix-unit system."""
    row = np.asarray(row)
    return np.einsum("iba,jbc->ijac", row.conj(), row)


def _standard_units(n, d):
    return np.stack([np.stack([np.kron(identity(d), unit_matrix(i, j, n)) for j in range(1, n + 1)])
                     for i in range(1, n + 1)])


def _family_residual(units):
    n, k = units.shape[0], units.shape[2]
    worst = float(np.linalg.norm(sum(units[i, i] for i in range(n)) - identity(k)))
    for i, j in itertools.product(range(n), repeat=2):
        worst = max(worst, float(np.linalg.norm(dagger(units[i, j]) - units[j, i])))
        for l, m in itertools.product(range(n), repeat=2):
            expected = units[i, m] if j == l else 0.0
            worst = max(worst, float(np.linalg.norm(units[i, j] @ units[l, m] - expected)))
    return worst


@dataclass(frozen=True)
class MnMnRep:
    """A unital representation of M_n * M_n on C^k."""

    n: int
    e_units: np.ndarray
    f_units: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise IndexRangeError(f"matrix-unit size {self.n} must be positive")
        e = _units_array(self.e_units, self.n)
        f = _units_array(self.f_units, self.n)
        if e.shape != f.shape:
            raise DimensionMismatchError(f"e and f systems differ in shape: {e.shape} vs {f.shape}")
        if e.shape[2] % self.n:
            raise DimensionMismatchError(f"ambient dimension {e.shape[2]} is not a multiple of n={self.n}")
        object.__setattr__(self, "e_units", e)
        object.__setattr__(self, "f_units", f)

    @property
    def k(self):
        return int(self.e_units.shape[2])

    @property
    def dim(self):
        return self.k

    @property
    def d(self):
        return self.k // self.n

    def family(self, name):
        if name not in FAMILIES:
            raise IndexRangeError(f"unknown family {name!r}")
        return self.e_units if name == "e" else self.f_units

    def letter(self, symbol):
        family, i, j = symbol
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexRangeError(f"unit ({i},{j}) outside 1..{self.n}")
        return self.family(family)[i - 1, j - 1]

    def unit(self):
        return identity(self.k)

    def all_units(self):
        return [self.e_units[i, j] for i in range(self.n) for j in range(self.n)] + \
               [self.f_units[i, j] for i in range(self.n) for j in range(self.n)]

    def generators(self):
        return [(family, 1, j) for family in FAMILIES for j in range(2, self.n + 1)]

    def residuals(self):
        return {"e": _family_residual(self.e_units), "f": _family_residual(self.f_units)}

    def validate(self, tol=DEFAULT_TOLERANCE):
        worst = max(self.residuals().values())
        if worst > tol.structural * self.k:
            raise InvalidRepresentationError(f"matrix-unit residual {worst:.3e} above {tol.structural * self.k:.3e}")
        return worst

    def to_dict(self):
        return {
            "n": self.n,
            "k": self.k,
            "e": [[cmatrix_to_dict(x) for x in row] for row in self.e_units],
            "f": [[cmatrix_to_dict(x) for x in row] for row in self.f_units],
        }

    @classmethod
    def from_dict(cls, obj):
        n, k = int(obj["n"]), int(obj["k"])
        e = np.array([[cmatrix_from_dict(x) for x in row] for row in obj["e"]])
        f = np.array([[cmatrix_from_dict(x) for x in row] for row in obj["f"]])
        rep = cls(n, e, f)
        if rep.k != k:
            raise DimensionMismatchError(f"declared k={k} but units have dimension {rep.k}")
        return rep


@dataclass(frozen=True)
class CornerRep:
    """A non-unital representation: matrix units summing to a projection rather than to I."""

    n: int
    e_units: np.ndarray
    f_units: np.ndarray
    unit_projection: np.ndarray

    @property
    def dim(self):
        return int(self.unit_projection.shape[0])

    def letter(self, symbol):
        family, i, j = symbol
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexRangeError(f"unit ({i},{j}) outside 1..{self.n}")
        return (self.e_units if family == "e" else self.f_units)[i - 1, j - 1]

    def unit(self):
        return self.unit_projection


@dataclass(frozen=True)
class AmplificationData:
    """N = M_d as the corner q·M_{d+r}·q, with v*v = p = 1 - q and vv* = r_embedded <= q."""

    d: int
    r_rank: int
    total: int
    q: np.ndarray
    p: np.ndarray
    r_embedded: np.ndarray
    v: np.ndarray

    def to_dict(self):
        return {"d": self.d, "r_rank": self.r_rank, "total": self.total,
                "trace_p": normalized_trace(self.p).real}


@dataclass(frozen=True)
class PerturbationBundle:
    rep1: MnMnRep
    rep2: MnMnRep
    base: MnMnRep
    embedded: CornerRep
    perturbed: MnMnRep
    eps: float
    lambda1: complex
    lambda2: complex
    dims: tuple
    a_spectrum: tuple
    amplification: AmplificationData

    def to_dict(self):
        n, d1, d2, r_rank, k_tilde = self.dims
        return {
            "eps": self.eps,
            "lambda1": [self.lambda1.real, self.lambda1.imag],
            "lambda2": [self.lambda2.real, self.lambda2.imag],
            "dims": {"n": n, "d1": d1, "d2": d2, "r_rank": r_rank, "k_tilde": k_tilde},
            "a_spectrum_size": len(self.a_spectrum),
            "amplification": self.amplification.to_dict(),
        }


@dataclass(frozen=True)
class PerturbationReport:
    gates: list
    unit_residual: float
    trace_distances: dict
    surjective: bool
    generated_dim: int
    moment_report: MomentReport
    claim_residuals: dict = field(default_factory=dict)
    membership_residuals: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(gate.passed for gate in self.gates)

    def to_dict(self):
        return {
            "unit_residual": self.unit_residual,
            "trace_distances": self.trace_distances,
            "surjective": self.surjective,
            "generated_dim": self.generated_dim,
            "moment_sup_delta": self.moment_report.sup_delta,
            "claim_residuals": self.claim_residuals,
            "membership_residuals": self.membership_residuals,
        }


def mn_rep_from_unitaries(n, us):
    """
    The representation e_ij = I_d ⊗ E_ij, f_1j = u_j ⊗ E_1j with u_1 = I_d.

    Args:
        n (int): Matrix-unit size, n >= 2.
        us (list): n - 1 unitaries u_2..u_n of common dimension d.

    Returns:
        MnMnRep: Standard representation of dimension n·d.
    """
    if n < 2:
        raise IndexRangeError(f"n must be at least 2, got {n}")
    if len(us) != n - 1:
        raise PreconditionError(f"expected {n - 1} unitaries for n={n}, got {len(us)}")
    mats = [as_cmatrix(u) for u in us]
    d = mats[0].shape[0]
    for j, u in enumerate(mats, start=2):
        if u.shape[0] != d:
            raise DimensionMismatchError(f"u_{j} has dimension {u.shape[0]}, expected {d}")
        if not check_structure(u, "unitary"):
            raise NotUnitaryError(f"u_{j} is not unitary")
    first = np.stack([np.kron(u, unit_matrix(1, j, n)) for j, u in enumerate([identity(d)] + mats, start=1)])
    return MnMnRep(n, _standard_units(n, d), _from_first_row(first))


def random_mn_rep(n, d, seed):
    """mn_rep_from_unitaries with Haar unitaries u_j seeded by derive_seed(seed, j)."""
    return mn_rep_from_unitaries(n, [haar_unitary(d, derive_seed(seed, j)) for j in range(2, n + 1)])


def is_standard(rep, tol=DEFAULT_TOLERANCE):
    expected = _standard_units(rep.n, rep.d)
    return bool(np.max(np.abs(rep.e_units - expected)) <= tol.structural * rep.k)


def conjugate_units(rep, w_e, w_f):
    """Conjugates the e-system by w_e and the f-system by w_f: x -> w x w*."""
    e = np.einsum("ab,ijbc,dc->ijad", w_e, rep.e_units, w_e.conj())
    f = np.einsum("ab,ijbc,dc->ijad", w_f, rep.f_units, w_f.conj())
    return MnMnRep(rep.n, e, f)


def standardize(rep, tol=DEFAULT_TOLERANCE):
    """
    Conjugates a representation so its e-units become exactly I_d ⊗ E_ij.

    Args:
        rep (MnMnRep): Valid representation.
        tol (Tolerance): Structural tolerance.

    Returns:
        tuple: (standard MnMnRep, unitary W with result = W* rep W).
    """
    n, k, d = rep.n, rep.k, rep.d
    w, vectors = scipy.linalg.eigh(rep.e_units[0, 0])
    basis = vectors[:, w > 0.5]
    if basis.shape[1] != d:
        raise RankMismatchError(f"e_11 has rank {basis.shape[1]}, expected k/n = {d}")
    # column a·n + i is e_i1 applied to the a-th basis vector of range(e_11)
    columns = np.einsum("ikl,la->kai", rep.e_units[:, 0], basis)
    conjugator = columns.reshape(k, k)
    out = conjugate_units(rep, dagger(conjugator), dagger(conjugator))
    expected = _standard_units(n, d)
    if np.max(np.abs(out.e_units - expected)) > max(tol.structural * k, 1e-8):
        raise InvalidRepresentationError("e-system did not reach standard form; input is not a matrix-unit system")
    return MnMnRep(n, expected, out.f_units), conjugator


def extract_unitaries(rep, tol=DEFAULT_TOLERANCE):
    """
    Reads u_2..u_n back from f_1j = u_j ⊗ E_1j.

    Args:
        rep (MnMnRep): Standard representation with f_ii = e_ii.
        tol (Tolerance): Structural tolerance.

    Returns:
        list: n - 1 unitaries of dimension d.
    """
    if not is_standard(rep, tol):
        raise InvalidRepresentationError("extract_unitaries needs a standardized representation")
    for i in range(rep.n):
        gap = operator_norm(rep.e_units[i, i] - rep.f_units[i, i])
        if gap > tol.structural * rep.k:
            raise DiagonalMismatchError(f"e_{i + 1}{i + 1} and f_{i + 1}{i + 1} differ by {gap:.3e}")
    d, n = rep.d, rep.n
    us = []
    for j in range(1, n):
        u = rep.f_units[0, j].reshape(d, n, d, n)[:, 0, :, j].copy()
        if not check_structure(u, "unitary", tol):
            raise NotUnitaryError(f"block u_{j + 1} is not unitary")
        us.append(u)
    return us


def amplify_mn(rep, m):
    """kron(I_m, ·) on both systems; preserves every moment and the standard form."""
    if m < 1:
        raise PreconditionError(f"amplification factor must be positive, got {m}")
    eye = identity(m)
    n, k = rep.n, rep.k
    e = np.einsum("ab,ijcd->ijacbd", eye, rep.e_units).reshape(n, n, m * k, m * k)
    f = np.einsum("ab,ijcd->ijacbd", eye, rep.f_units).reshape(n, n, m * k, m * k)
    return MnMnRep(n, e, f)


def _blocks(units, rep):
    return units.reshape(rep.n, rep.n, rep.d, rep.n, rep.d, rep.n)


def joint_rep(rep1, rep2):
    """
    π(x) = π1(x) ⊗ 1 ⊗ E11 + π2(x) ⊗ 1 ⊗ E22, ordered (M_2, N1, N2, M_n).

    The trace of π is the midpoint of the two input traces on every monomial.

    Args:
        rep1 (MnMnRep): Standard representation, dimension n·d1.
        rep2 (MnMnRep): Standard representation, dimension n·d2.

    Returns:
        MnMnRep: Standard representation of dimension 2·n·d1·d2.
    """
    if rep1.n != rep2.n:
        raise DimensionMismatchError(f"n differs: {rep1.n} vs {rep2.n}")
    n, d1, d2 = rep1.n, rep1.d, rep2.d
    size = d1 * d2 * n
    e11, e22 = unit_matrix(1, 1, 2), unit_matrix(2, 2, 2)

    def lift(x1, x2):
        first = np.einsum("pqaiAI,bB->pqabiABI", _blocks(x1, rep1), identity(d2)).reshape(n, n, size, size)
        second = np.einsum("aA,pqbiBI->pqabiABI", identity(d1), _blocks(x2, rep2)).reshape(n, n, size, size)
        return np.einsum("cC,pqxy->pqcxCy", e11, first).reshape(n, n, 2 * size, 2 * size) + \
            np.einsum("cC,pqxy->pqcxCy", e22, second).reshape(n, n, 2 * size, 2 * size)

    return MnMnRep(n, lift(rep1.e_units, rep2.e_units), lift(rep1.f_units, rep2.f_units))


def corner_amplification(d, r_rank):
    """
    Enlarges M_d to M_{d+r} with N = q M_{d+r} q and a partial isometry from p = 1 - q onto r <= q.

    Args:
        d (int): Corner dimension.
        r_rank (int): Rank of r and p, 1 <= r_rank < d.

    Returns:
        AmplificationData: Exact 0/1 matrices.
    """
    if not 1 <= r_rank < d:
        raise NoAdmissibleRankError(f"rank {r_rank} outside 1..{d - 1}")
    total = d + r_rank
    q = np.diag(np.r_[np.ones(d), np.zeros(r_rank)]).astype(np.complex128)
    p = identity(total) - q
    r_embedded = np.diag(np.r_[np.ones(r_rank), np.zeros(total - r_rank)]).astype(np.complex128)
    v = sum(unit_matrix(s + 1, d + s + 1, total) for s in range(r_rank))
    return AmplificationData(d, r_rank, total, q, p, r_embedded, v)


def choose_lambdas(spectra, points=LAMBDA_POINTS, margin=LAMBDA_MARGIN):
    """
    Picks two unimodular numbers away from the given spectra.

    Scans equally spaced points on the circle, keeps those at least margin
    from every eigenvalue, and takes the admissible pair of largest mutual
    distance; ties go to the larger spectral margin, then to scan order.

    Args:
        spectra (list): Arrays of eigenvalues to avoid.
        points (int): Grid size.
        margin (float): Minimal distance to the spectra.

    Returns:
        tuple: (lambda1, lambda2) as complex numbers.
    """
    grid = np.exp(2j * np.pi * np.arange(points) / points)
    eigenvalues = np.concatenate([np.ravel(s) for s in spectra]) if len(spectra) else np.zeros(0)
    if eigenvalues.size:
        clearance = np.abs(grid[:, None] - eigenvalues[None, :]).min(axis=1)
    else:
        clearance = np.full(points, np.inf)
    admissible = np.flatnonzero(clearance >= margin)
    if len(admissible) < 2:
        raise SpectrumAvoidanceError(f"only {len(admissible)} grid points avoid the spectrum")
    best, best_key = None, None
    for a, b in itertools.combinations(admissible, 2):
        key = (round(float(abs(grid[a] - grid[b])), 9), round(float(min(clearance[a], clearance[b])), 9))
        if best_key is None or key > best_key:
            best, best_key = (a, b), key
    return complex(grid[best[0]]), complex(grid[best[1]])


def _prepare_pair(rep1, rep2, tol):
    std1, _ = standardize(rep1, tol)
    std2, _ = standardize(rep2, tol)
    if std1.d != std2.d:
        target = std1.d * std2.d // math.gcd(std1.d, std2.d)
        logger.info(f"amplifying corner dimensions {std1.d}, {std2.d} to {target}")
        std1 = amplify_mn(std1, target // std1.d)
        std2 = amplify_mn(std2, target // std2.d)
    return std1, std2


def _admissible_rank(d, eps, r_rank):
    if r_rank is None:
        r_rank = 1
    if not 1 <= r_rank < d or r_rank / d >= eps:
        raise NoAdmissibleRankError(f"no rank r with 1 <= r < d={d} and r/d < eps={eps} (tried r={r_rank})")
    return r_rank


class _Ambient:
    """Index bookkeeping for M̃ = Ñ1 ⊗ Ñ2 ⊗ M_2 ⊗ M_n, factors in that order."""

    def __init__(self, n, d, amp):
        self.n, self.d, self.amp = n, d, amp
        self.D = amp.total
        self.size = 2 * self.D * self.D
        self.k = self.size * n
        self.E = [[unit_matrix(i, j, 2) for j in (1, 2)] for i in (1, 2)]

    def pad(self, x):
        out = np.zeros((self.D, self.n, self.D, self.n), dtype=np.complex128)
        out[:self.d, :, :self.d, :] = x.reshape(self.d, self.n, self.d, self.n)
        return out

    def sigma1(self, x, other):
        """x ⊗ other ⊗ E11 for x acting on Ñ1 ⊗ M_n."""
        return np.einsum("aiAI,bB,cC->abciABCI", x, other, self.E[0][0]).reshape(self.k, self.k)

    def sigma2(self, other, x):
        return np.einsum("aA,biBI,cC->abciABCI", other, x, self.E[1][1]).reshape(self.k, self.k)

    def local(self, x1, x2):
        """σ1(x1) + σ2(x2) as an element of Ñ ⊗ M_2."""
        eye = identity(self.D)
        return np.kron(np.kron(x1, eye), self.E[0][0]) + np.kron(np.kron(eye, x2), self.E[1][1])

    def unit(self, i, j):
        return unit_matrix(i, j, self.n)


def perturbed_rep(rep1, rep2, eps, r_rank=None, tol=DEFAULT_TOLERANCE):
    """
    Builds a representation of M_n * M_n generating M̃ and close to the midpoint representation.

    The two inputs are standardized and brought to one corner dimension d.
    Each N_i = M_d is enlarged to Ñ_i = M_{d+r}; f-units gain E_1j ⊗ p_i,
    e_12 swaps p_i with r_i through v_i, e_13 flips the two M_2 blocks on
    p = 1 - 1_N, and e_14 marks σ_i(p_i) with the phases λ_i.

    Args:
        rep1 (MnMnRep): First representation.
        rep2 (MnMnRep): Second representation, same n >= 4.
        eps (float): Closeness parameter; r/d must be below it.
        r_rank (int): Rank of r_i; defaults to 1.
        tol (Tolerance): Tolerances.

    Returns:
        PerturbationBundle: The perturbed representation with its ingredients.
    """
    if rep1.n != rep2.n:
        raise DimensionMismatchError(f"n differs: {rep1.n} vs {rep2.n}")
    n = rep1.n
    if n < MIN_PERTURBATION_N:
        raise UnsupportedDimensionError(f"the perturbation needs n >= {MIN_PERTURBATION_N}, got n={n}")
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    std1, std2 = _prepare_pair(rep1, rep2, tol)
    d = std1.d
    r_rank = _admissible_rank(d, eps, r_rank)
    amp = corner_amplification(d, r_rank)
    spectra = [scipy.linalg.eigvals(evaluate(SPECTRUM_WORD, rep)) for rep in (std1, std2)]
    lambda1, lambda2 = choose_lambdas(spectra)
    logger.info(f"lambda1={lambda1:.6f}, lambda2={lambda2:.6f}, d={d}, r={r_rank}")

    amb = _Ambient(n, d, amp)
    q, p, D = amp.q, amp.p, amb.D
    eye_total = identity(D)

    def embed(x1, x2, other):
        return amb.sigma1(amb.pad(x1), other) + amb.sigma2(other, amb.pad(x2))

    embedded_e = np.array([[embed(std1.e_units[i, j], std2.e_units[i, j], q) for j in range(n)] for i in range(n)])
    embedded_f = np.array([[embed(std1.f_units[i, j], std2.f_units[i, j], q) for j in range(n)] for i in range(n)])
    embedded = CornerRep(n, embedded_e, embedded_f, np.kron(np.kron(np.kron(q, q), identity(2)), identity(n)))

    f_first = np.stack([
        np.kron(amb.local(p, p), amb.unit(1, j)) + embed(std1.f_units[0, j - 1], std2.f_units[0, j - 1], eye_total)
        for j in range(1, n + 1)
    ])

    swap = identity(D) - p - amp.r_embedded + amp.v + dagger(amp.v)
    inner = identity(D * D) - np.kron(q, q)
    w = [identity(amb.size) for _ in range(n)]
    w[1] = amb.local(swap, swap)
    w[2] = np.kron(identity(D * D) - inner, identity(2)) + np.kron(inner, cycle_matrix(2))
    w[3] = amb.local(q + lambda1 * p, q + lambda2 * p)
    e_first = np.stack([np.kron(w[j - 1], amb.unit(1, j)) for j in range(1, n + 1)])

    perturbed = MnMnRep(n, _from_first_row(e_first), _from_first_row(f_first))
    perturbed.validate(tol)
    a_spectrum = tuple(complex(z) for z in np.concatenate(spectra))
    return PerturbationBundle(
        rep1=std1, rep2=std2, base=joint_rep(std1, std2), embedded=embedded, perturbed=perturbed,
        eps=float(eps), lambda1=lambda1, lambda2=lambda2, dims=(n, d, d, r_rank, amb.k),
        a_spectrum=a_spectrum, amplification=amp,
    )


def _kernel_projection(x, tol):
    w, vectors = scipy.linalg.eigh(dagger(x) @ x)
    kernel = vectors[:, w <= np.sqrt(tol.rank)]
    return kernel @ dagger(kernel)


def claim_targets(bundle):
    """Elements whose membership in the generated algebra forces surjectivity, built from their tensor form."""
    n, d, _, _, _ = bundle.dims
    amb = _Ambient(n, d, bundle.amplification)
    amp = bundle.amplification
    zero, D = np.zeros((amb.D, amb.D), dtype=np.complex128), amb.D
    sigma = {1: lambda x: amb.local(x, zero), 2: lambda x: amb.local(zero, x)}
    big_p = identity(D * D) - np.kron(amp.q, amp.q)
    targets = {}
    for i, j in itertools.product(range(1, n + 1), repeat=2):
        eij = amb.unit(i, j)
        targets[f"E{i}{j}.1"] = np.kron(identity(amb.size), eij)
        for s in (1, 2):
            targets[f"E{i}{j}.sigma{s}(p{s})"] = np.kron(sigma[s](amp.p), eij)
            targets[f"E{i}{j}.sigma{s}(v{s})"] = np.kron(sigma[s](amp.v), eij)
    for s in (1, 2):
        targets[f"E12.sigma{s}(r{s})"] = np.kron(sigma[s](amp.r_embedded), amb.unit(1, 2))
    targets["E11.p.E11"] = np.kron(np.kron(big_p, amb.E[0][0]), amb.unit(1, 1))
    targets["E11.p.E22"] = np.kron(np.kron(big_p, amb.E[1][1]), amb.unit(1, 1))
    return targets


def claim_derivations(bundle, tol=DEFAULT_TOLERANCE):
    """
    Rebuilds the claim elements from products of perturbed images only.

    Spectral projections of π̃(e14 f41 e11) at λ1, λ2 give E11 ⊗ σ_s(p_s);
    from there the standard units, σ_s(v_s), σ_s(r_s) and E11 ⊗ p ⊗ E_cc
    follow by finitely many products and sums.

    Args:
        bundle (PerturbationBundle): Output of perturbed_rep.
        tol (Tolerance): tol.rank sets the kernel threshold.

    Returns:
        dict: Operator-norm residual of each derived element against its target.
    """
    e, f = bundle.perturbed.e_units, bundle.perturbed.f_units
    n = bundle.perturbed.n
    image = evaluate(SPECTRUM_WORD, bundle.perturbed)
    eye = identity(bundle.perturbed.k)
    P = {s: _kernel_projection(image - lam * eye, tol) for s, lam in ((1, bundle.lambda1), (2, bundle.lambda2))}
    S = {s: {(i, j): f[i, 0] @ P[s] @ f[0, j] for i in range(n) for j in range(n)} for s in (1, 2)}

    derived = {}
    for (i, j) in itertools.product(range(n), repeat=2):
        for s in (1, 2):
            derived[f"E{i + 1}{j + 1}.sigma{s}(p{s})"] = S[s][(i, j)]

    v = {s: e[0, 1] @ S[s][(1, 1)] for s in (1, 2)}
    v_adj = {s: S[s][(0, 0)] @ e[0, 1] for s in (1, 2)}
    r = {s: e[0, 1] @ S[s][(1, 0)] @ e[0, 1] for s in (1, 2)}
    std = {0: e[0, 0]}
    std[1] = e[0, 1] - sum(v[s] + v_adj[s] - S[s][(0, 1)] - r[s] for s in (1, 2))

    x2 = e[0, 2] @ S[2][(2, 2)] @ dagger(e[0, 2])
    x1 = e[0, 2] @ S[1][(2, 2)] @ dagger(e[0, 2])
    both = x2 @ S[1][(0, 0)]
    both_alt = x1 @ S[2][(0, 0)]
    p_first = x2 + S[1][(0, 0)] - both
    p_second = x1 + S[2][(0, 0)] - both_alt
    flipped = (p_first + p_second) @ e[0, 2]
    crossed = e[0, 2] @ (S[1][(2, 0)] + S[2][(2, 0)]) @ e[0, 2]
    corner = (both + both_alt) @ f[0, 2]
    p13 = S[1][(0, 2)] + S[2][(0, 2)] + crossed - corner
    std[2] = e[0, 2] + p13 - flipped

    if n > 3:
        std[3] = e[0, 3] + (1 - bundle.lambda1) * S[1][(0, 3)] + (1 - bundle.lambda2) * S[2][(0, 3)]
    for j in range(4, n):
        std[j] = e[0, j]

    for i, j in itertools.product(range(n), repeat=2):
        unit_ij = dagger(std[i]) @ std[j]
        derived[f"E{i + 1}{j + 1}.1"] = unit_ij
    for i, j in itertools.product(range(n), repeat=2):
        for s in (1, 2):
            derived[f"E{i + 1}{j + 1}.sigma{s}(v{s})"] = dagger(std[i]) @ v[s] @ dagger(std[1]) @ std[j]
    for s in (1, 2):
        derived[f"E12.sigma{s}(r{s})"] = r[s]
    derived["E11.p.E11"] = p_first
    derived["E11.p.E22"] = p_second

    targets = claim_targets(bundle)
    return {name: operator_norm(derived[name] - targets[name]) for name in sorted(targets)}


def _symbol_name(symbol):
    return ".".join(str(part) for part in symbol)


def generator_distances(bundle):
    """Trace-norm distance between perturbed and embedded images of each generator e_1j, f_1j."""
    rep = bundle.perturbed
    return {_symbol_name(s): trace_norm(rep.letter(s) - bundle.embedded.letter(s)) for s in rep.generators()}


def verify_perturbation(bundle, radius=3, diagnostics=False, tol=DEFAULT_TOLERANCE,
                        closure_max_dim=DEFAULT_CLOSURE_MAX_DIM, membership_tol=MEMBERSHIP_TOL):
    """
    Runs the verification battery on a perturbation bundle.

    Args:
        bundle (PerturbationBundle): Output of perturbed_rep.
        radius (int): Monomial length of the moment comparison.
        diagnostics (bool): Also derive the claim elements and report their commutant residuals.
        tol (Tolerance): Tolerances.
        closure_max_dim (int): Largest dimension decided by closure.
        membership_tol (float): Threshold of the claim residuals.

    Returns:
        PerturbationReport: Gates and measured values; failures are reported, not raised.
    """
    rep = bundle.perturbed
    k = rep.k
    gates = []
    residual = max(rep.residuals().values())
    gates.append(Gate.at_most("units_valid", residual, tol.structural * k))

    distances = generator_distances(bundle)
    for name, value in distances.items():
        gates.append(Gate.at_most(f"trace_distance[{name}]", value, DISTANCE_FACTOR * bundle.eps))

    units = rep.all_units()
    verdict = is_surjective(units, tol, closure_max_dim)
    generated_dim = k * k if verdict.flag else algebra_dimension(units, tol, closure_max_dim)
    gates.append(Gate.check("generates_ambient", verdict.flag))
    logger.info(f"perturbed units generate dimension {generated_dim} of {k * k}")

    moments = compare_moments(rep, bundle.embedded, monomial_ball(rep.n, radius), rep.generators(),
                              normalize_b=True)
    gates.append(Gate.at_most("moment_sup_delta", moments.sup_delta, MOMENT_SLOPE * radius * bundle.eps))

    claims, memberships = {}, {}
    if diagnostics:
        claims = claim_derivations(bundle, tol)
        for name, value in claims.items():
            gates.append(Gate.at_most(f"claim[{name}]", value, membership_tol))
        comm = commutant(units, tol)
        # informative: once the units generate, the commutant is scalar and every residual vanishes
        memberships = {name: membership_residual(x, comm) for name, x in sorted(claim_targets(bundle).items())}

    return PerturbationReport(gates=gates, unit_residual=residual, trace_distances=distances,
                              surjective=verdict.flag, generated_dim=int(generated_dim), moment_report=moments,
                              claim_residuals=claims, membership_residuals=memberships)


def perturb_mn_to_surjective(rep, eps, seed, max_tries=DEFAULT_MAX_TRIES, tol=DEFAULT_TOLERANCE,
                             closure_max_dim=DEFAULT_CLOSURE_MAX_DIM):
    """
    Conjugates each unit system by exp(i·eps/2·H) until the units generate M_k.

    Every unit moves by at most eps in operator norm.

    Args:
        rep (MnMnRep): Starting representation.
        eps (float): Per-unit budget, nonnegative.
        seed (int): Base seed; try t uses derive_seed(seed, t, 0) and derive_seed(seed, t, 1).
        max_tries (int): Attempt cap.
        tol (Tolerance): Rank tolerance of the surjectivity test.
        closure_max_dim (int): Largest k decided by closure.

    Returns:
        tuple: (MnMnRep, ApproxReport); surjective=False when tries ran out.
    """
    if eps < 0:
        raise PreconditionError(f"eps must be nonnegative, got {eps}")
    attempts = itertools.count(1)

    def candidate():
        attempt = next(attempts)
        w_e = hermitian_exponential(random_hermitian(rep.k, derive_seed(seed, attempt, 0)), eps / 2.0)
        w_f = hermitian_exponential(random_hermitian(rep.k, derive_seed(seed, attempt, 1)), eps / 2.0)
        out = conjugate_units(rep, w_e, w_f)
        return attempt, out, is_surjective(out.all_units(), tol, closure_max_dim)

    attempt, out, verdict = retry_until(candidate, lambda result: result[2].flag, max_tries)
    distance = max(operator_norm(a - b) for a, b in zip(out.all_units(), rep.all_units()))
    if verdict.flag:
        logger.info(f"units generate M_{rep.k} after {attempt} tries at eps={eps}")
    else:
        logger.warning(f"no generating perturbation in {attempt} tries at eps={eps}")
    report = ApproxReport(eps=float(eps), achieved_generator_distance=distance, surjective=verdict.flag,
                          tries_used=attempt, seed=int(seed), certificate=verdict.certificate,
                          certificate_route=verdict.route)
    return out, report


def approx_by_amplification(rep, factor, eps, radius=3, seed=0, max_tries=DEFAULT_MAX_TRIES,
                            tol=DEFAULT_TOLERANCE, closure_max_dim=DEFAULT_CLOSURE_MAX_DIM, words=None):
    """
    Approximates the trace of rep by a generating representation of dimension factor·k.

    Args:
        rep (MnMnRep): Representation whose trace is approximated.
        factor (int): Amplification factor, >= 1.
        eps (float): Per-unit budget.
        radius (int): Monomial length of the moment report.
        seed (int): Base seed.
        max_tries (int): Attempt cap.
        tol (Tolerance): Tolerances.
        closure_max_dim (int): Largest k decided by closure.
        words (list): StarMonomial values to report on instead of the radius ball.

    Returns:
        tuple: (MnMnRep, ApproxReport with moment_report against rep).
    """
    amplified = amplify_mn(rep, factor)
    out, report = perturb_mn_to_surjective(amplified, eps, seed, max_tries, tol, closure_max_dim)
    words = monomial_ball(rep.n, radius) if words is None else list(words)
    distances = [trace_norm(out.letter(s) - amplified.letter(s)) for s in rep.generators()]
    moments = MomentReport.from_values(words, moment_vector(out, words), moment_vector(rep, words), distances)
    return out, replace(report, moment_report=moments)
