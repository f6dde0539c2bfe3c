"""Finite-dimensional unitary representations of free groups and midpoint approximation."""
import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import reduce
from typing import Optional

from trace_lab.algebra import DEFAULT_CLOSURE_MAX_DIM, is_factor, is_surjective
from trace_lab.errors import DimensionMismatchError, NotUnitaryError, PreconditionError
from trace_lab.linalg import (
    DEFAULT_TOLERANCE,
    as_cmatrix,
    check_structure,
    cmatrix_from_dict,
    cmatrix_to_dict,
    common_dimension,
    dagger,
    derive_seed,
    direct_sum,
    haar_unitary,
    identity,
    operator_norm,
    perturb_unitary,
    trace_norm,
)
from trace_lab.utils import retry_until
from trace_lab.words import MomentReport, ball, moment_vector

logger = logging.getLogger(__name__)

DEFAULT_MAX_TRIES = 32
DEFAULT_GROUP_RADIUS = 4


@dataclass(frozen=True)
class UnitaryTuple:
    """A point of Hom(C*(F_d), M_k): one unitary per free generator."""

    unitaries: tuple

    def __post_init__(self):
        mats = tuple(as_cmatrix(u) for u in self.unitaries)
        common_dimension(list(mats))
        for j, u in enumerate(mats):
            if not check_structure(u, "unitary", DEFAULT_TOLERANCE):
                raise NotUnitaryError(f"generator {j + 1} is not unitary")
        object.__setattr__(self, "unitaries", mats)

    @property
    def d(self):
        return len(self.unitaries)

    @property
    def k(self):
        return self.unitaries[0].shape[0]

    @property
    def dim(self):
        return self.k

    def letter(self, symbol):
        j, s = symbol
        if not 1 <= j <= self.d:
            raise PreconditionError(f"generator {j} outside 1..{self.d}")
        u = self.unitaries[j - 1]
        return u if s == 1 else dagger(u)

    def unit(self):
        return identity(self.k)

    @classmethod
    def haar(cls, d, k, seed):
        return cls(tuple(haar_unitary(k, derive_seed(seed, j)) for j in range(d)))

    @classmethod
    def trivial(cls, d, k):
        return cls(tuple(identity(k) for _ in range(d)))

    def to_dict(self):
        return {"d": self.d, "k": self.k, "unitaries": [cmatrix_to_dict(u) for u in self.unitaries]}

    @classmethod
    def from_dict(cls, obj):
        rep = cls(tuple(cmatrix_from_dict(u) for u in obj["unitaries"]))
        if rep.d != int(obj["d"]) or rep.k != int(obj["k"]):
            raise DimensionMismatchError(f"declared d={obj['d']}, k={obj['k']} but read d={rep.d}, k={rep.k}")
        return rep


@dataclass(frozen=True)
class ApproxReport:
    """Outcome of a surjective approximation. `certified` is False when surjectivity came from the commutant route."""

    eps: float
    achieved_generator_distance: float
    surjective: bool
    tries_used: int
    seed: int
    certificate: Optional[list] = None
    certificate_route: str = "closure"
    moment_report: Optional[MomentReport] = None

    @property
    def certified(self):
        return self.certificate is not None

    def to_dict(self):
        return {
            "eps": self.eps,
            "achieved_generator_distance": self.achieved_generator_distance,
            "surjective": self.surjective,
            "tries_used": self.tries_used,
            "seed": self.seed,
            "certificate_size": len(self.certificate) if self.certificate else 0,
            "certificate": self.certificate,
            "certificate_route": self.certificate_route,
            "certified": self.certified,
            "moment_report": self.moment_report.to_dict() if self.moment_report else None,
        }


def _require_same_d(reps):
    if len({rep.d for rep in reps}) != 1:
        raise DimensionMismatchError(f"representations of different rank: {[rep.d for rep in reps]}")


def mix_reps(reps, multiplicities):
    """
    Generator-wise direct sum with multiplicities.

    The moment vector of the result is the average of the inputs' moments
    weighted by m_i k_i.

    Args:
        reps (list): UnitaryTuple values of one rank d.
        multiplicities (list): Positive integers, one per rep.

    Returns:
        UnitaryTuple: The block-diagonal representation.
    """
    if not reps or len(reps) != len(multiplicities):
        raise PreconditionError("mix_reps needs one multiplicity per representation")
    if any(int(m) < 1 for m in multiplicities):
        raise PreconditionError(f"multiplicities must be positive, got {list(multiplicities)}")
    _require_same_d(reps)
    unitaries = tuple(
        direct_sum([rep.unitaries[j] for rep, m in zip(reps, multiplicities) for _ in range(int(m))])
        for j in range(reps[0].d)
    )
    return UnitaryTuple(unitaries)


def amplify(rep, m):
    return mix_reps([rep], [m])


def perturb_to_surjective(rep, eps, seed, max_tries=DEFAULT_MAX_TRIES, tol=DEFAULT_TOLERANCE,
                          closure_max_dim=DEFAULT_CLOSURE_MAX_DIM):
    """
    Perturbs every generator until the tuple generates M_k.

    Args:
        rep (UnitaryTuple): Starting point, d >= 2.
        eps (float): Per-generator operator-norm budget.
        seed (int): Base seed; try t, generator j uses derive_seed(seed, t, j).
        max_tries (int): Attempt cap.
        tol (Tolerance): Rank tolerance of the surjectivity test.
        closure_max_dim (int): Largest k decided by closure.

    Returns:
        tuple: (UnitaryTuple, ApproxReport); surjective=False when tries ran out.
    """
    if rep.d < 2:
        raise PreconditionError(f"perturb_to_surjective needs d >= 2, got {rep.d}")
    if eps < 0:
        raise PreconditionError(f"eps must be nonnegative, got {eps}")
    attempts = itertools.count(1)

    def candidate():
        attempt = next(attempts)
        out = UnitaryTuple(tuple(perturb_unitary(u, eps, derive_seed(seed, attempt, j), tol)
                                 for j, u in enumerate(rep.unitaries)))
        return attempt, out, is_surjective(out.unitaries, tol, closure_max_dim)

    attempt, out, verdict = retry_until(candidate, lambda result: result[2].flag, max_tries)
    distance = max(operator_norm(a - b) for a, b in zip(out.unitaries, rep.unitaries))
    if verdict.flag:
        logger.info(f"surjective after {attempt} tries at eps={eps}")
    else:
        logger.warning(f"no surjective perturbation in {attempt} tries at eps={eps}")
    report = ApproxReport(eps=float(eps), achieved_generator_distance=distance, surjective=verdict.flag,
                          tries_used=attempt, seed=int(seed), certificate=verdict.certificate,
                          certificate_route=verdict.route)
    return out, report


def _warn_if_not_factor(reps, tol):
    for index, rep in enumerate(reps, start=1):
        if not is_factor(rep.unitaries, tol):
            logger.warning(f"representation {index} is not a factor representation; proceeding")


def _approximate(base, exact_moments, words, eps, seed, max_tries, tol, closure_max_dim):
    out, report = perturb_to_surjective(base, eps, seed, max_tries, tol, closure_max_dim)
    distances = [trace_norm(a - b) for a, b in zip(out.unitaries, base.unitaries)]
    moments = MomentReport.from_values(words, moment_vector(out, words), exact_moments, distances)
    return out, replace(report, moment_report=moments)


def approx_midpoint_fd(rep1, rep2, eps, radius=DEFAULT_GROUP_RADIUS, seed=0, max_tries=DEFAULT_MAX_TRIES,
                       tol=DEFAULT_TOLERANCE, closure_max_dim=DEFAULT_CLOSURE_MAX_DIM, words=None):
    """
    Approximates the midpoint of two traces of F_d by a surjective representation.

    The inputs are mixed with multiplicities (k2/g, k1/g), g = gcd(k1, k2), so
    the mix carries the exact midpoint trace; a generic perturbation then
    lands in the surjective locus. Each word of length L moves by at most L·eps.

    Args:
        rep1 (UnitaryTuple): First representation.
        rep2 (UnitaryTuple): Second representation, same d.
        eps (float): Per-generator budget.
        radius (int): Word length of the moment report.
        seed (int): Base seed.
        max_tries (int): Attempt cap.
        tol (Tolerance): Tolerances.
        closure_max_dim (int): Largest k decided by closure.
        words (list): GroupWord values to report on instead of the radius ball.

    Returns:
        tuple: (UnitaryTuple, ApproxReport with moment_report).
    """
    _require_same_d([rep1, rep2])
    _warn_if_not_factor([rep1, rep2], tol)
    g = math.gcd(rep1.k, rep2.k)
    base = mix_reps([rep1, rep2], [rep2.k // g, rep1.k // g])
    words = ball(rep1.d, radius) if words is None else list(words)
    exact = 0.5 * (moment_vector(rep1, words) + moment_vector(rep2, words))
    return _approximate(base, exact, words, eps, seed, max_tries, tol, closure_max_dim)


def _dyadic(weight):
    value = Fraction(weight)
    denominator = value.denominator
    if value <= 0 or denominator & (denominator - 1):
        raise PreconditionError(f"weight {weight} is not a positive dyadic fraction")
    return value


def approx_dyadic_combination(reps, weights, eps, radius=DEFAULT_GROUP_RADIUS, seed=0,
                              max_tries=DEFAULT_MAX_TRIES, tol=DEFAULT_TOLERANCE,
                              closure_max_dim=DEFAULT_CLOSURE_MAX_DIM):
    """
    Approximates a dyadic convex combination Σ w_i φ_i by a surjective representation.

    Iterated midpoints with dyadic weights collapse into one mix whose block
    masses m_i k_i are proportional to w_i.

    Args:
        reps (list): UnitaryTuple values of one rank.
        weights (list): Positive dyadic fractions (Fraction, str or float) summing to 1.
        eps (float): Per-generator budget.
        radius (int): Word length of the moment report.
        seed (int): Base seed.
        max_tries (int): Attempt cap.
        tol (Tolerance): Tolerances.
        closure_max_dim (int): Largest k decided by closure.

    Returns:
        tuple: (UnitaryTuple, ApproxReport with moment_report).
    """
    if not reps or len(reps) != len(weights):
        raise PreconditionError("one weight per representation is required")
    fractions = [_dyadic(w) for w in weights]
    if sum(fractions) != 1:
        raise PreconditionError(f"weights sum to {sum(fractions)}, not 1")
    _require_same_d(reps)
    denominator = max(f.denominator for f in fractions)
    lcm_k = reduce(lambda a, b: a * b // math.gcd(a, b), [rep.k for rep in reps])
    multiplicities = [int(f * denominator) * (lcm_k // rep.k) for f, rep in zip(fractions, reps)]
    base = mix_reps(reps, multiplicities)
    words = ball(reps[0].d, radius)
    exact = sum(float(f) * moment_vector(rep, words) for f, rep in zip(fractions, reps))
    return _approximate(base, exact, words, eps, seed, max_tries, tol, closure_max_dim)


def desymmetrized_mix(rep1, rep2, m, radius=3):
    """
    The (m+1, m-1) mix against the symmetric (m, m) mix.

    Their moments differ by (φ1 - φ2)/(2m), so at most 2/(2m) per word.

    Args:
        rep1 (UnitaryTuple): First representation.
        rep2 (UnitaryTuple): Second representation.
        m (int): Half the number of blocks, m >= 2.
        radius (int): Word length of the comparison.

    Returns:
        tuple: (asymmetric mix, symmetric mix, MomentReport between them).
    """
    if m < 2:
        raise PreconditionError(f"desymmetrization needs m >= 2, got {m}")
    _require_same_d([rep1, rep2])
    g = math.gcd(rep1.k, rep2.k)
    b1, b2 = rep2.k // g, rep1.k // g
    asymmetric = mix_reps([rep1, rep2], [(m + 1) * b1, (m - 1) * b2])
    symmetric = mix_reps([rep1, rep2], [m * b1, m * b2])
    words = ball(rep1.d, radius)
    report = MomentReport.from_values(words, moment_vector(asymmetric, words), moment_vector(symmetric, words))
    return asymmetric, symmetric, report
