"""Quantum channels factorized through representations of M_n * M_n.

The e-system plays α and the f-system plays β; the channel is T = β*∘α, where
β* is the adjoint for the normalized traces. Entry formula:
T(E_ij)[k, l] = n·τ(f_lk e_ij).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from trace_lab.algebra import DEFAULT_CLOSURE_MAX_DIM
from trace_lab.errors import DimensionMismatchError, PreconditionError
from trace_lab.linalg import (
    DEFAULT_TOLERANCE,
    cmatrix_from_dict,
    cmatrix_to_dict,
    hs_inner,
    identity,
    operator_norm,
    unit_matrix,
)
from trace_lab.matprod import perturbed_rep, verify_perturbation
from trace_lab.utils import Gate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransferChannel:
    """A linear map on M_n stored by its images of the matrix units, with the Choi matrix alongside."""

    n: int
    values: np.ndarray
    choi: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, n, values):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (n, n, n, n):
            raise DimensionMismatchError(f"channel values need shape ({n}, {n}, {n}, {n}), got {values.shape}")
        choi = sum(np.kron(unit_matrix(i + 1, j + 1, n), values[i, j]) for i in range(n) for j in range(n))
        return cls(n, values, choi)

    def apply(self, y):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (self.n, self.n):
            raise DimensionMismatchError(f"expected a {self.n}x{self.n} matrix, got {y.shape}")
        return np.einsum("ij,ijkl->kl", y, self.values)

    def to_dict(self):
        return {"n": self.n, "values": [[cmatrix_to_dict(x) for x in row] for row in self.values]}

    @classmethod
    def from_dict(cls, obj):
        n = int(obj["n"])
        values = np.array([[cmatrix_from_dict(x) for x in row] for row in obj["values"]])
        return cls.from_values(n, values)


@dataclass(frozen=True)
class ChannelReport:
    unital: bool
    trace_preserving: bool
    choi_psd: bool
    min_choi_eigenvalue: float
    gates: list

    @property
    def passed(self):
        return all(gate.passed for gate in self.gates)

    def to_dict(self):
        return {
            "unital": self.unital,
            "trace_preserving": self.trace_preserving,
            "choi_psd": self.choi_psd,
            "min_choi_eigenvalue": self.min_choi_eigenvalue,
        }


@dataclass(frozen=True)
class MidpointChannelReport:
    distance_to_midpoint: float
    surjective: bool
    perturbation: object
    gates: list

    @property
    def passed(self):
        return all(gate.passed for gate in self.gates)

    def to_dict(self):
        return {
            "distance_to_midpoint": self.distance_to_midpoint,
            "surjective": self.surjective,
            "perturbation": self.perturbation.to_dict(),
        }


def moment_table(rep):
    """table[i, j, k, l] = τ(f_lk e_ij), 0-based."""
    return np.einsum("lkab,ijba->ijkl", rep.f_units, rep.e_units) / rep.k


def channel_from_moments(n, table):
    """
    Applies the entry formula to a complete table of mixed moments.

    Args:
        n (int): Matrix size.
        table (array-like): (n, n, n, n) array, table[i, j, k, l] = φ(f_lk e_ij).

    Returns:
        TransferChannel: The channel; affine in the table.
    """
    table = np.asarray(table, dtype=np.complex128)
    if table.shape != (n, n, n, n):
        raise PreconditionError(f"moment table needs {n ** 4} entries in shape ({n},)*4, got {table.shape}")
    if not np.all(np.isfinite(table)):
        raise PreconditionError("moment table is incomplete")
    return TransferChannel.from_values(n, n * table)


def channel_from_rep(rep):
    return channel_from_moments(rep.n, moment_table(rep))


def solve_adjoint_pairing(rep):
    """
    Solves ⟨β(x), α(y)⟩_τ = ⟨x, T(y)⟩ for T(y) by least squares over the matrix-unit basis.

    Args:
        rep (MnMnRep): Representation; e gives α, f gives β.

    Returns:
        TransferChannel: The least-squares solution.
    """
    n, k = rep.n, rep.k
    basis = [unit_matrix(a + 1, b + 1, n) for a in range(n) for b in range(n)]
    gram = np.array([[hs_inner(x, y) / n for y in basis] for x in basis])
    values = np.zeros((n, n, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            rhs = np.array([hs_inner(rep.f_units[a, b], rep.e_units[i, j]) / k
                            for a in range(n) for b in range(n)])
            solution, *_ = scipy.linalg.lstsq(gram, rhs)
            values[i, j] = solution.reshape(n, n)
    return TransferChannel.from_values(n, values)


def verify_channel(channel, tol=DEFAULT_TOLERANCE):
    """
    Checks unitality, trace preservation and complete positivity.

    Args:
        channel (TransferChannel): Channel to check.
        tol (Tolerance): tol.structural is the threshold of all three tests.

    Returns:
        ChannelReport: Flags, the smallest Choi eigenvalue and the gates.
    """
    n, eps = channel.n, tol.structural
    unital_gap = operator_norm(sum(channel.values[i, i] for i in range(n)) - identity(n))
    trace_gap = max(abs(np.trace(channel.values[i, j]) - (1.0 if i == j else 0.0))
                    for i in range(n) for j in range(n))
    min_eig = float(scipy.linalg.eigvalsh((channel.choi + channel.choi.conj().T) / 2.0).min())
    gates = [
        Gate.at_most("unital", unital_gap, eps),
        Gate.at_most("trace_preserving", trace_gap, eps),
        Gate("choi_psd", min_eig >= -eps, min_eig, -eps),
    ]
    logger.debug(f"channel checks: unital gap {unital_gap:.2e}, trace gap {trace_gap:.2e}, min choi {min_eig:.2e}")
    return ChannelReport(unital=gates[0].passed, trace_preserving=gates[1].passed, choi_psd=gates[2].passed,
                         min_choi_eigenvalue=min_eig, gates=gates)


def channel_distance(first, second):
    if first.n != second.n:
        raise DimensionMismatchError(f"channels on M_{first.n} and M_{second.n}")
    return float(np.abs(first.values - second.values).max())


def midpoint_channel(rep1, rep2, eps, radius=3, r_rank=None, diagnostics=False, tol=DEFAULT_TOLERANCE,
                     closure_max_dim=DEFAULT_CLOSURE_MAX_DIM, threshold=None):
    """
    A surjectively factorizing channel near the midpoint of two factorizable channels.

    Args:
        rep1 (MnMnRep): First factorization, n >= 4.
        rep2 (MnMnRep): Second factorization.
        eps (float): Closeness parameter of the perturbation.
        radius (int): Monomial length of the moment comparison, >= 2.
        r_rank (int): Rank of the added corner; defaults to 1.
        diagnostics (bool): Forwarded to the perturbation checks.
        tol (Tolerance): Tolerances.
        closure_max_dim (int): Largest dimension decided by closure.
        threshold (float): Largest accepted entrywise distance to the midpoint channel; defaults to eps.

    Returns:
        tuple: (TransferChannel of the perturbed representation, MidpointChannelReport).
    """
    if radius < 2:
        raise PreconditionError(f"radius must cover the mixed moments f e, got {radius}")
    bundle = perturbed_rep(rep1, rep2, eps, r_rank, tol)
    perturbation = verify_perturbation(bundle, radius, diagnostics, tol, closure_max_dim)
    channel = channel_from_rep(bundle.perturbed)
    first, second = channel_from_rep(rep1), channel_from_rep(rep2)
    target = TransferChannel.from_values(rep1.n, 0.5 * (first.values + second.values))
    distance = channel_distance(channel, target)
    threshold = eps if threshold is None else threshold
    # entries are n·(moment of length 2), so the moment gap bounds them
    consistency = rep1.n * perturbation.moment_report.sup_delta + tol.structural
    gates = list(perturbation.gates) + [
        Gate.check("surjective_factorization", perturbation.surjective),
        Gate.at_most("channel_moment_consistency", distance, consistency),
        Gate.at_most("channel_distance", distance, threshold),
    ]
    logger.info(f"midpoint channel at eps={eps}: distance {distance:.4f}, surjective={perturbation.surjective}")
    return channel, MidpointChannelReport(distance, perturbation.surjective, perturbation, gates)
