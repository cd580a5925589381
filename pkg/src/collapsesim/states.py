"""States, yes/no questions and the reduction rules acting on them.

States are kept *unnormalised*: after a collapse the surviving branch keeps
its raw weight ``Tr(S)``. Every probability is a trace ratio computed at the
moment it is needed, so path probabilities along a sequence of questions
multiply out without bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Protocol, Sequence

import numpy as np

from .errors import DegenerateStateError, ShapeError, ValidationError
from .tensor import (
    TOL,
    CompositeSpace,
    as_matrix,
    as_vector,
    dagger,
    is_hermitian,
    is_unitary,
    kron,
    max_abs,
)

ENTROPY_FLOOR = 1e-14

Answer = Literal["yes", "no"]


class RandomEngine(Protocol):
    """Anything with a ``random()`` returning a uniform float in [0, 1)."""

    def random(self) -> float: ...


def _space_for(space, dim: int) -> CompositeSpace:
    if space is None:
        return CompositeSpace.single(dim)
    if not isinstance(space, CompositeSpace):
        space = CompositeSpace(space)
    if space.total_dim != dim:
        raise ShapeError(f"space dim {space.total_dim} != matrix dim {dim}")
    return space


@dataclass(frozen=True, eq=False)
class DensityState:
    """Hermitian PSD matrix with positive trace, not necessarily normalised."""

    matrix: np.ndarray
    space: CompositeSpace = None

    def __post_init__(self):
        m = as_matrix(self.matrix, "state")
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"state must be square, got {m.shape}")
        if not is_hermitian(m):
            raise ValidationError("state is not Hermitian within 1e-10")
        m = 0.5 * (m + dagger(m))
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise ValidationError("state is not positive semidefinite within 1e-10")
        if np.trace(m).real <= 0:
            raise DegenerateStateError("state has non-positive trace")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "space", _space_for(self.space, m.shape[0]))

    @classmethod
    def pure(cls, vector, space=None) -> "DensityState":
        v = as_vector(vector)
        return cls(np.outer(v, np.conj(v)), space)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def weight(self) -> float:
        """Raw weight ``Tr(S)``."""
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityState":
        return DensityState(self.matrix / self.weight, self.space)

    def conjugated(self, u) -> "DensityState":
        """``U S U^dagger``."""
        u = as_matrix(u, "unitary")
        if u.shape != self.matrix.shape:
            raise ShapeError(f"unitary shape {u.shape} != state shape {self.matrix.shape}")
        return DensityState(u @ self.matrix @ dagger(u), self.space)


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent matrix. Near-projectors are rejected, never repaired."""

    matrix: np.ndarray
    space: CompositeSpace = None
    name: str = ""

    def __post_init__(self):
        m = as_matrix(self.matrix, "projector")
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"projector must be square, got {m.shape}")
        if not is_hermitian(m):
            raise ValidationError("projector is not Hermitian within 1e-10")
        if max_abs(m @ m - m) > TOL:
            raise ValidationError("projector is not idempotent within 1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "space", _space_for(self.space, m.shape[0]))

    @classmethod
    def onto(cls, vectors, space=None, name: str = "") -> "Projector":
        """Projector onto the span of ``vectors`` (orthonormalised here)."""
        basis = orthonormal_basis(vectors)
        return cls(basis @ dagger(basis), space, name)

    @classmethod
    def basis_state(cls, dim: int, index: int, name: str = "") -> "Projector":
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[index, index] = 1.0
        return cls(m, None, name or f"|{index}><{index}|")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix, self.space, f"1-{self.name}" if self.name else "")


def orthonormal_basis(vectors, tol: float = TOL) -> np.ndarray:
    """Columns spanning the same space as ``vectors`` (a sequence of 1-D arrays)."""
    a = np.array([as_vector(v) for v in vectors], dtype=np.complex128).T
    if a.size == 0:
        raise ValidationError("cannot build a basis from no vectors")
    u, sv, _ = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(sv > tol * max(1.0, sv.max())))
    return u[:, :rank]


def _check_dims(s: DensityState, p: Projector) -> None:
    if s.dim != p.dim:
        raise ShapeError(f"state dim {s.dim} != projector dim {p.dim}")


def weight_yes(s: DensityState, p: Projector) -> float:
    """Raw weight ``Tr(PSP)`` (equal to ``Tr(PS)``)."""
    _check_dims(s, p)
    pm = p.matrix
    return float(np.trace(pm @ s.matrix @ pm).real)


def prob_yes(s: DensityState, p: Projector) -> float:
    """``Tr(PSP) / Tr(S)``, clamped into [0, 1]."""
    total = s.weight
    if total <= 0:
        raise DegenerateStateError("Tr(S) <= 0")
    return min(1.0, max(0.0, weight_yes(s, p) / total))


def _branch(s: DensityState, p: np.ndarray) -> np.ndarray:
    return p @ s.matrix @ p


def process_one(s: DensityState, p: Projector) -> DensityState:
    """Pose the question without answering it: ``PSP + (1-P)S(1-P)``."""
    _check_dims(s, p)
    q = np.eye(p.dim) - p.matrix
    return DensityState(_branch(s, p.matrix) + _branch(s, q), s.space)


@dataclass(frozen=True)
class CollapseOutcome:
    answer: Answer
    probability_yes: float
    post_state: DensityState


def reduce_to(s: DensityState, p: Projector, answer: Answer) -> DensityState:
    """The unnormalised branch ``PSP`` (yes) or ``(1-P)S(1-P)`` (no)."""
    _check_dims(s, p)
    m = p.matrix if answer == "yes" else np.eye(p.dim) - p.matrix
    return DensityState(_branch(s, m), s.space)


def heisenberg_collapse(s: DensityState, p: Projector, rng: RandomEngine) -> CollapseOutcome:
    """Complete the reduction: draw yes with probability ``prob_yes(s, p)``.

    Exactly one uniform is consumed from ``rng``; yes iff it is below the
    yes-probability.
    """
    py = prob_yes(s, p)
    answer: Answer = "yes" if rng.random() < py else "no"
    return CollapseOutcome(answer, py, reduce_to(s, p, answer))


def entropy(s: DensityState) -> float:
    """Von Neumann entropy (nats) of ``S / Tr(S)``."""
    lam = np.linalg.eigvalsh(s.matrix / s.weight)
    lam = lam[lam > ENTROPY_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


@dataclass(frozen=True)
class InvarianceReport:
    prob_before: float
    prob_after: float
    commutes: bool


def invariance_check(s: DensityState, p: Projector, u) -> InvarianceReport:
    """Compare ``prob_yes`` before and after ``S -> U S U^-1``."""
    u = as_matrix(u, "unitary")
    if not is_unitary(u):
        raise ValidationError("u is not unitary within 1e-10")
    commutes = max_abs(dagger(u) @ p.matrix @ u - p.matrix) <= TOL
    return InvarianceReport(prob_yes(s, p), prob_yes(s.conjugated(u), p), commutes)


# --- system / environment measurement model -------------------------------


@dataclass(frozen=True)
class SchmidtSystem:
    """``|Psi> = sum_i phi_i (x) chi_i`` with orthonormal environment states ``chi_i``.

    ``experience_indices`` is the set of components compatible with the
    experience E.
    """

    phis: tuple
    chis: tuple
    experience_indices: frozenset = field(default_factory=frozenset)

    def __init__(self, phis: Sequence, chis: Sequence, experience_indices: Iterable[int]):
        phis = tuple(as_vector(v, "phi") for v in phis)
        chis = tuple(as_vector(v, "chi") for v in chis)
        if len(phis) != len(chis) or not phis:
            raise ValidationError("need equally many (>0) phi and chi components")
        if len({v.shape for v in phis}) != 1 or len({v.shape for v in chis}) != 1:
            raise ShapeError("all phi (resp. chi) vectors must share one dimension")
        idx = frozenset(int(i) for i in experience_indices)
        if any(not 0 <= i < len(phis) for i in idx):
            raise IndexError(f"experience indices {sorted(idx)} out of range")
        c = np.array(chis).T
        if max_abs(dagger(c) @ c - np.eye(len(chis))) > TOL:
            raise ValidationError("environment states chi_i are not orthonormal within 1e-10")
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "chis", chis)
        object.__setattr__(self, "experience_indices", idx)
        if np.linalg.norm(self.psi) <= 0:
            raise DegenerateStateError("assembled |Psi> has zero norm")

    @property
    def system_dim(self) -> int:
        return self.phis[0].shape[0]

    @property
    def environment_dim(self) -> int:
        return self.chis[0].shape[0]

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((self.system_dim, self.environment_dim))

    @property
    def psi(self) -> np.ndarray:
        return sum(np.kron(phi, chi) for phi, chi in zip(self.phis, self.chis))

    def state(self) -> DensityState:
        return DensityState.pure(self.psi, self.space)


@dataclass(frozen=True)
class GoodMeasurement:
    p_experience: Projector  # P(E), acts on the environment factor
    p_system: Projector  # P_, acts on the system factor


def build_good_measurement(sys: SchmidtSystem) -> GoodMeasurement:
    if not sys.experience_indices:
        raise ValidationError("experience index set I(E) is empty")
    idx = sorted(sys.experience_indices)
    env = sum(np.outer(sys.chis[i], np.conj(sys.chis[i])) for i in idx)
    p_e = Projector(kron(np.eye(sys.system_dim), env), sys.space, "P(E)")
    basis = orthonormal_basis([sys.phis[i] for i in idx])
    p_sys = Projector(kron(basis @ dagger(basis), np.eye(sys.environment_dim)), sys.space, "P_")
    return GoodMeasurement(p_e, p_sys)


@dataclass(frozen=True)
class EquivalenceReport:
    applicable: bool
    proper_subspace: bool
    max_deviation: float | None
    reason: str = ""


def vn_equivalence_check(sys: SchmidtSystem) -> EquivalenceReport:
    """Compare Process I with ``P(E)`` against Process I with ``P_`` on ``|Psi><Psi|``.

    The two coincide when every ``phi_j`` outside I(E) is orthogonal to the
    span of the ``phi_i`` inside it (distinct pointer subspaces). When that
    fails the report is marked inapplicable instead of raising.
    """
    gm = build_good_measurement(sys)
    basis = orthonormal_basis([sys.phis[i] for i in sorted(sys.experience_indices)])
    proper = basis.shape[1] < sys.system_dim
    outside = [sys.phis[j] for j in range(len(sys.phis)) if j not in sys.experience_indices]
    leak = max((float(np.linalg.norm(dagger(basis) @ v)) for v in outside), default=0.0)
    if leak > TOL:
        return EquivalenceReport(False, proper, None,
                                 f"components outside I(E) overlap the experience subspace (overlap {leak:.3g})")
    s = sys.state()
    dev = max_abs(process_one(s, gm.p_experience).matrix - process_one(s, gm.p_system).matrix)
    return EquivalenceReport(True, proper, dev)
