"""Dense complex linear algebra over composite tensor-product spaces.

Conventions
-----------
Matrices are C-ordered (row-major) ``complex128`` numpy arrays. In a
composite space with factor dimensions ``(d_0, ..., d_{k-1})`` factor 0 is
the slowest-varying index, which is exactly what ``np.kron`` and a C-order
``reshape`` produce.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError, SizeError, ValidationError

MAX_DIM = 2**20
TOL = 1e-10


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex array (copying)."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    a = np.array(v, dtype=np.complex128)
    if a.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def _require_square(m: np.ndarray, name: str = "matrix") -> None:
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")


def max_abs(m) -> float:
    """Max-abs-entry norm, the norm every tolerance in this package refers to."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def dagger(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def is_hermitian(m, tol: float = TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and max_abs(m - dagger(m)) <= tol


def is_unitary(u, tol: float = TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return max_abs(dagger(u) @ u - np.eye(u.shape[0])) <= tol


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor factors ``d_0 x d_1 x ...``; factor 0 varies slowest."""

    factor_dims: tuple[int, ...]

    def __init__(self, factor_dims: Iterable[int]):
        dims = tuple(int(d) for d in factor_dims)
        if not dims:
            raise ValidationError("a composite space needs at least one factor")
        if any(d < 1 for d in dims):
            raise ValidationError(f"factor dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def subspace(self, keep: Iterable[int]) -> "CompositeSpace":
        keep = sorted(keep)
        if not keep:
            return CompositeSpace((1,))
        return CompositeSpace(self.factor_dims[k] for k in keep)

    @classmethod
    def single(cls, dim: int) -> "CompositeSpace":
        return cls((dim,))


def kron(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product; the left factor varies slowest."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise SizeError(f"kron result {rows}x{cols} exceeds dimension cap {max_dim}")
    return np.kron(a, b)


def kron_all(mats: Sequence, max_dim: int = MAX_DIM) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = kron(out, m, max_dim=max_dim)
    return out


def trace(m) -> complex:
    m = as_matrix(m)
    _require_square(m)
    return complex(np.trace(m))


def partial_trace(m, space: CompositeSpace, traced_factors: Iterable[int]) -> np.ndarray:
    """Trace out ``traced_factors`` of ``space``; remaining factors keep their order.

    Tracing out every factor returns the 1x1 matrix ``[[trace(m)]]``.
    """
    m = as_matrix(m)
    _require_square(m)
    if m.shape[0] != space.total_dim:
        raise ShapeError(f"matrix dim {m.shape[0]} != space dim {space.total_dim}")
    traced = set(traced_factors)
    k = space.n_factors
    bad = [t for t in traced if not 0 <= t < k]
    if bad:
        raise IndexError(f"factor indices {bad} out of range for {k} factors")
    if 2 * k > len(string.ascii_letters):
        raise SizeError("too many tensor factors for partial_trace")

    letters = string.ascii_letters
    row = [letters[i] for i in range(k)]
    col = [letters[k + i] if i not in traced else letters[i] for i in range(k)]
    keep = [i for i in range(k) if i not in traced]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = m.reshape(space.factor_dims * 2)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = math.prod(space.factor_dims[i] for i in keep)
    return reduced.reshape(d, d)


def expectation(op, state_vector) -> complex:
    """``<v|op|v>`` (no normalisation applied)."""
    op = as_matrix(op, "op")
    _require_square(op, "op")
    v = as_vector(state_vector, "state_vector")
    if v.shape[0] != op.shape[0]:
        raise ShapeError(f"vector dim {v.shape[0]} != operator dim {op.shape[0]}")
    return complex(np.vdot(v, op @ v))


def unitary_from_hamiltonian(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` through the eigendecomposition of the Hermitian ``h``."""
    h = as_matrix(h, "hamiltonian")
    _require_square(h, "hamiltonian")
    if not is_hermitian(h):
        raise ValidationError("hamiltonian is not Hermitian within 1e-10")
    h = 0.5 * (h + dagger(h))
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * float(t))
    return (evecs * phases) @ dagger(evecs)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random positive semidefinite matrix with unit trace (Ginibre ensemble)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    s = g @ dagger(g)
    return s / np.trace(s).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_projector(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    u = random_unitary(dim, rng)
    cols = u[:, :rank]
    return cols @ dagger(cols)
