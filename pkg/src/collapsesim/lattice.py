"""Local-update lattice automaton and its lift to superpositions of whole configurations.

Indexing
--------
Sites are ``(x, y, z)`` with linear index ``(x*ny + y)*nz + z`` (x slowest).
A site's state is its tuple of ``f`` field values read as a base-``v``
number (field 0 most significant), giving a site code in ``[0, v**f)``.
A whole configuration (a "superpoint") is the base-``v**f`` number formed by
the site codes, site 0 most significant. Boundaries are periodic.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import DegenerateStateError, ShapeError, SizeError, ValidationError
from .states import Answer, Projector, RandomEngine
from .tensor import as_vector

MAX_CONFIGS = 2**20
RULES = ("identity", "xor", "zero", "shift", "table")

M_GLYPH_5X5 = (
    "X...X",
    "XX.XX",
    "X.X.X",
    "X...X",
    "X...X",
)


@dataclass(frozen=True)
class LatticeConfig:
    """Lattice geometry, field alphabet and update rule.

    Rules (all radius <= 1):
      identity  leave every site as is
      xor       each field := self + distinct axis neighbours (mod v); XOR when v = 2
      zero      every field := 0 (not injective; classical use only)
      shift     site (x, y, z) takes the value of (x-1, y, z)
      table     site code := table[site code]
    """

    nx: int
    ny: int = 1
    nz: int = 1
    fields: int = 1
    values: int = 2
    rule: str = "identity"
    table: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("nx", "ny", "nz", "fields"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.values < 1:
            raise ValidationError("values must be >= 1")
        if self.rule not in RULES:
            raise ValidationError(f"unknown rule {self.rule!r}; choose from {RULES}")
        if self.rule == "table":
            if self.table is None or len(self.table) != self.site_states:
                raise ValidationError(f"table rule needs a table of length {self.site_states}")
            if any(not 0 <= t < self.site_states for t in self.table):
                raise ValidationError("table entries must be valid site codes")
            object.__setattr__(self, "table", tuple(int(t) for t in self.table))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def site_states(self) -> int:
        return self.values**self.fields

    @property
    def n_configs(self) -> int:
        return self.site_states**self.n_sites

    def site_index(self, x: int, y: int, z: int) -> int:
        return (x * self.ny + y) * self.nz + z

    def is_desk_scale(self) -> bool:
        # the log test keeps astronomically large lattices away from big-int powers
        if float(config_space_log10(self)) > math.log10(MAX_CONFIGS) + 1e-9:
            return False
        return self.n_configs <= MAX_CONFIGS

    def require_desk_scale(self) -> None:
        if not self.is_desk_scale():
            raise SizeError(f"10^{float(config_space_log10(self)):.6g} configurations exceed "
                            f"the desk-scale cap {MAX_CONFIGS}")


# --- log-space counting (no size guard) -----------------------------------


def _log10_exact(v: int):
    k = round(math.log10(v)) if v > 0 else 0
    return k if 10**k == v else math.log10(v)


def config_space_exponent(cfg: LatticeConfig) -> tuple[int, int]:
    """``(v, e)`` with ``total configs = v**e`` exactly; ``e = sites * fields``."""
    return cfg.values, cfg.n_sites * cfg.fields


def config_space_log10(cfg: LatticeConfig):
    """``log10`` of the number of classical configurations.

    Exact (an ``int``) when ``values`` is a power of ten, else a float.
    """
    base, exponent = config_space_exponent(cfg)
    return exponent * _log10_exact(base)


def pattern_log10_fraction(cfg: LatticeConfig, pattern: Mapping) -> float:
    """``log10`` of the fraction of configurations matching ``pattern``."""
    _pattern_codes(cfg, pattern)
    return -len(pattern) * cfg.fields * _log10_exact(cfg.values)


# --- classical dynamics -----------------------------------------------------


def check_state(cfg: LatticeConfig, state) -> np.ndarray:
    a = np.asarray(state)
    want = (cfg.nx, cfg.ny, cfg.nz, cfg.fields)
    if a.shape != want:
        raise ShapeError(f"state shape {a.shape} != {want}")
    if not np.issubdtype(a.dtype, np.integer):
        raise ValidationError("field values must be integers")
    if a.size and (a.min() < 0 or a.max() >= cfg.values):
        raise ValidationError(f"field values must lie in [0, {cfg.values})")
    return a.astype(np.int64)


def _step_batch(cfg: LatticeConfig, a: np.ndarray) -> np.ndarray:
    """Apply the rule to ``a[..., x, y, z, field]`` (leading batch axes allowed)."""
    if cfg.rule == "identity":
        return a.copy()
    if cfg.rule == "zero":
        return np.zeros_like(a)
    if cfg.rule == "shift":
        return np.roll(a, 1, axis=-4)
    if cfg.rule == "table":
        table = np.asarray(cfg.table)
        return _fields_from_codes(cfg, table[_codes_from_fields(cfg, a)])
    out = a.copy()
    for axis, n in zip((-4, -3, -2), cfg.shape):
        if n > 1:
            out += np.roll(a, 1, axis=axis)
        if n > 2:
            out += np.roll(a, -1, axis=axis)
    return out % cfg.values


def classical_step(cfg: LatticeConfig, state) -> np.ndarray:
    """One synchronous update; each site reads only its radius-1 neighbourhood."""
    return _step_batch(cfg, check_state(cfg, state))


def _codes_from_fields(cfg, a):
    codes = np.zeros(a.shape[:-1], dtype=np.int64)
    for k in range(cfg.fields):
        codes = codes * cfg.values + a[..., k]
    return codes


def _fields_from_codes(cfg, codes):
    out = np.empty(codes.shape + (cfg.fields,), dtype=np.int64)
    for k in range(cfg.fields - 1, -1, -1):
        out[..., k] = codes % cfg.values
        codes = codes // cfg.values
    return out


def encode(cfg: LatticeConfig, state) -> int:
    codes = _codes_from_fields(cfg, check_state(cfg, state)).reshape(-1)
    idx = 0
    for c in codes:
        idx = idx * cfg.site_states + int(c)
    return idx


def decode(cfg: LatticeConfig, index: int) -> np.ndarray:
    if not 0 <= index < cfg.n_configs:
        raise IndexError(f"configuration index {index} out of range")
    codes = []
    for _ in range(cfg.n_sites):
        index, c = divmod(index, cfg.site_states)
        codes.append(c)
    codes = np.array(codes[::-1], dtype=np.int64).reshape(cfg.shape)
    return _fields_from_codes(cfg, codes)


def _all_site_codes(cfg: LatticeConfig) -> np.ndarray:
    """Site codes of every configuration, shape ``(n_configs, n_sites)``."""
    cfg.require_desk_scale()
    idx = np.arange(cfg.n_configs, dtype=np.int64)
    out = np.empty((cfg.n_configs, cfg.n_sites), dtype=np.int64)
    q = cfg.site_states
    for s in range(cfg.n_sites - 1, -1, -1):
        out[:, s] = idx % q
        idx //= q
    return out


@lru_cache(maxsize=32)
def step_permutation(cfg: LatticeConfig) -> np.ndarray:
    """``perm[i]`` = index of the configuration reached from configuration ``i``."""
    codes = _all_site_codes(cfg)
    fields = _fields_from_codes(cfg, codes.reshape((-1,) + cfg.shape))
    stepped = _codes_from_fields(cfg, _step_batch(cfg, fields)).reshape(len(codes), -1)
    perm = np.zeros(len(codes), dtype=np.int64)
    for s in range(cfg.n_sites):
        perm = perm * cfg.site_states + stepped[:, s]
    perm.setflags(write=False)
    return perm


def is_reversible(cfg: LatticeConfig) -> bool:
    perm = step_permutation(cfg)
    return np.unique(perm).size == perm.size


# --- superpositions --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SuperpositionState:
    """Complex amplitude per whole configuration (unnormalised)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = as_vector(self.amplitudes, "amplitudes")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm2(self) -> float:
        # correctly rounded, hence invariant under any permutation of entries
        a = self.amplitudes
        return math.fsum(np.concatenate([a.real**2, a.imag**2]).tolist())

    def probabilities(self) -> np.ndarray:
        w = np.abs(self.amplitudes) ** 2
        return w / w.sum()

    def to_csv(self, nonzero_only: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, a in enumerate(self.amplitudes):
            if nonzero_only and a == 0:
                continue
            w.writerow([i, format(a.real, ".12g"), format(a.imag, ".12g")])
        return buf.getvalue()


def lift_to_superposition(cfg: LatticeConfig, initial="uniform") -> SuperpositionState:
    """Amplitude ``sqrt(probability)`` for each configuration.

    ``initial`` is ``"uniform"``, a full probability vector, a mapping
    ``{config index: weight}`` or a single configuration array (point mass).
    Weights are normalised to sum to one.
    """
    cfg.require_desk_scale()
    n = cfg.n_configs
    if isinstance(initial, str):
        if initial != "uniform":
            raise ValidationError(f"unknown initial distribution {initial!r}")
        probs = np.full(n, 1.0 / n)
    elif isinstance(initial, Mapping):
        probs = np.zeros(n)
        for k, w in initial.items():
            if not 0 <= int(k) < n:
                raise IndexError(f"configuration index {k} out of range")
            probs[int(k)] = w
    else:
        arr = np.asarray(initial)
        if arr.shape == (cfg.nx, cfg.ny, cfg.nz, cfg.fields):
            probs = np.zeros(n)
            probs[encode(cfg, arr)] = 1.0
        elif arr.shape == (n,):
            probs = arr.astype(np.float64)
        else:
            raise ShapeError(f"cannot read a distribution of shape {arr.shape}")
    if np.any(probs < 0) or probs.sum() <= 0:
        raise ValidationError("distribution weights must be >= 0 with positive total")
    return SuperpositionState(np.sqrt(probs / probs.sum()).astype(np.complex128))


def quantum_step(cfg: LatticeConfig, state: SuperpositionState) -> SuperpositionState:
    """Permute amplitudes along the classical update (a permutation unitary)."""
    perm = step_permutation(cfg)
    if state.amplitudes.shape[0] != perm.size:
        raise ShapeError(f"state has {state.amplitudes.shape[0]} amplitudes, lattice has {perm.size} configs")
    if not is_reversible(cfg):
        raise ValidationError(f"rule {cfg.rule!r} is not injective on this lattice; no unitary lift exists")
    out = np.empty_like(state.amplitudes)
    out[perm] = state.amplitudes
    return SuperpositionState(out)


# --- patterns and gestalt collapse ----------------------------------------


def _pattern_codes(cfg: LatticeConfig, pattern: Mapping) -> dict[int, int]:
    """Map face-site -> site code; face is ``z = 0`` and keys are ``(x, y)``."""
    out = {}
    for key, val in pattern.items():
        x, y = (int(k) for k in key)
        if not (0 <= x < cfg.nx and 0 <= y < cfg.ny):
            raise IndexError(f"pattern site {(x, y)} lies outside the z=0 face")
        if isinstance(val, (tuple, list)):
            if len(val) != cfg.fields or any(not 0 <= v < cfg.values for v in val):
                raise ValidationError(f"bad field tuple {val!r} at {(x, y)}")
            code = 0
            for v in val:
                code = code * cfg.values + int(v)
        else:
            code = int(val)
            if not 0 <= code < cfg.site_states:
                raise ValidationError(f"site code {code} at {(x, y)} out of range")
        out[cfg.site_index(x, y, 0)] = code
    return out


@dataclass(frozen=True, eq=False)
class DiagonalProjector:
    """0/1 diagonal projector on the configuration basis, stored as a mask."""

    mask: np.ndarray
    name: str = "M"

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.mask))

    def complement(self) -> "DiagonalProjector":
        return DiagonalProjector(~self.mask, f"1-{self.name}")

    def to_projector(self) -> Projector:
        return Projector(np.diag(self.mask.astype(np.complex128)), name=self.name)


def pattern_projector(cfg: LatticeConfig, pattern: Mapping, name: str = "M") -> DiagonalProjector:
    """Select configurations whose z=0 face agrees with the partial assignment."""
    wanted = _pattern_codes(cfg, pattern)
    codes = _all_site_codes(cfg)
    mask = np.ones(cfg.n_configs, dtype=bool)
    for site, code in wanted.items():
        mask &= codes[:, site] == code
    mask.setflags(write=False)
    return DiagonalProjector(mask, name)


def m_glyph_pattern(on: int = 1, off: int = 0) -> dict[tuple[int, int], int]:
    """The 5x5 letter M over the whole face, upright (row 0 is y = 4)."""
    rows = len(M_GLYPH_5X5)
    return {(x, rows - 1 - r): (on if ch == "X" else off)
            for r, line in enumerate(M_GLYPH_5X5) for x, ch in enumerate(line)}


@dataclass(frozen=True)
class GestaltOutcome:
    answer: Answer
    probability_yes: float
    post_state: SuperpositionState  # unnormalised branch P psi or (1-P) psi


def gestalt_collapse(state: SuperpositionState, p, rng: RandomEngine) -> GestaltOutcome:
    """Heisenberg collapse of ``|psi><psi|`` onto a pattern projector.

    The post-state is kept as the vector ``P psi``; its density matrix is the
    outer product, which is never formed.
    """
    psi = state.amplitudes
    total = state.norm2
    if total <= 0:
        raise DegenerateStateError("zero state")
    if isinstance(p, DiagonalProjector):
        if p.mask.shape[0] != psi.shape[0]:
            raise ShapeError("projector and state dimensions differ")
        yes_vec = np.where(p.mask, psi, 0)
    else:
        if p.dim != psi.shape[0]:
            raise ShapeError("projector and state dimensions differ")
        yes_vec = p.matrix @ psi
    py = min(1.0, max(0.0, float(np.vdot(yes_vec, yes_vec).real) / total))
    if rng.random() < py:
        return GestaltOutcome("yes", py, SuperpositionState(yes_vec))
    return GestaltOutcome("no", py, SuperpositionState(psi - yes_vec))
