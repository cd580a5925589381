"""Two regions, two settings each, two outcomes each: quantum correlations
versus local models.

A local model assigns outcomes in each region as a function of that region's
own setting only (possibly mixed over such assignments). There are 4 x 4 = 16
deterministic assignments; a table is locally explainable exactly when it is a
convex mixture of them, which for this scenario is equivalent to all eight
CHSH combinations lying in [-2, 2].
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InapplicableError, ShapeError, ValidationError
from .lp import MixtureResult, exact_mixture, float_mixture
from .states import DensityState
from .tensor import TOL, as_matrix, dagger, is_hermitian, max_abs

LOCAL_BOUND = 2
CHSH_TOL = 1e-9
# a CHSH excess of e needs an L-inf move of at least e/16 in the table
LP_TOL = CHSH_TOL / 16
TABLE_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# sign patterns (s00, s01, s10, s11) with an odd number of minus signs
CHSH_SIGNS = tuple(s for s in itertools.product((1, -1), repeat=4) if s.count(-1) % 2 == 1)


# --- experiments -----------------------------------------------------------


def axis_measurement(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Spin along ``cos(theta) Z + sin(theta) X``; outcome 0 is the +1 eigenspace."""
    n = np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X
    eye = np.eye(2)
    return (eye + n) / 2, (eye - n) / 2


def singlet() -> DensityState:
    psi = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
    return DensityState.pure(psi, (2, 2))


def with_white_noise(state: DensityState, visibility: float) -> DensityState:
    rho = state.normalized().matrix
    return DensityState(visibility * rho + (1 - visibility) * np.eye(state.dim) / state.dim, state.space)


@dataclass(frozen=True, eq=False)
class BipartiteExperiment:
    """``settings_l[x] = (Pi_{0|x}, Pi_{1|x})`` and likewise on the right."""

    state: DensityState
    settings_l: tuple
    settings_r: tuple

    def __post_init__(self):
        if abs(self.state.weight - 1) > TOL:
            raise ValidationError("joint state must have unit trace")
        dl = self._check_side(self.settings_l, "left")
        dr = self._check_side(self.settings_r, "right")
        if dl * dr != self.state.dim:
            raise ShapeError(f"local dims {dl}x{dr} do not match state dim {self.state.dim}")
        object.__setattr__(self, "settings_l", self._frozen(self.settings_l))
        object.__setattr__(self, "settings_r", self._frozen(self.settings_r))

    @staticmethod
    def _frozen(side):
        return tuple(tuple(as_matrix(p) for p in pair) for pair in side)

    @staticmethod
    def _check_side(side, label) -> int:
        if len(side) != 2 or any(len(pair) != 2 for pair in side):
            raise ShapeError(f"{label} side needs two settings with two outcomes each")
        dims = set()
        for pair in side:
            mats = [as_matrix(p) for p in pair]
            for m in mats:
                if not is_hermitian(m) or max_abs(m @ m - m) > TOL:
                    raise ValidationError(f"{label} outcome operator is not a projector")
                dims.add(m.shape[0])
            if max_abs(mats[0] + mats[1] - np.eye(mats[0].shape[0])) > TOL:
                raise ValidationError(f"{label} outcome projectors do not sum to identity")
        if len(dims) != 1:
            raise ShapeError(f"{label} projectors disagree on dimension")
        return dims.pop()

    @classmethod
    def from_angles(cls, state: DensityState, angles_l: Sequence[float], angles_r: Sequence[float]):
        return cls(state, tuple(axis_measurement(a) for a in angles_l),
                   tuple(axis_measurement(a) for a in angles_r))


SINGLET_CHSH_ANGLES = ((0.0, np.pi / 2), (np.pi / 4, 3 * np.pi / 4))


def singlet_chsh_experiment(visibility: float = 1.0) -> BipartiteExperiment:
    state = singlet() if visibility == 1.0 else with_white_noise(singlet(), visibility)
    return BipartiteExperiment.from_angles(state, *SINGLET_CHSH_ANGLES)


# --- correlation tables ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """``p[a, b, x, y]``: probability of outcomes (a, b) under settings (x, y).

    Entries may be floats or :class:`~fractions.Fraction` (exact route).
    """

    p: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.p)
        exact = raw.dtype == object and all(isinstance(v, (Fraction, int)) for v in raw.flat)
        p = np.array([Fraction(v) for v in raw.flat], dtype=object).reshape(raw.shape) if exact \
            else raw.astype(np.float64)
        if p.shape != (2, 2, 2, 2):
            raise ShapeError(f"table must have shape (2, 2, 2, 2), got {p.shape}")
        if not exact and not np.all(np.isfinite(p)):
            raise ValidationError("table has non-finite entries")
        tol = 0 if exact else TABLE_TOL
        if any(v < -(0 if exact else 1e-12) for v in p.flat):
            raise ValidationError("table has negative probabilities")
        for x, y in itertools.product(range(2), repeat=2):
            if abs(sum(p[:, :, x, y].flat) - 1) > tol:
                raise ValidationError(f"probabilities for settings {(x, y)} do not sum to 1")
        object.__setattr__(self, "p", p)

    @property
    def exact(self) -> bool:
        return self.p.dtype == object

    def correlator(self, x: int, y: int):
        q = self.p[:, :, x, y]
        return q[0, 0] - q[0, 1] - q[1, 0] + q[1, 1]

    def correlators(self) -> np.ndarray:
        return np.array([[self.correlator(x, y) for y in range(2)] for x in range(2)],
                        dtype=object if self.exact else np.float64)

    def signaling(self):
        """Largest change of one side's marginal under the other side's setting."""
        p = self.p
        left = [abs(p[a, :, x, 0].sum() - p[a, :, x, 1].sum()) for a in range(2) for x in range(2)]
        right = [abs(p[:, b, 0, y].sum() - p[:, b, 1, y].sum()) for b in range(2) for y in range(2)]
        return max(left + right)

    def is_nonsignaling(self) -> bool:
        s = self.signaling()
        return s == 0 if self.exact else s <= TABLE_TOL

    def flat(self) -> list:
        return list(self.p.reshape(-1))


def joint_probs(exp: BipartiteExperiment) -> CorrelationTable:
    """Born rule ``Tr((Pi_a|x (x) Pi_b|y) S)``."""
    rho = exp.state.matrix
    p = np.empty((2, 2, 2, 2))
    for a, b, x, y in itertools.product(range(2), repeat=4):
        op = np.kron(exp.settings_l[x][a], exp.settings_r[y][b])
        p[a, b, x, y] = np.trace(op @ rho).real
    return CorrelationTable(p)


def chsh_values(t: CorrelationTable) -> list:
    """``sum s_xy E(x, y)`` for each sign pattern in :data:`CHSH_SIGNS`."""
    E = t.correlators()
    return [s[0] * E[0, 0] + s[1] * E[0, 1] + s[2] * E[1, 0] + s[3] * E[1, 1] for s in CHSH_SIGNS]


# --- local models -----------------------------------------------------------

# a local response function maps setting -> outcome; written as (out for 0, out for 1)
RESPONSES = tuple(itertools.product(range(2), repeat=2))


def deterministic_table(resp_l: tuple[int, int], resp_r: tuple[int, int]) -> CorrelationTable:
    p = np.zeros((2, 2, 2, 2), dtype=object)
    p[...] = Fraction(0)
    for x, y in itertools.product(range(2), repeat=2):
        p[resp_l[x], resp_r[y], x, y] = Fraction(1)
    return CorrelationTable(p)


@lru_cache(maxsize=1)
def local_vertices() -> tuple[tuple[tuple, tuple, CorrelationTable], ...]:
    """All 16 deterministic local strategies as ``(resp_l, resp_r, table)``."""
    return tuple((rl, rr, deterministic_table(rl, rr)) for rl in RESPONSES for rr in RESPONSES)


@lru_cache(maxsize=2)
def _vertex_matrix(exact: bool):
    cols = [v[2].flat() for v in local_vertices()]
    if exact:
        return tuple(tuple(row) for row in zip(*cols))
    return np.array(cols, dtype=float).T


def mixture_oracle(t: CorrelationTable) -> MixtureResult:
    """Is ``t`` a mixture of the 16 deterministic strategies? (LP feasibility)"""
    if t.exact:
        return exact_mixture(_vertex_matrix(True), t.flat())
    return float_mixture(_vertex_matrix(False), np.array(t.flat(), dtype=float), LP_TOL)


@dataclass(frozen=True)
class LocalModelVerdict:
    chsh_values: tuple
    max_abs_chsh: float
    locally_explainable: bool
    witness: tuple  # (overall sign, (s00, s01, s10, s11)) of the largest |CHSH|
    lp_feasible: bool
    lp_residual: float
    mixture: dict = field(default_factory=dict)  # "resp_l|resp_r" -> weight
    local_bound: int = LOCAL_BOUND

    @property
    def margin(self) -> float:
        return self.max_abs_chsh - self.local_bound

    @property
    def methods_agree(self) -> bool:
        return self.locally_explainable == self.lp_feasible


def local_model_check(t: CorrelationTable) -> LocalModelVerdict:
    if not t.is_nonsignaling():
        raise InapplicableError(f"table signals (marginal shift {float(t.signaling()):.3g}); "
                                "the local-model question presupposes no signaling")
    vals = chsh_values(t)
    k = max(range(len(vals)), key=lambda i: abs(vals[i]))
    top = vals[k]
    max_abs = float(abs(top))
    explainable = abs(top) <= LOCAL_BOUND if t.exact else max_abs <= LOCAL_BOUND + CHSH_TOL
    lp = mixture_oracle(t)
    mixture = {}
    if lp.feasible:
        for (rl, rr, _), w in zip(local_vertices(), lp.weights):
            if w > 0:
                mixture[f"{rl[0]}{rl[1]}|{rr[0]}{rr[1]}"] = float(w)
    return LocalModelVerdict(
        chsh_values=tuple(float(v) for v in vals),
        max_abs_chsh=max_abs,
        locally_explainable=bool(explainable),
        witness=(1 if top >= 0 else -1, CHSH_SIGNS[k]),
        lp_feasible=lp.feasible,
        lp_residual=lp.residual,
        mixture=mixture,
    )


def _combo_text(sign: int, signs: tuple) -> str:
    terms = []
    for s, xy in zip(signs, ("00", "01", "10", "11")):
        s *= sign
        terms.append(f"{'+' if s > 0 else '-'}E{xy}")
    return " ".join(terms).lstrip("+").strip()


def loc_report(v: LocalModelVerdict) -> dict:
    """Plain-language verdict; ``report["text"]`` is the human-readable form."""
    sign, signs = v.witness
    combo = _combo_text(sign, signs)
    boundary = abs(v.margin) <= CHSH_TOL
    lines = [f"max |CHSH| = {v.max_abs_chsh:.12g} (local bound {v.local_bound})",
             f"largest combination: {combo} <= {v.local_bound}"]
    if v.locally_explainable:
        lines.append("A local model exists: each region's outcome can be fixed by its own setting alone, "
                     "so the outcome in L is undisturbed by the choice made in R (LOC1/LOC3 hold).")
        if v.mixture:
            mix = ", ".join(f"{k}: {w:.6g}" for k, w in v.mixture.items())
            lines.append(f"one mixture of deterministic strategies (L responses|R responses): {mix}")
        if boundary:
            lines.append(f"boundary case: |CHSH| equals the bound within {CHSH_TOL:g}")
    else:
        lines.append("No local model exists: there is no assignment of outcomes in L that is independent "
                     "of the free choice in R reproducing these probabilities, so LOC1/LOC3 must fail.")
        lines.append(f"violated inequality: {combo} <= {v.local_bound}, margin {v.margin:.12g}")
    return {
        "locally_explainable": v.locally_explainable,
        "max_abs_chsh": v.max_abs_chsh,
        "local_bound": v.local_bound,
        "margin": v.margin,
        "boundary": boundary,
        "witness": {"sign": sign, "coefficients": list(signs), "text": combo},
        "mixture": v.mixture,
        "lp_feasible": v.lp_feasible,
        "text": "\n".join(lines),
    }


# --- random no-signaling tables (test generators) --------------------------


def pr_box(alpha: int, beta: int, gamma: int) -> np.ndarray:
    """``p(a,b|x,y) = 1/2`` iff ``a xor b = xy xor alpha x xor beta y xor gamma``."""
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in itertools.product(range(2), repeat=4):
        if a ^ b == (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma:
            p[a, b, x, y] = 0.5
    return p


def random_nonsignaling_table(rng: np.random.Generator) -> CorrelationTable:
    """Mixture of local vertices, PR boxes and white noise, weights random."""
    verts = np.array([v[2].p.astype(float) for v in local_vertices()])
    boxes = np.array([pr_box(*abg) for abg in itertools.product(range(2), repeat=3)])
    w_loc = rng.dirichlet(np.full(16, 0.3))
    w_box = rng.dirichlet(np.full(8, 0.05))
    lam = rng.uniform(0, 1)
    noise = rng.uniform(0, 0.2)
    p = (1 - noise) * ((1 - lam) * np.tensordot(w_loc, verts, 1) + lam * np.tensordot(w_box, boxes, 1)) \
        + noise * np.full((2, 2, 2, 2), 0.25)
    return CorrelationTable(p)


def random_qubit_experiment(rng: np.random.Generator) -> BipartiteExperiment:
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ dagger(g)
    state = DensityState(rho / np.trace(rho).real, (2, 2))

    def side():
        out = []
        for _ in range(2):
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            n = v[0] * SIGMA_X + v[1] * np.array([[0, -1j], [1j, 0]]) + v[2] * SIGMA_Z
            out.append(((np.eye(2) + n) / 2, (np.eye(2) - n) / 2))
        return tuple(out)

    return BipartiteExperiment(state, side(), side())
