"""Worked experiments: the three-state Zeno model, its selection Monte Carlo,
and the presynaptic calcium-ion estimates.

Zeno model, basis (1, 2, 3) -> indices (0, 1, 2)::

    S = [[x, z, 0], [z*, y, 0], [0, 0, 0]]
    U = [[1, 0, 0], [0, r, r], [0, -r, r]]          r = 2**-0.5
    M = [[c, s, 0], [-s*, c*, 0], [0, 0, 1]]        |c|^2 + |s|^2 = 1
    P = |2><2|

The readout after ``U`` then ``M`` is
``Tr(P M U S U^-1 M^-1) = x|s|^2 + y|c|^2/2 - z c s* r - z* c* s r``;
posing ``P`` before ``U`` zeroes ``z``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .process import Ask, Evolve, enumerate_outcomes, run_schedule
from .seeding import mix64, trial_uniforms
from .states import DensityState, Projector, RandomEngine, process_one, weight_yes

R = 2.0**-0.5

HBAR = 1.054571817e-34  # J s
K_BOLTZMANN = 1.380649e-23  # J / K
CALCIUM_40_MASS = 6.642e-26  # kg


@dataclass(frozen=True)
class ZenoParams:
    x: float = 1.0
    y: float = 1.0
    z: complex = 1.0
    c: complex = R
    s: complex = R

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValidationError("x and y must be >= 0")
        norm = abs(self.c) ** 2 + abs(self.s) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"|c|^2 + |s|^2 = {norm!r}, expected 1")
        if abs(self.z) ** 2 > self.x * self.y + 1e-12:
            raise ValidationError("S(x, y, z) is not positive semidefinite: |z|^2 > x*y")

    @property
    def r(self) -> float:
        return R


def zeno_closed_form(p: ZenoParams, collapsed: bool) -> float:
    z = 0.0 if collapsed else p.z
    c, s, r = p.c, p.s, R
    val = (p.x * np.conj(s) * s + p.y * np.conj(c) * c / 2
           - z * c * np.conj(s) * r - np.conj(z) * np.conj(c) * s * r)
    return float(np.real(val))


def zeno_matrices(p: ZenoParams) -> dict[str, np.ndarray]:
    z, c, s, r = complex(p.z), complex(p.c), complex(p.s), R
    S = np.array([[p.x, z, 0], [np.conj(z), p.y, 0], [0, 0, 0]], dtype=np.complex128)
    U = np.array([[1, 0, 0], [0, r, r], [0, -r, r]], dtype=np.complex128)
    M = np.array([[c, s, 0], [-np.conj(s), np.conj(c), 0], [0, 0, 1]], dtype=np.complex128)
    P = np.diag([0, 1, 0]).astype(np.complex128)
    return {"S": S, "U": U, "M": M, "P": P}


@dataclass(frozen=True)
class ZenoWeights:
    w_initial: float
    w_after_U: float
    w_final: float
    trace_S: float


def zeno_matrix_run(p: ZenoParams, collapsed: bool) -> ZenoWeights:
    """Raw weights ``Tr(PS)``, ``Tr(PUSU^-1)``, ``Tr(PMUSU^-1M^-1)``."""
    m = zeno_matrices(p)
    state = DensityState(m["S"])
    proj = Projector(m["P"], name="P")
    if collapsed:
        state = process_one(state, proj)
    w0 = weight_yes(state, proj)
    state = state.conjugated(m["U"])
    w1 = weight_yes(state, proj)
    state = state.conjugated(m["M"])
    return ZenoWeights(w0, w1, weight_yes(state, proj), state.weight)


# --- selection advantage ---------------------------------------------------

ARM_WITH, ARM_WITHOUT = 0, 1


def zeno_schedule(p: ZenoParams, with_question: bool) -> list:
    m = zeno_matrices(p)
    proj = Projector(m["P"], name="P")
    steps = [Evolve(m["U"], name="U"), Evolve(m["M"], name="M"), Ask(proj)]
    return [Ask(proj)] + steps if with_question else steps


def simulate_trial(p: ZenoParams, with_question: bool, rng: RandomEngine) -> bool:
    """One protocol run through :class:`ProcessTrace`; True if the final answer is yes."""
    m = zeno_matrices(p)
    trace = run_schedule(DensityState(m["S"]), zeno_schedule(p, with_question), rng)
    return trace.events[-1].answer == "yes"


def exact_activation_rate(p: ZenoParams, with_question: bool) -> float:
    m = zeno_matrices(p)
    branches = enumerate_outcomes(DensityState(m["S"]), zeno_schedule(p, with_question))
    return sum(b.probability for b in branches if b.answers[-1] == "yes")


def _conditional_probs(p: ZenoParams, with_question: bool) -> tuple[float, float, float]:
    """``(p_first_yes, p_final_yes | first yes, p_final_yes | first no)``.

    Without the pre-U question only the first slot of the result is used, and
    it holds the unconditional final yes-probability.
    """
    m = zeno_matrices(p)
    branches = enumerate_outcomes(DensityState(m["S"]), zeno_schedule(p, with_question))
    if not with_question:
        return exact_activation_rate(p, False), 0.0, 0.0
    first = {"yes": 0.0, "no": 0.0}
    final_yes = {"yes": 0.0, "no": 0.0}
    for b in branches:
        first[b.answers[0]] += b.probability
        if b.answers[-1] == "yes":
            final_yes[b.answers[0]] += b.probability
    cond = {a: (final_yes[a] / first[a] if first[a] > 0 else 0.0) for a in first}
    return first["yes"], cond["yes"], cond["no"]


def _count_yes(probs, with_question: bool, arm_seed: int, start: int, stop: int) -> int:
    p1, p_yes, p_no = probs
    if not with_question:
        u = trial_uniforms(arm_seed, start, stop, 1)
        return int(np.count_nonzero(u[:, 0] < p1))
    u = trial_uniforms(arm_seed, start, stop, 2)
    first_yes = u[:, 0] < p1
    final = np.where(first_yes, u[:, 1] < p_yes, u[:, 1] < p_no)
    return int(np.count_nonzero(final))


@dataclass(frozen=True)
class SelectionResult:
    n_trials: int
    rate_with_questions: float
    rate_without: float
    exact_with_questions: float
    exact_without: float


def selection_advantage_mc(p: ZenoParams, n_trials: int, seed: int = 0,
                           workers: int = 1, chunk: int = 65536) -> SelectionResult:
    """Monte Carlo of the motor-activation rate with and without the pre-U question.

    Trial ``k`` of arm ``a`` draws from ``trial_engine(mix64(seed, a), k)``;
    its uniforms are consumed in protocol order (first question, then the
    final readout), so :func:`simulate_trial` fed that engine reproduces the
    same answer. Counts are independent of ``workers`` and ``chunk``.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    bounds = [(a, min(a + chunk, n_trials)) for a in range(0, n_trials, chunk)]
    rates = []
    for arm, with_q in ((ARM_WITH, True), (ARM_WITHOUT, False)):
        probs = _conditional_probs(p, with_q)
        arm_seed = mix64(seed, arm)
        jobs = [(probs, with_q, arm_seed, a, b) for a, b in bounds]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                counts = list(pool.map(lambda j: _count_yes(*j), jobs))
        else:
            counts = [_count_yes(*j) for j in jobs]
        rates.append(sum(counts) / n_trials)
    return SelectionResult(n_trials, rates[0], rates[1],
                           exact_activation_rate(p, True), exact_activation_rate(p, False))


# --- presynaptic calcium estimates ----------------------------------------


@dataclass(frozen=True)
class SynapseParams:
    ion_mass: float = CALCIUM_40_MASS  # kg
    temperature: float = 310.0  # K
    channel_diameter: float = 1e-9  # m
    travel_distance: float = 50e-9  # m
    n_synapses: int = 20

    def __post_init__(self):
        for name in ("ion_mass", "temperature", "channel_diameter", "travel_distance"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if self.n_synapses < 0:
            raise ValidationError("n_synapses must be >= 0")


@dataclass(frozen=True)
class SynapseEstimates:
    delta_v: float  # m/s
    v_thermal: float  # m/s
    velocity_ratio: float
    transit_time: float  # s
    spread: float  # m
    branch_log10: float
    branch_count: int


def synapse_estimates(p: SynapseParams = SynapseParams()) -> SynapseEstimates:
    """Heisenberg velocity spread at the channel exit and the resulting packet spread.

    ``delta_v = hbar / (m d)``; thermal speed is the 3-D RMS ``sqrt(3kT/m)``;
    transit is ballistic at the thermal speed.
    """
    delta_v = HBAR / (p.ion_mass * p.channel_diameter)
    v_th = math.sqrt(3.0 * K_BOLTZMANN * p.temperature / p.ion_mass)
    transit = p.travel_distance / v_th
    return SynapseEstimates(
        delta_v=delta_v,
        v_thermal=v_th,
        velocity_ratio=delta_v / v_th,
        transit_time=transit,
        spread=delta_v * transit,
        branch_log10=p.n_synapses * math.log10(2),
        branch_count=2**p.n_synapses,
    )
