"""Two-times bookkeeping: unitary segments in real time, questions in process time.

A :class:`ProcessTrace` advances its real ("mathematical") time only through
unitary segments and its integer process index only through posed
questions, so the history plots as a flight of steps.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError, ValidationError
from .states import Answer, DensityState, Projector, RandomEngine, heisenberg_collapse, prob_yes, reduce_to
from .tensor import as_matrix, is_unitary, unitary_from_hamiltonian

RAW_UNITARY_DURATION = 1.0
# branches lighter than this (relative to the root weight) are pruned
BRANCH_FLOOR = 1e-14


@dataclass(frozen=True)
class Event:
    process_index: int  # index *after* the jump
    math_time: float
    projector: str
    answer: Answer
    prob_yes: float
    weight_before: float
    weight_after: float


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    unitary: str


class ProcessTrace:
    def __init__(self, state: DensityState, t0: float = 0.0):
        self.initial_state = state
        self.current_state = state
        self.t0 = float(t0)
        self.math_time = float(t0)
        self.process_index = 0
        self.events: list[Event] = []
        self.segments: list[Segment] = []
        self._path: list[tuple[float, int]] = [(self.t0, 0)]

    def evolve_segment(self, u=None, *, hamiltonian=None, dt: float | None = None, name: str = "") -> "ProcessTrace":
        """``S -> U S U^dagger``; real time advances by ``dt`` (1.0 for a bare unitary)."""
        if (u is None) == (hamiltonian is None):
            raise ValidationError("give exactly one of a unitary or a hamiltonian")
        if hamiltonian is not None:
            if dt is None or dt < 0:
                raise ValidationError("a hamiltonian segment needs dt >= 0")
            u = unitary_from_hamiltonian(hamiltonian, dt)
            name = name or "exp(-iHt)"
        else:
            u = as_matrix(u, "unitary")
            if not is_unitary(u):
                raise ValidationError("segment operator is not unitary within 1e-10")
            if dt is None:
                dt = RAW_UNITARY_DURATION
            elif dt < 0:
                raise ValidationError("dt must be >= 0")
            name = name or "U"
        if u.shape[0] != self.current_state.dim:
            raise ShapeError(f"unitary dim {u.shape[0]} != state dim {self.current_state.dim}")

        self.current_state = self.current_state.conjugated(u)
        t_end = self.math_time + float(dt)
        self.segments.append(Segment(self.math_time, t_end, name))
        self.math_time = t_end
        self._extend_horizontal()
        return self

    def pose_question(self, p: Projector, rng: RandomEngine) -> "ProcessTrace":
        before = self.current_state.weight
        outcome = heisenberg_collapse(self.current_state, p, rng)
        self._record(p, outcome.answer, outcome.probability_yes, before, outcome.post_state)
        return self

    def force_answer(self, p: Projector, answer: Answer) -> "ProcessTrace":
        """Take a given branch instead of sampling one (outcome-tree enumeration)."""
        before = self.current_state.weight
        py = prob_yes(self.current_state, p)
        self._record(p, answer, py, before, reduce_to(self.current_state, p, answer))
        return self

    def _record(self, p, answer, py, before, post):
        self.process_index += 1
        self.current_state = post
        self.events.append(Event(self.process_index, self.math_time, p.name or "P",
                                 answer, py, before, post.weight))
        self._path.append((self.math_time, self.process_index))

    def _extend_horizontal(self):
        t, i = self._path[-1]
        if self.math_time == t:
            return
        if len(self._path) >= 2 and self._path[-2][1] == i:
            self._path[-1] = (self.math_time, i)
        else:
            self._path.append((self.math_time, i))

    def staircase_export(self) -> list[tuple[float, int]]:
        """Corner points of the staircase, starting at ``(t0, 0)``."""
        return list(self._path)

    def staircase_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "i"])
        for t, i in self._path:
            w.writerow([format(t, ".12g"), i])
        return buf.getvalue()

    def staircase_json(self) -> str:
        return json.dumps([{"t": float(format(t, ".12g")), "i": i} for t, i in self._path])

    def event_log(self) -> list[dict]:
        return [asdict(e) for e in self.events]


# --- schedules and outcome trees ------------------------------------------


@dataclass(frozen=True)
class Evolve:
    u: np.ndarray
    dt: float | None = None
    name: str = "U"


@dataclass(frozen=True)
class Ask:
    p: Projector


Step = Evolve | Ask


def run_schedule(state: DensityState, schedule: Sequence[Step], rng: RandomEngine) -> ProcessTrace:
    trace = ProcessTrace(state)
    for step in schedule:
        if isinstance(step, Ask):
            trace.pose_question(step.p, rng)
        else:
            trace.evolve_segment(step.u, dt=step.dt, name=step.name)
    return trace


@dataclass(frozen=True)
class Branch:
    answers: tuple[Answer, ...]
    probability: float
    final_state: DensityState


def enumerate_outcomes(state: DensityState, schedule: Sequence[Step]) -> list[Branch]:
    """Every answer sequence with its path probability (zero-weight branches dropped)."""
    branches: list[Branch] = []

    def walk(s: DensityState, k: int, answers: tuple, weight0: float):
        if k == len(schedule):
            branches.append(Branch(answers, s.weight / weight0, s))
            return
        step = schedule[k]
        if isinstance(step, Evolve):
            walk(s.conjugated(step.u), k + 1, answers, weight0)
            return
        py = prob_yes(s, step.p)
        for ans, pr in (("yes", py), ("no", 1.0 - py)):
            if pr * s.weight <= BRANCH_FLOOR * weight0:
                continue
            walk(reduce_to(s, step.p, ans), k + 1, answers + (ans,), weight0)

    walk(state, 0, (), state.weight)
    return branches

