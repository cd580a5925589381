"""Convex-mixture feasibility: is ``p`` a probability mixture of the columns of ``V``?

Two routes: an exact phase-I simplex over :class:`fractions.Fraction` for
rational data, and HiGHS (via scipy) for floating data, where the residual is
recomputed from the returned weights rather than trusted.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog


@dataclass(frozen=True)
class MixtureResult:
    feasible: bool
    weights: tuple | None  # one per column of V
    residual: float  # max-abs mismatch |V w - p| (0 in the exact route)


def _phase_one(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Find ``w >= 0`` with ``A w = b`` exactly, or return None. Bland's rule."""
    m, n = len(A), len(A[0])
    rows = []
    for i in range(m):
        sign = -1 if b[i] < 0 else 1
        rows.append([sign * a for a in A[i]] + [Fraction(int(i == k)) for k in range(m)] + [sign * b[i]])
    basis = [n + i for i in range(m)]
    width = n + m
    # reduced costs of min sum(artificials)
    cost = [Fraction(0)] * (width + 1)
    for r in rows:
        for j in range(width + 1):
            if j < n or j == width:
                cost[j] -= r[j]

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, r in enumerate(rows):
            if r[enter] > 0:
                ratio = r[-1] / r[enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # unbounded cannot happen in phase I
            return None
        i = best[1]
        piv = rows[i][enter]
        rows[i] = [v / piv for v in rows[i]]
        for k, r in enumerate(rows):
            if k != i and r[enter] != 0:
                f = r[enter]
                rows[k] = [a - f * c for a, c in zip(r, rows[i])]
        f = cost[enter]
        cost = [a - f * c for a, c in zip(cost, rows[i])]
        basis[i] = enter

    if -cost[-1] != 0:
        return None
    w = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            w[j] = rows[i][-1]
    return w


def exact_mixture(V: Sequence[Sequence], p: Sequence) -> MixtureResult:
    """``V`` has shape (d, k): k candidate points of dimension d."""
    V = [[Fraction(v) for v in row] for row in V]
    p = [Fraction(x) for x in p]
    A = V + [[Fraction(1)] * len(V[0])]
    b = p + [Fraction(1)]
    w = _phase_one(A, b)
    if w is None:
        return MixtureResult(False, None, float("nan"))
    return MixtureResult(True, tuple(w), 0.0)


def float_mixture(V, p, tol: float) -> MixtureResult:
    """Minimise ``t`` s.t. ``|V w - p| <= t`` entrywise, ``w >= 0``, ``sum w = 1``."""
    V = np.asarray(V, dtype=float)
    p = np.asarray(p, dtype=float)
    d, k = V.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    ones = np.ones((d, 1))
    A_ub = np.block([[V, -ones], [-V, -ones]])
    b_ub = np.concatenate([p, -p])
    A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (k + 1), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    w = np.clip(res.x[:k], 0.0, None)
    w /= w.sum()
    residual = float(np.max(np.abs(V @ w - p)))
    return MixtureResult(residual <= tol, tuple(w), residual)
