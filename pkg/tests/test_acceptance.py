"""Acceptance criteria, each at its stated tolerance. A PASS/FAIL line per criterion
is printed in the terminal summary."""
import itertools
import math
import time

import numpy as np

from collapsesim.cli import main
from collapsesim.experiments import ZenoParams, selection_advantage_mc, synapse_estimates, SynapseParams, \
    zeno_closed_form, zeno_matrix_run
from collapsesim.lattice import LatticeConfig, config_space_exponent, config_space_log10, gestalt_collapse, \
    lift_to_superposition, pattern_projector
from collapsesim.nonlocality import chsh_values, joint_probs, local_model_check, local_vertices, \
    random_nonsignaling_table, singlet_chsh_experiment
from collapsesim.states import DensityState, Projector, entropy, invariance_check, \
    process_one, prob_yes, vn_equivalence_check, weight_yes
from collapsesim.tensor import CompositeSpace, kron, max_abs, partial_trace, random_density, random_projector, \
    random_unitary

from test_cli import PRESETS
from test_states import random_good_system


def test_c01_zeno_golden_numbers():
    t0 = time.perf_counter()
    p = ZenoParams()
    no, yes = zeno_matrix_run(p, False), zeno_matrix_run(p, True)
    for w in (no, yes):
        assert abs(w.w_initial - 1.0) <= 1e-12
        assert abs(w.w_after_U - 0.5) <= 1e-12
    assert abs(no.w_final - (0.75 - 1 / math.sqrt(2))) <= 1e-12
    assert abs(yes.w_final - 0.75) <= 1e-12
    assert abs(zeno_closed_form(p, False) - no.w_final) <= 1e-12
    assert abs(zeno_closed_form(p, True) - yes.w_final) <= 1e-12
    assert time.perf_counter() - t0 < 1.0


def test_c02_entropy_jump():
    s = DensityState.pure(np.array([1, 1]) / math.sqrt(2))
    p = Projector(np.diag([1.0, 0.0]))
    assert abs(prob_yes(s, p) - 0.5) <= 1e-15
    assert entropy(s) <= 1e-10
    assert abs(entropy(process_one(s, p)) - math.log(2)) <= 1e-10


def test_c03_quasi_locality():
    g = np.random.default_rng(3)
    for _ in range(500):
        da, db = (int(v) for v in g.integers(1, 5, 2))
        sp = CompositeSpace((da, db))
        s = DensityState(random_density(da * db, g), sp)
        p = Projector(kron(random_projector(da, g), np.eye(db)), sp)
        env_before = partial_trace(s.matrix, sp, {0})
        env_after = partial_trace(process_one(s, p).matrix, sp, {0})
        assert max_abs(env_after - env_before) <= 1e-12


def test_c04_conservation_and_invariance():
    g = np.random.default_rng(4)
    for _ in range(1000):
        d = int(g.integers(1, 17))
        s = DensityState(random_density(d, g) * g.uniform(0.1, 10))
        p = Projector(random_projector(d, g))
        assert abs(weight_yes(s, p) + weight_yes(s, p.complement()) - s.weight) <= 1e-12
    for _ in range(500):
        d = int(g.integers(2, 9))
        k = int(g.integers(1, d))
        basis = random_unitary(d, g)
        p = Projector(basis[:, :k] @ basis[:, :k].conj().T)
        block = np.zeros((d, d), dtype=complex)
        block[:k, :k] = random_unitary(k, g)
        block[k:, k:] = random_unitary(d - k, g)
        u = basis @ block @ basis.conj().T
        rep = invariance_check(DensityState(random_density(d, g)), p, u)
        assert rep.commutes
        assert abs(rep.prob_before - rep.prob_after) <= 1e-12


def test_c05_good_measurement_equivalence():
    g = np.random.default_rng(5)
    for _ in range(200):
        ds, de = int(g.integers(2, 5)), int(g.integers(3, 5))
        n = int(g.integers(2, de + 1))
        rep = vn_equivalence_check(random_good_system(g, ds=ds, de=de, n=n, k=int(g.integers(1, n))))
        assert rep.applicable
        assert rep.max_deviation <= 1e-10
    for _ in range(200):
        d = int(g.integers(1, 9))
        u = random_unitary(d, g)
        s = DensityState(u @ np.diag(g.uniform(0.01, 1, d)) @ u.conj().T)
        p = Projector(u @ np.diag((g.random(d) < 0.5).astype(float)) @ u.conj().T)
        assert max_abs(process_one(s, p).matrix - s.matrix) <= 1e-12


def test_c06_synapse_estimates():
    e = synapse_estimates()
    assert 1.4 <= e.delta_v <= 1.7
    assert 3e-3 <= e.velocity_ratio <= 7e-3
    assert 0.1e-9 <= e.spread <= 0.4e-9
    for n in range(0, 65):
        assert synapse_estimates(SynapseParams(n_synapses=n)).branch_log10 == n * math.log10(2)


def test_c07_lattice_scaling_and_gestalt():
    paper = LatticeConfig(1000, 1000, 1000, fields=3, values=1000)
    base, exponent = config_space_exponent(paper)
    assert base == 10**3 and exponent * 3 == 9 * 10**9
    assert config_space_log10(paper) == 9 * 10**9
    cfg = LatticeConfig(nx=2, ny=2)
    pattern = {(0, 0): 1, (1, 0): 0, (0, 1): 1, (1, 1): 1}
    out = gestalt_collapse(lift_to_superposition(cfg), pattern_projector(cfg, pattern), np.random.default_rng(7))
    matches = sum(all(bits[2 * x + y] == v for (x, y), v in pattern.items())
                  for bits in itertools.product((0, 1), repeat=4))
    assert matches == 1
    assert abs(out.probability_yes - matches / 16) <= 1e-12
    assert abs(out.probability_yes - 1 / 16) <= 1e-12


def test_c08_nonlocality():
    v = local_model_check(joint_probs(singlet_chsh_experiment()))
    assert abs(v.max_abs_chsh - 2 * math.sqrt(2)) <= 1e-9
    assert not v.locally_explainable and not v.lp_feasible
    assert len(local_vertices()) == 16
    assert max(max(abs(c) for c in chsh_values(t)) for *_, t in local_vertices()) == 2
    g = np.random.default_rng(8)
    for _ in range(1000):
        assert local_model_check(random_nonsignaling_table(g)).methods_agree


def test_c09_selection_advantage():
    t0 = time.perf_counter()
    n = 10**5
    res = selection_advantage_mc(ZenoParams(), n, seed=0)
    elapsed = time.perf_counter() - t0
    exact_with, exact_without = 0.375, (0.75 - 1 / math.sqrt(2)) / 2
    assert abs(res.exact_with_questions - exact_with) <= 1e-12
    assert abs(res.exact_without - exact_without) <= 1e-12
    for rate, q in ((res.rate_with_questions, exact_with), (res.rate_without, exact_without)):
        assert abs(rate - q) <= 3 * math.sqrt(q * (1 - q) / n)
    assert res.rate_with_questions > res.rate_without
    assert elapsed < 10.0


def test_c10_cli_determinism(capsys):
    for argv in PRESETS:
        for fmt in ("json", "csv"):
            outs = []
            for workers in ("1", "1", "2", "8"):
                assert main(argv + ["--seed", "987654321", "--format", fmt, "--workers", workers]) == 0
                outs.append(capsys.readouterr().out.encode())
            assert len(set(outs)) == 1, argv
