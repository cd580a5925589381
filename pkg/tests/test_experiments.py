import math

import numpy as np
import pytest

from collapsesim.errors import ValidationError
from collapsesim.experiments import (
    SynapseParams,
    ZenoParams,
    exact_activation_rate,
    selection_advantage_mc,
    simulate_trial,
    synapse_estimates,
    zeno_closed_form,
    zeno_matrix_run,
)
from collapsesim.seeding import mix64, trial_engine

W_NO = 0.75 - 1 / math.sqrt(2)


def oracle_weights(x, y, z, c, s, collapsed):
    """Independent matrix product, written out from the model definition."""
    S = np.array([[x, z, 0], [np.conj(z), y, 0], [0, 0, 0]], dtype=complex)
    r = 1 / np.sqrt(2)
    U = np.array([[1, 0, 0], [0, r, r], [0, -r, r]], dtype=complex)
    M = np.array([[c, s, 0], [-np.conj(s), np.conj(c), 0], [0, 0, 1]], dtype=complex)
    P = np.diag([0, 1, 0]).astype(complex)
    if collapsed:
        Q = np.eye(3) - P
        S = P @ S @ P + Q @ S @ Q
    F = M @ U @ S @ U.conj().T @ M.conj().T
    return np.trace(P @ F).real


def random_params(rng):
    x, y = rng.uniform(0, 3, 2)
    z = np.sqrt(x * y) * rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    a = rng.normal(size=4)
    a /= np.linalg.norm(a)
    return ZenoParams(x=x, y=y, z=z, c=complex(a[0], a[1]), s=complex(a[2], a[3]))


class TestZeno:
    def test_golden_closed_form(self):
        assert zeno_closed_form(ZenoParams(), False) == pytest.approx(W_NO, abs=1e-12)
        assert zeno_closed_form(ZenoParams(), True) == pytest.approx(0.75, abs=1e-12)

    @pytest.mark.parametrize("collapsed,final", [(False, W_NO), (True, 0.75)])
    def test_golden_matrix(self, collapsed, final):
        w = zeno_matrix_run(ZenoParams(), collapsed)
        assert w.w_initial == pytest.approx(1.0, abs=1e-12)
        assert w.w_after_U == pytest.approx(0.5, abs=1e-12)
        assert w.w_final == pytest.approx(final, abs=1e-12)
        assert w.trace_S == pytest.approx(2.0, abs=1e-12)

    def test_x_only(self):
        p = ZenoParams(x=1, y=0, z=0)
        for collapsed in (False, True):
            assert zeno_closed_form(p, collapsed) == pytest.approx(0.5, abs=1e-12)
            assert zeno_matrix_run(p, collapsed).w_final == pytest.approx(0.5, abs=1e-12)

    def test_closed_form_vs_matrix(self, rng):
        for _ in range(1000):
            p = random_params(rng)
            for collapsed in (False, True):
                cf = zeno_closed_form(p, collapsed)
                assert abs(cf - zeno_matrix_run(p, collapsed).w_final) <= 1e-12
                assert abs(cf - oracle_weights(p.x, p.y, p.z, p.c, p.s, collapsed)) <= 1e-12

    def test_collapse_helps_on_diagonal(self, rng):
        for v in rng.uniform(0.01, 5, 50):
            p = ZenoParams(x=v, y=v, z=v)
            assert zeno_closed_form(p, True) >= zeno_closed_form(p, False)

    def test_validation(self):
        with pytest.raises(ValidationError):
            ZenoParams(c=1, s=1)
        with pytest.raises(ValidationError):
            ZenoParams(x=1, y=1, z=2)

    def test_exact_rates(self):
        assert exact_activation_rate(ZenoParams(), True) == pytest.approx(0.375, abs=1e-12)
        assert exact_activation_rate(ZenoParams(), False) == pytest.approx(W_NO / 2, abs=1e-12)


class TestSelection:
    def test_three_sigma(self):
        n = 100_000
        res = selection_advantage_mc(ZenoParams(), n, seed=2024)
        for rate, exact in ((res.rate_with_questions, 0.375), (res.rate_without, W_NO / 2)):
            assert abs(rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / n)
        assert res.rate_with_questions > res.rate_without

    def test_z_zero_arms_equal(self):
        n = 50_000
        res = selection_advantage_mc(ZenoParams(z=0), n, seed=5)
        assert res.exact_with_questions == pytest.approx(res.exact_without, abs=1e-12)
        pooled = (res.rate_with_questions + res.rate_without) / 2
        assert abs(res.rate_with_questions - res.rate_without) <= 3 * math.sqrt(2 * pooled * (1 - pooled) / n)

    def test_single_trial(self):
        for seed in range(20):
            res = selection_advantage_mc(ZenoParams(), 1, seed=seed)
            assert res.rate_with_questions in (0.0, 1.0)
            assert res.rate_without in (0.0, 1.0)

    def test_independent_of_workers_and_chunks(self):
        a = selection_advantage_mc(ZenoParams(), 30_000, seed=11)
        b = selection_advantage_mc(ZenoParams(), 30_000, seed=11, workers=4, chunk=777)
        assert a == b

    def test_slow_path_agrees(self):
        p = ZenoParams()
        n = 300
        fast = selection_advantage_mc(p, n, seed=8)
        for arm, with_q, rate in ((0, True, fast.rate_with_questions), (1, False, fast.rate_without)):
            arm_seed = mix64(8, arm)
            hits = sum(simulate_trial(p, with_q, trial_engine(arm_seed, k)) for k in range(n))
            assert hits / n == rate

    def test_rejects_zero_trials(self):
        with pytest.raises(ValidationError):
            selection_advantage_mc(ZenoParams(), 0)


class TestSynapse:
    def test_defaults(self):
        e = synapse_estimates()
        assert e.delta_v == pytest.approx(1.59, rel=0.01)
        assert e.velocity_ratio == pytest.approx(3.6e-3, rel=0.01)
        assert 1e-10 <= e.spread <= 4e-10
        assert e.branch_count == 1_048_576
        assert e.branch_log10 == 20 * math.log10(2)

    def test_hand_values(self):
        hbar, k = 1.054571817e-34, 1.380649e-23
        m, T = 6.642e-26, 310.0
        dv = hbar / (m * 1e-9)
        vth = math.sqrt(3 * k * T / m)
        e = synapse_estimates()
        assert e.delta_v == pytest.approx(dv, rel=1e-14)
        assert e.spread == pytest.approx(dv * 50e-9 / vth, rel=1e-14)

    def test_homogeneity(self):
        a = synapse_estimates()
        b = synapse_estimates(SynapseParams(ion_mass=2 * 6.642e-26))
        assert b.delta_v == a.delta_v / 2
        # spread = hbar d / (m D) * sqrt(m / 3kT) scales as m^-1/2
        assert b.spread == pytest.approx(a.spread / math.sqrt(2), rel=1e-14)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            SynapseParams(temperature=0)

    @pytest.mark.parametrize("n", [0, 1, 7, 64])
    def test_branch_log(self, n):
        assert synapse_estimates(SynapseParams(n_synapses=n)).branch_log10 == n * math.log10(2)
