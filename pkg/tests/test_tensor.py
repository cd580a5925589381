import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from collapsesim.errors import ShapeError, SizeError, ValidationError
from collapsesim.tensor import (
    CompositeSpace,
    dagger,
    expectation,
    kron,
    max_abs,
    partial_trace,
    random_density,
    random_unitary,
    trace,
    unitary_from_hamiltonian,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def loop_partial_trace(m, dims, traced):
    """Index-by-index summation; deliberately shares no code with partial_trace."""
    keep = [i for i in range(len(dims)) if i not in traced]
    kept_dims = [dims[i] for i in keep]
    d = math.prod(kept_dims)
    out = np.zeros((d, d), dtype=complex)

    def flat(idx):
        f = 0
        for i, n in zip(idx, dims):
            f = f * n + i
        return f

    def kflat(idx):
        f = 0
        for i, n in zip(idx, kept_dims):
            f = f * n + i
        return f

    for row in itertools.product(*(range(n) for n in dims)):
        for col in itertools.product(*(range(n) for n in dims)):
            if any(row[t] != col[t] for t in traced):
                continue
            out[kflat([row[i] for i in keep]), kflat([col[i] for i in keep])] += m[flat(row), flat(col)]
    return out


class TestKron:
    def test_identities(self):
        np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_swap_blocks(self):
        # hand expansion: sigma_x (x) I_2 swaps the two 2x2 blocks
        expected = np.array([[0, 0, 1, 0],
                             [0, 0, 0, 1],
                             [1, 0, 0, 0],
                             [0, 1, 0, 0]])
        np.testing.assert_array_equal(kron(SX, np.eye(2)), expected)

    def test_scalar_factor(self, rng):
        m = rng.normal(size=(3, 3))
        np.testing.assert_allclose(kron([[2.0]], m), 2 * m)

    def test_left_factor_slowest(self):
        a = np.diag([1.0, 2.0])
        b = np.diag([10.0, 20.0])
        np.testing.assert_array_equal(np.diag(kron(a, b)).real, [10, 20, 20, 40])

    def test_size_cap(self):
        with pytest.raises(SizeError):
            kron(np.eye(4), np.eye(4), max_dim=8)

    def test_trace_and_dims(self, rng):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(4, 4))
        k = kron(a, b)
        assert k.shape == (12, 12)
        assert abs(trace(k) - trace(a) * trace(b)) <= 1e-12 * max(1, abs(trace(k)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError):
            kron([[np.nan]], [[1.0]])


class TestTrace:
    def test_identity(self):
        assert trace(np.eye(4)) == 4

    def test_diag(self):
        assert trace(np.diag([0.3, 0.7])) == pytest.approx(1.0, abs=1e-15)

    def test_cyclic(self, rng):
        for _ in range(20):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            assert abs(trace(a @ b) - trace(b @ a)) <= 1e-12

    def test_non_square(self):
        with pytest.raises(ShapeError):
            trace(np.ones((2, 3)))


class TestPartialTrace:
    def test_product_state(self, rng):
        ra, rb = random_density(3, rng), 2.5 * random_density(2, rng)
        out = partial_trace(np.kron(ra, rb), CompositeSpace((3, 2)), {1})
        np.testing.assert_allclose(out, np.trace(rb) * ra, atol=1e-14)

    @pytest.mark.parametrize("traced", [{0}, {1}])
    def test_bell_state(self, traced):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        out = partial_trace(np.outer(phi, phi), CompositeSpace((2, 2)), traced)
        np.testing.assert_allclose(out, np.eye(2) / 2, atol=1e-15)

    def test_all_factors(self, rng):
        m = random_density(12, rng)
        out = partial_trace(m, CompositeSpace((2, 3, 2)), {0, 1, 2})
        assert out.shape == (1, 1)
        assert abs(out[0, 0] - np.trace(m)) <= 1e-14

    @pytest.mark.parametrize("dims,traced", [((2, 3), {0}), ((2, 3, 2), {1}), ((2, 2, 2), {0, 2}),
                                             ((3, 2, 2), {2}), ((2, 3, 2), set())])
    def test_matches_loop_oracle(self, rng, dims, traced):
        d = math.prod(dims)
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        np.testing.assert_allclose(partial_trace(m, CompositeSpace(dims), traced),
                                   loop_partial_trace(m, dims, traced), atol=1e-12)

    def test_trace_preserved_random(self, rng):
        for _ in range(1000):
            k = int(rng.integers(1, 4))
            dims = tuple(int(rng.integers(1, 3)) for _ in range(k)) if k == 3 else \
                tuple(int(rng.integers(1, 5)) for _ in range(k))
            d = math.prod(dims)
            m = random_density(d, rng)
            traced = {i for i in range(k) if rng.random() < 0.5}
            out = partial_trace(m, CompositeSpace(dims), traced)
            assert abs(np.trace(out) - np.trace(m)) <= 1e-12

    def test_bad_index(self):
        with pytest.raises(IndexError):
            partial_trace(np.eye(4), CompositeSpace((2, 2)), {2})

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            partial_trace(np.eye(5), CompositeSpace((2, 2)), {0})


class TestExpectation:
    def test_identity(self, rng):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v /= np.linalg.norm(v)
        assert expectation(np.eye(3), v) == pytest.approx(1.0, abs=1e-15)

    def test_sigma_z(self):
        assert expectation(SZ, [1, 0]) == 1

    def test_sigma_x_plus(self):
        assert expectation(SX, np.array([1, 1]) / np.sqrt(2)) == pytest.approx(1.0, abs=1e-15)

    def test_hermitian_is_real(self, rng):
        for _ in range(100):
            h = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            h = h + dagger(h)
            v = rng.normal(size=5) + 1j * rng.normal(size=5)
            assert abs(expectation(h, v).imag) <= 1e-12

    def test_mismatch(self):
        with pytest.raises(ShapeError):
            expectation(np.eye(2), [1, 0, 0])


class TestUnitary:
    def test_zero_hamiltonian(self):
        np.testing.assert_allclose(unitary_from_hamiltonian(np.zeros((3, 3)), 1.7), np.eye(3), atol=1e-15)

    def test_diagonal(self):
        u = unitary_from_hamiltonian(np.diag([0.4, -1.3]), 2.0)
        np.testing.assert_allclose(u, np.diag(np.exp(-1j * np.array([0.4, -1.3]) * 2.0)), atol=1e-14)

    def test_sigma_x_quarter_turn(self):
        # cos(t) I - i sin(t) sigma_x at t = pi/2
        np.testing.assert_allclose(unitary_from_hamiltonian(SX, np.pi / 2), -1j * SX, atol=1e-14)

    def test_against_expm(self, rng):
        for d in (2, 3, 6):
            h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            h = h + dagger(h)
            np.testing.assert_allclose(unitary_from_hamiltonian(h, 0.37),
                                       scipy.linalg.expm(-1j * 0.37 * h), atol=1e-12)

    def test_non_hermitian(self):
        with pytest.raises(ValidationError):
            unitary_from_hamiltonian(np.array([[0, 1], [0, 0]]), 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.floats(-10, 10), st.integers(0, 2**32 - 1))
    def test_unitarity(self, d, t, seed):
        g = np.random.default_rng(seed)
        h = g.normal(size=(d, d)) + 1j * g.normal(size=(d, d))
        u = unitary_from_hamiltonian(h + dagger(h), t)
        assert max_abs(dagger(u) @ u - np.eye(d)) <= 1e-10


def test_composite_space():
    sp = CompositeSpace((2, 3, 4))
    assert sp.total_dim == 24
    assert sp.subspace([0, 2]).factor_dims == (2, 4)
    with pytest.raises(ValidationError):
        CompositeSpace((2, 0))


def test_random_unitary_is_unitary(rng):
    u = random_unitary(6, rng)
    assert max_abs(dagger(u) @ u - np.eye(6)) <= 1e-12
