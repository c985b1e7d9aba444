import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_lindblad.circuit import Circuit, Gate, apply_operator, derivative_state, prepare
from hybrid_lindblad.models import boson_ops, build_jaynes_cummings
from hybrid_lindblad.pauli import DimensionError, PauliSum, to_dense
from reference import dense, dket, finite_difference, ket

Z = PauliSum(1, ((1.0, "Z"),))
X = PauliSum(1, ((1.0, "X"),))


def one_gate(gen, init=0, sign=1):
    return Circuit(1, init, (Gate(gen, 0, sign),), 1)


def test_phase_gate_on_eigenstate():
    np.testing.assert_allclose(prepare(one_gate(Z), [1.0]), [np.exp(1j), 0], atol=1e-14)


def test_x_rotation_from_one():
    v = prepare(one_gate(X, init=1), [math.pi / 4])
    np.testing.assert_allclose(v, np.array([1j, 1]) / math.sqrt(2), atol=1e-14)


def test_jaynes_cummings_circuit_at_zero_is_identity():
    sc = build_jaynes_cummings()
    for k, circ in enumerate(sc.ansatz.circuits):
        v = prepare(circ, [0.0])
        expected = np.zeros(circ.dim)
        expected[circ.init] = 1.0
        np.testing.assert_allclose(v, expected, atol=1e-14)
    assert [c.init for c in sc.ansatz.circuits] == [4, 5]  # |10>|0> and |10>|1>


def test_parameter_length_checked():
    with pytest.raises(DimensionError):
        prepare(one_gate(Z), [0.1, 0.2])


def test_phase_derivative():
    z = 0.37
    np.testing.assert_allclose(derivative_state(one_gate(Z), [z], 0), [1j * np.exp(1j * z), 0], atol=1e-14)


def test_shared_parameter_product_rule():
    circ = Circuit(1, 0, (Gate(Z, 0), Gate(Z, 0)), 1)
    z = 0.21
    np.testing.assert_allclose(derivative_state(circ, [z], 0), [2j * np.exp(2j * z), 0], atol=1e-14)


def test_bad_slot():
    with pytest.raises(IndexError):
        derivative_state(one_gate(Z), [0.0], 1)


def test_apply_operator_examples():
    np.testing.assert_allclose(apply_operator(np.array([1, 0], complex), X), [0, 1])
    plus = np.array([1, 1], complex) / math.sqrt(2)
    proj = PauliSum(1, ((0.5, "I"), (0.5, "Z")))
    np.testing.assert_allclose(apply_operator(plus, proj), [1 / math.sqrt(2), 0], atol=1e-15)
    _, _, N = boson_ops(4)
    v = np.zeros(4, complex)
    v[2] = 1.0
    np.testing.assert_allclose(apply_operator(v, N), 2 * v, atol=1e-14)


def test_gate_validation():
    assert not Gate(PauliSum(1, ((1j, "Z"),)), 0).is_hermitian()
    with pytest.raises(ValueError):
        Gate(Z, 0, sign=2)
    with pytest.raises(ValueError):
        Circuit(1, 0, (Gate(Z, 3),), 1)
    with pytest.raises(ValueError):
        Circuit(1, 2, (Gate(Z, 0),), 1)


@st.composite
def random_circuits(draw):
    n = draw(st.integers(1, 3))
    n_params = draw(st.integers(1, 3))
    n_gates = draw(st.integers(1, 6))
    gates = []
    for _ in range(n_gates):
        n_terms = draw(st.integers(1, 4))
        words = [draw(st.text(alphabet="IXYZ", min_size=n, max_size=n)) for _ in range(n_terms)]
        cs = [draw(st.floats(-1.5, 1.5, allow_nan=False)) for _ in range(n_terms)]
        gates.append(Gate(PauliSum(n, tuple(zip(cs, words))), draw(st.integers(0, n_params - 1)),
                          draw(st.sampled_from([1, -1]))))
    circ = Circuit(n, draw(st.integers(0, 2**n - 1)), tuple(gates), n_params)
    z = [draw(st.floats(-math.pi, math.pi, allow_nan=False)) for _ in range(n_params)]
    return circ, z


@settings(max_examples=150, deadline=None)
@given(random_circuits())
def test_prepare_matches_dense_and_is_normalized(case):
    circ, z = case
    v = prepare(circ, z)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    np.testing.assert_allclose(v, ket(circ, z), atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(random_circuits())
def test_derivative_matches_finite_difference(case):
    circ, z = case
    for slot in range(circ.n_params):
        d = derivative_state(circ, z, slot)
        np.testing.assert_allclose(d, finite_difference(circ, z, slot), atol=1e-8)
        np.testing.assert_allclose(d, dket(circ, z, slot), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(random_circuits(), st.integers(0, 2**31))
def test_apply_operator_matches_dense(case, seed):
    circ, _ = case
    rng = np.random.default_rng(seed)
    v = rng.normal(size=circ.dim) + 1j * rng.normal(size=circ.dim)
    for g in circ.gates:
        np.testing.assert_allclose(apply_operator(v, g.generator), dense(g.generator) @ v, atol=1e-12)
        np.testing.assert_allclose(to_dense(g.generator), dense(g.generator), atol=1e-15)
