import math

import numpy as np
import pytest

from hybrid_lindblad.circuit import Circuit, Gate
from hybrid_lindblad.estimator import (
    Estimator,
    Exact,
    Ket,
    Shots,
    derivative_element,
    matrix_element,
    overlap,
    sample_hadamard,
)
from hybrid_lindblad.models import SIGMA_MINUS, SIGMA_PLUS, build_dephasing
from hybrid_lindblad.pauli import DimensionError, PauliSum, multiply

Z = PauliSum(1, ((1.0, "Z"),))
X = PauliSum(1, ((1.0, "X"),))


def phase(init, sign=1):
    return Circuit(1, init, (Gate(Z, 0, sign),), 1)


def xrot(init):
    return Circuit(1, init, (Gate(X, 0),), 1)


@pytest.mark.parametrize("z1,z2", [(0.0, 0.0), (1.0, 1.0), (0.3, -2.0)])
def test_orthogonal_dephasing_states(z1, z2):
    assert overlap((phase(0), [z1]), (phase(1), [z2])) == 0


def test_damping_overlap():
    v = overlap((phase(0), [0.0]), (xrot(1), [math.pi / 4]))
    assert abs(v - 1j / math.sqrt(2)) < 1e-14


def test_self_overlap_is_one():
    a = (xrot(0), [0.7])
    assert abs(overlap(a, a) - 1) < 1e-15


def test_matrix_elements():
    assert matrix_element((phase(0), [0.0]), Z, (phase(0), [0.0])) == 1
    sc = build_dephasing()
    k1, k2 = sc.ansatz.kets()
    assert matrix_element(k1, Z, k2) == 0
    v = matrix_element((xrot(1), [math.pi / 4]), multiply(SIGMA_PLUS, SIGMA_MINUS), (xrot(1), [math.pi / 4]))
    assert abs(v - 0.5) < 1e-14


def test_derivative_elements():
    z = 0.8
    v = derivative_element(Ket(phase(0), [z], 0), None, (phase(0), [z]))
    assert abs(v - (-1j)) < 1e-14
    assert derivative_element(Ket(phase(0), [z], 0), None, (phase(1), [z])) == 0
    with pytest.raises(ValueError):
        derivative_element((phase(0), [z]), None, (phase(0), [z]))


def test_qubit_mismatch():
    two = Circuit(2, 0, (), 0)
    with pytest.raises(DimensionError):
        overlap((phase(0), [0.0]), (two, []))
    with pytest.raises(DimensionError):
        matrix_element((phase(0), [0.0]), PauliSum(2, ((1.0, "ZZ"),)), (phase(0), [0.0]))


def test_conjugate_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = (xrot(rng.integers(2)), [rng.uniform(-3, 3)])
        b = (phase(rng.integers(2)), [rng.uniform(-3, 3)])
        assert abs(overlap(a, b) - np.conj(overlap(b, a))) < 1e-12


def test_sampling_clamps_out_of_range_values():
    rng = np.random.default_rng(0)
    assert sample_hadamard(1.5 - 2j, 10, rng) == 1 - 1j


def test_shot_statistics():
    theta = math.acos(0.6)
    a, b = (xrot(0), [theta]), (xrot(0), [0.0])
    v = overlap(a, b).real
    n = 10_000
    est = np.array([overlap(a, b, Shots(n, seed)).real for seed in range(200)])
    sigma = math.sqrt((1 - v**2) / n)
    assert abs(est.mean() - v) < 4 * sigma / math.sqrt(200)
    assert sigma / 1.5 <= est.std(ddof=1) <= 1.5 * sigma


def test_shots_reproducible_and_label_dependent():
    a, b = (xrot(0), [0.4]), (xrot(1), [1.1])
    e1, e2 = Estimator(Shots(100, seed=7)), Estimator(Shots(100, seed=7))
    assert e1.overlap(a, b, label=("S", 0, 1)) == e2.overlap(a, b, label=("S", 0, 1))
    different = {Estimator(Shots(100, seed=7)).overlap(a, b, label=("S", i)) for i in range(10)}
    assert len(different) > 1


def test_weighted_sum_spends_shots_per_term():
    op = PauliSum(1, ((0.5, "X"), (0.25, "Z"), (1.0, "I")))
    est = Estimator(Shots(50, seed=1))
    est.matrix_element((xrot(0), [0.2]), op, (xrot(0), [0.2]), label=("x",))
    assert est.estimates == 3


def test_exact_block_matches_elements():
    kets = [Ket(xrot(0), [0.3]), Ket(phase(1), [0.9]), Ket(xrot(1), [-0.4])]
    est = Estimator(Exact())
    M = est.block(kets, Z, kets)
    for i, a in enumerate(kets):
        for j, b in enumerate(kets):
            assert abs(M[i, j] - est.matrix_element(a, Z, b)) < 1e-14


def test_shot_block_hermitian_mirror():
    kets = [Ket(xrot(0), [0.3]), Ket(xrot(1), [0.9])]
    M = Estimator(Shots(1000, seed=2)).block(kets, None, kets, label=("S",), hermitian=True)
    np.testing.assert_array_equal(M, M.conj().T)
