"""Hybrid variational simulation of Lindblad dynamics with an outer-product ansatz."""

from .circuit import Circuit, Gate, apply_operator, derivative_state, prepare
from .estimator import Estimator, Exact, Ket, Shots
from .models import PRESETS, Scenario, boson_ops, preset, validate
from .oracle import liouvillian_matrix, oracle_expectation, propagate
from .pauli import PauliSum, dagger, multiply, simplify, to_dense
from .tdvp import AnsatzState, LindbladModel, evaluate, evolve, expectation, step

__version__ = "0.1.0"
