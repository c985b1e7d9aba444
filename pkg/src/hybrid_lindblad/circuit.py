"""Product-of-exponentials state preparation on a dense statevector."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .pauli import DimensionError, PauliSum, dagger, simplify, to_dense

GENERATOR_TERM_CAP = 4
GATE_COUNT_CAP = 64


@dataclass(frozen=True)
class Gate:
    """``exp(sign * i * z[param] * generator)``."""

    generator: PauliSum
    param: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("gate sign must be +1 or -1")
        if self.param < 0:
            raise ValueError("param index must be nonnegative")

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return len(simplify(self.generator - dagger(self.generator), tol)) == 0


@dataclass(frozen=True)
class Circuit:
    """Gates act on ``|init>`` in list order: ``gates[0]`` is applied first.

    Several gates may share a parameter slot.
    """

    n_qubits: int
    init: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 0 <= self.init < 2**self.n_qubits:
            raise ValueError(f"init index {self.init} out of range for {self.n_qubits} qubits")
        for g in self.gates:
            if g.generator.n_qubits != self.n_qubits:
                raise DimensionError("gate generator acts on the wrong number of qubits")
            if g.param >= self.n_params:
                raise ValueError(f"gate param {g.param} >= n_params {self.n_params}")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@lru_cache(maxsize=1024)
def _word_action(word: str) -> tuple[np.ndarray, np.ndarray]:
    # (P v)[j] = phase[j] * v[perm[j]]
    n = len(word)
    idx = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for q, ch in enumerate(word):
        shift = n - 1 - q
        bit = (idx >> shift) & 1
        if ch in "XY":
            flip |= 1 << shift
        if ch == "Y":
            phase *= np.where(bit == 1, -1j, 1j)
        elif ch == "Z":
            phase *= np.where(bit == 1, -1.0, 1.0)
    perm = idx ^ flip
    out_phase = phase[perm]
    perm.setflags(write=False)
    out_phase.setflags(write=False)
    return perm, out_phase


def apply_word(v: np.ndarray, word: str) -> np.ndarray:
    if v.shape[0] != 2 ** len(word):
        raise DimensionError(f"vector of length {v.shape[0]} vs {len(word)}-qubit word")
    perm, phase = _word_action(word)
    return phase * v[perm]


def apply_operator(v: np.ndarray, op: PauliSum) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape != (2**op.n_qubits,):
        raise DimensionError(f"vector of shape {v.shape} vs {op.n_qubits}-qubit operator")
    out = np.zeros_like(v)
    for c, w in op.terms:
        out += c * apply_word(v, w)
    return out


def _support(op: PauliSum) -> tuple[int, ...]:
    return tuple(sorted({q for _, w in op.terms for q, ch in enumerate(w) if ch != "I"}))


@lru_cache(maxsize=256)
def _restricted_generator(op: PauliSum) -> tuple[tuple[int, ...], np.ndarray, complex]:
    # generator = identity_coeff * I + (dense block on support qubits)
    support = _support(op)
    ident = 0j
    restricted = []
    for c, w in op.terms:
        if all(ch == "I" for ch in w):
            ident += c
        else:
            restricted.append((c, "".join(w[q] for q in support)))
    block = to_dense(PauliSum(len(support), tuple(restricted))) if support else np.zeros((1, 1))
    return support, block, ident


def apply_gate(v: np.ndarray, gate: Gate, theta: float) -> np.ndarray:
    """Apply ``exp(sign * i * theta * generator)`` to ``v``."""
    angle = gate.sign * theta
    gen = gate.generator
    if len(gen.terms) == 1:
        c, w = gen.terms[0]
        a = angle * c
        if all(ch == "I" for ch in w):
            return np.exp(1j * a) * v
        return np.cos(a) * v + 1j * np.sin(a) * apply_word(v, w)
    support, block, ident = _restricted_generator(gen)
    out = np.exp(1j * angle * ident) * v
    if not support:
        return out
    n = gen.n_qubits
    k = len(support)
    u = expm(1j * angle * block)
    rest = [q for q in range(n) if q not in support]
    t = out.reshape((2,) * n).transpose(list(support) + rest).reshape(2**k, -1)
    t = (u @ t).reshape((2,) * n)
    inverse = np.argsort(list(support) + rest)
    return t.transpose(inverse).reshape(-1)


def _check_params(c: Circuit, z: Sequence[float]) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (c.n_params,):
        raise DimensionError(f"expected {c.n_params} parameters, got shape {z.shape}")
    return z


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    v = np.zeros(2**n_qubits, dtype=complex)
    v[index] = 1.0
    return v


def prepare(c: Circuit, z: Sequence[float]) -> np.ndarray:
    z = _check_params(c, z)
    v = basis_state(c.n_qubits, c.init)
    for g in c.gates:
        v = apply_gate(v, g, z[g.param])
    return v


def derivative_components(
    c: Circuit, z: Sequence[float], slot: int
) -> list[tuple[complex, np.ndarray]]:
    """Split d|psi>/dz[slot] into ``sum_i weight_i * |phi_i>`` with unit-norm ``|phi_i>``.

    One component per (occurrence of ``slot``, Pauli term of that gate's
    generator); each ``|phi_i>`` is the circuit with a Pauli word inserted
    right after the differentiated gate, so it is what an overlap circuit
    would prepare.
    """
    z = _check_params(c, z)
    if not 0 <= slot < c.n_params:
        raise IndexError(f"slot {slot} out of range for {c.n_params} parameters")
    prefix = [basis_state(c.n_qubits, c.init)]
    for g in c.gates:
        prefix.append(apply_gate(prefix[-1], g, z[g.param]))
    comps = []
    for alpha, g in enumerate(c.gates):
        if g.param != slot:
            continue
        for coeff, word in g.generator.terms:
            v = apply_word(prefix[alpha + 1], word)
            for later in c.gates[alpha + 1:]:
                v = apply_gate(v, later, z[later.param])
            comps.append((g.sign * 1j * coeff, v))
    return comps


def derivative_state(c: Circuit, z: Sequence[float], slot: int) -> np.ndarray:
    out = np.zeros(c.dim, dtype=complex)
    for w, v in derivative_components(c, z, slot):
        out += w * v
    return out
