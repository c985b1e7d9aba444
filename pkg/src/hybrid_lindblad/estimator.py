"""Overlap and matrix-element evaluation, exact or with emulated shot noise.

In shot mode every estimated overlap is a unit-bounded complex number ``v``
between two prepared states; its real and imaginary parts are each drawn as
``n_shots`` Bernoulli outcomes with success probability ``(1 + v) / 2``,
which is the outcome statistics of a Hadamard test.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Hashable, Sequence, Union

import numpy as np

from .circuit import Circuit, apply_operator, apply_word, derivative_components, prepare
from .pauli import DimensionError, PauliSum, to_dense


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Shots:
    n_shots: int
    seed: int = 0

    def __post_init__(self):
        if self.n_shots < 1:
            raise ValueError("n_shots must be at least 1")


EstimatorMode = Union[Exact, Shots]


@dataclass(frozen=True, eq=False)
class Ket:
    """A prepared state ``U(z)|init>`` or, with ``slot`` set, its derivative d/dz[slot]."""

    circuit: Circuit
    z: tuple[float, ...]
    slot: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(x) for x in self.z))
        if len(self.z) != self.circuit.n_params:
            raise DimensionError(f"expected {self.circuit.n_params} parameters, got {len(self.z)}")
        if self.slot is not None and not 0 <= self.slot < self.circuit.n_params:
            raise IndexError(f"slot {self.slot} out of range")

    @cached_property
    def components(self) -> list[tuple[complex, np.ndarray]]:
        if self.slot is None:
            return [(1.0 + 0j, prepare(self.circuit, self.z))]
        return derivative_components(self.circuit, self.z, self.slot)

    @cached_property
    def vector(self) -> np.ndarray:
        out = np.zeros(self.circuit.dim, dtype=complex)
        for w, v in self.components:
            out += w * v
        return out


KetLike = Union[Ket, tuple]


class KetSet(tuple):
    """Tuple of kets with a cached column-stacked matrix of their vectors."""

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.stack([k.vector for k in self], axis=1)


def as_ket(k: KetLike) -> Ket:
    if isinstance(k, Ket):
        return k
    return Ket(*k)


@lru_cache(maxsize=64)
def _dense(op: PauliSum) -> np.ndarray:
    return to_dense(op)


def _label_entropy(seed: int, label: Sequence[Hashable]) -> list[int]:
    words = [seed & 0xFFFFFFFFFFFFFFFF]
    for item in label:
        if isinstance(item, (int, np.integer)) and item >= 0:
            words.append(int(item))
        else:
            words.append(zlib.crc32(repr(item).encode()))
    return words


def sample_hadamard(value: complex, n_shots: int, rng: np.random.Generator) -> complex:
    """Estimate Re and Im of a unit-bounded ``value`` from ``n_shots`` outcomes each."""
    parts = []
    for v in (value.real, value.imag):
        p = (1.0 + min(max(v, -1.0), 1.0)) / 2.0
        parts.append(2.0 * rng.binomial(n_shots, p) / n_shots - 1.0)
    return complex(parts[0], parts[1])


@dataclass
class Estimator:
    """Evaluates ``<a|O|b>`` for kets and derivative kets.

    ``label`` arguments name the estimated quantity; in shot mode the random
    stream is derived from ``(seed, label)``, so results do not depend on call
    order. Unlabelled calls fall back to a running call counter.
    """

    mode: EstimatorMode = field(default_factory=Exact)
    calls: int = 0
    estimates: int = 0

    @property
    def exact(self) -> bool:
        return isinstance(self.mode, Exact)

    def _label(self, label):
        self.calls += 1
        return ("call", self.calls) if label is None else tuple(label)

    def element(self, bra: KetLike, op: PauliSum | None, ket: KetLike, label=None) -> complex:
        bra, ket = as_ket(bra), as_ket(ket)
        if bra.circuit.n_qubits != ket.circuit.n_qubits:
            raise DimensionError("bra and ket act on different qubit counts")
        if op is not None and op.n_qubits != ket.circuit.n_qubits:
            raise DimensionError("operator acts on the wrong number of qubits")
        label = self._label(label)
        if self.exact:
            v = ket.vector if op is None else apply_operator(ket.vector, op)
            return complex(np.vdot(bra.vector, v))
        terms = ((1.0 + 0j, None),) if op is None else op.terms
        total = 0j
        index = 0
        for wa, a in bra.components:
            for wb, b in ket.components:
                for c, word in terms:
                    v = complex(np.vdot(a, b if word is None else apply_word(b, word)))
                    rng = np.random.default_rng(
                        np.random.SeedSequence(_label_entropy(self.mode.seed, label + (index,)))
                    )
                    total += np.conj(wa) * wb * c * sample_hadamard(v, self.mode.n_shots, rng)
                    self.estimates += 1
                    index += 1
        return total

    def block(
        self,
        bras: Sequence[Ket],
        op: PauliSum | None,
        kets: Sequence[Ket],
        label=(),
        hermitian: bool = False,
    ) -> np.ndarray:
        """Matrix ``M[i, j] = <bras[i]|O|kets[j]>``.

        With ``hermitian=True`` (same bras and kets, Hermitian ``O``) only the
        upper triangle is estimated and mirrored, with a real diagonal.
        """
        label = tuple(label)
        if self.exact:
            bv = bras.matrix if isinstance(bras, KetSet) else KetSet(bras).matrix
            kv = kets.matrix if isinstance(kets, KetSet) else KetSet(kets).matrix
            if op is not None:
                kv = _dense(op) @ kv
            self.calls += len(bras) * len(kets)
            return bv.conj().T @ kv
        M = np.zeros((len(bras), len(kets)), dtype=complex)
        for i, b in enumerate(bras):
            for j in range(i if hermitian else 0, len(kets)):
                M[i, j] = self.element(b, op, kets[j], label + (i, j))
                if hermitian:
                    M[j, i] = np.conj(M[i, j])
            if hermitian:
                M[i, i] = M[i, i].real
        return M

    def overlap(self, a: KetLike, b: KetLike, label=None) -> complex:
        return self.element(a, None, b, label)

    def matrix_element(self, a: KetLike, op: PauliSum, b: KetLike, label=None) -> complex:
        return self.element(a, op, b, label)

    def derivative_element(
        self, a: KetLike, op: PauliSum | None, b: KetLike, label=None
    ) -> complex:
        """``<d psi_a / dz[slot]| O |psi_b>``; ``a`` must carry a slot."""
        a = as_ket(a)
        if a.slot is None:
            raise ValueError("derivative_element needs a bra with a parameter slot")
        return self.element(a, op, b, label)


def overlap(a: KetLike, b: KetLike, mode: EstimatorMode | None = None, label=None) -> complex:
    return Estimator(mode or Exact()).overlap(a, b, label)


def matrix_element(
    a: KetLike, op: PauliSum, b: KetLike, mode: EstimatorMode | None = None, label=None
) -> complex:
    return Estimator(mode or Exact()).matrix_element(a, op, b, label)


def derivative_element(
    a: KetLike, op: PauliSum | None, b: KetLike, mode: EstimatorMode | None = None, label=None
) -> complex:
    return Estimator(mode or Exact()).derivative_element(a, op, b, label)
