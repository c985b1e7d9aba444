"""Pauli-word algebra with dense realization.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of the
computational basis index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable

import numpy as np

DROP_TOL = 1e-12
DENSE_QUBIT_CAP = 12

_LETTERS = "IXYZ"

# single-qubit products: (a, b) -> (phase, letter) with a.b = phase * letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class ResourceError(RuntimeError):
    """A dense realization would exceed the configured qubit cap."""


def _word_product(a: str, b: str) -> tuple[complex, str]:
    phase = 1 + 0j
    letters = []
    for x, y in zip(a, b):
        p, letter = _PRODUCT[(x, y)]
        phase *= p
        letters.append(letter)
    return phase, "".join(letters)


@dataclass(frozen=True)
class PauliSum:
    """Complex linear combination of Pauli words on ``n_qubits`` qubits.

    ``terms`` is a tuple of ``(coeff, word)`` pairs where ``word`` is a string
    over ``IXYZ`` of length ``n_qubits``.
    """

    n_qubits: int
    terms: tuple[tuple[complex, str], ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        terms = tuple((complex(c), str(w).upper()) for c, w in self.terms)
        for _, w in terms:
            if len(w) != self.n_qubits:
                raise DimensionError(f"word {w!r} does not have length {self.n_qubits}")
            if any(ch not in _LETTERS for ch in w):
                raise ValueError(f"invalid Pauli word {w!r}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, n_qubits: int, mapping: dict[str, complex]) -> PauliSum:
        return cls(n_qubits, tuple((c, w) for w, c in mapping.items()))

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, ((coeff, "I" * n_qubits),))

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits, ())

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str, coeff: complex = 1.0) -> PauliSum:
        """``coeff`` times ``letter`` acting on ``qubit``, identity elsewhere."""
        word = ["I"] * n_qubits
        word[qubit] = letter
        return cls(n_qubits, ((coeff, "".join(word)),))

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        _check_dims(self, other)
        return simplify(PauliSum(self.n_qubits, self.terms + other.terms))

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return multiply(self, other)
        return PauliSum(self.n_qubits, tuple((c * other, w) for c, w in self.terms))

    def __rmul__(self, scalar) -> PauliSum:
        return PauliSum(self.n_qubits, tuple((c * scalar, w) for c, w in self.terms))

    def __neg__(self) -> PauliSum:
        return (-1) * self

    def __matmul__(self, other: PauliSum) -> PauliSum:
        return kron(self, other)

    def is_hermitian(self, tol: float = DROP_TOL) -> bool:
        diff = simplify(self - dagger(self), tol)
        return len(diff) == 0

    def to_text(self) -> str:
        return format_pauli_sum(self)

    def __str__(self) -> str:
        return self.to_text() or f"0 ({self.n_qubits} qubits)"


def _check_dims(a: PauliSum, b: PauliSum) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def simplify(a: PauliSum, tol: float = DROP_TOL) -> PauliSum:
    """Merge like terms and drop those with ``|coeff| <= tol``.

    Terms are returned sorted by word so equal operators compare equal.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    acc: dict[str, complex] = {}
    for c, w in a.terms:
        acc[w] = acc.get(w, 0j) + c
    terms = tuple((c, w) for w, c in sorted(acc.items()) if abs(c) > tol)
    return PauliSum(a.n_qubits, terms)


def multiply(a: PauliSum, b: PauliSum, tol: float = DROP_TOL) -> PauliSum:
    _check_dims(a, b)
    terms = []
    for ca, wa in a.terms:
        for cb, wb in b.terms:
            phase, w = _word_product(wa, wb)
            terms.append((ca * cb * phase, w))
    return simplify(PauliSum(a.n_qubits, tuple(terms)), tol)


def dagger(a: PauliSum) -> PauliSum:
    return PauliSum(a.n_qubits, tuple((c.conjugate(), w) for c, w in a.terms))


def kron(a: PauliSum, b: PauliSum) -> PauliSum:
    """Tensor product with ``a`` on the leading (leftmost) qubits."""
    terms = tuple((ca * cb, wa + wb) for ca, wa in a.terms for cb, wb in b.terms)
    return simplify(PauliSum(a.n_qubits + b.n_qubits, terms))


def embed(a: PauliSum, n_qubits: int, offset: int) -> PauliSum:
    """Place ``a`` on qubits ``offset .. offset + a.n_qubits - 1`` of a larger register."""
    if offset < 0 or offset + a.n_qubits > n_qubits:
        raise DimensionError("embedding does not fit in the target register")
    left, right = "I" * offset, "I" * (n_qubits - offset - a.n_qubits)
    return PauliSum(n_qubits, tuple((c, left + w + right) for c, w in a.terms))


@lru_cache(maxsize=4096)
def word_matrix(word: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in word:
        out = np.kron(out, _MATRICES[ch])
    out.setflags(write=False)
    return out


def to_dense(a: PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    if a.n_qubits > cap:
        raise ResourceError(f"{a.n_qubits} qubits exceeds the dense cap of {cap}")
    dim = 2**a.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for c, w in a.terms:
        out += c * word_matrix(w)
    return out


def pauli_decompose(matrix: np.ndarray, tol: float = DROP_TOL) -> PauliSum:
    """Expand a ``2^n x 2^n`` matrix in the Pauli basis via ``Tr(P M) / 2^n``."""
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if matrix.shape != (dim, dim) or 2**n != dim:
        raise DimensionError("matrix must be square with power-of-two size")
    terms = []
    for letters in product(_LETTERS, repeat=n):
        w = "".join(letters)
        c = np.trace(word_matrix(w) @ matrix) / dim
        if abs(c) > tol:
            terms.append((complex(c), w))
    return PauliSum(n, tuple(terms))


_LINE = re.compile(r"^\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)\s+([IXYZixyz]+)$")


def _number(x: float) -> str:
    # shortest round-trip form, integers without a trailing ".0"
    if x == 0:
        return "0"
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def format_pauli_sum(a: PauliSum) -> str:
    """One ``(<re>,<im>) <letters>`` line per term, e.g. ``(0.5,0) XZ``."""
    return "\n".join(f"({_number(c.real)},{_number(c.imag)}) {w}" for c, w in a.terms)


def parse_pauli_sum(text: str | Iterable[str], n_qubits: int | None = None) -> PauliSum:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    terms = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise ValueError(f"cannot parse Pauli term {raw!r}")
        terms.append((complex(float(m.group(1)), float(m.group(2))), m.group(3).upper()))
    if n_qubits is None:
        if not terms:
            raise ValueError("empty PauliSum text needs an explicit n_qubits")
        n_qubits = len(terms[0][1])
    return PauliSum(n_qubits, tuple(terms))
