"""McLachlan equations of motion for the outer-product density-matrix ansatz.

The state is ``rho = sum_jk B[j, k] |psi_j><psi_k|`` with each ``|psi_k>``
prepared by a parametrized circuit. One derivative evaluation runs

1. ``S`` and its regularized inverse,
2. ``C`` and ``Y``,
3. ``z_dot = Re(C^+ Y)``,
4. ``tau`` from ``z_dot``,
5. ``Lmat``,
6. ``B_dot = S^+ Lmat S^+ - (S^+ tau B + B tau^+ S^+)``,

where every scalar is obtained through an :class:`Estimator`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .circuit import Circuit, prepare
from .estimator import Estimator, Exact, Ket, KetSet
from .oracle import IntegrationError, apply_lindbladian
from .pauli import PauliSum, dagger, multiply, to_dense

log = logging.getLogger(__name__)

DEFAULT_REL_CUTOFF = 1e-8
# singular values at or below this are treated as exact zeros
ABS_CUTOFF = 1e-12


class DegenerateStateError(ValueError):
    pass


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus ``(rate, jump operator)`` pairs."""

    H: PauliSum
    jumps: tuple[tuple[float, PauliSum], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((float(g), L) for g, L in self.jumps))
        for _, L in self.jumps:
            if L.n_qubits != self.H.n_qubits:
                raise ValueError("jump operator and Hamiltonian act on different registers")

    @property
    def n_qubits(self) -> int:
        return self.H.n_qubits

    @property
    def active_jumps(self) -> list[tuple[float, PauliSum, PauliSum]]:
        """Nonzero-rate jumps as ``(rate, L, L^+ L)``."""
        return [(g, L, multiply(dagger(L), L)) for g, L in self.jumps if g != 0.0]


@dataclass
class AnsatzState:
    circuits: tuple[Circuit, ...]
    z: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.circuits = tuple(self.circuits)
        self.z = np.asarray(self.z, dtype=float).copy()
        self.B = np.asarray(self.B, dtype=complex).copy()
        n = len(self.circuits)
        if n == 0:
            raise ValueError("ansatz needs at least one circuit")
        if self.B.shape != (n, n):
            raise ValueError(f"B must be {n}x{n}, got {self.B.shape}")
        if self.z.shape != (sum(c.n_params for c in self.circuits),):
            raise ValueError("z length does not match the circuits' parameter slots")
        if len({c.n_qubits for c in self.circuits}) != 1:
            raise ValueError("all circuits must act on the same register")
        self._offsets = [0] + list(np.cumsum([c.n_params for c in self.circuits]))

    @property
    def N(self) -> int:
        return len(self.circuits)

    @property
    def n_qubits(self) -> int:
        return self.circuits[0].n_qubits

    def params(self, k: int) -> np.ndarray:
        return self.z[self._offsets[k]:self._offsets[k + 1]]

    def param_index(self) -> list[tuple[int, int]]:
        """Flat parameter index -> (circuit, slot)."""
        return [(k, a) for k, c in enumerate(self.circuits) for a in range(c.n_params)]

    def kets(self) -> list[Ket]:
        return [Ket(c, self.params(k)) for k, c in enumerate(self.circuits)]

    def states(self) -> np.ndarray:
        """Columns are ``|psi_k>``."""
        return np.stack([prepare(c, self.params(k)) for k, c in enumerate(self.circuits)], axis=1)

    def copy(self) -> AnsatzState:
        return AnsatzState(self.circuits, self.z, self.B)


class RegularizedSolve(NamedTuple):
    x: np.ndarray
    discarded: int
    residual_flag: bool


def regularized_pinv(A: np.ndarray, rel_cutoff: float = DEFAULT_REL_CUTOFF) -> tuple[np.ndarray, int]:
    """Truncated-SVD pseudoinverse; also returns the number of discarded singular values."""
    A = np.asarray(A, dtype=complex)
    u, s, vh = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    keep = s > max(rel_cutoff * smax, ABS_CUTOFF)
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = (vh.conj().T * inv_s) @ u.conj().T
    return pinv, int(s.size - keep.sum())


def solve_regularized(A, rhs, rel_cutoff: float = DEFAULT_REL_CUTOFF) -> RegularizedSolve:
    """Minimum-norm least-squares solve discarding singular values below
    ``rel_cutoff`` times the largest one.

    ``residual_flag`` is set when the discarded directions leave a residual,
    e.g. an all-zero ``A`` with a nonzero right-hand side.
    """
    A = np.asarray(A, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    pinv, discarded = regularized_pinv(A, rel_cutoff)
    x = pinv @ rhs
    resid = np.linalg.norm(A @ x - rhs)
    flag = bool(resid > max(1e-6 * np.linalg.norm(rhs), ABS_CUTOFF))
    return RegularizedSolve(x, discarded, flag)


@dataclass
class EomMatrices:
    S: np.ndarray
    tau: np.ndarray
    Lmat: np.ndarray
    C: np.ndarray
    Y: np.ndarray


class ElementTable:
    """Blocks of matrix elements for one derivative evaluation, each estimated once.

    ``plain(op)[k, p] = <psi_k|O|psi_p>``, ``bra_derivative(op)[i, p] =
    <d psi_i|O|psi_p>`` over the flat parameter index ``i``, and
    ``metric()[i, j] = <d psi_i|d psi_j>``.
    """

    def __init__(self, state: AnsatzState, model: LindbladModel | None, estimator: Estimator, label=()):
        self.state = state
        self.estimator = estimator
        self.label = tuple(label)
        self.kets = KetSet(state.kets())
        self.dkets = KetSet(Ket(state.circuits[k], state.params(k), a) for k, a in state.param_index())
        self.ops: dict[str, PauliSum | None] = {"1": None}
        self.hermitian = {"1": True}
        self.jumps: list[tuple[float, str, str]] = []
        if model is not None:
            self.ops["H"] = model.H
            self.hermitian["H"] = True
            for j, (g, L, LdL) in enumerate(model.active_jumps):
                self.ops[f"L{j}"] = L
                self.ops[f"LL{j}"] = LdL
                self.hermitian[f"L{j}"] = False
                self.hermitian[f"LL{j}"] = True
                self.jumps.append((g, f"L{j}", f"LL{j}"))
        self._cache: dict = {}

    def _block(self, kind: str, op: str, bras, kets, hermitian: bool) -> np.ndarray:
        key = (kind, op)
        if key not in self._cache:
            self._cache[key] = self.estimator.block(
                bras, self.ops[op], kets, self.label + (kind, op), hermitian=hermitian
            )
        return self._cache[key]

    def plain(self, op: str) -> np.ndarray:
        return self._block("plain", op, self.kets, self.kets, self.hermitian[op])

    def bra_derivative(self, op: str) -> np.ndarray:
        return self._block("dbra", op, self.dkets, self.kets, False)

    def metric(self) -> np.ndarray:
        return self._block("metric", "1", self.dkets, self.dkets, True)


def _table(state, model, estimator, label=()) -> ElementTable:
    return ElementTable(state, model, estimator or Estimator(Exact()), label)


def assemble_s(state: AnsatzState, estimator: Estimator | None = None, table=None) -> np.ndarray:
    table = table or _table(state, None, estimator)
    return table.plain("1")


def assemble_l(
    state: AnsatzState, model: LindbladModel, estimator: Estimator | None = None, table=None, S=None
) -> np.ndarray:
    """``Lmat[k, l] = <psi_k| L(rho) |psi_l>`` from H, L_j and L_j^+ L_j elements."""
    if model.n_qubits != state.n_qubits:
        raise ValueError("model and ansatz act on different registers")
    table = table or _table(state, model, estimator)
    S = assemble_s(state, table=table) if S is None else S
    B = state.B
    Hm = table.plain("H")
    out = -1j * (Hm @ B @ S - S @ B @ Hm)
    for g, lname, llname in table.jumps:
        Lm = table.plain(lname)
        Mm = table.plain(llname)
        out += g * (Lm @ B @ Lm.conj().T - 0.5 * (Mm @ B @ S + S @ B @ Mm))
    return out


def _bra_lindbladian(table: ElementTable, S: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Lam[i, l] = <d psi_i| L(rho) |psi_l>
    D1 = table.bra_derivative("1")
    Hm = table.plain("H")
    out = -1j * (table.bra_derivative("H") @ B @ S - D1 @ B @ Hm)
    for g, lname, llname in table.jumps:
        Lm = table.plain(lname)
        Mm = table.plain(llname)
        DL = table.bra_derivative(lname)
        DM = table.bra_derivative(llname)
        out += g * (DL @ B @ Lm.conj().T - 0.5 * (DM @ B @ S + D1 @ B @ Mm))
    return out


def assemble_c_y(
    state: AnsatzState,
    model: LindbladModel,
    S_inv: np.ndarray,
    estimator: Estimator | None = None,
    table=None,
    S=None,
    Lmat=None,
) -> tuple[np.ndarray, np.ndarray]:
    table = table or _table(state, model, estimator)
    S = assemble_s(state, table=table) if S is None else S
    Lmat = assemble_l(state, model, table=table, S=S) if Lmat is None else Lmat
    B = state.B
    owner = np.array([k for k, _ in state.param_index()], dtype=int)
    D1 = table.bra_derivative("1")
    proj = D1 @ S_inv
    weight = B @ S @ B  # weight for C[(k,a),(l,b)] is BSB[l, k]
    C = (table.metric() - proj @ D1.conj().T) * weight[np.ix_(owner, owner)].T
    inner = _bra_lindbladian(table, S, B) - proj @ Lmat  # (n_params, N), indexed [i, l]
    Y = np.einsum("il,li->i", inner, B[:, owner])
    return C, Y


def assemble_tau(state: AnsatzState, z_dot, estimator: Estimator | None = None, table=None) -> np.ndarray:
    """``tau[k, l] = sum_slots z_dot * <psi_k| d psi_l / dz>``."""
    z_dot = np.asarray(z_dot, dtype=float)
    if z_dot.shape != state.z.shape:
        raise ValueError("z_dot length mismatch")
    n = state.N
    tau = np.zeros((n, n), dtype=complex)
    if not np.any(z_dot):
        return tau
    table = table or _table(state, None, estimator)
    D1 = table.bra_derivative("1")  # D1[i, k] = <d psi_i|psi_k>
    for i, (l, _) in enumerate(state.param_index()):
        tau[:, l] += z_dot[i] * D1[i].conj()
    return tau


def b_dot(S_inv: np.ndarray, Lmat: np.ndarray, tau: np.ndarray, B: np.ndarray) -> np.ndarray:
    return S_inv @ Lmat @ S_inv - (S_inv @ tau @ B + B @ tau.conj().T @ S_inv)


@dataclass
class Derivative:
    B_dot: np.ndarray
    z_dot: np.ndarray
    eom: EomMatrices
    diagnostics: dict = field(default_factory=dict)


def evaluate(
    state: AnsatzState,
    model: LindbladModel,
    estimator: Estimator | None = None,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
    label=(),
) -> Derivative:
    estimator = estimator or Estimator(Exact())
    table = ElementTable(state, model, estimator, label)
    S = assemble_s(state, table=table)
    S_inv, s_discarded = regularized_pinv(S, rel_cutoff)
    Lmat = assemble_l(state, model, table=table, S=S)
    C, Y = assemble_c_y(state, model, S_inv, table=table, S=S, Lmat=Lmat)
    sol = solve_regularized(C, Y, rel_cutoff)
    z_dot = sol.x.real
    tau = assemble_tau(state, z_dot, table=table)
    Bd = b_dot(S_inv, Lmat, tau, state.B)
    diag = {
        "im_zdot": float(np.linalg.norm(sol.x.imag)),
        "s_discarded": s_discarded,
        "c_discarded": sol.discarded,
        "c_residual_flag": sol.residual_flag,
    }
    return Derivative(Bd, z_dot, EomMatrices(S, tau, Lmat, C, Y), diag)


def density_matrix(state: AnsatzState) -> np.ndarray:
    psi = state.states()
    return psi @ state.B @ psi.conj().T


def expectation(state: AnsatzState, op: PauliSum, with_imag: bool = False):
    """``Tr(rho O) / Tr(rho)``."""
    rho = density_matrix(state)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise DegenerateStateError("density matrix has (near) zero trace")
    value = np.trace(rho @ to_dense(op)) / tr
    if with_imag:
        return float(value.real), float(abs(value.imag))
    return float(value.real)


def rho_dot(state: AnsatzState, B_dot: np.ndarray, z_dot: np.ndarray) -> np.ndarray:
    """Dense time derivative of the realized density matrix."""
    psi = state.states()
    psi_dot = np.zeros_like(psi)
    for i, (k, a) in enumerate(state.param_index()):
        if z_dot[i] != 0.0:
            psi_dot[:, k] += z_dot[i] * Ket(state.circuits[k], state.params(k), a).vector
    B = state.B
    return psi @ B_dot @ psi.conj().T + psi_dot @ B @ psi.conj().T + psi @ B @ psi_dot.conj().T


def frobenius_residual(state: AnsatzState, model: LindbladModel, deriv: Derivative) -> float:
    """``||rho_dot - L(rho)||_F`` evaluated densely."""
    target = apply_lindbladian(model, density_matrix(state))
    return float(np.linalg.norm(rho_dot(state, deriv.B_dot, deriv.z_dot) - target))


def _pack(B: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.concatenate([B.real.ravel(), B.imag.ravel(), z])


def _unpack(y: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    nb = n * n
    B = (y[:nb] + 1j * y[nb:2 * nb]).reshape(n, n)
    return B, y[2 * nb:]


INTEGRATORS = ("euler", "rk4")


@dataclass
class StepResult:
    state: AnsatzState
    diagnostics: dict


def step(
    state: AnsatzState,
    model: LindbladModel,
    dt: float,
    estimator: Estimator | None = None,
    integrator: str = "rk4",
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
    label=(),
    residual: bool = False,
) -> StepResult:
    """Advance ``(B, z)`` by ``dt``; B is re-symmetrized afterwards.

    The returned diagnostics describe the first derivative evaluation, i.e.
    the state at the start of the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")
    estimator = estimator or Estimator(Exact())
    n = state.N
    first: list[Derivative] = []

    def f(y, stage):
        B, z = _unpack(y, n)
        s = replace(state, B=B, z=z) if stage else state
        d = evaluate(s, model, estimator, rel_cutoff, tuple(label) + (stage,))
        if not (np.all(np.isfinite(d.B_dot)) and np.all(np.isfinite(d.z_dot))):
            raise IntegrationError(f"non-finite derivative at stage {stage}")
        if stage == 0:
            first.append(d)
        return _pack(d.B_dot, d.z_dot)

    y0 = _pack(state.B, state.z)
    if integrator == "euler":
        y1 = y0 + dt * f(y0, 0)
    else:
        k1 = f(y0, 0)
        k2 = f(y0 + 0.5 * dt * k1, 1)
        k3 = f(y0 + 0.5 * dt * k2, 2)
        k4 = f(y0 + dt * k3, 3)
        y1 = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    B1, z1 = _unpack(y1, n)
    new = AnsatzState(state.circuits, z1, 0.5 * (B1 + B1.conj().T))
    diag = dict(first[0].diagnostics)
    if residual:
        diag["residual"] = frobenius_residual(state, model, first[0])
    return StepResult(new, diag)


def state_diagnostics(state: AnsatzState) -> dict:
    rho = density_matrix(state)
    herm = 0.5 * (rho + rho.conj().T)
    return {
        "trace": float(np.trace(rho).real),
        "min_eigenvalue": float(np.linalg.eigvalsh(herm).min()),
    }


@dataclass
class Record:
    step: int
    t: float
    state: AnsatzState
    diagnostics: dict


def evolve(
    state: AnsatzState,
    model: LindbladModel,
    t_final: float,
    dt: float,
    estimator: Estimator | None = None,
    integrator: str = "rk4",
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
    output_every: int = 1,
    residual: bool | None = None,
    callback: Callable[[Record], None] | None = None,
) -> list[Record]:
    """Integrate to ``t_final``; one :class:`Record` per output instant, t=0 included.

    Per-step diagnostics describe the state at the start of that step, so the
    final record reuses the diagnostics of a trailing evaluation.
    """
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    estimator = estimator or Estimator(Exact())
    if residual is None:
        residual = estimator.exact
    n_steps = int(np.floor(t_final / dt + 1e-9))
    records = []

    def emit(n, s, diag):
        rec = Record(n, n * dt, s, {**diag, **state_diagnostics(s), "t": n * dt})
        records.append(rec)
        if callback:
            callback(rec)

    current = state
    for n in range(n_steps):
        res = step(current, model, dt, estimator, integrator, rel_cutoff, label=(n,), residual=residual)
        if n % output_every == 0:
            emit(n, current, res.diagnostics)
        current = res.state
    if n_steps % output_every == 0:
        d = evaluate(current, model, estimator, rel_cutoff, label=(n_steps, 0))
        diag = dict(d.diagnostics)
        if residual:
            diag["residual"] = frobenius_residual(current, model, d)
        emit(n_steps, current, diag)
    log.debug("evolved %d steps, %d records", n_steps, len(records))
    return records
