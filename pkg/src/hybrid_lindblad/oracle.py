"""Exact dense integration of the Lindblad master equation.

Vectorization is column stacking: ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum, to_dense


class IntegrationError(RuntimeError):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def dense_operators(model) -> tuple[np.ndarray, list[tuple[float, np.ndarray]]]:
    return to_dense(model.H), [(g, to_dense(L)) for g, L in model.jumps]


def apply_lindbladian(model, rho: np.ndarray) -> np.ndarray:
    """Term-by-term ``-i[H, rho] + sum_j g_j (L rho L^+ - {L^+ L, rho} / 2)``."""
    H, jumps = dense_operators(model)
    out = -1j * (H @ rho - rho @ H)
    for g, L in jumps:
        Ld = L.conj().T
        out += g * (L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L))
    return out


def liouvillian_matrix(model) -> np.ndarray:
    H, jumps = dense_operators(model)
    dim = H.shape[0]
    eye = np.eye(dim)
    sup = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for g, L in jumps:
        LdL = L.conj().T @ L
        sup += g * (np.kron(L.conj(), L) - 0.5 * (np.kron(eye, LdL) + np.kron(LdL.T, eye)))
    return sup


def rk4_propagator(sup: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step for the linear system ``y' = sup @ y``, as a matrix."""
    a = dt * sup
    eye = np.eye(sup.shape[0])
    a2 = a @ a
    a3 = a2 @ a
    return eye + a + a2 / 2 + a3 / 6 + a3 @ a / 24


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, dim, dim)
    hermiticity_defect: float = 0.0  # largest |rho - rho^+| entry before symmetrization

    def expectation(self, op: PauliSum) -> np.ndarray:
        return np.array([oracle_expectation(r, op) for r in self.states])


def _symmetrize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def propagate(
    rho0: np.ndarray,
    model,
    t_final: float,
    dt: float = 1e-4,
    output_every: int = 1,
) -> Trajectory:
    """RK4 on ``vec(rho)`` with a sample every ``output_every`` steps (and at t=0)."""
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    if output_every < 1:
        raise ValueError("output_every must be at least 1")
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not a multiple of dt={dt}")
    step = rk4_propagator(liouvillian_matrix(model), dt)
    y = vec(rho0)
    times = [0.0]
    states = [_symmetrize(rho0)]
    defect = float(np.max(np.abs(rho0 - rho0.conj().T)))
    for n in range(1, n_steps + 1):
        y = step @ y
        if n % output_every == 0:
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"non-finite density matrix at t={n * dt}")
            rho = unvec(y, dim)
            defect = max(defect, float(np.max(np.abs(rho - rho.conj().T))))
            times.append(n * dt)
            states.append(_symmetrize(rho))
    return Trajectory(np.array(times), np.array(states), defect)


def oracle_expectation(rho: np.ndarray, op: PauliSum, with_imag: bool = False):
    value = np.trace(rho @ to_dense(op))
    if with_imag:
        return float(value.real), float(abs(value.imag))
    return float(value.real)


def density_diagnostics(rho: np.ndarray) -> dict:
    """Trace, Hermiticity defect and smallest eigenvalue of ``rho``."""
    herm = 0.5 * (rho + rho.conj().T)
    return {
        "trace": float(np.trace(rho).real),
        "trace_imag": float(np.trace(rho).imag),
        "hermiticity": float(np.max(np.abs(rho - rho.conj().T))),
        "min_eigenvalue": float(np.linalg.eigvalsh(herm).min()),
    }
