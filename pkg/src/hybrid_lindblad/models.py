"""The four example open systems and the boson-to-qubit encoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .circuit import GATE_COUNT_CAP, GENERATOR_TERM_CAP, Circuit, Gate
from .pauli import PauliSum, dagger, embed, format_pauli_sum, kron, parse_pauli_sum, simplify
from .tdvp import AnsatzState, LindbladModel, density_matrix

# |out><in| for a single qubit
_PROJECTORS = {
    (0, 0): ((0.5, "I"), (0.5, "Z")),
    (1, 1): ((0.5, "I"), (-0.5, "Z")),
    (0, 1): ((0.5, "X"), (0.5j, "Y")),
    (1, 0): ((0.5, "X"), (-0.5j, "Y")),
}


def n_boson_qubits(d_trunc: int) -> int:
    return max(1, math.ceil(math.log2(d_trunc)))


def transition(out_state: int, in_state: int, n_qubits: int) -> PauliSum:
    """``|out><in|`` on a big-endian binary register, expanded bit by bit."""
    result = None
    for q in range(n_qubits):
        shift = n_qubits - 1 - q
        bits = ((out_state >> shift) & 1, (in_state >> shift) & 1)
        factor = PauliSum(1, _PROJECTORS[bits])
        result = factor if result is None else kron(result, factor)
    return simplify(result)


def boson_ops(d_trunc: int) -> tuple[PauliSum, PauliSum, PauliSum]:
    """Truncated ``(a, a^+, N)`` on ``ceil(log2 d_trunc)`` qubits."""
    if d_trunc < 2:
        raise ValueError("d_trunc must be at least 2")
    k = n_boson_qubits(d_trunc)
    a_dag = PauliSum.zero(k)
    for s in range(d_trunc - 1):
        a_dag = a_dag + math.sqrt(s + 1) * transition(s + 1, s, k)
    a = dagger(a_dag)
    return a, a_dag, simplify(a_dag * a)


SIGMA_PLUS = PauliSum(1, ((0.5, "X"), (0.5j, "Y")))  # |0><1|
SIGMA_MINUS = PauliSum(1, ((0.5, "X"), (-0.5j, "Y")))  # |1><0|


@dataclass
class Scenario:
    name: str
    model: LindbladModel
    ansatz: AnsatzState
    observable: PauliSum
    params: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    def rho0(self) -> np.ndarray:
        """Trace-normalized initial density matrix realized by the ansatz."""
        rho = density_matrix(self.ansatz)
        return rho / np.trace(rho)


def _phase_circuit(n_qubits, init, gens, sign) -> Circuit:
    return Circuit(n_qubits, init, tuple(Gate(g, 0, sign) for g in gens), 1)


def _check_rate(name, value):
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")


def build_dephasing(omega0: float = 1.0, gamma: float = 1.5, z0=(1.0, 1.0), gate_sign: int = -1) -> Scenario:
    """sigma_z dephasing of a qubit with ``H = omega0/2 sigma_z``.

    ``gate_sign=-1`` writes the phase gates as ``exp(-i z sigma_z)``, so the
    realized coherence is ``rho_01 ~ exp(-i(z1 + z2))`` and
    ``<sigma_x>(t) = exp(-2 gamma t) cos(omega0 t + z1 + z2)``.
    """
    _check_rate("gamma", gamma)
    Z = PauliSum(1, ((1.0, "Z"),))
    model = LindbladModel(0.5 * omega0 * Z, ((gamma, Z),))
    circuits = (_phase_circuit(1, 0, [Z], gate_sign), _phase_circuit(1, 1, [Z], gate_sign))
    ansatz = AnsatzState(circuits, z0, np.ones((2, 2)))
    return Scenario("dephasing", model, ansatz, PauliSum(1, ((1.0, "X"),)),
                    {"omega0": omega0, "gamma": gamma, "gate_sign": gate_sign})


def build_amplitude_damping(omega0: float = 1.0, Gamma: float = 7.5, z0=(0.0, math.pi / 4),
                            gate_sign: int = 1) -> Scenario:
    """Decay of |0> (the sigma_z = +1 level) into |1> via ``sigma^- = |1><0|``."""
    _check_rate("Gamma", Gamma)
    Z = PauliSum(1, ((1.0, "Z"),))
    X = PauliSum(1, ((1.0, "X"),))
    H = 0.5 * omega0 * Z
    model = LindbladModel(H, ((Gamma, SIGMA_MINUS),))
    circuits = (_phase_circuit(1, 0, [Z], gate_sign), _phase_circuit(1, 1, [X], gate_sign))
    ansatz = AnsatzState(circuits, z0, np.ones((2, 2)))
    return Scenario("damping", model, ansatz, H, {"omega0": omega0, "Gamma": Gamma, "gate_sign": gate_sign})


def _number_words(d_trunc: int) -> list[PauliSum]:
    # unit-coefficient Pauli words of N's decomposition, in application order
    _, _, N = boson_ops(d_trunc)
    return [PauliSum(N.n_qubits, ((1.0, w),)) for _, w in reversed(N.terms)]


def build_jaynes_cummings(omega_r: float = 1.0, G: float = 2.0, gamma: float = 10.0, d_trunc: int = 4,
                          n_photons: int = 2, z0=(0.0, 0.0), gate_sign: int = 1) -> Scenario:
    """Cavity mode (leading qubits) coupled to a decaying two-level system (last qubit)."""
    _check_rate("gamma", gamma)
    if d_trunc < 2:
        raise ValueError("d_trunc must be at least 2")
    if not 0 <= n_photons < d_trunc:
        raise ValueError(f"n_photons={n_photons} does not fit in truncation d_trunc={d_trunc}")
    a, a_dag, N = boson_ops(d_trunc)
    k = a.n_qubits
    n = k + 1
    one = PauliSum.identity(1)
    H = (omega_r * kron(N, one)
         + embed(PauliSum(1, ((0.5 * omega_r, "Z"),)), n, k)
         + G * (kron(a, SIGMA_PLUS) + kron(a_dag, SIGMA_MINUS)))
    model = LindbladModel(H, ((gamma, embed(SIGMA_MINUS, n, k)),))
    gens = [embed(w, n, 0) for w in _number_words(d_trunc)] + [PauliSum.single(n, k, "Z")]
    circuits = tuple(_phase_circuit(n, 2 * n_photons + s, gens, gate_sign) for s in (0, 1))
    ansatz = AnsatzState(circuits, z0, np.ones((2, 2)))
    params = {"omega_r": omega_r, "G": G, "gamma": gamma, "d_trunc": d_trunc,
              "n_photons": n_photons, "gate_sign": gate_sign}
    return Scenario("jaynes-cummings", model, ansatz, kron(N, one), params)


def build_vibronic(omega1: float = 0.007, omega2: float = 0.007, d: float = 0.05, c: float = 0.04,
                   h1: float = 1.0, h2: float = 0.0, d_trunc: int = 2, z0=(0.0, 0.0),
                   gate_sign: int = 1) -> Scenario:
    """Two modes (registers 1 and 2) coupled to a donor/acceptor pair (last qubit, |D>=|0>)."""
    _check_rate("h1", h1)
    _check_rate("h2", h2)
    if d_trunc < 2:
        raise ValueError("d_trunc must be at least 2")
    a, a_dag, N = boson_ops(d_trunc)
    k = a.n_qubits
    n = 2 * k + 1
    a1, a2 = embed(a, n, 0), embed(a, n, k)
    N1, N2 = embed(N, n, 0), embed(N, n, k)
    Z = PauliSum.single(n, 2 * k, "Z")
    X = PauliSum.single(n, 2 * k, "X")
    eye = PauliSum.identity(n)
    P_D = 0.5 * (eye + Z)
    P_A = 0.5 * (eye - Z)
    H = (0.5 * omega1 * N1 + 0.5 * omega2 * N2
         - d * ((a1 + dagger(a1)) * Z)
         + c * ((a2 + dagger(a2)) * X))
    shift = d / (omega1 * math.sqrt(2))
    L1 = (a1 - shift * eye) * P_D + (a1 + shift * eye) * P_A
    L2 = a2 * (P_D + P_A)
    model = LindbladModel(H, ((2 * h1, L1), (2 * h2, L2)))
    mode_gens = [embed(w, n, 0) + embed(w, n, k) for w in _number_words(d_trunc)]
    circuits = (
        _phase_circuit(n, 0, mode_gens + [Z], gate_sign),
        _phase_circuit(n, 1, mode_gens + [X], gate_sign),
    )
    ansatz = AnsatzState(circuits, z0, np.ones((2, 2)))
    params = {"omega1": omega1, "omega2": omega2, "d": d, "c": c, "h1": h1, "h2": h2,
              "d_trunc": d_trunc, "gate_sign": gate_sign}
    return Scenario("vibronic", model, ansatz, Z, params)


PRESETS: dict[str, Callable[..., Scenario]] = {
    "dephasing": build_dephasing,
    "damping": build_amplitude_damping,
    "jaynes-cummings": build_jaynes_cummings,
    "vibronic": build_vibronic,
}


def preset(name: str, **kwargs) -> Scenario:
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]
    r: int
    s: int
    m: int

    def __str__(self) -> str:
        head = f"{'pass' if self.ok else 'FAIL'}: r={self.r} s={self.s} m={self.m}"
        return "\n".join([head] + [f"  - {v}" for v in self.violations])


def validate(scenario: Scenario, term_cap: int = GENERATOR_TERM_CAP, gate_cap: int = GATE_COUNT_CAP,
             tol: float = 1e-12) -> ValidationReport:
    model, ansatz = scenario.model, scenario.ansatz
    violations = []
    if not model.H.is_hermitian(tol):
        violations.append("Hamiltonian is not Hermitian")
    if not scenario.observable.is_hermitian(tol):
        violations.append("observable is not Hermitian")
    for j, (g, L) in enumerate(model.jumps):
        if g < 0:
            violations.append(f"jump {j} has negative rate {g}")
    if ansatz.n_qubits != model.n_qubits:
        violations.append(f"ansatz acts on {ansatz.n_qubits} qubits, model on {model.n_qubits}")
    for k, circ in enumerate(ansatz.circuits):
        if len(circ.gates) > gate_cap:
            violations.append(f"circuit {k} has {len(circ.gates)} gates > cap {gate_cap}")
        for alpha, g in enumerate(circ.gates):
            if len(g.generator) > term_cap:
                violations.append(f"circuit {k} gate {alpha} generator has {len(g.generator)} terms > cap {term_cap}")
            if not g.is_hermitian(tol):
                violations.append(f"circuit {k} gate {alpha} generator is not Hermitian")
    r = len(simplify(model.H))
    s = max((len(simplify(L)) for _, L in model.jumps), default=0)
    m = max(len(c.gates) for c in ansatz.circuits)
    return ValidationReport(not violations, violations, r, s, m)


def _lines(op: PauliSum) -> list[str]:
    return format_pauli_sum(op).splitlines()


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "params": sc.params,
        "model": {
            "n_qubits": sc.model.n_qubits,
            "H": _lines(sc.model.H),
            "jumps": [{"rate": g, "L": _lines(L)} for g, L in sc.model.jumps],
        },
        "ansatz": {
            "circuits": [
                {
                    "init": c.init,
                    "n_params": c.n_params,
                    "gates": [{"generator": _lines(g.generator), "sign": g.sign, "param": g.param}
                              for g in c.gates],
                }
                for c in sc.ansatz.circuits
            ],
            "z": sc.ansatz.z.tolist(),
            "B": {"re": sc.ansatz.B.real.tolist(), "im": sc.ansatz.B.imag.tolist()},
        },
        "observable": _lines(sc.observable),
    }


def scenario_from_dict(data: dict) -> Scenario:
    n = int(data["model"]["n_qubits"])
    H = parse_pauli_sum(data["model"]["H"], n)
    jumps = tuple((float(j["rate"]), parse_pauli_sum(j["L"], n)) for j in data["model"].get("jumps", []))
    circuits = []
    for c in data["ansatz"]["circuits"]:
        gates = tuple(Gate(parse_pauli_sum(g["generator"], n), int(g.get("param", 0)), int(g.get("sign", 1)))
                      for g in c["gates"])
        n_params = int(c.get("n_params", 1 + max((g.param for g in gates), default=-1)))
        circuits.append(Circuit(n, int(c.get("init", 0)), gates, n_params))
    b = data["ansatz"].get("B")
    if b is None:
        B = np.ones((len(circuits), len(circuits)))
    elif isinstance(b, dict):
        B = np.asarray(b["re"], dtype=float) + 1j * np.asarray(b.get("im", np.zeros_like(b["re"])), dtype=float)
    else:
        B = np.asarray(b, dtype=complex)
    ansatz = AnsatzState(tuple(circuits), data["ansatz"]["z"], B)
    return Scenario(data.get("name", "custom"), LindbladModel(H, jumps), ansatz,
                    parse_pauli_sum(data["observable"], n), dict(data.get("params", {})))


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))
