"""Exact two-qubit density-matrix simulation with gate, preparation and readout noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .circuits import CircuitSpec, Gate
from .model import CzModelParams

OUTCOMES = ("00", "01", "10", "11")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
ZI = np.kron(_Z, _I2)
IZ = np.kron(_I2, _Z)
ZZ = np.kron(_Z, _Z)


class SimulationError(ValueError):
    pass


def _check_prob(name, p):
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic error rates of the simulated device.

    ``readout_confusion[q][true][measured]`` is the probability of reading
    ``measured`` on qubit q (0 = A, 1 = B) when the qubit is in ``true``.
    """

    depolarizing_rate_per_cz: float = 0.0
    depolarizing_rate_per_1q: float = 0.0
    readout_confusion: tuple = (((1.0, 0.0), (0.0, 1.0)), ((1.0, 0.0), (0.0, 1.0)))
    prep_flip_prob: tuple = (0.0, 0.0)

    def __post_init__(self):
        _check_prob("depolarizing_rate_per_cz", self.depolarizing_rate_per_cz)
        _check_prob("depolarizing_rate_per_1q", self.depolarizing_rate_per_1q)
        conf = np.asarray(self.readout_confusion, dtype=float)
        if conf.shape != (2, 2, 2):
            raise ValueError("readout_confusion must be two 2x2 matrices")
        if np.any(conf < 0) or np.any(conf > 1) or np.any(np.abs(conf.sum(axis=2) - 1.0) > 1e-12):
            raise ValueError("readout_confusion rows must be probability vectors")
        if len(self.prep_flip_prob) != 2:
            raise ValueError("prep_flip_prob needs one entry per qubit")
        for p in self.prep_flip_prob:
            _check_prob("prep_flip_prob", p)
        # normalise nested lists to tuples so instances stay hashable
        object.__setattr__(self, "readout_confusion", tuple(tuple(tuple(map(float, r)) for r in m) for m in conf))
        object.__setattr__(self, "prep_flip_prob", tuple(float(p) for p in self.prep_flip_prob))

    @classmethod
    def symmetric_readout(cls, flip: float, **kwargs) -> "NoiseModel":
        m = ((1.0 - flip, flip), (flip, 1.0 - flip))
        return cls(readout_confusion=(m, m), **kwargs)

    def confusion_matrix(self) -> np.ndarray:
        """4x4 row-stochastic matrix acting on the two-bit outcome distribution."""
        return _confusion(self.readout_confusion).copy()


IDEAL = NoiseModel()


@lru_cache(maxsize=64)
def _confusion(readout_confusion) -> np.ndarray:
    a, b = np.asarray(readout_confusion)
    return np.kron(a, b)


def build_cz_unitary(params: CzModelParams) -> np.ndarray:
    """``exp(-i/2 (theta_zi ZI + theta_iz IZ + theta_zz ZZ))``; diagonal."""
    gen = params.theta_zi * np.diag(ZI) + params.theta_iz * np.diag(IZ) + params.theta_zz * np.diag(ZZ)
    return np.diag(np.exp(-0.5j * gen.real))


@lru_cache(maxsize=256)
def _rotation(kind: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "X":
        return _X.copy()
    raise ValueError(f"unknown single-qubit gate kind {kind!r}")


def build_1q_gate(kind: str, angle: float = 0.0) -> np.ndarray:
    """Standard ``exp(-i angle/2 P)`` rotation; ``X`` is the Pauli matrix."""
    return _rotation(kind, float(angle)).copy()


@lru_cache(maxsize=512)
def _embedded(kind: str, qubit: str, angle: float) -> np.ndarray:
    g = _rotation(kind, angle)
    return np.kron(g, _I2) if qubit == "A" else np.kron(_I2, g)


@dataclass(frozen=True)
class CompiledCircuit:
    ops: np.ndarray = field(repr=False)
    channels: np.ndarray = field(repr=False)
    rates: np.ndarray = field(repr=False)


def compile_circuit(circuit: CircuitSpec, noise: NoiseModel, params: CzModelParams) -> CompiledCircuit:
    layers = circuit.layers if isinstance(circuit, CircuitSpec) else circuit
    for i, gate in enumerate(layers):
        if not isinstance(gate, Gate):
            raise SimulationError(f"layer {i} is not a Gate: {gate!r}")
    is_cz = np.array([g.kind == "CZ" for g in layers], dtype=bool)
    ops = np.empty((len(layers), 4, 4), dtype=complex)
    channels = np.full(len(layers), kernels.CH_DEPOL_2Q, dtype=np.int64)
    rates = np.full(len(layers), noise.depolarizing_rate_per_cz)
    if is_cz.any():
        # CZ layers dominate deep circuits; fill them in one shot
        ops[is_cz] = build_cz_unitary(params)
    for i in np.flatnonzero(~is_cz):
        gate = layers[i]
        ops[i] = _embedded(gate.kind, gate.qubits[0], float(gate.angle))
        channels[i] = kernels.CH_DEPOL_A if gate.qubits[0] == "A" else kernels.CH_DEPOL_B
        rates[i] = noise.depolarizing_rate_per_1q
    return CompiledCircuit(ops, channels, rates)


def initial_state(noise: NoiseModel) -> np.ndarray:
    """|00><00| after independent classical preparation flips."""
    pa, pb = noise.prep_flip_prob
    return np.diag(np.kron([1.0 - pa, pa], [1.0 - pb, pb])).astype(complex)


def apply_circuit(circuit: CircuitSpec, noise: NoiseModel, params: CzModelParams) -> np.ndarray:
    """Final density matrix of ``circuit`` run on the noisy model device."""
    compiled = compile_circuit(circuit, noise, params)
    rho = initial_state(noise)
    if len(compiled.ops) == 0:
        return rho
    return kernels.evolve(rho, compiled.ops, compiled.channels, compiled.rates)


def outcome_probabilities(state: np.ndarray, noise: NoiseModel = IDEAL, tol: float = 1e-10) -> dict[str, float]:
    """Readout distribution over ``OUTCOMES`` including the confusion matrices."""
    diag = np.real(np.diag(state))
    if np.any(diag < -tol):
        raise SimulationError(f"state has negative populations {diag}")
    probs = np.clip(diag, 0.0, None)
    probs = probs @ _confusion(noise.readout_confusion)
    probs = probs / probs.sum()
    return {label: float(p) for label, p in zip(OUTCOMES, probs)}


def sample_counts(state: np.ndarray, noise: NoiseModel, shots: int, seed) -> dict[str, int]:
    """Multinomial readout of ``shots`` repetitions, reproducible from ``seed``."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = outcome_probabilities(state, noise)
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, [probs[o] for o in OUTCOMES])
    return {label: int(n) for label, n in zip(OUTCOMES, draws)}


def is_density_matrix(rho: np.ndarray, tol: float = 1e-12, psd_tol: float = 1e-10) -> bool:
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        return False
    if abs(np.trace(rho) - 1.0) > tol:
        return False
    return bool(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) >= -psd_tol)
