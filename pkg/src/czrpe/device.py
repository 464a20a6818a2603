"""Synthetic CZ device: drive amplitude and frequency in, gate angles and noise out.

Units of amplitude and frequency are arbitrary.  The entangling angle
follows a power-law amplitude response times a Lorentzian in detuning,
which makes the set of controls with ``theta_zz = -pi/2`` a curve rather
than a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .experiment import derive_seed, run_circuits
from .circuits import rpe_circuit
from .model import CzModelParams
from .rpe import post_selected_expectation
from .sim import NoiseModel


@dataclass(frozen=True)
class ControlPoint:
    amplitude: float
    frequency: float

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and math.isfinite(self.frequency)):
            raise ValueError(f"control point must be finite, got {self}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")

    def as_tuple(self) -> tuple[float, float]:
        return (self.amplitude, self.frequency)


@dataclass(frozen=True)
class SurrogateConfig:
    """Hidden device response.

    ``stark_iz`` and ``stark_zi`` are ``(offset, per amplitude**2, per detuning)``
    coefficients of the local-angle errors; the offset is the error left at
    the optimum.  ``noise_slope`` adds to the per-CZ depolarizing rate per
    unit of normalised distance from the optimum.
    """

    amp_star: float = 1.0
    freq_star: float = 0.0
    zz_linewidth: float = 0.5
    stark_iz: tuple = (0.07, 0.15, -0.05)
    stark_zi: tuple = (-0.04, -0.10, 0.08)
    noise_floor: NoiseModel = field(default_factory=NoiseModel)
    noise_slope: float = 0.0

    def __post_init__(self):
        if self.amp_star <= 0 or self.zz_linewidth <= 0:
            raise ValueError("amp_star and zz_linewidth must be positive")
        if len(self.stark_iz) != 3 or len(self.stark_zi) != 3:
            raise ValueError("stark coefficients need (offset, amplitude, detuning) triples")
        if self.noise_slope < 0:
            raise ValueError("noise_slope must be >= 0")
        object.__setattr__(self, "stark_iz", tuple(float(v) for v in self.stark_iz))
        object.__setattr__(self, "stark_zi", tuple(float(v) for v in self.stark_zi))

    @property
    def optimum(self) -> ControlPoint:
        return ControlPoint(self.amp_star, self.freq_star)

    def noiseless(self) -> "SurrogateConfig":
        return replace(self, noise_floor=NoiseModel(), noise_slope=0.0)


def zz_response(point: ControlPoint, config: SurrogateConfig) -> float:
    """Normalised entangling strength; 1 at the optimum, 0 without drive."""
    amp = (point.amplitude / config.amp_star) ** 2
    detuning = (point.frequency - config.freq_star) / config.zz_linewidth
    return amp / (1.0 + detuning**2)


def offset_distance(point: ControlPoint, config: SurrogateConfig) -> float:
    da = (point.amplitude - config.amp_star) / config.amp_star
    df = (point.frequency - config.freq_star) / config.zz_linewidth
    return math.hypot(da, df)


def control_to_model(point: ControlPoint, config: SurrogateConfig) -> tuple[CzModelParams, NoiseModel]:
    power = point.amplitude**2 - config.amp_star**2
    detuning = point.frequency - config.freq_star
    c0, ca, cf = config.stark_iz
    theta_iz = math.pi / 2 + c0 + ca * power + cf * detuning
    c0, ca, cf = config.stark_zi
    theta_zi = math.pi / 2 + c0 + ca * power + cf * detuning
    theta_zz = -math.pi / 2 * zz_response(point, config)

    floor = config.noise_floor
    rate = floor.depolarizing_rate_per_cz + config.noise_slope * offset_distance(point, config)
    noise = replace(floor, depolarizing_rate_per_cz=min(1.0, max(0.0, rate)))
    return CzModelParams(theta_iz, theta_zi, theta_zz), noise


@dataclass(frozen=True)
class SurrogateBackend:
    """Executes circuits on the surrogate at a given control point.

    Virtual Z corrections are modelled as exact additive shifts of the two
    local angles.
    """

    config: SurrogateConfig = field(default_factory=SurrogateConfig)
    virtual_z: tuple = (0.0, 0.0)

    def model_at(self, point: ControlPoint) -> tuple[CzModelParams, NoiseModel]:
        params, noise = control_to_model(point, self.config)
        viz, vzi = self.virtual_z
        return CzModelParams(params.theta_iz + viz, params.theta_zi + vzi, params.theta_zz), noise

    def execute(self, point, circuits, shots, seed):
        params, noise = self.model_at(point)
        return run_circuits(circuits, params, noise, shots, seed)

    def apply_virtual_z(self, phi_iz: float, phi_zi: float) -> "SurrogateBackend":
        viz, vzi = self.virtual_z
        return replace(self, virtual_z=(viz + phi_iz, vzi + phi_zi))


def _bloch_xy(counts_i, counts_q, circuit_i, circuit_q) -> np.ndarray:
    x = post_selected_expectation(counts_i, circuit_i.plus_outcomes, circuit_i.minus_outcomes)[0]
    y = post_selected_expectation(counts_q, circuit_q.plus_outcomes, circuit_q.minus_outcomes)[0]
    r = np.array([x, y])
    norm = np.linalg.norm(r)
    # independent x and y estimates can leave the Bloch disk; project back
    return r / norm if norm > 1.0 else r


def conditionality_from_model(params: CzModelParams, noise: NoiseModel, shots: int | None, seed: int) -> float:
    """Half the squared distance between the target's equatorial Bloch vectors
    with the control in |0> and in |1>, after one CZ.

    The target is qubit B.  The k = 0 circuits of the ``phi_00_01`` and
    ``phi_10_11`` classes are exactly these two conditional experiments.
    """
    circuits = [rpe_circuit(phase, basis, 0) for phase in ("phi_00_01", "phi_10_11") for basis in ("I", "Q")]
    counts = run_circuits(circuits, params, noise, shots, seed)
    r0 = _bloch_xy(counts[0], counts[1], circuits[0], circuits[1])
    r1 = _bloch_xy(counts[2], counts[3], circuits[2], circuits[3])
    return float(0.5 * np.sum((r0 - r1) ** 2))


def conditionality(point: ControlPoint, config: SurrogateConfig, shots: int | None, seed: int) -> float:
    if shots is not None and shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    params, noise = control_to_model(point, config)
    return conditionality_from_model(params, noise, shots, seed)


def make_grid(amplitudes, frequencies) -> list[ControlPoint]:
    """Row-major grid: amplitude outer, frequency inner."""
    return [ControlPoint(float(a), float(f)) for a in amplitudes for f in frequencies]


def coarse_sweep(grid, config: SurrogateConfig, shots: int | None, seed: int):
    """Conditionality at every grid point, plus the point where it peaks.

    Returns ``(rows, best)`` with ``rows`` a list of ``(point, R)``.  Ties
    go to the earliest grid point.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    rows = [(p, conditionality(p, config, shots, derive_seed(seed, i))) for i, p in enumerate(grid)]
    best = max(rows, key=lambda row: row[1])[0]
    return rows, best
