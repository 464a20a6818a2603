"""Running the three CZ phase experiments and turning their counts into angles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuits import CircuitSpec, generate_rpe_circuits
from .model import PHASE_NAMES, TARGETS, CzModelParams, RelativePhases, phases_to_params
from .rpe import GenerationEstimate, IQMeasurement, estimate_generations, last_trusted_estimate, rms_bound
from .sim import NoiseModel, apply_circuit, outcome_probabilities, sample_counts

ANGLE_NAMES = ("theta_iz", "theta_zi", "theta_zz")
# phases each angle depends on through the inverse linear map
ANGLE_PHASES = {
    "theta_iz": ("phi_00_01", "phi_10_11"),
    "theta_zi": ("phi_00_01", "phi_10_11", "phi_01_11"),
    "theta_zz": ("phi_00_01", "phi_10_11"),
}


def derive_seed(*keys: int) -> int:
    """Independent 63-bit seed for a tuple of non-negative integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)[0] >> 1)


def run_circuits(
    circuits: Sequence[CircuitSpec], params: CzModelParams, noise: NoiseModel, shots: int | None, seed: int
) -> list[dict]:
    """Counts for each circuit; ``shots=None`` returns exact outcome probabilities."""
    results = []
    for index, circuit in enumerate(circuits):
        rho = apply_circuit(circuit, noise, params)
        if shots is None:
            results.append(outcome_probabilities(rho, noise))
        else:
            results.append(sample_counts(rho, noise, shots, derive_seed(seed, index)))
    return results


@dataclass(frozen=True)
class RpeResult:
    circuits: tuple
    counts: tuple
    measurements: Mapping[str, tuple]
    estimates: Mapping[str, tuple]
    phases: RelativePhases
    k_last: Mapping[str, int]
    params: CzModelParams

    def angle_k_last(self, angle: str) -> int:
        return min(self.k_last[p] for p in ANGLE_PHASES[angle])

    def angle_window(self, angle: str) -> float:
        return rms_bound(self.angle_k_last(angle))

    @property
    def min_k_last(self) -> int:
        return min(self.k_last.values())


def measurements_from_counts(circuits: Sequence[CircuitSpec], counts: Sequence[Mapping]) -> dict[str, list]:
    by_key = {}
    for circuit, c in zip(circuits, counts):
        by_key[(circuit.phase, circuit.k, circuit.basis)] = (circuit, c)
    out = {}
    for phase in PHASE_NAMES:
        ks = sorted(k for (p, k, b) in by_key if p == phase and b == "I")
        rows = []
        for k in ks:
            ci, cnt_i = by_key[(phase, k, "I")]
            cq, cnt_q = by_key[(phase, k, "Q")]
            rows.append(
                IQMeasurement.from_counts(
                    k, cnt_i, ci.plus_outcomes, ci.minus_outcomes, cnt_q, cq.plus_outcomes, cq.minus_outcomes
                )
            )
        out[phase] = rows
    return out


def analyze_counts(
    circuits: Sequence[CircuitSpec], counts: Sequence[Mapping], reference: CzModelParams = TARGETS
) -> RpeResult:
    """Pure function of the recorded counts; replays reproduce it exactly."""
    measurements = measurements_from_counts(circuits, counts)
    estimates, phis, k_last = {}, {}, {}
    for phase in PHASE_NAMES:
        est = estimate_generations(measurements[phase])
        estimates[phase] = tuple(est)
        phis[phase], k_last[phase] = last_trusted_estimate(est)
    phases = RelativePhases(**phis)
    return RpeResult(
        circuits=tuple(circuits),
        counts=tuple(counts),
        measurements={p: tuple(m) for p, m in measurements.items()},
        estimates=estimates,
        phases=phases,
        k_last=k_last,
        params=phases_to_params(phases, reference),
    )


def run_rpe(backend, point, k_max: int, shots: int | None, seed: int, reference: CzModelParams = TARGETS) -> RpeResult:
    circuits = generate_rpe_circuits(k_max)
    counts = backend.execute(point, circuits, shots, seed)
    return analyze_counts(circuits, counts, reference)


@dataclass(frozen=True)
class FixedModelBackend:
    """A device whose gate and noise do not depend on the control point."""

    params: CzModelParams
    noise: NoiseModel = NoiseModel()

    def execute(self, point, circuits, shots, seed):
        return run_circuits(circuits, self.params, self.noise, shots, seed)

    def apply_virtual_z(self, phi_iz: float, phi_zi: float) -> "FixedModelBackend":
        p = self.params
        return FixedModelBackend(CzModelParams(p.theta_iz + phi_iz, p.theta_zi + phi_zi, p.theta_zz), self.noise)


def exact_phase_error(estimate: float, truth: float) -> float:
    return abs((estimate - truth + math.pi) % (2 * math.pi) - math.pi)
