"""Commuting ZI/IZ/ZZ model of a CZ gate and its relative-phase coordinates."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Rows: phi_00_01, phi_10_11, phi_01_11.  Columns: theta_iz, theta_zi, theta_zz.
PHASE_MATRIX = np.array(
    [
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, -1.0],
    ]
)
INVERSE_PHASE_MATRIX = np.array(
    [
        [0.5, 0.5, 0.0],
        [0.5, -0.5, 1.0],
        [0.5, -0.5, 0.0],
    ]
)


def wrap_phase(x: float) -> float:
    """Map an angle onto (0, 2*pi]; zero goes to 2*pi."""
    r = math.fmod(x, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r


def wrap_signed(x: float) -> float:
    """Map an angle onto [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class CzModelParams:
    """Coefficients (radians) of IZ, ZI and ZZ in the gate generator.

    Values are kept unwrapped so that small errors around the targets stay
    small numbers.
    """

    theta_iz: float
    theta_zi: float
    theta_zz: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in astuple(self)):
            raise ValueError(f"model parameters must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_iz, self.theta_zi, self.theta_zz])

    @classmethod
    def from_array(cls, values) -> "CzModelParams":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)

    def errors(self, target: "CzModelParams | None" = None) -> "CzModelParams":
        target = TARGETS if target is None else target
        return CzModelParams.from_array(self.as_array() - target.as_array())


TARGETS = CzModelParams(math.pi / 2, math.pi / 2, -math.pi / 2)


@dataclass(frozen=True)
class RelativePhases:
    phi_00_01: float
    phi_10_11: float
    phi_01_11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_00_01, self.phi_10_11, self.phi_01_11])


PHASE_NAMES = ("phi_00_01", "phi_10_11", "phi_01_11")


def params_to_phases(params: CzModelParams) -> RelativePhases:
    raw = PHASE_MATRIX @ params.as_array()
    return RelativePhases(*(wrap_phase(float(v)) for v in raw))


def phases_to_params(phases: RelativePhases, reference: CzModelParams = TARGETS) -> CzModelParams:
    """Invert the phase map, unwrapping each phase next to the reference's prediction."""
    predicted = PHASE_MATRIX @ reference.as_array()
    measured = phases.as_array()
    p1, p2, p3 = (float(pred + wrap_signed(m - pred)) for m, pred in zip(measured, predicted))
    half_diff = (p1 - p2) / 2.0
    return CzModelParams(
        theta_iz=(p1 + p2) / 2.0,
        theta_zi=p3 + half_diff,
        theta_zz=half_diff,
    )


def propagate_uncertainty(phase_sigmas) -> CzModelParams:
    """Standard deviations of the angle estimates given independent phase errors.

    Each angle is a fixed linear combination of the phases, so its variance
    is the coefficient-weighted sum of the phase variances.
    """
    s = np.asarray(phase_sigmas, dtype=float)
    return CzModelParams.from_array(np.sqrt((INVERSE_PHASE_MATRIX**2) @ (s**2)))


def virtual_z_correction(estimated: CzModelParams) -> tuple[float, float]:
    """Software Z phases (on the IZ and ZI axes) that bring the local angles to pi/2."""
    return math.pi / 2 - estimated.theta_iz, math.pi / 2 - estimated.theta_zi


def eigenphase_table(params: CzModelParams) -> dict[str, float]:
    """Eigenphase of each computational basis state, in the literal table convention.

    These are -2x the eigenphases of ``exp(-i/2 * generator)`` (the II term
    dropped), so measured relative phases are half the differences of the
    entries, e.g. ``phi_00_01 = (table["00"] - table["01"]) / 2``.
    """
    iz, zi, zz = params.theta_iz, params.theta_zi, params.theta_zz
    return {
        "00": zi + iz + zz,
        "01": zi - iz - zz,
        "10": -zi + iz - zz,
        "11": -zi - iz + zz,
    }
