"""Robust phase estimation from in-phase/quadrature data at depths 2**k.

Gate agnostic: everything here works on post-selected expectation values
and knows nothing about which circuits produced them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import TWO_PI, wrap_signed

ROBUSTNESS_THRESHOLD = math.sqrt(3.0 / 32.0)


class AllShotsDiscarded(ValueError):
    """Post-selection left no plus or minus outcomes to average."""


def post_selected_expectation(
    counts: Mapping[str, float], plus_outcomes, minus_outcomes
) -> tuple[float, float, float, float]:
    """Return ``(value, n_plus, n_minus, n_discarded)``.

    ``counts`` may hold integers (sampled shots) or probabilities (exact
    expectation mode); the ratio is the same either way.
    """
    plus, minus = set(plus_outcomes), set(minus_outcomes)
    if plus & minus:
        raise ValueError(f"plus and minus outcomes overlap: {plus & minus}")
    n_plus = sum(v for label, v in counts.items() if label in plus)
    n_minus = sum(v for label, v in counts.items() if label in minus)
    n_disc = sum(v for label, v in counts.items() if label not in plus and label not in minus)
    kept = n_plus + n_minus
    if kept <= 0:
        raise AllShotsDiscarded("all shots discarded")
    return (n_plus - n_minus) / kept, n_plus, n_minus, n_disc


def wrapped_arctan2(q: float, i: float) -> float:
    """Two-argument arctangent on (0, 2*pi]."""
    if q == 0.0 and i == 0.0:
        raise ValueError("degenerate angle: (q, i) = (0, 0)")
    z = math.atan2(q, i)
    if z <= 0.0:
        z += TWO_PI
    return z


def unwinding_integer(prev_estimate: float, z_k: float, k: int) -> int:
    """Branch index placing ``(z_k + 2 pi n) / 2**k`` nearest ``prev_estimate``."""
    scale = 2.0**k
    shifted = (prev_estimate - z_k / scale + math.pi / scale) % TWO_PI
    return int(math.floor(shifted / (TWO_PI / scale)))


@dataclass(frozen=True)
class IQMeasurement:
    k: int
    i_value: float
    q_value: float
    i_counts: tuple | None = None
    q_counts: tuple | None = None

    def __post_init__(self):
        for v in (self.i_value, self.q_value):
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"expectation value {v} outside [-1, 1]")

    @classmethod
    def from_counts(cls, k, i_counts, i_plus, i_minus, q_counts, q_plus, q_minus) -> "IQMeasurement":
        i_value, *i_n = post_selected_expectation(i_counts, i_plus, i_minus)
        q_value, *q_n = post_selected_expectation(q_counts, q_plus, q_minus)
        return cls(k, i_value, q_value, tuple(i_n), tuple(q_n))

    @classmethod
    def exact(cls, k: int, phase: float) -> "IQMeasurement":
        """Noiseless infinite-shot data for a known phase."""
        return cls(k, math.cos(2**k * phase), math.sin(2**k * phase))


@dataclass(frozen=True)
class GenerationEstimate:
    k: int
    phi_hat: float
    window_lo: float
    window_hi: float
    trusted: bool
    n_k: int

    @property
    def half_width(self) -> float:
        return (self.window_hi - self.window_lo) / 2.0


def window_half_width(k: int) -> float:
    return math.pi / (3.0 * 2.0 ** (k + 1))


def rms_bound(k: int) -> float:
    """RMS error bound of a generation-k estimate when additive errors stay below threshold."""
    return math.pi / 2.0 ** (k + 1)


def estimate_generations(measurements: Sequence[IQMeasurement], n0: int = 0) -> list[GenerationEstimate]:
    """Per-generation estimates with the angular-historical consistency check.

    A generation is trusted when its estimate lies inside every earlier
    trusted window.  The first failure and everything after it are
    returned untrusted.
    """
    if not measurements:
        raise ValueError("no measurements to analyse")
    for expected_k, m in enumerate(measurements):
        if m.k != expected_k:
            raise ValueError(f"measurements must cover k = 0, 1, ... without gaps; got k={m.k} at {expected_k}")

    out: list[GenerationEstimate] = []
    # running intersection of trusted windows as (center, half-width) on the circle
    center = half = None
    failed = False
    prev = None
    for m in measurements:
        h = window_half_width(m.k)
        if m.k > 0 and m.q_value == 0.0 and m.i_value == 0.0:
            # no angle information at all: counts as a consistency failure
            failed = True
            out.append(GenerationEstimate(m.k, prev, prev - h, prev + h, False, 0))
            continue
        z = wrapped_arctan2(m.q_value, m.i_value)
        n = n0 if m.k == 0 else unwinding_integer(prev, z, m.k)
        phi = (z + TWO_PI * n) / 2.0**m.k

        if m.k == 0:
            trusted = True
            center, half = phi, h
        elif failed:
            trusted = False
        else:
            d = wrap_signed(phi - center)
            trusted = abs(d) <= half
            if trusted:
                lo, hi = max(-half, d - h), min(half, d + h)
                center, half = center + (lo + hi) / 2.0, (hi - lo) / 2.0
            else:
                failed = True

        out.append(GenerationEstimate(m.k, phi, phi - h, phi + h, trusted, n))
        prev = phi
    return out


def last_trusted_estimate(estimates: Sequence[GenerationEstimate]) -> tuple[float, int]:
    best = None
    for est in estimates:
        if est.trusted:
            best = est
    if best is None:
        raise ValueError("no trusted generation")
    return best.phi_hat, best.k


def robustness_margin(i_value: float, q_value: float, true_phase: float, k: int) -> tuple[float, float]:
    """Half the absolute I and Q deviations from the ideal cos/sin at depth 2**k."""
    angle = 2**k * true_phase
    return 0.5 * abs(i_value - math.cos(angle)), 0.5 * abs(q_value - math.sin(angle))
