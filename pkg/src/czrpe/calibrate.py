"""Closed-loop calibration of the entangling angle, then virtual-Z cleanup.

The optimizer only sees ``|theta_zz + pi/2|`` estimated by RPE at each
candidate control point.  Local angles are fixed afterwards in software.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .device import ControlPoint
from .experiment import ANGLE_NAMES, RpeResult, derive_seed, run_rpe
from .model import TARGETS, CzModelParams, virtual_z_correction
from .rpe import AllShotsDiscarded

log = logging.getLogger(__name__)


class EvaluationError(RuntimeError):
    def __init__(self, point, cause):
        super().__init__(f"RPE evaluation failed at {point}: {cause}")
        self.point = point
        self.cause = cause


class OptimizationAborted(RuntimeError):
    pass


@dataclass(frozen=True)
class RpeConfig:
    k_max: int = 6
    shots_per_circuit: int | None = 100

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if self.shots_per_circuit is not None and self.shots_per_circuit < 1:
            raise ValueError("shots_per_circuit must be >= 1 (or None for exact expectations)")


@dataclass(frozen=True)
class OptimizerConfig:
    """Search settings.  ``initial_window`` is ``((amp_lo, amp_hi), (freq_lo, freq_hi))``."""

    population: int = 10
    max_iterations: int = 30
    initial_window: tuple = ((0.7, 1.1), (-0.25, 0.25))
    convergence_cost: float = 1e-3
    seed: int = 0
    shrink: float = 0.85

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        window = np.asarray(self.initial_window, dtype=float)
        if window.shape != (2, 2) or not np.all(window[:, 0] < window[:, 1]):
            raise ValueError(f"initial_window must be two (lo, hi) pairs with lo < hi, got {self.initial_window}")
        if window[0, 0] < 0:
            raise ValueError("amplitude window must be non-negative")
        if not 0.0 < self.shrink <= 1.0:
            raise ValueError("shrink must lie in (0, 1]")
        object.__setattr__(self, "initial_window", tuple(tuple(float(v) for v in row) for row in window))


@dataclass(frozen=True)
class CostRecord:
    point: ControlPoint
    estimated: CzModelParams | None
    cost: float
    k_last: int
    iteration: int
    candidate: int = 0
    seed: int = 0
    rpe: RpeResult | None = field(default=None, repr=False, compare=False)

    @property
    def failed(self) -> bool:
        return self.estimated is None


def zz_cost(params: CzModelParams) -> float:
    return abs(params.theta_zz + math.pi / 2)


def evaluate_cost(point: ControlPoint, backend, rpe_config: RpeConfig, seed: int = 0, iteration: int = 0,
                  candidate: int = 0) -> CostRecord:
    try:
        result = run_rpe(backend, point, rpe_config.k_max, rpe_config.shots_per_circuit, seed)
    except (AllShotsDiscarded, ValueError, ArithmeticError) as exc:
        raise EvaluationError(point, exc) from exc
    return CostRecord(
        point=point,
        estimated=result.params,
        cost=zz_cost(result.params),
        k_last=result.min_k_last,
        iteration=iteration,
        candidate=candidate,
        seed=seed,
        rpe=result,
    )


class SearchStrategy(Protocol):
    def ask(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    def tell(self, points: np.ndarray, costs: np.ndarray) -> None: ...


class RankShrinkStrategy:
    """(mu, lambda) evolution strategy over a box.

    Candidates are drawn uniformly from the current box (clipped to the
    initial window).  The box is recentred on a log-rank weighted mean of
    the better half and every half-width is multiplied by ``shrink``.
    """

    def __init__(self, window, shrink: float = 0.85):
        self.bounds = np.asarray(window, dtype=float)
        self.center = self.bounds.mean(axis=1)
        self.half = (self.bounds[:, 1] - self.bounds[:, 0]) / 2.0
        self.shrink = shrink

    def ask(self, rng, n):
        pts = self.center + self.half * rng.uniform(-1.0, 1.0, size=(n, 2))
        return np.clip(pts, self.bounds[:, 0], self.bounds[:, 1])

    def tell(self, points, costs):
        ok = np.isfinite(costs)
        if ok.any():
            order = np.argsort(costs[ok], kind="stable")
            elite = points[ok][order][: max(1, len(points) // 2)]
            w = np.log(len(elite) + 0.5) - np.log(np.arange(1, len(elite) + 1))
            self.center = (w / w.sum()) @ elite
        self.half = self.half * self.shrink


def optimize(backend, optimizer_config: OptimizerConfig, rpe_config: RpeConfig,
             strategy: SearchStrategy | None = None,
             callback: Callable[[CostRecord], None] | None = None) -> tuple[CostRecord, list[CostRecord]]:
    """Minimise the RPE-estimated ZZ error over (amplitude, frequency).

    Failed evaluations score +inf.  Every random draw derives from
    ``optimizer_config.seed`` and the (iteration, candidate) indices, so the
    history is reproducible bit for bit.
    """
    cfg = optimizer_config
    strategy = strategy or RankShrinkStrategy(cfg.initial_window, cfg.shrink)
    history: list[CostRecord] = []
    best: CostRecord | None = None

    for it in range(cfg.max_iterations):
        rng = np.random.default_rng([cfg.seed, it])
        points = strategy.ask(rng, cfg.population)
        records = []
        for j, (amp, freq) in enumerate(points):
            point = ControlPoint(float(amp), float(freq))
            seed = derive_seed(cfg.seed, it, j)
            try:
                rec = evaluate_cost(point, backend, rpe_config, seed, it, j)
            except EvaluationError as exc:
                log.info("%s", exc)
                rec = CostRecord(point, None, math.inf, -1, it, j, seed)
            records.append(rec)
            if callback is not None:
                callback(rec)
        if all(r.failed for r in records):
            raise OptimizationAborted(f"every evaluation in iteration {it} failed")
        history.extend(records)
        costs = np.array([r.cost for r in records])
        strategy.tell(points, costs)

        it_best = records[int(np.argmin(costs))]
        if best is None or it_best.cost < best.cost:
            best = it_best
        log.info("iteration %d: best cost %.3g at %s", it, best.cost, best.point)
        if best.cost <= cfg.convergence_cost:
            break
    return best, history


@dataclass(frozen=True)
class CalibrationReport:
    point: ControlPoint
    correction: tuple
    before: RpeResult = field(repr=False)
    after: RpeResult = field(repr=False)

    def rows(self) -> list[dict]:
        """Before/after angle errors with their RMS windows, one row per angle."""
        out = []
        for name, target in zip(ANGLE_NAMES, TARGETS.as_array()):
            row = {"angle": name, "target": float(target)}
            for tag, res in (("before", self.before), ("after", self.after)):
                est = getattr(res.params, name)
                row[f"{tag}_estimate"] = est
                row[f"{tag}_error"] = est - float(target)
                row[f"{tag}_k_last"] = res.angle_k_last(name)
                row[f"{tag}_window"] = res.angle_window(name)
            out.append(row)
        return out


def finalize_calibration(best: CostRecord, backend, rpe_config: RpeConfig, seed: int = 0):
    """Re-estimate at the chosen point, apply virtual Z corrections, estimate again.

    Returns ``(report, corrected_backend)``.
    """
    before = run_rpe(backend, best.point, rpe_config.k_max, rpe_config.shots_per_circuit, derive_seed(seed, 0))
    correction = virtual_z_correction(before.params)
    corrected = backend.apply_virtual_z(*correction)
    after = run_rpe(corrected, best.point, rpe_config.k_max, rpe_config.shots_per_circuit, derive_seed(seed, 1))
    return CalibrationReport(best.point, correction, before, after), corrected

