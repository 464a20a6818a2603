"""YAML run configuration.

Every key is optional; missing keys take the defaults below.
``configs/default.yaml`` is the annotated default file.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .calibrate import OptimizerConfig, RpeConfig
from .device import ControlPoint, SurrogateConfig, make_grid
from .sim import NoiseModel


class ConfigError(ValueError):
    pass


DEFAULT_NOISE = NoiseModel(
    depolarizing_rate_per_cz=0.002,
    depolarizing_rate_per_1q=0.0005,
    readout_confusion=(((0.98, 0.02), (0.03, 0.97)), ((0.98, 0.02), (0.03, 0.97))),
    prep_flip_prob=(0.005, 0.005),
)


@dataclass(frozen=True)
class SweepConfig:
    amplitude: tuple = (0.5, 1.3, 9)
    frequency: tuple = (-0.5, 0.5, 9)
    shots: int | None = 1000

    def __post_init__(self):
        for name in ("amplitude", "frequency"):
            axis = getattr(self, name)
            if axis is None or len(axis) != 3 or int(axis[2]) < 1:
                raise ConfigError(f"sweep.{name} must be [start, stop, num] with num >= 1, got {axis}")
            object.__setattr__(self, name, (float(axis[0]), float(axis[1]), int(axis[2])))
        if self.shots is not None and self.shots < 1:
            raise ConfigError("sweep.shots must be >= 1 or null")

    def grid(self) -> list[ControlPoint]:
        return make_grid(np.linspace(*self.amplitude), np.linspace(*self.frequency))


@dataclass(frozen=True)
class RunConfig:
    surrogate: SurrogateConfig = field(
        default_factory=lambda: SurrogateConfig(noise_floor=DEFAULT_NOISE, noise_slope=0.02)
    )
    noiseless: bool = False
    rpe: RpeConfig = field(default_factory=RpeConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed_from_sweep: bool = True
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0
    output_dir: str = "runs/default"

    def device_config(self) -> SurrogateConfig:
        return self.surrogate.noiseless() if self.noiseless else self.surrogate

    def with_overrides(self, seed=None, output_dir=None) -> "RunConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        return replace(self, **changes)

    def snapshot(self) -> dict:
        """Plain-data form, the same tree that :func:`from_dict` reads."""
        opt = asdict(self.optimizer)
        (alo, ahi), (flo, fhi) = opt.pop("initial_window")
        opt.pop("seed")
        opt["initial_window"] = {"amplitude": [alo, ahi], "frequency": [flo, fhi]}
        opt["seed_from_sweep"] = self.seed_from_sweep
        sur = asdict(self.surrogate)
        sur["stark_iz"] = list(sur["stark_iz"])
        sur["stark_zi"] = list(sur["stark_zi"])
        sur["noise_floor"] = _noise_to_dict(self.surrogate.noise_floor)
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "noiseless": self.noiseless,
            "surrogate": sur,
            "rpe": {"k_max": self.rpe.k_max, "shots_per_circuit": self.rpe.shots_per_circuit},
            "optimizer": opt,
            "sweep": {
                "amplitude": list(self.sweep.amplitude),
                "frequency": list(self.sweep.frequency),
                "shots": self.sweep.shots,
            },
        }


def _noise_to_dict(noise: NoiseModel) -> dict:
    return {
        "depolarizing_rate_per_cz": noise.depolarizing_rate_per_cz,
        "depolarizing_rate_per_1q": noise.depolarizing_rate_per_1q,
        "readout_confusion": [[list(row) for row in m] for m in noise.readout_confusion],
        "prep_flip_prob": list(noise.prep_flip_prob),
    }


def _take(tree: dict, key: str, kind=dict):
    value = tree.get(key, {} if kind is dict else None)
    if value is None and kind is dict:
        value = {}
    if kind is dict and not isinstance(value, dict):
        raise ConfigError(f"{key} must be a mapping")
    return value


def _check_keys(tree: dict, allowed, where: str):
    unknown = set(tree) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where or 'config'}: {sorted(unknown)}")


def from_dict(tree: dict | None) -> RunConfig:
    tree = dict(tree or {})
    _check_keys(tree, ("seed", "output_dir", "noiseless", "surrogate", "rpe", "optimizer", "sweep"), "")
    base = RunConfig()
    try:
        sur_tree = dict(_take(tree, "surrogate"))
        _check_keys(sur_tree, [f.name for f in SurrogateConfig.__dataclass_fields__.values()], "surrogate")
        noise_tree = _take(sur_tree, "noise_floor")
        noise = replace(base.surrogate.noise_floor, **noise_tree) if noise_tree else base.surrogate.noise_floor
        sur_tree["noise_floor"] = noise
        surrogate = replace(base.surrogate, **sur_tree)

        rpe = replace(base.rpe, **_take(tree, "rpe"))

        opt_tree = dict(_take(tree, "optimizer"))
        seed_from_sweep = bool(opt_tree.pop("seed_from_sweep", base.seed_from_sweep))
        window = opt_tree.pop("initial_window", None)
        if window is not None:
            opt_tree["initial_window"] = (tuple(window["amplitude"]), tuple(window["frequency"]))
        seed = int(tree.get("seed", base.seed))
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        optimizer = replace(base.optimizer, seed=seed, **opt_tree)

        sweep_tree = _take(tree, "sweep")
        sweep = replace(base.sweep, **sweep_tree)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        surrogate=surrogate,
        noiseless=bool(tree.get("noiseless", base.noiseless)),
        rpe=rpe,
        optimizer=optimizer,
        seed_from_sweep=seed_from_sweep,
        sweep=sweep,
        seed=seed,
        output_dir=str(tree.get("output_dir", base.output_dir)),
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return from_dict(yaml.safe_load(fh))
