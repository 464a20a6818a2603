"""Command line: ``czrpe {sweep,rpe,calibrate,replay}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .calibrate import finalize_calibration, optimize
from .config import ConfigError, RunConfig, load_config
from .device import ControlPoint, SurrogateBackend, coarse_sweep
from .experiment import ANGLE_NAMES, derive_seed, run_rpe
from .model import TARGETS
from . import records

log = logging.getLogger("czrpe")

# stage keys for seed derivation
SWEEP, OPTIMIZE, FINALIZE, RPE = 1, 2, 3, 4

SWEEP_COLUMNS = ("amplitude", "frequency", "R")
TRAJECTORY_COLUMNS = ("iteration", "candidate", "amplitude", "frequency", "cost", "k_last")
SUMMARY_COLUMNS = ("angle", "estimate", "target", "error", "window", "k_last")
ANGLE_ERROR_COLUMNS = (
    "angle", "target",
    "before_estimate", "before_error", "before_window", "before_k_last",
    "after_estimate", "after_error", "after_window", "after_k_last",
)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_sweep(cfg: RunConfig) -> tuple[Path, ControlPoint]:
    out = _out_dir(cfg)
    rows, best = coarse_sweep(cfg.sweep.grid(), cfg.device_config(), cfg.sweep.shots, derive_seed(cfg.seed, SWEEP))
    path = out / "sweep.csv"
    records.write_csv(path, SWEEP_COLUMNS, [(p.amplitude, p.frequency, r) for p, r in rows])
    best_r = max(r for _, r in rows)
    print(f"argmax conditionality R={best_r:.6g} at amplitude={best.amplitude:.6g} frequency={best.frequency:.6g}")
    return path, best


def cmd_rpe(cfg: RunConfig, point: ControlPoint | None = None) -> Path:
    out = _out_dir(cfg)
    device = cfg.device_config()
    point = point or device.optimum
    backend = SurrogateBackend(device)
    result = run_rpe(backend, point, cfg.rpe.k_max, cfg.rpe.shots_per_circuit, derive_seed(cfg.seed, RPE))
    path = out / "rpe_record.jsonl"
    with records.RunRecordWriter(path, "rpe", cfg.snapshot()) as w:
        w.write_all(records.rpe_lines("rpe", point, result))
    summary = []
    for name, target in zip(ANGLE_NAMES, TARGETS.as_array()):
        est = getattr(result.params, name)
        summary.append((name, est, float(target), est - float(target), result.angle_window(name),
                        result.angle_k_last(name)))
        print(f"{name} = {est:.6f} +/- {result.angle_window(name):.2e}  (target {target:+.6f}, "
              f"k_last {result.angle_k_last(name)})")
    records.write_csv(out / "rpe_summary.csv", SUMMARY_COLUMNS, summary)
    return path


def cmd_calibrate(cfg: RunConfig) -> Path:
    out = _out_dir(cfg)
    device = cfg.device_config()
    backend = SurrogateBackend(device)
    opt_cfg = replace(cfg.optimizer, seed=derive_seed(cfg.seed, OPTIMIZE))

    if cfg.seed_from_sweep:
        _, start = cmd_sweep(cfg)
        (alo, ahi), (flo, fhi) = opt_cfg.initial_window
        ha, hf = (ahi - alo) / 2, (fhi - flo) / 2
        lo_a = max(0.0, start.amplitude - ha)
        window = ((lo_a, lo_a + 2 * ha), (start.frequency - hf, start.frequency + hf))
        opt_cfg = replace(opt_cfg, initial_window=window)

    path = out / "calibration_record.jsonl"
    with records.RunRecordWriter(path, "calibrate", cfg.snapshot()) as w, \
            records.CsvAppender(out / "trajectory.csv", TRAJECTORY_COLUMNS) as traj:

        def on_record(rec):
            eval_id = f"i{rec.iteration}c{rec.candidate}"
            if rec.rpe is not None:
                w.write_all(records.rpe_lines(eval_id, rec.point, rec.rpe))
            w.write(records.cost_line(eval_id, rec))
            cost = rec.cost if math.isfinite(rec.cost) else "inf"
            traj.write((rec.iteration, rec.candidate, rec.point.amplitude, rec.point.frequency, cost, rec.k_last))

        best, history = optimize(backend, opt_cfg, cfg.rpe, callback=on_record)
        report, _ = finalize_calibration(best, backend, cfg.rpe, derive_seed(cfg.seed, FINALIZE))
        w.write_all(records.rpe_lines("final_before", best.point, report.before))
        w.write_all(records.rpe_lines("final_after", best.point, report.after))
        w.write(records.report_line(report, "final_before", "final_after"))

    rows = report.rows()
    records.write_csv(out / "angle_errors.csv", ANGLE_ERROR_COLUMNS, [[r[c] for c in ANGLE_ERROR_COLUMNS] for r in rows])
    print(f"{len(history)} evaluations; best point amplitude={best.point.amplitude:.6g} "
          f"frequency={best.point.frequency:.6g} cost={best.cost:.3e}")
    for r in rows:
        print(f"{r['angle']}: error {r['before_error']:+.3e} -> {r['after_error']:+.3e} "
              f"(window {r['after_window']:.2e})")
    return path


def cmd_replay(path) -> int:
    lines = records.load_record(path)
    checked, problems = records.replay(lines)
    for p in problems:
        print(f"MISMATCH {p}")
    print(f"replayed {checked} evaluations: {'ok' if not problems else f'{len(problems)} mismatches'}")
    return 1 if problems else 0


def _parse_point(text: str) -> ControlPoint:
    try:
        amp, freq = (float(v) for v in text.split(","))
        return ControlPoint(amp, freq)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--point expects 'amplitude,frequency', got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="czrpe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")

    common(sub.add_parser("sweep", help="coarse conditionality sweep"))
    p = sub.add_parser("rpe", help="one three-phase RPE run at a control point")
    common(p)
    p.add_argument("--point", type=_parse_point, help="amplitude,frequency (default: the surrogate optimum)")
    common(sub.add_parser("calibrate", help="sweep, optimise, apply virtual Z"))
    p = sub.add_parser("replay", help="recompute every estimate in a run record from its counts")
    p.add_argument("record")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            return cmd_replay(args.record)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
        if args.command == "sweep":
            cmd_sweep(cfg)
        elif args.command == "rpe":
            cmd_rpe(cfg, args.point)
        elif args.command == "calibrate":
            cmd_calibrate(cfg)
    except (ConfigError, records.SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
