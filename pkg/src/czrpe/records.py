"""JSONL run records, CSV plot tables, and replay.

Counts are the persisted primitive.  Every estimate, phase, angle and cost
in a record can be recomputed from the stored counts plus the stored
circuit text; :func:`replay` does exactly that and diffs the result.

Record lines (field ``type``):

``header``      schema_version, timestamp, command, config
``counts``      eval, index, circuit (text form), counts
``estimate``    eval, phase, k, phi_hat, window_lo, window_hi, trusted, n_k
``rpe_summary`` eval, point, phases, k_last, params
``cost``        eval, iteration, candidate, seed, point, cost, k_last, estimated
``report``      point, correction, before, after, rows
"""

from __future__ import annotations

import csv
import json
import os
import time
from collections import defaultdict
from pathlib import Path

from .calibrate import zz_cost
from .circuits import circuit_from_text
from .device import ControlPoint
from .experiment import RpeResult, analyze_counts
from .model import PHASE_NAMES

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def timestamp() -> str:
    """UTC ISO timestamp; pinned by ``SOURCE_DATE_EPOCH`` for reproducible records."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch is not None else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def fmt(x) -> str:
    """17 significant digits, round-trip exact."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


class CsvAppender:
    """CSV writer that flushes after every row, so partial runs keep their data."""

    def __init__(self, path, header):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)
        self._fh.flush()

    def write(self, row):
        self._w.writerow([fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _params_dict(p):
    return None if p is None else {"theta_iz": p.theta_iz, "theta_zi": p.theta_zi, "theta_zz": p.theta_zz}


def _point_list(point):
    return None if point is None else [point.amplitude, point.frequency]


def rpe_lines(eval_id: str, point, result: RpeResult) -> list[dict]:
    lines = []
    for index, (circuit, counts) in enumerate(zip(result.circuits, result.counts)):
        lines.append({"type": "counts", "eval": eval_id, "index": index, "circuit": circuit.to_text(),
                      "counts": dict(counts)})
    lines.extend(estimate_lines(eval_id, result))
    lines.append(summary_line(eval_id, point, result))
    return lines


def estimate_lines(eval_id: str, result: RpeResult) -> list[dict]:
    out = []
    for phase in PHASE_NAMES:
        for est in result.estimates[phase]:
            out.append({"type": "estimate", "eval": eval_id, "phase": phase, "k": est.k, "phi_hat": est.phi_hat,
                        "window_lo": est.window_lo, "window_hi": est.window_hi, "trusted": est.trusted,
                        "n_k": est.n_k})
    return out


def summary_line(eval_id: str, point, result: RpeResult) -> dict:
    return {
        "type": "rpe_summary",
        "eval": eval_id,
        "point": _point_list(point),
        "phases": {p: getattr(result.phases, p) for p in PHASE_NAMES},
        "k_last": dict(result.k_last),
        "params": _params_dict(result.params),
    }


def cost_line(eval_id: str, rec) -> dict:
    return {
        "type": "cost",
        "eval": eval_id,
        "iteration": rec.iteration,
        "candidate": rec.candidate,
        "seed": rec.seed,
        "point": _point_list(rec.point),
        "cost": None if rec.failed else rec.cost,
        "k_last": rec.k_last,
        "estimated": _params_dict(rec.estimated),
    }


def report_line(report, before_id: str, after_id: str) -> dict:
    return {
        "type": "report",
        "point": _point_list(report.point),
        "correction": list(report.correction),
        "before": before_id,
        "after": after_id,
        "rows": report.rows(),
    }


class RunRecordWriter:
    def __init__(self, path, command: str, config_snapshot: dict):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8")
        self.write({"type": "header", "schema_version": SCHEMA_VERSION, "timestamp": timestamp(),
                    "command": command, "config": config_snapshot})

    def write(self, line: dict):
        self._fh.write(json.dumps(line, sort_keys=True, allow_nan=False) + "\n")
        self._fh.flush()

    def write_all(self, lines):
        for line in lines:
            self.write(line)

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def load_record(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise SchemaError(f"{path}: missing header line")
    version = lines[0].get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return lines


def _roundtrip(obj):
    return json.loads(json.dumps(obj, sort_keys=True))


def replay(lines: list[dict]) -> tuple[int, list[str]]:
    """Recompute estimates, summaries and costs from stored counts.

    Returns ``(evaluations_checked, mismatches)``; an empty mismatch list
    means every derived quantity matched exactly.
    """
    counts = defaultdict(list)
    stored = defaultdict(list)
    for line in lines:
        kind = line.get("type")
        if kind == "counts":
            counts[line["eval"]].append(line)
        elif kind in ("estimate", "rpe_summary", "cost"):
            stored[line["eval"]].append(line)

    problems = []
    for eval_id, rows in counts.items():
        rows = sorted(rows, key=lambda r: r["index"])
        circuits = [circuit_from_text(r["circuit"]) for r in rows]
        result = analyze_counts(circuits, [r["counts"] for r in rows])
        summary = next((s for s in stored[eval_id] if s["type"] == "rpe_summary"), None)
        point = None
        if summary is not None and summary["point"] is not None:
            point = ControlPoint(*summary["point"])
        expected = estimate_lines(eval_id, result) + [summary_line(eval_id, point, result)]
        cost_rows = [s for s in stored[eval_id] if s["type"] == "cost"]
        recomputed_cost = zz_cost(result.params)
        params = _roundtrip(_params_dict(result.params))
        for c in cost_rows:
            if c["cost"] != recomputed_cost or c["k_last"] != result.min_k_last or c["estimated"] != params:
                problems.append(f"{eval_id}: cost {c['cost']!r} != recomputed {recomputed_cost!r}")
        got = [s for s in stored[eval_id] if s["type"] != "cost"]
        if _roundtrip(expected) != got:
            problems.append(f"{eval_id}: stored estimates differ from recomputation")
    return len(counts), problems
