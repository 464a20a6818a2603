"""The six CZ phase-estimation circuit classes and their text serialization.

Qubit A is the first tensor factor and the left character of an outcome
label ``"ab"``.  Every circuit prepares a superposition of two CZ
eigenstates, applies ``2**k`` CZs, rotates the measurement basis back onto
the computational basis and reads both qubits.  Outcomes outside the
plus/minus sets are discarded at analysis time.

Text format, one circuit per line::

    <phase>:<basis> k=<k> plus=<labels> minus=<labels> | <gate>; <gate>; ...

where a gate token is ``cz@AB``, ``x@A`` or ``ry(<angle>)@B`` with angles
written to 17 significant digits.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .model import PHASE_NAMES

QUBITS = ("A", "B")
GATE_KINDS = ("CZ", "RX", "RY", "X")
BASES = ("I", "Q")

# phase class -> (analysed qubit, spectator flipped by X or None)
_CLASS_LAYOUT = {
    "phi_00_01": ("B", None),
    "phi_10_11": ("B", "A"),
    "phi_01_11": ("A", "B"),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[str, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = 2 if self.kind == "CZ" else 1
        if len(self.qubits) != want or any(q not in QUBITS for q in self.qubits):
            raise ValueError(f"bad qubits {self.qubits!r} for {self.kind}")
        if self.kind == "CZ" and self.qubits != ("A", "B"):
            raise ValueError("CZ must act on (A, B)")

    def token(self) -> str:
        where = "".join(self.qubits)
        if self.kind in ("RX", "RY"):
            return f"{self.kind.lower()}({self.angle:.17g})@{where}"
        return f"{self.kind.lower()}@{where}"


CZ = Gate("CZ", ("A", "B"))


@dataclass(frozen=True)
class CircuitSpec:
    phase: str
    basis: str
    k: int
    layers: tuple[Gate, ...]
    plus_outcomes: frozenset[str]
    minus_outcomes: frozenset[str]

    @property
    def label(self) -> str:
        return f"{self.phase}:{self.basis}"

    @property
    def cz_count(self) -> int:
        return sum(1 for g in self.layers if g.kind == "CZ")

    def to_text(self) -> str:
        plus = ",".join(sorted(self.plus_outcomes))
        minus = ",".join(sorted(self.minus_outcomes))
        body = "; ".join(g.token() for g in self.layers)
        return f"{self.label} k={self.k} plus={plus} minus={minus} | {body}"


def _unprepare(basis: str, qubit: str) -> Gate:
    if basis == "I":
        return Gate("RY", (qubit,), -math.pi / 2)
    return Gate("RX", (qubit,), -math.pi / 2)


def _outcome(analysed: str, bit: int) -> str:
    # the spectator always reads 0 once its X has been undone
    return f"0{bit}" if analysed == "B" else f"{bit}0"


def rpe_circuit(phase: str, basis: str, k: int) -> CircuitSpec:
    if phase not in _CLASS_LAYOUT:
        raise ValueError(f"unknown phase class {phase!r}")
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    if k < 0:
        raise ValueError("k must be >= 0")
    analysed, flipped = _CLASS_LAYOUT[phase]
    prep = [Gate("RY", (analysed,), math.pi / 2)]
    post = [_unprepare(basis, analysed)]
    if flipped is not None:
        prep.insert(0, Gate("X", (flipped,)))
        post.insert(0, Gate("X", (flipped,)))
    if phase == "phi_01_11":
        # keep the circuit diagram order: analysed-qubit gates on top
        prep.reverse()
        post.reverse()
    # Rx(-pi/2) sends +y to |1>, so the Q "plus" outcome is bit 1.
    plus_bit = 0 if basis == "I" else 1
    return CircuitSpec(
        phase=phase,
        basis=basis,
        k=k,
        layers=tuple(prep) + (CZ,) * (2**k) + tuple(post),
        plus_outcomes=frozenset({_outcome(analysed, plus_bit)}),
        minus_outcomes=frozenset({_outcome(analysed, 1 - plus_bit)}),
    )


def generate_rpe_circuits(k_max: int) -> list[CircuitSpec]:
    """All ``6 * (k_max + 1)`` circuits, ordered by k, then phase class, then I/Q."""
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    return [rpe_circuit(phase, basis, k) for k in range(k_max + 1) for phase in PHASE_NAMES for basis in BASES]


_GATE_RE = re.compile(r"^(cz|x|rx|ry)(?:\(([^)]*)\))?@([AB]{1,2})$")
_HEAD_RE = re.compile(r"^(\w+):([IQ]) k=(\d+) plus=([01,]+) minus=([01,]+)$")


def parse_gate(token: str) -> Gate:
    m = _GATE_RE.match(token.strip())
    if m is None:
        raise ValueError(f"malformed gate token {token!r}")
    kind, angle, where = m.groups()
    if (angle is None) != (kind in ("cz", "x")):
        raise ValueError(f"malformed gate token {token!r}")
    return Gate(kind.upper(), tuple(where), float(angle) if angle is not None else 0.0)


def circuit_from_text(line: str) -> CircuitSpec:
    head, sep, body = line.partition("|")
    m = _HEAD_RE.match(head.strip())
    if not sep or m is None:
        raise ValueError(f"malformed circuit line {line!r}")
    phase, basis, k, plus, minus = m.groups()
    layers = tuple(parse_gate(tok) for tok in body.split(";") if tok.strip())
    return CircuitSpec(phase, basis, int(k), layers, frozenset(plus.split(",")), frozenset(minus.split(",")))


def dumps(circuits) -> str:
    return "".join(c.to_text() + "\n" for c in circuits)


def loads(text: str) -> list[CircuitSpec]:
    return [circuit_from_text(line) for line in text.splitlines() if line.strip()]
