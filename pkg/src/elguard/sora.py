"""Table-driven risk tailoring: ground-risk class, mitigation credit, and the
resulting assurance/integrity level for a UAV operation.

The published risk tables are not shipped in full: the default tables carry
the rows needed for the reference delivery operation plus clearly labeled
placeholder rows, and every table can be replaced wholesale through JSON
config. Nothing here invents normative values silently; the `notes` entries
travel with the tables to say where each row came from.

Robustness of a mitigation is the min of its integrity and assurance levels
(none < low < medium < high) - the conservative way to combine "how much risk
it removes" with "how sure we are it does".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .errors import (
    NoMatchingRow,
    NonPositiveHeight,
    NonPositiveMass,
    UnknownMitigationKind,
    UnknownOutcome,
)

STANDARD_GRAVITY = 9.80665  # m/s^2


class Scenario(str, Enum):
    VLOS_SPARSE = "VLOS_sparse"
    BVLOS_SPARSE = "BVLOS_sparse"
    VLOS_POPULATED = "VLOS_populated"
    BVLOS_POPULATED = "BVLOS_populated"
    OVER_ASSEMBLY = "over_assembly"


class Arc(str, Enum):
    A = "a"
    B = "b"
    C = "c"
    D = "d"


class Robustness(IntEnum):
    NONE = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @staticmethod
    def from_label(label: str) -> "Robustness":
        try:
            return Robustness[label.upper()]
        except KeyError:
            raise ValueError(f"unknown robustness level {label!r}") from None


class MitigationKind(str, Enum):
    M1 = "M1"
    ACTIVE_M1_EL = "active_M1_EL"
    M2 = "M2"
    M3 = "M3"


@dataclass(frozen=True)
class OperationSpec:
    span_m: float
    mtow_kg: float
    flight_height_m: float
    scenario: Scenario
    arc: Arc

    def __post_init__(self) -> None:
        for name in ("span_m", "mtow_kg", "flight_height_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @staticmethod
    def from_dict(d: dict) -> "OperationSpec":
        return OperationSpec(
            span_m=float(d["span_m"]),
            mtow_kg=float(d["mtow_kg"]),
            flight_height_m=float(d["flight_height_m"]),
            scenario=Scenario(d["scenario"]),
            arc=Arc(d["arc"]),
        )

    def as_dict(self) -> dict:
        return {
            "span_m": self.span_m,
            "mtow_kg": self.mtow_kg,
            "flight_height_m": self.flight_height_m,
            "scenario": self.scenario.value,
            "arc": self.arc.value,
        }


@dataclass(frozen=True)
class MitigationEntry:
    kind: MitigationKind
    integrity: Robustness = Robustness.NONE
    assurance: Robustness = Robustness.NONE

    @property
    def robustness(self) -> Robustness:
        return min(self.integrity, self.assurance)

    @staticmethod
    def from_dict(d: dict) -> "MitigationEntry":
        return MitigationEntry(
            kind=MitigationKind(d["kind"]),
            integrity=Robustness.from_label(d.get("integrity", "none")),
            assurance=Robustness.from_label(d.get("assurance", "none")),
        )

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "integrity": self.integrity.label,
            "assurance": self.assurance.label,
        }


@dataclass(frozen=True)
class ElChecklist:
    """Yes/no answers to the emergency-landing mitigation criteria.

    Integrity (what the selection achieves): zones free of high-risk areas,
    effectiveness under the operation's conditions, and selection that
    accounts for drift, failures, and weather. Assurance (how well that is
    demonstrated): an applicant declaration, testing evidence, authority-
    verified video data, runtime monitoring, third-party validation, and
    validation across a wide range of external conditions.
    """

    no_high_risk_zones: bool = False
    effective_under_conditions: bool = False
    drift_aware_selection: bool = False
    declaration: bool = False
    testing_evidence: bool = False
    verified_video_data: bool = False
    runtime_monitoring: bool = False
    third_party_validation: bool = False
    wide_condition_validation: bool = False

    @staticmethod
    def from_dict(d: dict) -> "ElChecklist":
        known = {f: bool(d.get(f, False)) for f in ElChecklist.__dataclass_fields__}
        return ElChecklist(**known)

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class ElRobustness:
    integrity: Robustness
    assurance: Robustness
    robustness: Robustness

    def as_dict(self) -> dict:
        return {
            "integrity": self.integrity.label,
            "assurance": self.assurance.label,
            "robustness": self.robustness.label,
        }


@dataclass(frozen=True)
class RiskTables:
    """All lookup tables, replaceable as one JSON document."""

    span_breaks_m: tuple[float, ...]
    energy_breaks_j: tuple[float, ...]
    grc_rows: dict[Scenario, tuple[int | None, ...]]
    sail_rows: dict[int, dict[Arc, int]]
    mitigation_deltas: dict[MitigationKind, dict[Robustness, int]]
    notes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ncols = len(self.span_breaks_m) + 1
        if len(self.energy_breaks_j) + 1 != ncols:
            raise ValueError("span and energy breaks must define the same column count")
        for scenario, row in self.grc_rows.items():
            if len(row) != ncols:
                raise ValueError(f"GRC row {scenario.value} must have {ncols} entries")
            for v in row:
                if v is not None and not 1 <= v <= 8:
                    raise ValueError(f"GRC values must be 1..8, got {v}")
        for grc, row in self.sail_rows.items():
            if not 1 <= grc <= 8:
                raise ValueError(f"SAIL rows keyed by GRC 1..8, got {grc}")
            for v in row.values():
                if not 1 <= v <= 7:
                    raise ValueError(f"SAIL values must be 1..7, got {v}")

    @staticmethod
    def from_dict(d: dict) -> "RiskTables":
        grc = d["grc"]
        rows = {
            Scenario(name): tuple(row)
            for name, row in grc["rows"].items()
        }
        sail_rows = {
            int(grc_key): {Arc(a): int(v) for a, v in arcs.items()}
            for grc_key, arcs in d["sail"].items()
        }
        deltas = {
            MitigationKind(kind): {
                Robustness.from_label(level): int(delta)
                for level, delta in by_level.items()
            }
            for kind, by_level in d["mitigation_deltas"].items()
        }
        return RiskTables(
            span_breaks_m=tuple(float(v) for v in grc["span_breaks_m"]),
            energy_breaks_j=tuple(float(v) for v in grc["energy_breaks_j"]),
            grc_rows=rows,
            sail_rows=sail_rows,
            mitigation_deltas=deltas,
            notes=dict(d.get("notes", {})),
        )

    def as_dict(self) -> dict:
        return {
            "grc": {
                "span_breaks_m": list(self.span_breaks_m),
                "energy_breaks_j": list(self.energy_breaks_j),
                "rows": {s.value: list(row) for s, row in self.grc_rows.items()},
            },
            "sail": {
                str(grc): {a.value: v for a, v in row.items()}
                for grc, row in self.sail_rows.items()
            },
            "mitigation_deltas": {
                kind.value: {level.label: delta for level, delta in by_level.items()}
                for kind, by_level in self.mitigation_deltas.items()
            },
            "notes": dict(self.notes),
        }


def default_tables() -> RiskTables:
    """Shipped tables: anchored rows for the reference delivery operation,
    placeholder rows (labeled in `notes`) everywhere else."""
    return RiskTables(
        span_breaks_m=(1.0, 3.0, 8.0),
        energy_breaks_j=(700.0, 34_000.0, 1_084_000.0),
        grc_rows={
            Scenario.VLOS_SPARSE: (2, 3, 4, 5),
            Scenario.BVLOS_SPARSE: (3, 4, 5, 6),
            Scenario.VLOS_POPULATED: (4, 5, 6, 8),
            Scenario.BVLOS_POPULATED: (5, 6, 8, None),
            Scenario.OVER_ASSEMBLY: (7, 7, 8, None),
        },
        sail_rows={
            1: {Arc.A: 1, Arc.B: 2, Arc.C: 4, Arc.D: 6},
            2: {Arc.A: 1, Arc.B: 2, Arc.C: 4, Arc.D: 6},
            3: {Arc.A: 2, Arc.B: 2, Arc.C: 4, Arc.D: 6},
            4: {Arc.A: 3, Arc.B: 3, Arc.C: 4, Arc.D: 6},
            5: {Arc.A: 4, Arc.B: 4, Arc.C: 4, Arc.D: 6},
            6: {Arc.A: 5, Arc.B: 5, Arc.C: 5, Arc.D: 6},
            7: {Arc.A: 6, Arc.B: 6, Arc.C: 6, Arc.D: 6},
            8: {Arc.A: 7, Arc.B: 7, Arc.C: 7, Arc.D: 7},
        },
        mitigation_deltas={
            MitigationKind.M1: {
                Robustness.LOW: -1,
                Robustness.MEDIUM: -2,
                Robustness.HIGH: -4,
            },
            MitigationKind.M2: {
                Robustness.LOW: 0,
                Robustness.MEDIUM: -1,
                Robustness.HIGH: -2,
            },
            MitigationKind.M3: {
                Robustness.NONE: 1,
                Robustness.LOW: 1,
                Robustness.MEDIUM: 0,
                Robustness.HIGH: -1,
            },
            MitigationKind.ACTIVE_M1_EL: {
                Robustness.NONE: 0,
                Robustness.LOW: -1,
                Robustness.MEDIUM: -2,
                Robustness.HIGH: -2,
            },
        },
        notes={
            "grc.BVLOS_populated": "column 2 anchored by the reference case (intrinsic 6); last column undefined on purpose",
            "grc.other_rows": "placeholder values from the public standard, replace for real assessments",
            "sail.6c_7c": "anchored by the reference case (SAIL 5 and 6)",
            "sail.grc8": "placeholder: max SAIL as a conservative stand-in, the standard delegates GRC>7 elsewhere",
            "mitigation_deltas.M3": "none/low penalty +1 anchored; an adequate plan (>=medium) removes it",
            "mitigation_deltas.M1_M2": "placeholder values from the public standard; classic M1 buffers are not evaluated here",
            "mitigation_deltas.active_M1_EL": "placeholder credit for active landing-zone selection; no published value exists, tune via config",
        },
    )


# --- ballistic figures -------------------------------------------------------

def ballistic_speed(height_m: float, g: float = STANDARD_GRAVITY) -> float:
    """Free-fall impact speed from the given height, sqrt(2*g*h)."""
    if height_m <= 0:
        raise NonPositiveHeight(f"height must be positive, got {height_m}")
    return math.sqrt(2.0 * g * height_m)


def kinetic_energy(mass_kg: float, speed_ms: float) -> float:
    """Impact kinetic energy in joules, m*v^2/2."""
    if mass_kg <= 0:
        raise NonPositiveMass(f"mass must be positive, got {mass_kg}")
    if speed_ms < 0:
        raise ValueError(f"speed must be non-negative, got {speed_ms}")
    return 0.5 * mass_kg * speed_ms * speed_ms


# --- ground-risk class -------------------------------------------------------

def _class_index(value: float, breaks: tuple[float, ...]) -> int:
    for i, b in enumerate(breaks):
        if value <= b:
            return i
    return len(breaks)


def intrinsic_grc(spec: OperationSpec, tables: RiskTables) -> int:
    """Intrinsic ground-risk class: scenario row, column by the worse of the
    span class and the ballistic kinetic-energy class."""
    speed = ballistic_speed(spec.flight_height_m)
    energy = kinetic_energy(spec.mtow_kg, speed)
    col = max(
        _class_index(spec.span_m, tables.span_breaks_m),
        _class_index(energy, tables.energy_breaks_j),
    )
    row = tables.grc_rows.get(spec.scenario)
    if row is None:
        raise NoMatchingRow(f"no GRC row for scenario {spec.scenario.value}")
    value = row[col]
    if value is None:
        raise NoMatchingRow(
            f"GRC undefined for scenario {spec.scenario.value}, column {col}"
        )
    return value


# --- mitigation ledger -------------------------------------------------------

def el_robustness(checklist: ElChecklist) -> ElRobustness:
    """Evaluate the landing-zone mitigation checklist to levels.

    Levels are cumulative: a level is reached only when its criteria and all
    lower levels' criteria hold. The high integrity level shares the medium
    criteria, so full integrity answers evaluate straight to high.
    """
    low_i = checklist.no_high_risk_zones and checklist.effective_under_conditions
    med_i = low_i and checklist.drift_aware_selection
    if med_i:
        integrity = Robustness.HIGH   # high criteria == medium criteria
    elif low_i:
        integrity = Robustness.LOW
    else:
        integrity = Robustness.NONE

    low_a = checklist.declaration
    med_a = low_a and (
        checklist.testing_evidence
        and checklist.verified_video_data
        and checklist.runtime_monitoring
    )
    high_a = med_a and (
        checklist.third_party_validation and checklist.wide_condition_validation
    )
    if high_a:
        assurance = Robustness.HIGH
    elif med_a:
        assurance = Robustness.MEDIUM
    elif low_a:
        assurance = Robustness.LOW
    else:
        assurance = Robustness.NONE

    return ElRobustness(
        integrity=integrity,
        assurance=assurance,
        robustness=min(integrity, assurance),
    )


def apply_mitigations(
    intrinsic: int,
    ledger: tuple[MitigationEntry, ...] | list[MitigationEntry],
    el: ElChecklist | None,
    tables: RiskTables,
) -> tuple[int, list[dict]]:
    """Sum configured mitigation credits onto the intrinsic GRC.

    Each ledger entry contributes the configured delta for its (kind,
    robustness). The EL entry's robustness comes from the checklist when one
    is supplied. A missing emergency-response entry is scored as one with no
    robustness, which carries the configured penalty. The result is clamped
    to 1..8; the returned trace lists every applied delta.
    """
    trace: list[dict] = []
    total = 0
    for entry in ledger:
        deltas = tables.mitigation_deltas.get(entry.kind)
        if deltas is None:
            raise UnknownMitigationKind(f"no configured deltas for {entry.kind}")
        source = "ledger"
        robustness = entry.robustness
        if entry.kind == MitigationKind.ACTIVE_M1_EL and el is not None:
            robustness = el_robustness(el).robustness
            source = "el_checklist"
        delta = deltas.get(robustness, 0)
        total += delta
        trace.append(
            {
                "kind": entry.kind.value,
                "robustness": robustness.label,
                "delta": delta,
                "source": source,
            }
        )
    if not any(entry.kind == MitigationKind.M3 for entry in ledger):
        penalty = tables.mitigation_deltas.get(MitigationKind.M3, {}).get(Robustness.NONE, 0)
        total += penalty
        trace.append(
            {
                "kind": MitigationKind.M3.value,
                "robustness": Robustness.NONE.label,
                "delta": penalty,
                "source": "absent",
            }
        )
    final = min(8, max(1, intrinsic + total))
    return final, trace


def sail(final_grc: int, arc: Arc, tables: RiskTables) -> int:
    row = tables.sail_rows.get(final_grc)
    if row is None or arc not in row:
        raise NoMatchingRow(f"no SAIL entry for GRC {final_grc}, ARC-{arc.value}")
    return row[arc]


# --- hazard severity ---------------------------------------------------------

GROUND_OUTCOMES = {
    "R1": ("accident involving ground vehicles", 5),
    "R2": ("injures people on the ground", 4),
    "R3": ("post-crash fire threatening wildlife and environment", 3),
    "R4": ("collision with infrastructure", 3),
    "R5": ("crash into a parked ground vehicle", 2),
}


def severity_lookup(
    outcome: str,
    active_mitigations: tuple[MitigationEntry, ...] | list[MitigationEntry] = (),
) -> int:
    """Severity 1..5 of a ground outcome under the active mitigations.

    An impact-effect mitigation of at least medium robustness softens a
    direct hit on people (R2) from severity 4 to 2. Nothing softens a busy
    road: vehicles at speed make R1 catastrophic regardless.
    """
    if outcome not in GROUND_OUTCOMES:
        raise UnknownOutcome(f"unknown ground outcome {outcome!r}")
    severity = GROUND_OUTCOMES[outcome][1]
    if outcome == "R2":
        effective_m2 = any(
            e.kind == MitigationKind.M2 and e.robustness >= Robustness.MEDIUM
            for e in active_mitigations
        )
        if effective_m2:
            severity = 2
    return severity


# --- full assessment ---------------------------------------------------------

@dataclass(frozen=True)
class RiskAssessment:
    spec: OperationSpec
    ballistic_speed_ms: float
    kinetic_energy_j: float
    intrinsic_grc: int
    final_grc: int
    arc: Arc
    sail: int
    mitigation_trace: tuple[dict, ...]
    el: ElRobustness | None

    def as_dict(self) -> dict:
        return {
            "spec": self.spec.as_dict(),
            "ballistic_speed_ms": self.ballistic_speed_ms,
            "kinetic_energy_j": self.kinetic_energy_j,
            "intrinsic_grc": self.intrinsic_grc,
            "final_grc": self.final_grc,
            "arc": self.arc.value,
            "sail": self.sail,
            "mitigation_trace": list(self.mitigation_trace),
            "el": self.el.as_dict() if self.el else None,
        }


def assess(
    spec: OperationSpec,
    tables: RiskTables,
    ledger: tuple[MitigationEntry, ...] | list[MitigationEntry] = (),
    el: ElChecklist | None = None,
) -> RiskAssessment:
    """End-to-end tailoring: intrinsic GRC, mitigation credit, final SAIL."""
    speed = ballistic_speed(spec.flight_height_m)
    energy = kinetic_energy(spec.mtow_kg, speed)
    intrinsic = intrinsic_grc(spec, tables)
    final, trace = apply_mitigations(intrinsic, ledger, el, tables)
    sail_level = sail(final, spec.arc, tables)
    el_levels = el_robustness(el) if el is not None else None
    return RiskAssessment(
        spec=spec,
        ballistic_speed_ms=speed,
        kinetic_energy_j=energy,
        intrinsic_grc=intrinsic,
        final_grc=final,
        arc=spec.arc,
        sail=sail_level,
        mitigation_trace=tuple(trace),
        el=el_levels,
    )
