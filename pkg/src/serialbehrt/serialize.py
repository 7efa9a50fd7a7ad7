"""Turn joined patient records into one deterministic text paragraph each.

Every patient becomes a single paragraph: a demographic sentence followed by
one clause per clinical event, in encounter order then event order. Clauses
are rendered from per-kind templates; diagnosis, medication, and dispense
events that are adjacent in the event stream are folded into one comma-joined
clause. Missing values drop the template segment that references them, and a
clause with no surviving value-bearing segment is omitted entirely (the
missing-value policy trains the model on no filler tokens).
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import TemplateError
from .ingest import EVENT_SCHEMAS, EhrDataset, PatientRecord

TEMPLATE_VERSION = "t1"

#: Event kinds whose adjacent runs collapse into a single comma-joined clause.
AGGREGATE_KINDS = frozenset({"diagnoses", "medications", "dispense"})

DEMOGRAPHIC_FIELDS = ("patient_id", "age", "race", "sex")

DEFAULT_TEMPLATES = {
    "demographics": (
        "Patient {patient_id} is a {age}-year-old {race} {sex} "
        "presenting to the emergency department."
    ),
    "triage": (
        "Triage: temperature {temperature} F, heart rate {heart_rate} bpm, "
        "respiratory rate {resp_rate} breaths per minute, "
        "oxygen saturation {o2_sat} percent, "
        "blood pressure {sbp}/{dbp} mmHg, pain score {pain}, "
        "acuity {acuity}, chief complaint {chief_complaint}."
    ),
    "vitals": (
        "Vitals: temperature {temperature} F, heart rate {heart_rate} bpm, "
        "respiratory rate {resp_rate} breaths per minute, "
        "oxygen saturation {o2_sat} percent, "
        "blood pressure {sbp}/{dbp} mmHg."
    ),
    "diagnoses": "Diagnoses: {icd_code}.",
    "medications": "Medications: {name}.",
    "dispense": "Dispensed: {name}.",
}


@dataclass(frozen=True)
class SerializedDocument:
    doc_id: str
    source: str  # "sci" or "ehr"
    text: str
    patient_id: str | None = None


def _placeholders(template: str) -> list[str]:
    return [f for _, f, _, _ in string.Formatter().parse(template) if f]


@dataclass
class TemplateSet:
    """Per-kind clause templates plus the omit-clause missing-value policy."""

    templates: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))
    version: str = TEMPLATE_VERSION

    def __post_init__(self) -> None:
        for kind, template in self.templates.items():
            if kind == "demographics":
                allowed = set(DEMOGRAPHIC_FIELDS)
            elif kind in EVENT_SCHEMAS:
                allowed = set(EVENT_SCHEMAS[kind])
            else:
                raise TemplateError(f"template for unknown event kind {kind!r}")
            unknown = set(_placeholders(template)) - allowed
            if unknown:
                raise TemplateError(
                    f"template {kind!r} references unknown fields {sorted(unknown)}"
                )
        missing = set(DEFAULT_TEMPLATES) - set(self.templates)
        if missing:
            raise TemplateError(f"templates missing for kinds {sorted(missing)}")

    @classmethod
    def from_file(cls, path: str) -> "TemplateSet":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        return cls(templates=data["templates"], version=data.get("version", TEMPLATE_VERSION))

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump({"version": self.version, "templates": self.templates},
                      handle, indent=2, sort_keys=True)
            handle.write("\n")


def format_value(raw: object) -> str:
    """Render a field value with at most one decimal place for numerics."""
    text = str(raw)
    try:
        number = float(text)
    except ValueError:
        return text
    if number == int(number):
        return str(int(number))
    return f"{number:.1f}"


def _render_clause(template: str, values: dict[str, str]) -> str | None:
    """Fill one clause template, dropping segments with missing values.

    A clause splits into an optional "Prefix: " head and ", "-separated
    segments. Returns None when no value-bearing segment survives.
    """
    if ": " in template:
        prefix, body = template.split(": ", 1)
        prefix += ": "
    else:
        prefix, body = "", template
    terminal = "."
    if body.endswith("."):
        body = body[:-1]
    else:
        terminal = ""
    kept = []
    any_value = False
    for segment in body.split(", "):
        fields = _placeholders(segment)
        if fields and any(f not in values for f in fields):
            continue
        if fields:
            any_value = True
            segment = segment.format(**values)
        kept.append(segment)
    if not any_value:
        return None
    return prefix + ", ".join(kept) + terminal


def serialize_patient(record: PatientRecord, templates: TemplateSet | None = None) -> SerializedDocument:
    """Map one patient record to its text paragraph."""
    templates = templates or TemplateSet()
    demo = record.demographics
    clauses = []
    demo_values = {
        "patient_id": record.patient_id,
        "age": format_value(demo.age),
        "sex": demo.sex,
        "race": demo.race,
    }
    clause = _render_clause(templates.templates["demographics"], demo_values)
    if clause:
        clauses.append(clause)

    for encounter in record.admissions:
        events = encounter.events
        i = 0
        while i < len(events):
            event = events[i]
            template = templates.templates[event.kind]
            if event.kind in AGGREGATE_KINDS:
                run = [event]
                while i + 1 < len(events) and events[i + 1].kind == event.kind:
                    i += 1
                    run.append(events[i])
                values = {}
                for fieldname in EVENT_SCHEMAS[event.kind]:
                    present = [format_value(e.payload[fieldname]) for e in run
                               if fieldname in e.payload]
                    if present:
                        values[fieldname] = ", ".join(present)
            else:
                values = {k: format_value(v) for k, v in event.payload.items()}
            clause = _render_clause(template, values)
            if clause:
                clauses.append(clause)
            i += 1

    text = " ".join(clauses)
    return SerializedDocument(
        doc_id=f"ehr-{record.patient_id}",
        source="ehr",
        text=text,
        patient_id=record.patient_id,
    )


def serialize_cohort(dataset: EhrDataset, templates: TemplateSet | None = None) -> list[SerializedDocument]:
    """One document per patient, ordered by ascending patient_id."""
    templates = templates or TemplateSet()
    records = sorted(dataset.patients, key=lambda p: p.patient_id)
    return [serialize_patient(record, templates) for record in records]


class EhrSerializer(TransformerMixin, BaseEstimator):
    """Stateless transformer from an EhrDataset to serialized documents.

    sklearn-compatible so serialization can sit at the head of a Pipeline;
    fit is a no-op.
    """

    def __init__(self, template_file: str | None = None):
        self.template_file = template_file

    def fit(self, X: EhrDataset, y=None) -> "EhrSerializer":
        return self

    def transform(self, X: EhrDataset) -> list[SerializedDocument]:
        templates = (
            TemplateSet.from_file(self.template_file) if self.template_file else TemplateSet()
        )
        return serialize_cohort(X, templates)
