"""Load delimited EHR-style tables, join them into patient records, select the
study cohort, and assign leakage-free train/validation/test splits.

Tables expected in a dataset directory (UTF-8 CSV with header row):

    patients.csv        patient_id,age,sex,race
    encounters.csv      patient_id,admission_id,arrival_time,culture_positive
    triage.csv          admission_id,timestamp,<triage fields>
    vitals.csv          admission_id,timestamp,<vitals fields>
    diagnoses.csv       admission_id,timestamp,icd_code,icd_version
    medications.csv     admission_id,timestamp,name
    dispense.csv        admission_id,timestamp,name
    susceptibility.csv  admission_id,antibiotic,label

Timestamps are ISO-8601. Rows referencing unknown patient or admission ids,
or carrying unparseable timestamps, are dropped and counted in the dataset's
warning tally rather than failing the load.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import ConfigError, MissingTable, SchemaError

ANTIBIOTICS = (
    "clindamycin",
    "erythromycin",
    "gentamicin",
    "levofloxacin",
    "oxacillin",
    "tetracycline",
    "trimethoprim_sulfa",
    "vancomycin",
)

UNTESTED = "untested"

#: Tie-break precedence for events sharing a timestamp (lower = earlier).
TABLE_PRECEDENCE = ("triage", "vitals", "diagnoses", "medications", "dispense")

EVENT_SCHEMAS = {
    "triage": (
        "temperature",
        "heart_rate",
        "resp_rate",
        "o2_sat",
        "sbp",
        "dbp",
        "pain",
        "acuity",
        "chief_complaint",
    ),
    "vitals": ("temperature", "heart_rate", "resp_rate", "o2_sat", "sbp", "dbp"),
    "diagnoses": ("icd_code", "icd_version"),
    "medications": ("name",),
    "dispense": ("name",),
}

#: CSV file name per event kind.
EVENT_TABLES = {kind: f"{kind}.csv" for kind in TABLE_PRECEDENCE}


@dataclass(frozen=True)
class ClinicalEvent:
    kind: str
    timestamp: datetime
    payload: dict[str, str]


@dataclass
class Encounter:
    admission_id: str
    arrival_time: datetime
    culture_positive: bool
    events: list[ClinicalEvent] = field(default_factory=list)
    susceptibility: dict[str, object] = field(default_factory=dict)

    def tested_antibiotics(self) -> list[str]:
        return [a for a in ANTIBIOTICS if self.susceptibility.get(a, UNTESTED) != UNTESTED]


@dataclass
class Demographics:
    age: float
    sex: str
    race: str


@dataclass
class PatientRecord:
    patient_id: str
    demographics: Demographics
    admissions: list[Encounter] = field(default_factory=list)


@dataclass
class EhrDataset:
    patients: list[PatientRecord]
    table_manifest: dict[str, int]
    warnings: dict[str, int] = field(default_factory=dict)

    def patient_ids(self) -> list[str]:
        return [p.patient_id for p in self.patients]


@dataclass(frozen=True)
class CohortCriteria:
    require_positive_culture: bool = True
    require_tested_antibiotic: bool = True


@dataclass(frozen=True)
class CohortReport:
    n_patients: int
    n_encounters: int
    n_tested_labels: int
    empty: bool


@dataclass(frozen=True)
class SplitAssignment:
    assignments: dict[str, str]
    seed: int
    ratios: tuple[float, float, float]

    def patients_in(self, split: str) -> list[str]:
        return sorted(pid for pid, s in self.assignments.items() if s == split)


def _read_csv(path: str, expected_header: list[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{os.path.basename(path)}: empty file, expected header "
                              f"{expected_header}")
        if header != expected_header:
            raise SchemaError(
                f"{os.path.basename(path)}: header {header} != expected {expected_header}"
            )
        rows = []
        for values in reader:
            if not values:
                continue
            if len(values) != len(header):
                raise SchemaError(
                    f"{os.path.basename(path)}: row with {len(values)} fields, "
                    f"expected {len(header)}"
                )
            rows.append(dict(zip(header, values)))
    return rows


def _parse_timestamp(raw: str) -> datetime | None:
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        return None


def load_tables(directory: str) -> EhrDataset:
    """Read the eight dataset tables from `directory` and join them.

    Raises MissingTable if a required file is absent and SchemaError on a
    malformed header. Rows that cannot be joined are dropped and tallied in
    the returned dataset's `warnings`.
    """
    required = ["patients.csv", "encounters.csv", "susceptibility.csv"] + list(
        EVENT_TABLES.values()
    )
    for name in required:
        if not os.path.exists(os.path.join(directory, name)):
            raise MissingTable(f"required table {name} not found in {directory}")

    manifest: dict[str, int] = {}
    warnings: dict[str, int] = {}

    def warn(reason: str, count: int = 1) -> None:
        if count:
            warnings[reason] = warnings.get(reason, 0) + count

    patient_rows = _read_csv(
        os.path.join(directory, "patients.csv"), ["patient_id", "age", "sex", "race"]
    )
    manifest["patients"] = len(patient_rows)
    patients: dict[str, PatientRecord] = {}
    for row in patient_rows:
        pid = row["patient_id"]
        if pid in patients:
            raise SchemaError(f"patients.csv: duplicate patient_id {pid!r}")
        try:
            age = float(row["age"])
        except ValueError:
            age = -1.0
        if age < 0 or not row["sex"] or not row["race"]:
            warn("invalid_patient_row")
            continue
        patients[pid] = PatientRecord(pid, Demographics(age, row["sex"], row["race"]))

    encounter_rows = _read_csv(
        os.path.join(directory, "encounters.csv"),
        ["patient_id", "admission_id", "arrival_time", "culture_positive"],
    )
    manifest["encounters"] = len(encounter_rows)
    encounters: dict[str, Encounter] = {}
    owner: dict[str, str] = {}
    for row in encounter_rows:
        pid = row["patient_id"]
        adm = row["admission_id"]
        if adm in encounters:
            raise SchemaError(f"encounters.csv: duplicate admission_id {adm!r}")
        if pid not in patients:
            warn("encounter_unknown_patient")
            continue
        arrival = _parse_timestamp(row["arrival_time"])
        if arrival is None:
            warn("encounter_bad_timestamp")
            continue
        enc = Encounter(
            admission_id=adm,
            arrival_time=arrival,
            culture_positive=row["culture_positive"].strip() == "1",
            susceptibility={a: UNTESTED for a in ANTIBIOTICS},
        )
        encounters[adm] = enc
        owner[adm] = pid

    for kind, filename in EVENT_TABLES.items():
        schema = EVENT_SCHEMAS[kind]
        rows = _read_csv(
            os.path.join(directory, filename), ["admission_id", "timestamp"] + list(schema)
        )
        manifest[kind] = len(rows)
        for row in rows:
            adm = row["admission_id"]
            if adm not in encounters:
                warn(f"{kind}_unknown_admission")
                continue
            ts = _parse_timestamp(row["timestamp"])
            if ts is None:
                warn(f"{kind}_bad_timestamp")
                continue
            payload = {f: row[f] for f in schema if row[f] != ""}
            encounters[adm].events.append(ClinicalEvent(kind, ts, payload))

    susc_rows = _read_csv(
        os.path.join(directory, "susceptibility.csv"), ["admission_id", "antibiotic", "label"]
    )
    manifest["susceptibility"] = len(susc_rows)
    for row in susc_rows:
        adm = row["admission_id"]
        if adm not in encounters:
            warn("susceptibility_unknown_admission")
            continue
        antibiotic = normalize_antibiotic(row["antibiotic"])
        if antibiotic not in ANTIBIOTICS:
            warn("susceptibility_unknown_antibiotic")
            continue
        if row["label"] not in ("0", "1"):
            warn("susceptibility_bad_label")
            continue
        encounters[adm].susceptibility[antibiotic] = int(row["label"])

    precedence = {kind: i for i, kind in enumerate(TABLE_PRECEDENCE)}
    for adm, enc in encounters.items():
        enc.events.sort(key=lambda e: (e.timestamp, precedence[e.kind]))
        patients[owner[adm]].admissions.append(enc)

    records = []
    for pid in sorted(patients):
        rec = patients[pid]
        rec.admissions.sort(key=lambda e: (e.arrival_time, e.admission_id))
        records.append(rec)
    return EhrDataset(records, manifest, warnings)


def normalize_antibiotic(raw: str) -> str:
    return raw.strip().lower().replace("/", "_").replace("-", "_").replace(" ", "_")


def write_tables(dataset: EhrDataset, directory: str) -> None:
    """Write `dataset` back out as the eight-table CSV layout.

    Inverse of load_tables on patient/encounter/event/susceptibility content.
    """
    os.makedirs(directory, exist_ok=True)

    def write(name: str, header: list[str], rows: list[list[str]]) -> None:
        with open(os.path.join(directory, name), "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)

    age_fmt = lambda a: str(int(a)) if float(a).is_integer() else repr(a)
    write(
        "patients.csv",
        ["patient_id", "age", "sex", "race"],
        [
            [p.patient_id, age_fmt(p.demographics.age), p.demographics.sex, p.demographics.race]
            for p in dataset.patients
        ],
    )
    write(
        "encounters.csv",
        ["patient_id", "admission_id", "arrival_time", "culture_positive"],
        [
            [p.patient_id, e.admission_id, e.arrival_time.isoformat(),
             "1" if e.culture_positive else "0"]
            for p in dataset.patients
            for e in p.admissions
        ],
    )
    for kind, filename in EVENT_TABLES.items():
        schema = EVENT_SCHEMAS[kind]
        rows = [
            [e.admission_id, ev.timestamp.isoformat()] + [ev.payload.get(f, "") for f in schema]
            for p in dataset.patients
            for e in p.admissions
            for ev in e.events
            if ev.kind == kind
        ]
        write(filename, ["admission_id", "timestamp"] + list(schema), rows)
    write(
        "susceptibility.csv",
        ["admission_id", "antibiotic", "label"],
        [
            [e.admission_id, a, str(e.susceptibility[a])]
            for p in dataset.patients
            for e in p.admissions
            for a in ANTIBIOTICS
            if e.susceptibility.get(a, UNTESTED) != UNTESTED
        ],
    )


def build_cohort(
    dataset: EhrDataset, criteria: CohortCriteria = CohortCriteria()
) -> tuple[EhrDataset, CohortReport]:
    """Filter to encounters satisfying the cohort criteria.

    An encounter qualifies when (per the enabled criteria) its culture flag is
    positive and at least one antibiotic has a tested susceptibility result.
    Patients left with no qualifying encounter are removed. An empty cohort is
    valid and flagged in the report.
    """
    kept_patients: list[PatientRecord] = []
    n_encounters = 0
    n_tested = 0
    for patient in dataset.patients:
        kept = []
        for enc in patient.admissions:
            if criteria.require_positive_culture and not enc.culture_positive:
                continue
            tested = enc.tested_antibiotics()
            if criteria.require_tested_antibiotic and not tested:
                continue
            kept.append(enc)
            n_tested += len(tested)
        if kept:
            kept_patients.append(PatientRecord(patient.patient_id, patient.demographics, kept))
            n_encounters += len(kept)
    cohort = EhrDataset(kept_patients, dict(dataset.table_manifest), dict(dataset.warnings))
    report = CohortReport(
        n_patients=len(kept_patients),
        n_encounters=n_encounters,
        n_tested_labels=n_tested,
        empty=not kept_patients,
    )
    return cohort, report


def group_split(
    cohort: EhrDataset, ratios: tuple[float, float, float], seed: int
) -> SplitAssignment:
    """Assign every patient (and with them all their encounters) to one split.

    Distinct patient ids are shuffled with a PCG64 generator seeded by `seed`
    and cut at the cumulative ratio boundaries, so the assignment is a pure
    function of (patient ids, ratios, seed) on any platform.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"ratios must be three nonnegative fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got sum {sum(ratios)!r}")

    ids = sorted(set(cohort.patient_ids()))
    rng = np.random.Generator(np.random.PCG64(seed))
    order = [ids[i] for i in rng.permutation(len(ids))]
    n = len(order)
    cut1 = int(round(n * ratios[0]))
    cut2 = int(round(n * (ratios[0] + ratios[1])))
    assignments = {}
    for i, pid in enumerate(order):
        if i < cut1:
            assignments[pid] = "train"
        elif i < cut2:
            assignments[pid] = "validation"
        else:
            assignments[pid] = "test"
    return SplitAssignment(assignments, seed, ratios)


def write_splits(split: SplitAssignment, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["patient_id", "split"])
        for pid in sorted(split.assignments):
            writer.writerow([pid, split.assignments[pid]])


def read_splits(path: str) -> dict[str, str]:
    rows = _read_csv(path, ["patient_id", "split"])
    return {row["patient_id"]: row["split"] for row in rows}
