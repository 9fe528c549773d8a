"""Measured readout times from published experiments, checked against d/v.

The built-in dataset collects seven platforms spanning nine orders of
magnitude in size, from a single aluminium ion to a centimetre-scale atomic
clock, each with its apparatus size and its reported measurement duration.
``check_bound`` compares every record against the minimum time d/v implied
by an information velocity v; ``emit_plot_data`` writes the points plus a
sampled bound line for log-log plotting.

At the conventional v = 1e5 m/s every record passes with room to spare. The
binding record (smallest ratio of measured time to bound time) is the fast
transmon readout: its size-to-time quotient d/t is about 2.9e3 m/s, so the
all-pass verdict survives any velocity down to that value and no further.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qmtime.speedlimit import CONVENTION_VELOCITY

__all__ = [
    "ExperimentRecord",
    "BoundEntry",
    "BoundReport",
    "builtin_dataset",
    "check_bound",
    "emit_plot_data",
    "load_dataset",
    "DATASET_COLUMNS",
]

DATASET_COLUMNS = ("id", "platform", "diameter_m", "time_s", "note")

_BOUND_LINE_POINTS = 64


@dataclass(frozen=True)
class ExperimentRecord:
    """One published measurement: apparatus size and reported duration."""

    id: str
    platform: str
    diameter_m: float
    time_s: float
    note: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if not self.diameter_m > 0:
            raise ValueError(f"diameter must be positive, got {self.diameter_m}")
        if not self.time_s > 0:
            raise ValueError(f"time must be positive, got {self.time_s}")


def builtin_dataset() -> list[ExperimentRecord]:
    """The seven-record reference dataset.

    Sizes are the apparatus scales the original reports give (laser waist,
    resonator extent, atomic diameter); where a report gives none, the note
    says what was reused. The ion entry records a diameter, twice the
    quoted 143 pm atomic radius.
    """
    return [
        ExperimentRecord(
            "dot-spin",
            "quantum-dot single-shot spin readout",
            1e-7,
            8e-6,
            "electron spin on a ~100 nm gate-defined dot",
        ),
        ExperimentRecord(
            "dot-qnd",
            "quantum-dot QND charge readout",
            1e-7,
            2.33e-9,
            "size reused from the spin-readout dot (none reported)",
        ),
        ExperimentRecord(
            "bec-zeno",
            "BEC Zeno-effect measurement",
            7e-5,
            1.4e-6,
            "70 um laser waist taken as the measured region",
        ),
        ExperimentRecord(
            "transmon-a",
            "transmon dispersive readout",
            1e-3,
            4e-7,
            "1 mm resonator scale, 400 ns microwave pulse",
        ),
        ExperimentRecord(
            "al-ion",
            "single aluminium ion state detection",
            2.86e-10,
            2.5e-5,
            "diameter = 2 x 143 pm atomic radius",
        ),
        ExperimentRecord(
            "lattice-clock",
            "optical lattice clock interrogation",
            4e-2,
            1.6e-1,
            "~4 cm atom cloud span, 160 ms probe",
        ),
        ExperimentRecord(
            "transmon-b",
            "transmon fast dispersive readout",
            1e-3,
            3.5e-7,
            "same scale as transmon-a, 50 ns faster readout",
        ),
    ]


@dataclass(frozen=True)
class BoundEntry:
    """One record's comparison against the minimum time d/v."""

    record: ExperimentRecord
    bound_time_s: float
    ratio: float  # measured time over bound time; >= 1 passes
    passed: bool


@dataclass(frozen=True)
class BoundReport:
    """Per-record verdicts plus the overall one."""

    velocity: float
    entries: tuple[BoundEntry, ...]

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, record_id: str) -> BoundEntry:
        for e in self.entries:
            if e.record.id == record_id:
                return e
        raise KeyError(f"no record with id {record_id!r}")


def check_bound(
    records: list[ExperimentRecord], v: float = CONVENTION_VELOCITY
) -> BoundReport:
    """Compare each measured time against d/v at information velocity v."""
    if not v > 0:
        raise ValueError(f"velocity must be positive, got {v}")
    if not records:
        raise ValueError("no records to check")
    entries = []
    for r in records:
        bound = r.diameter_m / v
        ratio = r.time_s / bound
        entries.append(BoundEntry(r, bound, ratio, ratio >= 1.0))
    return BoundReport(v, tuple(entries))


def emit_plot_data(
    records: list[ExperimentRecord],
    v: float = CONVENTION_VELOCITY,
    out: str | Path = "bound_points.csv",
) -> tuple[Path, Path]:
    """Write plot-ready CSVs: the records with their bound times, and a
    sampled bound line over the records' diameter range.

    The main file keeps the full dataset schema plus a bound_time_s column,
    so it loads back through ``load_dataset`` (the extra column is ignored
    there). The line file sits next to it with ``_bound`` in the name.
    Returns both paths.
    """
    report = check_bound(records, v)
    out = Path(out)
    bound_path = out.with_name(out.stem + "_bound" + out.suffix)
    try:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(DATASET_COLUMNS) + ["bound_time_s"])
            for e in report.entries:
                r = e.record
                writer.writerow(
                    [r.id, r.platform, repr(r.diameter_m), repr(r.time_s), r.note, repr(e.bound_time_s)]
                )
        diameters = [r.diameter_m for r in records]
        lo, hi = min(diameters), max(diameters)
        if lo == hi:
            lo, hi = lo / 10, hi * 10
        with open(bound_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["diameter_m", "bound_time_s"])
            for d in np.geomspace(lo, hi, _BOUND_LINE_POINTS):
                writer.writerow([repr(float(d)), repr(float(d / v))])
    except OSError as err:
        raise OSError(f"could not write plot data near {out}: {err}") from err
    return out, bound_path


def load_dataset(path: str | Path) -> list[ExperimentRecord]:
    """Read records from a CSV with the dataset schema.

    Unknown columns are ignored with a warning. Malformed rows (bad floats,
    non-positive sizes or times, missing fields) are all collected and
    rejected together, listing their line numbers.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, expected header {','.join(DATASET_COLUMNS)}")
        missing = [c for c in DATASET_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: header is missing columns {missing}")
        extra = [c for c in reader.fieldnames if c not in DATASET_COLUMNS]
        if extra:
            warnings.warn(f"{path}: ignoring unknown columns {extra}", stacklevel=2)
        records = []
        problems = []
        for line, row in enumerate(reader, start=2):
            try:
                records.append(
                    ExperimentRecord(
                        id=(row["id"] or "").strip(),
                        platform=(row["platform"] or "").strip(),
                        diameter_m=float(row["diameter_m"]),
                        time_s=float(row["time_s"]),
                        note=(row["note"] or "").strip(),
                    )
                )
            except (TypeError, ValueError) as err:
                problems.append(f"line {line}: {err}")
    if problems:
        raise ValueError(f"{path}: {len(problems)} malformed row(s): " + "; ".join(problems))
    return records
