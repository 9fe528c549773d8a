"""Dataset integrity, bound arithmetic, and plot/CSV plumbing."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmtime.bench import (
    DATASET_COLUMNS,
    BoundReport,
    ExperimentRecord,
    builtin_dataset,
    check_bound,
    emit_plot_data,
    load_dataset,
)

V_CONVENTION = 1e5


class TestDataset:
    def test_exactly_seven_records(self):
        data = builtin_dataset()
        assert len(data) == 7
        assert len({r.id for r in data}) == 7

    def test_all_sizes_and_times_positive(self):
        for r in builtin_dataset():
            assert r.diameter_m > 0
            assert r.time_s > 0

    def test_transmon_pair_differ_only_in_time(self):
        data = {r.id: r for r in builtin_dataset()}
        a, b = data["transmon-a"], data["transmon-b"]
        assert a.diameter_m == b.diameter_m == 1e-3
        assert a.time_s == 4e-7
        assert b.time_s == 3.5e-7
        assert a.time_s - b.time_s == pytest.approx(5e-8, rel=1e-12)

    def test_pinned_values(self):
        data = {r.id: (r.diameter_m, r.time_s) for r in builtin_dataset()}
        assert data == {
            "dot-spin": (1e-7, 8e-6),
            "dot-qnd": (1e-7, 2.33e-9),
            "bec-zeno": (7e-5, 1.4e-6),
            "transmon-a": (1e-3, 4e-7),
            "al-ion": (2.86e-10, 2.5e-5),
            "lattice-clock": (4e-2, 1.6e-1),
            "transmon-b": (1e-3, 3.5e-7),
        }

    def test_ion_diameter_is_twice_the_radius(self):
        ion = next(r for r in builtin_dataset() if r.id == "al-ion")
        assert ion.diameter_m == pytest.approx(2 * 143e-12, rel=1e-12)
        assert "radius" in ion.note

    def test_invalid_records_rejected(self):
        with pytest.raises(ValueError, match="diameter"):
            ExperimentRecord("x", "p", 0.0, 1.0)
        with pytest.raises(ValueError, match="time"):
            ExperimentRecord("x", "p", 1.0, -1.0)
        with pytest.raises(ValueError, match="id"):
            ExperimentRecord("", "p", 1.0, 1.0)


class TestCheckBound:
    def test_all_pass_at_convention_velocity(self):
        report = check_bound(builtin_dataset(), V_CONVENTION)
        assert isinstance(report, BoundReport)
        assert report.all_pass
        assert len(report.entries) == 7

    def test_qnd_ratio(self):
        report = check_bound(builtin_dataset(), V_CONVENTION)
        e = report.entry("dot-qnd")
        assert e.bound_time_s == pytest.approx(1e-12, rel=1e-12)
        assert e.ratio == pytest.approx(2330.0, rel=0.01)

    def test_lattice_clock_entry(self):
        e = check_bound(builtin_dataset(), V_CONVENTION).entry("lattice-clock")
        assert e.bound_time_s == pytest.approx(4e-7, rel=1e-12)
        assert e.passed

    def test_constructed_violation(self):
        report = check_bound([ExperimentRecord("fast", "hypothetical", 1.0, 1e-6)], V_CONVENTION)
        assert not report.all_pass
        assert report.entries[0].bound_time_s == pytest.approx(1e-5, rel=1e-12)
        assert report.entries[0].ratio == pytest.approx(0.1, rel=1e-12)

    def test_binding_record_is_the_fast_transmon(self):
        # transmon-b has the largest d/t quotient, 2857 m/s: the verdict
        # flips there, not at the QND point.
        report = check_bound(builtin_dataset(), V_CONVENTION)
        tightest = min(report.entries, key=lambda e: e.ratio)
        assert tightest.record.id == "transmon-b"
        assert tightest.ratio == pytest.approx(35.0, rel=0.01)

        threshold = max(r.diameter_m / r.time_s for r in builtin_dataset())
        assert threshold == pytest.approx(1e-3 / 3.5e-7, rel=1e-12)
        assert check_bound(builtin_dataset(), threshold * 1.0001).all_pass
        assert not check_bound(builtin_dataset(), threshold * 0.9999).all_pass

    @given(st.floats(1e-3, 1e12))
    @settings(max_examples=50, deadline=None)
    def test_scale_covariance(self, k):
        base = check_bound(builtin_dataset(), V_CONVENTION)
        scaled = check_bound(builtin_dataset(), V_CONVENTION * k)
        for e_base, e_scaled in zip(base.entries, scaled.entries):
            assert e_scaled.bound_time_s == pytest.approx(e_base.bound_time_s / k, rel=1e-9)
            assert e_scaled.ratio == pytest.approx(e_base.ratio * k, rel=1e-9)
            assert e_scaled.passed == (e_scaled.ratio >= 1.0)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="no records"):
            check_bound([], V_CONVENTION)

    def test_non_positive_velocity_rejected(self):
        with pytest.raises(ValueError, match="velocity"):
            check_bound(builtin_dataset(), 0.0)


class TestPlotData:
    def test_shapes_and_bound_line(self, tmp_path):
        out = tmp_path / "points.csv"
        main, bound = emit_plot_data(builtin_dataset(), V_CONVENTION, out)
        assert main == out
        assert bound.name == "points_bound.csv"

        with open(main, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(DATASET_COLUMNS) + ["bound_time_s"]
        assert len(rows) == 8
        for row in rows[1:]:
            assert float(row[3]) >= float(row[5])  # time on or above the bound

        with open(bound, newline="") as fh:
            line_rows = list(csv.reader(fh))
        assert line_rows[0] == ["diameter_m", "bound_time_s"]
        assert len(line_rows) - 1 >= 50
        ds = [float(r[0]) for r in line_rows[1:]]
        diameters = [r.diameter_m for r in builtin_dataset()]
        assert ds[0] == pytest.approx(min(diameters), rel=1e-9)
        assert ds[-1] == pytest.approx(max(diameters), rel=1e-9)
        assert ds == sorted(ds)
        for r in line_rows[1:]:
            assert float(r[1]) == pytest.approx(float(r[0]) / V_CONVENTION, rel=1e-12)

    def test_round_trip_through_loader(self, tmp_path):
        out = tmp_path / "points.csv"
        emit_plot_data(builtin_dataset(), V_CONVENTION, out)
        with pytest.warns(UserWarning, match="bound_time_s"):
            loaded = load_dataset(out)
        assert loaded == builtin_dataset()

    def test_unwritable_path_reports_context(self, tmp_path):
        target = tmp_path / "missing-dir" / "points.csv"
        with pytest.raises(OSError, match="points.csv"):
            emit_plot_data(builtin_dataset(), V_CONVENTION, target)


class TestLoadDataset:
    def write(self, path, rows, header=",".join(DATASET_COLUMNS)):
        path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""))

    def test_loads_valid_rows(self, tmp_path):
        f = tmp_path / "d.csv"
        self.write(f, ["ion,trap,1e-9,2e-5,note text", "dot,lab,1e-7,8e-6,"])
        records = load_dataset(f)
        assert records == [
            ExperimentRecord("ion", "trap", 1e-9, 2e-5, "note text"),
            ExperimentRecord("dot", "lab", 1e-7, 8e-6, ""),
        ]

    def test_zero_diameter_rejected_with_line_number(self, tmp_path):
        f = tmp_path / "d.csv"
        self.write(f, ["ok,lab,1e-7,8e-6,", "bad,lab,0,8e-6,"])
        with pytest.raises(ValueError, match="line 3"):
            load_dataset(f)

    def test_bad_float_rejected_with_line_number(self, tmp_path):
        f = tmp_path / "d.csv"
        self.write(f, ["bad,lab,wide,8e-6,", "ok,lab,1e-7,8e-6,", "worse,lab,1e-7,slow,"])
        with pytest.raises(ValueError, match="line 2.*line 4"):
            load_dataset(f)

    def test_missing_columns_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("id,diameter_m,time_s\nx,1,1\n")
        with pytest.raises(ValueError, match="missing columns"):
            load_dataset(f)

    def test_unknown_columns_warn_and_load(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("id,platform,diameter_m,time_s,note,color\nion,trap,1e-9,2e-5,n,red\n")
        with pytest.warns(UserWarning, match="color"):
            records = load_dataset(f)
        assert records[0].id == "ion"

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "absent.csv")

    def test_fifteen_digit_round_trip(self, tmp_path):
        # repr() writes shortest-round-trip decimals, so exact equality holds
        record = ExperimentRecord("x", "p", math.pi * 1e-7, math.e * 1e-6, "irrational")
        out = tmp_path / "rt.csv"
        emit_plot_data([record], V_CONVENTION, out)
        with pytest.warns(UserWarning):
            loaded = load_dataset(out)
        assert loaded[0].diameter_m == record.diameter_m
        assert loaded[0].time_s == record.time_s
