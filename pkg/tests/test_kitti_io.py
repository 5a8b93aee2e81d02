"""File format tests: column contracts, located errors, exact round-trips."""

from pathlib import Path

import pytest

from conftest import car_box, random_box, report
from mot3d.geometry3d import Box3D
from mot3d.kitti_io import (FormatError, list_sequence_files, read_detections,
                            read_gt_labels, read_tracking_results,
                            write_tracking_results)

DATA = Path(__file__).parent / "data"

DET_ROW = "0 Car 0 0 -10 -1 -1 -1 -1 1.5 1.8 4.2 2.0 1.6 15.0 -1.57 8.3\n"


class TestReadDetections:
    def test_kitti_hwl_order(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(DET_ROW)
        dets = read_detections(f)
        d = dets[0][0]
        assert d.box == Box3D(x=2.0, y=1.6, z=15.0, l=4.2, w=1.8, h=1.5, theta=-1.57)
        assert d.score == 8.3
        assert d.category == "Car"

    def test_empty_file(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text("")
        assert read_detections(f) == {}

    def test_wrong_arity_names_line(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(DET_ROW + "1 Car 0 0 -10 -1 -1 -1 -1 1.5 1.8 4.2 2.0 1.6\n")
        with pytest.raises(FormatError, match=r"0000\.txt:2") as exc:
            read_detections(f)
        assert "expected 17 fields, got 14" in str(exc.value)

    def test_non_numeric_field_names_line(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(DET_ROW.replace("8.3", "high"))
        with pytest.raises(FormatError, match=r"0000\.txt:1.*score"):
            read_detections(f)

    def test_category_filter_case_insensitive(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(DET_ROW + DET_ROW.replace("Car", "Pedestrian").replace("0 ", "1 ", 1))
        assert sum(len(v) for v in read_detections(f, "car").values()) == 1
        assert sum(len(v) for v in read_detections(f, "PEDESTRIAN").values()) == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_detections(tmp_path / "0009.txt")

    def test_grouping_preserves_row_order(self, tmp_path):
        f = tmp_path / "0000.txt"
        rows = [DET_ROW.replace("2.0", f"{x}.0") for x in (9, 3, 7)]
        f.write_text("".join(rows))
        xs = [d.box.x for d in read_detections(f)[0]]
        assert xs == [9.0, 3.0, 7.0]

    def test_invalid_box_is_located(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(DET_ROW.replace("1.5 1.8 4.2", "1.5 1.8 0.0"))
        with pytest.raises(FormatError, match=r"0000\.txt:1"):
            read_detections(f)


GT_ROWS = (
    "0 0 Car 0 0 0.1 10 20 30 40 1.5 1.8 4.2 2.0 1.6 15.0 -1.57\n"
    "1 0 Car 0 1 0.1 10 20 30 40 1.5 1.8 4.2 2.2 1.6 15.8 -1.57\n"
    "1 1 Car 1 0 -0.4 11 21 31 41 1.4 1.7 3.9 -5.0 1.55 20.0 0.3\n"
)


class TestReadGtLabels:
    def test_grouped_counts(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(GT_ROWS)
        grouped = read_gt_labels(f)
        assert {k: len(v) for k, v in grouped.items()} == {0: 1, 1: 2}

    def test_van_excluded_under_car(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(GT_ROWS + GT_ROWS[:-1].splitlines()[0].replace("Car", "Van") + "\n")
        grouped = read_gt_labels(f, "Car")
        assert all(g.category == "Car" for objs in grouped.values() for g in objs)

    def test_dontcare_parsed_flagged_unmatchable(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(GT_ROWS + "2 -1 DontCare -1 -1 -10 5 5 9 9 -1 -1 -1 -1000 -1000 -1000 -10\n")
        grouped = read_gt_labels(f)
        dc = grouped[2][0]
        assert dc.dontcare and dc.box is None and dc.track_id == -1

    def test_negative_id_on_real_row_rejected(self, tmp_path):
        f = tmp_path / "0000.txt"
        f.write_text(GT_ROWS.replace("1 1 Car", "1 -7 Car"))
        with pytest.raises(FormatError, match="negative track id"):
            read_gt_labels(f)


class TestWriteReadResults:
    def test_golden_fixture_byte_for_byte(self, tmp_path):
        golden = (DATA / "golden_results_0000.txt").read_bytes()
        reports = read_tracking_results(DATA / "golden_results_0000.txt")
        out = tmp_path / "0000.txt"
        write_tracking_results([r for frame in sorted(reports) for r in reports[frame]], out)
        assert out.read_bytes() == golden

    def test_round_trip_exact(self, tmp_path, rng):
        reports = []
        for frame in range(6):
            for tid in range(1, 4):
                if rng.uniform() < 0.2:
                    continue
                reports.append(report(frame, tid, random_box(rng),
                                      float(rng.uniform(-3, 12))))
        out = tmp_path / "0000.txt"
        write_tracking_results(reports, out)
        back = read_tracking_results(out)
        flat = [r for frame in sorted(back) for r in back[frame]]
        assert flat == sorted(reports, key=lambda r: (r.frame, r.track_id))

    def test_empty_reports_create_empty_file(self, tmp_path):
        out = tmp_path / "0000.txt"
        write_tracking_results([], out)
        assert out.exists() and out.read_text() == ""

    def test_rows_written_sorted(self, tmp_path):
        reports = [report(1, 2, car_box(0, 5), 1.0), report(0, 1, car_box(0, 5), 1.0)]
        out = tmp_path / "0000.txt"
        write_tracking_results(reports, out)
        frames = [int(line.split()[0]) for line in out.read_text().splitlines()]
        assert frames == [0, 1]

    def test_placeholders_written(self, tmp_path):
        out = tmp_path / "0000.txt"
        write_tracking_results([report(0, 1, car_box(0, 5), 1.0)], out)
        fields = out.read_text().split()
        assert fields[3:10] == ["-1", "-1", "-10", "-1", "-1", "-1", "-1"]


class TestSequenceDiscovery:
    def test_pattern_and_ordering(self, tmp_path):
        for name in ("0002.txt", "0000.txt", "notes.txt", "12.txt", "0001.json"):
            (tmp_path / name).write_text("")
        found = list_sequence_files(tmp_path)
        assert list(found) == ["0000", "0002"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            list_sequence_files(tmp_path / "nope")
