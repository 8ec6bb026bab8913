# mypy: ignore-errors

import csv
import json

import pytest

from opr_trainer.errors import MetricsFormatError
from opr_trainer.harness import MetricsRecord, MetricsWriter, export_plot_data, read_metrics
from opr_trainer.harness.metrics import PLOT_FIELDS, truncate_metrics


def make_record(update_index, **overrides):
    values = {
        "update_index": update_index,
        "env_steps": 256 * (update_index + 1),
        "episodes": 3,
        "mean_return": 0.1 * update_index,
        "max_return": 10.0,
        "policy_entropy": 0.6931 - 0.0123456789 * update_index,
        "surrogate_loss": -0.01,
        "value_loss": 0.5,
        "entropy_term": 0.69,
        "bc_loss": 0.0,
        "total_loss": 0.24,
        "clip_fraction": 0.1,
        "grad_norm": 0.4,
        "learning_rate": 1e-3,
        "bc_applied": update_index % 2 == 1,
        "buffer_occupancy": 20,
        "buffer_episodes": 1,
        "threshold": None if update_index == 0 else 0.02,
        "mean_abs_delta": 0.004,
        "match_fraction": 0.25,
    }
    values.update(overrides)
    return MetricsRecord(**values)


def write_records(path, records):
    with MetricsWriter(path) as writer:
        for r in records:
            writer.write(r)
    return path


def read_table(path):
    with path.open(newline="") as f:
        return list(csv.reader(f))


class TestMetricsFile:
    """Test the append-only metrics log."""

    def test_wall_clock_omitted_when_unset(self, tmp_path):
        """A record without wall clock time serializes without the key."""
        line = make_record(0).to_line()
        assert "wall_clock_s" not in json.loads(line)
        assert json.loads(make_record(0, wall_clock_s=1.5).to_line())["wall_clock_s"] == 1.5

    def test_write_then_read(self, tmp_path):
        """Records read back equal to what was written."""
        records = [make_record(i) for i in range(5)]
        path = write_records(tmp_path / "metrics.jsonl", records)
        assert read_metrics(path) == records

    def test_writer_rejects_non_increasing_steps(self, tmp_path):
        """env_steps must grow line by line."""
        with MetricsWriter(tmp_path / "metrics.jsonl") as writer:
            writer.write(make_record(0))
            with pytest.raises(ValueError):
                writer.write(make_record(1, env_steps=256))

    def test_malformed_line_number(self, tmp_path):
        """The reader reports the 1-based line of the first bad record."""
        path = tmp_path / "metrics.jsonl"
        path.write_text(make_record(0).to_line() + "\n{not json\n")
        with pytest.raises(MetricsFormatError) as excinfo:
            read_metrics(path)
        assert excinfo.value.line_number == 2

    def test_missing_field(self, tmp_path):
        """A structurally valid line without required fields is malformed."""
        path = tmp_path / "metrics.jsonl"
        path.write_text(json.dumps({"update_index": 0, "env_steps": 10}) + "\n")
        with pytest.raises(MetricsFormatError) as excinfo:
            read_metrics(path)
        assert excinfo.value.line_number == 1

    def test_reader_rejects_non_increasing_steps(self, tmp_path):
        """Out-of-order records are a format error."""
        path = tmp_path / "metrics.jsonl"
        path.write_text(make_record(1).to_line() + "\n" + make_record(0).to_line() + "\n")
        with pytest.raises(MetricsFormatError) as excinfo:
            read_metrics(path)
        assert excinfo.value.line_number == 2

    def test_truncate(self, tmp_path):
        """Truncation keeps only updates before the cut."""
        path = write_records(tmp_path / "metrics.jsonl", [make_record(i) for i in range(4)])
        truncate_metrics(path, 2)
        assert [r.update_index for r in read_metrics(path)] == [0, 1]
        truncate_metrics(tmp_path / "absent.jsonl", 2)
        assert not (tmp_path / "absent.jsonl").exists()


class TestExportPlotData:
    """Test CSV export of per-metric tables."""

    def test_empty_metrics(self, tmp_path):
        """An empty log exports header-only tables."""
        path = tmp_path / "metrics.jsonl"
        path.write_text("")
        tables = export_plot_data(path, tmp_path / "plots")
        assert "wall_clock_s" not in tables
        assert set(tables) == set(PLOT_FIELDS) - {"wall_clock_s"}
        for name, table in tables.items():
            assert read_table(table) == [["env_steps", name]]

    def test_one_row_per_record(self, tmp_path):
        """Every table has one row per update, keyed by env_steps."""
        records = [make_record(i) for i in range(6)]
        path = write_records(tmp_path / "metrics.jsonl", records)
        tables = export_plot_data(path)
        assert tables["mean_return"].parent == tmp_path / "plot_data"
        rows = read_table(tables["mean_return"])
        assert len(rows) == 7
        assert [int(r[0]) for r in rows[1:]] == [r.env_steps for r in records]

    def test_values_survive_export(self, tmp_path):
        """Exported entropies parse back to the exact logged floats."""
        records = [make_record(i) for i in range(6)]
        path = write_records(tmp_path / "metrics.jsonl", records)
        rows = read_table(export_plot_data(path)["policy_entropy"])[1:]
        assert [float(r[1]) for r in rows] == [r.policy_entropy for r in records]

    def test_null_and_bool_cells(self, tmp_path):
        """Undefined values are empty cells and flags are 0/1."""
        path = write_records(tmp_path / "metrics.jsonl", [make_record(0), make_record(1)])
        tables = export_plot_data(path)
        assert [r[1] for r in read_table(tables["threshold"])[1:]] == ["", "0.02"]
        assert [r[1] for r in read_table(tables["bc_applied"])[1:]] == ["0", "1"]

    def test_wall_clock_table_when_recorded(self, tmp_path):
        """The wall clock table appears once any record carries it."""
        path = write_records(tmp_path / "metrics.jsonl", [make_record(0, wall_clock_s=0.5)])
        assert "wall_clock_s" in export_plot_data(path)

    def test_malformed_input(self, tmp_path):
        """Export fails on a malformed log without writing tables."""
        path = tmp_path / "metrics.jsonl"
        path.write_text(make_record(0).to_line() + "\n[1, 2]\n")
        with pytest.raises(MetricsFormatError):
            export_plot_data(path, tmp_path / "plots")
        assert not (tmp_path / "plots").exists()
