import shutil
import warnings
from pathlib import Path

import pandas as pd
import pytest

from plotkit import (
    PlotSpec,
    SchemaError,
    load_run,
    load_snapshots,
    plot_fps_snapshots,
    plot_parameter_traces,
)
from plotkit.cli import main
from plotkit.io import events_from_run, nearest_snapshot

DATA = Path(__file__).parent / "data"
HEALTHY = DATA / "ref_healthy.csv"
FAULTY = DATA / "ref_faulty.csv"


def assert_image(path):
    p = Path(path)
    assert p.exists()
    assert p.stat().st_size > 10_000  # an actual rendered figure


class TestLoading:
    def test_load_run_columns(self):
        df = load_run(HEALTHY)
        assert len(df) == 240
        assert "theta_hat0" in df.columns

    def test_missing_column_named_in_error(self, tmp_path):
        df = pd.read_csv(HEALTHY)
        bad = tmp_path / "bad.csv"
        df.drop(columns=["proj_lo1"]).to_csv(bad, index=False)
        with pytest.raises(SchemaError, match="proj_lo1"):
            load_run(bad)

    def test_events_extracted(self):
        evs = events_from_run(load_run(FAULTY))
        kinds = {e["type"] for e in evs}
        assert "detect" in kinds and "isolate" in kinds

    def test_snapshots_present_and_nearest_warns(self):
        snaps = load_snapshots(FAULTY)
        assert all("vertices" in s for s in snaps)
        with warnings.catch_warnings(record=True) as captured:
            warnings.simplefilter("always")
            snap = nearest_snapshot(snaps, 3)
            assert captured and "nearest" in str(captured[0].message)
        assert snap["k"] == min(s["k"] for s in snaps)

    def test_missing_sidecar(self, tmp_path):
        target = tmp_path / "copy.csv"
        shutil.copy(HEALTHY, target)
        with pytest.raises(SchemaError):
            load_snapshots(target)


class TestFigureTypes:
    """The four reference figure types render without error."""

    def test_healthy_traces(self, tmp_path):
        out = plot_parameter_traces(
            PlotSpec([str(HEALTHY)], str(tmp_path / "healthy_traces.png"))
        )
        assert_image(out)

    def test_faulty_traces_with_markers(self, tmp_path):
        out = plot_parameter_traces(
            PlotSpec(
                [str(FAULTY)],
                str(tmp_path / "faulty_traces.png"),
                fault_time=6.0,
                title="fault at 6 s",
            )
        )
        assert_image(out)

    def test_overlay_traces(self, tmp_path):
        out = plot_parameter_traces(
            PlotSpec(
                [str(HEALTHY), str(FAULTY)],
                str(tmp_path / "overlay.png"),
                labels=["healthy", "faulty"],
            )
        )
        assert_image(out)

    def test_fps_snapshot_grid(self, tmp_path):
        out = plot_fps_snapshots(
            PlotSpec(
                [str(HEALTHY)],
                str(tmp_path / "fps_grid.png"),
                snapshot_steps=[40, 80, 120, 160, 200, 240],
            )
        )
        assert_image(out)

    def test_fps_pre_post_fault_pair(self, tmp_path):
        out = plot_fps_snapshots(
            PlotSpec(
                [str(FAULTY)],
                str(tmp_path / "fps_pair.png"),
                snapshot_steps=[120, 125],
            )
        )
        assert_image(out)

    def test_single_snapshot_degenerate_request(self, tmp_path):
        out = plot_fps_snapshots(
            PlotSpec([str(HEALTHY)], str(tmp_path / "one.png"), snapshot_steps=[100])
        )
        assert_image(out)

    def test_default_snapshot_selection(self, tmp_path):
        out = plot_fps_snapshots(
            PlotSpec([str(HEALTHY)], str(tmp_path / "auto.png"))
        )
        assert_image(out)


class TestCli:
    def test_traces_command(self, tmp_path):
        out = tmp_path / "t.png"
        assert main(["traces", str(HEALTHY), str(FAULTY), "--out", str(out),
                     "--labels", "healthy", "faulty", "--fault-at", "6.0"]) == 0
        assert_image(out)

    def test_fps_command(self, tmp_path):
        out = tmp_path / "f.png"
        assert main(["fps", str(FAULTY), "--at", "120,125", "--out", str(out)]) == 0
        assert_image(out)
