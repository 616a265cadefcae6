"""Figure construction against real and synthetic CSVs."""

import csv
import math

import pytest

from plots import PlotJob, PlotKind, SchemaError, build_figure, render
from conftest import CONVERGENCE_HEADER


def _job(kind, *inputs, out="unused.png", **overrides):
    return PlotJob(inputs=tuple(str(p) for p in inputs), kind=kind, out=str(out), **overrides)


def _close(fig):
    import matplotlib.pyplot as plt

    plt.close(fig)


class TestConvergence:
    def test_desk_scale_series_and_annotations(self, desk_csv):
        fig = build_figure(_job(PlotKind.CONVERGENCE, desk_csv))
        ax = fig.axes[0]
        assert [line.get_label() for line in ax.lines] == ["mc", "qmc", "preint1", "preint2"]
        assert len(ax.texts) == 4
        assert all(text.get_text().startswith("rate ") for text in ax.texts)
        assert ax.get_xscale() == "log" and ax.get_yscale() == "log"
        _close(fig)

    def test_x_axis_is_total_points(self, desk_csv):
        fig = build_figure(_job(PlotKind.CONVERGENCE, desk_csv))
        xs = fig.axes[0].lines[0].get_xdata()
        assert list(xs) == [2**k * 16 for k in range(10, 15)]
        _close(fig)

    def test_series_order_follows_csv(self, tmp_path):
        path = tmp_path / "odd.csv"
        path.write_text(
            CONVERGENCE_HEADER + "\n"
            "qmc,8,2,0.1,0.01,16,0.0\n"
            "qmc,16,2,0.1,0.005,32,0.0\n"
            "mc,8,2,0.1,0.02,16,0.0\n"
            "mc,16,2,0.1,0.015,32,0.0\n"
        )
        fig = build_figure(_job(PlotKind.CONVERGENCE, path))
        assert [line.get_label() for line in fig.axes[0].lines] == ["qmc", "mc"]
        _close(fig)

    def test_annotations_come_only_from_rate_rows(self, tmp_path):
        body = (
            CONVERGENCE_HEADER + "\n"
            "mc,8,2,0.1,0.02,16,0.0\n"
            "mc,16,2,0.1,0.015,32,0.0\n"
        )
        bare = tmp_path / "bare.csv"
        bare.write_text(body)
        fig = build_figure(_job(PlotKind.CONVERGENCE, bare))
        assert len(fig.axes[0].texts) == 0
        _close(fig)

        tagged = tmp_path / "tagged.csv"
        tagged.write_text(body + "#rate,mc,0.5\n")
        fig = build_figure(_job(PlotKind.CONVERGENCE, tagged))
        assert [t.get_text() for t in fig.axes[0].texts] == ["rate 0.50"]
        _close(fig)

    def test_short_series_rejected(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text(
            CONVERGENCE_HEADER + "\n"
            "mc,8,2,0.1,0.02,16,0.0\n"
            "mc,16,2,0.1,0.015,32,0.0\n"
            "qmc,8,2,0.1,0.01,16,0.0\n"
        )
        with pytest.raises(SchemaError, match="'qmc' has 1 row"):
            build_figure(_job(PlotKind.CONVERGENCE, path))

    def test_missing_column_diagnostic(self, tmp_path):
        path = tmp_path / "nostderr.csv"
        path.write_text("method,N,R,estimate,evals\nmc,8,2,0.1,16\nmc,16,2,0.1,32\n")
        with pytest.raises(SchemaError, match="stderr"):
            build_figure(_job(PlotKind.CONVERGENCE, path))

    def test_unknown_columns_ignored(self, tmp_path):
        path = tmp_path / "extra.csv"
        path.write_text(
            "method,N,R,estimate,stderr,evals,wall_seconds,git_sha\n"
            "mc,8,2,0.1,0.02,16,0.0,abc\n"
            "mc,16,2,0.1,0.015,32,0.0,abc\n"
        )
        fig = build_figure(_job(PlotKind.CONVERGENCE, path))
        assert len(fig.axes[0].lines) == 1
        _close(fig)

    def test_non_numeric_cell_diagnostic(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            CONVERGENCE_HEADER + "\n"
            "mc,8,2,0.1,0.02,16,0.0\n"
            "mc,16,2,0.1,oops,32,0.0\n"
        )
        with pytest.raises(SchemaError, match="'stderr'.*row 2.*oops"):
            build_figure(_job(PlotKind.CONVERGENCE, path))

    def test_empty_csv_errors_without_image(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        out = tmp_path / "never.png"
        with pytest.raises(SchemaError, match="empty"):
            render(_job(PlotKind.CONVERGENCE, empty, out=out))
        assert not out.exists()

    def test_header_only_errors(self, tmp_path):
        path = tmp_path / "headeronly.csv"
        path.write_text(CONVERGENCE_HEADER + "\n")
        with pytest.raises(SchemaError, match="no data rows"):
            build_figure(_job(PlotKind.CONVERGENCE, path))


class TestRenderOutput:
    def test_byte_identical_rerun(self, desk_csv, tmp_path):
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        render(_job(PlotKind.CONVERGENCE, desk_csv, out=first))
        render(_job(PlotKind.CONVERGENCE, desk_csv, out=second))
        blob = first.read_bytes()
        assert blob[:4] == b"\x89PNG"
        assert blob == second.read_bytes()

    def test_label_overrides(self, desk_csv):
        fig = build_figure(
            _job(PlotKind.CONVERGENCE, desk_csv, title="digital option", xlabel="work", ylabel="err")
        )
        ax = fig.axes[0]
        assert ax.get_title() == "digital option"
        assert ax.get_xlabel() == "work" and ax.get_ylabel() == "err"
        _close(fig)


class TestProfile:
    def test_zero_left_of_level_then_increasing(self, profile_csv):
        fig = build_figure(_job(PlotKind.PROFILE, profile_csv))
        line = fig.axes[0].lines[0]
        xs = list(line.get_xdata())
        ys = list(line.get_ydata())
        left = [y for x, y in zip(xs, ys) if x < 0.25]
        right = [y for x, y in zip(xs, ys) if x > 0.26]
        assert left and all(y == 0.0 for y in left)
        assert all(b - a > 0 for a, b in zip(right, right[1:]))
        _close(fig)

    def test_oracle_overlay_when_present(self, profile_csv):
        fig = build_figure(_job(PlotKind.PROFILE, profile_csv))
        assert [line.get_label() for line in fig.axes[0].lines] == ["preintegrated", "closed form"]
        _close(fig)

    def test_no_overlay_for_empty_oracle_cells(self, tmp_path):
        path = tmp_path / "nooracle.csv"
        path.write_text("coord,value,oracle\n0.0,0.1,\n1.0,0.4,\n")
        fig = build_figure(_job(PlotKind.PROFILE, path))
        assert [line.get_label() for line in fig.axes[0].lines] == ["preintegrated"]
        _close(fig)

    def test_missing_value_column(self, tmp_path):
        path = tmp_path / "novalue.csv"
        path.write_text("coord,oracle\n0.0,0.1\n")
        with pytest.raises(SchemaError, match="value"):
            build_figure(_job(PlotKind.PROFILE, path))


class TestSingularityZoom:
    def test_guide_slope_matches_reported_exponent(self, profile_csv, singularity_csv):
        with open(singularity_csv) as fh:
            reported = float(next(csv.DictReader(fh))["exponent"])
        fig = build_figure(_job(PlotKind.SINGULARITY_ZOOM, profile_csv, singularity_csv))
        ax = fig.axes[0]
        assert ax.get_xscale() == "log" and ax.get_yscale() == "log"
        guide = next(line for line in ax.lines if line.get_label().startswith("slope"))
        gx = list(guide.get_xdata())
        gy = list(guide.get_ydata())
        slope = (math.log(gy[-1]) - math.log(gy[0])) / (math.log(gx[-1]) - math.log(gx[0]))
        assert abs(slope - reported) <= 1e-12
        _close(fig)

    def test_data_points_sit_near_guide(self, profile_csv, singularity_csv):
        fig = build_figure(_job(PlotKind.SINGULARITY_ZOOM, profile_csv, singularity_csv))
        data, guide = fig.axes[0].lines
        ratios = [y / g for y, g in zip(data.get_ydata(), guide.get_ydata())]
        assert all(0.5 < r < 2.0 for r in ratios)
        _close(fig)

    def test_takes_exactly_two_inputs(self, profile_csv):
        with pytest.raises(SchemaError, match="exactly 2"):
            _job(PlotKind.SINGULARITY_ZOOM, profile_csv)

    def test_unlocated_scan_rejected(self, profile_csv, tmp_path):
        path = tmp_path / "nosing.csv"
        path.write_text("t,location,exponent,amplitude,residual,status\n-1.5,,,,,no singularity detected\n")
        with pytest.raises(SchemaError, match="no row with a located singularity"):
            build_figure(_job(PlotKind.SINGULARITY_ZOOM, profile_csv, path))
