from pathlib import Path

import numpy as np
import pytest
from matplotlib.container import ErrorbarContainer

from kianc_figures import (
    FigureSpec,
    SchemaError,
    plot_convergence,
    plot_field_heatmap,
    plot_perturb,
    plot_sweep,
    read_csv,
    render,
)
from kianc_figures.cli import main

EXAMPLES = Path(__file__).resolve().parents[1] / "examples"


def close(fig):
    import matplotlib.pyplot as plt

    plt.close(fig)


class TestSchema:
    def test_read_valid(self):
        rows = read_csv(EXAMPLES / "convergence.csv", "convergence")
        assert rows[0]["iteration"] == "0"
        assert {r["method"] for r in rows} == {
            "MPC", "TotalKI(beta=0)", "TotalKI(beta=2)", "IndividualKI(beta=10)",
        }

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            read_csv(path, "convergence")

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("iteration,method,p_red_db\n")
        with pytest.raises(SchemaError, match="no data rows"):
            read_csv(path, "convergence")

    def test_mismatched_schema_rejected(self):
        with pytest.raises(SchemaError, match="does not match"):
            read_csv(EXAMPLES / "sweep.csv", "perturb")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="not found"):
            read_csv(tmp_path / "nope.csv", "sweep")


class TestConvergencePlot:
    def test_four_methods_four_legend_entries(self, tmp_path):
        out = tmp_path / "conv.png"
        fig = plot_convergence(EXAMPLES / "convergence.csv", out_path=out)
        legend = fig.axes[0].get_legend()
        assert len(legend.get_texts()) == 4
        assert out.is_file() and out.stat().st_size > 0
        close(fig)

    def test_single_method_single_series(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(
            "iteration,method,p_red_db\n0,MPC,0.0\n100,MPC,-5.0\n200,MPC,-8.0\n"
        )
        fig = plot_convergence(path)
        ax = fig.axes[0]
        assert len(ax.get_lines()) == 1
        assert len(ax.get_legend().get_texts()) == 1
        close(fig)

    def test_axis_labels(self):
        fig = plot_convergence(EXAMPLES / "convergence.csv")
        ax = fig.axes[0]
        assert "Iteration" in ax.get_xlabel()
        assert "dB" in ax.get_ylabel()
        close(fig)


class TestSweepPlot:
    def test_full_sweep_series_span(self, tmp_path):
        out = tmp_path / "sweep.png"
        fig = plot_sweep(EXAMPLES / "sweep.csv", out_path=out)
        ax = fig.axes[0]
        xdata = ax.get_lines()[0].get_xdata()
        assert len(np.unique(xdata)) == 51
        assert xdata.min() == 100.0 and xdata.max() == 600.0
        assert out.is_file() and out.stat().st_size > 0
        close(fig)

    def test_wrong_schema_raises(self):
        with pytest.raises(SchemaError):
            plot_sweep(EXAMPLES / "perturb.csv")


class TestPerturbPlot:
    def test_error_bars_rendered(self, tmp_path):
        out = tmp_path / "perturb.png"
        fig = plot_perturb(EXAMPLES / "perturb.csv", out_path=out)
        ax = fig.axes[0]
        containers = [c for c in ax.containers if isinstance(c, ErrorbarContainer)]
        assert len(containers) == 4
        assert all(c.has_yerr for c in containers)
        assert out.is_file() and out.stat().st_size > 0
        close(fig)

    def test_zero_std_zero_height_bars(self, tmp_path):
        path = tmp_path / "zero.csv"
        path.write_text(
            "frequency_hz,method,mean_p_red_db,std_p_red_db,trials\n"
            "150.0,MPC,-20.0,0.0,3\n250.0,MPC,-18.0,0.0,3\n"
        )
        fig = plot_perturb(path)
        ax = fig.axes[0]
        container = next(c for c in ax.containers if isinstance(c, ErrorbarContainer))
        # error bar caps collapse onto the mean when std is zero
        segments = container.lines[2][0].get_segments()
        for seg in segments:
            assert seg[0][1] == seg[1][1]
        close(fig)


class TestFieldHeatmap:
    def test_renders_two_panels(self, tmp_path):
        out = tmp_path / "field.png"
        fig = plot_field_heatmap(EXAMPLES / "field.csv", out_path=out)
        assert len(fig.axes) >= 2
        assert out.is_file() and out.stat().st_size > 0
        close(fig)


class TestRenderAndSpec:
    def test_render_all_examples(self, tmp_path):
        for kind, name in (
            ("convergence", "convergence.csv"),
            ("sweep", "sweep.csv"),
            ("perturb", "perturb.csv"),
            ("field-heatmap", "field.csv"),
        ):
            out = render(FigureSpec(csv_path=EXAMPLES / name, kind=kind,
                                    out_path=tmp_path / f"{kind}.png"))
            assert out.is_file() and out.stat().st_size > 0

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec(csv_path="x.csv", kind="pie", out_path=tmp_path / "x.png")

    def test_inputs_not_mutated_and_idempotent(self, tmp_path):
        src = EXAMPLES / "convergence.csv"
        before = src.read_bytes()
        out = tmp_path / "c.png"
        render(FigureSpec(csv_path=src, kind="convergence", out_path=out))
        render(FigureSpec(csv_path=src, kind="convergence", out_path=out))
        assert src.read_bytes() == before
        assert out.is_file()


class TestCli:
    def test_success(self, tmp_path):
        out = tmp_path / "fig.png"
        code = main(["convergence", str(EXAMPLES / "convergence.csv"), "-o", str(out)])
        assert code == 0
        assert out.is_file() and out.stat().st_size > 0

    def test_schema_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        code = main(["convergence", str(bad), "-o", str(tmp_path / "fig.png")])
        assert code == 1
        assert "schema" in capsys.readouterr().err

    def test_empty_csv_exit(self, tmp_path, capsys):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        code = main(["sweep", str(bad), "-o", str(tmp_path / "fig.png")])
        assert code == 1
        err = capsys.readouterr().err
        assert "empty" in err and "frequency_hz" in err
