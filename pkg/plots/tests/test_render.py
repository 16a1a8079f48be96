"""plots package: schema guards, layout contracts, golden determinism."""

import json
import subprocess
import sys

import pytest

from plots.cli import main
from plots.render import (
    PlotJob,
    RenderError,
    load_reference_lines,
    read_trace_series,
    render,
)

HEADER = "n,value,target,orbit_id\n"


def trace_csv(tmp_path, name="trace.csv", targets=("a",), rows=8):
    path = tmp_path / name
    lines = [HEADER.strip()]
    for t in targets:
        for i in range(1, rows + 1):
            lines.append(f"{2**i},0.{i}{i},{t},orb")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestReading:
    def test_reads_series(self, tmp_path):
        path = trace_csv(tmp_path, targets=("x", "y"))
        series = read_trace_series(path)
        assert [s.label for s in series] == ["x @ orb", "y @ orb"]
        assert len(series[0].x) == 8

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,val\n1,2\n")
        with pytest.raises(RenderError):
            read_trace_series(path)

    def test_rejects_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(HEADER)
        with pytest.raises(RenderError):
            read_trace_series(path)

    def test_rejects_missing(self, tmp_path):
        with pytest.raises(RenderError):
            read_trace_series(tmp_path / "nope.csv")

    def test_rational_values(self, tmp_path):
        path = tmp_path / "frac.csv"
        path.write_text(HEADER + "4,1/3,t,orb\n8,2/3,t,orb\n")
        series = read_trace_series(path)
        assert series[0].y == (1 / 3, 2 / 3)


class TestReferenceLines:
    def test_bowen_report_shape(self, tmp_path):
        path = tmp_path / "ref.json"
        path.write_text(json.dumps({"closed_form": {"limsup": 0.75, "liminf": 0.25}}))
        assert load_reference_lines(path) == [("limsup", 0.75), ("liminf", 0.25)]

    def test_generic_lines_shape(self, tmp_path):
        path = tmp_path / "ref.json"
        path.write_text(json.dumps({"lines": [{"label": "m", "value": 1.5}]}))
        assert load_reference_lines(path) == [("m", 1.5)]

    def test_unrecognized_rejected(self, tmp_path):
        path = tmp_path / "ref.json"
        path.write_text(json.dumps({"foo": 1}))
        with pytest.raises(RenderError):
            load_reference_lines(path)


class TestRendering:
    def test_average_trace_with_refs(self, tmp_path):
        csv_path = trace_csv(tmp_path)
        ref = tmp_path / "ref.json"
        ref.write_text(json.dumps({"limsup": 2 / 3, "liminf": 1 / 3}))
        out = tmp_path / "fig.png"
        render(PlotJob("average-trace", (str(csv_path),), str(out), ref=str(ref)))
        assert out.exists()
        sidecar = json.loads((tmp_path / "fig.png.data.json").read_text())
        values = sorted(l["value"] for l in sidecar["reference_lines"])
        assert values == pytest.approx([1 / 3, 2 / 3])

    def test_means_grid_three_panels(self, tmp_path):
        csv_path = trace_csv(tmp_path, targets=("cesaro:0", "cesaro:1", "cesaro:2"))
        out = tmp_path / "grid.png"
        render(PlotJob("means-grid", (str(csv_path),), str(out)))
        sidecar = json.loads((tmp_path / "grid.png.data.json").read_text())
        assert sidecar["panels"] == 3

    def test_mass_vs_generation(self, tmp_path):
        path = tmp_path / "mass.csv"
        path.write_text(HEADER + "1,0.5,[0],m\n2,0.55,[0],m\n3,0.6,[0],m\n")
        out = tmp_path / "mass.png"
        render(PlotJob("mass-vs-generation", (str(path),), str(out)))
        assert out.exists()

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(RenderError):
            PlotJob("pie", ("x.csv",), "out.png")

    def test_deterministic_sidecar_and_dimensions(self, tmp_path):
        csv_path = trace_csv(tmp_path, targets=("x", "y"))
        out_a, out_b = tmp_path / "a.png", tmp_path / "b.png"
        render(PlotJob("average-trace", (str(csv_path),), str(out_a), style_seed=3))
        render(PlotJob("average-trace", (str(csv_path),), str(out_b), style_seed=3))
        data_a = (tmp_path / "a.png.data.json").read_bytes()
        data_b = (tmp_path / "b.png.data.json").read_bytes()
        assert data_a == data_b
        from PIL import Image

        assert Image.open(out_a).size == Image.open(out_b).size


class TestCli:
    def test_render_ok(self, tmp_path):
        csv_path = trace_csv(tmp_path)
        out = tmp_path / "fig.png"
        code = main(["render", "--kind", "average-trace", "--in", str(csv_path), "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_schema_mismatch_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        code = main(["render", "--kind", "average-trace", "--in", str(bad), "--out", str(tmp_path / "f.png")])
        assert code == 1
        assert "trace CSV" in capsys.readouterr().err

    def test_empty_csv_exit(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(HEADER)
        code = main(["render", "--kind", "average-trace", "--in", str(empty), "--out", str(tmp_path / "f.png")])
        assert code == 1


class TestAcceptanceSecondary:
    def test_criterion_11_bowen_figure_pipeline(self, tmp_path):
        """Render the sojourn average-trace from a CLI-produced CSV with
        oracle reference lines, deterministic across two runs."""
        config = tmp_path / "bowen.json"
        config.write_text(
            json.dumps({"lambda": 2, "sigma": 2, "a0": 50, "transit": 1, "cycles": 18})
        )
        run_dir = tmp_path / "run"
        proc = subprocess.run(
            [sys.executable, "-m", "orbitmeter.cli", "bowen",
             "--config", str(config), "--out", str(run_dir)],
            capture_output=True,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        csv_path = run_dir / "bowen_trace.csv"
        ref_path = run_dir / "bowen.json"

        sidecars = []
        for tag in ("one", "two"):
            out = tmp_path / f"fig_{tag}.png"
            code = main([
                "render", "--kind", "average-trace",
                "--in", str(csv_path), "--out", str(out), "--ref", str(ref_path),
            ])
            assert code == 0
            sidecars.append((tmp_path / f"fig_{tag}.png.data.json").read_bytes())
        assert sidecars[0] == sidecars[1]

        sidecar = json.loads(sidecars[0])
        values = sorted(l["value"] for l in sidecar["reference_lines"])
        assert values == pytest.approx([1 / 3, 2 / 3], abs=1e-12)
        print("[PASS] criterion 11: deterministic sojourn figure with oracle reference lines")
