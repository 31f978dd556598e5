import csv
import json
import math
from pathlib import Path

import pytest

from qkdplots import FigureSpec, PlotDataError, SchemaError, default_specs, plot
from qkdplots.cli import main as plot_main

from qkdsim.cli import main as qkdsim_main
from qkdsim.topology import bundled_data_path

PROTOCOLS = ["olsr", "qolsr"]
LEVELS = [0.4, 0.8]
SEEDS = 2


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    """A small real sweep produced through the simulator's CLI surface."""
    out = tmp_path_factory.mktemp("sweep")
    code = qkdsim_main([
        "sweep", "--topology", str(bundled_data_path("secoqc.topo")),
        "--protocols", *PROTOCOLS,
        "--levels", *[str(l) for l in LEVELS],
        "--seeds", str(SEEDS), "--duration", "20", "--out", str(out),
    ])
    assert code == 0
    return out


def read_sweep_rows(sweep_dir):
    with (sweep_dir / "sweep.csv").open() as fh:
        return list(csv.DictReader(fh))


class TestFigureFamilies:
    def test_all_default_families_render(self, sweep_dir, tmp_path):
        for spec in default_specs(level=0.8):
            result = plot(spec, sweep_dir, tmp_path)
            path = Path(result["path"])
            assert path.exists() and path.stat().st_size > 0

    def test_bar_aggregates_match_recomputation(self, sweep_dir, tmp_path):
        column = {"qku": "qku", "routing_cost": "routing_cost_bits",
                  "owd": "mean_owd_s", "pdr": "pdr_overall"}
        rows = read_sweep_rows(sweep_dir)
        for metric in ("qku", "routing_cost", "owd", "pdr"):
            spec = FigureSpec(kind="bars", metric=metric,
                              output=f"{metric}_bars.png")
            plotted = plot(spec, sweep_dir, tmp_path)["values"]
            for protocol in PROTOCOLS:
                for level, value in zip(plotted[protocol]["levels"],
                                        plotted[protocol]["values"]):
                    expected = [
                        float(r[column[metric]]) for r in rows
                        if r["protocol"] == protocol
                        and float(r["level"]) == level
                        and r[column[metric]] != ""
                    ]
                    recomputed = sum(expected) / len(expected)
                    assert math.isclose(value, recomputed, rel_tol=1e-9)

    def test_timeseries_mean_matches_recomputation(self, sweep_dir, tmp_path):
        spec = FigureSpec(kind="timeseries", metric="pdr", level=0.8,
                          output="pdr_ts.png")
        plotted = plot(spec, sweep_dir, tmp_path)["values"]
        for protocol in PROTOCOLS:
            per_seed = []
            for seed in range(1, SEEDS + 1):
                path = (sweep_dir / "runs"
                        / f"{protocol}_level0.8_seed{seed}" / "timeseries.csv")
                with path.open() as fh:
                    rows = list(csv.DictReader(fh))
                per_seed.append([
                    float(r["pdr"]) if r["pdr"] != "" else None for r in rows
                ])
            series = plotted[protocol]
            for t, mean in zip(series["times"], series["mean"]):
                values = [s[int(t)] for s in per_seed if s[int(t)] is not None]
                assert values, f"bucket {t} plotted without data"
                assert math.isclose(mean, sum(values) / len(values),
                                    rel_tol=1e-9)

    def test_multi_seed_band_covers_mean(self, sweep_dir, tmp_path):
        spec = FigureSpec(kind="timeseries", metric="routing_cost", level=0.4,
                          output="rc_ts.png")
        plotted = plot(spec, sweep_dir, tmp_path)["values"]
        for series in plotted.values():
            for lo, mid, hi in zip(series["low"], series["mean"], series["high"]):
                assert lo <= mid <= hi


def test_acceptance_8_figure_families_and_crosscheck(sweep_dir, tmp_path):
    """All four figure families render from sweep output and every plotted
    aggregate equals an independent recomputation to 1e-9 relative."""
    rendered = []
    checked = 0
    rows = read_sweep_rows(sweep_dir)
    column = {"qku": "qku", "routing_cost": "routing_cost_bits",
              "owd": "mean_owd_s", "pdr": "pdr_overall"}
    for metric in ("pdr", "qku", "routing_cost", "owd"):
        kind = "timeseries" if metric == "pdr" else "bars"
        spec = FigureSpec(kind=kind, metric=metric, level=0.8,
                          output=f"family_{metric}.png")
        result = plot(spec, sweep_dir, tmp_path)
        rendered.append(Path(result["path"]).exists())
        if kind == "bars":
            for protocol, series in result["values"].items():
                for level, value in zip(series["levels"], series["values"]):
                    sample = [
                        float(r[column[metric]]) for r in rows
                        if r["protocol"] == protocol
                        and float(r["level"]) == level
                        and r[column[metric]] != ""
                    ]
                    assert math.isclose(value, sum(sample) / len(sample),
                                        rel_tol=1e-9)
                    checked += 1
    ok = all(rendered) and checked > 0
    print(f"ACCEPTANCE 8 (figure families): {'PASS' if ok else 'FAIL'} - "
          f"4 families rendered, {checked} aggregates cross-checked at 1e-9")
    assert ok


class TestErrorHandling:
    def test_empty_filter_is_an_error_and_writes_nothing(self, sweep_dir, tmp_path):
        spec = FigureSpec(kind="timeseries", metric="pdr", level=0.99,
                          output="nope.png")
        with pytest.raises(PlotDataError):
            plot(spec, sweep_dir, tmp_path)
        assert not (tmp_path / "nope.png").exists()

    def test_schema_mismatch_names_columns(self, sweep_dir, tmp_path):
        broken = tmp_path / "broken"
        broken.mkdir()
        text = (sweep_dir / "sweep.csv").read_text().replace("qku", "qqq", 1)
        (broken / "sweep.csv").write_text(text)
        spec = FigureSpec(kind="bars", metric="qku", output="x.png")
        with pytest.raises(SchemaError) as err:
            plot(spec, broken, tmp_path)
        assert "qqq" in str(err.value)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            FigureSpec(kind="pie", metric="qku", output="x.png")
        with pytest.raises(ValueError):
            FigureSpec(kind="timeseries", metric="qku", output="x.png")

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            FigureSpec(kind="bars", metric="latency", output="x.png")


class TestCli:
    def test_plot_with_spec_file(self, sweep_dir, tmp_path):
        spec_file = tmp_path / "specs.json"
        spec_file.write_text(json.dumps([
            {"kind": "bars", "metric": "qku", "output": "qku.png"},
            {"kind": "timeseries", "metric": "owd", "level": 0.8,
             "output": "owd.png"},
        ]))
        out = tmp_path / "figs"
        assert plot_main(["plot", "--spec", str(spec_file),
                          "--data", str(sweep_dir), "--out", str(out)]) == 0
        assert (out / "qku.png").exists()
        assert (out / "owd.png").exists()

    def test_default_families(self, sweep_dir, tmp_path):
        out = tmp_path / "figs"
        assert plot_main(["plot", "--data", str(sweep_dir),
                          "--out", str(out), "--level", "0.4"]) == 0
        assert len(list(out.glob("*.png"))) == 6

    def test_error_exit_code(self, tmp_path):
        assert plot_main(["plot", "--data", str(tmp_path / "missing"),
                          "--out", str(tmp_path)]) == 1
