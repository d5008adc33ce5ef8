import json
import math

import numpy as np
import pandas as pd
import pytest

from qkt import settings
from qkt.experiments.config import resolve_config
from qkt.experiments.core import _doubling_increments, _increment_deviation, run_experiment
from qkt.experiments.io import (
    load_summary,
    read_csv,
    table_series,
    write_csv,
    write_result,
)

TINY_DYNAMICS = [
    "d=16",
    "kappas=[2.5, 7.0]",
    "fit_kappas=[]",
    "steps=6",
    "count=4",
]


def test_csv_header_and_table(tmp_path):
    table = pd.DataFrame({"step": [0, 1], "value": [0.5, 0.25]})
    path = tmp_path / "t.csv"
    write_csv(table, path, {"experiment": "x", "kappas": [1.0, 2.0]})
    text = path.read_bytes()
    assert b"\r\n" not in text
    assert text.startswith(b"# experiment: x\n# kappas: [1.0, 2.0]\nstep,value\n")
    meta, frame = read_csv(path)
    assert meta == {"experiment": "x", "kappas": "[1.0, 2.0]"}
    pd.testing.assert_frame_equal(frame, table)


def test_table_series_splits_by_key():
    table = pd.DataFrame({"kappa": [1.0, 1.0, 2.0], "step": [0, 1, 0], "oe": [0.1, 0.2, 0.3]})
    series = table_series(table, ["kappa"])
    assert [s["meta"] for s in series] == [{"kappa": 1.0}, {"kappa": 2.0}]
    assert series[0]["data"] == {"step": [0, 1], "oe": [0.1, 0.2]}
    assert table_series(table, [])[0]["data"]["kappa"] == [1.0, 1.0, 2.0]


def test_run_writes_tables_with_metadata(tmp_path):
    cfg = resolve_config("oe-dynamics", overrides=TINY_DYNAMICS)
    paths = write_result(run_experiment(cfg), cfg, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["approach_fits.csv", "oe_series.csv", "summary.json"]

    meta, frame = read_csv(tmp_path / "oe_series.csv")
    assert meta["experiment"] == "oe-dynamics"
    assert meta["config_hash"] == cfg.hash()
    assert meta["seed"] == str(cfg.seed)
    assert meta["code_version"] == settings.VERSION
    assert "coarse_graining" in meta
    assert list(frame.columns) == ["kappa", "step", "oe"]
    assert len(frame) == 2 * 7

    summary = load_summary(tmp_path)
    assert summary["meta"]["config_hash"] == cfg.hash()
    assert summary["config"]["d"] == 16
    assert "out" not in summary["config"]
    assert set(summary["summary"]["series_max"]) == {"2.5", "7.0"}


def test_reruns_are_byte_identical(tmp_path, monkeypatch):
    cfg = resolve_config("oe-dynamics", overrides=TINY_DYNAMICS)
    monkeypatch.setenv("QKT_OE_THREADS", "1")
    write_result(run_experiment(cfg), cfg, tmp_path / "a")
    monkeypatch.setenv("QKT_OE_THREADS", "3")
    write_result(run_experiment(cfg), cfg, tmp_path / "b")
    for name in ("oe_series.csv", "approach_fits.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_json_format(tmp_path):
    cfg = resolve_config("oe-dynamics", overrides=TINY_DYNAMICS + ['format="json"'])
    write_result(run_experiment(cfg), cfg, tmp_path)
    with open(tmp_path / "oe_series.json", encoding="utf-8") as f:
        payload = json.load(f)
    assert payload["meta"]["experiment"] == "oe-dynamics"
    assert [s["meta"]["kappa"] for s in payload["series"]] == [2.5, 7.0]
    assert payload["series"][0]["data"]["step"] == list(range(7))


@pytest.mark.parametrize(
    "experiment,overrides,tables",
    [
        ("phase-space", ["kappas=[2.5]", "n_init=4", "n_steps=5"], ["phase_portrait"]),
        (
            "oe-vs-coarse-graining",
            ["d=32", "mus=[1, 2, 4, 8, 16, 32]", "kappas=[7.0]", "count=3", "evolve_kicks=5"],
            ["oe_vs_mu"],
        ),
        (
            "growth-rates",
            ["dims=[16]", "kappas=[4.0, 5.0, 6.0]", "count=3"],
            ["rates", "rate_fits"],
        ),
        ("small-spin", ["js=[0.5, 1.5, 3.5]", "count=3", "steps=8"], ["otoc_series", "oe_series"]),
        (
            "saddle-vs-chaos",
            ["d=16", "steps=30"],
            ["fotoc_series", "oe_series", "fluctuations"],
        ),
        ("quantum-classical", ["d=41", "steps=4", "kappas=[2.5]"], ["trajectories"]),
    ],
)
def test_every_experiment_writes_its_tables(tmp_path, experiment, overrides, tables):
    cfg = resolve_config(experiment, overrides=overrides)
    result = run_experiment(cfg)
    assert sorted(result.tables) == sorted(tables)
    write_result(result, cfg, tmp_path)
    for name in tables:
        meta, frame = read_csv(tmp_path / f"{name}.csv")
        assert meta["experiment"] == experiment
        assert len(frame) > 0


def test_doubling_increments_leave_out_the_single_block():
    mus = [1, 2, 32, 64, 128, 256]
    oe = np.log(np.array(mus, dtype=float)) + np.array([2.0, 1.5, 0.4, 0.1, 0.05, 0.0])
    increments = _doubling_increments(mus, oe, 256)
    assert list(increments) == ["64"]
    assert increments["64"] == pytest.approx(1.0 - 0.05 / math.log(2))
    assert _increment_deviation(increments) == pytest.approx(0.05 / math.log(2))
    assert _increment_deviation({}) is None


@pytest.mark.parametrize("output_format", ["csv", "json"])
def test_phase_portrait_is_one_table_keyed_by_kappa(tmp_path, output_format):
    overrides = ["kappas=[2.5, 7.0]", "n_init=3", "n_steps=4", f'format="{output_format}"']
    cfg = resolve_config("phase-space", overrides=overrides)
    write_result(run_experiment(cfg), cfg, tmp_path)
    assert not list(tmp_path.glob("phase_portrait_*"))
    if output_format == "csv":
        _, frame = read_csv(tmp_path / "phase_portrait.csv")
        assert list(frame.columns) == ["kappa", "traj_id", "step", "theta", "phi"]
        assert frame.groupby("kappa").size().to_dict() == {2.5: 15, 7.0: 15}
    else:
        with open(tmp_path / "phase_portrait.json", encoding="utf-8") as f:
            payload = json.load(f)
        assert [s["meta"]["kappa"] for s in payload["series"]] == [2.5, 7.0]
        assert len(payload["series"][1]["data"]["theta"]) == 15
