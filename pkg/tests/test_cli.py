import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ropesim import capstan_mu
from ropesim.cli import main

REF = {"m": 80, "g": 9.8, "L": 10, "delta_l": 1, "h0": 5}
CARABINER = {"scenario": {"m": 80, "g": 9.8, "delta_l": 1, "h0": 5},
             "carabiner": {"l1": 8, "l2": 10, "alpha_rad": 1.5707963267948966, "k": 0.2}}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = main(["--quiet", *argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_reference(tmp_path, capsys):
    code, out, _ = run(capsys, "bound", write(tmp_path, {"scenario": REF}))
    assert code == 0
    got = json.loads(out)
    assert got["b0"] == pytest.approx(4704.0)
    assert got["a0"] == pytest.approx(-49.0)
    assert got["v0"] == pytest.approx(9.89949, abs=5e-6)
    assert got["T"] == pytest.approx(0.20203, abs=5e-6)


def test_bound_static_hang_and_config_flag(tmp_path, capsys):
    path = write(tmp_path, {"scenario": {**REF, "h0": 10}})
    code = main(["--quiet", "--config", path, "bound"])
    got = json.loads(capsys.readouterr().out)
    assert code == 0
    assert got["b0"] == pytest.approx(80 * 9.8)
    assert got["T"] is None  # infinite arrest time is printed as null


def test_bound_errors(tmp_path, capsys):
    code, _, err = run(capsys, "bound", write(tmp_path, {"scenario": {**REF, "delta_l": "one"}}))
    assert code == 1 and "scenario.delta_l" in err
    (tmp_path / "bad.json").write_text('{"scenario": {"m": 80\n, }')
    code, _, err = run(capsys, "bound", str(tmp_path / "bad.json"))
    assert code == 1 and "line 2" in err
    code, _, err = run(capsys, "bound")
    assert code == 1 and "no scenario file" in err


def test_simulate_ideal(tmp_path, capsys):
    out_csv, out_svg = tmp_path / "t.csv", tmp_path / "t.svg"
    code, out, _ = run(capsys, "simulate", write(tmp_path, {"scenario": REF}), "--out", str(out_csv),
                       "--plot", str(out_svg))
    assert code == 0
    rep = json.loads(out)
    assert rep["optimality_gap"] <= 1e-3
    assert "upper_segment_max_strain" not in rep
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["event"] == "taut" and rows[-1]["event"] == "slack"
    assert max(float(r["tension_n"]) for r in rows) == pytest.approx(4704.0)
    root = ET.parse(out_svg).getroot()
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 4


def test_simulate_carabiner(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", write(tmp_path, CARABINER))
    rep = json.loads(out)
    assert code == 0
    assert rep["upper_segment_max_strain"] <= 1e-4  # zero up to the ramp width
    assert rep["peak_tension"] == pytest.approx(4704.0)


def test_simulate_carabiner_fine_ramp(tmp_path, capsys):
    doc = {**CARABINER, "law": {"kind": "ideal", "ramp_width": 1e-12}}
    code, out, _ = run(capsys, "simulate", write(tmp_path, doc))
    assert code == 0 and json.loads(out)["upper_segment_max_strain"] < 1e-12


def test_simulate_hysteresis(tmp_path, capsys):
    doc = {"scenario": REF, "law": {"kind": "hysteresis", "loading": "ideal",
                                    "unloading": {"kind": "plateau", "level": 862.4}}}
    code, out, _ = run(capsys, "simulate", write(tmp_path, doc))
    rep = json.loads(out)
    assert code == 0
    assert rep["rest_position"] == pytest.approx(10.0, abs=0.05)
    assert rep["energy_dissipated"] > 0


def test_simulate_overshoot_is_an_error(tmp_path, capsys):
    doc = {"scenario": REF, "law": {"kind": "linear", "modulus": 1000.0}}
    out_csv = tmp_path / "t.csv"
    code, out, err = run(capsys, "simulate", write(tmp_path, doc), "--out", str(out_csv))
    assert code == 1 and "exceeded" in err and out == ""
    assert out_csv.exists()  # partial trajectory kept for inspection


def test_optimize_two_knots(tmp_path, capsys):
    law_csv = tmp_path / "law.csv"
    code, out, _ = run(capsys, "optimize", write(tmp_path, {"scenario": REF}), "--knots", "2",
                       "--budget", "300", "--out", str(law_csv))
    assert code == 0
    cert = json.loads(out)
    assert cert == json.loads((tmp_path / "law.json").read_text())
    assert cert["gap"] <= 0.02
    with open(law_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[1]["tension_n"]) == pytest.approx(4704.0, rel=0.02)


def test_optimized_law_reimports(tmp_path, capsys):
    law_csv = tmp_path / "law.csv"
    run(capsys, "optimize", write(tmp_path, {"scenario": REF}), "--knots", "3", "--budget", "120",
        "--out", str(law_csv))
    code, out, _ = run(capsys, "simulate", write(tmp_path, {"scenario": REF, "law": {"kind": "csv:law.csv"}}))
    assert code == 0
    cert = json.loads((tmp_path / "law.json").read_text())
    assert json.loads(out)["peak_tension"] == pytest.approx(cert["peak_tension"], rel=1e-3)


@pytest.mark.parametrize("args", [["--budget", "0"], ["--budget", "99"], ["--knots", "1"], ["--budget", "x"]])
def test_optimize_usage_errors(tmp_path, args):
    with pytest.raises(SystemExit) as info:
        main(["optimize", write(tmp_path, {"scenario": REF}), *args])
    assert info.value.code == 2


def _write_samples(path, x, w):
    with open(path, "w") as fh:
        fh.write("strain,energy_n\n")
        for a, b in zip(x, w):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def test_convexify_double_well(tmp_path, capsys):
    x = np.linspace(-0.05, 0.15, 81)
    _write_samples(tmp_path / "w.csv", x, 1e6 * x ** 2 * (x - 0.1) ** 2)
    code, out, _ = run(capsys, "convexify", str(tmp_path / "w.csv"), "--out", str(tmp_path / "env.csv"),
                       "--plot", str(tmp_path / "env.svg"))
    assert code == 0
    summary = json.loads(out)
    assert summary["input_properties"]["convex"] is False
    assert summary["envelope_properties"] == {"nonnegative": True, "zero_at_origin": True, "convex": True}
    with open(tmp_path / "env.csv") as fh:
        rows = list(csv.DictReader(fh))
    inside = [r for r in rows if 1e-9 < float(r["strain"]) < 0.1 - 1e-9]
    assert len(inside) == summary["lowered_samples"]
    assert all(abs(float(r["energy_n"])) < 1e-9 and abs(float(r["tension_n"])) < 1e-9 for r in inside)
    ET.parse(tmp_path / "env.svg")


def test_convexify_convex_input_unchanged(tmp_path, capsys):
    x = np.linspace(0, 1, 30)
    _write_samples(tmp_path / "w.csv", x, x ** 2)
    code, out, _ = run(capsys, "convexify", str(tmp_path / "w.csv"))
    assert code == 0 and json.loads(out)["lowered_samples"] == 0
    with open(tmp_path / "w_envelope.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["energy_n"]) for r in rows] == [float(r["w_mic"]) for r in rows]


def test_convexify_unsorted(tmp_path, capsys):
    (tmp_path / "w.csv").write_text("strain,energy_n\n0,0\n0.2,1\n0.1,2\n")
    code, _, err = run(capsys, "convexify", str(tmp_path / "w.csv"))
    assert code == 1 and "strictly increasing" in err


def _summary(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_delta_l(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROPE_SIM_THREADS", "1")
    code, out, _ = run(capsys, "sweep", write(tmp_path, {"scenario": REF}), "--vary", "delta_l=0.5:2.0:4",
                       "--out", str(tmp_path / "sw"))
    assert code == 0
    rows = _summary(tmp_path / "sw" / "summary.csv")
    assert [float(r["delta_l"]) for r in rows] == [0.5, 1.0, 1.5, 2.0]
    for r in rows:
        dl = float(r["delta_l"])
        assert float(r["b0"]) == pytest.approx(80 * 9.8 * (10 + dl - 5) / dl, rel=1e-14)
        assert float(r["optimality_gap"]) <= 1e-3
    assert len(list((tmp_path / "sw").glob("point_*.json"))) == 4


def test_sweep_parallel_matches_serial(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, {"scenario": REF})
    monkeypatch.setenv("ROPE_SIM_THREADS", "1")
    run(capsys, "sweep", path, "--vary", "h0=0:8:3", "--out", str(tmp_path / "a"))
    monkeypatch.setenv("ROPE_SIM_THREADS", "3")
    code, out, _ = run(capsys, "sweep", path, "--vary", "h0=0:8:3", "--out", str(tmp_path / "b"))
    assert code == 0 and json.loads(out)["workers"] == 3
    assert (tmp_path / "a" / "summary.csv").read_text() == (tmp_path / "b" / "summary.csv").read_text()


def test_sweep_capstan(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROPE_SIM_THREADS", "1")
    run(capsys, "sweep", write(tmp_path, CARABINER), "--vary", "k=0:1:5", "--out", str(tmp_path / "sw"))
    rows = _summary(tmp_path / "sw" / "summary.csv")
    for r in rows:
        assert float(r["mu"]) == pytest.approx(capstan_mu(math.pi / 2, float(r["k"])), rel=1e-15)


def test_sweep_single_point_equals_simulate(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROPE_SIM_THREADS", "1")
    path = write(tmp_path, {"scenario": REF})
    _, sim_out, _ = run(capsys, "simulate", path)
    run(capsys, "sweep", path, "--vary", "delta_l=1:5:1", "--out", str(tmp_path / "sw"))
    point = json.loads((tmp_path / "sw" / "point_0000.json").read_text())
    assert point["report"] == json.loads(sim_out)


def test_sweep_errors(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, {"scenario": REF})
    code, _, err = run(capsys, "sweep", path, "--vary", "colour=0:1:2", "--out", str(tmp_path / "sw"))
    assert code == 1 and "colour" in err
    code, _, err = run(capsys, "sweep", path, "--vary", "k=0:1:2", "--out", str(tmp_path / "sw"))
    assert code == 1 and "carabiner" in err
    monkeypatch.setenv("ROPE_SIM_THREADS", "zero")
    code, _, err = run(capsys, "sweep", path, "--vary", "h0=0:1:2", "--out", str(tmp_path / "sw"))
    assert code == 1 and "ROPE_SIM_THREADS" in err
    with pytest.raises(SystemExit):
        main(["sweep", path, "--vary", "h0=0:1", "--out", str(tmp_path / "sw")])


def test_sweep_point_failure_sets_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROPE_SIM_THREADS", "1")
    # k = 0 lets the whole 18 m rope stretch, so the L2 plateau cannot stop the fall in time
    code, out, _ = run(capsys, "sweep", write(tmp_path, CARABINER), "--vary", "k=0:0.5:2", "--out", str(tmp_path / "sw"))
    assert code == 1 and json.loads(out)["failed"] == 1
    rows = _summary(tmp_path / "sw" / "summary.csv")
    assert rows[0]["status"].startswith("error") and rows[1]["status"] == "ok"
