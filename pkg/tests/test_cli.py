import csv
import json
import os
import subprocess
import sys

import pytest

from tcmps import cli
from tcmps.analysis import PowerLawFit


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def small_sweep(**kw):
    cfg = {"n": [3, 4], "n_t": 12, "regime": "sigma", "alpha_c": 0.01, "power_min": 0.05,
           "power_max": 0.2, "power_points": 3, "seed": 5, "chi": 2}
    cfg.update(kw)
    return cfg


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(cli.ENV_WORKERS, raising=False)


# -- sweep ----------------------------------------------------------------------


def test_sweep_writes_csv_with_header(tmp_path):
    cfg = write_json(tmp_path / "s.json", small_sweep(outputs={"csv": "out/s.csv", "json": "out/s.json"}))
    assert cli.main(["sweep", cfg, "-q"]) == 0
    header, rows = read_csv("out/s.csv")
    schema, emb = cli.parse_header(header)
    assert schema == cli.SWEEP_SCHEMA
    assert emb["n"] == [3, 4] and "workers" not in emb
    assert list(rows[0]) == cli.SWEEP_COLUMNS
    assert len(rows) == 6
    assert [int(r["D"]) for r in rows] == [9, 9, 9, 16, 16, 16]
    for r in rows:
        assert float(r["I"]) == pytest.approx(1 - float(r["F"]), abs=1e-15)
        # full precision: the text round-trips exactly
        assert repr(float(r["F"])) == r["F"]
    data = json.load(open("out/s.json"))
    assert data["schema"] == cli.SWEEP_SCHEMA and len(data["results"]) == 6


def test_zero_power_single_point(tmp_path):
    for regime, extra in (("sigma", {"alpha_c": 0.01}), ("alpha", {"sigma_c": 18.0})):
        cfg = dict(small_sweep(power_min=0.0, power_max=0.0, power_points=1,
                               power_spacing="linear", regime=regime, n=3), **extra)
        cfg.pop("alpha_c" if regime == "alpha" else "sigma_c", None)
        path = write_json(tmp_path / f"{regime}.json", cfg)
        assert cli.main(["sweep", path, "-o", f"{regime}.csv", "-q"]) == 0
        _, rows = read_csv(f"{regime}.csv")
        assert len(rows) == 1 and abs(float(rows[0]["I"])) < 1e-12 and float(rows[0]["P_tot"]) == 0.0


def test_sweep_output_identical_across_workers(tmp_path):
    cfg = write_json(tmp_path / "s.json", small_sweep(outputs={"json": "w.json"}))
    texts = []
    for w in (1, 4, 16):
        assert cli.main(["sweep", cfg, "-o", f"w{w}.csv", "-w", str(w), "-q"]) == 0
        texts.append((open(f"w{w}.csv", "rb").read(), open("w.json", "rb").read()))
    assert texts[0] == texts[1] == texts[2]


def test_env_workers(monkeypatch):
    assert cli.default_workers() == 1
    monkeypatch.setenv(cli.ENV_WORKERS, "3")
    assert cli.default_workers() == 3
    assert cli.pick_workers(None, {"workers": None}) == 3
    assert cli.pick_workers(None, {"workers": 2}) == 2
    assert cli.pick_workers(5, {"workers": 2}) == 5
    monkeypatch.setenv(cli.ENV_WORKERS, "many")
    with pytest.raises(cli.ConfigError):
        cli.default_workers()


@pytest.mark.parametrize("bad", [
    {"bogus": 1},
    {"regime": "sigma", "alpha_c": None},
    {"sigma_c": 3.0},
    {"power_min": -1.0},
    {"power_max": 0.01},
    {"n": []},
    {"n_t": 0},
    {"input": "ghz"},
    {"power_spacing": "log", "power_min": 0.0},
])
def test_sweep_config_errors_exit_1(tmp_path, bad, capsys):
    path = write_json(tmp_path / "bad.json", small_sweep(**bad))
    assert cli.main(["sweep", path, "-o", "x.csv", "-q"]) == 1
    assert "error" in capsys.readouterr().err
    assert not os.path.exists("x.csv")


def test_missing_and_malformed_config(tmp_path):
    assert cli.main(["sweep", "nope.json", "-o", "x.csv"]) == 1
    (tmp_path / "m.json").write_text("{not json")
    assert cli.main(["sweep", "m.json", "-o", "x.csv"]) == 1
    assert cli.main(["sweep", write_json(tmp_path / "noout.json", small_sweep())]) == 1


def test_usage_errors_exit_1():
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["sweep"]) == 1


def test_atomic_write_replaces_whole_file(tmp_path):
    target = tmp_path / "a.txt"
    target.write_text("old contents that are long")
    cli.atomic_write(str(target), "new")
    assert target.read_text() == "new"
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".tmp-")] == []


def test_console_script_exit_code(tmp_path):
    out = subprocess.run([sys.executable, "-m", "tcmps.cli", "sweep", "missing.json", "-o", "x.csv"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert out.returncode == 1


# -- fit / predict ------------------------------------------------------------


@pytest.fixture
def sweep_csv(tmp_path):
    cfg = write_json(tmp_path / "s.json", small_sweep(n=[3, 4, 5], outputs={"csv": "s.csv"}))
    assert cli.main(["sweep", cfg, "-q"]) == 0
    return "s.csv"


def test_fit_auto_2d_and_1d(sweep_csv, capsys):
    assert cli.main(["fit", sweep_csv, "-o", "f2.json"]) == 0
    f2 = PowerLawFit.from_json(open("f2.json").read())
    assert len(f2.exponents) == 2
    assert f2.fit_domain["N"] == [3, 5] and f2.fit_domain["input_kind"] == "random_mps"
    assert cli.main(["fit", sweep_csv, "--n", "4"]) == 0
    out = capsys.readouterr().out
    f1 = PowerLawFit.from_json(out)
    assert len(f1.exponents) == 1 and f1.fit_domain["D"] == [16.0, 16.0]
    assert cli.main(["fit", sweep_csv, "--dims", "1"]) == 1


def test_fit_drops_zero_rows(tmp_path):
    cfg = write_json(tmp_path / "z.json", small_sweep(n=[3], power_min=0.0, power_max=0.2,
                                                      power_points=4, power_spacing="linear"))
    assert cli.main(["sweep", cfg, "-o", "z.csv", "-q"]) == 0
    assert cli.main(["fit", "z.csv", "-o", "z_fit.json"]) == 0
    assert json.load(open("z_fit.json"))["fit_domain"]["dropped_rows"] == 1


def test_predict_powers_and_target(sweep_csv, capsys):
    assert cli.main(["fit", sweep_csv, "-o", "f.json"]) == 0
    capsys.readouterr()
    assert cli.main(["predict", "f.json", "--n", "6", "--power", "0.1", "-o", "p.csv"]) == 0
    err = capsys.readouterr().err
    assert "D outside fit domain" in err
    header, rows = read_csv("p.csv")
    assert cli.parse_header(header)[0] == cli.PRED_SCHEMA
    r = rows[0]
    assert int(r["D"]) == 36
    assert float(r["I_lower"]) <= float(r["I_central"]) <= float(r["I_upper"])
    assert cli.main(["predict", "f.json", "--depth", "16", "--target-infidelity", "0.1",
                     "--factors", "0.75", "1", "1.25", "-o", "t.csv"]) == 0
    _, rows = read_csv("t.csv")
    assert [float(r["factor"]) for r in rows] == [0.75, 1.0, 1.25]
    assert float(rows[1]["I_central"]) == pytest.approx(0.1, rel=1e-12)


def test_predict_saturation_warning(tmp_path, capsys):
    fit = PowerLawFit(1.0, (1.0,), (0.0, 0.0), [[0, 0], [0, 0]], {"P": [1e-3, 1e-2]})
    (tmp_path / "f.json").write_text(fit.to_json())
    assert cli.main(["predict", "f.json", "--depth", "1", "--power", "5.0", "-o", "p.csv"]) == 0
    assert "saturated" in capsys.readouterr().err
    _, rows = read_csv("p.csv")
    assert float(rows[0]["I_central"]) == 1.0 and rows[0]["saturated"] == "1"


def test_predict_argument_errors(sweep_csv):
    assert cli.main(["fit", sweep_csv, "-o", "f.json"]) == 0
    assert cli.main(["predict", "f.json", "--power", "0.1"]) == 1
    assert cli.main(["predict", "f.json", "--n", "4"]) == 1
    assert cli.main(["predict", "f.json", "--n", "4", "--power", "-1"]) == 1
    assert cli.main(["predict", "missing.json", "--n", "4", "--power", "0.1"]) == 1


# -- benchmark ----------------------------------------------------------------


def test_benchmark_with_powers(tmp_path):
    cfg = {"n": 4, "bits": "0110", "n_t": 5, "samples_per_traj": 200, "regime": "sigma",
           "alpha_c": 0.01, "powers": [0.0, 0.1], "top_k": 5,
           "outputs": {"histogram": "h.csv", "table": "t.csv", "summary": "s.json"}}
    assert cli.main(["benchmark", write_json(tmp_path / "b.json", cfg), "-q"]) == 0
    _, hist = read_csv("h.csv")
    zero = [r for r in hist if float(r["P_tot"]) == 0.0]
    assert len(zero) == 1 and zero[0]["bitstring"] == "0110" and zero[0]["is_input"] == "1"
    _, table = read_csv("t.csv")
    assert float(table[0]["I_sampled"]) == 0.0 and table[0]["I_central"] == ""
    s = json.load(open("s.json"))
    assert [p["samples"] for p in s["points"]] == [1000, 1000]


def test_benchmark_from_fit(tmp_path):
    fit = PowerLawFit(0.5, (1.0, 0.5), (0.05, 0.01, 0.01), [[0] * 3] * 3)
    (tmp_path / "fit.json").write_text(fit.to_json())
    cfg = {"n": 3, "n_t": 4, "samples_per_traj": 100, "regime": "sigma", "alpha_c": 0.01,
           "fit": "fit.json", "target_infidelity": 0.15, "outputs": {"table": "t.csv"}}
    assert cli.main(["benchmark", write_json(tmp_path / "b.json", cfg), "-q"]) == 0
    header, rows = read_csv("t.csv")
    emb = cli.parse_header(header)[1]
    assert emb["P0"] == pytest.approx((0.15 / (0.5 * 9**0.5)))
    assert float(rows[1]["I_central"]) == pytest.approx(0.15, rel=1e-12)


def test_benchmark_config_errors(tmp_path):
    base = {"n": 3, "regime": "sigma", "alpha_c": 0.01, "outputs": {"table": "t.csv"}}
    assert cli.main(["benchmark", write_json(tmp_path / "a.json", base)]) == 1
    both = dict(base, powers=[0.1], fit="f.json")
    assert cli.main(["benchmark", write_json(tmp_path / "b.json", both)]) == 1
    ent = dict(base, powers=[0.1], input="random_mps")
    assert cli.main(["benchmark", write_json(tmp_path / "c.json", ent)]) == 1
    bits = dict(base, powers=[0.1], bits="01")
    assert cli.main(["benchmark", write_json(tmp_path / "d.json", bits)]) == 1
    nofit = dict(base, fit="missing.json")
    assert cli.main(["benchmark", write_json(tmp_path / "e.json", nofit)]) == 1


# -- sample / validate ------------------------------------------------------------


def test_sample_exports_trajectories(capsys):
    assert cli.main(["sample", "--sigma", "1e4", "--alpha", "2", "--qubits", "2", "--steps", "5",
                     "--trajectories", "2", "--seed", "3", "-o", "n.csv"]) == 0
    header, rows = read_csv("n.csv")
    schema, emb = cli.parse_header(header)
    assert schema == cli.NOISE_SCHEMA and emb["seed"] == 3
    assert len(rows) == 2 * 2 * 5
    assert list(rows[0]) == ["trajectory", "qubit", "slot", "angle_rad"]
    from tcmps.noise import OUParams, arma_from_ou, generate_trajectory
    model = arma_from_ou(OUParams.from_alpha(1e4, 2.0))
    ref = generate_trajectory(model, 2, 5, 3, 1).angles
    got = [float(r["angle_rad"]) for r in rows if r["trajectory"] == "1" and r["qubit"] == "1"]
    assert got == list(ref[1])
    assert cli.main(["sample", "--sigma", "1.0", "--steps", "3"]) == 1
    assert cli.main(["sample", "--sigma", "1.0", "--alpha", "1", "--theta", "1"]) == 1
    capsys.readouterr()
    assert cli.main(["sample", "--sigma", "1.0", "--theta", "1e4", "--steps", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1] == "qubit,slot,angle_rad" and len(out) == 5


@pytest.mark.slow
def test_validate_quick_passes(capsys):
    assert cli.main(["validate", "--quick"]) == 0
    assert "validation passed" in capsys.readouterr().out


def test_validate_failure_exit_code(monkeypatch):
    from tcmps import validation
    monkeypatch.setattr(validation, "run_all",
                        lambda quick: [validation.SuiteReport("x", [validation.Check("c", False, "")])])
    assert cli.main(["validate", "--quick"]) == 2
