import csv
import json
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

CLI = os.environ.get("PMSM_CLI", "pmsm")
SCHEMAS = Path(os.environ.get("PMSM_SCHEMAS", Path(__file__).resolve().parents[2] / "schemas"))


def pmsm(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def check_schema(path, name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    doc = json.loads(Path(path).read_text())
    jsonschema.validate(doc, schema)
    return doc


@pytest.fixture(scope="module")
def pair(tmp_path_factory):
    d = tmp_path_factory.mktemp("pair")
    r = pmsm("train", "--dataset", "gaussians", "--seed", 42, "--out", d / "ann.json")
    assert r.returncode == 0, r.stderr
    r = pmsm("convert", "--in", d / "ann.json", "--out", d / "snn.json")
    assert r.returncode == 0, r.stderr
    r = pmsm("dataset", "--kind", "gaussians", "--n", 20, "--seed", 3, "--out", d / "x.csv")
    assert r.returncode == 0, r.stderr
    return d


def test_train_outputs(pair):
    check_schema(pair / "ann.json", "model")
    metrics = check_schema(pair / "ann.metrics.json", "train_metrics")
    assert metrics["test_accuracy"] >= 0.95


def test_train_is_deterministic(pair, tmp_path):
    r = pmsm("train", "--dataset", "gaussians", "--seed", 42, "--out", tmp_path / "again.json")
    assert r.returncode == 0
    assert (tmp_path / "again.json").read_bytes() == (pair / "ann.json").read_bytes()


def test_train_requires_out():
    assert pmsm("train", "--dataset", "gaussians").returncode == 2


def test_convert_transfers_thresholds(pair):
    ann = json.loads((pair / "ann.json").read_text())
    snn = check_schema(pair / "snn.json", "model")
    assert snn["model_kind"] == "snn"
    q = next(l["quant"] for l in ann["layers"] if l["kind"] == "pqa")
    aif = snn["layers"][0]["aif"]
    step = q["theta"] / q["L"]
    assert aif["theta_snn"] == pytest.approx(step, rel=1e-6)
    assert aif["c_neg"] == round(q["alpha"] * q["L"])
    assert aif["c_pos"] == round(q["beta"] * q["L"])
    assert aif["v_init"] == pytest.approx(step / 2, rel=1e-6)
    assert snn["layers"][-1]["aif"] is None


def test_convert_rejects_snn_input(pair, tmp_path):
    r = pmsm("convert", "--in", pair / "snn.json", "--out", tmp_path / "x.json")
    assert r.returncode == 1
    assert "already an SNN" in r.stderr


def test_convert_rejects_dangling_batchnorm(pair, tmp_path):
    ann = json.loads((pair / "ann.json").read_text())
    bn = next(l for l in ann["layers"] if l["kind"] == "batchnorm")
    ann["layers"].insert(3, bn)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(ann))
    r = pmsm("convert", "--in", bad, "--out", tmp_path / "x.json")
    assert r.returncode == 1
    assert r.stderr


def test_run_and_energy(pair, tmp_path):
    r = pmsm("run", "--model", pair / "snn.json", "--input", pair / "x.csv", "--timesteps", 4,
             "--spikes", "--out", tmp_path / "run.json")
    assert r.returncode == 0, r.stderr
    run = check_schema(tmp_path / "run.json", "run_report")
    assert run["num_samples"] == 20
    assert run["total_spike_events"] == sum(l["spike_count"] for l in run["layers"])

    r = pmsm("energy", "--run-report", tmp_path / "run.json", "--out", tmp_path / "energy.json",
             "--layer-csv", tmp_path / "layers.csv")
    assert r.returncode == 0, r.stderr
    energy = check_schema(tmp_path / "energy.json", "energy_report")
    n = run["total_spike_events"]
    assert energy["P_watts"] == pytest.approx(n / (20 * 4 * 1e-3) * 0.9e-12)
    rows = list(csv.reader((tmp_path / "layers.csv").open()))
    assert rows[0] == ["layer_label", "spike_count"]
    assert len(rows) - 1 == len(run["layers"])


def test_run_rejects_zero_timesteps(pair):
    r = pmsm("run", "--model", pair / "snn.json", "--input", pair / "x.csv", "--timesteps", 0)
    assert r.returncode != 0
    assert "timesteps" in r.stderr


def test_energy_missing_report(tmp_path):
    assert pmsm("energy", "--run-report", tmp_path / "nope.json").returncode == 1


def test_energy_table_value(tmp_path):
    report = {"format_version": 1, "kind": "run_report", "timesteps": 1, "drive": "propagated",
              "num_samples": 1, "total_spike_events": 61000000,
              "layers": [{"label": "L0-conv2d", "spike_count": 61000000}], "samples": []}
    (tmp_path / "r.json").write_text(json.dumps(report))
    r = pmsm("energy", "--run-report", tmp_path / "r.json", "--out", tmp_path / "e.json")
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "e.json").read_text())["P_watts"] == pytest.approx(0.0549)


def test_verify_matches_t1_run(pair, tmp_path):
    r = pmsm("verify", "--ann", pair / "ann.json", "--snn", pair / "snn.json", "--n-samples", 200,
             "--out", tmp_path / "v.json")
    assert r.returncode == 0, r.stderr
    v = check_schema(tmp_path / "v.json", "equivalence_report")
    assert v["pass"] and v["index_mismatches"] == 0

    r = pmsm("verify", "--ann", pair / "ann.json", "--snn", pair / "snn.json", "--input",
             pair / "x.csv", "--out", tmp_path / "v2.json")
    assert r.returncode == 0
    pmsm("run", "--model", pair / "snn.json", "--input", pair / "x.csv", "--timesteps", 1,
         "--out", tmp_path / "run1.json")
    run = json.loads((tmp_path / "run1.json").read_text())
    assert json.loads((tmp_path / "v2.json").read_text())["samples"] == len(run["samples"])


def test_verify_negative_control(pair, tmp_path):
    snn = json.loads((pair / "snn.json").read_text())
    snn["layers"][0]["aif"]["v_init"] = 0.0
    bad = tmp_path / "bad_snn.json"
    bad.write_text(json.dumps(snn))
    r = pmsm("verify", "--ann", pair / "ann.json", "--snn", bad, "--n-samples", 500,
             "--tolerance", 0)
    assert r.returncode == 1
    assert json.loads(r.stdout)["pass"] is False


def test_entropy_grid(tmp_path):
    out = tmp_path / "grid.csv"
    r = pmsm("entropy-grid", "--L", 8, "--theta", 8, "--step", "auto", "--formula", "printed",
             "--out", out, "--json", tmp_path / "grid.json", "--ppm", tmp_path / "grid.ppm")
    assert r.returncode == 0, r.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,beta,R"
    assert len(lines) == 73
    grid = check_schema(tmp_path / "grid.json", "entropy_grid")
    assert grid["max_R"] >= 0.97
    assert (tmp_path / "grid.ppm").read_bytes().startswith(b"P6\n")

    again = tmp_path / "again.csv"
    pmsm("entropy-grid", "--L", 8, "--theta", 8, "--out", again)
    assert again.read_bytes() == out.read_bytes()

    half = tmp_path / "half.csv"
    assert pmsm("entropy-grid", "--L", 8, "--theta", 8, "--step", 0.25, "--out", half).returncode == 0
    assert len(half.read_text().splitlines()) == 1 + 5 * 4


def test_entropy_grid_rejects_bad_theta(tmp_path):
    r = pmsm("entropy-grid", "--L", 8, "--theta", 0, "--out", tmp_path / "g.csv")
    assert r.returncode != 0
    assert not (tmp_path / "g.csv").exists()


def test_error_analysis(pair, tmp_path):
    out = tmp_path / "errs.csv"
    r = pmsm("error-analysis", "--ann", pair / "ann.json", "--snn", pair / "snn.json",
             "--timesteps-list", "1,2,4,8,16", "--n-samples", 10, "--out", out)
    assert r.returncode == 0, r.stderr
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0].keys()) == ["T", "layer", "mean_abs_err", "delta_minus1", "delta_0",
                                    "delta_plus1", "delta_other"]
    snn = json.loads((pair / "snn.json").read_text())
    neurons = snn["layers"][0]["weight"]["shape"][0]
    for row in rows:
        t = int(row["T"])
        buckets = sum(int(row[k]) for k in ("delta_minus1", "delta_0", "delta_plus1", "delta_other"))
        assert buckets == 10 * neurons * t
        if t == 1:
            assert float(row["mean_abs_err"]) <= 1e-4
