import csv
import json
import os
import subprocess
import sys

import pytest

from tacd.cli import main
from tacd.experiments import ExperimentConfig, cell_seed, cmd_example, cmd_run, paired_interval, welfare_table


def test_example_exit_zero(capsys):
    assert main(["example"]) == 0
    assert "golden: all values match" in capsys.readouterr().out


def test_example_mismatch_exits_nonzero(tmp_path, capsys):
    from tacd.experiments import load_golden
    g = load_golden()
    g["C1"]["revenue"] = 33.5
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g))
    assert main(["example", "--golden", str(path)]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_generate_and_verify(tmp_path, capsys):
    sc, out = tmp_path / "sc.json", tmp_path / "out.json"
    assert main(["generate", "--aps", "8", "--seed", "3", "--scheme", "TACDpp", "-o", str(sc),
                 "--outcome", str(out)]) == 0
    assert main(["verify", str(sc), "--outcome", str(out)]) == 0
    assert main(["verify", str(sc), "--scheme", "HAF"]) == 0
    assert "all property checks passed" in capsys.readouterr().out


def test_verify_catches_tampered_outcome(tmp_path, capsys):
    sc, out = tmp_path / "sc.json", tmp_path / "out.json"
    main(["generate", "--aps", "8", "--seed", "3", "-o", str(sc), "--outcome", str(out)])
    data = json.loads(out.read_text())
    i = next(iter(data["ap_clearing"]))
    data["ap_clearing"][i] = 1e6
    out.write_text(json.dumps(data))
    assert main(["verify", str(sc), "--outcome", str(out)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_generate_flags(tmp_path):
    path = tmp_path / "sc.json"
    main(["generate", "--mus", "200", "--k-ratio", "0.5", "--seed", "1", "--mus-max", "10", "-o", str(path)])
    data = json.loads(path.read_text())
    assert len(data["cloudlets"]) == round(0.5 * len(data["aps"]))
    assert all(len(ap["mus"]) <= 10 for ap in data["aps"])


def test_run_writes_csv(tmp_path, capsys):
    rc = main(["run", "--schemes", "TACD", "HAF", "--mu-counts", "60", "--trials", "3",
               "--output-dir", str(tmp_path)])
    assert rc == 0
    rows = list(csv.DictReader(open(tmp_path / "runs.csv")))
    assert len(rows) == 6
    assert list(rows[0]) == ["scheme", "mu_count", "trial", "seed", "SW", "sum_u_mu", "sum_u_ap",
                             "sum_u_cloudlet", "matched_pairs", "runtime_ms", "status"]
    assert {r["status"] for r in rows} == {"ok"}
    for r in rows:
        total = float(r["sum_u_mu"]) + float(r["sum_u_ap"]) + float(r["sum_u_cloudlet"])
        assert float(r["SW"]) == pytest.approx(total)


def test_run_parallel_equals_serial(tmp_path):
    cfg = ExperimentConfig(schemes=["TACDp", "HAF"], mu_counts=[80], trials=4, output_dir=str(tmp_path))
    serial = cmd_run(cfg, tmp_path / "a.csv")
    parallel = cmd_run(ExperimentConfig(**{**cfg.__dict__, "jobs": 2}), tmp_path / "b.csv")
    strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ms"} for r in rows]
    assert strip(serial) == strip(parallel)


def test_sweep_writes_three_curves(tmp_path):
    assert main(["sweep", "--sweep-trials", "5", "--output-dir", str(tmp_path)]) == 0
    for v in (1, 2, 5):
        assert (tmp_path / f"sweep_top2_{v}.csv").exists()


def test_config_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"trails": 3}))
    with pytest.raises(ValueError):
        ExperimentConfig.load(bad)
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=["VCG"]).validate()
    cfg = ExperimentConfig.load(None, market={"mode": "unbalanced", "k_ratio": 0.6})
    assert cfg.k_ratio == 0.6
    assert ExperimentConfig().k_ratio is None


def test_welfare_table_and_interval():
    rows = [dict(scheme=s, mu_count=10, trial=t, SW=sw, status="ok")
            for t in range(3) for s, sw in (("HAF", 10.0 + t), ("TACD", 11.0 + t))]
    table = welfare_table(rows)
    assert table[("TACD", 10)]["ratio"] == pytest.approx(12.0 / 11.0)
    lo, hi = paired_interval([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
    assert lo == hi == pytest.approx(1.0)


def test_cell_seed_differs():
    assert len({cell_seed(1, c, t) for c in (10, 20) for t in range(50)}) == 100


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tacd", "example"], capture_output=True, text=True)
    assert out.returncode == 0


def test_numpy_backend_flag():
    env = {**os.environ, "TACD_NUMBA": "0"}
    code = "from tacd import kernels; print(kernels.BACKEND_NAME)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numpy"


def test_backends_give_identical_runs(tmp_path):
    rows = {}
    for flag in ("0", "1"):
        out = tmp_path / flag
        subprocess.run([sys.executable, "-m", "tacd", "run", "--mu-counts", "120", "--trials", "3",
                        "--output-dir", str(out)], check=True, capture_output=True,
                       env={**os.environ, "TACD_NUMBA": flag})
        rows[flag] = [{k: v for k, v in r.items() if k != "runtime_ms"}
                      for r in csv.DictReader(open(out / "runs.csv"))]
    assert rows["0"] == rows["1"]
