import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from qil import cli
from qil.config import ConfigError, load_config, parse_config
from qil.errors import NoConvergence


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return path


def digest(directory, skip=("timing.json",)):
    h = hashlib.sha256()
    for f in sorted(directory.iterdir()):
        if f.name not in skip:
            h.update(f.name.encode())
            h.update(f.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def simdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    cfg = write_cfg(root / "sim.json", {"command": "simulate", "seed": 7,
                                        "simulate": {"n": 500, "logit_n": 2000}})
    assert cli.run("simulate", cfg, out=root / "out") == 0
    return root / "out"


def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="config invalid"):
        parse_config({"command": "fit", "colour": 1})
    with pytest.raises(ConfigError):
        parse_config({"command": "fit", "epsilon": 1.5})


def test_command_algorithm_pairing(tmp_path):
    (tmp_path / "x.csv").write_text("x\n1\n2\n")
    base = {"model": {"name": "normal"}, "data": {"path": "x.csv"}}
    with pytest.raises(ConfigError, match="not valid"):
        parse_config(dict(base, command="fit", algorithm="am"), tmp_path)
    with pytest.raises(ConfigError, match="needs an algorithm"):
        parse_config(dict(base, command="sample"), tmp_path)
    assert parse_config(dict(base, command="fit", algorithm="pls"), tmp_path).model_name == "normal"


def test_exit_code_2(tmp_path, capsys):
    bad = write_cfg(tmp_path / "bad.json", {"command": "fit", "model": {"name": "normal"},
                                            "data": {"path": "missing.csv"}, "algorithm": "pls"})
    assert cli.run("fit", bad, out=tmp_path / "o") == 2
    assert "not found" in capsys.readouterr().err
    (tmp_path / "junk.json").write_text("{not json")
    assert cli.run("fit", tmp_path / "junk.json") == 2
    assert cli.run("fit", tmp_path / "absent.json") == 2
    schema = write_cfg(tmp_path / "s.json", {"command": "fit", "iterations": 0})
    assert cli.main(["fit", "--config", str(schema)]) == 2


def test_exit_code_3(simdir, tmp_path, monkeypatch):
    import qil.optimize

    def boom(obj, starts, **kw):
        raise NoConvergence("stalled", best=np.array([1.0, 2.0]), best_value=4.0)

    monkeypatch.setattr(qil.optimize, "pls_estimate", boom)
    cfg = write_cfg(tmp_path / "f.json", {"command": "fit", "model": {"name": "normal"},
                                          "data": {"path": str(simdir / "basic_normal.csv")},
                                          "algorithm": "pls"})
    assert cli.run("fit", cfg, out=tmp_path / "o") == 3
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["status"] == "no_convergence"
    assert rep["best"] == {"mu": 1.0, "sigma": 2.0}


def test_simulate_manifest(simdir):
    man = json.loads((simdir / "manifest.json").read_text())
    assert man["seed"] == 7
    paths = {f["path"] for f in man["files"]}
    assert len([p for p in paths if p.startswith("basic_")]) == 19
    assert {"g_and_h.csv", "g_and_k.csv", "logit.csv", "skew_normal.csv", "wallenius.csv"} <= paths
    assert all((simdir / p).is_file() for p in paths)
    logit = next(f for f in man["files"] if f["design"] == "logit")
    x = np.loadtxt(simdir / "logit.csv", delimiter=",", skiprows=1)
    assert x.shape == (2000, 9)
    c = np.corrcoef(x[:, 1:].T)
    assert c[0, 1] == pytest.approx(0.5, abs=0.08) and c[0, 2] == pytest.approx(0.25, abs=0.08)
    assert logit["n"] == 2000
    wal = next(f for f in man["files"] if f["design"] == "wallenius")
    assert sum(wal["truth"]) == pytest.approx(1.0)
    sn = next(f for f in man["files"] if f["design"] == "skew-normal")
    assert len(sn["nonzero_pairs"]) == 10
    omega = np.loadtxt(simdir / "skew_normal_precision.csv", delimiter=",", skiprows=1)
    off = omega[np.triu_indices(10, 1)]
    assert np.count_nonzero(off) == 10


def test_simulate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "s.json", {"command": "simulate", "seed": 3,
                                          "simulate": {"designs": ["g-and-k", "wallenius"], "n": 300}})
    assert cli.run("simulate", cfg, out=tmp_path / "a") == 0
    assert cli.run("simulate", cfg, out=tmp_path / "b") == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    assert cli.run("simulate", cfg, seed=4, out=tmp_path / "c") == 0
    assert digest(tmp_path / "a") != digest(tmp_path / "c")


def test_simulate_design_seeds_independent(tmp_path):
    one = write_cfg(tmp_path / "1.json", {"command": "simulate", "simulate": {"designs": ["g-and-k"], "n": 100}})
    two = write_cfg(tmp_path / "2.json", {"command": "simulate",
                                          "simulate": {"designs": ["g-and-h", "g-and-k"], "n": 100}})
    cli.run("simulate", one, out=tmp_path / "a")
    cli.run("simulate", two, out=tmp_path / "b")
    assert (tmp_path / "a" / "g_and_k.csv").read_bytes() == (tmp_path / "b" / "g_and_k.csv").read_bytes()


def test_fit_deterministic_and_reasonable(simdir, tmp_path):
    cfg = write_cfg(tmp_path / "f.json", {"command": "fit", "model": {"name": "normal"},
                                          "data": {"path": str(simdir / "basic_normal.csv")},
                                          "algorithm": "plm", "prior": {"type": "flat"}})
    assert cli.run("fit", cfg, out=tmp_path / "a") == 0
    assert cli.run("fit", cfg, out=tmp_path / "b") == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    man = json.loads((simdir / "manifest.json").read_text())
    truth = next(f for f in man["files"] if f.get("model") == "normal")["truth"]
    assert rep["status"] == "ok" and rep["d"] > 1
    assert rep["theta"]["mu"] == pytest.approx(truth["mu"], abs=0.3)
    timing = json.loads((tmp_path / "a" / "timing.json").read_text())
    assert timing["fit"] >= 0


def test_sample_deterministic_with_trace(simdir, tmp_path):
    cfg = write_cfg(tmp_path / "s.json", {"command": "sample", "model": {"name": "exponential"},
                                          "data": {"path": str(simdir / "basic_exponential.csv")},
                                          "algorithm": "am", "iterations": 1500, "seed": 2})
    assert cli.run("sample", cfg, out=tmp_path / "a", trace=True) == 0
    assert cli.run("sample", cfg, out=tmp_path / "b", trace=True) == 0
    assert (tmp_path / "a" / "trace.csv").is_file()
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    assert cli.run("sample", cfg, seed=9, out=tmp_path / "c") == 0
    assert (json.loads((tmp_path / "a" / "report.json").read_text())
            != json.loads((tmp_path / "c" / "report.json").read_text()))


def test_sample_vis_needs_box(simdir, tmp_path):
    cfg = write_cfg(tmp_path / "s.json", {"command": "sample", "model": {"name": "normal"},
                                          "data": {"path": str(simdir / "basic_normal.csv")},
                                          "algorithm": "vis", "iterations": 200})
    assert cli.run("sample", cfg, out=tmp_path / "a") == 2
    cfg = write_cfg(tmp_path / "s2.json", {"command": "sample",
                                           "model": {"name": "normal", "box": [[0, 6], [0.1, 4]]},
                                           "data": {"path": str(simdir / "basic_normal.csv")},
                                           "algorithm": "vis", "iterations": 500})
    assert cli.run("sample", cfg, out=tmp_path / "b") == 0


def test_select_univariate(simdir, tmp_path, capsys):
    cfg = write_cfg(tmp_path / "s.json", {"command": "select", "epsilon": 0.02,
                                          "data": {"path": str(simdir / "basic_normal.csv")}})
    assert cli.run("select", cfg, out=tmp_path / "a") == 0
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["gap"] <= 0.02 and "d = " in capsys.readouterr().out
    grid = np.loadtxt(tmp_path / "a" / "grid.csv", delimiter=",", skiprows=1)
    assert grid.shape == (rep["d"], 2)
    assert cli.run("select", cfg, out=tmp_path / "b") == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_select_coreset_identity_at_zero(simdir, tmp_path):
    cfg = write_cfg(tmp_path / "s.json", {"command": "select", "epsilon": 0,
                                          "data": {"path": str(simdir / "skew_normal.csv"),
                                                   "format": "multivariate"}})
    assert cli.run("select", cfg, out=tmp_path / "a") == 0
    idx = np.loadtxt(tmp_path / "a" / "indices.csv", delimiter=",", skiprows=1, dtype=int)
    assert sorted(idx.tolist()) == list(range(40))


def test_bench_zero_replications(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "b.json", {"command": "bench", "bench": {"study": "basic", "replications": 0}})
    assert cli.run("bench", cfg, out=tmp_path / "a") == 0
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["rows"] == [] and rep["warnings"]
    assert "warning" in capsys.readouterr().err


def test_bench_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "b.json", {"command": "bench", "seed": 5, "bench": {
        "study": "basic", "models": ["normal", "poisson"], "n": 300, "replications": 2}})
    assert cli.run("bench", cfg, out=tmp_path / "a") == 0
    assert cli.run("bench", cfg, out=tmp_path / "b") == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert [r["model"] for r in rep["rows"]] == ["normal", "poisson", "all"]


def test_wallenius_fixture_fit(tmp_path):
    cfg = write_cfg(tmp_path / "w.json", {"command": "fit", "model": {"name": "wallenius"},
                                          "data": {"fixture": "activities"}, "algorithm": "plm"})
    assert cli.run("fit", cfg, out=tmp_path / "a") == 0
    theta = json.loads((tmp_path / "a" / "report.json").read_text())["theta"]
    assert len(theta) == 6 and sum(theta.values()) == pytest.approx(1.0)


def test_command_line_override(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {"command": "fit", "simulate": {"designs": ["g-and-h"], "n": 50}})
    assert load_config(cfg, command="simulate").command == "simulate"
    proc = subprocess.run([sys.executable, "-m", "qil.cli", "simulate", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "g_and_h.csv").is_file()
