"""Config parsing, experiment runs, suites, coverage and the CLI."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from ccncs import __version__
from ccncs.cli import main
from ccncs.config import ConfigError, config_from_dict, parse_config, suite_from_dict
from ccncs.harness import optima_coverage, run_experiment, run_suite
from ccncs.problems import HIMMELBLAU_MINIMA, himmelblau

MINIMAL = {"algorithm": "ccncs", "problem": "sphere", "dimension": 100, "budget_evals": 10000, "master_seed": 1}


def cfg(tmp_path, **kw):
    raw = {**MINIMAL, "dimension": 10, "budget_evals": 600, **kw}
    raw.setdefault("output", {"dir": str(tmp_path / "run")})
    return config_from_dict(raw)


# -- parse_config --------------------------------------------------------------

def test_minimal_config_defaults(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(MINIMAL))
    c = parse_config(path)
    assert (c.lam, c.sigma_init, c.m_pool, c.phi, c.normalization) == (6, 0.2, [2, 3, 4], 1.0, True)
    assert (c.one_fifth.r, c.one_fifth.epoch, c.one_fifth.sigma_floor) == (0.99, 10, 1e-8)
    assert c.workers == 1 and c.diversity_scope == "full"


@pytest.mark.parametrize("patch,key", [
    ({"algorithm": "ncs", "lambda": 1}, "lambda"),
    ({"lamda": 6}, "lamda"),
    ({"phi": "big"}, "phi"),
    ({"sigma_init": 0}, "sigma_init"),
    ({"m_pool": [2, 200]}, "m_pool"),
    ({"algorithm": "ncs", "m_pool": [2]}, "m_pool"),
    ({"budget_evals": 3}, "budget_evals"),
    ({"one_fifth": {"r": 1.5}}, "one_fifth.r"),
    ({"one_fifth": {"epochs": 4}}, "one_fifth.epochs"),
    ({"output": {"folder": "x"}}, "output.folder"),
    ({"problem": "himmelblau", "dimension": 3}, "dimension"),
    ({"problem": "pong"}, "problem"),
    ({"episodes": 3}, "episodes"),
    ({"executor": "gpu"}, "executor"),
    ({"workers": 0}, "workers"),
    ({"normalization": 1}, "normalization"),
    ({"schema_version": 9}, "schema_version"),
])
def test_invalid_configs_name_the_key(patch, key):
    with pytest.raises(ConfigError) as err:
        config_from_dict({**MINIMAL, **patch})
    assert err.value.key == key
    assert key in str(err.value)


def test_missing_and_malformed(tmp_path):
    with pytest.raises(ConfigError) as err:
        config_from_dict({k: v for k, v in MINIMAL.items() if k != "master_seed"})
    assert err.value.key == "master_seed"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(bad)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")


def test_env_config_requires_arch():
    with pytest.raises(ConfigError) as err:
        config_from_dict({**MINIMAL, "problem": "cartpole", "dimension": None})
    assert err.value.key == "dimension"
    raw = {"algorithm": "ccncs", "problem": "cartpole", "arch": [4, 8, 2], "budget_evals": 100, "master_seed": 0}
    c = config_from_dict(raw)
    assert c.is_env and c.episodes == 3 and c.test_episodes == 200


def test_worker_env_override(monkeypatch, tmp_path):
    c = cfg(tmp_path, workers=2)
    assert c.resolved_workers() == 2
    monkeypatch.setenv("CCNCS_WORKERS", "5")
    assert c.resolved_workers() == 5
    monkeypatch.setenv("CCNCS_WORKERS", "zero")
    with pytest.raises(ConfigError):
        c.resolved_workers()


# -- run_experiment --------------------------------------------------------------

def test_run_experiment_artifacts(tmp_path):
    res = run_experiment(cfg(tmp_path))
    paths = res.paths
    rows = list(csv.DictReader(open(paths["log_csv"])))
    assert len(rows) == len(res.log.rows)
    assert int(rows[-1]["evaluations"]) == res.log.evaluations <= 600
    summary = json.loads(paths["summary_json"].read_text())
    assert summary["version"] == __version__ and summary["config"]["lambda"] == 6
    assert summary["best_ever"] == res.log.best_score == float(rows[-1]["best_ever"])
    assert summary["best_ever_objective"] == -res.log.best_score
    genome = np.loadtxt(paths["genome_file"])
    assert np.array_equal(genome, res.log.best_genome)


def test_accounting_example_d100():
    res = run_experiment(config_from_dict(MINIMAL), write=False)
    assert 10000 - 6 < res.log.evaluations <= 10000


def test_rerun_identical_and_seed_sensitive(tmp_path):
    a = run_experiment(cfg(tmp_path, output={"dir": str(tmp_path / "a")}))
    b = run_experiment(cfg(tmp_path, output={"dir": str(tmp_path / "b")}))
    c = run_experiment(cfg(tmp_path, master_seed=2, output={"dir": str(tmp_path / "c")}))
    assert a.paths["log_csv"].read_bytes() == b.paths["log_csv"].read_bytes()
    assert a.paths["log_csv"].read_bytes() != c.paths["log_csv"].read_bytes()


def test_ncs_vs_ccncs_m1_identical_best_column(tmp_path):
    a = run_experiment(cfg(tmp_path, algorithm="ncs"), write=False)
    b = run_experiment(cfg(tmp_path, m_pool=[1]), write=False)
    assert a.log.best_scores() == b.log.best_scores()


@pytest.mark.parametrize("executor", ["thread", "process"])
def test_worker_count_does_not_change_log(tmp_path, executor):
    base = dict(problem="cartpole", dimension=None, arch=[4, 4, 2], budget_evals=200, executor=executor)
    raw = {**MINIMAL, **base}
    del raw["dimension"]
    c = config_from_dict(raw)
    one = run_experiment(c, write=False, workers=1)
    many = run_experiment(c, write=False, workers=3)
    assert [r.fitness for r in one.log.rows] == [r.fitness for r in many.log.rows]
    assert one.summary["test_return_best_ever"] == many.summary["test_return_best_ever"]


def test_env_experiment_reports_test_returns(tmp_path):
    raw = {"algorithm": "hillclimb-baseline", "problem": "sparse_chain", "arch": [10, 4, 2], "budget_evals": 120,
           "master_seed": 3, "test_episodes": 10, "common_random_numbers": True,
           "output": {"dir": str(tmp_path / "sc")}}
    res = run_experiment(config_from_dict(raw))
    s = json.loads(res.paths["summary_json"].read_text())
    assert s["test_episodes"] == 10
    assert s["test_return_best_ever"] in (0.0, 0.01, 1.0)
    assert "test_return_final_best" in s


def test_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError) as err:
        run_experiment(cfg(tmp_path, output={"dir": str(blocker / "sub")}))
    assert str(blocker) in str(err.value)


# -- run_suite -------------------------------------------------------------------

def suite_raw(tmp_path, algorithms=("ncs", "ccncs"), seeds=(1, 2, 3)):
    exps = []
    for alg in algorithms:
        e = {"algorithm": alg, "problem": "sphere", "dimension": 6, "budget_evals": 200,
             "output": {"dir": str(tmp_path / "cells" / "{name}-s{master_seed}")}}
        if alg == "ccncs":
            e["m_pool"] = [2]
        exps.append(e)
    return {"experiments": exps, "seeds": list(seeds), "summary_csv": str(tmp_path / "summary.csv")}


def test_suite_cardinality_and_exact_finals(tmp_path):
    table = run_suite(suite_from_dict(suite_raw(tmp_path)))
    cells = [r for r in table if isinstance(r["seed"], int)]
    aggs = [r for r in table if r["seed"] in ("mean", "median")]
    assert len(cells) == 6 and len(aggs) == 4
    for r in cells:
        summary = json.loads((tmp_path / "cells" / f"{r['name']}-s{r['seed']}" / "summary.json").read_text())
        assert r["best_ever"] == summary["best_ever"]
    rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
    assert len(rows) == 10
    assert float(rows[0]["best_ever"]) == cells[0]["best_ever"]
    med = next(r for r in aggs if r["name"] == "ncs-sphere" and r["seed"] == "median")
    assert med["best_ever"] == float(np.median([r["best_ever"] for r in cells if r["name"] == "ncs-sphere"]))


def test_single_cell_suite_equals_run(tmp_path):
    table = run_suite(suite_from_dict(suite_raw(tmp_path, ("ncs",), (4,))))
    single = run_experiment(config_from_dict({**suite_raw(tmp_path)["experiments"][0], "master_seed": 4}), write=False)
    assert table[0]["best_ever"] == single.log.best_score
    assert table[1]["best_ever"] == single.log.best_score  # mean of one


def test_failed_cell_does_not_abort(tmp_path):
    raw = suite_raw(tmp_path, ("ncs",), (1, 2))
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    raw["experiments"].append({"algorithm": "ncs", "problem": "sphere", "dimension": 3, "budget_evals": 60,
                               "name": "broken", "output": {"dir": str(blocker / "x")}})
    table = run_suite(suite_from_dict(raw))
    status = {(r["name"], r["seed"]): r["status"] for r in table}
    assert status[("ncs-sphere", 1)] == "ok"
    assert status[("broken", 1)] == "failed" and status[("broken", 2)] == "failed"


def test_suite_validation():
    with pytest.raises(ConfigError) as err:
        suite_from_dict({"experiments": [{**MINIMAL, "lamda": 2}], "seeds": [1]})
    assert "master_seed" in err.value.key
    no_seed = {k: v for k, v in MINIMAL.items() if k != "master_seed"}
    with pytest.raises(ConfigError) as err:
        suite_from_dict({"experiments": [{**no_seed, "lamda": 2}], "seeds": [1]})
    assert "lamda" in err.value.key
    with pytest.raises(ConfigError):
        suite_from_dict({"experiments": [], "seeds": [1]})


# -- optima_coverage ---------------------------------------------------------------

def test_coverage_examples():
    opt = np.asarray(HIMMELBLAU_MINIMA)
    assert optima_coverage(opt, opt, 0.5, 0.5, himmelblau) == 4
    assert optima_coverage([opt[0]] * 4, opt, 0.5, 0.5, himmelblau) == 1
    far = [np.array([0.0, 0.0]), np.array([6.0, 6.0])]
    assert optima_coverage([opt[1], opt[2]] + far, opt, 0.5, 0.5, himmelblau) == 2
    # near an optimum but with objective above the threshold does not count
    assert optima_coverage([opt[0] + 0.4], opt, 0.5, 0.5, himmelblau) == 0


# -- CLI -----------------------------------------------------------------------------

def test_cli(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({**MINIMAL, "dimension": 5, "budget_evals": 100,
                                "output": {"dir": str(tmp_path / "cli")}}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**MINIMAL, "lamda": 3}))
    assert main(["version"]) == 0 and __version__ in capsys.readouterr().out
    assert main(["validate", str(good)]) == 0
    assert main(["validate", str(bad)]) == 1
    assert "lamda" in capsys.readouterr().err
    assert main(["run", str(good), "--workers", "2"]) == 0
    assert (tmp_path / "cli" / "iterations.csv").exists()
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps(suite_raw(tmp_path, ("ncs",), (1,))))
    assert main(["validate", "--suite", str(suite)]) == 0
    assert main(["suite", str(suite)]) == 0
    blocked = tmp_path / "blocked.json"
    (tmp_path / "wall").write_text("")
    blocked.write_text(json.dumps({**MINIMAL, "dimension": 5, "budget_evals": 100,
                                   "output": {"dir": str(tmp_path / "wall" / "x")}}))
    assert main(["run", str(blocked)]) == 2
