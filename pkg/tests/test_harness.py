import json

import numpy as np
import pytest

from conftest import write_classification_csv
from gatedbandit import cli
from gatedbandit.harness import (
    STEP_COLUMNS,
    SUMMARY_COLUMNS,
    ConfigError,
    PolicySpec,
    RunConfig,
    RunSummary,
    TaskSpec,
    build_policy,
    build_task,
    load_config,
    mean_stderr,
    parse_seeds,
    rank_table,
    read_steps,
    read_summary,
    run,
    run_episode,
    step_path,
    summarize,
)


def config(tmp_path, tasks, policies, seeds=(0, 1), **kw):
    return RunConfig.from_dict({"tasks": tasks, "policies": policies, "seeds": list(seeds),
                                "out": str(tmp_path / "out"), **kw})


def test_uniform_on_statlog_like(tmp_path):
    path = write_classification_csv(tmp_path / "statlog.csv", rows=5000)
    cfg = config(tmp_path, [{"name": "statlog", "path": str(path)}], ["uniform"], seeds=range(20))
    (summary,) = summarize(run(cfg))
    assert summary.seeds == 20
    assert abs(summary.mean_cum_reward - 5000 / 7) < 0.05 * 5000 / 7


def test_horizon_override(tmp_path, statlog_csv):
    cfg = config(tmp_path, [{"name": "statlog", "path": str(statlog_csv)}], ["glcb"], seeds=[3], horizon=10)
    out = run(cfg)
    lines = step_path(out, "statlog", "glcb", 3).read_text().splitlines()
    assert lines[0] == ",".join(STEP_COLUMNS)
    assert len(lines) == 11


def test_step_records_consistent(tmp_path):
    records = run_episode(TaskSpec("wheel"), PolicySpec("uniform"), 4, horizon=300)
    rewards = np.array([r.reward for r in records])
    assert np.allclose([r.cumulative_reward for r in records], np.cumsum(rewards), atol=1e-9)
    regret = np.cumsum([r.optimal_reward - r.reward for r in records])
    assert np.all(np.diff(regret) >= 0)
    assert [r.t for r in records] == list(range(1, 301))


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_rerun_byte_identical(tmp_path, statlog_csv):
    tasks = [{"name": "statlog", "path": str(statlog_csv)}, "wheel"]
    base = dict(tasks=tasks, policies=["glcb", "uniform", "linear_ts"], seeds=[0, 1], horizon=150)
    a = run(RunConfig.from_dict({**base, "out": str(tmp_path / "a")}))
    b = run(RunConfig.from_dict({**base, "out": str(tmp_path / "b")}))
    fa, fb = _files(a), _files(b)
    assert fa.keys() == fb.keys() and len(fa) > 10
    assert fa == fb


def test_parallelism_invariance(tmp_path, statlog_csv):
    base = dict(tasks=[{"name": "statlog", "path": str(statlog_csv)}], policies=["glcb", "linear_ts"],
                seeds=list(range(8)), horizon=100)
    serial = run(RunConfig.from_dict({**base, "out": str(tmp_path / "s"), "jobs": 1}))
    pooled = run(RunConfig.from_dict({**base, "out": str(tmp_path / "p"), "jobs": 8}))
    assert (serial / "summary.csv").read_bytes() == (pooled / "summary.csv").read_bytes()
    assert _files(serial) == _files(pooled)


def test_rank_examples():
    s = [RunSummary("a", "t", 1, 10.0, 0.0), RunSummary("b", "t", 1, 5.0, 0.0)]
    rank_table(s)
    assert [x.rank for x in s] == [1, 2]
    tie = [RunSummary("a", "t", 1, 7.0, 0.0), RunSummary("b", "t", 1, 7.0, 0.0),
           RunSummary("c", "t", 1, 1.0, 0.0)]
    rank_table(tie)
    assert [x.rank for x in tie] == [1, 1, 3]


def test_mean_rank():
    s = [RunSummary("a", "t1", 1, 3.0, 0), RunSummary("b", "t1", 1, 1.0, 0),
         RunSummary("a", "t2", 1, 3.0, 0), RunSummary("b", "t2", 1, 1.0, 0),
         RunSummary("a", "t3", 1, 1.0, 0), RunSummary("b", "t3", 1, 3.0, 0)]
    assert rank_table(s)["a"] == pytest.approx(4 / 3)


def test_rank_duplicate_pair():
    with pytest.raises(ValueError):
        rank_table([RunSummary("a", "t", 1, 1.0, 0), RunSummary("a", "t", 1, 2.0, 0)])


def test_mean_stderr():
    assert mean_stderr([4, 6]) == pytest.approx((5.0, 1.0))
    assert mean_stderr([3.5]) == (3.5, 0.0)
    with pytest.raises(ValueError):
        mean_stderr([])


def test_summarize_missing_seed_file(tmp_path):
    out = run(config(tmp_path, ["wheel"], ["uniform"], seeds=[0, 1], horizon=20))
    step_path(out, "wheel", "uniform", 1).unlink()
    with pytest.raises(FileNotFoundError):
        summarize(out)


def test_summary_and_regret_files(tmp_path):
    out = run(config(tmp_path, ["two_context"], ["glcb", "uniform"], seeds=[0, 1, 2], horizon=200))
    rows = read_summary(out / "summary.csv")
    assert (out / "summary.csv").read_text().splitlines()[0] == ",".join(SUMMARY_COLUMNS)
    assert {r.algorithm for r in rows} == {"glcb", "uniform"}
    assert sorted(r.rank for r in rows) in ([1, 2], [1, 1])
    curve = np.loadtxt(out / "two_context" / "glcb" / "regret.csv", delimiter=",", skiprows=1)
    assert curve.shape == (200, 2)
    assert np.all(np.diff(curve[:, 1]) >= 0)
    finals = [read_steps(step_path(out, "two_context", "glcb", s))[-1].cumulative_reward for s in (0, 1, 2)]
    glcb = next(r for r in rows if r.algorithm == "glcb")
    assert glcb.mean_cum_reward == pytest.approx(np.mean(finals))


def test_policy_mode_mismatch(statlog_csv):
    task = build_task(TaskSpec("statlog", str(statlog_csv)), 0, 10)
    with pytest.raises(ConfigError):
        build_policy(PolicySpec("glcb", options={"mode": "continuous"}), task, 0)
    wheel = build_task(TaskSpec("wheel"), 0, 10)
    agent = build_policy(PolicySpec("glcb"), wheel, 0)
    assert agent.config.mode == "continuous" and agent.config.r_max == 10.0


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        config(tmp_path, ["wheel"], ["nope"])
    with pytest.raises(ConfigError):
        config(tmp_path, ["wheel"], ["uniform"], seeds=[1, 1])
    with pytest.raises(ConfigError):
        config(tmp_path, [], ["uniform"])
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"tasks": ["wheel"], "policies": ["uniform"], "colour": 1})


def test_parse_seeds():
    assert parse_seeds("3..6") == [3, 4, 5, 6]
    assert parse_seeds(3) == [0, 1, 2]
    assert parse_seeds([5, 9]) == [5, 9]
    with pytest.raises(ConfigError):
        parse_seeds("x..y")


def test_toml_and_json_configs(tmp_path):
    (tmp_path / "c.toml").write_text(
        'seeds = "0..2"\nhorizon = 5\n[[tasks]]\nname = "wheel"\n'
        '[[policies]]\nname = "glcb"\n"UCB exploration bonus" = 0.5\n')
    (tmp_path / "c.json").write_text(json.dumps(
        {"seeds": "0..2", "horizon": 5, "tasks": [{"name": "wheel"}],
         "policies": [{"name": "glcb", "UCB exploration bonus": 0.5}]}))
    a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
    assert a == b and a.seeds == [0, 1, 2]
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_cli_round_trip(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"tasks": ["two_context"], "policies": ["glcb", "uniform"], "horizon": 50}))
    out = tmp_path / "cli"
    assert cli.main(["run", "--config", str(cfg), "--seeds", "0..1", "--out", str(out)]) == 0
    assert step_path(out, "two_context", "uniform", 1).is_file()
    assert not step_path(out, "two_context", "uniform", 2).exists()
    assert cli.main(["summarize", str(out)]) == 0
    assert cli.main(["rank", str(out / "summary.csv")]) == 0
    text = capsys.readouterr().out
    assert "algorithm,mean_rank" in text


def test_cli_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tasks": ["wheel"], "policies": ["mystery"]}))
    assert cli.main(["run", "--config", str(bad)]) != 0
    assert cli.main(["run", "--config", str(tmp_path / "absent.json")]) != 0
    assert cli.main(["summarize", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err
