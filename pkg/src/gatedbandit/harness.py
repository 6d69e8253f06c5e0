"""Seeded experiment runner: policy x task grids, per-step CSV logs, summaries
and rank tables."""
from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import LinearTSPolicy, UniformPolicy
from .envs import BERNOULLI, BanditTask, make_task
from .glcb import CONTINUOUS, GlcbAgent, GlcbConfig

log = logging.getLogger(__name__)

STEP_COLUMNS = ("seed", "t", "action", "reward", "cum_reward", "optimal_reward")
SUMMARY_COLUMNS = ("algorithm", "task", "seeds", "mean_cum_reward", "stderr", "rank")
REGRET_COLUMNS = ("t", "mean_regret")
DEFAULT_SEEDS = 20
POLICIES = ("glcb", "uniform", "linear_ts")


class ConfigError(ValueError):
    pass


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named consumer of a run seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


@dataclass(frozen=True)
class TaskSpec:
    name: str
    path: str | None = None
    label: str | None = None
    options: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class PolicySpec:
    name: str
    label: str | None = None
    options: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return self.label or self.name


@dataclass
class RunConfig:
    tasks: list[TaskSpec]
    policies: list[PolicySpec]
    seeds: list[int] = field(default_factory=lambda: list(range(DEFAULT_SEEDS)))
    out_dir: str = "runs"
    horizon: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if not self.tasks or not self.policies:
            raise ConfigError("a run needs at least one task and one policy")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ConfigError("seeds must be a non-empty list of distinct integers")
        for p in self.policies:
            if p.name not in POLICIES:
                raise ConfigError(f"unknown policy {p.name!r}; expected one of {POLICIES}")
        for kind, keys in (("task", [t.key for t in self.tasks]), ("policy", [p.key for p in self.policies])):
            if len(set(keys)) != len(keys):
                raise ConfigError(f"duplicate {kind} labels: {keys}")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        tasks = [_task_spec(t) for t in _plural(data, "tasks", "task")]
        policies = [_policy_spec(p) for p in _plural(data, "policies", "policy")]
        seeds = parse_seeds(data.pop("seeds", DEFAULT_SEEDS))
        out_dir = str(data.pop("out", data.pop("out_dir", "runs")))
        horizon = data.pop("horizon", None)
        jobs = int(data.pop("jobs", 1))
        if data:
            raise ConfigError(f"unknown run config keys: {sorted(data)}")
        return cls(tasks, policies, seeds, out_dir, horizon, jobs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["out"] = out.pop("out_dir")
        for t in out["tasks"]:
            t.update(t.pop("options"))
        for p in out["policies"]:
            p.update(p.pop("options"))
        return out


def _plural(data: dict, many: str, one: str) -> list:
    items = list(data.pop(many, []))
    if one in data:
        items.append(data.pop(one))
    return items


def _task_spec(item) -> TaskSpec:
    if isinstance(item, str):
        return TaskSpec(item)
    item = dict(item)
    try:
        name = item.pop("name")
    except KeyError:
        raise ConfigError("every task needs a name") from None
    return TaskSpec(name, item.pop("path", None), item.pop("label", None), item)


def _policy_spec(item) -> PolicySpec:
    if isinstance(item, str):
        return PolicySpec(item)
    item = dict(item)
    try:
        name = item.pop("name")
    except KeyError:
        raise ConfigError("every policy needs a name") from None
    return PolicySpec(name, item.pop("label", None), item)


def parse_seeds(value) -> list[int]:
    """Accept a list, a count, or an inclusive range string ``"a..b"``."""
    if isinstance(value, int):
        return list(range(value))
    if isinstance(value, str):
        lo, sep, hi = value.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
        except ValueError:
            raise ConfigError(f"bad seed range {value!r}") from None
    return [int(s) for s in value]


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    return RunConfig.from_dict(data)


@dataclass(frozen=True)
class StepRecord:
    seed: int
    t: int
    action: int
    reward: float
    cumulative_reward: float
    optimal_reward: float

    def row(self):
        return (self.seed, self.t, self.action, repr(self.reward),
                repr(self.cumulative_reward), repr(self.optimal_reward))


@dataclass
class RunSummary:
    algorithm: str
    task: str
    seeds: int
    mean_cum_reward: float
    stderr: float
    rank: int | None = None

    def row(self):
        return (self.algorithm, self.task, self.seeds, repr(self.mean_cum_reward),
                repr(self.stderr), "" if self.rank is None else self.rank)


def build_task(spec: TaskSpec, seed: int, horizon: int | None) -> BanditTask:
    return make_task(spec.name, spec.path, rng_stream(seed, "environment"), horizon, **spec.options)


def build_policy(spec: PolicySpec, task: BanditTask, seed: int):
    opts = dict(spec.options)
    if spec.name == "uniform":
        if opts:
            raise ConfigError(f"uniform policy takes no options, got {sorted(opts)}")
        return UniformPolicy(task.num_actions, rng_stream(seed, "baseline-sampling"))
    if spec.name == "linear_ts":
        return LinearTSPolicy(task.num_actions, task.context_dim, rng=rng_stream(seed, "baseline-sampling"),
                              **opts)
    mode = BERNOULLI if task.reward_kind == BERNOULLI else CONTINUOUS
    if opts.setdefault("mode", mode) != mode:
        raise ConfigError(f"{opts['mode']} GLCB cannot run on a {task.reward_kind} task")
    if mode == CONTINUOUS:
        opts.setdefault("r_min", task.reward_range[0])
        opts.setdefault("r_max", task.reward_range[1])
    config = GlcbConfig.from_mapping(opts)
    return GlcbAgent(task.num_actions, task.context_dim, config, rng_stream(seed, "gating-init"))


def run_episode(task_spec: TaskSpec, policy_spec: PolicySpec, seed: int,
                horizon: int | None = None) -> list[StepRecord]:
    """Fresh task and policy for ``seed``; select -> reward -> observe until the horizon."""
    task = build_task(task_spec, seed, horizon)
    policy = build_policy(policy_spec, task, seed)
    records = []
    total = 0.0
    for t in range(1, task.horizon + 1):
        x = task.next_context()
        a = policy.select_action(x)
        r = task.reward(a)
        policy.observe(x, a, r)
        total += r
        records.append(StepRecord(seed, t, a, r, total, task.optimal_reward()))
    return records


def write_steps(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEP_COLUMNS)
        w.writerows(r.row() for r in records)


def read_steps(path: Path) -> list[StepRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != STEP_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        return [StepRecord(int(s), int(t), int(a), float(r), float(c), float(o))
                for s, t, a, r, c, o in reader]


def step_path(out_dir, task_key: str, policy_key: str, seed: int) -> Path:
    return Path(out_dir) / task_key / policy_key / f"seed_{seed}.csv"


def _job(args):
    task_spec, policy_spec, seed, horizon, out_dir = args
    records = run_episode(task_spec, policy_spec, seed, horizon)
    path = step_path(out_dir, task_spec.key, policy_spec.key, seed)
    write_steps(path, records)
    return str(path)


def run(config: RunConfig) -> Path:
    """Run every (task, policy, seed) and write step logs plus ``summary.csv``."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    jobs = [(t, p, s, config.horizon, str(out))
            for t in config.tasks for p in config.policies for s in config.seeds]
    log.info("running %d episodes with %d worker(s)", len(jobs), config.jobs)
    if config.jobs == 1:
        for j in jobs:
            _job(j)
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            list(pool.map(_job, jobs))
    summarize(out)
    return out


def mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values to summarise")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def rank_table(summaries: list[RunSummary]):
    """Per-task competition ranks (ties share the smaller rank, the next rank skips)
    and the mean rank per algorithm.

    Fills ``rank`` on each summary and returns ``{algorithm: mean_rank}``.
    """
    seen = set()
    for s in summaries:
        if (s.algorithm, s.task) in seen:
            raise ValueError(f"duplicate result for {s.algorithm} on {s.task}")
        seen.add((s.algorithm, s.task))
    by_task: dict[str, list[RunSummary]] = {}
    for s in summaries:
        by_task.setdefault(s.task, []).append(s)
    for group in by_task.values():
        for s in group:
            s.rank = 1 + sum(o.mean_cum_reward > s.mean_cum_reward for o in group)
    ranks: dict[str, list[int]] = {}
    for s in summaries:
        ranks.setdefault(s.algorithm, []).append(s.rank)
    return {alg: float(np.mean(r)) for alg, r in ranks.items()}


def summarize(run_dir) -> list[RunSummary]:
    """Aggregate final cumulative rewards per (task, policy) and write summary/regret CSVs."""
    run_dir = Path(run_dir)
    manifest = run_dir / "run.json"
    if not manifest.is_file():
        raise FileNotFoundError(f"no run.json in {run_dir}")
    config = RunConfig.from_dict(json.loads(manifest.read_text()))
    summaries = []
    for task in config.tasks:
        for policy in config.policies:
            finals = []
            curves = []
            for seed in config.seeds:
                path = step_path(run_dir, task.key, policy.key, seed)
                if not path.is_file():
                    raise FileNotFoundError(f"missing step file {path}")
                records = read_steps(path)
                if not records:
                    raise ValueError(f"empty step file {path}")
                finals.append(records[-1].cumulative_reward)
                curves.append(np.cumsum([r.optimal_reward - r.reward for r in records]))
            mean, se = mean_stderr(finals)
            summaries.append(RunSummary(policy.key, task.key, len(finals), mean, se))
            n = min(len(c) for c in curves)
            write_regret(run_dir / task.key / policy.key / "regret.csv",
                         np.mean([c[:n] for c in curves], axis=0))
    rank_table(summaries)
    write_summary(run_dir / "summary.csv", summaries)
    return summaries


def write_regret(path: Path, curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGRET_COLUMNS)
        w.writerows((t, repr(float(v))) for t, v in enumerate(curve, start=1))


def write_summary(path: Path, summaries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(s.row() for s in summaries)


def read_summary(path) -> list[RunSummary]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [RunSummary(r["algorithm"], r["task"], int(r["seeds"]), float(r["mean_cum_reward"]),
                           float(r["stderr"]), int(r["rank"]) if r["rank"] else None) for r in reader]
