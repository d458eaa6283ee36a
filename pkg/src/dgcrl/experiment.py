"""Seeded experiment runs producing the shared CSV log schema."""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field

from . import nav_env
from .baselines import policy_return, run_itr, run_etr, run_naive, train_single_task
from .config import ExperimentConfig
from .curriculum import TaskLog, run_sequence
from .demos import (
    Demonstration,
    Repository,
    bootstrap_demonstrations,
    read_repository,
    select_best,
    subsample,
    write_repository,
)
from .rng import Rng
from .td3 import Td3Agent, save_agent

log = logging.getLogger(__name__)

CSV_HEADER = ("seed", "task_id", "episode", "phase", "return", "h", "threshold", "inserted")
FINAL_EPISODE = -1

TASKS_FILE = "tasks.txt"
DEMO_POOL_FILE = "demos_pool.txt"
DEMO_FILE = "demos_initial.txt"


@dataclass
class MethodResult:
    method: str
    seed: int
    logs: list[TaskLog] = field(default_factory=list)
    final: list[float] = field(default_factory=list)
    final_repo: Repository | None = None
    agent: Td3Agent | None = None

    def rows(self, task_ids) -> list[tuple]:
        rows = []
        for tl in self.logs:
            for rec in tl.records:
                thr = "" if rec.threshold != rec.threshold else repr(rec.threshold)
                rows.append((self.seed, tl.task_id, rec.iteration, "train",
                             repr(rec.train_return), rec.h, thr, int(rec.inserted)))
                rows.append((self.seed, tl.task_id, rec.iteration, "eval",
                             repr(rec.eval_return), rec.h, thr, int(rec.inserted)))
        for tid, ret in zip(task_ids, self.final):
            rows.append((self.seed, tid, FINAL_EPISODE, "final_eval", repr(ret), "", "", 0))
        return rows


def generate_tasks(cfg: ExperimentConfig) -> list[nav_env.NavTask]:
    return nav_env.sample_tasks(Rng(cfg.task_seed).stream("task-gen"), cfg.variant, cfg.num_tasks)


def generate_demo_pool(cfg: ExperimentConfig) -> list[Demonstration]:
    demos, _ = bootstrap_demonstrations(
        Rng(cfg.demo_seed), cfg.demo_count, cfg.variant, cfg.td3(), cfg.bootstrap_episodes)
    return demos


def initial_repository(cfg: ExperimentConfig, pool) -> Repository:
    return subsample(pool, cfg.demo_fraction, Rng(cfg.demo_seed))


def run_dgcrl(cfg, seed, tasks, initial_repo: Repository) -> MethodResult:
    agent = Td3Agent(cfg.td3(), Rng(seed))
    repo = initial_repo.copy()
    _, logs = run_sequence(tasks, cfg.curriculum(), cfg.reset_mode, agent, repo)
    final = [select_best(repo, t)[1] for t in tasks]
    return MethodResult("dgcrl", seed, logs, final, repo, agent)


def run_naive_method(cfg, seed, tasks) -> MethodResult:
    agent = Td3Agent(cfg.td3(), Rng(seed))
    logs = run_naive(tasks, agent, cfg.episodes_per_task)
    final = [policy_return(agent, t) for t in tasks]
    return MethodResult("naive", seed, logs, final, None, agent)


def run_scratch(cfg, seed, tasks) -> MethodResult:
    """Reference curves: a fresh agent per task, trained on that task alone."""
    logs, final = [], []
    for k, task in enumerate(tasks):
        agent = Td3Agent(cfg.td3(), Rng(seed).child(k))
        logs.append(train_single_task(agent, task, cfg.episodes_per_task))
        final.append(logs[-1].records[-1].eval_return)
    return MethodResult("scratch", seed, logs, final)


def run_method(cfg, method, seed, tasks, initial_repo=None, final_repo=None) -> MethodResult:
    if method == "dgcrl":
        return run_dgcrl(cfg, seed, tasks, initial_repo)
    if method == "naive":
        return run_naive_method(cfg, seed, tasks)
    if method == "scratch":
        return run_scratch(cfg, seed, tasks)
    if method == "itr":
        return MethodResult("itr", seed, [], run_itr(tasks, initial_repo))
    if method == "etr":
        if final_repo is None:
            final_repo = run_dgcrl(cfg, seed, tasks, initial_repo).final_repo
        return MethodResult("etr", seed, [], run_etr(tasks, final_repo), final_repo)
    raise ValueError(f"unknown method {method!r}")


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def csv_path(out_dir, method, seed):
    return os.path.join(out_dir, f"{method}_seed{seed}.csv")


def ensure_tasks(cfg, out_dir) -> list[nav_env.NavTask]:
    path = os.path.join(out_dir, TASKS_FILE)
    if not os.path.exists(path):
        nav_env.write_tasks(path, generate_tasks(cfg))
    return nav_env.read_tasks(path)


def ensure_demos(cfg, out_dir) -> Repository:
    path = os.path.join(out_dir, DEMO_FILE)
    if not os.path.exists(path):
        pool_path = os.path.join(out_dir, DEMO_POOL_FILE)
        if os.path.exists(pool_path):
            pool = read_repository(pool_path).demos
        else:
            log.info("training %d bootstrap agents", cfg.demo_count)
            pool = generate_demo_pool(cfg)
            write_repository(pool_path, Repository(pool))
        write_repository(path, initial_repository(cfg, pool))
    return read_repository(path)


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Run cfg.method for every seed; returns the CSV paths written."""
    os.makedirs(out_dir, exist_ok=True)
    tasks = ensure_tasks(cfg, out_dir)
    repo = ensure_demos(cfg, out_dir) if cfg.method in ("dgcrl", "itr", "etr") else None
    task_ids = [t.task_id for t in tasks]
    written = []
    for seed in cfg.seeds:
        final_repo = None
        if cfg.method == "etr":
            fr = os.path.join(out_dir, f"repo_final_seed{seed}.txt")
            if os.path.exists(fr):
                final_repo = read_repository(fr)
        log.info("running %s seed %d on %d tasks", cfg.method, seed, len(tasks))
        result = run_method(cfg, cfg.method, seed, tasks, repo, final_repo)
        if cfg.method in ("dgcrl", "etr") and result.final_repo is not None:
            write_repository(os.path.join(out_dir, f"repo_final_seed{seed}.txt"), result.final_repo)
        if result.agent is not None:
            save_agent(os.path.join(out_dir, f"agent_{cfg.method}_seed{seed}.bin"), result.agent)
        path = csv_path(out_dir, cfg.method, seed)
        with open(path, "w") as fh:
            fh.write(format_csv(result.rows(task_ids)))
        written.append(path)
    return written
