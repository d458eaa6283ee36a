"""Acceptance suite: ten criteria, one PASS/FAIL line each.

Criteria 6-10 share desk-scale runs (configs/desk_v1.cfg) that take roughly half
an hour on a single core. The lines are collected and printed again in the
terminal summary.
"""

import glob
import math
import os
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from dgcrl import nav_env
from dgcrl.baselines import run_naive
from dgcrl.bounds import sample_complexity, total_regret_bound
from dgcrl.config import parse_config
from dgcrl.experiment import DEMO_POOL_FILE, TASKS_FILE, MethodResult, format_csv, run_experiment
from dgcrl.metrics import forgetting, forward_transfer, iqm
from dgcrl.numerics import Mlp, mlp_forward, mlp_gradients
from dgcrl.report import audit_curriculum_log, load_logs
from dgcrl.rng import Rng
from dgcrl.td3 import Td3Agent, Td3Config

DESK = Path(__file__).resolve().parents[1] / "configs" / "desk_v1.cfg"
METHODS = ("dgcrl", "naive", "itr", "etr")


# ---------------------------------------------------------------- helpers

def desk_cfg(**overrides):
    cfg = parse_config(DESK)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


def run_desk(out, methods=METHODS, **overrides) -> float:
    t0 = time.perf_counter()
    for method in methods:
        run_experiment(desk_cfg(method=method, **overrides), str(out))
    return time.perf_counter() - t0


def final_matrix(seed_logs):
    """seeds x tasks matrix of final-evaluation returns."""
    return np.array([[s.final[t] for t in s.task_ids()] for s in seed_logs])


def grad_rel_error(a, n):
    return np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12)


@pytest.fixture(scope="module")
def audit_dirs():
    return []


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory, audit_dirs):
    out = tmp_path_factory.mktemp("desk")
    seconds = run_desk(out)
    audit_dirs.append(out)
    return out, seconds


@pytest.fixture(scope="module")
def sensitivity_run(tmp_path_factory, desk_run, audit_dirs):
    # same task set and bootstrap pool, only the retained fraction differs
    out = tmp_path_factory.mktemp("desk_fraction02")
    for name in (TASKS_FILE, DEMO_POOL_FILE):
        shutil.copy(desk_run[0] / name, out / name)
    run_desk(out, ("dgcrl",), demo_fraction=0.2)
    audit_dirs.append(out)
    return out


@pytest.fixture(scope="module")
def rerun(tmp_path_factory, desk_run, audit_dirs):
    out = tmp_path_factory.mktemp("desk_rerun")
    run_desk(out)
    audit_dirs.append(out)
    return out


# ---------------------------------------------------------------- criteria

def test_criterion_01_gradients(criterion):
    t0 = time.perf_counter()
    stream = Rng(2024).stream("init")
    worst = 0.0
    for _ in range(50):
        n_layers = stream.integers(3) + 1
        sizes = [stream.integers(32) + 1 for _ in range(n_layers + 1)]
        act = "tanh" if stream.uniform() < 0.5 else "identity"
        net = Mlp.init(sizes, stream, act)
        x = stream.uniform(-1, 1, size=(4, sizes[0]))
        target = stream.uniform(-1, 1, size=(4, sizes[-1]))

        def loss(y):
            d = y - target
            return float(np.sum(d * d)), 2 * d

        _, analytic = mlp_gradients(net, x, loss)
        for p, g in zip(net.params(), analytic):
            numeric = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                orig = p[idx]
                p[idx] = orig + 1e-6
                up = loss(mlp_forward(net, x))[0]
                p[idx] = orig - 1e-6
                down = loss(mlp_forward(net, x))[0]
                p[idx] = orig
                numeric[idx] = (up - down) / 2e-6
            worst = max(worst, grad_rel_error(g, numeric))
    seconds = time.perf_counter() - t0
    criterion(1, worst < 1e-4 and seconds < 10,
              f"50 random MLPs, worst relative error {worst:.2e} (< 1e-4), {seconds:.1f}s (< 10s)")


@pytest.mark.slow
def test_criterion_02_td3_sanity(criterion, tmp_path_factory, audit_dirs):
    task = nav_env.sample_task(Rng(0).stream("task-gen"), "V1", 0)
    stationary = -100 * math.dist(task.start, task.goal) ** 2
    out = tmp_path_factory.mktemp("td3_sanity")
    audit_dirs.append(out)
    best, times = [], []
    for seed in (0, 1, 2):
        t0 = time.perf_counter()
        logs = run_naive([task], Td3Agent(Td3Config(), Rng(seed)), 100)
        times.append(time.perf_counter() - t0)
        best.append(max(logs[0].eval_returns))
        (out / f"naive_seed{seed}.csv").write_text(
            format_csv(MethodResult("naive", seed, logs).rows([task.task_id])))
    ok = all(b > stationary for b in best) and max(times) < 180
    criterion(2, ok, f"best eval returns {[round(b, 3) for b in best]} vs stationary "
                     f"{stationary:.3f}, slowest seed {max(times):.0f}s (< 180s)")


def test_criterion_03_environment(criterion):
    at_goal = nav_env.NavTask("V1", (0.1, 0.1), (0.4, 0.4))
    _, r_goal, done = nav_env.step(at_goal, nav_env.NavState((0.4, 0.4)), (0.0, 0.0))
    puddled = nav_env.NavTask("V2", (0.1, 0.1), (0.9, 0.9), (nav_env.Puddle((0.55, 0.5), 0.1),))
    bounced, _, _ = nav_env.step(puddled, nav_env.NavState((0.5, 0.5)), (0.05, 0.0))
    corner = nav_env.NavTask("V1", (0.0, 0.0), (1.0, 1.0))
    _, r_hand, _ = nav_env.step(corner, nav_env.NavState((0.0, 0.0)), (0.1, 0.1))
    examples = (r_goal == 0.0 and done and bounced.position == (0.5, 0.5)
                and abs(r_hand - (-1.634142)) <= 1e-6)

    stream = Rng(77).stream("task-gen")
    entered = 0
    for k in range(10_000):
        task = nav_env.sample_task(stream, "V3" if k % 2 else "V2", k)
        state = nav_env.reset(task)
        actions = stream.uniform(-0.1, 0.1, size=(nav_env.HORIZON, 2))
        for a in actions:
            state, _, done = nav_env.step(task, state, a)
            entered += task.in_puddle(state.position)
            if done:
                break
    criterion(3, examples and entered == 0,
              f"step examples {'exact' if examples else 'WRONG'} (reward {r_hand:.6f}); "
              f"puddle entries over 10^4 random rollouts: {entered}")


def test_criterion_04_bounds(criterion):
    trivial = total_regret_bound(1, 1, 1, 1) == 2 and sample_complexity(1, 1, 1, 1) == 8
    stream = Rng(4).stream("x")
    worst = 0.0
    for _ in range(100):
        C = stream.uniform(0.1, 10)
        H = float(stream.integers(500) + 1)
        K = float(stream.integers(200) + 1)
        d = stream.uniform(1e-3, 100)
        T = sample_complexity(C, H, K, d)
        worst = max(worst, abs(total_regret_bound(C, H, K, T) / K - d) / d)
    criterion(4, trivial and worst < 1e-9,
              f"bound(1,1,1,1)=2 and complexity(1,1,1,1)=8 {'exact' if trivial else 'WRONG'}; "
              f"worst inversion error {worst:.1e} (< 1e-9 relative)")


def test_criterion_05_metrics(criterion):
    stream = Rng(5).stream("x")
    self_zero = True
    for _ in range(20):
        curves = [stream.uniform(-200, 0, size=stream.integers(100) + 1) for _ in range(10)]
        C = stream.uniform(0, 300)
        per_task, mean = forward_transfer(curves, curves, C)
        self_zero &= mean == 0 and all(v == 0 for v in per_task)
    hand = forward_transfer([[3.0], [1.0]], [[1.0], [1.0]], C=1.0)[1] == 0.5
    iqm_ok = iqm([1, 2, 3, 4]) == 2.5
    signs = (forgetting([-3.0], [-3.0])[1] == 0
             and forgetting([-10.0], [-15.0])[1] == 5
             and forgetting([-15.0], [-10.0])[1] < 0)
    criterion(5, self_zero and hand and iqm_ok and signs,
              f"FT(X,X)=0 on 20 sets: {self_zero}; hand FT=0.5: {hand}; "
              f"IQM(1,2,3,4)=2.5: {iqm_ok}; forgetting signs: {signs}")


@pytest.mark.slow
def test_criterion_06_ordering(criterion, desk_run):
    out, seconds = desk_run
    logs = load_logs(out)
    ap = {m: iqm(final_matrix(logs[m])) for m in METHODS}
    etr, itr = final_matrix(logs["etr"]), final_matrix(logs["itr"])
    superset = bool(np.all(etr >= itr))
    ok = ap["dgcrl"] > ap["naive"] and superset and ap["dgcrl"] >= ap["etr"] and seconds < 1200
    criterion(6, ok, f"IQM AP dgcrl {ap['dgcrl']:.3f} > naive {ap['naive']:.3f}; "
                     f"ETR >= ITR on every task: {superset}; dgcrl >= etr {ap['etr']:.3f}; "
                     f"{seconds / 60:.1f} min (< 20)")


@pytest.mark.slow
def test_criterion_07_forgetting(criterion, desk_run):
    logs = load_logs(desk_run[0])["dgcrl"]
    means = [forgetting([s.end_of_task(t) for t in s.task_ids()],
                        [s.final[t] for t in s.task_ids()])[1] for s in logs]
    mean = float(np.mean(means))
    criterion(7, mean <= 0, f"DGCRL mean forgetting {mean:.4f} (<= 0); per seed "
                            f"{[round(m, 4) for m in means]}")


@pytest.mark.slow
def test_criterion_08_sensitivity(criterion, desk_run, sensitivity_run):
    full = iqm(final_matrix(load_logs(desk_run[0])["dgcrl"]))
    part = iqm(final_matrix(load_logs(sensitivity_run)["dgcrl"]))
    criterion(8, full >= part, f"IQM AP with all demos {full:.3f} >= with 20% {part:.3f}")


@pytest.mark.slow
def test_criterion_10_determinism(criterion, desk_run, rerun):
    names = sorted(os.path.basename(p) for p in glob.glob(str(desk_run[0] / "*.csv")))
    expected = [f"{m}_seed{s}.csv" for m in METHODS for s in desk_cfg().seeds]
    differing = [n for n in names if (desk_run[0] / n).read_bytes() != (rerun / n).read_bytes()]
    ok = sorted(expected) == names and not differing
    criterion(10, ok, f"{len(names)} CSV logs compared byte for byte, differing: {differing or 'none'}")


@pytest.mark.slow
def test_criterion_09_curriculum_audit(criterion, desk_run, sensitivity_run, rerun, audit_dirs):
    delta_h = desk_cfg().curriculum().delta_h
    paths = sorted(p for d in audit_dirs for p in glob.glob(str(d / "*.csv")))
    problems = [msg for p in paths for msg in audit_curriculum_log(p, delta_h)]
    inserted = 0
    for p in paths:
        with open(p) as fh:
            inserted += sum(1 for ln in fh if ",eval," in ln and ln.rstrip().endswith(",1"))
    criterion(9, not problems and inserted > 0,
              f"{len(paths)} logs audited, {inserted} insertions, "
              f"violations: {problems[:3] if problems else 'none'}")
