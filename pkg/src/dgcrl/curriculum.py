"""Guide-then-explore rollouts and the shrinking guide-horizon loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import nav_env
from .demos import Repository, ThresholdSchedule, add_if_better, scaled_threshold, select_best
from .nav_env import NavTask, Transition
from .numerics import ContractError
from .td3 import Td3Agent

DEFAULT_DELTA_H = {"V1": 3, "V2": 1, "V3": 5}


@dataclass
class CurriculumConfig:
    horizon: int = nav_env.HORIZON
    delta_h: int = 3
    episode_budget: int = 100
    eval_noise: float = 0.0
    beta_pos: float = 0.9
    beta_neg: float = 1.3

    def validate(self):
        if not 1 <= self.delta_h <= self.horizon:
            raise ContractError(f"delta_h must be in [1, {self.horizon}], got {self.delta_h}")
        if self.episode_budget < 1:
            raise ContractError("episode_budget must be >= 1")
        return self


@dataclass
class CurriculumState:
    h: int
    iteration: int = 0
    demos_added: int = 0


@dataclass
class IterationRecord:
    iteration: int
    train_return: float
    eval_return: float
    h: int
    threshold: float
    inserted: bool


@dataclass
class TaskLog:
    task_id: int
    demo_index: int = -1
    threshold_return: float = float("nan")
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def eval_returns(self) -> list[float]:
        return [r.eval_return for r in self.records]


def mixed_rollout(
    task: NavTask,
    guide_actions: Sequence,
    agent: Td3Agent,
    h: int,
    train_mode: bool,
    horizon: int = nav_env.HORIZON,
    eval_noise: float = 0.0,
) -> tuple[list[Transition], float]:
    """First min(h, len(guide)) steps replay the guide; the agent acts afterwards.

    In train mode the agent explores with its configured action noise and every
    transition (guide phase included) goes into its replay buffer.
    """
    if not 0 <= h <= horizon:
        raise ContractError(f"guide horizon {h} outside [0, {horizon}]")
    n_guide = min(h, len(guide_actions))
    noise = agent.config.action_noise if train_mode else eval_noise
    state = nav_env.reset(task)
    traj: list[Transition] = []
    total = 0.0
    while not state.done:
        t = state.step_count
        if t < n_guide:
            action = nav_env.clip_action(guide_actions[t])
        else:
            action = nav_env.clip_action(agent.select_action(state.position, noise))
        nxt, r, _ = nav_env.step(task, state, action)
        tr = Transition(state.position, action, r, nxt.position,
                        nav_env.reached_goal(task, nxt.position))
        if train_mode:
            agent.store(tr)
        traj.append(tr)
        total += r
        state = nxt
    return traj, total


def train_updates(agent: Td3Agent, n: int):
    """One gradient step per environment step, skipped while the buffer is short of a batch."""
    if agent.buffer.size < agent.config.batch_size:
        return
    for _ in range(n):
        agent.train_step()


def run_episode(agent, task, guide=(), h=0, horizon=nav_env.HORIZON, eval_noise=0.0):
    """Train rollout, its gradient steps, then one evaluation rollout."""
    train_traj, train_ret = mixed_rollout(task, guide, agent, h, True, horizon)
    train_updates(agent, len(train_traj))
    eval_traj, eval_ret = mixed_rollout(task, guide, agent, h, False, horizon, eval_noise)
    return train_traj, train_ret, eval_traj, eval_ret


def train_plain_episode(agent: Td3Agent, task: NavTask):
    """Unguided episode; yields (actions, return) for the train and eval rollouts."""
    train_traj, train_ret, eval_traj, eval_ret = run_episode(agent, task)
    return [([t.action for t in train_traj], train_ret),
            ([t.action for t in eval_traj], eval_ret)]


def run_task(agent: Td3Agent, task: NavTask, repo: Repository, cfg: CurriculumConfig) -> TaskLog:
    cfg.validate()
    demo_index, thr = select_best(repo, task)
    guide = repo.demos[demo_index].actions
    schedule = ThresholdSchedule.for_return(thr, cfg.episode_budget, cfg.beta_pos, cfg.beta_neg)
    state = CurriculumState(h=cfg.horizon)
    log = TaskLog(task.task_id, demo_index, thr)
    while state.h >= 0 and state.iteration < cfg.episode_budget:
        _, train_ret, eval_traj, eval_ret = run_episode(
            agent, task, guide, state.h, cfg.horizon, cfg.eval_noise)
        scaled = scaled_threshold(schedule, state.iteration)
        inserted = add_if_better(repo, [t.action for t in eval_traj], eval_ret, scaled,
                                 task.task_id, state.iteration)
        log.records.append(IterationRecord(state.iteration, train_ret, eval_ret,
                                           state.h, scaled, inserted))
        if inserted:
            state.demos_added += 1
            state.h -= cfg.delta_h
        state.iteration += 1
    return log


def run_sequence(tasks, cfg, reset_mode, agent: Td3Agent, repo: Repository):
    """Reset the agent (and its buffer) at each task boundary, then run the curriculum.

    `repo` evolves in place across tasks.
    """
    if not tasks:
        raise ContractError("task list is empty")
    logs = []
    for task in tasks:
        agent.reset_components(reset_mode)
        logs.append(run_task(agent, task, repo, cfg))
    return repo, logs
