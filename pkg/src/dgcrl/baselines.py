"""Naive sequential TD3 and the open-loop trajectory-replay baselines."""

from __future__ import annotations

from . import nav_env
from .curriculum import IterationRecord, TaskLog, run_episode
from .demos import Repository, select_best
from .numerics import ContractError
from .td3 import Td3Agent

BASELINES = ("naive", "itr", "etr")


def train_single_task(agent: Td3Agent, task, episodes: int) -> TaskLog:
    log = TaskLog(task.task_id)
    for ep in range(episodes):
        _, train_ret, _, eval_ret = run_episode(agent, task)
        log.records.append(IterationRecord(ep, train_ret, eval_ret, 0, float("nan"), False))
    return log


def run_naive(tasks, agent: Td3Agent, episodes: int) -> list[TaskLog]:
    """One agent trained on every task in turn; nothing is reset between tasks."""
    if not tasks:
        raise ContractError("task list is empty")
    return [train_single_task(agent, task, episodes) for task in tasks]


def policy_return(agent: Td3Agent, task) -> float:
    """Noiseless return of the agent's current policy."""
    _, ret = nav_env.rollout(task, agent.act)
    return ret


def replay_scores(tasks, repo: Repository) -> list[float]:
    """Best open-loop replay return per task; never modifies `repo`."""
    if not repo.demos:
        raise ContractError("repository is empty")
    return [select_best(repo, task)[1] for task in tasks]


def run_itr(tasks, initial_repo: Repository) -> list[float]:
    return replay_scores(tasks, initial_repo)


def run_etr(tasks, final_repo: Repository) -> list[float]:
    return replay_scores(tasks, final_repo)
