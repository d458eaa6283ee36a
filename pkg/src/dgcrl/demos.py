"""Self-evolving store of open-loop demonstrations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import nav_env
from .numerics import ContractError
from .rng import Rng
from .td3 import Td3Agent, Td3Config

Action = tuple[float, float]


class NoDemonstrations(LookupError):
    pass


@dataclass
class Demonstration:
    actions: list[Action]
    recorded_return: float
    source_task: int = -1
    created_at_episode: int = 0

    def __post_init__(self):
        if not self.actions:
            raise ContractError("a demonstration needs at least one action")
        if len(self.actions) > nav_env.HORIZON:
            raise ContractError(f"demonstration longer than the horizon ({len(self.actions)})")
        self.actions = [nav_env.clip_action(a) for a in self.actions]


@dataclass
class Repository:
    demos: list[Demonstration] = field(default_factory=list)
    # (task_id, episode, return) per insertion
    log: list[tuple[int, int, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.demos)

    def append(self, demo: Demonstration):
        self.demos.append(demo)
        self.log.append((demo.source_task, demo.created_at_episode, demo.recorded_return))

    def copy(self) -> "Repository":
        return Repository(list(self.demos), list(self.log))


@dataclass
class ThresholdSchedule:
    """Linear interpolation of the threshold multiplier from beta_start to 1."""

    base_return: float
    beta_start: float
    budget: int

    @classmethod
    def for_return(cls, base_return, budget, beta_pos=0.9, beta_neg=1.3):
        return cls(base_return, beta_pos if base_return >= 0 else beta_neg, budget)


def scaled_threshold(schedule: ThresholdSchedule, episode_idx: int) -> float:
    if not 0 <= episode_idx <= schedule.budget:
        raise ContractError(f"episode index {episode_idx} outside [0, {schedule.budget}]")
    if episode_idx == schedule.budget:
        return schedule.base_return
    beta = schedule.beta_start + (1.0 - schedule.beta_start) * episode_idx / schedule.budget
    return beta * schedule.base_return


def select_best(repo: Repository, task: nav_env.NavTask) -> tuple[int, float]:
    """Index and replay return of the best demonstration on `task` (lowest index on ties)."""
    if not repo.demos:
        raise NoDemonstrations("no demonstrations in repository")
    best_i, best_r = 0, -math.inf
    for i, demo in enumerate(repo.demos):
        r = nav_env.replay(task, demo.actions)
        if r > best_r:
            best_i, best_r = i, r
    return best_i, best_r


def add_if_better(repo: Repository, actions, eval_return, scaled_thr, task_id, episode) -> bool:
    if not eval_return > scaled_thr:
        return False
    repo.append(Demonstration(list(actions), float(eval_return), task_id, episode))
    return True


def bootstrap_demonstrations(
    rng: Rng,
    count: int,
    variant: str,
    td3_config: Td3Config,
    episodes: int = 100,
) -> tuple[list[Demonstration], list[nav_env.NavTask]]:
    """Train one fresh TD3 agent per generator task and keep its best episode.

    Generator tasks come from the "bootstrap" substream; each agent gets its own
    derived generator. Both training and noiseless evaluation episodes are
    candidates. Returns the demonstrations and their generator tasks.
    """
    from .curriculum import train_plain_episode  # curriculum imports this module

    if count < 1:
        raise ContractError("count must be >= 1")
    stream = rng.stream("bootstrap")
    demos, tasks = [], []
    for k in range(count):
        task = nav_env.sample_task(stream, variant, task_id=-(k + 1))
        agent = Td3Agent(td3_config, rng.child(k))
        best_actions, best_ret = None, -math.inf
        for _ in range(episodes):
            for actions, ret in train_plain_episode(agent, task):
                if ret > best_ret:
                    best_actions, best_ret = actions, ret
        demos.append(Demonstration(best_actions, best_ret, -1, 0))
        tasks.append(task)
    return demos, tasks


def subsample(demos: Sequence[Demonstration], fraction: float, rng: Rng) -> Repository:
    """Keep ceil(fraction * n) demonstrations drawn without replacement (original order kept)."""
    if not 0.0 < fraction <= 1.0:
        raise ContractError(f"fraction must be in (0, 1], got {fraction}")
    k = math.ceil(round(fraction * len(demos), 9))
    idx = rng.stream("subsample").sample_without_replacement(len(demos), k)
    repo = Repository()
    for i in idx:
        repo.append(demos[i])
    return repo


def init_repository(rng, count, variant, fraction, td3_config, episodes=100) -> Repository:
    if not 0.0 < fraction <= 1.0:
        raise ContractError(f"fraction must be in (0, 1], got {fraction}")
    demos, _ = bootstrap_demonstrations(rng, count, variant, td3_config, episodes)
    return subsample(demos, fraction, rng)


# Repository file: first line is the demo count; each demo is a line
# "source_task recorded_return created_at n_actions" followed by n_actions
# lines "ax ay" with 6 fractional digits.
def write_repository(path, repo: Repository):
    with open(path, "w") as fh:
        fh.write(f"{len(repo)}\n")
        for d in repo.demos:
            fh.write(f"{d.source_task} {d.recorded_return!r} {d.created_at_episode} {len(d.actions)}\n")
            for ax, ay in d.actions:
                fh.write(f"{ax:.6f} {ay:.6f}\n")


def read_repository(path) -> Repository:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    count = int(lines[0])
    pos = 1
    repo = Repository()
    for _ in range(count):
        src, ret, created, n = lines[pos].split()
        pos += 1
        actions = []
        for ln in lines[pos:pos + int(n)]:
            ax, ay = ln.split()
            actions.append((float(ax), float(ay)))
        pos += int(n)
        repo.append(Demonstration(actions, float(ret), int(src), int(created)))
    if pos != len(lines):
        raise ValueError(f"{path}: trailing content after {count} demonstrations")
    return repo
