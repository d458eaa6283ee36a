"""2D point navigation with circular puddles (task families V1, V2, V3).

Positions live in the unit square. Actions are 2D velocities clipped to
+-ACTION_BOUND and quantised to 1e-6 so that recorded action sequences survive
a round trip through the 6-decimal text formats bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .numerics import ContractError
from .rng import Stream

ACTION_BOUND = 0.1
HORIZON = 100
GOAL_TOLERANCE = 0.01
CONTROL_COST = 0.1
MIN_SEPARATION = 0.2
PUDDLE_RADII = (0.1, 0.15, 0.2)
DEFAULT_START = (0.1, 0.1)
DEFAULT_GOAL = (0.9, 0.9)
VARIANTS = ("V1", "V2", "V3")
MAX_REJECTIONS = 10_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Puddle:
    center: tuple[float, float]
    radius: float

    def contains(self, p) -> bool:
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) < self.radius


@dataclass(frozen=True)
class NavTask:
    variant: str
    start: tuple[float, float]
    goal: tuple[float, float]
    puddles: tuple[Puddle, ...] = ()
    task_id: int = 0

    def validate(self):
        if self.variant not in VARIANTS:
            raise ContractError(f"unknown variant {self.variant!r}")
        if self.start == self.goal:
            raise ContractError(f"task {self.task_id}: start equals goal")
        for pud in self.puddles:
            if pud.radius <= 0:
                raise ContractError(f"task {self.task_id}: non-positive puddle radius")
            if pud.contains(self.start) or pud.contains(self.goal):
                raise ContractError(f"task {self.task_id}: start or goal inside a puddle")

    def in_puddle(self, p) -> bool:
        return any(pud.contains(p) for pud in self.puddles)


@dataclass(frozen=True)
class NavState:
    position: tuple[float, float]
    step_count: int = 0
    done: bool = False


@dataclass
class Transition:
    state: tuple[float, float]
    action: tuple[float, float]
    reward: float
    next_state: tuple[float, float]
    # goal reached; hitting the time limit is a truncation, not a terminal
    done: bool


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def clip_action(action) -> tuple[float, float]:
    return (
        round(_clip(float(action[0]), -ACTION_BOUND, ACTION_BOUND), 6),
        round(_clip(float(action[1]), -ACTION_BOUND, ACTION_BOUND), 6),
    )


def reset(task: NavTask) -> NavState:
    task.validate()
    return NavState(task.start, 0, False)


def step(task: NavTask, state: NavState, action) -> tuple[NavState, float, bool]:
    if state.done or state.step_count >= HORIZON:
        raise ContractError("step called on a finished episode")
    ax, ay = clip_action(action)
    x, y = state.position
    cand = (_clip(x + ax, 0.0, 1.0), _clip(y + ay, 0.0, 1.0))
    nxt = state.position if task.in_puddle(cand) else cand
    dx = nxt[0] - task.goal[0]
    dy = nxt[1] - task.goal[1]
    reward = -(dx * dx + dy * dy) - CONTROL_COST * math.sqrt(ax * ax + ay * ay)
    count = state.step_count + 1
    done = math.hypot(dx, dy) <= GOAL_TOLERANCE or count == HORIZON
    return NavState(nxt, count, done), reward, done


def reached_goal(task: NavTask, position) -> bool:
    return math.hypot(position[0] - task.goal[0], position[1] - task.goal[1]) <= GOAL_TOLERANCE


def rollout(
    task: NavTask,
    policy: Callable[[tuple[float, float]], Sequence[float]],
    max_steps: int = HORIZON,
) -> tuple[list[Transition], float]:
    """Run one episode; returns the trajectory and its undiscounted return."""
    state = reset(task)
    traj: list[Transition] = []
    total = 0.0
    for _ in range(max_steps):
        action = clip_action(policy(state.position))
        nxt, r, done = step(task, state, action)
        traj.append(Transition(state.position, action, r, nxt.position,
                               reached_goal(task, nxt.position)))
        total += r
        state = nxt
        if done:
            break
    return traj, total


def replay(task: NavTask, actions: Sequence[Sequence[float]]) -> float:
    """Open-loop return of an action sequence.

    Actions past termination are ignored; an exhausted sequence is padded with
    zero actions until the episode ends.
    """
    state = reset(task)
    total = 0.0
    n = len(actions)
    while not state.done:
        t = state.step_count
        state, r, _ = step(task, state, actions[t] if t < n else (0.0, 0.0))
        total += r
    return total


def _point(stream: Stream) -> tuple[float, float]:
    return (round(stream.uniform(), 6), round(stream.uniform(), 6))


def sample_task(
    stream: Stream,
    variant: str,
    task_id: int = 0,
    start=DEFAULT_START,
    default_goal=DEFAULT_GOAL,
) -> NavTask:
    """Draw one task. Coordinates are rounded to 6 decimals (the file precision)."""
    if variant not in VARIANTS:
        raise ContractError(f"unknown variant {variant!r}")
    start = tuple(start)
    for _ in range(MAX_REJECTIONS):
        goal = _point(stream) if variant in ("V1", "V3") else tuple(default_goal)
        puddles: tuple[Puddle, ...] = ()
        if variant in ("V2", "V3"):
            puddles = tuple(Puddle(_point(stream), r) for r in PUDDLE_RADII)
        if math.dist(start, goal) <= MIN_SEPARATION:
            continue
        if any(p.contains(start) or p.contains(goal) for p in puddles):
            continue
        return NavTask(variant, start, goal, puddles, task_id)
    raise SamplingError(f"no valid {variant} task after {MAX_REJECTIONS} attempts")


def sample_tasks(stream: Stream, variant: str, n: int) -> list[NavTask]:
    return [sample_task(stream, variant, task_id=i) for i in range(n)]


def format_task(task: NavTask) -> str:
    parts = [str(task.task_id), task.variant,
             f"{task.start[0]:.6f}", f"{task.start[1]:.6f}",
             f"{task.goal[0]:.6f}", f"{task.goal[1]:.6f}"]
    for p in task.puddles:
        parts += [f"{p.center[0]:.6f}", f"{p.center[1]:.6f}", f"{p.radius:.6f}"]
    return " ".join(parts)


def parse_task(line: str) -> NavTask:
    tok = line.split()
    if len(tok) not in (6, 15):
        raise ValueError(f"task line needs 6 or 15 fields, got {len(tok)}: {line!r}")
    vals = [float(t) for t in tok[2:]]
    puddles = tuple(
        Puddle((vals[i], vals[i + 1]), vals[i + 2]) for i in range(4, len(vals), 3)
    )
    task = NavTask(tok[1], (vals[0], vals[1]), (vals[2], vals[3]), puddles, int(tok[0]))
    task.validate()
    return task


def write_tasks(path, tasks: Sequence[NavTask]):
    with open(path, "w") as fh:
        for t in tasks:
            fh.write(format_task(t) + "\n")


def read_tasks(path) -> list[NavTask]:
    with open(path) as fh:
        return [parse_task(line) for line in fh if line.strip() and not line.startswith("#")]
