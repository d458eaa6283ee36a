"""Closed-form regret bound and sample complexity for guided continual RL."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .numerics import ContractError


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ContractError(f"{name} must be strictly positive, got {value}")


def total_regret_bound(C: float, H: float, K: float, T: float) -> float:
    """C * H^(4/3) * (H + 1) * K^(4/3) * T^(-1/3)."""
    _check_positive(C=C, H=H, K=K, T=T)
    return float(C * H ** (4.0 / 3.0) * (H + 1) * K ** (4.0 / 3.0) / np.cbrt(T))


def sample_complexity(C: float, H: float, K: float, delta: float) -> float:
    """Training steps T at which the per-task average value loss bound equals delta."""
    _check_positive(C=C, H=H, K=K, delta=delta)
    return C**3 * H**4 * (H + 1) ** 3 * K / delta**3


def empirical_regret(
    episode_returns: Sequence[tuple[int, float]],
    best_return: Mapping[int, float],
) -> np.ndarray:
    """Cumulative sum of (best_i - r) over (task_id, return) pairs in sequence order."""
    shortfall = []
    for task_id, r in episode_returns:
        if task_id not in best_return:
            raise ContractError(f"no best-return estimate for task {task_id}")
        shortfall.append(best_return[task_id] - r)
    return np.cumsum(np.asarray(shortfall, dtype=np.float64))
