"""Continual-RL metrics and robust aggregation.

Performance curves are returns; `C` offsets them so areas stay non-negative.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .numerics import ContractError
from .rng import Stream


class DegenerateNormalization(ZeroDivisionError):
    pass


def average_performance(final_returns: Sequence[float]) -> float:
    """Mean over tasks of the end-of-sequence performance."""
    vals = list(final_returns)
    if not vals:
        raise ContractError("no task entries")
    if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in vals):
        raise ContractError("missing final performance for a task")
    return math.fsum(vals) / len(vals)


def auc(curve: Sequence[float], C: float = 0.0) -> float:
    """Normalised area under a per-episode curve (rectangle rule on a uniform grid)."""
    arr = np.asarray(curve, dtype=np.float64)
    if arr.size == 0:
        raise ContractError("empty curve")
    return float(np.mean(arr + C))


def forward_transfer(candidate_curves, reference_curves, C: float = 0.0):
    """Per-task and mean forward transfer.

    FT_i = (AUC_i - AUC_i^b) / (max(max_j AUC_j, AUC_i^b) - AUC_i^b).
    """
    if len(candidate_curves) != len(reference_curves):
        raise ContractError(
            f"{len(candidate_curves)} candidate curves vs {len(reference_curves)} references"
        )
    cand = [auc(c, C) for c in candidate_curves]
    ref = [auc(c, C) for c in reference_curves]
    top = max(cand)
    per_task = []
    for i, (a, b) in enumerate(zip(cand, ref)):
        num = a - b
        if num == 0.0:
            per_task.append(0.0)
            continue
        den = max(top, b) - b
        if den == 0.0:
            raise DegenerateNormalization(f"degenerate normalization for task {i}")
        per_task.append(num / den)
    return per_task, math.fsum(per_task) / len(per_task)


def forgetting(end_of_task: Sequence[float], final: Sequence[float]):
    """F_i = p_i(at end of its own training) - p_i(at end of the sequence)."""
    if len(end_of_task) != len(final):
        raise ContractError("snapshot counts differ")
    per_task = []
    for i, (a, b) in enumerate(zip(end_of_task, final)):
        if a is None or b is None:
            raise ContractError(f"missing snapshot for task {i}")
        per_task.append(a - b)
    return per_task, math.fsum(per_task) / len(per_task)


def pad_curves(curves: Sequence[Sequence[float]], length: int | None = None) -> np.ndarray:
    """Right-pad ragged curves with their last value."""
    if any(len(c) == 0 for c in curves):
        raise ContractError("cannot pad an empty curve")
    n = length or max(len(c) for c in curves)
    out = np.empty((len(curves), n))
    for i, c in enumerate(curves):
        c = list(c)[:n]
        out[i, : len(c)] = c
        out[i, len(c):] = c[-1]
    return out


def avg_return_per_episode(per_task_returns: Sequence[Sequence[float]]) -> np.ndarray:
    return pad_curves(per_task_returns).mean(axis=0)


def iqm(values) -> float:
    """Interquartile mean: drop floor(n/4) values from each end, average the rest."""
    arr = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = arr.size
    if n == 0:
        raise ContractError("iqm of empty input")
    k = n // 4
    return float(np.mean(arr[k:n - k]))


def stratified_bootstrap_ci(
    values,
    stream: Stream,
    confidence: float = 0.95,
    resamples: int = 2000,
    statistic=iqm,
) -> tuple[float, float]:
    """Percentile interval of `statistic` under seed resampling within each stratum.

    `values` has shape (n_seeds,) or (n_seeds, n_strata); the statistic is
    applied to the whole resampled matrix.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    n_seeds, n_strata = arr.shape
    if n_seeds < 2:
        raise ContractError(f"bootstrap needs at least 2 seeds, got {n_seeds}")
    stats = np.empty(resamples)
    cols = np.arange(n_strata)
    for b in range(resamples):
        rows = stream.integers(n_seeds, size=(n_seeds, n_strata))
        stats[b] = statistic(arr[rows, cols])
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)
