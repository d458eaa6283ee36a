"""Summaries and learning-curve figures from a directory of CSV logs."""

from __future__ import annotations

import csv
import glob
import math
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from . import metrics
from .bounds import empirical_regret
from .experiment import CSV_HEADER
from .rng import Rng

_NAME = re.compile(r"^(?P<method>[a-z]+)_seed(?P<seed>-?\d+)\.csv$")
METHOD_ORDER = ("dgcrl", "naive", "itr", "etr", "scratch")


class SchemaError(ValueError):
    pass


@dataclass
class SeedLog:
    """Parsed log of one method on one seed."""

    seed: int
    # task_id -> eval returns in episode order
    eval_curves: dict[int, list[float]] = field(default_factory=dict)
    train_curves: dict[int, list[float]] = field(default_factory=dict)
    final: dict[int, float] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)

    def task_ids(self) -> list[int]:
        return sorted(self.final) if self.final else sorted(self.eval_curves)

    def end_of_task(self, tid) -> float:
        return self.eval_curves[tid][-1]

    def sequence_returns(self) -> list[tuple[int, float]]:
        """(task_id, eval return) pairs in training order."""
        return [(tid, r) for tid in self.order for r in self.eval_curves[tid]]


def read_log(path) -> SeedLog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise SchemaError(f"{path}: header {header} does not match {CSV_HEADER}")
        seed_log = None
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"{path}: row has {len(row)} fields")
            seed, tid, _, phase, ret = int(row[0]), int(row[1]), int(row[2]), row[3], float(row[4])
            if seed_log is None:
                seed_log = SeedLog(seed)
            if phase == "eval":
                if tid not in seed_log.eval_curves:
                    seed_log.order.append(tid)
                seed_log.eval_curves.setdefault(tid, []).append(ret)
            elif phase == "train":
                seed_log.train_curves.setdefault(tid, []).append(ret)
            elif phase == "final_eval":
                seed_log.final[tid] = ret
            else:
                raise SchemaError(f"{path}: unknown phase {phase!r}")
    if seed_log is None:
        raise SchemaError(f"{path}: no rows")
    return seed_log


def load_logs(log_dir) -> dict[str, list[SeedLog]]:
    out: dict[str, list[SeedLog]] = defaultdict(list)
    for path in sorted(glob.glob(os.path.join(log_dir, "*.csv"))):
        m = _NAME.match(os.path.basename(path))
        if m:
            out[m["method"]].append(read_log(path))
    if not out:
        raise SchemaError(f"no <method>_seed<N>.csv logs in {log_dir}")
    for logs in out.values():
        logs.sort(key=lambda s: s.seed)
    return dict(sorted(out.items(), key=lambda kv: _method_rank(kv[0])))


def _method_rank(method):
    return (METHOD_ORDER.index(method) if method in METHOD_ORDER else len(METHOD_ORDER), method)


@dataclass
class MetricSummary:
    point: float
    low: float | None = None
    high: float | None = None
    n: int = 0


def _summarise(matrix, stream, cfg) -> MetricSummary:
    arr = np.asarray(matrix, dtype=np.float64)
    point = metrics.iqm(arr)
    if arr.shape[0] < 2:
        return MetricSummary(point, None, None, arr.shape[0])
    lo, hi = metrics.stratified_bootstrap_ci(arr, stream, cfg["confidence"], cfg["resamples"])
    return MetricSummary(point, lo, hi, arr.shape[0])


def reference_curves(logs: dict[str, list[SeedLog]], task_ids, episodes) -> list[np.ndarray] | None:
    if "scratch" not in logs:
        return None
    ref = []
    for tid in task_ids:
        curves = [s.eval_curves[tid] for s in logs["scratch"] if tid in s.eval_curves]
        if not curves:
            return None
        ref.append(metrics.pad_curves(curves, episodes).mean(axis=0))
    return ref


def compute_summary(logs, C=100.0, confidence=0.95, resamples=2000, seed=0) -> dict:
    """Per-method IQM point estimates and stratified bootstrap CIs for AP, FT, F, regret."""
    cfg = {"confidence": confidence, "resamples": resamples}
    stream = Rng(seed).stream("bootstrap")
    episodes = max(
        (len(c) for runs in logs.values() for s in runs for c in s.eval_curves.values()), default=1)
    first = next(iter(logs.values()))[0]
    task_ids = first.task_ids()
    ref = reference_curves(logs, task_ids, episodes)

    best: dict[int, float] = defaultdict(lambda: -math.inf)
    for runs in logs.values():
        for s in runs:
            for tid, curve in list(s.eval_curves.items()) + list(s.train_curves.items()):
                best[tid] = max(best[tid], max(curve))
            for tid, r in s.final.items():
                best[tid] = max(best[tid], r)

    out = {}
    for method, runs in logs.items():
        for s in runs:
            if s.task_ids() != task_ids:
                raise SchemaError(f"{method} seed {s.seed}: task ids differ from other logs")
        row = {"n_seeds": len(runs)}
        row["AP"] = _summarise([[s.final[t] for t in task_ids] for s in runs], stream, cfg)
        row["AP_mean"] = float(np.mean([metrics.average_performance(
            [s.final[t] for t in task_ids]) for s in runs]))
        trained = all(s.eval_curves for s in runs)
        if trained:
            row["F"] = _summarise(
                [metrics.forgetting([s.end_of_task(t) for t in task_ids],
                                    [s.final[t] for t in task_ids])[0] for s in runs],
                stream, cfg)
            regrets = [empirical_regret(s.sequence_returns(), best)[-1] for s in runs]
            row["regret"] = _summarise(regrets, stream, cfg)
            if ref is not None and method != "scratch":
                ft = [metrics.forward_transfer(
                    [metrics.pad_curves([s.eval_curves[t]], episodes)[0] for t in task_ids],
                    ref, C)[0] for s in runs]
                row["FT"] = _summarise(ft, stream, cfg)
        out[method] = row
    return out


def _fmt(x):
    return "n/a" if x is None else f"{x:.4f}"


SUMMARY_COLUMNS = ("method", "n_seeds",
                   "AP_iqm", "AP_lo", "AP_hi", "FT_iqm", "FT_lo", "FT_hi",
                   "F_iqm", "F_lo", "F_hi", "regret_iqm", "regret_lo", "regret_hi")


def summary_rows(summary) -> list[list[str]]:
    rows = []
    for method, row in summary.items():
        cells = [method, str(row["n_seeds"])]
        for key in ("AP", "FT", "F", "regret"):
            m = row.get(key)
            if m is None:
                cells += ["n/a", "n/a", "n/a"]
            elif m.low is None:
                cells += [_fmt(m.point), "n<2", "n<2"]
            else:
                cells += [_fmt(m.point), _fmt(m.low), _fmt(m.high)]
        rows.append(cells)
    return rows


def format_table(summary) -> str:
    rows = [list(SUMMARY_COLUMNS)] + summary_rows(summary)
    widths = [max(len(r[i]) for r in rows) for i in range(len(SUMMARY_COLUMNS))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows) + "\n"


def average_curves(logs) -> dict[str, np.ndarray]:
    """Seed-averaged average-return-per-episode curve for each method.

    Replay baselines have no training episodes and get a flat line at their mean score.
    """
    episodes = max(
        (len(c) for runs in logs.values() for s in runs for c in s.eval_curves.values()), default=1)
    curves = {}
    for method, runs in logs.items():
        if all(s.eval_curves for s in runs):
            per_seed = [metrics.pad_curves([s.eval_curves[t] for t in s.task_ids()], episodes)
                        .mean(axis=0) for s in runs]
            curves[method] = np.mean(per_seed, axis=0)
        else:
            level = np.mean([np.mean(list(s.final.values())) for s in runs])
            curves[method] = np.full(episodes, level)
    return curves


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def render_svg(curves: dict[str, np.ndarray], title="Average return per episode") -> str:
    """Hand-rolled SVG: one polyline per method, legend as text elements."""
    W, H = 800, 500
    left, right, top, bottom = 80, 160, 40, 60
    pw, ph = W - left - right, H - top - bottom
    allv = np.concatenate([c for c in curves.values()]) if curves else np.zeros(1)
    ymin, ymax = float(allv.min()), float(allv.max())
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    n = max((len(c) for c in curves.values()), default=1)

    def sx(i):
        return left + (pw * i / (n - 1) if n > 1 else pw / 2)

    def sy(v):
        return top + ph * (ymax - v) / (ymax - ymin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2:.1f}" y="{H - 15}" text-anchor="middle" font-size="13">episode</text>',
        f'<text x="20" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {top + ph / 2:.1f})">average return</text>',
    ]
    for k in range(5):
        v = ymin + (ymax - ymin) * k / 4
        parts.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" text-anchor="end" '
                     f'font-size="11">{v:.2f}</text>')
    for x in (0, n - 1):
        parts.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle" '
                     f'font-size="11">{x + 1}</text>')
    for j, (method, curve) in enumerate(curves.items()):
        color = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(curve))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'data-method="{escape(method)}" points="{pts}"/>')
        ly = top + 20 * j + 10
        parts.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 46}" y="{ly + 4}" font-size="12">{escape(method)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_png(curves: dict[str, np.ndarray], path, title="Average return per episode"):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 5))
    for j, (method, curve) in enumerate(curves.items()):
        ax.plot(np.arange(1, len(curve) + 1), curve, label=method, color=PALETTE[j % len(PALETTE)])
    ax.set_xlabel("episode")
    ax.set_ylabel("average return")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def write_report(log_dir, out_dir=None, C=100.0, confidence=0.95, resamples=2000, png=True):
    """Writes summary.txt, summary.csv, avg_return.svg (and avg_return.png)."""
    out_dir = out_dir or log_dir
    os.makedirs(out_dir, exist_ok=True)
    logs = load_logs(log_dir)
    summary = compute_summary(logs, C, confidence, resamples)
    table = format_table(summary)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(table)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows(summary))
    curves = average_curves(logs)
    with open(os.path.join(out_dir, "avg_return.svg"), "w") as fh:
        fh.write(render_svg(curves))
    if png:
        render_png(curves, os.path.join(out_dir, "avg_return.png"))
    return summary, table


def audit_curriculum_log(path, delta_h: int) -> list[str]:
    """Check guide-horizon bookkeeping in one CSV log; returns a list of violations.

    Per (seed, task): episodes run 0..n-1, h never increases and drops by exactly
    delta_h right after (and only after) an inserted iteration, and an iteration
    is marked inserted exactly when its evaluation return beats the logged
    threshold. Train rows must carry the same h, threshold and flag as eval rows.
    """
    problems = []
    runs: dict[tuple[int, int], list[tuple]] = defaultdict(list)
    train: dict[tuple[int, int, int], tuple] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != CSV_HEADER:
            return [f"{path}: bad header"]
        for row in reader:
            seed, tid, ep, phase, ret, h, thr, ins = row
            if phase == "final_eval":
                continue
            key = (int(seed), int(tid))
            rec = (int(ep), float(ret), int(h), float(thr) if thr else None, ins == "1")
            if phase == "train":
                train[key + (int(ep),)] = (h, thr, ins)
            else:
                runs[key].append(rec)
                if train.get(key + (int(ep),)) != (h, thr, ins):
                    problems.append(f"{path}: seed {seed} task {tid} ep {ep}: train/eval mismatch")
    for (seed, tid), recs in runs.items():
        where = f"{path}: seed {seed} task {tid}"
        if [r[0] for r in recs] != list(range(len(recs))):
            problems.append(f"{where}: episodes not consecutive")
        for ep, ret, h, thr, ins in recs:
            if thr is not None and ins != (ret > thr):
                problems.append(f"{where} ep {ep}: inserted={ins} but return {ret!r} vs threshold {thr!r}")
            if thr is None and ins:
                problems.append(f"{where} ep {ep}: insertion without a threshold")
        for a, b in zip(recs, recs[1:]):
            want = a[2] - delta_h if a[4] else a[2]
            if b[2] != want:
                problems.append(f"{where} ep {b[0]}: h {a[2]} -> {b[2]}, expected {want}")
    return problems
