"""Cross-run statistics: time-binned means with Student-t confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

__all__ = [
    "WaitingStats",
    "aggregate_runs",
    "bin_edges",
    "binned_run_means",
    "time_averaged_waits",
    "mean_ci",
    "paired_less",
    "imbalance",
]

DEFAULT_BIN_WIDTH_S = 600.0


@dataclass
class WaitingStats:
    """Per bin and station, across-run means and 95% half-widths.

    Absent values (no data in a bin, or fewer than two runs for a
    half-width) are NaN. ``wait_runs`` counts the runs with at least one
    boarding in the bin; ``wait_samples`` the boarded passengers.
    """

    bin_edges: np.ndarray
    station_names: tuple[str, ...]
    n_runs: int
    mean_wait: np.ndarray
    wait_ci: np.ndarray
    mean_queue: np.ndarray
    queue_ci: np.ndarray
    mean_eta: np.ndarray
    eta_ci: np.ndarray
    wait_runs: np.ndarray
    wait_samples: np.ndarray


def bin_edges(horizon: float, bin_width: float) -> np.ndarray:
    if not bin_width > 0:
        raise ValueError("bin width must be > 0")
    edges = np.arange(0.0, horizon, bin_width)
    return np.append(edges, horizon)


def mean_ci(samples, confidence: float = 0.95, axis: int = 0):
    """NaN-aware mean and Student-t half-width along ``axis``.

    The half-width is NaN where fewer than two finite samples exist.
    """
    x = np.asarray(samples, dtype=float)
    k = np.sum(np.isfinite(x), axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        total = np.nansum(x, axis=axis)
        mean = np.where(k > 0, total / np.maximum(k, 1), np.nan)
        dev = np.where(np.isfinite(x), x - np.expand_dims(mean, axis), 0.0)
        var = np.sum(dev ** 2, axis=axis) / np.maximum(k - 1, 1)
        tq = sps.t.ppf(0.5 + confidence / 2, np.maximum(k - 1, 1))
        half = np.where(k >= 2, tq * np.sqrt(var / np.maximum(k, 1)), np.nan)
    return mean, half


def binned_run_means(trace, edges: np.ndarray):
    """Per-run bin means: (wait, wait_count, queue, eta), each ``(n_bins, M)``.

    Bins are ``[lo, hi)`` except the last, which also holds the service at
    the horizon.
    """
    n_bins, M = len(edges) - 1, trace.n_stations
    wait = np.full((n_bins, M), np.nan)
    count = np.zeros((n_bins, M), dtype=np.int64)
    for m in range(M):
        bt, w = trace.waits(m)
        idx = np.searchsorted(edges, bt, side="right") - 1
        idx = np.clip(idx, 0, n_bins - 1)
        c = np.bincount(idx, minlength=n_bins)
        s = np.bincount(idx, weights=w, minlength=n_bins)
        count[:, m] = c
        with np.errstate(invalid="ignore", divide="ignore"):
            wait[:, m] = np.where(c > 0, s / np.maximum(c, 1), np.nan)

    sidx = np.clip(np.searchsorted(edges, trace.service_times, side="right") - 1, 0, n_bins - 1)
    ns = np.bincount(sidx, minlength=n_bins)
    queue = np.full((n_bins, M), np.nan)
    eta = np.full((n_bins, M), np.nan)
    has = ns > 0
    for m in range(M):
        queue[has, m] = np.bincount(sidx, trace.queue_before[:, m], n_bins)[has] / ns[has]
        eta[has, m] = np.bincount(sidx, trace.eta[:, m], n_bins)[has] / ns[has]
    return wait, count, queue, eta


def aggregate_runs(traces: Sequence, bin_width: float = DEFAULT_BIN_WIDTH_S) -> WaitingStats:
    """Average time-binned waits, queue lengths and boarding limits over runs.

    The wait in a bin is the mean over passengers who boarded in that bin.
    With a single trace every half-width is NaN.
    """
    if not traces:
        raise ValueError("need at least one trace")
    first = traces[0]
    for tr in traces[1:]:
        if tr.config != first.config or tr.horizon != first.horizon:
            raise ValueError("traces differ in configuration or horizon")
    edges = bin_edges(first.horizon, bin_width)
    per_run = [binned_run_means(tr, edges) for tr in traces]
    waits = np.stack([p[0] for p in per_run])
    counts = np.stack([p[1] for p in per_run])
    queues = np.stack([p[2] for p in per_run])
    etas = np.stack([p[3] for p in per_run])
    mw, wci = mean_ci(waits)
    mq, qci = mean_ci(queues)
    me, eci = mean_ci(etas)
    return WaitingStats(edges, first.config.names, len(traces), mw, wci, mq, qci, me, eci,
                        np.sum(counts > 0, axis=0), counts.sum(axis=0))


def time_averaged_waits(trace, bin_width: float = DEFAULT_BIN_WIDTH_S,
                        t0: float = 0.0, t1: Optional[float] = None) -> np.ndarray:
    """Per-station average, over bins in ``[t0, t1)`` that saw boardings, of
    the bin mean waiting time. NaN for a station without boardings."""
    t1 = trace.horizon if t1 is None else t1
    edges = bin_edges(trace.horizon, bin_width)
    wait = binned_run_means(trace, edges)[0]
    sel = (edges[:-1] >= t0 - 1e-9) & (edges[:-1] < t1 - 1e-9)
    sub = wait[sel]
    with np.errstate(invalid="ignore"):
        k = np.sum(np.isfinite(sub), axis=0)
        return np.where(k > 0, np.nansum(sub, axis=0) / np.maximum(k, 1), np.nan)


def imbalance(waits) -> float:
    """``max_m W_m - min_m W_m``; NaN when any station has no waits."""
    w = np.asarray(waits, dtype=float)
    if w.size == 0 or np.any(np.isnan(w)):
        return float("nan")
    return float(w.max() - w.min())


def paired_less(a, b, confidence: float = 0.95) -> tuple[float, float, bool]:
    """One-sided paired test that ``mean(a) < mean(b)``.

    Returns the mean difference ``a - b``, the upper one-sided confidence
    bound of that difference, and whether the bound is below zero.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d[np.isfinite(d)]
    if len(d) < 2:
        return float(np.mean(d)) if len(d) else float("nan"), float("nan"), False
    mean = float(d.mean())
    se = float(d.std(ddof=1) / np.sqrt(len(d)))
    upper = mean + float(sps.t.ppf(confidence, len(d) - 1)) * se
    return mean, upper, upper < 0
