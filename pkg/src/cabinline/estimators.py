"""Online estimates of arrival rates and leaving probabilities.

Both estimators only see what station sensors report: arrivals per cabin
interval, and per-service counts of passengers entering (boarding) and
leaving each station. They never look inside cabins.
"""

from __future__ import annotations

from collections import deque

import numpy as np

__all__ = ["RateEstimator", "SigmaEstimator", "sigma_ratio", "window_intervals"]

DEFAULT_RATE_WINDOW_S = 1200.0
DEFAULT_SIGMA_WINDOW_S = 240.0
SIGMA_PRIOR = 0.5


def window_intervals(window_s: float, beta: float) -> int:
    k = window_s / beta
    n = int(round(k))
    if n < 1 or abs(k - n) > 1e-9 * max(1.0, k):
        raise ValueError(f"window {window_s} s is not a positive multiple of beta={beta}")
    return n


def sigma_ratio(exits: float, aboard: float, previous: float) -> float:
    """``exits / aboard`` clamped to [0, 1]; ``previous`` when nobody was aboard."""
    if aboard <= 0:
        return previous
    return min(max(exits / aboard, 0.0), 1.0)


class RateEstimator:
    """Per-interval arrival counts turned into a smoothed controller input.

    Each update takes the arrivals counted over the last cabin interval and
    the current queue lengths. The instantaneous estimate is ``count / beta``;
    the controller input ``Q / beta + count / beta`` is averaged uniformly over
    the trailing window (fewer entries until the window has filled).
    """

    def __init__(self, n_stations: int, beta: float, window_s: float = DEFAULT_RATE_WINDOW_S):
        self.beta = float(beta)
        self.window_s = float(window_s)
        self.n_intervals = window_intervals(window_s, beta)
        self._ring = deque(maxlen=self.n_intervals)
        self._sum = np.zeros(n_stations)
        self.lambda_hat = np.zeros(n_stations)

    def update(self, counts, queues=None) -> np.ndarray:
        counts = np.asarray(counts, dtype=float)
        if np.any(counts < 0):
            raise ValueError("arrival counts must be >= 0")
        self.lambda_hat = counts / self.beta
        lam_in = self.lambda_hat.copy()
        if queues is not None:
            lam_in += np.asarray(queues, dtype=float) / self.beta
        if len(self._ring) == self._ring.maxlen:
            self._sum -= self._ring[0]
        self._ring.append(lam_in)
        self._sum += lam_in
        return self.smoothed()

    def smoothed(self) -> np.ndarray:
        if not self._ring:
            return np.zeros_like(self._sum)
        # the running total can dip a few ulps below zero after long empty stretches
        return np.maximum(self._sum / len(self._ring), 0.0)


class SigmaEstimator:
    """Leaving probabilities from station entry/exit counts.

    Exits at station m over the trailing window are divided by the passengers
    that were aboard when the same cabins reached m: cabin-entry occupancy at
    station 1 plus entries minus exits at every upstream station, each
    upstream count read ``lag(j, m)`` services earlier so it refers to the
    same cabins. For the second station of a line fed by empty cabins this is
    exits at 2 over entries at 1. With no passengers in the window the
    previous estimate is held.
    """

    def __init__(self, lags, beta: float, window_s: float = DEFAULT_SIGMA_WINDOW_S,
                 initial=None):
        self.lags = tuple(int(x) for x in lags)
        self.n_stations = len(self.lags) + 1
        self.n_intervals = window_intervals(window_s, beta)
        self.window_s = float(window_s)
        # offset[m]: services between station 1 and station m for the same cabin
        self._offset = [0] + [int(x) for x in np.cumsum(self.lags)]
        # cumulative totals, index 0 is the empty prefix
        self._cum_inflow = [0.0]
        self._cum_entries = [np.zeros(self.n_stations)]
        self._cum_exits = [np.zeros(self.n_stations)]
        if initial is None:
            initial = np.full(self.n_stations, SIGMA_PRIOR)
        self.sigma_hat = np.clip(np.asarray(initial, dtype=float), 0.0, 1.0)

    def update(self, entry_occupancy: int, entries, exits) -> np.ndarray:
        entries = np.asarray(entries, dtype=float)
        exits = np.asarray(exits, dtype=float)
        if entry_occupancy < 0 or np.any(entries < 0) or np.any(exits < 0):
            raise ValueError("counts must be >= 0")
        self._cum_inflow.append(self._cum_inflow[-1] + float(entry_occupancy))
        self._cum_entries.append(self._cum_entries[-1] + entries)
        self._cum_exits.append(self._cum_exits[-1] + exits)
        self._estimate()
        return self.sigma_hat

    def _window(self, cum, lag):
        """Window total of a cumulative series, shifted ``lag`` services back."""
        hi = len(cum) - 1 - lag
        if hi <= 0:
            return cum[0] * 0
        lo = max(hi - self.n_intervals, 0)
        return cum[hi] - cum[lo]

    def _estimate(self):
        exits_now = self._window(self._cum_exits, 0)
        for m in range(self.n_stations):
            aboard = self._window(self._cum_inflow, self._offset[m])
            for j in range(m):
                lag = self._offset[m] - self._offset[j]
                aboard += (self._window(self._cum_entries, lag)[j]
                           - self._window(self._cum_exits, lag)[j])
            self.sigma_hat[m] = sigma_ratio(exits_now[m], aboard, self.sigma_hat[m])
