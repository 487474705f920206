"""Discrete-event simulation of one cabin line.

Cabins are serviced at every station at the synchronized instants
``t_n = n * beta`` (n = 1, 2, ...). At each instant the controller fixes the
boarding limits, then stations are serviced in line order: passengers
de-board (one binomial draw), free seats are offered up to the limit, and the
longest-waiting passengers board. A cabin leaving station m reaches m+1
``ceil(delay / beta)`` services later; cabins already on the line at t = 0
are empty.

Random streams are split per station and purpose from the master seed with
``numpy.random.SeedSequence([seed, purpose, station])``, purposes being
0 = arrivals, 1 = de-boarding, 2 = cabin-entry occupancy. The arrival
stream of a station therefore never depends on the controller.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .control import ControllerPolicy, Gamora, NoControl, decide, feedback_input
from .estimators import (DEFAULT_RATE_WINDOW_S, DEFAULT_SIGMA_WINDOW_S, RateEstimator,
                         SigmaEstimator)
from .model import LineConfig, RateProfile

__all__ = [
    "SimParams",
    "BoardingOutcome",
    "SimTrace",
    "generate_arrivals",
    "service_station",
    "run_simulation",
    "stream",
]

log = logging.getLogger(__name__)

ARRIVALS, DEBOARDING, ENTRY = 0, 1, 2


def stream(seed: int, purpose: int, station: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, purpose, station])))


@dataclass(frozen=True)
class SimParams:
    horizon: float
    seed: int = 0
    controller: ControllerPolicy = field(default_factory=NoControl)
    estimate_lambda: bool = False
    estimate_sigma: bool = False
    rate_window_s: float = DEFAULT_RATE_WINDOW_S
    sigma_window_s: float = DEFAULT_SIGMA_WINDOW_S

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0 (got {self.horizon})")


@dataclass(frozen=True)
class BoardingOutcome:
    station: int
    service: int
    occupancy_before: int
    leavers: int
    eta_applied: int
    capacity: int
    boarded: int
    queue_before: int
    queue_after: int


@dataclass
class SimTrace:
    """Everything one run produced.

    Per-service arrays have shape ``(n_services, n_stations)``; row n is the
    service at ``service_times[n]``. ``board_times[m][k]`` is NaN for a
    passenger still queued at the horizon.
    """

    config: LineConfig
    params: SimParams
    service_times: np.ndarray
    occupancy_before: np.ndarray
    leavers: np.ndarray
    eta: np.ndarray
    capacity: np.ndarray
    boarded: np.ndarray
    queue_before: np.ndarray
    queue_after: np.ndarray
    arrivals: list
    board_times: list
    lambda_in: np.ndarray
    lambda_hat: np.ndarray
    sigma_used: np.ndarray
    fallback: np.ndarray

    @property
    def n_stations(self) -> int:
        return self.config.n_stations

    @property
    def horizon(self) -> float:
        return self.params.horizon

    def waits(self, station: int) -> tuple[np.ndarray, np.ndarray]:
        """``(board_times, waiting_times)`` of the passengers served at ``station``."""
        bt = self.board_times[station]
        done = ~np.isnan(bt)
        return bt[done], bt[done] - self.arrivals[station][done]

    def outcomes(self) -> Iterator[BoardingOutcome]:
        n_serv, n_st = self.eta.shape
        for n in range(n_serv):
            for m in range(n_st):
                yield BoardingOutcome(
                    m, n + 1, int(self.occupancy_before[n, m]), int(self.leavers[n, m]),
                    int(self.eta[n, m]), int(self.capacity[n, m]), int(self.boarded[n, m]),
                    int(self.queue_before[n, m]), int(self.queue_after[n, m]))


def generate_arrivals(profile: RateProfile, station: int, horizon: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Sorted arrival times on ``[0, horizon)`` for 0-based ``station``.

    Each constant-rate segment gets a Poisson count placed uniformly, which is
    exact for a piecewise-constant rate.
    """
    bp = profile.breakpoints
    ends = np.append(bp[1:], np.inf)
    chunks = []
    for lo, hi, rate in zip(bp, ends, profile.rates[:, station]):
        lo, hi = max(lo, 0.0), min(hi, horizon)
        if hi <= lo or rate <= 0:
            continue
        k = rng.poisson(rate * (hi - lo))
        chunks.append(np.sort(rng.uniform(lo, hi, k)))
    if not chunks:
        return np.empty(0)
    return np.concatenate(chunks)


def service_station(occupancy: int, queue: int, eta: int, sigma: float, gamma: int,
                    rng: np.random.Generator, station: int = 0,
                    service: int = 0) -> tuple[BoardingOutcome, int]:
    """One cabin stop: de-boarding, capped boarding. Returns the outcome and
    the occupancy the cabin leaves with."""
    leavers = int(rng.binomial(occupancy, sigma)) if occupancy else 0
    remaining = occupancy - leavers
    cap = min(eta, gamma - remaining)
    boarded = min(cap, queue)
    out = BoardingOutcome(station, service, occupancy, leavers, eta, cap, boarded,
                          queue, queue - boarded)
    return out, remaining + boarded


def run_simulation(config: LineConfig, profile: RateProfile, params: SimParams) -> SimTrace:
    """Simulate one run. Deterministic in ``(config, profile, params)``."""
    M, gamma, beta = config.n_stations, config.gamma, config.beta
    seed = params.seed
    n_serv = int(math.floor(params.horizon / beta + 1e-9))
    sigmas = np.array(config.sigmas)

    arrivals = [generate_arrivals(profile, m, params.horizon, stream(seed, ARRIVALS, m))
                for m in range(M)]
    deboard_rng = [stream(seed, DEBOARDING, m) for m in range(M)]
    entry_rng = stream(seed, ENTRY)
    board_times = [np.full(len(a), np.nan) for a in arrivals]

    shape = (n_serv, M)
    occ_before = np.zeros(shape, dtype=np.int64)
    leavers = np.zeros(shape, dtype=np.int64)
    eta_log = np.zeros(shape, dtype=np.int64)
    cap_log = np.zeros(shape, dtype=np.int64)
    boarded = np.zeros(shape, dtype=np.int64)
    q_before = np.zeros(shape, dtype=np.int64)
    q_after = np.zeros(shape, dtype=np.int64)
    lam_in_log = np.full(shape, np.nan)
    lam_hat_log = np.full(shape, np.nan)
    sigma_log = np.zeros(shape)
    fallback = np.zeros(n_serv, dtype=bool)

    lags = config.link_lags()
    pipes = [deque([0] * lag) for lag in lags]
    rate_est = (RateEstimator(M, beta, params.rate_window_s)
                if params.estimate_lambda else None)
    sigma_est = (SigmaEstimator(lags, beta, params.sigma_window_s)
                 if params.estimate_sigma else None)
    is_gamora = isinstance(params.controller, Gamora)

    head = [0] * M  # passengers boarded so far, per station
    seen = [0] * M  # passengers arrived so far, per station
    times = beta * np.arange(1, n_serv + 1)
    for n in range(n_serv):
        t = times[n]
        counts = np.zeros(M)
        queues = np.zeros(M)
        for m in range(M):
            arrived = int(np.searchsorted(arrivals[m], t, side="right"))
            counts[m] = arrived - seen[m]
            seen[m] = arrived
            queues[m] = arrived - head[m]

        if rate_est is not None:
            lam_in = rate_est.update(counts, queues)
            lam_hat = rate_est.lambda_hat
        else:
            lam_hat = profile.rate_at(t)
            lam_in = np.array(feedback_input(queues, beta, lam_hat))
        sig = sigma_est.sigma_hat.copy() if sigma_est is not None else sigmas
        lam_hat_log[n] = lam_hat
        sigma_log[n] = sig
        if is_gamora:
            lam_in_log[n] = lam_in
        decision = decide(params.controller, queues, lam_hat, sig, config.r0_mean, config,
                          lambda_in=lam_in, warn=False)
        fallback[n] = decision.fallback

        entry = config.draw_entry_occupancy(entry_rng)
        occ = entry
        for m in range(M):
            if m:
                pipes[m - 1].append(occ)
                occ = pipes[m - 1].popleft()
            out, occ = service_station(occ, int(queues[m]), decision.eta[m], sigmas[m],
                                       gamma, deboard_rng[m], m, n + 1)
            if out.boarded:
                board_times[m][head[m]:head[m] + out.boarded] = t
                head[m] += out.boarded
            occ_before[n, m] = out.occupancy_before
            leavers[n, m] = out.leavers
            eta_log[n, m] = out.eta_applied
            cap_log[n, m] = out.capacity
            boarded[n, m] = out.boarded
            q_before[n, m] = out.queue_before
            q_after[n, m] = out.queue_after
        if sigma_est is not None:
            sigma_est.update(entry, boarded[n], leavers[n])

    if fallback.any():
        log.warning("seed %d: no demand at %d of %d services; no control applied there",
                    seed, int(fallback.sum()), n_serv)
    return SimTrace(config, params, times, occ_before, leavers, eta_log, cap_log, boarded,
                    q_before, q_after, arrivals, board_times, lam_in_log, lam_hat_log,
                    sigma_log, fallback)
