"""Scaled stability thresholds and the expected-capacity recursion.

Both functions work on any contiguous run of stations: ``r_in`` is the mean
occupancy of cabins arriving at the first station of that run.

The threshold of a station is only exact where it is the smallest one of the
run; elsewhere the values are meaningful for ordering (argmin) only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "ThresholdVector",
    "CapacityVector",
    "stability",
    "capacity",
    "stability_values",
    "capacity_values",
]


@dataclass(frozen=True)
class ThresholdVector:
    """Per-station thresholds in passengers/second (``inf`` when unbounded).

    ``degenerate[m]`` marks stations whose cabins are permanently full
    (zero numerator with positive denominator); those report threshold 0.
    """

    values: tuple[float, ...]
    degenerate: tuple[bool, ...]

    def argmin(self) -> int:
        return min(range(len(self.values)), key=self.values.__getitem__)


@dataclass(frozen=True)
class CapacityVector:
    capacities: tuple[float, ...]
    boardings: tuple[float, ...]
    clamped: tuple[bool, ...]


def stability_values(r_in: float, nu: Sequence[float], sigma: Sequence[float],
                     beta: float, gamma: float) -> tuple[list[float], list[bool]]:
    values, degenerate = [], []
    keep = 1.0  # fraction of the entering occupancy still aboard
    denom = 0.0  # sum_j nu_j * beta * prod_{i>j} (1 - sigma_i)
    for v, s in zip(nu, sigma):
        stay = 1.0 - s
        keep *= stay
        denom = denom * stay + v * beta
        num = gamma - r_in * keep
        if num < 0:
            raise ValueError(f"negative threshold numerator {num}: r_in exceeds gamma")
        if denom <= 0.0:
            values.append(math.inf)
            degenerate.append(False)
        else:
            values.append(num / denom)
            degenerate.append(num == 0.0)
    return values, degenerate


def stability(r_in: float, nu: Sequence[float], sigma: Sequence[float],
              beta: float, gamma: float) -> ThresholdVector:
    """Scaled stability thresholds for a run of stations.

    For station m the threshold is ``(gamma - r_in * P_1m) / sum_j nu_j beta P_(j+1)m``
    with ``P_km`` the probability of staying aboard from station k through m.
    A zero denominator gives ``inf``.
    """
    if len(nu) != len(sigma) or len(nu) == 0:
        raise ValueError("nu and sigma must have the same, non-zero length")
    values, degenerate = stability_values(r_in, nu, sigma, beta, gamma)
    return ThresholdVector(tuple(values), tuple(degenerate))


def capacity_values(r_in: float, nu: Sequence[float], sigma: Sequence[float],
                    beta: float, gamma: float, lambda_total: float,
                    eta: Sequence[int]) -> tuple[list[float], list[float], list[bool]]:
    caps, boards, clamped = [], [], []
    aboard = r_in  # expected occupancy after de-boarding, updated station by station
    for v, s, e in zip(nu, sigma, eta):
        aboard *= 1.0 - s
        free = gamma - aboard
        flag = free < 0.0
        if flag:
            free = 0.0
        c = min(float(e), free)
        demand = 0.0 if v == 0.0 else v * lambda_total * beta
        t = min(demand, c)
        caps.append(c)
        boards.append(t)
        clamped.append(flag)
        aboard += t
    return caps, boards, clamped


def capacity(r_in: float, nu: Sequence[float], sigma: Sequence[float], beta: float,
             gamma: float, lambda_total: float, eta: Sequence[int]) -> CapacityVector:
    """Expected capacity and boardings per station, first to last.

    ``E[C_m] = min(eta_m, gamma - expected occupancy after de-boarding at m)`` and
    ``E[T_m] = min(nu_m * lambda_total * beta, E[C_m])``. A station with
    ``nu_m == 0`` has zero demand even when ``lambda_total`` is infinite.
    Negative residual capacity is clamped to 0 and flagged.
    """
    if not (len(nu) == len(sigma) == len(eta)) or len(nu) == 0:
        raise ValueError("nu, sigma and eta must have the same, non-zero length")
    caps, boards, clamped = capacity_values(r_in, nu, sigma, beta, gamma, lambda_total, eta)
    return CapacityVector(tuple(caps), tuple(boards), tuple(clamped))
