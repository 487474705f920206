"""Domain types for a single cabin line and their validation.

Station indices are 1-based in every user-facing message; internally all
per-station sequences are plain 0-based tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ValidationError",
    "StationConfig",
    "LineConfig",
    "RateProfile",
    "BlockPartition",
    "ControlDecision",
    "validate",
]


class ValidationError(ValueError):
    """Raised when a configuration or profile violates an invariant.

    ``problems`` lists every violation found, not just the first one.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class StationConfig:
    sigma: float
    name: str = ""


@dataclass(frozen=True)
class LineConfig:
    """Static description of one transport line.

    ``travel_delays[m]`` is the time a cabin needs from station m+1 to m+2
    (1-based). When omitted every link takes ``beta`` seconds, so a cabin
    serviced at one station is serviced at the next one a cabin interval
    later.

    ``entry_occupancy`` optionally draws the occupancy of each cabin entering
    station 1 from an RNG; the default is the deterministic ``round(r0_mean)``.
    """

    beta: float
    gamma: int
    stations: tuple[StationConfig, ...]
    r0_mean: float = 0.0
    travel_delays: Optional[tuple[float, ...]] = None
    entry_occupancy: Optional[Callable[[np.random.Generator], int]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        if self.travel_delays is None:
            delays = (float(self.beta),) * max(len(self.stations) - 1, 0)
        else:
            delays = tuple(float(d) for d in self.travel_delays)
        object.__setattr__(self, "travel_delays", delays)

    @classmethod
    def from_sigmas(cls, beta, gamma, sigmas, r0_mean=0.0, travel_delays=None, names=None):
        names = names or [f"station_{m + 1}" for m in range(len(sigmas))]
        stations = tuple(StationConfig(float(s), n) for s, n in zip(sigmas, names))
        return cls(float(beta), int(gamma), stations, float(r0_mean),
                   None if travel_delays is None else tuple(travel_delays))

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def sigmas(self) -> tuple[float, ...]:
        return tuple(s.sigma for s in self.stations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name or f"station_{m + 1}" for m, s in enumerate(self.stations))

    def link_lags(self) -> tuple[int, ...]:
        """Travel delays expressed as whole service intervals.

        Services are synchronized at multiples of ``beta``, so a cabin that
        reaches the next station between two service instants waits for the
        following one.
        """
        return tuple(int(math.ceil(d / self.beta - 1e-9)) for d in self.travel_delays)

    def draw_entry_occupancy(self, rng: np.random.Generator) -> int:
        if self.entry_occupancy is not None:
            return int(self.entry_occupancy(rng))
        return int(round(self.r0_mean))


@dataclass(frozen=True)
class RateProfile:
    """Piecewise-constant arrival rates, one column per station.

    ``rates[i, m]`` holds on ``[breakpoints[i], breakpoints[i + 1])``; the last
    row holds until the simulation horizon.
    """

    breakpoints: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).reshape(-1)
        rates = np.array(self.rates, dtype=float)
        if rates.ndim == 1:
            rates = rates.reshape(len(bp), -1) if len(bp) else rates.reshape(0, -1)
        bp.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def constant(cls, rates: Sequence[float]) -> "RateProfile":
        return cls(np.array([0.0]), np.array([list(rates)], dtype=float))

    @property
    def n_stations(self) -> int:
        return self.rates.shape[1]

    def segment_index(self, t: float) -> int:
        return max(int(np.searchsorted(self.breakpoints, t, side="right")) - 1, 0)

    def rate_at(self, t: float) -> np.ndarray:
        if t < self.breakpoints[0]:
            return np.zeros(self.n_stations)
        return self.rates[self.segment_index(t)]

    def __eq__(self, other):
        if not isinstance(other, RateProfile):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.rates, other.rates))

    __hash__ = None


@dataclass(frozen=True)
class BlockPartition:
    """Block boundaries ``b``: ``b[0] == 0`` and ``b[i]`` is the 1-based index
    of the last station in block i."""

    b: tuple[int, ...]

    def blocks(self) -> list[tuple[int, int]]:
        """0-based half-open station ranges, one per block."""
        return [(self.b[i], self.b[i + 1]) for i in range(len(self.b) - 1)]


@dataclass(frozen=True)
class ControlDecision:
    eta: tuple[int, ...]
    blocks: Optional[BlockPartition] = None
    thresholds: tuple[float, ...] = ()
    fallback: bool = False


def _config_problems(config: LineConfig) -> list[str]:
    problems = []
    if not (config.beta > 0 and math.isfinite(config.beta)):
        problems.append(f"beta must be > 0 (got {config.beta})")
    if int(config.gamma) != config.gamma or config.gamma < 1:
        problems.append(f"gamma must be an integer >= 1 (got {config.gamma})")
    if config.n_stations < 1:
        problems.append("line needs at least one station")
    if not (0 <= config.r0_mean <= config.gamma):
        problems.append(f"r0_mean out of [0, gamma] (got {config.r0_mean})")
    for m, st in enumerate(config.stations, start=1):
        if not (0.0 <= st.sigma <= 1.0):
            problems.append(f"sigma out of [0,1] at station {m} (got {st.sigma})")
    if len(config.travel_delays) != max(config.n_stations - 1, 0):
        problems.append(
            f"expected {config.n_stations - 1} travel delays, got {len(config.travel_delays)}")
    for m, d in enumerate(config.travel_delays, start=1):
        if not (d >= 0 and math.isfinite(d)):
            problems.append(f"travel delay {m}->{m + 1} must be >= 0 (got {d})")
    return problems


def _profile_problems(profile: RateProfile, n_stations: int) -> list[str]:
    problems = []
    bp, rates = profile.breakpoints, profile.rates
    if len(bp) == 0:
        problems.append("rate profile has no breakpoints")
    if rates.ndim != 2 or rates.shape[0] != len(bp):
        problems.append("rate matrix must have one row per breakpoint")
    elif rates.shape[1] != n_stations:
        problems.append(
            f"dimension mismatch: profile has {rates.shape[1]} station columns, line has {n_stations}")
    if len(bp) > 1 and not np.all(np.diff(bp) > 0):
        problems.append("breakpoints must be strictly ascending")
    if not np.all(np.isfinite(bp)):
        problems.append("breakpoints must be finite")
    if rates.size and not np.all(np.isfinite(rates)):
        problems.append("rates must be finite")
    elif rates.size and np.any(rates < 0):
        problems.append("rates must be >= 0")
    return problems


def validate(config: LineConfig, profile: RateProfile) -> tuple[LineConfig, RateProfile]:
    """Return ``(config, profile)`` unchanged or raise with every violation."""
    problems = _config_problems(config) + _profile_problems(profile, config.n_stations)
    if problems:
        raise ValidationError(problems)
    return config, profile
