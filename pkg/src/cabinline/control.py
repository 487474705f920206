"""Access control policies: no control, static reservation and Gamora.

Gamora splits the line into blocks that each end at their own bottleneck
station, then searches, station by station, for the smallest boarding limit
that still lets every station of the block keep up with the bottleneck's
threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

from .model import BlockPartition, ControlDecision, LineConfig
from .stability import capacity_values, stability_values

__all__ = [
    "NoDemandError",
    "NoControl",
    "Static",
    "Gamora",
    "ControllerPolicy",
    "ControlInput",
    "feedback_input",
    "gamora",
    "gamora_block",
    "decide",
    "parse_policy",
]

log = logging.getLogger(__name__)

REL_EPS = 1e-9


class NoDemandError(ValueError):
    pass


@dataclass(frozen=True)
class NoControl:
    name = "none"


@dataclass(frozen=True)
class Static:
    eta: tuple[int, ...]

    @property
    def name(self):
        return "static:" + ",".join(str(e) for e in self.eta)


@dataclass(frozen=True)
class Gamora:
    name = "gamora"


ControllerPolicy = Union[NoControl, Static, Gamora]


@dataclass(frozen=True)
class ControlInput:
    r0: float
    lambda_in: tuple[float, ...]
    sigma: tuple[float, ...]
    beta: float
    gamma: int


def parse_policy(text: str, gamma: int | None = None, n_stations: int | None = None) -> ControllerPolicy:
    """Parse ``none``, ``gamora`` or ``static:<eta_1>,...,<eta_M>``."""
    text = text.strip().lower()
    if text in ("none", "nocontrol", "no-control"):
        return NoControl()
    if text == "gamora":
        return Gamora()
    if text.startswith("static:"):
        try:
            eta = tuple(int(x) for x in text[len("static:"):].split(","))
        except ValueError:
            raise ValueError(f"bad static eta list in {text!r}") from None
        if n_stations is not None and len(eta) != n_stations:
            raise ValueError(f"static eta needs {n_stations} entries, got {len(eta)}")
        if gamma is not None and any(not 1 <= e <= gamma for e in eta):
            raise ValueError(f"static eta entries must lie in [1, {gamma}]")
        return Static(eta)
    raise ValueError(f"unknown controller {text!r} (expected none, static:<etas> or gamora)")


def feedback_input(queue_lengths: Sequence[float], beta: float,
                   lambda_hat: Sequence[float]) -> list[float]:
    """Effective demand ``Q_m / beta + lambda_m``: backlog inflates the rate."""
    if len(queue_lengths) != len(lambda_hat):
        raise ValueError("queue_lengths and lambda_hat differ in length")
    return [q / beta + lam for q, lam in zip(queue_lengths, lambda_hat)]


def _first_min(values: Sequence[float]) -> int:
    """Index of the minimum; values within REL_EPS of it count as ties and the
    smallest index wins, so rounding noise cannot move a block boundary."""
    lo = min(values)
    if math.isinf(lo):
        return 0
    return next(i for i, v in enumerate(values) if v <= lo + REL_EPS * abs(lo))


def gamora_block(r_in: float, nu_block: Sequence[float], sigma_block: Sequence[float],
                 beta: float, gamma: int, lambda_star: float) -> list[int]:
    """Boarding limits for one block with bottleneck threshold ``lambda_star``."""
    n = len(nu_block)
    eta = [gamma] * n
    for m in range(n):
        eta[m] = 1
        target = nu_block[m] * lambda_star * beta
        target -= REL_EPS * abs(target)
        caps, _, _ = capacity_values(r_in, nu_block, sigma_block, beta, gamma, lambda_star, eta)
        while caps[m] < target and eta[m] < gamma:
            eta[m] += 1
            caps, _, _ = capacity_values(r_in, nu_block, sigma_block, beta, gamma, lambda_star, eta)
    return eta


def gamora(inp: ControlInput) -> ControlDecision:
    """Block partition plus per-block boarding limits for the whole line.

    Raises ``NoDemandError`` when every effective rate is zero.
    """
    lam = [float(x) for x in inp.lambda_in]
    sigma = [float(s) for s in inp.sigma]
    n = len(lam)
    if len(sigma) != n or n == 0:
        raise ValueError("lambda_in and sigma must have the same, non-zero length")
    if any(x < 0 for x in lam):
        raise ValueError("effective arrival rates must be >= 0")
    total = sum(lam)
    if not total > 0:
        raise NoDemandError("no demand: all effective arrival rates are zero")
    nu = [x / total for x in lam]

    b = [0]
    thresholds = []
    k = 0
    while k < n:
        r_in = inp.r0 if k == 0 else inp.gamma
        values, _ = stability_values(r_in, nu[k:], sigma[k:], inp.beta, inp.gamma)
        j = _first_min(values)
        thresholds.append(values[j])
        b.append(k + j + 1)
        k = b[-1]

    eta = [inp.gamma] * n
    for i in range(len(b) - 1):
        lo, hi = b[i], b[i + 1]
        if math.isinf(thresholds[i]):
            continue
        r_in = inp.r0 if i == 0 else inp.gamma
        eta[lo:hi] = gamora_block(r_in, nu[lo:hi], sigma[lo:hi], inp.beta, inp.gamma,
                                  thresholds[i])
    return ControlDecision(tuple(eta), BlockPartition(tuple(b)), tuple(thresholds))


def decide(policy: ControllerPolicy, queues: Sequence[float], lambda_hat: Sequence[float],
           sigma_hat: Sequence[float], r0_hat: float, config: LineConfig,
           *, lambda_in: Sequence[float] | None = None, warn: bool = True) -> ControlDecision:
    """Boarding limits for the next service under ``policy``.

    Gamora feeds ``queues / beta + lambda_hat`` to the algorithm unless an
    already smoothed ``lambda_in`` is passed. It falls back to no control
    when there is no demand at all.
    """
    gamma = config.gamma
    if isinstance(policy, NoControl):
        return ControlDecision((gamma,) * config.n_stations)
    if isinstance(policy, Static):
        return ControlDecision(tuple(policy.eta))
    if isinstance(policy, Gamora):
        lam_in = lambda_in if lambda_in is not None else feedback_input(
            queues, config.beta, lambda_hat)
        try:
            return gamora(ControlInput(r0_hat, tuple(lam_in), tuple(sigma_hat),
                                       config.beta, gamma))
        except NoDemandError:
            if warn:
                log.warning("no demand at any station; falling back to no control")
            return ControlDecision((gamma,) * config.n_stations, fallback=True)
    raise TypeError(f"unknown policy {policy!r}")
