"""Multi-run experiments: seeded replications, aggregation and controller comparison."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .control import ControllerPolicy, Gamora, NoControl, Static
from .model import LineConfig, RateProfile
from .sim import SimParams, SimTrace, run_simulation
from .stats import DEFAULT_BIN_WIDTH_S, imbalance, mean_ci, paired_less, time_averaged_waits

__all__ = ["run_seed", "run_many", "ControllerSummary", "Comparison", "compare_controllers",
           "default_static_policies"]


def run_seed(master_seed: int, i: int) -> int:
    """Seed of run ``i``: depends only on ``(master_seed, i)``, so adding runs
    leaves earlier runs untouched."""
    ss = np.random.SeedSequence([int(master_seed), int(i)])
    return int(ss.generate_state(1, np.uint64)[0])


def _run(args):
    return run_simulation(*args)


def run_many(config: LineConfig, profile: RateProfile, params: SimParams, runs: int,
             master_seed: int, jobs: int = 1) -> list[SimTrace]:
    """Run ``runs`` replications; ``params.seed`` is replaced per run."""
    work = [(config, profile, replace(params, seed=run_seed(master_seed, i)))
            for i in range(runs)]
    if jobs > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run, work))
    return [_run(w) for w in work]


def default_static_policies(config: LineConfig) -> list[Static]:
    """Reserve one and two seats at station 1 for the rest of the line."""
    g, M = config.gamma, config.n_stations
    return [Static((max(g - k, 1),) + (g,) * (M - 1)) for k in (1, 2)]


@dataclass
class ControllerSummary:
    name: str
    waits: np.ndarray  # (runs, M) time-averaged waits per run
    mean_wait: np.ndarray
    wait_ci: np.ndarray
    imbalance: np.ndarray  # (runs,)
    mean_imbalance: float
    imbalance_ci: float


@dataclass
class Comparison:
    station_names: tuple[str, ...]
    controllers: list[ControllerSummary]
    # vs[name] = (mean J(gamora) - J(name), upper 95% bound, gamora significantly lower)
    vs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def f(x):
            x = float(x)
            return None if np.isnan(x) else x

        return {
            "stations": list(self.station_names),
            "controllers": [
                {
                    "controller": c.name,
                    "mean_wait_s": [f(x) for x in c.mean_wait],
                    "wait_ci_s": [f(x) for x in c.wait_ci],
                    "imbalance_s": f(c.mean_imbalance),
                    "imbalance_ci_s": f(c.imbalance_ci),
                }
                for c in self.controllers
            ],
            "gamora_vs": {
                k: {"mean_diff_s": f(v[0]), "upper_bound_s": f(v[1]), "gamora_lower": bool(v[2])}
                for k, v in self.vs.items()
            },
        }


def compare_controllers(config: LineConfig, profile: RateProfile, horizon: float, runs: int,
                        master_seed: int, statics: Optional[Sequence[Static]] = None,
                        bin_width: float = DEFAULT_BIN_WIDTH_S, estimate_lambda=False,
                        estimate_sigma=False, jobs: int = 1) -> Comparison:
    """Run no control, each static policy and Gamora on identical seeds.

    Waits are per-station time averages of the binned mean waiting time;
    the imbalance J of a run is ``max_m W_m - min_m W_m``.
    """
    statics = default_static_policies(config) if statics is None else list(statics)
    policies: list[ControllerPolicy] = [NoControl(), *statics, Gamora()]
    summaries = []
    for pol in policies:
        est = isinstance(pol, Gamora)
        params = SimParams(horizon, 0, pol, estimate_lambda and est, estimate_sigma and est)
        traces = run_many(config, profile, params, runs, master_seed, jobs)
        waits = np.array([time_averaged_waits(tr, bin_width) for tr in traces])
        jv = np.array([imbalance(w) for w in waits])
        mw, wci = mean_ci(waits)
        mj, jci = mean_ci(jv)
        summaries.append(ControllerSummary(pol.name, waits, mw, wci, jv, float(mj), float(jci)))
    gam = summaries[-1]
    vs = {s.name: paired_less(gam.imbalance, s.imbalance) for s in summaries[:-1]}
    return Comparison(config.names, summaries, vs)
