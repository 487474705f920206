"""Reading and writing line configurations, rate profiles, traces and stats.

Line configuration files are flat ``key = value`` text. Blank lines and
everything after ``#`` are ignored. Keys::

    beta_s   = 10              # cabin interarrival time, seconds
    gamma    = 8               # seats per cabin
    r0_mean  = 0               # mean occupancy of cabins entering station 1
    sigma    = 0, 0.04         # leaving probability per station
    delay_s  = 10              # travel time per link (optional, default beta_s)
    names    = valley, middle  # station labels (optional)

Rate profiles are CSV with header ``time_s,station_1,...,station_M``; each
row's rates (passengers/second) hold until the next row's time. ``#`` lines
are comments.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .model import LineConfig, RateProfile, StationConfig, ValidationError, validate

__all__ = [
    "parse_line_config",
    "load_line_config",
    "format_line_config",
    "parse_rate_profile",
    "load_rate_profile",
    "format_rate_profile",
    "write_trace",
    "write_stats",
    "stats_to_dict",
    "SERVICE_COLUMNS",
    "PASSENGER_COLUMNS",
    "STATS_COLUMNS",
]

PathLike = Union[str, Path]

CONFIG_KEYS = ("beta_s", "gamma", "r0_mean", "sigma", "delay_s", "names")

SERVICE_COLUMNS = ("service", "time_s", "station", "occupancy_before", "leavers", "eta",
                   "capacity", "boarded", "queue_before", "queue_after", "lambda_in",
                   "lambda_hat", "sigma_used")
PASSENGER_COLUMNS = ("station", "arrival_time_s", "board_time_s", "wait_s")
STATS_COLUMNS = ("bin_start_s", "bin_end_s", "station", "mean_wait_s", "wait_ci_s",
                 "mean_queue", "queue_ci", "mean_eta", "eta_ci", "wait_runs", "wait_samples")


def _floats(text, key, lineno):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError([f"line {lineno}: {key} needs comma-separated numbers"]) from None


def parse_line_config(text: str) -> LineConfig:
    values = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        values[key] = (val, lineno)
    for key in ("beta_s", "gamma", "sigma"):
        if key not in values:
            problems.append(f"missing key {key!r}")
    if problems:
        raise ValidationError(problems)

    def scalar(key, default=None):
        if key not in values:
            return default
        val, lineno = values[key]
        xs = _floats(val, key, lineno)
        if len(xs) != 1:
            raise ValidationError([f"line {lineno}: {key} needs a single number"])
        return xs[0]

    gamma = scalar("gamma")
    if gamma != int(gamma):
        raise ValidationError([f"line {values['gamma'][1]}: gamma must be an integer"])
    sigma = _floats(values["sigma"][0], "sigma", values["sigma"][1])
    delays = _floats(values["delay_s"][0], "delay_s", values["delay_s"][1]) \
        if "delay_s" in values else None
    names = [s.strip() for s in values["names"][0].split(",")] if "names" in values \
        else [f"station_{m + 1}" for m in range(len(sigma))]
    if len(names) != len(sigma):
        raise ValidationError([f"names lists {len(names)} stations, sigma {len(sigma)}"])
    config = LineConfig(
        beta=scalar("beta_s"),
        gamma=int(gamma),
        stations=tuple(StationConfig(s, n) for s, n in zip(sigma, names)),
        r0_mean=scalar("r0_mean", 0.0),
        travel_delays=None if delays is None else tuple(delays),
    )
    validate(config, RateProfile.constant([0.0] * config.n_stations))
    return config


def load_line_config(path: PathLike) -> LineConfig:
    return parse_line_config(Path(path).read_text())


def format_line_config(config: LineConfig) -> str:
    return "\n".join([
        f"beta_s = {config.beta!r}",
        f"gamma = {config.gamma}",
        f"r0_mean = {config.r0_mean!r}",
        "sigma = " + ", ".join(repr(s) for s in config.sigmas),
        "delay_s = " + ", ".join(repr(d) for d in config.travel_delays),
        "names = " + ", ".join(config.names),
        "",
    ])


def parse_rate_profile(text: str, n_stations: int | None = None) -> RateProfile:
    """Parse a rate-profile CSV. Errors carry 1-based file line numbers."""
    rows = []
    header = None
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([raw]))]
        if header is None:
            expected = ["time_s"] + [f"station_{m + 1}" for m in range(len(cells) - 1)]
            if cells != expected or len(cells) < 2:
                raise ValidationError([
                    f"line {lineno}: malformed header {','.join(cells)!r}; expected "
                    "'time_s,station_1,...,station_M'"])
            header = cells
            continue
        if len(cells) != len(header):
            problems.append(f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
            continue
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            problems.append(f"line {lineno}: non-numeric cell")
            continue
        if not all(math.isfinite(v) for v in vals):
            problems.append(f"line {lineno}: non-finite value")
            continue
        if any(v < 0 for v in vals[1:]):
            problems.append(f"line {lineno}: negative rate")
        if rows and vals[0] <= rows[-1][1][0]:
            problems.append(f"line {lineno}: time_s {vals[0]!r} not ascending")
        rows.append((lineno, vals))
    if header is None:
        problems.append("missing header")
    elif not rows:
        problems.append("no data rows")
    if n_stations is not None and header is not None and len(header) - 1 != n_stations:
        problems.append(
            f"dimension mismatch: profile has {len(header) - 1} station columns, line has {n_stations}")
    if problems:
        raise ValidationError(problems)
    data = np.array([v for _, v in rows], dtype=float)
    return RateProfile(data[:, 0], data[:, 1:])


def load_rate_profile(path: PathLike, n_stations: int | None = None) -> RateProfile:
    return parse_rate_profile(Path(path).read_text(), n_stations)


def format_rate_profile(profile: RateProfile, comment: str = "") -> str:
    out = _io.StringIO()
    for line in comment.splitlines():
        out.write(f"# {line}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["time_s"] + [f"station_{m + 1}" for m in range(profile.n_stations)])
    for t, row in zip(profile.breakpoints, profile.rates):
        w.writerow([repr(float(t))] + [repr(float(r)) for r in row])
    return out.getvalue()


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_trace(trace, directory: PathLike, prefix: str) -> list[Path]:
    """Write ``<prefix>_services.csv`` and ``<prefix>_passengers.csv``.

    Station numbers in the files are 1-based. Passengers still queued at the
    horizon have empty ``board_time_s`` and ``wait_s``.
    """
    directory = Path(directory)
    svc = directory / f"{prefix}_services.csv"
    pax = directory / f"{prefix}_passengers.csv"
    with svc.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SERVICE_COLUMNS)
        n_serv, M = trace.eta.shape
        for n in range(n_serv):
            for m in range(M):
                w.writerow([n + 1, _num(trace.service_times[n]), m + 1,
                            _num(trace.occupancy_before[n, m]), _num(trace.leavers[n, m]),
                            _num(trace.eta[n, m]), _num(trace.capacity[n, m]),
                            _num(trace.boarded[n, m]), _num(trace.queue_before[n, m]),
                            _num(trace.queue_after[n, m]), _num(trace.lambda_in[n, m]),
                            _num(trace.lambda_hat[n, m]), _num(trace.sigma_used[n, m])])
    with pax.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PASSENGER_COLUMNS)
        for m in range(trace.n_stations):
            for a, b in zip(trace.arrivals[m], trace.board_times[m]):
                w.writerow([m + 1, _num(a), _num(b), _num(b - a)])
    return [svc, pax]


def stats_to_dict(stats) -> dict:
    """JSON-ready mirror of ``stats.csv``; absent values become ``null``."""

    def clean(a):
        return [[None if np.isnan(v) else float(v) for v in row] for row in np.asarray(a, float)]

    return {
        "n_runs": stats.n_runs,
        "stations": list(stats.station_names),
        "bin_edges_s": [float(x) for x in stats.bin_edges],
        "mean_wait_s": clean(stats.mean_wait),
        "wait_ci_s": clean(stats.wait_ci),
        "mean_queue": clean(stats.mean_queue),
        "queue_ci": clean(stats.queue_ci),
        "mean_eta": clean(stats.mean_eta),
        "eta_ci": clean(stats.eta_ci),
        "wait_runs": stats.wait_runs.astype(int).tolist(),
        "wait_samples": stats.wait_samples.astype(int).tolist(),
    }


def write_stats(stats, directory: PathLike) -> list[Path]:
    """Write ``stats.csv`` (one row per bin and station) and ``stats.json``."""
    directory = Path(directory)
    csv_path = directory / "stats.csv"
    with csv_path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        edges = stats.bin_edges
        for i in range(len(edges) - 1):
            for m in range(len(stats.station_names)):
                w.writerow([_num(edges[i]), _num(edges[i + 1]), m + 1,
                            _num(stats.mean_wait[i, m]), _num(stats.wait_ci[i, m]),
                            _num(stats.mean_queue[i, m]), _num(stats.queue_ci[i, m]),
                            _num(stats.mean_eta[i, m]), _num(stats.eta_ci[i, m]),
                            int(stats.wait_runs[i, m]), int(stats.wait_samples[i, m])])
    json_path = directory / "stats.json"
    json_path.write_text(json.dumps(stats_to_dict(stats), indent=2) + "\n")
    return [csv_path, json_path]
