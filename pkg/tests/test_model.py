import numpy as np
import pytest

from cabinline.model import (LineConfig, RateProfile, StationConfig, ValidationError,
                             validate)


def two_station(**kw):
    args = dict(beta=10.0, gamma=8, stations=(StationConfig(0.0, "a"), StationConfig(0.04, "b")))
    args.update(kw)
    return LineConfig(**args)


def test_accepts_legal_pair():
    cfg = two_station()
    prof = RateProfile(np.array([0.0, 3600.0]), np.array([[0.5, 0.05], [0.2, 0.1]]))
    out = validate(cfg, prof)
    assert out[0] is cfg and out[1] is prof


def test_sigma_out_of_range():
    cfg = two_station(stations=(StationConfig(1.2), StationConfig(0.0)))
    with pytest.raises(ValidationError, match=r"sigma out of \[0,1\] at station 1"):
        validate(cfg, RateProfile.constant([0.1, 0.1]))


def test_dimension_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        validate(two_station(), RateProfile.constant([0.1, 0.1, 0.1]))


def test_reports_every_violation():
    cfg = two_station(beta=-1.0, r0_mean=9.0, stations=(StationConfig(-0.1), StationConfig(2.0)))
    prof = RateProfile(np.array([5.0, 1.0]), np.array([[0.1, -0.2], [0.1, 0.1]]))
    with pytest.raises(ValidationError) as exc:
        validate(cfg, prof)
    msgs = "\n".join(exc.value.problems)
    for needle in ("beta", "r0_mean", "station 1", "station 2", "travel delay", "ascending",
                   "rates must be >= 0"):
        assert needle in msgs
    assert len(exc.value.problems) == 7  # default delay inherits the bad beta


@pytest.mark.parametrize("bad", [{"gamma": 0}, {"gamma": 2.5}, {"travel_delays": (-1.0,)},
                                 {"travel_delays": (1.0, 2.0)}])
def test_config_errors(bad):
    with pytest.raises(ValidationError):
        validate(two_station(**bad), RateProfile.constant([0.0, 0.0]))


def test_validate_is_idempotent():
    pair = validate(two_station(), RateProfile.constant([0.3, 0.0]))
    again = validate(*pair)
    assert again == pair


def test_default_delays_are_one_interval():
    cfg = two_station()
    assert cfg.travel_delays == (10.0,)
    assert cfg.link_lags() == (1,)
    assert LineConfig.from_sigmas(10, 8, [0, 0, 0], travel_delays=[0, 25]).link_lags() == (0, 3)


def test_entry_occupancy_default_and_hook():
    rng = np.random.default_rng(0)
    assert two_station(r0_mean=2.6).draw_entry_occupancy(rng) == 3
    hooked = two_station(entry_occupancy=lambda g: int(g.integers(0, 3)))
    assert all(0 <= hooked.draw_entry_occupancy(rng) < 3 for _ in range(20))


def test_profile_rate_lookup():
    prof = RateProfile(np.array([0.0, 100.0]), np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert list(prof.rate_at(0.0)) == [1.0, 2.0]
    assert list(prof.rate_at(99.9)) == [1.0, 2.0]
    assert list(prof.rate_at(100.0)) == [3.0, 4.0]
    assert list(prof.rate_at(1e9)) == [3.0, 4.0]
