"""Deterministic universe generator and the shipped fixture's frozen identity."""

import datetime
import hashlib

import numpy as np
import pytest

from conftest import UNIVERSE_CSV
from prism.errors import ValidationError
from prism.fixtures import (
    generate_returns,
    generate_universe_csv,
    load_universe_config,
    planted_sectors,
    trading_dates,
    universe_tickers,
)

SHIPPED_CSV_SHA = "33f7a87b99d24aa3be296d45fc65afd9d948e96488199afff68a46e8309c098d"
SHIPPED_RETURNS_SHA = "a7de6f06f71645bfed05dca2f7449f7c2e65f1280749040d13ed24ee5c2288bf"


def test_regeneration_is_byte_identical(universe_config):
    text = generate_universe_csv(universe_config)
    shipped = UNIVERSE_CSV.read_text(encoding="utf-8")
    assert text == shipped
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    assert digest == SHIPPED_CSV_SHA


def test_surviving_return_matrix_hash(universe_returns):
    digest = hashlib.sha256(np.asarray(universe_returns.returns).tobytes()).hexdigest()
    assert digest == SHIPPED_RETURNS_SHA


def test_trading_dates_are_consecutive_weekdays():
    dates = trading_dates("2020-01-02", 600)
    assert len(dates) == 600
    assert dates[0] == "2020-01-02"
    parsed = [datetime.date.fromisoformat(d) for d in dates]
    assert all(d.weekday() < 5 for d in parsed)
    assert all(b > a for a, b in zip(parsed, parsed[1:]))
    # a start on a weekend rolls forward to Monday
    assert trading_dates("2020-01-04", 1) == ["2020-01-06"]


def test_universe_tickers_and_planted_sectors(universe_config):
    tickers = universe_tickers(universe_config)
    assert len(tickers) == 30
    assert tickers[0] == "TEC01" and tickers[-1] == "UTL05"
    sectors = planted_sectors(universe_config)
    assert sectors["TEC03"] == "TEC"
    counts = {}
    for sector in sectors.values():
        counts[sector] = counts.get(sector, 0) + 1
    assert counts == {"TEC": 5, "FIN": 5, "ENE": 5, "HLT": 5, "CNS": 5, "UTL": 5}


def test_config_requires_all_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"seed": 1, "days": 10}', encoding="utf-8")
    with pytest.raises(ValidationError, match="missing keys"):
        load_universe_config(path)


def test_generator_validation(universe_config):
    with pytest.raises(ValidationError, match="days"):
        generate_returns(dict(universe_config, days=1))
    with pytest.raises(ValidationError, match="unknown shock"):
        generate_returns(dict(universe_config, shocks=[{"type": "meteor"}]))
    with pytest.raises(ValidationError, match="shock range"):
        generate_returns(
            dict(universe_config, shocks=[{"type": "correlation_spike", "start": 5,
                                           "end": 9000, "scale": 2.0}])
        )
    with pytest.raises(ValidationError, match="style_loadings"):
        generate_returns(dict(universe_config, style_loadings={"XXX": 1.0}))
    with pytest.raises(ValidationError, match="late_start ticker"):
        generate_universe_csv(dict(universe_config, late_start=[["ZZZ99", 10]]))
    with pytest.raises(ValidationError, match="late_start row"):
        generate_universe_csv(dict(universe_config, late_start=[["TEC01", 600]]))


def test_shock_variants_share_sample_paths(universe_config):
    base = generate_returns(dict(universe_config, shocks=[]))
    spiked = generate_returns(
        dict(universe_config,
             shocks=[{"type": "correlation_spike", "start": 100, "end": 110, "scale": 3.0}])
    )
    assert np.array_equal(base[:100], spiked[:100])
    assert np.array_equal(base[110:], spiked[110:])
    assert not np.array_equal(base[100:110], spiked[100:110])


def test_decorrelate_sector_destroys_within_sector_correlation(universe_config):
    quiet = dict(universe_config, shocks=[])
    broken = dict(
        universe_config,
        shocks=[{"type": "decorrelate_sector", "sector": "TEC", "start": 0, "end": 599}],
    )
    tickers = universe_tickers(universe_config)
    tec = [i for i, t in enumerate(tickers) if t.startswith("TEC")]

    def mean_tec_corr(cfg):
        corr = np.corrcoef(generate_returns(cfg)[:, tec].T)
        return float(corr[np.triu_indices(len(tec), 1)].mean())

    assert mean_tec_corr(quiet) > 0.8
    assert mean_tec_corr(broken) < 0.2


def test_anticorrelate_sectors_flips_coupling_sign(universe_config):
    shocked = dict(
        universe_config,
        shocks=[{"type": "anticorrelate_sectors", "sector_a": "FIN", "sector_b": "ENE",
                 "strength": 1.0, "start": 0, "end": 599}],
    )
    returns = generate_returns(shocked)
    tickers = universe_tickers(universe_config)
    fin = [i for i, t in enumerate(tickers) if t.startswith("FIN")]
    ene = [i for i, t in enumerate(tickers) if t.startswith("ENE")]
    tec = [i for i, t in enumerate(tickers) if t.startswith("TEC")]
    corr = np.corrcoef(returns.T)
    cross = float(corr[np.ix_(fin, ene)].mean())
    assert cross < -0.1  # the shocked pair anticorrelates
    still_positive = float(corr[np.ix_(ene, tec)].mean())
    assert still_positive > 0.1  # while staying tied to the rest of the market


def test_late_start_tickers_have_blank_cells(universe_config):
    text = generate_universe_csv(universe_config)
    lines = text.splitlines()
    header = lines[0].split(",")
    fin05 = header.index("FIN05")
    early = lines[1].split(",")
    assert early[fin05] == ""
    at_start = lines[1 + 40].split(",")
    assert at_start[fin05] != ""
    # a never-blank ticker is dense from the first row
    tec01 = header.index("TEC01")
    assert early[tec01] != ""


def test_returns_shape_and_scale(universe_config):
    returns = generate_returns(dict(universe_config, shocks=[]))
    assert returns.shape == (599, 30)
    # daily log returns of the configured vol scale, nowhere near price scale
    assert float(np.abs(returns).max()) < 0.25
    assert float(np.std(returns)) < 0.05
