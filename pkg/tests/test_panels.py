"""CSV ingestion, alignment, splitting and panel directory round-trips."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from conftest import make_panel
from quantnet.errors import (
    AlignmentError,
    CsvParseError,
    InsufficientDataError,
    SplitError,
)
from quantnet.panels import (
    TRADING_DAYS,
    apply_reference_rate,
    ingest_csv,
    load_panel_dir,
    load_rates,
    read_panel_csv,
    split_holdout,
    write_panel_csv,
    write_panel_dir,
)


# =============================================================================
# ingest_csv, prices mode
# =============================================================================


def test_ingest_prices_hand_example(tmp_path, caplog):
    # 2020-01-02 has a missing Y cell, so the whole row is dropped and the
    # returns are differenced across the gap: 121/100 - 1, then 133.1/121 - 1.
    f = tmp_path / "usa.csv"
    f.write_text(
        "date,X,Y\n"
        "2020-01-01,100,50\n"
        "2020-01-02,110,\n"
        "2020-01-03,121,55\n"
        "2020-01-06,133.1,44\n"
    )
    with caplog.at_level(logging.INFO, logger="quantnet.data"):
        panel = ingest_csv(f)
    assert panel.market_id == "usa"
    assert panel.asset_ids == ["X", "Y"]
    assert panel.dates == ["2020-01-03", "2020-01-06"]
    expected = np.array(
        [
            [121.0 / 100.0 - 1.0, 133.1 / 121.0 - 1.0],
            [55.0 / 50.0 - 1.0, 44.0 / 55.0 - 1.0],
        ]
    )
    np.testing.assert_array_equal(panel.returns, expected)
    assert "dropped 1 row" in caplog.text


def test_ingest_prices_rejects_nonpositive_price(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text(
        "date,X\n"
        "2020-01-01,100\n"
        "2020-01-02,-5\n"
        "2020-01-03,110\n"
    )
    with pytest.raises(CsvParseError) as excinfo:
        ingest_csv(f)
    assert "line 3" in str(excinfo.value)
    assert "non-positive" in str(excinfo.value)


def test_ingest_prices_needs_three_usable_rows(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,100\n2020-01-02,110\n")
    with pytest.raises(InsufficientDataError):
        ingest_csv(f)


def test_ingest_prices_market_id_override(tmp_path):
    f = tmp_path / "raw_dump.csv"
    f.write_text("date,X\n2020-01-01,100\n2020-01-02,110\n2020-01-03,121\n")
    panel = ingest_csv(f, market_id="JPN")
    assert panel.market_id == "JPN"


# =============================================================================
# ingest_csv, returns mode
# =============================================================================


def test_ingest_returns_mode_parses_as_is(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text(
        "date,X,Y\n"
        "2020-01-01,0.01,-0.02\n"
        "2020-01-02,0.0,0.005\n"
    )
    panel = ingest_csv(f, mode="returns")
    assert panel.dates == ["2020-01-01", "2020-01-02"]
    np.testing.assert_array_equal(
        panel.returns, np.array([[0.01, 0.0], [-0.02, 0.005]])
    )


@pytest.mark.parametrize("value,ok", [
    ("10.0", True),
    ("-0.999", True),
    ("10.5", False),
    ("25.0", False),
    ("-1.0", False),
])
def test_ingest_returns_plausibility_screen(tmp_path, value, ok):
    f = tmp_path / "m.csv"
    f.write_text(f"date,X\n2020-01-01,0.01\n2020-01-02,{value}\n")
    if ok:
        panel = ingest_csv(f, mode="returns")
        assert panel.n_obs == 2
    else:
        with pytest.raises(CsvParseError) as excinfo:
            ingest_csv(f, mode="returns")
        assert "line 3" in str(excinfo.value)
        assert "plausible" in str(excinfo.value)


def test_ingest_returns_needs_two_rows(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,0.01\n")
    with pytest.raises(InsufficientDataError):
        ingest_csv(f, mode="returns")


def test_ingest_unknown_mode(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,0.01\n2020-01-02,0.02\n")
    with pytest.raises(CsvParseError):
        ingest_csv(f, mode="levels")


# =============================================================================
# table parsing errors
# =============================================================================


@pytest.mark.parametrize("text,fragment", [
    ("", "empty file"),
    ("day,X\n2020-01-01,1\n", "header"),
    ("date,,Y\n2020-01-01,1,2\n", "empty asset id"),
    ("date,X\n2020/01/01,1\n", "bad date"),
    ("date,X\n2020-01-02,1\n2020-01-01,2\n2020-01-03,3\n", "strictly increasing"),
    ("date,X\n2020-01-01,1\n2020-01-01,2\n", "strictly increasing"),
    ("date,X,Y\n2020-01-01,1\n", "cells"),
    ("date,X\n2020-01-01,abc\n", "bad numeric"),
    ("date,X\n2020-01-01,inf\n", "non-finite"),
])
def test_read_table_rejects_malformed_csv(tmp_path, text, fragment):
    f = tmp_path / "m.csv"
    f.write_text(text)
    with pytest.raises(CsvParseError) as excinfo:
        ingest_csv(f, mode="returns")
    assert fragment in str(excinfo.value)


# =============================================================================
# reference rates
# =============================================================================


def test_load_rates_and_apply(tmp_path):
    f = tmp_path / "rates.csv"
    f.write_text("date,rate\n2020-01-01,2.52\n2020-01-02,5.04\n")
    rates = load_rates(f)
    assert rates == {"2020-01-01": 2.52, "2020-01-02": 5.04}

    assert TRADING_DAYS == 252
    panel = make_panel(n_assets=1, n_obs=2)
    panel.dates[:] = ["2020-01-01", "2020-01-02"]
    panel.returns[:] = [[0.01, 0.02]]
    adjusted = apply_reference_rate(panel, rates)
    expected = np.array([[0.01 - 2.52 / 100.0 / 252, 0.02 - 5.04 / 100.0 / 252]])
    np.testing.assert_array_equal(adjusted.returns, expected)
    # the original panel is untouched
    np.testing.assert_array_equal(panel.returns, [[0.01, 0.02]])


def test_apply_reference_rate_missing_date():
    panel = make_panel(n_obs=3)
    with pytest.raises(AlignmentError):
        apply_reference_rate(panel, {panel.dates[0]: 1.0})


def test_ingest_prices_with_rates(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,100\n2020-01-02,110\n2020-01-03,121\n")
    r = tmp_path / "rates.csv"
    r.write_text("date,rate\n2020-01-02,2.52\n2020-01-03,2.52\n")
    panel = ingest_csv(f, rate_path=r)
    expected = np.array([[0.1 - 0.0001, 0.1 - 0.0001]])
    np.testing.assert_allclose(panel.returns, expected, rtol=0, atol=1e-15)


def test_load_rates_rejects_bad_header(tmp_path):
    f = tmp_path / "rates.csv"
    f.write_text("day,rate\n2020-01-01,1.0\n")
    with pytest.raises(CsvParseError):
        load_rates(f)
    f.write_text("date,rate,extra\n2020-01-01,1.0,2.0\n")
    with pytest.raises(CsvParseError):
        load_rates(f)


def test_load_rates_rejects_missing_cell(tmp_path):
    f = tmp_path / "rates.csv"
    f.write_text("date,rate\n2020-01-01,\n")
    with pytest.raises(CsvParseError):
        load_rates(f)


# =============================================================================
# split_holdout
# =============================================================================


def test_split_holdout_counts():
    panel = make_panel(n_obs=1000)
    split = split_holdout(panel, 752)
    assert split.train.n_obs == 248
    assert split.validation.n_obs == 752
    assert split.train.dates == panel.dates[:248]
    assert split.validation.dates == panel.dates[248:]
    np.testing.assert_array_equal(split.train.returns, panel.returns[:, :248])
    np.testing.assert_array_equal(split.validation.returns, panel.returns[:, 248:])


def test_split_holdout_copies_are_independent():
    panel = make_panel(n_obs=10)
    split = split_holdout(panel, 4)
    split.train.returns[0, 0] = 99.0
    split.validation.returns[0, 0] = 99.0
    assert panel.returns[0, 0] != 99.0
    assert panel.returns[0, 6] != 99.0


@pytest.mark.parametrize("holdout", [0, -1, 10, 11, 7.0])
def test_split_holdout_rejects_bad_lengths(holdout):
    panel = make_panel(n_obs=10)
    with pytest.raises(SplitError):
        split_holdout(panel, holdout)


# =============================================================================
# panel serialization
# =============================================================================


def test_write_read_panel_roundtrip(tmp_path):
    panel = make_panel(market_id="rt", n_assets=4, n_obs=17, seed=3, scale=0.02)
    path = tmp_path / "rt.csv"
    write_panel_csv(panel, path)
    back = read_panel_csv(path)
    assert back.equals(panel)


def test_read_panel_csv_rejects_missing_cell(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X,Y\n2020-01-01,0.1,0.2\n2020-01-02,,0.3\n")
    with pytest.raises(CsvParseError) as excinfo:
        read_panel_csv(f)
    assert "line 3" in str(excinfo.value)


def test_read_panel_csv_needs_two_rows(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,0.1\n")
    with pytest.raises(InsufficientDataError):
        read_panel_csv(f)


def test_read_panel_csv_trusts_large_values(tmp_path):
    # our own serialization carries synthetic unit-scale returns that the
    # ingest plausibility screen would reject
    f = tmp_path / "m.csv"
    f.write_text("date,X\n2020-01-01,25.0\n2020-01-02,-3.5\n")
    panel = read_panel_csv(f)
    np.testing.assert_array_equal(panel.returns, [[25.0, -3.5]])


def test_panel_dir_roundtrip(tmp_path):
    panels = [
        make_panel("m1", n_assets=2, n_obs=12, seed=1),
        make_panel("m0", n_assets=3, n_obs=9, seed=2),
    ]
    write_panel_dir(panels, tmp_path / "data")
    index = (tmp_path / "data" / "markets.csv").read_text().splitlines()
    assert index[0] == "market_id,file,n_assets,n_obs,start,end"
    assert index[1].startswith("m1,m1.csv,2,12,")
    assert index[2].startswith("m0,m0.csv,3,9,")

    back = load_panel_dir(tmp_path / "data")
    assert [p.market_id for p in back] == ["m1", "m0"]
    for orig, loaded in zip(panels, back):
        assert loaded.equals(orig)


def test_load_panel_dir_requires_index(tmp_path):
    with pytest.raises(InsufficientDataError):
        load_panel_dir(tmp_path)


def test_load_panel_dir_rejects_bad_index_header(tmp_path):
    (tmp_path / "markets.csv").write_text("name,path\nm0,m0.csv\n")
    with pytest.raises(CsvParseError):
        load_panel_dir(tmp_path)


def test_load_panel_dir_rejects_empty_index(tmp_path):
    (tmp_path / "markets.csv").write_text("market_id,file,n_assets,n_obs,start,end\n")
    with pytest.raises(InsufficientDataError):
        load_panel_dir(tmp_path)
