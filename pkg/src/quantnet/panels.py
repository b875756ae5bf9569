"""Return panels and CSV ingestion.

Conventions, fixed across the package:

* A panel holds simple daily returns, shape (n assets, T dates), float64.
* Dates are ISO-8601 strings, strictly increasing, one per column.
* Price files turn into returns via p_t / p_{t-1} - 1 on the rows that
  survive the missing-data policy (drop any date with at least one missing
  cell, then difference the survivors).
* An optional reference-rate file (annualized percent) converts returns to
  excess returns: r - rate/100/252, matched by date. A panel date with no
  matching rate row is an alignment error.

CSV layout: header ``date,<asset>,...``; one row per date. Empty cells mark
missing data. Files written by :func:`write_panel_csv` round-trip exactly
(shortest round-trip float formatting).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date as _date
from pathlib import Path

import numpy as np

from .errors import AlignmentError, CsvParseError, InsufficientDataError, SplitError
from .validation import check_panel

logger = logging.getLogger("quantnet.data")

TRADING_DAYS = 252

# Plausibility window for a raw daily return cell. r <= -1 cannot come from a
# positive price series, and a +1000% day is read as a price file ingested
# under the wrong mode flag.
_RETURN_MIN = -1.0
_RETURN_MAX = 10.0


@dataclass
class ReturnsPanel:
    """One market: an aligned matrix of simple daily returns."""

    market_id: str
    asset_ids: list[str]
    dates: list[str]
    returns: np.ndarray  # (n, T) float64

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_obs(self) -> int:
        return self.returns.shape[1]

    def equals(self, other: "ReturnsPanel") -> bool:
        return (
            self.market_id == other.market_id
            and self.asset_ids == other.asset_ids
            and self.dates == other.dates
            and self.returns.shape == other.returns.shape
            and bool(np.all(self.returns == other.returns))
        )


@dataclass
class PanelSplit:
    train: ReturnsPanel
    validation: ReturnsPanel


def _parse_date(cell: str, line: int) -> str:
    try:
        return _date.fromisoformat(cell.strip()).isoformat()
    except ValueError:
        raise CsvParseError(f"bad date cell {cell!r}", line=line) from None


def _parse_cell(cell: str, line: int, col: str) -> float | None:
    text = cell.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"bad numeric cell {cell!r} in column {col!r}", line=line) from None
    if not np.isfinite(value):
        raise CsvParseError(f"non-finite cell {cell!r} in column {col!r}", line=line)
    return value


def _read_table(path: str | Path) -> tuple[list[str], list[tuple[str, list[float | None]]]]:
    """Parse a date-keyed CSV into (asset_ids, [(date, cells)]). Drops nothing."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file", line=1) from None
        if len(header) < 2 or header[0].strip() != "date":
            raise CsvParseError("header must be 'date,<asset>,...'", line=1)
        asset_ids = [h.strip() for h in header[1:]]
        if any(a == "" for a in asset_ids):
            raise CsvParseError("empty asset id in header", line=1)

        rows: list[tuple[str, list[float | None]]] = []
        prev_date = None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} cells, found {len(row)}", line=line_no
                )
            d = _parse_date(row[0], line_no)
            if prev_date is not None and not prev_date < d:
                raise CsvParseError(f"dates not strictly increasing at {d}", line=line_no)
            prev_date = d
            cells = [_parse_cell(c, line_no, asset_ids[j]) for j, c in enumerate(row[1:])]
            rows.append((d, cells))
    return asset_ids, rows


def load_rates(path: str | Path) -> dict[str, float]:
    """Read a ``date,rate`` CSV of annualized percent rates."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file", line=1) from None
        if len(header) != 2 or header[0].strip() != "date":
            raise CsvParseError("header must be 'date,rate'", line=1)
        rates: dict[str, float] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CsvParseError(f"expected 2 cells, found {len(row)}", line=line_no)
            d = _parse_date(row[0], line_no)
            v = _parse_cell(row[1], line_no, "rate")
            if v is None:
                raise CsvParseError("missing rate cell", line=line_no)
            rates[d] = v
    return rates


def apply_reference_rate(panel: ReturnsPanel, rates: dict[str, float]) -> ReturnsPanel:
    """Subtract the per-day reference rate (annualized percent, ACT/252)."""
    daily = np.empty(panel.n_obs, dtype=np.float64)
    for j, d in enumerate(panel.dates):
        if d not in rates:
            raise AlignmentError(f"no reference rate for panel date {d}")
        daily[j] = rates[d] / 100.0 / TRADING_DAYS
    out = panel.returns - daily[np.newaxis, :]
    return ReturnsPanel(panel.market_id, list(panel.asset_ids), list(panel.dates), out)


def ingest_csv(
    path: str | Path,
    rate_path: str | Path | None = None,
    mode: str = "prices",
    market_id: str | None = None,
) -> ReturnsPanel:
    """Parse one market CSV into an aligned excess-return panel.

    mode="prices": cells are close prices, differenced after the drop-row
    policy. mode="returns": cells are already simple returns. Raises
    CsvParseError (with line number), InsufficientDataError, AlignmentError.
    """
    path = Path(path)
    if mode not in ("prices", "returns"):
        raise CsvParseError(f"unknown mode {mode!r}")
    asset_ids, rows = _read_table(path)

    kept: list[tuple[str, list[float]]] = []
    dropped = 0
    for d, cells in rows:
        if any(c is None for c in cells):
            dropped += 1
            continue
        kept.append((d, cells))  # type: ignore[arg-type]
    if dropped:
        logger.info("%s: dropped %d row(s) with missing cells", path.name, dropped)

    if mode == "prices":
        for idx, (d, cells) in enumerate(kept):
            for j, v in enumerate(cells):
                if v <= 0.0:
                    line = _find_line(rows, d)
                    raise CsvParseError(
                        f"non-positive price {v!r} in column {asset_ids[j]!r}", line=line
                    )
        if len(kept) < 3:
            raise InsufficientDataError(
                f"{path.name}: {len(kept)} usable price row(s), need at least 3"
            )
        prices = np.array([cells for _, cells in kept], dtype=np.float64).T
        returns = prices[:, 1:] / prices[:, :-1] - 1.0
        dates = [d for d, _ in kept[1:]]
    else:
        for d, cells in kept:
            for j, v in enumerate(cells):
                if not (_RETURN_MIN < v <= _RETURN_MAX):
                    line = _find_line(rows, d)
                    raise CsvParseError(
                        f"cell {v!r} in column {asset_ids[j]!r} is not a plausible "
                        f"daily return; is this a price file?",
                        line=line,
                    )
        if len(kept) < 2:
            raise InsufficientDataError(
                f"{path.name}: {len(kept)} usable return row(s), need at least 2"
            )
        returns = np.array([cells for _, cells in kept], dtype=np.float64).T
        dates = [d for d, _ in kept]

    panel = ReturnsPanel(
        market_id=market_id if market_id is not None else path.stem,
        asset_ids=asset_ids,
        dates=dates,
        returns=returns,
    )
    if rate_path is not None:
        panel = apply_reference_rate(panel, load_rates(rate_path))
    check_panel(panel)
    return panel


def _find_line(rows: list[tuple[str, list]], target_date: str) -> int:
    for i, (d, _) in enumerate(rows):
        if d == target_date:
            return i + 2  # +1 for the header, +1 for 1-based lines
    return 0


def split_holdout(panel: ReturnsPanel, holdout_len: int) -> PanelSplit:
    """Chronological split: the last ``holdout_len`` columns become validation."""
    t = panel.n_obs
    if not isinstance(holdout_len, (int, np.integer)) or holdout_len < 1:
        raise SplitError(f"holdout_len must be a positive integer, got {holdout_len!r}")
    if holdout_len >= t:
        raise SplitError(f"holdout_len {holdout_len} >= panel length {t}")
    cut = t - holdout_len
    train = ReturnsPanel(
        panel.market_id, list(panel.asset_ids), panel.dates[:cut], panel.returns[:, :cut].copy()
    )
    val = ReturnsPanel(
        panel.market_id, list(panel.asset_ids), panel.dates[cut:], panel.returns[:, cut:].copy()
    )
    return PanelSplit(train=train, validation=val)


def write_panel_csv(panel: ReturnsPanel, path: str | Path) -> None:
    """Write a returns-mode CSV that ingests back to an identical panel."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(panel.asset_ids))
        for j, d in enumerate(panel.dates):
            writer.writerow([d] + [repr(float(v)) for v in panel.returns[:, j]])


def write_market_index(panels: list[ReturnsPanel], out_dir: str | Path) -> None:
    """Write ``markets.csv`` describing a directory of panel CSVs."""
    out_dir = Path(out_dir)
    with (out_dir / "markets.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["market_id", "file", "n_assets", "n_obs", "start", "end"])
        for p in panels:
            writer.writerow(
                [p.market_id, f"{p.market_id}.csv", p.n_assets, p.n_obs, p.dates[0], p.dates[-1]]
            )


def write_panel_dir(panels: list[ReturnsPanel], out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for p in panels:
        write_panel_csv(p, out_dir / f"{p.market_id}.csv")
    write_market_index(panels, out_dir)


def read_panel_csv(path: str | Path, market_id: str | None = None) -> ReturnsPanel:
    """Read back a normalized panel CSV (our own serialization).

    Unlike ``ingest_csv`` this trusts the values: no price/return
    plausibility screen (synthetic panels are unit-scale) and no drop-row
    policy; a missing cell in a normalized file is corruption, not data.
    """
    path = Path(path)
    asset_ids, rows = _read_table(path)
    for d, cells in rows:
        if any(c is None for c in cells):
            raise CsvParseError(
                f"missing cell in normalized panel {path.name}", line=_find_line(rows, d)
            )
    if len(rows) < 2:
        raise InsufficientDataError(f"{path.name}: {len(rows)} row(s), need at least 2")
    panel = ReturnsPanel(
        market_id=market_id if market_id is not None else path.stem,
        asset_ids=asset_ids,
        dates=[d for d, _ in rows],
        returns=np.array([cells for _, cells in rows], dtype=np.float64).T,
    )
    check_panel(panel)
    return panel


def load_panel_dir(data_dir: str | Path) -> list[ReturnsPanel]:
    """Load every market listed in ``markets.csv`` under ``data_dir``."""
    data_dir = Path(data_dir)
    index = data_dir / "markets.csv"
    if not index.exists():
        raise InsufficientDataError(f"no markets.csv in {data_dir}")
    panels = []
    with index.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["market_id", "file"]:
            raise CsvParseError(f"{index}: bad index header", line=1)
        for row in reader:
            if not row:
                continue
            mid, fname = row[0], row[1]
            panels.append(read_panel_csv(data_dir / fname, market_id=mid))
    if not panels:
        raise InsufficientDataError(f"{index}: no markets listed")
    return panels
