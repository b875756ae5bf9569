"""Static report artifacts rendered from a backtest run directory.

Two outputs: ``table.csv``, one row per strategy with the median and mean
absolute deviation of every metric across all assets of all markets, and one
``curves_<strategy>.svg`` per strategy showing each market's compounded
equal-weight cumulative return. The SVG is assembled from fixed-format text
so a rerun reproduces it byte for byte; no plotting library is involved.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import CsvParseError, DataError
from .metrics import METRIC_NAMES, aggregate

PNL_SUFFIX = "_pnl.csv"

# one fill per market, cycled
_PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)

_W, _H = 800, 400
_MARGIN = 45


def read_values_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a date-by-asset CSV back into (dates, asset_ids, (n, T) matrix)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date" or len(header) < 2:
            raise CsvParseError(f"{path}: expected header date,<asset>,...", line=1)
        asset_ids = header[1:]
        dates: list[str] = []
        columns: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: expected {len(header)} cells, got {len(row)}", line=lineno
                )
            try:
                columns.append([float(c) for c in row[1:]])
            except ValueError:
                raise CsvParseError(f"{path}: bad float", line=lineno)
            dates.append(row[0])
    if not dates:
        raise DataError(f"{path}: no data rows")
    return dates, asset_ids, np.array(columns, dtype=np.float64).T


def discover_pnl(backtest_dir: str | Path) -> dict[str, list[tuple[str, Path]]]:
    """Map strategy name -> [(market_id, pnl csv path)] found under the dir."""
    base = Path(backtest_dir)
    if not base.is_dir():
        raise DataError(f"backtest directory not found: {base}")
    found: dict[str, list[tuple[str, Path]]] = {}
    for sub in sorted(p for p in base.iterdir() if p.is_dir()):
        entries = []
        for f in sorted(sub.glob(f"*{PNL_SUFFIX}")):
            market = f.name[: -len(PNL_SUFFIX)]
            entries.append((market, f))
        if entries:
            found[sub.name] = entries
    if not found:
        raise DataError(f"no pnl files under {base}")
    return found


def strategy_table(backtest_dir: str | Path) -> tuple[list[str], list[list[float]]]:
    """Pool per-asset metrics per strategy; median and MAD per metric."""
    from .metrics import MetricsReport

    found = discover_pnl(backtest_dir)
    names = sorted(found)
    rows = []
    for strategy in names:
        tables = []
        for market, path in found[strategy]:
            _, asset_ids, pnl = read_values_csv(path)
            tables.append(MetricsReport.from_pnl(market, asset_ids, pnl).table)
        pooled = np.vstack(tables)
        row = []
        for j, _metric in enumerate(METRIC_NAMES):
            agg = aggregate(pooled[:, j])
            row.extend([agg["median"], agg["mad"]])
        rows.append(row)
    return names, rows


def write_table_csv(backtest_dir: str | Path, path: str | Path) -> None:
    names, rows = strategy_table(backtest_dir)
    header = ["strategy"]
    for metric in METRIC_NAMES:
        header.extend([f"{metric}_median", f"{metric}_mad"])
    lines = [",".join(header)]
    for name, row in zip(names, rows):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def svg_curves(curves: dict[str, np.ndarray], title: str) -> str:
    """Cumulative-return polylines, one per market, as a standalone SVG."""
    if not curves:
        raise DataError("no curves to draw")
    lo = min(float(np.min(c)) for c in curves.values())
    hi = max(float(np.max(c)) for c in curves.values())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo -= pad
    hi += pad
    x0, x1 = _MARGIN, _W - _MARGIN
    y0, y1 = _H - _MARGIN, _MARGIN  # y grows downward in svg

    def xmap(i: int, n: int) -> float:
        return x0 + (x1 - x0) * (i / (n - 1) if n > 1 else 0.0)

    def ymap(v: float) -> float:
        return y0 + (y1 - y0) * ((v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_MARGIN}" y="20" font-family="monospace" font-size="14">'
        f"{title}</text>",
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="4" y="{_fmt(ymap(hi) + 4)}" font-family="monospace" '
        f'font-size="10">{_fmt(hi)}</text>',
        f'<text x="4" y="{_fmt(ymap(lo) + 4)}" font-family="monospace" '
        f'font-size="10">{_fmt(lo)}</text>',
    ]
    for idx, market in enumerate(sorted(curves)):
        c = curves[market]
        color = _PALETTE[idx % len(_PALETTE)]
        points = " ".join(
            f"{_fmt(xmap(i, c.size))},{_fmt(ymap(float(v)))}" for i, v in enumerate(c)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
            f'points="{points}"/>'
        )
        ly = y1 + 14 * idx
        parts.append(
            f'<rect x="{x1 - 130}" y="{ly - 8}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x1 - 116}" y="{ly + 1}" font-family="monospace" '
            f'font-size="10">{market}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report(backtest_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Write table.csv and one curves SVG per strategy; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    table_path = out_dir / "table.csv"
    write_table_csv(backtest_dir, table_path)
    written.append(table_path)
    for strategy, entries in sorted(discover_pnl(backtest_dir).items()):
        curves = {}
        for market, path in entries:
            _, _, pnl = read_values_csv(path)
            curves[market] = np.cumprod(1.0 + pnl.mean(axis=0))
        svg_path = out_dir / f"curves_{strategy}.svg"
        svg_path.write_text(svg_curves(curves, f"cumulative return: {strategy}"),
                            encoding="utf-8")
        written.append(svg_path)
    return written
