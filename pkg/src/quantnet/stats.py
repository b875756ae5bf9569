"""Two-sample tests and factor regression, self-contained.

The rank-sum test reports W = the sum of (mid)ranks of the first sample in
the pooled ordering, with the tie-corrected normal approximation for the
two-sided p-value. The KS test reports the sup-distance between empirical
CDFs with the asymptotic Kolmogorov p. The factor regression is plain OLS
with an intercept, solved through the Gram matrix with a 1e-12 ridge, and
classical (non-robust) standard errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CsvParseError, InsufficientDataError, ShapeError
from .validation import require_finite

FACTOR_COLUMNS = ("mkt_rf", "smb", "hml", "rmw", "cma", "mom")

COND_LIMIT = 1e12


def _as_sample(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ShapeError(f"{what} is empty")
    require_finite(arr, what)
    return arr


def midranks(pooled: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the average of their rank block."""
    order = np.argsort(pooled, kind="stable")
    sorted_v = pooled[order]
    ranks = np.empty(pooled.size)
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def rank_sum_test(a, b) -> tuple[float, float]:
    """Wilcoxon rank-sum W for sample ``a`` and its two-sided normal p.

    Variance uses the tie correction; if every pooled value is identical the
    variance is zero and the test degenerates to (W, p=1).
    """
    a = _as_sample(a, "sample a")
    b = _as_sample(b, "sample b")
    na, nb = a.size, b.size
    n = na + nb
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    w = float(ranks[:na].sum())
    mean_w = na * (n + 1) / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float((counts.astype(np.float64) ** 3 - counts).sum())
    var_w = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var_w <= 0.0:
        return w, 1.0
    z = (w - mean_w) / math.sqrt(var_w)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return w, p


def _kolmogorov_sf(x: float) -> float:
    """Q(x) = 2 sum_{r>=1} (-1)^(r-1) exp(-2 r^2 x^2), clipped to [0, 1]."""
    if x <= 0.0:
        return 1.0
    total = 0.0
    for r in range(1, 101):
        term = 2.0 * (-1.0) ** (r - 1) * math.exp(-2.0 * r * r * x * x)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, total))


def ks_test(a, b) -> tuple[float, float]:
    """Two-sample KS: sup |F_a - F_b| and the asymptotic p-value."""
    a = _as_sample(a, "sample a")
    b = _as_sample(b, "sample b")
    a_sorted = np.sort(a)
    b_sorted = np.sort(b)
    pooled = np.concatenate([a_sorted, b_sorted])
    cdf_a = np.searchsorted(a_sorted, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b_sorted, pooled, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return d, _kolmogorov_sf(en * d)


@dataclass
class FactorModelFit:
    """OLS fit of a return series on factor columns, intercept first."""

    coefficients: np.ndarray  # (F+1,), [alpha, beta_1..beta_F]
    std_errors: np.ndarray
    t_stats: np.ndarray
    residual_variance: float
    n_obs: int
    condition_number: float
    ill_conditioned: bool


def factor_regression(strategy_returns, factors) -> FactorModelFit:
    """Regress a daily return series on a T x F factor matrix plus intercept.

    Normal equations with a 1e-12 ridge on the Gram matrix; classical
    standard errors from the same ridged inverse; near-singular designs are
    flagged once the Gram condition number passes 1e12 rather than rejected.
    """
    y = _as_sample(strategy_returns, "strategy returns")
    x = np.asarray(factors, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"factors must be a T x F matrix, got shape {x.shape}")
    require_finite(x, "factors")
    t_obs, n_fac = x.shape
    if y.size != t_obs:
        raise ShapeError(f"{y.size} returns vs {t_obs} factor rows")
    if t_obs <= n_fac + 1:
        raise InsufficientDataError(
            f"{t_obs} observations cannot identify {n_fac + 1} coefficients"
        )
    design = np.hstack([np.ones((t_obs, 1)), x])
    gram = design.T @ design + 1e-12 * np.eye(n_fac + 1)
    cond = float(np.linalg.cond(gram))
    gram_inv = np.linalg.inv(gram)
    coef = gram_inv @ (design.T @ y)
    resid = y - design @ coef
    dof = t_obs - (n_fac + 1)
    resid_var = float(resid @ resid) / dof
    se = np.sqrt(np.maximum(resid_var * np.diag(gram_inv), 0.0))
    t_stats = np.where(se > 0.0, coef / np.where(se > 0.0, se, 1.0), 0.0)
    return FactorModelFit(
        coefficients=coef,
        std_errors=se,
        t_stats=t_stats,
        residual_variance=resid_var,
        n_obs=t_obs,
        condition_number=cond,
        ill_conditioned=cond > COND_LIMIT,
    )


def load_factors(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a factor CSV ``date,mkt_rf,smb,hml,rmw,cma,mom`` quoted in percent.

    Returns (dates, T x 6 matrix already divided by 100).
    """
    path = Path(path)
    expected = ["date", *FACTOR_COLUMNS]
    dates: list[str] = []
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise CsvParseError(f"factor header must be {','.join(expected)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise CsvParseError(
                    f"expected {len(expected)} cells, got {len(row)}", line=lineno
                )
            values = []
            for name, cell in zip(FACTOR_COLUMNS, row[1:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvParseError(f"bad value {cell!r} in {name}", line=lineno)
                if not math.isfinite(v):
                    raise CsvParseError(f"non-finite value in {name}", line=lineno)
                values.append(v / 100.0)
            dates.append(row[0].strip())
            rows.append(values)
    if not rows:
        raise InsufficientDataError(f"no factor rows in {path}")
    return dates, np.array(rows, dtype=np.float64)
