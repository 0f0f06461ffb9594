"""Global-minimum-variance portfolios and a rolling-window backtest.

Returns are simple daily returns in decimal form (0.01 is one percent).
All reported statistics are decimals too: SD and AV annualised with 252
trading days, TR and MD as fractions of starting wealth.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import DegenerateInputError, EstimationError, InvalidInputError, RnlShrinkError
from .estimators import ESTIMATOR_NAMES, get_estimator

__all__ = [
    "TRADING_DAYS",
    "ReturnPanel",
    "BacktestConfig",
    "MonthRecord",
    "PortfolioMetrics",
    "BacktestReport",
    "gmv_weights",
    "drift_weights",
    "turnover",
    "metrics",
    "rolling_backtest",
]

log = logging.getLogger(__name__)

TRADING_DAYS = 252

Estimator = Callable[[NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class ReturnPanel:
    """Daily returns (T x N, NaN = missing) with optional market caps of the same shape."""

    dates: tuple[str, ...]
    assets: tuple[str, ...]
    returns: NDArray[np.float64]
    caps: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        R = np.array(self.returns, dtype=np.float64)
        if R.ndim != 2:
            raise InvalidInputError("returns must be a 2-D array (days x assets)")
        dates = tuple(str(d) for d in self.dates)
        assets = tuple(str(a) for a in self.assets)
        if R.shape != (len(dates), len(assets)):
            raise InvalidInputError(
                f"returns shape {R.shape} does not match {len(dates)} dates x {len(assets)} assets"
            )
        if np.any(np.isinf(R)):
            raise InvalidInputError("returns must be finite where present")
        parsed = np.array(dates, dtype="datetime64[D]") if dates else np.array([], dtype="datetime64[D]")
        if np.any(np.diff(parsed) <= np.timedelta64(0, "D")):
            raise InvalidInputError("dates must be strictly increasing")
        if np.any(R[np.isfinite(R)] <= -1.0):
            raise InvalidInputError("a simple return of -100% or worse is not supported")
        R.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "returns", R)
        if self.caps is not None:
            C = np.array(self.caps, dtype=np.float64)
            if C.shape != R.shape:
                raise InvalidInputError(f"caps shape {C.shape} differs from returns shape {R.shape}")
            C.setflags(write=False)
            object.__setattr__(self, "caps", C)

    @property
    def n_days(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @classmethod
    def from_csv(cls, returns_path: str | Path, caps_path: str | Path | None = None) -> "ReturnPanel":
        """Load a panel: header row of asset ids, first column ISO dates, empty cell = missing."""
        dates, assets, R = _read_panel_csv(Path(returns_path))
        caps = None
        if caps_path is not None:
            cdates, cassets, caps = _read_panel_csv(Path(caps_path))
            if cdates != dates or cassets != assets:
                raise InvalidInputError("caps CSV must have the same dates and assets as the returns CSV")
        return cls(dates, assets, R, caps)


def _read_panel_csv(path: Path) -> tuple[tuple[str, ...], tuple[str, ...], NDArray[np.float64]]:
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: need a header row and at least one data row")
    header = rows[0]
    assets = tuple(h.strip() for h in header[1:])
    if not assets:
        raise InvalidInputError(f"{path}: no asset columns")
    dates = []
    values = np.full((len(rows) - 1, len(assets)), np.nan)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise InvalidInputError(f"{path}: line {i + 2} has {len(row)} fields, expected {len(header)}")
        dates.append(row[0].strip())
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell:
                try:
                    values[i, j] = float(cell)
                except ValueError as exc:
                    raise InvalidInputError(f"{path}: line {i + 2}, column {assets[j]!r}: {cell!r}") from exc
    try:
        np.array(dates, dtype="datetime64[D]")
    except ValueError as exc:
        raise InvalidInputError(f"{path}: first column must hold ISO dates") from exc
    return tuple(dates), assets, values


@dataclass(frozen=True)
class BacktestConfig:
    estimation_window: int = 252
    holding_period: int = 21
    p: int = 100
    max_missing: int = 32
    estimator: str = "rcnl"
    rho: float | None = None

    def __post_init__(self) -> None:
        if not self.estimation_window > self.holding_period >= 1:
            raise InvalidInputError("need estimation_window > holding_period >= 1")
        if self.p < 2:
            raise InvalidInputError("universe size p must be >= 2")
        if self.max_missing < 0:
            raise InvalidInputError("max_missing must be >= 0")
        if self.estimator not in ESTIMATOR_NAMES:
            raise InvalidInputError(f"unknown estimator {self.estimator!r}")


def gmv_weights(sigma: ArrayLike) -> NDArray[np.float64]:
    """Global minimum-variance weights ``S^-1 1 / (1' S^-1 1)`` via a Cholesky solve."""
    S = np.asarray(sigma, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or not np.all(np.isfinite(S)):
        raise EstimationError("covariance estimate must be a finite square matrix")
    try:
        x = linalg.cho_solve(linalg.cho_factor(0.5 * (S + S.T), lower=True), np.ones(S.shape[0]))
    except linalg.LinAlgError as exc:
        raise EstimationError("covariance estimate is not positive definite") from exc
    total = x.sum()
    if not np.isfinite(total) or total == 0:
        raise EstimationError("GMV normalisation failed")
    return x / total


def drift_weights(w: ArrayLike, month_returns: ArrayLike) -> NDArray[np.float64]:
    """Weights at the end of a holding period when share counts are held fixed."""
    w = np.asarray(w, dtype=np.float64)
    R = np.atleast_2d(np.asarray(month_returns, dtype=np.float64))
    alpha = np.prod(1.0 + R, axis=0)
    grown = w * alpha
    total = grown.sum()
    if total == 0 or not np.isfinite(total):
        raise DegenerateInputError("degenerate month: drifted portfolio value is zero")
    return grown / total


def turnover(w_next: ArrayLike, w_hold: ArrayLike) -> float:
    """Sum of absolute weight changes at a rebalance."""
    return float(np.sum(np.abs(np.asarray(w_next, dtype=np.float64) - np.asarray(w_hold, dtype=np.float64))))


@dataclass(frozen=True)
class PortfolioMetrics:
    SD: float
    AV: float
    TR: float
    MD: float

    @property
    def IR(self) -> float:
        if self.SD == 0:
            raise DegenerateInputError("information ratio undefined: zero standard deviation")
        return self.AV / self.SD


def _max_drawdown(returns: NDArray[np.float64]) -> float:
    wealth = np.concatenate([[1.0], np.cumprod(1.0 + returns)])
    peak = np.maximum.accumulate(wealth)
    return float(np.max((peak - wealth) / peak))


def metrics(daily_returns: ArrayLike) -> PortfolioMetrics:
    """Annualised SD and mean, total return and maximum drawdown of a daily series."""
    r = np.asarray(daily_returns, dtype=np.float64).ravel()
    if r.size == 0:
        raise InvalidInputError("empty return series")
    sd = float(np.std(r, ddof=1 if r.size > 1 else 0)) * math.sqrt(TRADING_DAYS)
    # a constant series should report exactly zero spread
    if np.all(r == r[0]):
        sd = 0.0
    return PortfolioMetrics(
        SD=sd,
        AV=TRADING_DAYS * float(r.mean()),
        TR=float(np.prod(1.0 + r) - 1.0),
        MD=_max_drawdown(r),
    )


@dataclass(frozen=True)
class MonthRecord:
    start: str
    assets: tuple[str, ...]
    weights: NDArray[np.float64]
    flagged: bool = False
    message: str = ""


@dataclass
class BacktestReport:
    months: list[MonthRecord]
    dates: tuple[str, ...]
    returns: NDArray[np.float64]
    turnovers: NDArray[np.float64]
    stats: PortfolioMetrics
    config: BacktestConfig = field(default_factory=BacktestConfig)

    @property
    def flagged(self) -> int:
        return sum(m.flagged for m in self.months)

    @property
    def TO(self) -> float:
        return float(self.turnovers.mean()) if self.turnovers.size else math.nan

    def summary(self) -> dict[str, Any]:
        try:
            ir = self.stats.IR
        except DegenerateInputError:
            ir = math.nan
        return {
            "SD": self.stats.SD,
            "TO": self.TO,
            "AV": self.stats.AV,
            "TR": self.stats.TR,
            "MD": self.stats.MD,
            "IR": ir,
            "months": len(self.months),
            "flagged_months": self.flagged,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        def clean(x):
            return None if isinstance(x, float) and not math.isfinite(x) else x

        doc = {
            "config": {k: getattr(self.config, k) for k in self.config.__dataclass_fields__},
            "metrics": {k: clean(v) for k, v in self.summary().items()},
            "months": [
                {
                    "start": m.start,
                    "flagged": m.flagged,
                    "message": m.message,
                    "weights": dict(zip(m.assets, (float(x) for x in m.weights))),
                }
                for m in self.months
            ],
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for key, value in self.summary().items():
            writer.writerow([key, f"{value:.12g}" if isinstance(value, float) else value])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _select_universe(panel: ReturnPanel, cfg: BacktestConfig, w_start: int, h_start: int) -> NDArray[np.intp]:
    window = panel.returns[w_start:h_start]
    hold = panel.returns[h_start : h_start + cfg.holding_period]
    eligible = (np.isnan(window).sum(axis=0) <= cfg.max_missing) & ~np.isnan(hold).any(axis=0)
    idx = np.flatnonzero(eligible)
    if panel.caps is not None and idx.size:
        snapshot = panel.caps[h_start - 1, idx]
        key = np.where(np.isnan(snapshot), -np.inf, snapshot)
        idx = idx[np.argsort(-key, kind="stable")]
        idx = np.sort(idx[: cfg.p])
    else:
        idx = idx[: cfg.p]
    return idx


def _hold_returns(w: NDArray[np.float64], R: NDArray[np.float64]) -> NDArray[np.float64]:
    # share counts fixed: day t uses weights drifted through day t-1
    growth = np.vstack([np.ones(R.shape[1]), np.cumprod(1.0 + R, axis=0)[:-1]])
    values = growth * w
    return np.sum(values * R, axis=1) / values.sum(axis=1)


def rolling_backtest(
    panel: ReturnPanel, cfg: BacktestConfig, estimator: Estimator | None = None
) -> BacktestReport:
    """Monthly-rebalanced GMV backtest.

    Each month the universe is rebuilt from assets with at most
    ``max_missing`` gaps in the estimation window and none in the coming
    holding period; remaining gaps are set to 0.  With caps the largest
    ``p`` assets at the last window day are kept, otherwise the first
    ``p`` eligible columns.  If the estimator fails the month falls back to
    equal weights and is flagged.  Turnover is averaged over rebalances
    after the first month.
    """
    T, N = panel.returns.shape
    need = cfg.estimation_window + cfg.holding_period
    if T < need:
        raise InvalidInputError(f"panel has {T} days; at least {need} are required")
    if estimator is None:
        opts = {"demean": True}
        if cfg.rho is not None:
            opts["rho"] = cfg.rho
        estimator = get_estimator(cfg.estimator, **opts)

    n_months = (T - cfg.estimation_window) // cfg.holding_period
    months: list[MonthRecord] = []
    daily: list[NDArray[np.float64]] = []
    dates: list[str] = []
    turnovers: list[float] = []
    w_hold_full: NDArray[np.float64] | None = None

    for m in range(n_months):
        w_start = m * cfg.holding_period
        h_start = w_start + cfg.estimation_window
        h_stop = h_start + cfg.holding_period
        idx = _select_universe(panel, cfg, w_start, h_start)
        start = panel.dates[h_start]
        if idx.size == 0:
            raise InvalidInputError(f"no eligible assets for the month starting {start}")
        flagged, message = False, ""
        X = np.nan_to_num(panel.returns[w_start:h_start, idx], nan=0.0)
        try:
            w = gmv_weights(estimator(X))
        except (RnlShrinkError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("month starting %s: estimator failed (%s); using equal weights", start, exc)
            w = np.full(idx.size, 1.0 / idx.size)
            flagged, message = True, str(exc)
        months.append(MonthRecord(start, tuple(panel.assets[i] for i in idx), w, flagged, message))

        w_full = np.zeros(N)
        w_full[idx] = w
        if w_hold_full is not None:
            turnovers.append(turnover(w_full, w_hold_full))
        R_hold = panel.returns[h_start:h_stop, idx]
        daily.append(_hold_returns(w, R_hold))
        dates.extend(panel.dates[h_start:h_stop])
        w_hold_full = np.zeros(N)
        w_hold_full[idx] = drift_weights(w, R_hold)

    r = np.concatenate(daily)
    return BacktestReport(
        months=months,
        dates=tuple(dates),
        returns=r,
        turnovers=np.asarray(turnovers),
        stats=metrics(r),
        config=cfg,
    )


def weights_table(report: BacktestReport) -> list[dict[str, float]]:
    """Per-month weights as ``{asset: weight}`` dicts, absent assets omitted."""
    return [dict(zip(m.assets, m.weights.tolist())) for m in report.months]


def as_panel(returns: ArrayLike, assets: Sequence[str] | None = None, start: str = "2000-01-03") -> ReturnPanel:
    """Wrap a bare return array in a panel with consecutive calendar dates (for synthetic data)."""
    R = np.asarray(returns, dtype=np.float64)
    T, N = R.shape
    dates = np.datetime64(start, "D") + np.arange(T)
    names = tuple(assets) if assets is not None else tuple(f"a{j}" for j in range(N))
    return ReturnPanel(tuple(str(d) for d in dates), names, R)
