"""Monte-Carlo comparison of dispersion estimators on elliptical data.

Six dispersion structures, a multivariate-t / Gaussian sampler, the PRIAL
metric, and a scenario runner that reports PRIAL with Monte-Carlo standard
errors per (estimator, degrees of freedom).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateInputError, InvalidInputError, RnlShrinkError
from .estimators import ESTIMATOR_NAMES, run_estimator
from .numkit import as_spd_matrix, trace_normalize

__all__ = [
    "GAUSSIAN",
    "STRUCTURES",
    "EllipticalSpec",
    "ScenarioConfig",
    "PrialRow",
    "PrialTable",
    "make_dispersion",
    "sample_elliptical",
    "prial",
    "prial_from_losses",
    "frobenius_loss",
    "replication_rng",
    "run_replication",
    "run_scenario",
    "parse_nu",
    "format_nu",
]

GAUSSIAN = math.inf
STRUCTURES = ("I", "A", "F", "I'", "A'", "F'")
_ALIASES = {"I′": "I'", "A′": "A'", "F′": "F'", "Ip": "I'", "Ap": "A'", "Fp": "F'"}


def _structure(kind: str) -> str:
    kind = _ALIASES.get(kind.strip(), kind.strip())
    if kind not in STRUCTURES:
        raise InvalidInputError(f"unknown dispersion structure {kind!r}; choose from {STRUCTURES}")
    return kind


def _heterogeneous_diagonal(p: int) -> NDArray[np.float64]:
    n_one = int(math.floor(0.2 * p))
    n_three = int(math.floor(0.4 * p))
    n_ten = p - n_one - n_three
    return np.concatenate([np.ones(n_one), np.full(n_three, 3.0), np.full(n_ten, 10.0)])


def make_dispersion(kind: str, p: int) -> NDArray[np.float64]:
    """Build one of the six benchmark dispersion matrices.

    ``I`` identity, ``A`` AR(1) with ``0.7**|i-j|``, ``F`` unit diagonal with
    0.5 off the diagonal; the primed versions pre- and post-multiply by the
    square root of a diagonal made of 20% ones, 40% threes and 40% tens
    (counts floor(0.2p), floor(0.4p), remainder; in index order).
    """
    kind = _structure(kind)
    if p < 1:
        raise InvalidInputError(f"dimension must be >= 1, got {p}")
    base = kind[0]
    if base == "I":
        H = np.eye(p)
    elif base == "A":
        idx = np.arange(p)
        H = 0.7 ** np.abs(idx[:, None] - idx[None, :])
    else:
        H = np.full((p, p), 0.5)
        np.fill_diagonal(H, 1.0)
    if kind.endswith("'"):
        d = _heterogeneous_diagonal(p)
        # sqrt(d_i d_j) keeps the result exactly symmetric with an exact diagonal
        H = np.sqrt(d[:, None] * d[None, :]) * H
    return H


def parse_nu(value: str | float) -> float:
    """Parse a degrees-of-freedom value; 'inf' means Gaussian."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "∞", "gaussian"):
            return GAUSSIAN
        value = float(text)
    nu = float(value)
    if not (nu > 2):
        raise InvalidInputError(f"degrees of freedom must exceed 2 (or be inf), got {value}")
    return nu


def format_nu(nu: float) -> str:
    return "inf" if math.isinf(nu) else f"{nu:g}"


@dataclass(frozen=True)
class EllipticalSpec:
    """Centred elliptical law ``R H^{1/2} xi``: multivariate t with ``nu`` dof, Gaussian for nu=inf."""

    H: NDArray[np.float64]
    nu: float = GAUSSIAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "H", as_spd_matrix(self.H))
        object.__setattr__(self, "nu", parse_nu(self.nu))

    @property
    def p(self) -> int:
        return self.H.shape[0]

    @property
    def covariance_factor(self) -> float:
        """``c`` in ``Var(Y) = c H``."""
        return 1.0 if math.isinf(self.nu) else self.nu / (self.nu - 2.0)


def _sqrtm(H: NDArray[np.float64]) -> NDArray[np.float64]:
    w, v = np.linalg.eigh(H)
    return (v * np.sqrt(w)) @ v.T


def sample_elliptical(
    spec: EllipticalSpec, n: int, seed: int | np.random.Generator | np.random.SeedSequence | None = None
) -> NDArray[np.float64]:
    """Draw ``n`` rows from the elliptical law.

    Finite ``nu``: a Gaussian draw with covariance H divided by an
    independent ``sqrt(chi2_nu / nu)``.  The Gaussian part is drawn first, so
    the same seed gives common random numbers across ``nu``.
    """
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, spec.p)) @ _sqrtm(spec.H)
    if not math.isinf(spec.nu):
        Y /= np.sqrt(rng.chisquare(spec.nu, size=n) / spec.nu)[:, None]
    return Y


def frobenius_loss(estimate: ArrayLike, H: ArrayLike) -> float:
    """Squared Frobenius distance after scaling both matrices to trace p."""
    H = np.asarray(H, dtype=np.float64)
    p = H.shape[0]
    return float(np.sum((trace_normalize(estimate, p) - trace_normalize(H, p)) ** 2))


def prial_from_losses(losses: ArrayLike, sample_losses: ArrayLike) -> tuple[float, float]:
    """PRIAL and its delta-method standard error from paired per-replication losses."""
    a = np.asarray(losses, dtype=np.float64)
    b = np.asarray(sample_losses, dtype=np.float64)
    keep = np.isfinite(a) & np.isfinite(b)
    a, b = a[keep], b[keep]
    if a.size == 0:
        return math.nan, math.nan
    b_bar = b.mean()
    if b_bar == 0:
        raise DegenerateInputError("sample matrix equals H in every replication; PRIAL undefined")
    ratio = a.mean() / b_bar
    value = 100.0 * (1.0 - ratio)
    if a.size < 2:
        return value, math.nan
    se = 100.0 * np.std(a - ratio * b, ddof=1) / (math.sqrt(a.size) * b_bar)
    return value, float(se)


def prial(estimates: Sequence[ArrayLike], sample_matrices: Sequence[ArrayLike], H_true: ArrayLike) -> float:
    """``100 * (1 - mean ||H* - H||^2 / mean ||S - H||^2)`` with every matrix at trace p."""
    if len(estimates) != len(sample_matrices) or not estimates:
        raise InvalidInputError("need the same positive number of estimates and sample matrices")
    a = [frobenius_loss(E, H_true) for E in estimates]
    b = [frobenius_loss(S, H_true) for S in sample_matrices]
    return prial_from_losses(a, b)[0]


_CONFIG_KEYS = ("structure", "p", "n", "nu", "replications", "seed", "estimators", "rho", "eps", "max_iter")


@dataclass(frozen=True)
class ScenarioConfig:
    """One Monte-Carlo design: structure, dimensions, dof grid and estimator list."""

    structure: str = "A"
    p: int = 200
    n: int = 300
    nus: tuple[float, ...] = (4.0, GAUSSIAN)
    replications: int = 50
    seed: int = 0
    estimators: tuple[str, ...] = ("sample", "ls", "nl", "rnl", "rcnl")
    rho: float | None = None
    eps: float = 1e-10
    max_iter: int = 1000

    def __post_init__(self) -> None:
        object.__setattr__(self, "structure", _structure(self.structure))
        object.__setattr__(self, "nus", tuple(parse_nu(v) for v in self.nus))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if self.p < 1 or self.n < 2:
            raise InvalidInputError("need p >= 1 and n >= 2")
        if not self.nus:
            raise InvalidInputError("the nu grid is empty")
        unknown = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if unknown:
            raise InvalidInputError(f"unknown estimator(s): {', '.join(unknown)}")

    @classmethod
    def from_text(cls, text: str, default_seed: int | None = None) -> "ScenarioConfig":
        """Parse ``key = value`` lines; '#' starts a comment, lists are comma-separated.

        ``default_seed`` applies only when the text has no ``seed`` key.
        """
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
        unknown = sorted(set(raw) - set(_CONFIG_KEYS))
        if unknown:
            err = InvalidInputError(f"unknown config key(s): {', '.join(unknown)}")
            err.keys = unknown
            raise err

        def items(key):
            return [v.strip() for v in raw[key].split(",") if v.strip()]

        kwargs: dict = {}
        if default_seed is not None:
            kwargs["seed"] = int(default_seed)
        try:
            if "structure" in raw:
                kwargs["structure"] = raw["structure"]
            for key in ("p", "n", "replications", "seed", "max_iter"):
                if key in raw:
                    kwargs[key] = int(raw[key])
            if "eps" in raw:
                kwargs["eps"] = float(raw["eps"])
            if "rho" in raw:
                kwargs["rho"] = float(raw["rho"])
            if "nu" in raw:
                kwargs["nus"] = tuple(parse_nu(v) for v in items("nu"))
            if "estimators" in raw:
                kwargs["estimators"] = tuple(items("estimators"))
        except ValueError as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"bad config value: {exc}") from exc
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path, default_seed: int | None = None) -> "ScenarioConfig":
        return cls.from_text(Path(path).read_text(), default_seed=default_seed)


@dataclass(frozen=True)
class PrialRow:
    estimator: str
    nu: float
    prial: float
    se: float
    failures: int = 0


@dataclass
class PrialTable:
    """PRIAL per (estimator, nu), with the per-replication losses kept for inspection."""

    rows: list[PrialRow]
    losses: dict[tuple[str, float], NDArray[np.float64]] = field(default_factory=dict)
    sample_losses: dict[float, NDArray[np.float64]] = field(default_factory=dict)

    def get(self, estimator: str, nu: float) -> PrialRow:
        nu = parse_nu(nu)
        for row in self.rows:
            if row.estimator == estimator and row.nu == nu:
                return row
        raise KeyError((estimator, nu))

    def difference(self, first: str, second: str, nu: float) -> tuple[float, float]:
        """PRIAL(first) - PRIAL(second) and the joint standard error sqrt(se1^2 + se2^2)."""
        r1, r2 = self.get(first, nu), self.get(second, nu)
        return r1.prial - r2.prial, math.hypot(r1.se, r2.se)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["estimator", "nu", "prial", "se"])
        for row in self.rows:
            writer.writerow([row.estimator, format_nu(row.nu), f"{row.prial:.10g}", f"{row.se:.10g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Generator for replication ``rep``; independent of how replications are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def run_replication(cfg: ScenarioConfig, nu: float, rep: int) -> dict[str, float]:
    """Losses of the sample matrix and every configured estimator for one draw.

    A failing estimator gets a NaN loss instead of aborting the scenario.
    """
    H = make_dispersion(cfg.structure, cfg.p)
    Y = sample_elliptical(EllipticalSpec(H, nu), cfg.n, replication_rng(cfg.seed, rep))
    S = Y.T @ Y / cfg.n
    out = {"__sample__": frobenius_loss(S, H)}
    for name in cfg.estimators:
        try:
            est, _ = run_estimator(name, Y, rho=cfg.rho, eps=cfg.eps, max_iter=cfg.max_iter)
            out[name] = frobenius_loss(est, H)
        except (RnlShrinkError, np.linalg.LinAlgError):
            out[name] = math.nan
    return out


def _run_cell(args: tuple[ScenarioConfig, float, int]) -> dict[str, float]:
    return run_replication(*args)


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> PrialTable:
    """Run every replication for every nu and aggregate PRIALs.

    Results are gathered by replication index before reduction, so the
    table does not depend on ``jobs``.
    """
    tasks = [(cfg, nu, rep) for nu in cfg.nus for rep in range(cfg.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_cell(t) for t in tasks]

    table = PrialTable(rows=[])
    k = cfg.replications
    for i, nu in enumerate(cfg.nus):
        block = results[i * k : (i + 1) * k]
        b = np.array([r["__sample__"] for r in block])
        table.sample_losses[nu] = b
        for name in cfg.estimators:
            a = np.array([r[name] for r in block])
            table.losses[(name, nu)] = a
            value, se = prial_from_losses(a, b)
            table.rows.append(PrialRow(name, nu, value, se, int(np.sum(~np.isfinite(a)))))
    return table


def iter_rows(table: PrialTable) -> Iterable[tuple[str, str, float, float]]:
    for row in table.rows:
        yield row.estimator, format_nu(row.nu), row.prial, row.se
