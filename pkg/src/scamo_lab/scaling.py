"""IsoFLOPs frontier extraction and scaling-law fitting.

Runs are bucketed by log10 compute and the best (lowest normalized loss) run
per bucket forms the frontier. Power laws are ordinary least squares in
log10-log10 space; the loss law is least squares of loss against log10
compute. No constraint ties the fitted laws together; their joint drift from
the compute identity is a planner-level diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RunRecord
from .flops import params_non_embedding, params_vocab

__all__ = [
    "PowerLawFit",
    "LogLawFit",
    "ScalingFits",
    "FrontierPoint",
    "pareto_frontier",
    "fit_power_law",
    "fit_log_law",
    "fit_all",
]


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PowerLawFit:
    """y = 10**log10_coef * x**exponent, with the fit's r2 when known."""

    log10_coef: float
    exponent: float
    r2: float | None = None

    def __post_init__(self) -> None:
        _check_finite("log10_coef", self.log10_coef)
        _check_finite("exponent", self.exponent)
        if self.r2 is not None:
            _check_finite("r2", self.r2)

    def evaluate(self, x: float) -> float:
        if not (math.isfinite(x) and x > 0):
            raise ValueError(f"x must be positive and finite, got {x!r}")
        return 10.0**self.log10_coef * x**self.exponent


@dataclass(frozen=True)
class LogLawFit:
    """loss = slope * log10(c) + intercept, with the fit's r2 when known."""

    slope: float
    intercept: float
    r2: float | None = None

    def __post_init__(self) -> None:
        _check_finite("slope", self.slope)
        _check_finite("intercept", self.intercept)
        if self.r2 is not None:
            _check_finite("r2", self.r2)

    def evaluate(self, c: float) -> float:
        if not (math.isfinite(c) and c > 0):
            raise ValueError(f"c must be positive and finite, got {c!r}")
        return self.slope * math.log10(c) + self.intercept


_POWER_KEYS = ("log10_coef", "exponent", "r2")
_LOG_KEYS = ("slope", "intercept", "r2")
_FIT_NAMES = ("nv_vs_c", "nnv_vs_c", "d_vs_c", "nv_vs_nnv", "loss_vs_c")


@dataclass(frozen=True)
class ScalingFits:
    """The five fitted laws of one scaling study."""

    nv_vs_c: PowerLawFit
    nnv_vs_c: PowerLawFit
    d_vs_c: PowerLawFit
    nv_vs_nnv: PowerLawFit
    loss_vs_c: LogLawFit

    def to_json_dict(self) -> dict:
        out: dict = {}
        for name in _FIT_NAMES[:4]:
            fit = getattr(self, name)
            out[name] = {"log10_coef": fit.log10_coef, "exponent": fit.exponent, "r2": fit.r2}
        out["loss_vs_c"] = {
            "slope": self.loss_vs_c.slope,
            "intercept": self.loss_vs_c.intercept,
            "r2": self.loss_vs_c.r2,
        }
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ScalingFits":
        if not isinstance(obj, dict):
            raise ValueError("fits document must be a JSON object")
        missing = sorted(set(_FIT_NAMES) - set(obj))
        if missing:
            raise ValueError(f"fits document missing: {', '.join(missing)}")
        kwargs = {}
        for name in _FIT_NAMES[:4]:
            entry = obj[name]
            if not isinstance(entry, dict) or set(entry) != set(_POWER_KEYS):
                raise ValueError(f"{name} must be an object with keys {_POWER_KEYS}")
            kwargs[name] = PowerLawFit(
                log10_coef=float(entry["log10_coef"]),
                exponent=float(entry["exponent"]),
                r2=None if entry["r2"] is None else float(entry["r2"]),
            )
        entry = obj["loss_vs_c"]
        if not isinstance(entry, dict) or set(entry) != set(_LOG_KEYS):
            raise ValueError(f"loss_vs_c must be an object with keys {_LOG_KEYS}")
        kwargs["loss_vs_c"] = LogLawFit(
            slope=float(entry["slope"]),
            intercept=float(entry["intercept"]),
            r2=None if entry["r2"] is None else float(entry["r2"]),
        )
        return cls(**kwargs)


@dataclass(frozen=True)
class FrontierPoint:
    """Best run in one log10-compute bucket plus its fitted quantities.

    n_v = vocab_size * d_model and n_nv = params_non_embedding(config) come
    from the winning run; d_tokens is its token count.
    """

    flops_bucket_log10: float
    run: RunRecord
    n_nv: float
    n_v: float
    d_tokens: float
    loss: float


def pareto_frontier(
    runs: Sequence[RunRecord],
    bin_width_log10: float = 0.25,
    ff_ratio: int = 4,
) -> list[FrontierPoint]:
    """Loss-minimizing run per compute bucket, ascending in compute.

    Buckets are floor(log10(flops) / bin_width) * bin_width. Loss ties prefer
    smaller n_nv, then smaller n_v, then the lexicographically smaller run_id.
    Every run must have flops set.
    """
    if not (math.isfinite(bin_width_log10) and bin_width_log10 > 0):
        raise ValueError(f"bin_width_log10 must be positive, got {bin_width_log10!r}")
    if len(runs) == 0:
        raise ValueError("no runs")
    best: dict[int, tuple[tuple, RunRecord, int, int]] = {}
    for run in runs:
        if run.flops is None:
            raise ValueError(f"run {run.run_id!r} has no flops value")
        bucket = math.floor(math.log10(run.flops) / bin_width_log10)
        n_nv = params_non_embedding(run.config(ff_ratio))
        n_v = params_vocab(run.vocab_size, run.d_model)
        key = (run.normalized_loss, n_nv, n_v, run.run_id)
        if bucket not in best or key < best[bucket][0]:
            best[bucket] = (key, run, n_nv, n_v)
    frontier = []
    for bucket in sorted(best):
        _, run, n_nv, n_v = best[bucket]
        frontier.append(
            FrontierPoint(
                flops_bucket_log10=bucket * bin_width_log10,
                run=run,
                n_nv=float(n_nv),
                n_v=float(n_v),
                d_tokens=float(run.tokens_trained),
                loss=run.normalized_loss,
            )
        )
    return frontier


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line, returning (slope, intercept, r2).

    Constant y short-circuits to a flat line with r2 = 1.0. At zero total
    variance, r2 is 1.0 when residuals vanish and 0.0 otherwise.
    """
    if np.all(y == y[0]):
        return 0.0, float(y[0]), 1.0
    xm = x.mean()
    ym = y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("x values must not all be equal")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    ss_res = float(((y - (slope * x + intercept)) ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_res == 0.0 else (0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot)
    return float(slope), float(intercept), float(r2)


def _check_fit_inputs(xs, ys, positive_y: bool) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be 1-D sequences of equal length")
    if xs.size < 2:
        raise ValueError("need at least 2 samples to fit")
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("fit inputs must be finite")
    if (xs <= 0).any():
        raise ValueError("xs must be positive")
    if positive_y and (ys <= 0).any():
        raise ValueError("ys must be positive for a power-law fit")
    return xs, ys


def fit_power_law(xs, ys) -> PowerLawFit:
    """OLS fit of log10(y) on log10(x); exponent is the slope."""
    xs, ys = _check_fit_inputs(xs, ys, positive_y=True)
    slope, intercept, r2 = _ols(np.log10(xs), np.log10(ys))
    return PowerLawFit(log10_coef=intercept, exponent=slope, r2=r2)


def fit_log_law(cs, losses) -> LogLawFit:
    """OLS fit of loss on log10(c); losses may be negative."""
    cs, losses = _check_fit_inputs(cs, losses, positive_y=False)
    slope, intercept, r2 = _ols(np.log10(cs), losses)
    return LogLawFit(slope=slope, intercept=intercept, r2=r2)


def fit_all(frontier: Sequence[FrontierPoint]) -> ScalingFits:
    """All five laws from a frontier of at least two points.

    The x variable for the *_vs_c fits is each winning run's own flops value,
    not the bucket edge.
    """
    if len(frontier) < 2:
        raise ValueError("need at least 2 frontier points")
    for point in frontier:
        if point.run.flops is None:
            raise ValueError(f"frontier run {point.run.run_id!r} has no flops value")
    flops = np.array([p.run.flops for p in frontier], dtype=np.float64)
    n_v = np.array([p.n_v for p in frontier], dtype=np.float64)
    n_nv = np.array([p.n_nv for p in frontier], dtype=np.float64)
    d_tokens = np.array([p.d_tokens for p in frontier], dtype=np.float64)
    loss = np.array([p.loss for p in frontier], dtype=np.float64)
    return ScalingFits(
        nv_vs_c=fit_power_law(flops, n_v),
        nnv_vs_c=fit_power_law(flops, n_nv),
        d_vs_c=fit_power_law(flops, d_tokens),
        nv_vs_nnv=fit_power_law(n_nv, n_v),
        loss_vs_c=fit_log_law(flops, loss),
    )
