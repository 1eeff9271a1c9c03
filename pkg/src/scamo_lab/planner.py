"""Compute-budget planning on top of fitted scaling laws.

plan_budget evaluates the vocab, non-vocab, and data laws at a budget and
reports how far their joint recommendation drifts from the compute identity
C = 6 * (N_nv + N_v) * D as a log10 residual. The residual is surfaced, never
silently absorbed; callers may opt into rescaling the token count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .scaling import LogLawFit, PowerLawFit, ScalingFits

__all__ = [
    "FITS_PRESETS",
    "REFERENCE_PRESETS",
    "ReferenceSelection",
    "BudgetPlan",
    "predict_loss",
    "flops_for_loss",
    "nearest_power_of_two",
    "plan_budget",
    "consistency_report",
    "vocab_for_model",
    "scale_faster_report",
]


@dataclass(frozen=True)
class ReferenceSelection:
    """A published (n_nv, vocab_size, d_tokens) choice to sanity-check plans against."""

    n_nv: float
    vocab_size: int
    d_tokens: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n_nv) and self.n_nv > 0):
            raise ValueError("n_nv must be positive and finite")
        if not isinstance(self.vocab_size, int) or self.vocab_size < 1:
            raise ValueError("vocab_size must be a positive integer")
        if not (math.isfinite(self.d_tokens) and self.d_tokens > 0):
            raise ValueError("d_tokens must be positive and finite")


# Shipped coefficient preset. r2 is only known for the vocab-vs-params law;
# the rest were published without one and stay None.
FITS_PRESETS: dict[str, ScalingFits] = {
    "scamo-paper": ScalingFits(
        nv_vs_c=PowerLawFit(log10_coef=-5.29, exponent=0.75, r2=None),
        nnv_vs_c=PowerLawFit(log10_coef=-0.52, exponent=0.57, r2=None),
        d_vs_c=PowerLawFit(log10_coef=-0.05, exponent=0.43, r2=None),
        nv_vs_nnv=PowerLawFit(log10_coef=-5.604, exponent=1.467, r2=0.95),
        loss_vs_c=LogLawFit(slope=-1.062, intercept=13.839, r2=None),
    ),
}

# The selection published alongside the preset at a 1e18 FLOPs budget.
REFERENCE_PRESETS: dict[str, ReferenceSelection] = {
    "scamo-paper": ReferenceSelection(n_nv=3e9, vocab_size=65536, d_tokens=10**7.5),
}

CONSISTENCY_TOLERANCE_LOG10 = 0.35


def predict_loss(c_flops: float, law: LogLawFit) -> float:
    """Loss the fitted log law predicts at a compute budget."""
    return law.evaluate(c_flops)


def flops_for_loss(target_loss: float, law: LogLawFit) -> float:
    """Invert the log law: the budget at which it predicts target_loss."""
    if not math.isfinite(target_loss):
        raise ValueError(f"target_loss must be finite, got {target_loss!r}")
    if law.slope == 0.0:
        raise ValueError("log law with zero slope cannot be inverted")
    return 10.0 ** ((target_loss - law.intercept) / law.slope)


def nearest_power_of_two(n: int) -> int:
    """Nearest power of two in log2 space; exact ties round up."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    k = n.bit_length() - 1  # floor(log2 n)
    # closer to 2**(k+1) iff log2(n) >= k + 0.5, i.e. n**2 >= 2**(2k+1)
    return 1 << (k + 1) if n * n >= 1 << (2 * k + 1) else 1 << k


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class BudgetPlan:
    """Law-optimal allocation for one compute budget."""

    flops_budget: float
    n_nv: float
    n_v: float
    vocab_size: int
    vocab_pow2: int
    d_tokens: float
    predicted_loss: float
    constraint_residual_log10: float

    def to_json_dict(self) -> dict:
        return {
            "flops_budget": self.flops_budget,
            "n_nv": self.n_nv,
            "n_v": self.n_v,
            "vocab_size": self.vocab_size,
            "vocab_pow2": self.vocab_pow2,
            "d_tokens": self.d_tokens,
            "predicted_loss": self.predicted_loss,
            "constraint_residual_log10": self.constraint_residual_log10,
        }


def plan_budget(
    c_flops: float,
    fits: ScalingFits,
    d_model: int,
    rescale_d: bool = False,
) -> BudgetPlan:
    """Evaluate the fitted laws at a budget.

    vocab_size = round(n_v / d_model), with its nearest power of two reported
    alongside. constraint_residual_log10 = log10(6 * (n_nv + n_v) * d / c)
    measures the laws' drift from the compute identity. With rescale_d the
    token count is divided by 10**residual, restoring the identity, and the
    reported residual becomes (numerically) zero.
    """
    if not (math.isfinite(c_flops) and c_flops > 0):
        raise ValueError(f"c_flops must be positive and finite, got {c_flops!r}")
    if not isinstance(d_model, int) or isinstance(d_model, bool) or d_model < 1:
        raise ValueError(f"d_model must be a positive integer, got {d_model!r}")
    n_v = fits.nv_vs_c.evaluate(c_flops)
    n_nv = fits.nnv_vs_c.evaluate(c_flops)
    d_tokens = fits.d_vs_c.evaluate(c_flops)
    predicted = fits.loss_vs_c.evaluate(c_flops)
    residual = math.log10(6.0 * (n_nv + n_v) * d_tokens / c_flops)
    if rescale_d:
        d_tokens /= 10.0**residual
        residual = math.log10(6.0 * (n_nv + n_v) * d_tokens / c_flops)
    vocab = max(1, _half_up(n_v / d_model))
    return BudgetPlan(
        flops_budget=float(c_flops),
        n_nv=n_nv,
        n_v=n_v,
        vocab_size=vocab,
        vocab_pow2=nearest_power_of_two(vocab),
        d_tokens=d_tokens,
        predicted_loss=predicted,
        constraint_residual_log10=residual,
    )


def consistency_report(
    plan: BudgetPlan,
    reference: ReferenceSelection,
    tolerance_log10: float = CONSISTENCY_TOLERANCE_LOG10,
) -> dict:
    """Per-quantity log10 gaps between a plan and a reference selection.

    vocab_size stands in for n_v; the d_model factor cancels in the gap.
    """
    if not (math.isfinite(tolerance_log10) and tolerance_log10 > 0):
        raise ValueError(f"tolerance_log10 must be positive, got {tolerance_log10!r}")
    gaps = {
        "n_nv": math.log10(plan.n_nv / reference.n_nv),
        "vocab_size": math.log10(plan.vocab_size / reference.vocab_size),
        "d_tokens": math.log10(plan.d_tokens / reference.d_tokens),
    }
    within = {name: abs(gap) <= tolerance_log10 for name, gap in gaps.items()}
    return {
        "reference": {
            "n_nv": reference.n_nv,
            "vocab_size": reference.vocab_size,
            "d_tokens": reference.d_tokens,
        },
        "tolerance_log10": tolerance_log10,
        "log10_gaps": gaps,
        "within_tolerance": within,
        "agrees": all(within.values()),
    }


class VocabForModel(NamedTuple):
    n_v: float
    vocab_size: int
    vocab_pow2: int


def vocab_for_model(n_nv: float, law: PowerLawFit, d_model: int) -> VocabForModel:
    """Vocabulary recommended for a model with n_nv non-embedding params."""
    if not isinstance(d_model, int) or isinstance(d_model, bool) or d_model < 1:
        raise ValueError(f"d_model must be a positive integer, got {d_model!r}")
    n_v = law.evaluate(n_nv)
    vocab = max(1, _half_up(n_v / d_model))
    return VocabForModel(n_v=n_v, vocab_size=vocab, vocab_pow2=nearest_power_of_two(vocab))


def scale_faster_report(fits: ScalingFits) -> dict:
    """Relative growth exponents across the three compute laws.

    nv_vs_nnv_exponent = a/b is how fast vocab params grow per unit growth of
    non-vocab params; d_vs_nnv_exponent = b/c compares non-vocab params to
    data. The verdicts say whether each ratio exceeds 1.
    """
    a = fits.nv_vs_c.exponent
    b = fits.nnv_vs_c.exponent
    c = fits.d_vs_c.exponent
    if b == 0.0 or c == 0.0:
        raise ValueError("exponent ratios need nonzero denominators")
    nv_vs_nnv = a / b
    d_vs_nnv = b / c
    return {
        "nv_vs_nnv_exponent": nv_vs_nnv,
        "d_vs_nnv_exponent": d_vs_nnv,
        "verdicts": [nv_vs_nnv > 1.0, d_vs_nnv > 1.0],
    }
