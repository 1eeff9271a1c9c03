"""Run-log records, model shape presets, and codebook usage metrics.

Training runs travel as JSONL, one object per line, with the fields of
RunRecord. Loading is strict: any malformed line fails the whole load, and
records missing a flops value get it filled from the 6 * (N_nv + N_v) * D
approximation at ff_ratio 4.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

import numpy as np

from .flops import ModelConfig, flops_approx, params_non_embedding, params_vocab

__all__ = [
    "MODEL_SHAPE_PRESETS",
    "RUN_FIELDS",
    "RunRecord",
    "RunLogError",
    "load_runs",
    "CodeUsageHistogram",
    "CodebookMetrics",
    "codebook_metrics",
]

# Published model shapes: name -> (n_layers, n_heads, d_model).
MODEL_SHAPE_PRESETS: dict[str, tuple[int, int, int]] = {
    "scamo-44m": (8, 8, 512),
    "scamo-111m": (12, 12, 768),
    "scamo-343m": (24, 16, 1024),
    "scamo-775m": (36, 20, 1280),
    "scamo-1.4b": (48, 24, 1536),
    "scamo-3b": (24, 32, 3200),
}

# JSONL schema, in serialization order. flops is optional on input.
RUN_FIELDS = (
    "run_id",
    "n_layers",
    "n_heads",
    "d_model",
    "n_ctx",
    "vocab_size",
    "tokens_trained",
    "flops",
    "normalized_loss",
)

_INT_FIELDS = ("n_layers", "n_heads", "d_model", "n_ctx", "vocab_size", "tokens_trained")


@dataclass(frozen=True)
class RunRecord:
    """One training run from a scaling sweep.

    normalized_loss is a per-token loss in nats measured against a baseline,
    so negative values are legal (the model beats the baseline).
    """

    run_id: str
    n_layers: int
    n_heads: int
    d_model: int
    n_ctx: int
    vocab_size: int
    tokens_trained: int
    flops: float | None
    normalized_loss: float

    def __post_init__(self) -> None:
        if not isinstance(self.run_id, str) or not self.run_id:
            raise ValueError("run_id must be a non-empty string")
        for name in _INT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        if self.flops is not None and not (math.isfinite(self.flops) and self.flops > 0):
            raise ValueError(f"flops must be positive and finite, got {self.flops!r}")
        if not math.isfinite(self.normalized_loss):
            raise ValueError(f"normalized_loss must be finite, got {self.normalized_loss!r}")

    def config(self, ff_ratio: int = 4) -> ModelConfig:
        return ModelConfig(
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            d_model=self.d_model,
            n_ctx=self.n_ctx,
            n_vocab=self.vocab_size,
            ff_ratio=ff_ratio,
        )

    @property
    def n_v(self) -> int:
        return params_vocab(self.vocab_size, self.d_model)

    def n_nv(self, ff_ratio: int = 4) -> int:
        return params_non_embedding(self.config(ff_ratio))

    def with_flops_filled(self, ff_ratio: int = 4) -> "RunRecord":
        """Return self, or a copy with flops = 6 * (N_nv + N_v) * D when absent."""
        if self.flops is not None:
            return self
        filled = flops_approx(self.n_nv(ff_ratio), self.n_v, self.tokens_trained)
        return dataclasses.replace(self, flops=filled)

    def to_dict(self) -> dict:
        """Field dict in schema order, for JSONL emission."""
        return {name: getattr(self, name) for name in RUN_FIELDS}


class RunLogError(ValueError):
    """A run log had malformed lines. errors holds (line_number, message) pairs."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = errors
        head = "; ".join(f"line {n}: {msg}" for n, msg in errors[:5])
        tail = "" if len(errors) <= 5 else f" (+{len(errors) - 5} more)"
        super().__init__(f"invalid run log: {head}{tail}")


def _record_from_json(obj: object) -> RunRecord:
    if not isinstance(obj, dict):
        raise ValueError("line must be a JSON object")
    unknown = sorted(set(obj) - set(RUN_FIELDS))
    if unknown:
        raise ValueError(f"unexpected field(s): {', '.join(unknown)}")
    missing = sorted(set(RUN_FIELDS) - {"flops"} - set(obj))
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    kwargs: dict = {"run_id": obj["run_id"]}
    for name in _INT_FIELDS:
        value = obj[name]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"{name} must be a JSON integer, got {value!r}")
        kwargs[name] = value
    flops = obj.get("flops")
    if flops is not None and not isinstance(flops, (int, float)):
        raise ValueError(f"flops must be a number, got {flops!r}")
    kwargs["flops"] = None if flops is None else float(flops)
    loss = obj["normalized_loss"]
    if not isinstance(loss, (int, float)) or isinstance(loss, bool):
        raise ValueError(f"normalized_loss must be a number, got {loss!r}")
    kwargs["normalized_loss"] = float(loss)
    return RunRecord(**kwargs)


def load_runs(source: IO[str] | IO[bytes] | Iterable[str] | Iterable[bytes] | str | bytes) -> list[RunRecord]:
    """Parse a JSONL run log in strict mode.

    source may be an open file, an iterable of lines, or the whole document as
    one string. Blank lines are skipped. Every malformed line is reported with
    its line number in a single RunLogError; nothing is returned unless the
    entire log is valid. Records without flops get it filled from the compute
    approximation.
    """
    if isinstance(source, (str, bytes)):
        source = source.splitlines()
    records: list[RunRecord] = []
    errors: list[tuple[int, str]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line:
            continue
        try:
            records.append(_record_from_json(json.loads(line)).with_flops_filled())
        except (ValueError, TypeError) as exc:
            msg = str(exc) or exc.__class__.__name__
            errors.append((lineno, msg))
    if errors:
        raise RunLogError(errors)
    return records


@dataclass
class CodeUsageHistogram:
    """Usage counts per quantizer code; counts[k] is how often code k fired."""

    counts: np.ndarray
    total: int | None = None

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-D array")
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.asarray(counts, dtype=np.float64)
            as_int = rounded.astype(np.int64)
            if not np.array_equal(as_int, rounded):
                raise ValueError("counts must be integers")
            counts = as_int
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        self.counts = counts.astype(np.int64)
        total = int(self.counts.sum())
        if self.total is None:
            self.total = total
        elif self.total != total:
            raise ValueError(f"total ({self.total}) does not match sum of counts ({total})")


class CodebookMetrics(NamedTuple):
    utilization: float
    shannon_entropy_nats: float
    exp_entropy: float


def codebook_metrics(hist: CodeUsageHistogram) -> CodebookMetrics:
    """Utilization, Shannon entropy (nats), and exponential entropy of usage.

    Zero-count codes contribute nothing to the entropy (0 * log 0 = 0).
    exp_entropy is the effective number of codes in use, at most K, equal to K
    exactly when usage is uniform.
    """
    if hist.total == 0:
        raise ValueError("no observations: histogram total is zero")
    counts = hist.counts
    p = counts[counts > 0] / hist.total
    entropy = float(-(p * np.log(p)).sum())
    return CodebookMetrics(
        utilization=float(np.count_nonzero(counts) / counts.size),
        shannon_entropy_nats=entropy,
        exp_entropy=float(np.exp(entropy)),
    )
