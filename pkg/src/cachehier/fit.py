"""Calibrate the power-law access-time model t(A) = tau * (A/alpha)**beta
from (cache size, access time) measurements, e.g. circuit-simulator output.

The model has two identifiable parameters in log space (slope and
intercept), so alpha is anchored to the smallest sample size unless the
caller fixes it; tau absorbs the scale.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .params import DomainError

__all__ = [
    "AccessTimeSample",
    "FitResult",
    "InsufficientDataError",
    "fit_power_law",
    "read_samples_csv",
]

CSV_HEADER = ("size_bytes", "latency_ns")


class InsufficientDataError(ValueError):
    """Too few distinct sample sizes to identify the model."""


@dataclass(frozen=True)
class AccessTimeSample:
    size: float      # bytes
    latency: float   # ns

    def __post_init__(self):
        if not self.size > 0:
            raise DomainError(f"sample size must be > 0, got {self.size}")
        if not self.latency > 0:
            raise DomainError(f"sample latency must be > 0, got {self.latency}")


@dataclass(frozen=True)
class FitResult:
    tau: float
    alpha: float
    beta: float
    max_rel_error: float
    mean_rel_error: float
    per_sample_rel_error: tuple[float, ...]

    def predict(self, size):
        return self.tau * (np.asarray(size, dtype=float) / self.alpha) ** self.beta


def fit_power_law(samples: Sequence[AccessTimeSample],
                  fixed_alpha: Optional[float] = None) -> FitResult:
    """Ordinary least squares in log-log space.

    Fits log(latency) = log(tau) + beta * (log(size) - log(alpha)).
    Relative errors are reported in linear space, |fit - observed| / observed.
    """
    if fixed_alpha is not None and not fixed_alpha > 0:
        raise DomainError(f"fixed_alpha must be > 0, got {fixed_alpha}")
    sizes = np.array([s.size for s in samples], dtype=float)
    lats = np.array([s.latency for s in samples], dtype=float)
    if len(np.unique(sizes)) < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct sizes, got {len(np.unique(sizes))}")

    alpha = float(fixed_alpha) if fixed_alpha is not None else float(sizes.min())
    z = np.log(sizes / alpha)
    y = np.log(lats)
    zbar, ybar = z.mean(), y.mean()
    beta = float(np.sum((z - zbar) * (y - ybar)) / np.sum((z - zbar) ** 2))
    tau = float(np.exp(ybar - beta * zbar))
    if not 0.0 < beta < 1.5:
        raise DomainError(
            f"fitted exponent {beta:.4g} is outside the sane band (0, 1.5); "
            "the samples do not look like power-law access times")

    pred = tau * (sizes / alpha) ** beta
    rel = np.abs(pred - lats) / lats
    return FitResult(
        tau=tau,
        alpha=alpha,
        beta=beta,
        max_rel_error=float(rel.max()),
        mean_rel_error=float(rel.mean()),
        per_sample_rel_error=tuple(float(r) for r in rel),
    )


def read_samples_csv(source) -> list[AccessTimeSample]:
    """Read samples from a CSV file (path or text stream) with header
    ``size_bytes,latency_ns``. Accepts LF or CRLF line endings."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_samples_csv(fh)
    assert isinstance(source, io.TextIOBase) or hasattr(source, "read")
    reader = csv.reader(source)
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DomainError("empty sample file")
    header = tuple(cell.strip() for cell in rows[0])
    if header != CSV_HEADER:
        raise DomainError(
            f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DomainError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            size, lat = float(row[0]), float(row[1])
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from None
        samples.append(AccessTimeSample(size=size, latency=lat))
    if not samples:
        raise DomainError("sample file has a header but no data rows")
    return samples
