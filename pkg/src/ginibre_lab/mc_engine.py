"""Seeded random streams and mergeable Monte Carlo accumulators.

Streams are counter-based (Philox) and keyed by (seed, stream_id), so any
worker can recreate its stream independently and results never depend on
scheduling order.  Accumulators use exact compensated summation (math.fsum
over partials), so merging order cannot move a mean by more than ~1e-16
relative.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


class InsufficientSamplesError(RuntimeError):
    """Raised when an estimate is requested from fewer than MIN_SAMPLES values."""


MIN_SAMPLES = 100


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent reproducible generator for the pair (seed, stream_id)."""
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def substreams(seed: int, n: int, offset: int = 0) -> list[np.random.Generator]:
    """n parallel streams sharing a seed, ids offset..offset+n-1."""
    return [stream(seed, offset + i) for i in range(n)]


def resolve_threads(cli_value: int | None = None) -> int:
    """Worker count: explicit argument > GINIBRE_LAB_THREADS > cpu count."""
    if cli_value is not None and cli_value > 0:
        return cli_value
    env = os.environ.get("GINIBRE_LAB_THREADS", "")
    if env.strip():
        v = int(env)
        if v > 0:
            return v
    return os.cpu_count() or 1


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo result with enough metadata to reproduce it."""

    value: float
    stderr: float
    n_samples: int
    seed: int
    method: str

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.stderr

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "method": self.method,
        }


@dataclass
class Accumulator:
    """Mergeable first/second-moment accumulator with exact partial sums.

    Partials are kept as lists and reduced with math.fsum, so the result is
    the correctly rounded sum of all inputs regardless of merge order.
    """

    n: int = 0
    _sum_parts: list[float] = field(default_factory=list)
    _sumsq_parts: list[float] = field(default_factory=list)

    def add(self, values) -> None:
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            return
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite value fed to accumulator")
        self.n += arr.size
        self._sum_parts.append(math.fsum(arr.tolist()))
        self._sumsq_parts.append(math.fsum((arr * arr).tolist()))
        self._compact()

    def merge(self, other: "Accumulator") -> None:
        self.n += other.n
        self._sum_parts.extend(other._sum_parts)
        self._sumsq_parts.extend(other._sumsq_parts)
        self._compact()

    def _compact(self, limit: int = 4096) -> None:
        # keep partial lists bounded without losing the fsum guarantee
        if len(self._sum_parts) > limit:
            self._sum_parts = [math.fsum(self._sum_parts)]
            self._sumsq_parts = [math.fsum(self._sumsq_parts)]

    @property
    def total(self) -> float:
        return math.fsum(self._sum_parts)

    @property
    def total_sq(self) -> float:
        return math.fsum(self._sumsq_parts)

    def mean(self) -> float:
        if self.n == 0:
            raise InsufficientSamplesError("empty accumulator")
        return self.total / self.n

    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.n < 2:
            raise InsufficientSamplesError("need at least 2 samples")
        m = self.mean()
        # fsum-accurate sum of squares; clamp tiny negatives from cancellation
        v = (self.total_sq - self.n * m * m) / (self.n - 1)
        return max(v, 0.0)

    def stderr(self) -> float:
        return math.sqrt(self.variance() / self.n)

    def estimate(self, seed: int, method: str) -> MCEstimate:
        if self.n < MIN_SAMPLES:
            raise InsufficientSamplesError(
                f"{self.n} samples < required minimum {MIN_SAMPLES}"
            )
        return MCEstimate(
            value=self.mean(),
            stderr=self.stderr(),
            n_samples=self.n,
            seed=seed,
            method=method,
        )


def accumulate(values, seed: int, method: str) -> MCEstimate:
    """One-shot estimate from an array of iid draws (>= MIN_SAMPLES of them)."""
    acc = Accumulator()
    acc.add(values)
    return acc.estimate(seed=seed, method=method)


def parallel_map(fn, items, threads: int | None = None):
    """Map fn over items with a process pool; order of results fixed by items.

    Falls back to serial when a single worker is requested (or pool creation
    is unavailable in the host environment).
    """
    n_workers = resolve_threads(threads)
    items = list(items)
    if n_workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    try:
        with ProcessPoolExecutor(max_workers=min(n_workers, len(items))) as pool:
            return list(pool.map(fn, items))
    except (OSError, PermissionError):
        return [fn(x) for x in items]
