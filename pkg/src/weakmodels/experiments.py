"""Monte Carlo experiments: branch reconstruction accuracy and conditional entropy rates.

Traversal ``i`` always draws from ``rng_stream(seed, i)``. Work is split
into chunks of traversals, and every aggregate is a sum over traversals, so
results do not depend on the chunk size or the number of worker threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .markov import (
    MarkovChain,
    forward_log_prob_batch,
    path_entropy,
    posterior_path_entropy_batch,
    sample_paths,
    viterbi_batch,
)
from .model import WeakModelError

__all__ = [
    "ReconConfig",
    "AccuracyCurve",
    "ExpFit",
    "FitError",
    "NoDecayError",
    "EntropyEstimate",
    "run_reconstruction_experiment",
    "fit_exponential_decay",
    "estimate_conditional_entropy_rate",
    "emit_curve",
]

CHUNK = 2000


@dataclass(frozen=True)
class ReconConfig:
    chain: MarkovChain
    start: str
    traversals: int = 10000
    steps: int = 200
    seed: int = 0
    beta_max: int = 100
    workers: int = 1

    def __post_init__(self):
        if self.traversals < 1 or self.steps < 1:
            raise WeakModelError("traversals and steps must be positive")
        if not 0 <= self.beta_max < self.steps:
            raise WeakModelError("beta_max must satisfy 0 <= beta_max < steps")
        if self.start not in self.chain.model.index:
            raise WeakModelError(f"unknown start node {self.start!r}")


@dataclass(frozen=True)
class AccuracyCurve:
    """Accuracy ``alpha`` of the decoded node ``beta`` steps before the end."""

    beta: tuple[int, ...]
    alpha: tuple[float, ...]
    n: tuple[int, ...]

    @property
    def rows(self) -> list[tuple[int, float, int]]:
        return list(zip(self.beta, self.alpha, self.n))


@dataclass(frozen=True)
class ExpFit:
    """``1 - alpha = A * exp(-beta / tau)``."""

    A: float
    tau: float
    rows_used: int


class FitError(WeakModelError):
    pass


class NoDecayError(FitError):
    pass


def _chunks(total: int, size: int = CHUNK) -> list[range]:
    return [range(lo, min(lo + size, total)) for lo in range(0, total, size)]


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_reconstruction_experiment(config: ReconConfig) -> AccuracyCurve:
    """Decode each sampled traversal with Viterbi from the known start and score every lag."""
    chain = config.chain
    T = config.steps
    betas = np.arange(config.beta_max + 1)
    cols = T - 1 - betas

    def work(streams: range) -> np.ndarray:
        truth = sample_paths(chain, config.start, T, config.seed, streams)
        decoded, _ = viterbi_batch(chain, chain.labels[truth], config.start)
        return (decoded[:, cols] == truth[:, cols]).sum(axis=0)

    correct = sum(_map(work, _chunks(config.traversals), config.workers))
    n = config.traversals
    return AccuracyCurve(
        tuple(int(b) for b in betas),
        tuple(float(c) / n for c in correct),
        (n,) * len(betas),
    )


def fit_exponential_decay(curve: AccuracyCurve, min_errors: int = 10) -> ExpFit:
    """Least-squares line through ``ln(1 - alpha)`` against ``beta``.

    Rows whose error rate corresponds to fewer than ``min_errors`` observed
    errors are dropped, since their logarithm is dominated by counting noise.
    """
    if all(a >= 1.0 for a in curve.alpha):
        raise NoDecayError("accuracy is perfect at every lag; there is no error to fit")
    usable = [(b, 1.0 - a) for b, a, n in curve.rows if 1.0 - a >= min_errors / n]
    if len(usable) < 3:
        raise FitError(f"need at least 3 usable rows, found {len(usable)}")
    x = np.array([b for b, _ in usable], dtype=float)
    y = np.log([e for _, e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        raise NoDecayError(f"error rate does not decay with lag (slope {slope:.3g})")
    return ExpFit(float(math.exp(intercept)), float(-1.0 / slope), len(usable))


@dataclass(frozen=True)
class EntropyEstimate:
    """Sample mean of ``H(X_[T] | Y_[T] = y) / T`` with its standard error.

    ``identity_bits_per_step`` estimates the same quantity another way, as
    ``H(X_[T]) / T`` (exact) minus the sample mean of ``-log2 p(y) / T``.
    """

    T: int
    n_samples: int
    bits_per_step: float
    stderr: float
    identity_bits_per_step: float
    identity_stderr: float
    path_entropy_rate: float

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.stderr, self.identity_stderr)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    if len(values) < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(len(values)))


def estimate_conditional_entropy_rate(
    chain: MarkovChain,
    start: Optional[str] = None,
    T: int = 5000,
    n_samples: int = 50,
    seed: int = 0,
    workers: int = 1,
) -> EntropyEstimate:
    """Average exact posterior path entropy per step over sampled traversals.

    Traversals start at ``start`` (default: the first declared node), and
    the decoder is told the start.
    """
    if T < 10:
        raise WeakModelError("T must be at least 10")
    if n_samples < 1:
        raise WeakModelError("n_samples must be positive")
    if start is None:
        start = chain.model.nodes[0]

    def work(streams: range) -> tuple[np.ndarray, np.ndarray]:
        paths = sample_paths(chain, start, T, seed, streams)
        colors = chain.labels[paths]
        return (posterior_path_entropy_batch(chain, colors, start),
                -forward_log_prob_batch(chain, colors, start))

    parts = _map(work, _chunks(n_samples, 25), workers)
    post = np.concatenate([p for p, _ in parts]) / T
    obs = np.concatenate([o for _, o in parts]) / T
    mean, se = _mean_se(np.maximum(post, 0.0))
    obs_mean, obs_se = _mean_se(obs)
    hx = path_entropy(chain, T, start) / T
    return EntropyEstimate(T, n_samples, mean, se, hx - obs_mean, obs_se, hx)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_curve(result: AccuracyCurve | EntropyEstimate, path) -> None:
    """Write an accuracy curve or entropy estimate as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if isinstance(result, AccuracyCurve):
            writer.writerow(["beta", "alpha", "n"])
            for beta, alpha, n in result.rows:
                writer.writerow([beta, _fmt(alpha), n])
        elif isinstance(result, EntropyEstimate):
            writer.writerow(["T", "n_samples", "bits_per_step", "stderr"])
            writer.writerow([result.T, result.n_samples,
                             _fmt(result.bits_per_step), _fmt(result.stderr)])
        else:
            raise TypeError(f"cannot emit {type(result).__name__}")
