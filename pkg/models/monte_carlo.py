"""
Monte Carlo Infrastructure

Determinism contract shared by every stochastic engine: random numbers come
from counter-based Philox streams keyed by (seed, *key), so a given trial,
word or sample always sees the same numbers no matter how the work is split
across threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from models.exceptions import SttLabError

logger = logging.getLogger(__name__)

# Trials are processed in blocks of this size; the block index is part of the
# stream key, so it must never depend on the worker count.
BLOCK_SIZE = 4096

Z95 = stats.norm.ppf(0.975)


@dataclass(frozen=True)
class McConfig:
    """
    Seed, sample count and variation level for a stochastic run.

    Args:
        seed: 64-bit master seed
        trials: number of Monte Carlo trials (>= 1)
        sigma_fraction: relative standard deviation applied to varied parameters
        workers: thread count used to evaluate trial blocks
        tail_model: how write-failure probabilities are read off the sampled
            margins; 'empirical' counts failing samples, 'gaussian' fits a
            normal to the margin and integrates its tail
    """
    seed: int = 1
    trials: int = 10_000
    sigma_fraction: float = 0.02
    workers: int = 1
    tail_model: str = 'empirical'

    def __post_init__(self):
        if self.trials < 1:
            raise SttLabError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2 ** 64:
            raise SttLabError(f"seed must fit in 64 bits, got {self.seed}")
        if self.sigma_fraction < 0:
            raise SttLabError("sigma_fraction must be non-negative")
        if self.workers < 1:
            raise SttLabError("workers must be >= 1")
        if self.tail_model not in ('empirical', 'gaussian'):
            raise SttLabError(f"unknown tail_model {self.tail_model!r}")

    def with_overrides(self, **changes):
        """Copy with selected fields replaced (flag-over-file precedence)."""
        changes = {key: value for key, value in changes.items() if value is not None}
        return replace(self, **changes)

    def stream(self, *key):
        """Independent generator for the given integer key path."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(sequence))

    def blocks(self):
        """(block_index, start, stop) triples covering all trials."""
        n_blocks = math.ceil(self.trials / BLOCK_SIZE)
        return [(b, b * BLOCK_SIZE, min(self.trials, (b + 1) * BLOCK_SIZE))
                for b in range(n_blocks)]

    def map_blocks(self, func):
        """
        Evaluate func(block_index, start, stop) over every trial block.

        Results come back in block order, which together with block-keyed
        streams makes the outcome independent of the worker count.
        """
        blocks = self.blocks()
        if self.workers == 1 or len(blocks) == 1:
            return [func(*block) for block in blocks]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(func, *block) for block in blocks]
            return [future.result() for future in futures]


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a two-sided 95% interval."""
    value: float
    low: float
    high: float
    trials: int
    one_sided: bool = False

    @property
    def half_width(self):
        return 0.5 * (self.high - self.low)

    def contains(self, reference):
        """
        Whether a reference value lies inside the interval.

        Args:
            reference: Value to test, e.g. a closed-form prediction

        Returns:
            bool: low <= reference <= high, bounds included
        """
        return self.low <= reference <= self.high


def binomial_sigma(p, trials):
    """Standard error of a proportion p estimated from trials samples."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def binomial_estimate(successes, trials):
    """
    Proportion with a 95% normal-approximation interval.

    With zero (or all) successes the interval falls back to the rule-of-three
    one-sided bound.
    """
    if trials < 1:
        raise SttLabError("binomial_estimate needs at least one trial")
    p_hat = successes / trials
    if successes == 0:
        return Estimate(0.0, 0.0, min(1.0, 3.0 / trials), trials, one_sided=True)
    if successes == trials:
        return Estimate(1.0, max(0.0, 1.0 - 3.0 / trials), 1.0, trials, one_sided=True)
    sigma = binomial_sigma(p_hat, trials)
    return Estimate(p_hat, max(0.0, p_hat - Z95 * sigma), min(1.0, p_hat + Z95 * sigma), trials)


def mean_estimate(samples):
    """Sample mean with a CLT 95% interval."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    mean = float(samples.mean())
    if n < 2:
        return Estimate(mean, mean, mean, n)
    sem = float(samples.std(ddof=1)) / math.sqrt(n)
    return Estimate(mean, mean - Z95 * sem, mean + Z95 * sem, n)


def poisson_rate_estimate(events, exposure):
    """
    Event rate per unit exposure with an exact chi-square 95% interval.

    Zero events yields the one-sided 95% upper bound.
    """
    if exposure <= 0:
        raise SttLabError("exposure must be positive")
    if events == 0:
        upper = stats.chi2.ppf(0.95, 2) / 2.0 / exposure
        return Estimate(0.0, 0.0, float(upper), 0, one_sided=True)
    low = stats.chi2.ppf(0.025, 2 * events) / 2.0 / exposure
    high = stats.chi2.ppf(0.975, 2 * events + 2) / 2.0 / exposure
    return Estimate(events / exposure, float(low), float(high), int(events))
