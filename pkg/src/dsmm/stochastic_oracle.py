"""Averaged noisy function estimates with step-size-adaptive accuracy.

The estimator averages enough independent draws that the estimate error stays
within eps_f * sigma^2 with probability at least p_f, and its second moment
stays below l_f^2 * sigma^4 (the variance condition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import EvaluationError, ObjectiveOracle, Point, RngStream

__all__ = [
    "NOISE_KINDS",
    "NoiseModel",
    "AccuracyConfig",
    "Estimate",
    "SampleSize",
    "required_samples",
    "accuracy_floor_sigma",
    "estimate",
]

NOISE_KINDS = ("none", "gaussian", "uniform", "bernoulli_spike")

# fixed spike probability for the bernoulli_spike model; amplitude is chosen
# so the noise second moment equals sigma_f^2 exactly
_SPIKE_PROB = 0.1


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean evaluation noise with second moment bounded by sigma_f^2."""

    kind: str = "none"
    sigma_f: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma_f < 0:
            raise ValueError("sigma_f must be >= 0")

    @property
    def noiseless(self) -> bool:
        return self.kind == "none" or self.sigma_f == 0.0

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.noiseless:
            return np.zeros(size)
        if self.kind == "gaussian":
            return gen.standard_normal(size) * self.sigma_f
        if self.kind == "uniform":
            half_width = math.sqrt(3.0) * self.sigma_f
            return gen.uniform(-half_width, half_width, size)
        # bernoulli_spike: +-sigma_f/sqrt(q) each with probability q/2, else 0
        amplitude = self.sigma_f / math.sqrt(_SPIKE_PROB)
        u = gen.random(size)
        out = np.zeros(size)
        out[u < _SPIKE_PROB / 2.0] = amplitude
        out[(u >= _SPIKE_PROB / 2.0) & (u < _SPIKE_PROB)] = -amplitude
        return out


@dataclass(frozen=True)
class AccuracyConfig:
    """Estimate accuracy targets: p_f-probabilistically eps_f-accurate values
    whose error second moment obeys the l_f-variance condition."""

    eps_f: float
    p_f: float
    l_f: float
    c0: float = 2.0  # hidden constant of the concentration-based sample rule
    n_max: int = 1_000_000

    def __post_init__(self):
        if not (0.5 < self.p_f < 1.0):
            raise ValueError("p_f must lie in (1/2, 1)")
        if self.eps_f <= 0 or self.l_f <= 0 or self.c0 <= 0:
            raise ValueError("eps_f, l_f and c0 must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass(frozen=True)
class Estimate:
    value: float
    samples_used: int
    sigma_at_request: float
    cap_hit: bool = False


class SampleSize(NamedTuple):
    n: int
    cap_hit: bool


def required_samples(cfg: AccuracyConfig, noise: NoiseModel, sigma: float) -> SampleSize:
    """Samples needed at step size sigma.

    max( ceil(c0 * sigma_f^2/(eps_f^2 sigma^4) * log(1/(1-p_f))),
         ceil(sigma_f^2/(l_f sigma^4)), 1 ), capped at n_max.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if noise.noiseless:
        return SampleSize(1, False)
    sigma4 = sigma**4
    var = noise.sigma_f**2
    n_accuracy = math.ceil(cfg.c0 * var / (cfg.eps_f**2 * sigma4) * math.log(1.0 / (1.0 - cfg.p_f)))
    n_variance = math.ceil(var / (cfg.l_f * sigma4))
    n = max(n_accuracy, n_variance, 1)
    if n > cfg.n_max:
        return SampleSize(cfg.n_max, True)
    return SampleSize(n, False)


def accuracy_floor_sigma(cfg: AccuracyConfig, noise: NoiseModel) -> float:
    """Smallest step size whose sample requirement fits under n_max.

    Below this sigma the cap binds and the estimator can no longer deliver
    eps_f*sigma^2 accuracy at probability p_f (nor the variance condition);
    stochastic runs should stop rather than burn n_max samples per estimate
    at silently degraded accuracy.
    """
    if noise.noiseless:
        return 0.0
    var = noise.sigma_f**2
    floor_accuracy = (
        cfg.c0 * var * math.log(1.0 / (1.0 - cfg.p_f)) / (cfg.eps_f**2 * cfg.n_max)
    ) ** 0.25
    floor_variance = (var / (cfg.l_f * cfg.n_max)) ** 0.25
    return max(floor_accuracy, floor_variance)


def estimate(
    oracle: ObjectiveOracle,
    noise: NoiseModel,
    cfg: AccuracyConfig,
    x: Point,
    sigma: float,
    rng: RngStream,
) -> Estimate:
    """Mean of required_samples independent draws of f(x) + noise.

    Each averaged sample is charged to the oracle counter.  The cap_hit flag
    propagates as a warning, never an error.
    """
    n, cap_hit = required_samples(cfg, noise, sigma)
    fx = oracle.eval(x)
    if n == 1 and noise.noiseless:
        return Estimate(fx, 1, sigma, cap_hit)
    oracle.charge(n - 1)
    draws = noise.draw(rng.generator(), n)
    value = fx + float(draws.mean())
    if not math.isfinite(value):
        raise EvaluationError("estimate produced a non-finite value")
    return Estimate(value, n, sigma, cap_hit)
