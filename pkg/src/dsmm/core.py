"""Shared domain types: points, objective oracles, seeded RNG streams, trace records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Point",
    "EvaluationError",
    "as_point",
    "CallCounter",
    "ObjectiveOracle",
    "RngStream",
    "TraceRecord",
    "TRACE_HEADER",
    "trace_to_csv",
    "write_trace",
    "finite_difference_gradient",
]

# A point is a plain 1-d float64 vector; helpers below enforce the invariants.
Point = np.ndarray


class EvaluationError(RuntimeError):
    """An oracle produced a non-finite value."""


def as_point(coords: Iterable[float] | np.ndarray) -> Point:
    """Coerce to a finite 1-d float vector."""
    x = np.atleast_1d(np.asarray(coords, dtype=float)).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite entries")
    return x


class CallCounter:
    """Mutable evaluation counter shared between oracles of one run."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int = 1) -> None:
        self.count += n


class ObjectiveOracle:
    """Scalar objective with call accounting.

    ``func`` is the noiseless mean objective; stochastic draws are layered on
    top by the estimator module, which charges every averaged sample here so
    budgets can be enforced uniformly.  ``grad`` (when given) must be the exact
    gradient of ``func`` and is consumed only by validators and baselines.
    """

    def __init__(
        self,
        func: Callable[[Point], float],
        dim: int,
        grad: Optional[Callable[[Point], Point]] = None,
        lipschitz_grad: Optional[float] = None,
        pl_constant: Optional[float] = None,
        counter: Optional[CallCounter] = None,
    ) -> None:
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.func = func
        self.dim = int(dim)
        self.grad = grad
        self.lipschitz_grad = lipschitz_grad
        self.pl_constant = pl_constant
        self.counter = counter if counter is not None else CallCounter()

    @property
    def calls(self) -> int:
        return self.counter.count

    def eval(self, x: Point) -> float:
        self.counter.add(1)
        value = float(self.func(np.asarray(x, dtype=float)))
        if not math.isfinite(value):
            raise EvaluationError(f"objective returned non-finite value at x={x!r}")
        return value

    def charge(self, n: int) -> None:
        """Account for averaged samples evaluated outside of eval()."""
        self.counter.add(int(n))

    def gradient(self, x: Point) -> Point:
        if self.grad is None:
            raise ValueError("oracle has no analytic gradient")
        return np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float)


_MASK64 = (1 << 64) - 1


def _mix64(a: int, b: int) -> int:
    # SplitMix64 finalizer over the combined words; fixed rule so derived
    # sub-streams are reproducible and order-independent.
    z = (a + 0x9E3779B97F4A7C15 * (b + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Explicit randomness handle: same (seed, stream_id) -> same sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.default_rng(seq)

    def child(self, index: int) -> "RngStream":
        """Derived independent stream; deterministic in (stream_id, index)."""
        return RngStream(self.seed, _mix64(self.stream_id & _MASK64, int(index)))


TRACE_HEADER = "iter,sigma,f_est,f_best,success,calls,grad_norm"


@dataclass(frozen=True)
class TraceRecord:
    """One per-iteration log row of a search loop."""

    iteration: int
    sigma: float
    f_estimate_current: float
    f_estimate_best_offspring: float
    success: bool
    oracle_calls: int
    grad_norm: Optional[float] = None


def _fmt(value: float) -> str:
    # repr() is the shortest round-trip form and is byte-stable across runs.
    return repr(float(value))


def trace_record_fields(rec: TraceRecord) -> list[str]:
    return [
        str(rec.iteration),
        _fmt(rec.sigma),
        _fmt(rec.f_estimate_current),
        _fmt(rec.f_estimate_best_offspring),
        "1" if rec.success else "0",
        str(rec.oracle_calls),
        "" if rec.grad_norm is None else _fmt(rec.grad_norm),
    ]


def trace_to_csv(records: Sequence[TraceRecord]) -> str:
    lines = [TRACE_HEADER]
    lines.extend(",".join(trace_record_fields(r)) for r in records)
    return "\n".join(lines) + "\n"


def write_trace(path, records: Sequence[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_to_csv(records))


def finite_difference_gradient(oracle: ObjectiveOracle, x: Point, h: float) -> Point:
    """Central-difference gradient estimate, (f(x+h e_i) - f(x-h e_i)) / (2h).

    Intended for noiseless oracles; every probe counts as an oracle call.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    x = as_point(x)
    g = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (oracle.eval(x + step) - oracle.eval(x - step)) / (2.0 * h)
    return g
