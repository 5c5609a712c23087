"""Test problems with analytic structure used to anchor validators and runs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .core import CallCounter, ObjectiveOracle, Point, RngStream, as_point

__all__ = [
    "MinProblem",
    "GameConstants",
    "MinMaxProblem",
    "LabeledDataset",
    "quadratic_min",
    "rosenbrock",
    "ROSENBROCK_BOX",
    "quadratic_saddle",
    "robust_regression",
    "pl_nonconvex_min",
    "PL_NONCONVEX_MU",
    "make_synthetic_dataset",
    "dataset_to_csv",
    "dataset_from_csv",
]


@dataclass(frozen=True)
class MinProblem:
    """Minimization instance with known optimum and smoothness constants."""

    name: str
    oracle: ObjectiveOracle
    f_star: float
    x_star: Optional[Point] = None
    nearest_minimizer: Optional[Callable[[Point], Point]] = None
    mu: Optional[float] = None  # PL constant when the problem satisfies PL
    lipschitz_grad: Optional[float] = None

    def minimizer_for(self, x: Point) -> Point:
        if self.nearest_minimizer is not None:
            return as_point(self.nearest_minimizer(as_point(x)))
        if self.x_star is not None:
            return self.x_star
        raise ValueError(f"problem {self.name} exposes no minimizer map")


@dataclass(frozen=True)
class GameConstants:
    """Blockwise smoothness constants and derived coupling quantities.

    L12 bounds the change of the y-gradient under x-moves; mu is the PL
    constant of -f(x, .).  The derived constants feed the inner-tolerance
    formula of the sequential min-max scheme.
    """

    L11: float
    L12: float
    L21: float
    L22: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        for name in ("L11", "L12", "L21", "L22"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def L_xy(self) -> float:
        return self.L12 / (2.0 * self.mu)

    @property
    def D1(self) -> float:
        return self.L12 * self.L_xy + 0.5 * self.L22 * self.L_xy**2

    @property
    def D2(self) -> float:
        return self.L12 / self.mu + self.L_xy + self.L22 * self.L_xy / self.mu

    @property
    def D3(self) -> float:
        return (1.0 / self.mu) * (1.0 + self.L22 / (2.0 * self.mu))


@dataclass(frozen=True)
class MinMaxProblem:
    """Two-player zero-sum objective min_x max_y f(x, y)."""

    name: str
    value: Callable[[Point, Point], float]
    dim_x: int
    dim_y: int
    grad_x: Optional[Callable[[Point, Point], Point]] = None
    grad_y: Optional[Callable[[Point, Point], Point]] = None
    inner_argmax: Optional[Callable[[Point], Point]] = None
    constants: Optional[GameConstants] = None
    fne: Optional[Tuple[Point, Point]] = None

    def oracle_in_y(self, x: Point, counter: Optional[CallCounter] = None) -> ObjectiveOracle:
        """Minimization oracle for the max player: y -> -f(x, y)."""
        x = as_point(x)
        grad = None
        if self.grad_y is not None:
            grad = lambda y: -np.asarray(self.grad_y(x, y), dtype=float)
        lips = self.constants.L22 if self.constants is not None else None
        return ObjectiveOracle(
            lambda y: -self.value(x, y), self.dim_y, grad=grad,
            lipschitz_grad=lips, counter=counter,
        )

    def oracle_in_x(self, y: Point, counter: Optional[CallCounter] = None) -> ObjectiveOracle:
        """Minimization oracle for the min player: x -> f(x, y)."""
        y = as_point(y)
        grad = None
        if self.grad_x is not None:
            grad = lambda x: np.asarray(self.grad_x(x, y), dtype=float)
        lips = self.constants.L11 if self.constants is not None else None
        return ObjectiveOracle(
            lambda x: self.value(x, y), self.dim_x, grad=grad,
            lipschitz_grad=lips, counter=counter,
        )


def quadratic_min(dim: int) -> MinProblem:
    """f(x) = ||x||^2: the canonical PL instance (L = 2, mu = 2, f* = 0)."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    oracle = ObjectiveOracle(
        lambda x: float(x @ x), dim, grad=lambda x: 2.0 * x,
        lipschitz_grad=2.0, pl_constant=2.0,
    )
    zero = np.zeros(dim)
    return MinProblem(
        "quadratic_min", oracle, f_star=0.0, x_star=zero,
        nearest_minimizer=lambda x: zero, mu=2.0, lipschitz_grad=2.0,
    )


# Gradient-Lipschitz bound for the Rosenbrock function, valid on this box
# (max spectral norm of the Hessian over a fine grid is ~5327).
ROSENBROCK_BOX = ((-2.0, 2.0), (-1.0, 4.0))
_ROSENBROCK_L = 5400.0


def rosenbrock(dim: int = 2) -> MinProblem:
    """f(x, y) = (1-x)^2 + 100 (y - x^2)^2, nonconvex with f* = 0 at (1, 1)."""
    if dim != 2:
        raise ValueError("only the 2-d Rosenbrock function is provided")

    def f(p):
        x, y = p
        return float((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)

    def g(p):
        x, y = p
        return np.array(
            [-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)]
        )

    oracle = ObjectiveOracle(f, 2, grad=g, lipschitz_grad=_ROSENBROCK_L)
    star = np.array([1.0, 1.0])
    return MinProblem(
        "rosenbrock", oracle, f_star=0.0, x_star=star,
        nearest_minimizer=lambda x: star, lipschitz_grad=_ROSENBROCK_L,
    )


# PL constant of x^2 + 3 sin^2(x), certified by a 1-d grid oracle over
# [-10, 10] at step 1e-4 (grid minimum of 0.5 f'^2/(f - f*) is ~0.17553).
PL_NONCONVEX_MU = 0.175


def pl_nonconvex_min(dim: int = 1) -> MinProblem:
    """f(x) = x^2 + 3 sin^2(x): nonconvex (f'' changes sign) yet PL."""
    if dim != 1:
        raise ValueError("the PL nonconvex instance is one-dimensional")

    def f(p):
        x = p[0]
        return float(x * x + 3.0 * np.sin(x) ** 2)

    def g(p):
        x = p[0]
        return np.array([2.0 * x + 3.0 * np.sin(2.0 * x)])

    oracle = ObjectiveOracle(f, 1, grad=g, lipschitz_grad=8.0, pl_constant=PL_NONCONVEX_MU)
    zero = np.zeros(1)
    return MinProblem(
        "pl_nonconvex_min", oracle, f_star=0.0, x_star=zero,
        nearest_minimizer=lambda x: zero, mu=PL_NONCONVEX_MU, lipschitz_grad=8.0,
    )


def quadratic_saddle() -> MinMaxProblem:
    """f(x, y) = x^2/2 + x y - y^2/2 with unique first-order equilibrium (0, 0)."""

    def value(x, y):
        return float(0.5 * x[0] ** 2 + x[0] * y[0] - 0.5 * y[0] ** 2)

    return MinMaxProblem(
        name="quadratic_saddle",
        value=value,
        dim_x=1,
        dim_y=1,
        grad_x=lambda x, y: np.array([x[0] + y[0]]),
        grad_y=lambda x, y: np.array([x[0] - y[0]]),
        inner_argmax=lambda x: np.array([x[0]]),
        constants=GameConstants(L11=1.0, L12=1.0, L21=1.0, L22=1.0, mu=1.0),
        fne=(np.zeros(1), np.zeros(1)),
    )


@dataclass(frozen=True)
class LabeledDataset:
    """Binary-classification data: features (n, d) and labels in {0, 1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("features must be (n, d) with matching labels (n,)")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


_CLAMP = 1e-12  # predicted probabilities are clamped to [1e-12, 1 - 1e-12]


def robust_regression(data: LabeledDataset, lam: float) -> MinMaxProblem:
    """Distributionally weighted logistic loss minus a quadratic weight penalty.

    f(theta, p) = sum_i p_i l_i(theta) - lam * sum_i (p_i - 1/n)^2 with l_i the
    per-sample cross-entropy of a linear classifier sigmoid(theta . [x_i, 1]).
    The weights p are unconstrained, so the inner maximizer is the closed form
    p_i = 1/n + l_i(theta)/(2 lam), and -f(theta, .) is strongly concave in p
    with modulus (and PL constant) 2 lam.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    X = np.hstack([data.features, np.ones((data.n, 1))])  # bias column
    y = data.labels
    n = data.n
    dim_theta = X.shape[1]

    def predict(theta):
        # overflow-safe sigmoid, total on all of theta-space
        z = X @ theta
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out

    def losses(theta):
        prob = np.clip(predict(theta), _CLAMP, 1.0 - _CLAMP)
        return -(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob))

    def value(theta, p):
        l = losses(theta)
        return float(p @ l - lam * np.sum((p - 1.0 / n) ** 2))

    def grad_theta(theta, p):
        return X.T @ (p * (predict(theta) - y))

    def grad_p(theta, p):
        return losses(theta) - 2.0 * lam * (p - 1.0 / n)

    def inner_argmax(theta):
        return 1.0 / n + losses(theta) / (2.0 * lam)

    # L12: Lipschitz constant of theta -> losses vector (Jacobian rows are
    # (prob_i - y_i) x_i with |prob - y| <= 1), bounded by the spectral norm
    # of the design matrix.  L11 holds on the operating region where the
    # weights stay below p_max (clamped losses keep them there).
    spectral = float(np.linalg.norm(X, 2))
    l_max = -np.log(_CLAMP)
    p_max = 1.0 / n + l_max / (2.0 * lam)
    row_sq = np.sum(X**2, axis=1)
    L11 = 0.25 * p_max * float(np.sum(row_sq))
    constants = GameConstants(
        L11=L11, L12=spectral, L21=spectral, L22=2.0 * lam, mu=2.0 * lam
    )
    return MinMaxProblem(
        name="robust_regression",
        value=value,
        dim_x=dim_theta,
        dim_y=n,
        grad_x=grad_theta,
        grad_y=grad_p,
        inner_argmax=inner_argmax,
        constants=constants,
    )


def make_synthetic_dataset(seed: int, n: int, d: int, flip_fraction: float = 0.05) -> LabeledDataset:
    """Deterministic separable-plus-noise binary dataset."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    gen = RngStream(seed, stream_id=0xDA7A).generator()
    X = gen.standard_normal((n, d))
    w = gen.standard_normal(d)
    w /= np.linalg.norm(w)
    labels = (X @ w > 0.0).astype(float)
    flips = gen.random(n) < flip_fraction
    labels[flips] = 1.0 - labels[flips]
    return LabeledDataset(X, labels)


def dataset_to_csv(data: LabeledDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"feature_{i + 1}" for i in range(data.d)] + ["label"])
    for row, label in zip(data.features, data.labels):
        writer.writerow([repr(float(v)) for v in row] + [str(int(label))])
    return buf.getvalue()


def dataset_from_csv(text: str) -> LabeledDataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0] or rows[0][-1] != "label":
        raise ValueError("dataset CSV must have a header ending in 'label'")
    body = [r for r in rows[1:] if r]
    features = np.array([[float(v) for v in r[:-1]] for r in body])
    labels = np.array([float(r[-1]) for r in body])
    return LabeledDataset(features, labels)
