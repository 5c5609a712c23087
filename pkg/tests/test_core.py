import numpy as np
import pytest

from dsmm import ObjectiveOracle, RngStream, as_point, finite_difference_gradient
from dsmm.core import TRACE_HEADER, TraceRecord, trace_to_csv
from dsmm.problems import pl_nonconvex_min, quadratic_min, rosenbrock


def test_fd_gradient_quadratic_1d():
    oracle = ObjectiveOracle(lambda x: float(x[0] ** 2), 1)
    g = finite_difference_gradient(oracle, np.array([3.0]), 1e-5)
    assert abs(g[0] - 6.0) <= 1e-6


def test_fd_gradient_constant_is_zero():
    oracle = ObjectiveOracle(lambda x: 4.2, 3)
    g = finite_difference_gradient(oracle, np.array([1.0, -2.0, 0.5]), 1e-5)
    assert np.all(g == 0.0)


def test_fd_gradient_two_vars():
    oracle = ObjectiveOracle(lambda p: float(p[0] ** 2 + p[0] * p[1] - p[1] ** 2), 2)
    g = finite_difference_gradient(oracle, np.array([1.0, 1.0]), 1e-5)
    assert abs(g[0] - 3.0) <= 1e-6
    assert abs(g[1] + 1.0) <= 1e-6


def test_fd_gradient_counts_calls():
    oracle = ObjectiveOracle(lambda x: float(x @ x), 2)
    finite_difference_gradient(oracle, np.array([1.0, 2.0]), 1e-6)
    assert oracle.calls == 4


def test_fd_gradient_rejects_bad_h():
    oracle = ObjectiveOracle(lambda x: float(x[0]), 1)
    with pytest.raises(ValueError):
        finite_difference_gradient(oracle, np.array([0.0]), 0.0)


@pytest.mark.parametrize("problem", [quadratic_min(3), rosenbrock(), pl_nonconvex_min()])
def test_fd_matches_analytic_gradient(problem):
    gen = RngStream(101).generator()
    oracle = problem.oracle
    for _ in range(100):
        x = gen.uniform(-2.0, 2.0, oracle.dim)
        exact = oracle.gradient(x)
        approx = finite_difference_gradient(oracle, x, 1e-6)
        denom = max(1.0, float(np.linalg.norm(exact)))
        assert np.linalg.norm(approx - exact) / denom <= 1e-4


def test_as_point_rejects_non_finite():
    with pytest.raises(ValueError):
        as_point([1.0, np.inf])


def test_rng_stream_reproducible():
    a = RngStream(42, 7).generator().standard_normal(16)
    b = RngStream(42, 7).generator().standard_normal(16)
    assert np.array_equal(a, b)


def test_rng_children_distinct_and_deterministic():
    base = RngStream(42)
    c0 = base.child(0)
    c1 = base.child(1)
    assert c0 == base.child(0)
    assert c0 != c1
    x0 = c0.generator().standard_normal(8)
    x1 = c1.generator().standard_normal(8)
    assert not np.allclose(x0, x1)


def test_trace_csv_schema_and_missing_grad_norm():
    records = [
        TraceRecord(0, 0.5, 1.0, 0.25, True, 5, 2.0),
        TraceRecord(1, 1.0, 0.25, 0.3, False, 10, None),
    ]
    text = trace_to_csv(records)
    lines = text.strip().split("\n")
    assert lines[0] == TRACE_HEADER
    assert lines[1] == "0,0.5,1.0,0.25,1,5,2.0"
    assert lines[2].endswith(",0,10,")  # empty grad_norm field


def test_oracle_rejects_non_finite_value():
    oracle = ObjectiveOracle(lambda x: float("nan"), 1)
    from dsmm import EvaluationError

    with pytest.raises(EvaluationError):
        oracle.eval(np.array([0.0]))
