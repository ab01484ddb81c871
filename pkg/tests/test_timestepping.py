import math

import numpy as np
import pytest

from siacgpc.dg import build_mesh, project_l2, upwind_operator
from siacgpc.errors import ArgumentError, DegenerateSystemError, InstabilityError
from siacgpc.timestepping import TimePlan, integrate, make_time_plan, rk3_step


def test_taylor_value_scalar():
    y = rk3_step(np.array([1.0]), 0.1, lambda s: -s)
    assert math.isclose(y[0], 1 - 0.1 + 0.005 - 0.1**3 / 6, rel_tol=0, abs_tol=1e-15)
    assert math.isclose(y[0], 0.9048333333333333, abs_tol=1e-15)


def test_zero_rhs_is_bitwise_identity():
    s = np.random.default_rng(0).standard_normal(17)
    out = rk3_step(s, 0.37, lambda z: np.zeros_like(z))
    assert np.array_equal(out, s)


def test_temporal_order():
    errs = []
    for n in (10, 20, 40):
        plan = TimePlan(1.0, 1.0, "test", 1.0, 1.0 / n, n)
        errs.append(abs(integrate(np.array([1.0]), plan, lambda s: -s)[0] - math.exp(-1)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 2.9


def test_linear_propagator():
    rng = np.random.default_rng(1)
    L = rng.standard_normal((6, 6))
    s = rng.standard_normal(6)
    dt = 0.05
    M = np.eye(6) + dt * L + (dt * L) @ (dt * L) / 2 + np.linalg.matrix_power(dt * L, 3) / 6
    assert np.allclose(rk3_step(s, dt, lambda z: L @ z), M @ s, atol=1e-13, rtol=0)


def test_time_plan_arithmetic():
    h = 2 * math.pi / 10
    lam = 0.9324695142031521
    plan = make_time_plan(1.0, h, lam, 1, 0.1)
    assert math.isclose(plan.dt_nominal, 0.1 * h / lam)
    assert plan.n_steps == math.ceil(1.0 / plan.dt_nominal)
    assert math.isclose(plan.dt * plan.n_steps, 1.0)
    assert plan.dt <= plan.dt_nominal


def test_exact_landing_single_step():
    dt = 0.1 * 0.5 / 1.0
    assert make_time_plan(dt, 0.5, 1.0, 1, 0.1).n_steps == 1


def test_p2_step_scaling():
    a = make_time_plan(1.0, 0.2, 1.0, 2, 0.1)
    b = make_time_plan(1.0, 0.1, 1.0, 2, 0.1)
    assert math.isclose(a.dt_nominal / b.dt_nominal, 2 ** (5 / 3))
    assert a.dt_rule == "p2"


def test_plan_errors():
    with pytest.raises(DegenerateSystemError):
        make_time_plan(1.0, 0.1, 0.0, 1)
    with pytest.raises(ArgumentError):
        make_time_plan(-1.0, 0.1, 1.0, 1)


def test_single_step_plan_equals_rk3_step():
    s = np.array([1.0, 2.0])
    plan = TimePlan(0.1, 1.0, "test", 1.0, 0.1, 1)
    assert np.array_equal(integrate(s, plan, lambda z: -z), rk3_step(s, 0.1, lambda z: -z))


def test_instability_detected_above_cfl_limit():
    m = build_mesh(0, 2 * math.pi, 40)
    q = project_l2(np.cos, m, 1).coeffs[None]
    plan = make_time_plan(20.0, m.h, 1.0, 1, 2.0)
    with pytest.raises(InstabilityError) as exc:
        integrate(q, plan, upwind_operator(np.array([1.0]), m, 1))
    assert exc.value.step > 0
