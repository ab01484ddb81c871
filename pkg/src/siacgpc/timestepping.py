"""Third-order TVD Runge-Kutta stepping with the experiment's time-step rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from siacgpc.errors import ArgumentError, DegenerateSystemError, InstabilityError

DEFAULT_CFL = 0.1


@dataclass(frozen=True)
class TimePlan:
    T_final: float
    cfl: float
    dt_rule: str
    lam_max: float
    dt_nominal: float
    n_steps: int

    @property
    def dt(self) -> float:
        return self.T_final / self.n_steps


def step_exponent(k: int) -> float:
    # dt^3 ~ h^(2k+1): h for P1, h^(5/3) for P2
    if k <= 1:
        return 1.0
    return (2 * k + 1) / 3.0


def make_time_plan(T: float, h: float, lam_max: float, k: int, cfl: float = DEFAULT_CFL) -> TimePlan:
    if not T > 0 or not h > 0 or not cfl > 0:
        raise ArgumentError(f"need T, h, cfl > 0 (got T={T}, h={h}, cfl={cfl})")
    if lam_max == 0:
        raise DegenerateSystemError("all eigenvalues are zero; nothing is transported")
    if lam_max < 0:
        raise ArgumentError("lam_max must be a magnitude")
    rule = "p1" if k <= 1 else ("p2" if k == 2 else f"p{k}")
    dt_nominal = cfl * h ** step_exponent(k) / lam_max
    n_steps = max(1, math.ceil(T / dt_nominal * (1.0 - 1e-12)))
    return TimePlan(T, cfl, rule, lam_max, dt_nominal, n_steps)


def rk3_step(state: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """One Shu-Osher SSP-RK3 step.

    Stages are written as increments from ``state`` (algebraically
    ``3/4 u + 1/4 s1 + 1/4 dt R(s1)`` and ``1/3 u + 2/3 s2 + 2/3 dt R(s2)``),
    which leaves the state bitwise unchanged when ``R`` vanishes.
    """
    s1 = state + dt * rhs(state)
    s2 = state + 0.25 * ((s1 - state) + dt * rhs(s1))
    return state + (2.0 / 3.0) * ((s2 - state) + dt * rhs(s2))


def integrate(state: np.ndarray, plan: TimePlan, rhs: Callable[[np.ndarray], np.ndarray],
              check_every: int = 50, growth_limit: float = 1e3) -> np.ndarray:
    """Advance ``state`` by ``plan.n_steps`` identical steps of size ``plan.dt``.

    The scheme is L2-stable for a stable step, so growth of the state norm by
    more than ``growth_limit`` is reported as an instability, as are
    non-finite values.
    """
    dt = plan.dt
    norm0 = np.linalg.norm(state)
    for n in range(1, plan.n_steps + 1):
        state = rk3_step(state, dt, rhs)
        if n % check_every == 0 or n == plan.n_steps:
            norm = np.linalg.norm(state)
            if not np.isfinite(norm):
                raise InstabilityError(n)
            if norm > growth_limit * max(norm0, np.finfo(float).tiny):
                raise InstabilityError(n, f"state norm grew by {norm / norm0:.3g} at step {n}")
    return state
