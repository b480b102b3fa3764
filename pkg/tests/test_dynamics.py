import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from burgers_alpha.core import Grid1D, ScalarField, Trajectory, l2
from burgers_alpha.dynamics import (ForcingSpec, check_cfl, check_estimates, max_bound, solve_burgers,
                                    solve_burgers_alpha, solve_linear, step_linear)
from burgers_alpha.errors import CFLError, SolverError
from burgers_alpha.oracles import dense_forward

from conftest import smooth_random


def _discrete_lambda1(g):
    return 2.0 / g.dx**2 * (1.0 - math.cos(math.pi * g.dx / g.L))


def test_step_eigenmode():
    g = Grid1D(1.0, 1.0, 31, 20)
    mode = ScalarField.from_function(g, lambda x: np.sin(np.pi * x))
    zero = ScalarField.zeros(g)
    nxt = step_linear(mode, zero, zero, g)
    assert np.max(np.abs(nxt.values - mode.values / (1 + g.dt * _discrete_lambda1(g)))) < 1e-14


def test_step_zero(unit_grid):
    z = ScalarField.zeros(unit_grid)
    assert np.all(step_linear(z, z, z, unit_grid).values == 0.0)


def test_constant_advection_matches_dense():
    g = Grid1D(1.0, 0.5, 15, 12)
    y0 = np.sin(np.pi * g.x)
    A = np.full((g.nt + 1, g.nx), 0.7)
    Y = solve_linear(ScalarField(g, y0), Trajectory(g, A), None, g).values
    assert np.max(np.abs(Y - dense_forward(y0, A[:-1], np.zeros((g.nt, g.nx)), g))) < 1e-12


def test_linear_zero_and_heat_decay(unit_grid, rng):
    g = unit_grid
    zero = solve_linear(ScalarField.zeros(g), Trajectory.zeros(g), None, g)
    assert np.all(zero.values == 0.0)
    y0 = ScalarField(g, smooth_random(g, rng))
    norms = l2(solve_linear(y0, Trajectory.zeros(g), None, g).values, g.dx)
    assert np.all(np.diff(norms) < 0)


def test_smooth_data_matches_dense(rng):
    g = Grid1D(1.0, 1.0, 15, 10)
    A = Trajectory.from_function(g, lambda x, t: 0.3 * np.cos(3 * x + t))
    f = Trajectory.from_function(g, lambda x, t: np.exp(-t) * x * (1 - x))
    y0 = smooth_random(g, rng)
    Y = solve_linear(ScalarField(g, y0), A, ForcingSpec(body_force=f), g).values
    ref = dense_forward(y0, A.values[:-1], f.values[:-1], g)
    assert np.max(np.abs(Y - ref)) < 1e-12


def test_control_enters_through_window(unit_grid):
    from burgers_alpha.core import ControlWindow, indicator
    g, w = unit_grid, ControlWindow(0.3, 0.7)
    v = Trajectory(g, np.ones((g.nt + 1, g.nx)))
    S = ForcingSpec(control=v, window=w).source(g)
    assert np.array_equal(S, np.broadcast_to(indicator(w, g).values, S.shape))
    with pytest.raises(ValueError):
        ForcingSpec(control=v)


@given(seed=st.integers(0, 10_000), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linear_solver_is_linear(seed, a, b):
    g = Grid1D(1.0, 0.5, 13, 8)
    r = np.random.default_rng(seed)
    A = Trajectory(g, r.uniform(-0.5, 0.5, (g.nt + 1, g.nx)))
    u0, v0 = r.standard_normal(g.nx), r.standard_normal(g.nx)
    fu, fv = r.standard_normal((g.nt + 1, g.nx)), r.standard_normal((g.nt + 1, g.nx))

    def run(y0, f):
        return solve_linear(ScalarField(g, y0), A, ForcingSpec(body_force=Trajectory(g, f)), g).values

    assert np.allclose(run(a * u0 + b * v0, a * fu + b * fv), a * run(u0, fu) + b * run(v0, fv), atol=1e-10)


@given(seed=st.integers(0, 10_000))
def test_heat_energy_inequality(seed):
    g = Grid1D(1.0, 0.2, 21, 10)
    y0 = np.random.default_rng(seed).standard_normal(g.nx)
    n = l2(solve_linear(ScalarField(g, y0), Trajectory.zeros(g), None, g).values, g.dx)
    assert np.all(n[1:] <= n[:-1] * (1 + 1e-14))


def test_burgers_alpha_zero(unit_grid):
    y, z = solve_burgers_alpha(ScalarField.zeros(unit_grid), None, 0.1, unit_grid)
    assert np.all(y.values == 0.0) and np.all(z.values == 0.0)
    assert np.all(solve_burgers(ScalarField.zeros(unit_grid), None, unit_grid).values == 0.0)


def test_alpha_zero_is_burgers(unit_grid, rng):
    y0 = ScalarField(unit_grid, smooth_random(unit_grid, rng, amp=0.8))
    y, z = solve_burgers_alpha(y0, None, 0.0, unit_grid)
    assert np.array_equal(y.values, solve_burgers(y0, None, unit_grid).values)
    assert np.array_equal(y.values, z.values)


def test_sine_datum_respects_bound():
    g = Grid1D(1.0, 1.0, 63, 200)
    y0 = ScalarField.from_function(g, lambda x: 0.2 * np.sin(np.pi * x))
    y, z = solve_burgers_alpha(y0, None, 0.1, g)
    assert np.max(np.abs(y.values)) <= 0.2


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5])
def test_oddness_preserved(alpha):
    g = Grid1D(1.0, 1.0, 63, 200)
    y0 = ScalarField.from_function(g, lambda x: np.sin(2 * np.pi * x) + 0.5 * np.sin(4 * np.pi * x))
    y, z = solve_burgers_alpha(y0, None, alpha, g)
    assert np.max(np.abs(y.values + y.values[:, ::-1])) < 1e-13
    assert np.max(np.abs(z.values + z.values[:, ::-1])) < 1e-13


def test_estimates():
    g = Grid1D(1.0, 1.0, 63, 400)
    rep = check_estimates(*solve_burgers_alpha(ScalarField.zeros(g), None, 0.1, g), ScalarField.zeros(g), None)
    assert rep.satisfied and rep.bound_M == 0.0 and rep.margin == 0.0
    y0 = ScalarField.from_function(g, lambda x: 0.5 * np.sin(np.pi * x))
    rep = check_estimates(*solve_burgers_alpha(y0, None, 0.1, g), y0, None)
    assert rep.bound_M == pytest.approx(0.5) and rep.satisfied
    ones = ForcingSpec(body_force=Trajectory(g, np.ones((g.nt + 1, g.nx))))
    assert max_bound(ScalarField.zeros(g), ones, g) == 1.0


@given(seed=st.integers(0, 10_000), alpha=st.sampled_from([0.0, 0.05, 0.2, 0.5]))
def test_max_principle_random(seed, alpha):
    g = Grid1D(1.0, 1.0, 31, 100)
    r = np.random.default_rng(seed)
    # M(T) <= 1.5 keeps dt under the transport limit dx / (2 M)
    y0 = ScalarField(g, smooth_random(g, r, amp=r.uniform(0.1, 1.0)))
    c = r.uniform(-0.25, 0.25, 2)
    f = Trajectory.from_function(g, lambda x, t: c[0] * np.sin(np.pi * x) * np.cos(t) + c[1] * x * (1 - x))
    forcing = ForcingSpec(body_force=f)
    rep = check_estimates(*solve_burgers_alpha(y0, forcing, alpha, g), y0, forcing)
    assert rep.sup_state <= rep.bound_M * (1 + 1e-3)


def test_cfl_guard():
    g = Grid1D(1.0, 1.0, 63, 400)
    check_cfl(g, 3.1)
    with pytest.raises(CFLError, match="nt >="):
        check_cfl(g, 3.2)
    y0 = ScalarField.from_function(g, lambda x: 4 * np.sin(np.pi * x))
    with pytest.raises(CFLError):
        solve_burgers_alpha(y0, None, 0.1, g)


def test_blowup_is_reported():
    g = Grid1D(1.0, 1.0, 63, 10)
    y0 = ScalarField.from_function(g, lambda x: 1e3 * np.sin(np.pi * x))
    with pytest.raises(SolverError) as info:
        solve_burgers_alpha(y0, None, 0.0, g, cfl=False)
    assert info.value.level is not None and info.value.level > 0
