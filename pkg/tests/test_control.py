import math

import numpy as np
import pytest

from burgers_alpha.control import (boundary_null_control, cutoff_control, decay_constant, decay_rate,
                                   large_alpha_control, large_time_control, largest_controllable_amplitude,
                                   max_jump, nonlinear_null_control, replay_boundary_system)
from burgers_alpha.core import ControlWindow, Grid1D, ScalarField, Trajectory, h1, indicator, l2
from burgers_alpha.dynamics import ForcingSpec, solve_burgers_alpha, solve_linear
from burgers_alpha.errors import HypothesisError

W = ControlWindow(0.3, 0.7)


def test_zero_datum(unit_grid):
    res = nonlinear_null_control(ScalarField.zeros(unit_grid), 0.1, W, unit_grid)
    assert res.converged and res.trace.iter_count == 1
    assert np.all(res.v.values == 0.0) and res.terminal_L2 == 0.0


def test_small_datum_uniform_in_alpha(unit_grid, small_sine):
    sups = []
    for alpha in (0.5, 0.1, 0.02):
        res = nonlinear_null_control(small_sine, alpha, W, unit_grid)
        assert res.converged
        assert res.terminal_L2 / l2(small_sine.values, unit_grid.dx) <= 10 * math.sqrt(res.epsilon)
        sups.append(res.control_sup)
    assert max(sups) <= 2 * min(sups)


def test_residuals_contract(unit_grid):
    y0 = ScalarField.from_function(unit_grid, lambda x: 0.5 * np.sin(np.pi * x))
    res = nonlinear_null_control(y0, 0.05, W, unit_grid, fp_tol=1e-12)
    ratios = res.trace.contraction_ratios()
    assert res.trace.converged and len(ratios) >= 2
    assert all(r < 1 for r in ratios)


def test_fixed_point_solves_nonlinear_system(unit_grid):
    y0 = ScalarField.from_function(unit_grid, lambda x: 0.5 * np.sin(np.pi * x))
    res = nonlinear_null_control(y0, 0.1, W, unit_grid, fp_tol=1e-10)
    assert res.replay_gap <= 10 * 1e-10
    y, z = solve_burgers_alpha(y0, ForcingSpec(control=res.v, window=W), 0.1, unit_grid)
    assert np.max(np.abs(y.values - res.y.values)) < 1e-14
    assert np.all(res.v.values[:, indicator(W, unit_grid).values == 0] == 0.0)
    assert res.trace.ball_radius >= np.max(np.abs(res.y.values)) - 1e-12


def test_damping_reaches_same_fixed_point(unit_grid):
    y0 = ScalarField.from_function(unit_grid, lambda x: 0.5 * np.sin(np.pi * x))
    plain = nonlinear_null_control(y0, 0.1, W, unit_grid, fp_tol=1e-11)
    damped = nonlinear_null_control(y0, 0.1, W, unit_grid, fp_tol=1e-11, damping=0.5)
    assert damped.trace.iter_count > plain.trace.iter_count
    # both stop at the same CG tolerance, so agreement is limited by it
    assert np.max(np.abs(damped.v.values - plain.v.values)) < 1e-6 * plain.control_sup


@pytest.mark.parametrize("kw", [dict(mode="exact"), dict(damping=0.0), dict(damping=1.5), dict(filter_nodes=0)])
def test_rejects_bad_options(unit_grid, small_sine, kw):
    with pytest.raises(ValueError):
        nonlinear_null_control(small_sine, 0.1, W, unit_grid, **kw)


def test_uncontrolled_decay_bound():
    g = Grid1D(1.0, 1.0, 63, 400)
    y0 = ScalarField.from_function(g, lambda x: 2.0 * np.sin(np.pi * x) + np.sin(3 * np.pi * x))
    s = float(np.max(np.abs(y0.values)))
    y, _ = solve_burgers_alpha(y0, None, 0.1, g)
    r = decay_rate(s, g.L)
    norms = l2(y.values, g.dx)
    assert np.all(norms <= l2(y0.values, g.dx) * np.exp(-r * g.t) * (1 + 1e-6))


def test_decay_rate_formula():
    assert decay_rate(0.5, math.pi) == pytest.approx(0.375)
    g = Grid1D(math.pi, 1.0, 31, 10)
    y0 = ScalarField.from_function(g, lambda x: 0.5 * np.sin(x))
    assert decay_constant(y0) >= h1(y0.values, g.dx)


class TestCutoff:
    def test_zero(self, unit_grid):
        v, y = cutoff_control(Trajectory.zeros(unit_grid), ScalarField.zeros(unit_grid), W, unit_grid)
        assert np.all(v.values == 0.0) and np.all(y.values == 0.0)

    @pytest.mark.parametrize("alpha", [0.5, 0.05])
    def test_support_and_replay(self, unit_grid, small_sine, alpha):
        g = unit_grid
        _, z = solve_burgers_alpha(small_sine, None, alpha, g)
        v, y = cutoff_control(z, small_sine, W, g)
        outside = (g.x <= W.a) | (g.x >= W.b)
        assert np.all(v.values[:, outside] == 0.0)
        replay = solve_linear(small_sine, z, ForcingSpec(control=v, window=W), g)
        assert np.max(np.abs(replay.values - y.values)) < 1e-10

    def test_state_splits(self, unit_grid, small_sine):
        # before T/4 the cutoff state equals the free one wherever eta = 1
        g = unit_grid
        z = Trajectory.zeros(g)
        v, y = cutoff_control(z, small_sine, W, g)
        free = solve_linear(small_sine, z, None, g).values
        assert np.max(np.abs(y.values[0] - free[0])) == 0.0
        assert l2(y.values[-1], g.dx) < 1e-3 * l2(small_sine.values, g.dx)

    def test_coarse_grid_rejected(self):
        # node 0.25 lies outside (a, b) next to a node where eta = 1
        g = Grid1D(1.0, 1.0, 7, 50)
        y0 = ScalarField.from_function(g, lambda x: 0.1 * np.sin(np.pi * x))
        with pytest.raises(ValueError, match="too coarse"):
            cutoff_control(Trajectory.zeros(g), y0, W, g)

    def test_nonlinear_cutoff_mode(self, unit_grid, small_sine):
        res = nonlinear_null_control(small_sine, 0.1, W, unit_grid, mode="cutoff")
        assert res.converged
        outside = (unit_grid.x <= W.a) | (unit_grid.x >= W.b)
        assert np.all(res.v.values[:, outside] == 0.0)


class TestLargeTime:
    def test_rejects_large_datum(self):
        g = Grid1D(1.0, 1.0, 63, 400)
        y0 = ScalarField.from_function(g, lambda x: math.pi * np.sin(np.pi * x))
        with pytest.raises(HypothesisError, match="pi/L"):
            large_time_control(y0, 0.1, W)

    def test_tiny_datum_skips_coast(self, unit_grid):
        y0 = ScalarField.from_function(unit_grid, lambda x: 1e-3 * np.sin(np.pi * x))
        lt = large_time_control(y0, 0.1, W, steps_per_unit=200)
        assert lt.coast_time == 0.0 and lt.converged

    def test_coast_then_control(self):
        g = Grid1D(1.0, 1.0, 63, 400)
        amp = 0.9 * math.pi
        y0 = ScalarField.from_function(g, lambda x: amp * np.sin(np.pi * x) ** 3 / np.max(np.sin(np.pi * g.x) ** 3))
        lt = large_time_control(y0, 0.1, W)
        assert lt.converged
        assert 0 < lt.coast_time <= lt.coast_cap
        assert lt.coast_h1[-1] <= 0.05
        slope = np.polyfit(lt.coast_t, np.log(lt.coast_h1), 1)[0]
        assert slope <= -0.9 * lt.rate
        assert lt.control_values.shape[0] == lt.control_t.size


class TestLargeAlpha:
    def test_tiny_datum_every_alpha(self, unit_grid):
        y0 = ScalarField.from_function(unit_grid, lambda x: 1e-3 * np.sin(np.pi * x))
        rows, a0 = large_alpha_control(y0, W, unit_grid, [1.0, 0.1, 0.01])
        assert all(r.converged for r in rows) and a0 == 0.01

    def test_cfl_rows_recorded_and_deterministic(self, unit_grid):
        y0 = ScalarField.from_function(unit_grid, lambda x: 5 * np.sin(np.pi * x))
        first = large_alpha_control(y0, W, unit_grid, [2.0, 0.5, 0.1])
        second = large_alpha_control(y0, W, unit_grid, [2.0, 0.5, 0.1])
        assert first == second
        rows, a0 = first
        assert rows[-1].status == "cfl" and not rows[-1].converged
        assert a0 == 0.5

    def test_filter_shrinks_with_alpha(self):
        g = Grid1D(1.0, 1.0, 63, 1000)
        y0 = ScalarField.from_function(g, lambda x: 5 * np.sin(np.pi * x))
        rows, _ = large_alpha_control(y0, W, g, [16.0, 8.0, 4.0, 2.0])
        zs = {r.alpha: r.z_sup for r in rows}
        C = 2.0 * zs[2.0]
        assert all(zs[a] <= C / a for a in zs)

    def test_rejects_unsorted(self, unit_grid, small_sine):
        with pytest.raises(ValueError):
            large_alpha_control(small_sine, W, unit_grid, [0.1, 0.2])


def test_bisection_brackets_threshold(unit_grid):
    shape = ScalarField.from_function(unit_grid, lambda x: np.sin(np.pi * x))
    lo, hi = largest_controllable_amplitude(shape, 0.1, W, unit_grid, hi=4.0, rel_tol=0.05)
    assert 0 < lo < hi <= 4.0 and hi - lo <= 0.05 * hi
    ok = nonlinear_null_control(ScalarField(unit_grid, lo * shape.values), 0.1, W, unit_grid)
    assert ok.converged


class TestBoundary:
    def test_zero(self, unit_grid):
        res = boundary_null_control(ScalarField.zeros(unit_grid), 0.1)
        assert np.all(res.u == 0.0) and res.converged

    def test_small_datum(self, unit_grid, small_sine):
        res = boundary_null_control(small_sine, 0.1)
        assert res.converged and res.replay_residual <= 1e-8
        assert res.terminal_L2 <= 10 * math.sqrt(1e-6) * l2(small_sine.values, unit_grid.dx)
        assert res.u[0] == 0.0 and res.u.shape == (unit_grid.nt + 1,)

    def test_trace_continuity(self):
        jumps = []
        for nt in (100, 200, 400):
            g = Grid1D(1.0, 1.0, 63, nt)
            y0 = ScalarField.from_function(g, lambda x: 0.1 * np.sin(np.pi * x))
            jumps.append(max_jump(boundary_null_control(y0, 0.1).u))
        assert jumps[0] > jumps[1] > jumps[2]

    def test_replay_with_zero_trace_is_free_evolution(self, unit_grid, small_sine):
        Y, Z = replay_boundary_system(small_sine.values, np.zeros(unit_grid.nt + 1), 0.1, unit_grid)
        y, z = solve_burgers_alpha(small_sine, None, 0.1, unit_grid)
        assert np.max(np.abs(Y - y.values)) < 1e-14 and np.max(np.abs(Z - z.values)) < 1e-14

    def test_validation(self, unit_grid, small_sine):
        with pytest.raises(ValueError):
            boundary_null_control(small_sine, 0.1, window_ext=ControlWindow(0.5, 1.2))
        with pytest.raises(ValueError):
            boundary_null_control(small_sine, 0.1, L_ext=1.51)
