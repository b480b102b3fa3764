import math

import numpy as np
import pytest

from burgers_alpha.core import ControlWindow, Grid1D, ScalarField
from burgers_alpha.experiments import (CONVERGENCE_COLUMNS, DECAY_COLUMNS, SweepSpec, controlled_limit_study,
                                       decay_study, emit_report, initial_datum, load_samples, map_rows,
                                       monotone_with_noise, uncontrolled_limit_study)
from burgers_alpha.io import read_manifest, read_table


@pytest.mark.parametrize("kind", ["sine", "bump", "sawtooth"])
def test_families_have_requested_sup(unit_grid, kind):
    f = initial_datum(kind, 0.3, unit_grid)
    assert np.max(np.abs(f.values)) == pytest.approx(0.3, rel=1e-15)
    assert np.all(initial_datum(kind, 0.0, unit_grid).values == 0.0)


def test_family_errors_and_samples(unit_grid, tmp_path):
    with pytest.raises(ValueError):
        initial_datum("square", 1.0, unit_grid)
    p = tmp_path / "s.txt"
    np.savetxt(p, np.linspace(0, 1, unit_grid.nx))
    assert load_samples(p, unit_grid).values[-1] == 1.0
    np.savetxt(p, np.ones(5))
    with pytest.raises(ValueError):
        load_samples(p, unit_grid)


@pytest.mark.parametrize("alphas", [(), (0.1, 0.2), (0.1, -0.1), (0.0, 0.1), (0.1, 0.1)])
def test_sweep_spec_validation(unit_grid, small_sine, alphas):
    with pytest.raises(ValueError):
        SweepSpec(alphas, small_sine, unit_grid)


def test_monotone_with_noise():
    assert monotone_with_noise([4, 3, 2, 1, 0])
    assert monotone_with_noise([4, 3, 3.1, 1])
    assert not monotone_with_noise([4, 3, 3.3, 1])
    assert not monotone_with_noise([4, 3, 3.05, 2, 2.05])


def test_uncontrolled_sweep(unit_grid, small_sine):
    rows = uncontrolled_limit_study(SweepSpec((0.4, 0.2, 0.1, 0.05, 0.0), small_sine, unit_grid))
    assert [r.alpha for r in rows] == [0.4, 0.2, 0.1, 0.05, 0.0]
    assert rows[-1].err_y == 0.0 and rows[-1].err_z == 0.0
    assert monotone_with_noise([r.err_y for r in rows]) and monotone_with_noise([r.err_z for r in rows])
    for r in rows:
        assert r.ineq_lhs <= r.ineq_rhs * (1 + 1e-10)
        assert r.err_z <= r.err_y + r.alpha * r.yref_H2 * (1 + 1e-10)


def test_filter_gap_is_quadratic(unit_grid, small_sine):
    rows = uncontrolled_limit_study(SweepSpec((0.04, 0.02, 0.01), small_sine, unit_grid))
    ratios = [a.gap_zy / b.gap_zy for a, b in zip(rows, rows[1:])]
    assert all(3.5 < q < 4.5 for q in ratios)


def test_single_alpha_sweep(unit_grid, small_sine, tmp_path):
    rows = uncontrolled_limit_study(SweepSpec((0.1,), small_sine, unit_grid))
    paths = emit_report(rows, tmp_path / "c.csv", manifest={"n": 1})
    back = read_table(paths[0])
    assert len(back) == 1 and tuple(back[0]) == CONVERGENCE_COLUMNS
    assert back[0]["err_y"] == rows[0].err_y
    assert read_manifest(paths[1]) == {"n": 1}


def test_controlled_sweep(unit_grid, small_sine):
    rows, rep = controlled_limit_study(SweepSpec((0.5, 0.1, 0.02, 0.0), small_sine, unit_grid))
    assert rep["all_converged"] and rep["control_sup_ratio"] <= 2
    assert rep["max_terminal_L2"] <= rep["terminal_tol"]
    assert rep["monotone_err_y"] and rep["monotone_err_z"]
    assert rows[-1].alpha == 0.0 and rows[-1].err_y == 0.0
    assert all(r.ineq_lhs <= r.ineq_rhs * (1 + 1e-10) for r in rows)


def test_controlled_zero_datum(unit_grid):
    rows, rep = controlled_limit_study(SweepSpec((0.2, 0.1), ScalarField.zeros(unit_grid), unit_grid))
    for r in rows:
        assert (r.err_y, r.err_z, r.control_sup, r.control_L2, r.terminal_L2) == (0, 0, 0, 0, 0)


def test_decay_study():
    g = Grid1D(math.pi, 20.0, 63, 2000)
    data = [initial_datum("sine", s, g) for s in (0.0, 0.5)]
    rows = decay_study(data, 0.1, g)
    assert len(rows) == 1
    assert rows[0].r_theory == 0.375 and rows[0].r_fitted >= 0.9 * 0.375 and not rows[0].flag
    heat = decay_study(data, 0.1, g, transport=False)[0]
    lam1 = 2 / g.dx**2 * (1 - math.cos(g.dx))
    # implicit Euler: per-step factor 1 / (1 + dt lam1)
    assert heat.r_fitted == pytest.approx(math.log1p(g.dt * lam1) / g.dt, rel=1e-6)
    assert heat.r_fitted > heat.r_theory
    with pytest.raises(ValueError):
        decay_study([initial_datum("sine", 1.0, g)], 0.1, g)


def test_decay_report_columns(tmp_path):
    g = Grid1D(math.pi, 5.0, 31, 500)
    rows = decay_study([initial_datum("bump", 0.25, g)], 0.1, g)
    p = emit_report(rows, tmp_path / "d.csv", DECAY_COLUMNS)[0]
    assert p.read_text().splitlines()[0] == ",".join(DECAY_COLUMNS)


def test_workers_match_serial(unit_grid, small_sine):
    spec1 = SweepSpec((0.2, 0.1), small_sine, unit_grid)
    spec2 = SweepSpec((0.2, 0.1), small_sine, unit_grid, workers=2)
    assert uncontrolled_limit_study(spec1) == uncontrolled_limit_study(spec2)
    assert map_rows(abs, [-1, 2], workers=2) == [1, 2]
