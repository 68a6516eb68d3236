import math

import numpy as np
import pytest

import nlscrit as nc
from nlscrit import functionals as fnl
from nlscrit import minimize as mn
from nlscrit import profiles


def check_minimizer_contracts(params, grid, thr, rep):
    assert rep.converged and not rep.boundary_hit
    assert rep.energy < 0.0
    assert rep.lam < 0.0
    assert abs(rep.pohozaev) < 1e-6
    assert rep.grad_residual < 1e-8 * max(1.0, abs(rep.energy))
    assert nc.grad_l2_sq(grid, rep.final) < thr.rho0
    assert nc.mass(grid, rep.final) == pytest.approx(params.a, rel=1e-12)
    vals = rep.final.values
    assert np.all(vals > -1e-12)
    assert np.all(np.diff(vals) < 1e-10)        # radially decreasing


def test_minimizer_omega1(params_half, soliton_grid, thr_half, minimizer_half):
    check_minimizer_contracts(params_half, soliton_grid, thr_half, minimizer_half)


def test_minimizer_omega2(params_at, soliton_grid, thr_at, minimizer_at):
    check_minimizer_contracts(params_at, soliton_grid, thr_at, minimizer_at)


def test_minimizer_energy_monotone_trace(minimizer_half):
    es = np.array([t[1] for t in minimizer_half.trace])
    assert np.all(np.diff(es) <= 1e-12 * np.maximum(1.0, np.abs(es[:-1])))


def test_minimizer_sits_at_its_fiber_minimum(params_half, soliton_grid, thr_half,
                                             minimizer_half):
    rep = fnl.fiber_critical_points(params_half, soliton_grid, minimizer_half.final,
                                    thresholds=thr_half)
    assert rep.tau_plus == pytest.approx(1.0, rel=1e-2)
    assert rep.e_at_tau_plus == pytest.approx(minimizer_half.energy,
                                              rel=1e-8, abs=1e-10)


def test_minimizer_restart_is_fixed_point(params_half, soliton_grid, thr_half,
                                          minimizer_half):
    rep = mn.minimize_local(params_half, soliton_grid, init=minimizer_half.final,
                            thresholds=thr_half)
    assert rep.iterations <= 3
    assert rep.energy == pytest.approx(minimizer_half.energy, abs=1e-10)


def test_minimize_rejected_in_omega3(base325, sharp3, a0_325, soliton_grid):
    S, C = sharp3
    p = base325.with_mass(3.0 * a0_325)
    thr = nc.thresholds(p, S, C)
    with pytest.raises(fnl.RegimeError):
        mn.minimize_local(p, soliton_grid, thresholds=thr)


def test_init_outside_ball_is_retracted(params_half, soliton_grid, thr_half):
    # a strongly concentrated start has kinetic norm above rho0; the solver
    # must dilate it inside and still converge to the same minimum
    init = profiles.gaussian(params_half, 0.25, soliton_grid)
    assert nc.grad_l2_sq(soliton_grid, init) > thr_half.rho0
    rep = mn.minimize_local(params_half, soliton_grid, init=init, thresholds=thr_half)
    assert rep.converged
    assert rep.energy == pytest.approx(-0.4612, rel=1e-3)


def test_boundary_scan_omega1(params_half, soliton_grid, thr_half):
    best = mn.boundary_scan(params_half, soliton_grid, 64, seed=11,
                            thresholds=thr_half)
    assert best > 0.0


def test_boundary_scan_omega2(params_at, soliton_grid, thr_at):
    best = mn.boundary_scan(params_at, soliton_grid, 64, seed=12, thresholds=thr_at)
    assert best >= -1e-6


def test_boundary_dilated_ground_state(params_at, soliton_grid, thr_at):
    # one boundary sample built by hand from the sharpest available profile
    g = soliton_grid
    Q = profiles.weinstein_ground_state(3, 2.5, g)
    u = nc.Profile(g, Q.values * math.sqrt(params_at.a / nc.mass(g, Q)))
    tau = math.sqrt(thr_at.rho0 / nc.grad_l2_sq(g, u))
    for _ in range(10):
        w = nc.rescale(u, tau)
        w = nc.Profile(g, w.values * math.sqrt(params_at.a / nc.mass(g, w)))
        g2 = nc.grad_l2_sq(g, w)
        if abs(g2 / thr_at.rho0 - 1.0) < 1e-7:
            break
        tau *= math.sqrt(thr_at.rho0 / g2)
    assert abs(g2 / thr_at.rho0 - 1.0) < 1e-6
    assert fnl.energy(params_at, g, w) >= -1e-6


def test_subadditivity_half_split(params_half, soliton_grid):
    rep = mn.subadditivity_check(params_half, soliton_grid, params_half.a / 2.0)
    assert rep.gap >= -1e-6
    assert rep.m_a < 0.0 and rep.m_a1 < 0.0 and rep.m_rest < 0.0
    # symmetric split: both sub-masses coincide
    assert rep.m_a1 == pytest.approx(rep.m_rest, abs=1e-8)


def test_subadditivity_small_mass(params_half, soliton_grid):
    rep = mn.subadditivity_check(params_half, soliton_grid, params_half.a / 100.0)
    assert rep.gap >= -1e-6
    # the small-mass minimum is shallow and the large one carries the value
    assert abs(rep.m_a1) < 0.05 * abs(rep.m_a)
    assert rep.m_a1 > rep.m_rest


def test_subadditivity_rejects_bad_split(params_half, soliton_grid):
    with pytest.raises(ValueError):
        mn.subadditivity_check(params_half, soliton_grid, params_half.a)
