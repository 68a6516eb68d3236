"""Shared fixtures.  The expensive objects (sharp constants, converged
minimizers, long time integrations) are session-scoped so the whole suite
pays for each of them once."""

import numpy as np
import pytest

import nlscrit as nc
from nlscrit import dynamics as dyn
from nlscrit import minimize as mn
from nlscrit import mountainpass as mp


@pytest.fixture(scope="session")
def base325():
    return nc.ProblemParams(3, 2.5, 1.0, 1.0)


@pytest.fixture(scope="session")
def sharp3(base325):
    return nc.sobolev_constant(3), nc.gn_constant(base325)


@pytest.fixture(scope="session")
def a0_325(base325, sharp3):
    S, C = sharp3
    return nc.critical_mass_a0(base325, S, C)


@pytest.fixture(scope="session")
def params_half(base325, a0_325):
    return base325.with_mass(a0_325 / 2.0)


@pytest.fixture(scope="session")
def params_at(base325, a0_325):
    return base325.with_mass(a0_325)


@pytest.fixture(scope="session")
def soliton_grid():
    return nc.make_grid(3, 50.0, 8192)


@pytest.fixture(scope="session")
def thr_half(params_half, sharp3):
    S, C = sharp3
    return nc.thresholds(params_half, S, C)


@pytest.fixture(scope="session")
def thr_at(params_at, sharp3):
    S, C = sharp3
    return nc.thresholds(params_at, S, C)


@pytest.fixture(scope="session")
def minimizer_half(params_half, soliton_grid, thr_half):
    rep = mn.minimize_local(params_half, soliton_grid, thresholds=thr_half)
    assert rep.converged
    return rep


@pytest.fixture(scope="session")
def minimizer_at(params_at, soliton_grid, thr_at):
    rep = mn.minimize_local(params_at, soliton_grid, thresholds=thr_at)
    assert rep.converged
    return rep


@pytest.fixture(scope="session")
def mp_estimate_half(params_half, soliton_grid, minimizer_half, thr_half):
    return mp.estimate_mp_level(params_half, soliton_grid,
                                minimizer=minimizer_half, thresholds=thr_half)


@pytest.fixture(scope="session")
def mp_estimate_at(params_at, soliton_grid, minimizer_at, thr_at):
    return mp.estimate_mp_level(params_at, soliton_grid,
                                minimizer=minimizer_at, thresholds=thr_at)


# --- dynamics fixtures: a milder mesh near the origin (bounded smallest
# --- cell) keeps the Cayley solves at full accuracy, and a dedicated
# --- fine-origin mesh resolves focusing for the blow-up probe.

@pytest.fixture(scope="session")
def dyn_grid():
    return nc.make_grid(3, 30.0, 2048, origin_blend=0.5)


@pytest.fixture(scope="session")
def dyn_minimizer(params_half, dyn_grid, thr_half):
    rep = mn.minimize_local(params_half, dyn_grid, thresholds=thr_half)
    assert rep.converged
    return rep


@pytest.fixture(scope="session")
def standing_summary(params_half, dyn_grid, dyn_minimizer):
    psi0 = nc.Profile(dyn_grid, dyn_minimizer.final.values.astype(complex))
    return dyn.evolve(params_half, dyn_grid, psi0, dt=2e-3, t_end=10.0,
                      reference=dyn_minimizer.final, stride=50)


@pytest.fixture(scope="session")
def stability_half(params_half, dyn_grid, dyn_minimizer):
    return dyn.stability_probe(params_half, dyn_grid, dyn_minimizer.final,
                               1e-2, 20.0, dt=2e-3)


@pytest.fixture(scope="session")
def focus_grid():
    return nc.make_grid(3, 30.0, 8192, origin_blend=0.002)


@pytest.fixture(scope="session")
def focus_witness(params_half, focus_grid, minimizer_half, mp_estimate_half):
    """Mountain-pass witness and minimizer carried onto the fine-origin
    focusing mesh (the constrained solves stay on the regular mesh, where
    they converge to full tolerance)."""
    def carry(profile):
        w = nc.resample(profile, focus_grid)
        scale = (params_half.a / nc.mass(focus_grid, w)) ** 0.5
        return nc.Profile(focus_grid, scale * w.values)

    return carry(minimizer_half.final), carry(mp_estimate_half.witness)


@pytest.fixture(scope="session")
def blowup_half(params_half, focus_grid, focus_witness):
    _, witness = focus_witness
    return dyn.blowup_probe(params_half, focus_grid, witness, 1.05, 10.0,
                            dt=1e-3, stride=10)
