import numpy as np
import pytest

import stefan_front as sf


@pytest.fixture(scope="session")
def baseline_kinetics():
    # Arrhenius with V0=2, A=1, u_inf=-1: v0 = 2 exp(-1)
    return sf.arrhenius(V0=2.0, A=1.0, u_inf=-1.0)


@pytest.fixture(scope="session")
def baseline_params(baseline_kinetics):
    grid = sf.SpatialGrid.uniform(40.0, 0.02)
    return sf.ProblemParams(gamma=0.1, kinetics=baseline_kinetics, grid=grid,
                            solver=sf.SolverConfig(dt=1e-3))


@pytest.fixture(scope="session")
def baseline_tw(baseline_params):
    return sf.traveling_wave(baseline_params)


def make_params(kin, gamma, L, dx, dt, **solver_kw):
    grid = sf.SpatialGrid.uniform(L, dx)
    return sf.ProblemParams(gamma=gamma, kinetics=kin, grid=grid,
                            solver=sf.SolverConfig(dt=dt, **solver_kw))


def perturbed_tw_field(tw, grid, amplitude=0.3, width2=8.0):
    """TW profile times a bump that keeps the front value and slope."""
    pert = 1.0 + amplitude * grid.x**2 * np.exp(-grid.x**2 / width2)
    return sf.GridField(grid, tw.profile_on(grid).values * pert)
