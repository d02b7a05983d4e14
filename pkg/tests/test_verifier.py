import math

import numpy as np
import pytest

from beamkam.beam import BeamParams
from beamkam.driver import run_iteration
from beamkam.exceptions import InvalidInputError
from beamkam.forcing import ForcingHierarchy, cosine_block
from beamkam.verifier import (default_step, direct_integrate, linear_response_mode0, pde_residual,
                              reconstruct_solution, space_grid, verify_run)

BEAM = BeamParams(1.0, 3)


def test_empty_chain_reconstructs_zero():
    t = np.linspace(0, 1, 5)
    rec = reconstruct_solution([], BEAM, np.array([0.6]), t)
    assert not rec.u.any() and rec.u.shape == (5, 32)


def test_zero_field_zero_forcing_has_zero_residual():
    t = np.linspace(0, 1, 11)
    x = space_grid(32)
    rep = pde_residual(np.zeros((11, 32)), t, x, None, BEAM, [0.5])
    assert rep.sup == 0.0 and rep.l2 == 0.0


@pytest.mark.parametrize("j", [0, 1, 2])
def test_free_beam_mode_is_second_order_accurate(j):
    mu = BEAM.mu[j]
    x = space_grid(32)
    sups = []
    for h in (0.02, 0.01):
        t = h * np.arange(int(round(2.0 / h)) + 1)
        u = np.cos(j * x)[None, :] * np.cos(mu * t)[:, None]
        sups.append(pde_residual(u, t, x, None, BEAM, [0.5]).sup)
    assert sups[1] < 1e-3 * (1 + mu**4)
    assert sups[0] / sups[1] == pytest.approx(4.0, rel=0.05)


def test_zero_field_residual_is_the_inhomogeneity():
    forcing = ForcingHierarchy(1e-2, 1.0, (1,), [cosine_block(0, 1, {0: 1.0})])
    omega = np.array([0.7])
    t = np.linspace(0, 10, 201)
    rep = pde_residual(np.zeros((201, 16)), t, space_grid(16), forcing, BEAM, omega)
    assert rep.sup == pytest.approx(np.max(np.abs(1e-2 * np.cos(0.7 * t[1:-1]))), rel=1e-14)


def test_wrong_derivative_order_is_detected():
    j, mu = 2, BEAM.mu[2]
    x = space_grid(32)
    t = 0.01 * np.arange(201)
    u = np.cos(j * x)[None, :] * np.cos(mu * t)[:, None]
    good = pde_residual(u, t, x, None, BEAM, [0.5]).sup
    bad = pde_residual(u, t, x, None, BEAM, [0.5], derivative_power=2).sup
    assert bad > 1e3 * good


def test_residual_input_checks():
    x = space_grid(8)
    with pytest.raises(InvalidInputError):
        pde_residual(np.zeros((2, 8)), [0, 1], x, None, BEAM, [0.5])
    with pytest.raises(InvalidInputError):
        pde_residual(np.zeros((3, 8)), [0, 1, 3], x, None, BEAM, [0.5])


def test_unforced_oscillator_and_energy():
    q0 = np.zeros(BEAM.n_modes)
    q0[1] = 1.0
    h = default_step(BEAM)
    traj = direct_integrate(q0, np.zeros_like(q0), None, BEAM, [0.5], (0.0, 1000 * h), h)
    assert np.max(np.abs(traj.q[:, 1] - np.cos(BEAM.mu[1] * traj.t))) < 5 * (BEAM.mu[1] * h) ** 2 * BEAM.mu[1] * traj.t[-1]
    assert traj.energy_drift < (BEAM.mu[-1] * h) ** 2


def test_coarse_step_warns():
    with pytest.warns(RuntimeWarning):
        direct_integrate(np.zeros(BEAM.n_modes), np.zeros(BEAM.n_modes), None, BEAM, [0.5], (0.0, 1.0), h=0.5)


def test_linear_reconstruction_against_closed_form_and_integration(linear_cfg):
    cfg = linear_cfg
    beam, forcing, omega = cfg.beam(), cfg.hierarchy(), cfg.omega_vector()
    res = run_iteration(beam, forcing, omega, 2, cfg.settings())
    h = default_step(beam)
    t = h * np.arange(400)
    rec = reconstruct_solution(res.state.chain, beam, omega, t)
    closed = linear_response_mode0(forcing, beam, omega, t, cfg.epsilon * 0.3)
    assert np.max(np.abs(rec.q[:, 0] - closed)) <= 1e-6 + h**2 * np.max(np.abs(closed))
    rep = verify_run(res.state.chain, beam, forcing, omega)
    base = pde_residual(np.zeros((len(rep.t) + 2, len(rep.x))), h * np.arange(len(rep.t) + 2), rep.x,
                        forcing, beam, omega)
    assert rep.sup <= 0.1 * base.sup
    assert rep.integration_distance <= 1e-6
    assert rep.q_norm_max > 0
