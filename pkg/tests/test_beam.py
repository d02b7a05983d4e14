import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamkam.algebra import NormParams, vf_majorant_norm
from beamkam.beam import (BeamParams, assemble_block_perturbation, basis_eval, coupling3, coupling4, eigenvalue)
from beamkam.exceptions import InvalidBlockError, InvalidParameterError
from beamkam.forcing import ForcingHierarchy, constant_block, random_block


def quad_overlap(modes, n_points):
    x = 2 * np.pi * np.arange(n_points) / n_points
    return float(np.prod([basis_eval(j, x) for j in modes], axis=0).sum() * 2 * np.pi / n_points)


@pytest.mark.parametrize("j, m, expected", [(0, 1.0, 1.0), (1, 1.0, math.sqrt(2)), (2, 2.0, math.sqrt(18))])
def test_eigenvalue_examples(j, m, expected):
    assert eigenvalue(j, m) == pytest.approx(expected, rel=1e-14)


def test_eigenvalue_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        eigenvalue(0, 0.0)
    with pytest.raises(InvalidParameterError):
        eigenvalue(-1, 1.0)


@pytest.mark.parametrize("j, x, expected", [(0, 1.234, 1 / math.sqrt(2 * math.pi)), (1, 0.0, 1 / math.sqrt(math.pi)),
                                            (2, math.pi / 4, 0.0)])
def test_basis_examples(j, x, expected):
    assert basis_eval(j, x) == pytest.approx(expected, abs=1e-15)


# frozen from a 10^4-point trapezoid rule over [0, 2 pi]
@pytest.mark.parametrize("modes, expected", [
    ((0, 0, 0), 0.3989422804014327),
    ((1, 2, 3), 0.28209479177387814),
    ((1, 1, 3), 0.0),
])
def test_coupling3_examples(modes, expected):
    assert coupling3(*modes) == pytest.approx(expected, abs=1e-12)
    assert coupling3(*modes) == pytest.approx(quad_overlap(modes, 10_000), abs=1e-12)


@pytest.mark.parametrize("modes, expected", [
    ((0, 0, 0, 0), 0.15915494309189535),
    ((1, 1, 1, 1), 0.238732414637843),
    ((1, 2, 3, 0), 0.11253953951963827),
])
def test_coupling4_examples(modes, expected):
    assert coupling4(*modes) == pytest.approx(expected, abs=1e-12)
    assert coupling4(*modes) == pytest.approx(quad_overlap(modes, 10_000), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=4, max_size=4))
def test_couplings_match_short_quadrature_and_are_symmetric(modes):
    n_pts = 8 * (max(modes) + 1)
    assert coupling4(*modes) == pytest.approx(quad_overlap(modes, n_pts), abs=1e-12)
    assert coupling3(*modes[:3]) == pytest.approx(quad_overlap(modes[:3], n_pts), abs=1e-12)
    assert coupling4(*modes) == coupling4(*reversed(modes))
    assert coupling3(modes[2], modes[0], modes[1]) == coupling3(*modes[:3])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 12))
def test_coupling3_selection_rule(i, j, l):
    if l > i + j or l < abs(i - j):
        assert coupling3(i, j, l) == 0.0


def test_mu0_is_sqrt_mass():
    for m in (0.5, 1.0, 3.0):
        assert BeamParams(m, 3).mu[0] == pytest.approx(math.sqrt(m), rel=1e-15)


def test_zero_forcing_gives_zero_perturbation():
    beam = BeamParams(1.0, 3)
    forcing = ForcingHierarchy(1e-2, 1.0, (1,), [constant_block(0, 1, {})])
    assert assemble_block_perturbation(0, beam, forcing).is_zero()


def test_missing_block_raises():
    beam = BeamParams(1.0, 2)
    forcing = ForcingHierarchy(1e-2, 1.0, (1, 2), [constant_block(0, 1, {0: 1.0})])
    assert assemble_block_perturbation(1, beam, forcing).is_zero()
    with pytest.raises(InvalidBlockError):
        assemble_block_perturbation(5, beam, forcing)


def test_constant_psi1_gives_quadratic_terms_only():
    c = 0.3
    beam = BeamParams(1.0, 3)
    forcing = ForcingHierarchy(1e-2, 1.0, (1,), [constant_block(0, 1, {1: c})])
    P = assemble_block_perturbation(0, beam, forcing)
    expected = {}
    for j in range(beam.n_modes):
        for g, h, mult in (((2,), (0,), 1.0), ((1,), (1,), 2.0), ((0,), (2,), 1.0)):
            gamma = [0] * beam.n_modes
            kappa = [0] * beam.n_modes
            gamma[j], kappa[j] = g[0], h[0]
            expected[tuple(gamma + kappa)] = mult * c / (4 * beam.mu[j])
    got = {it[1] + it[2]: it[3] for it in P.items()}
    assert set(got) == set(expected)
    for e, v in expected.items():
        assert got[e] == pytest.approx(v, rel=1e-14)


def _energy_by_quadrature(beam, forcing, j_block, theta, z, zb, n_x=256):
    x = 2 * np.pi * np.arange(n_x) / n_x
    phi = np.stack([basis_eval(j, x) / math.sqrt(beam.mu[j]) for j in range(beam.n_modes)])
    q = (z + zb) / math.sqrt(2)
    u = q @ phi
    blk = forcing.block(j_block)
    psi = [blk.evaluate(l, theta) for l in range(4)]
    dens = psi[0] * u + psi[1] * u**2 / 2 + psi[2] * u**3 / 3 + psi[3] * u**4 / 4
    return complex(dens.sum() * 2 * np.pi / n_x)


@pytest.mark.parametrize("seed", range(4))
def test_block_perturbation_matches_spatial_integral(seed):
    rng = np.random.default_rng(seed)
    beam = BeamParams(1.3, 3)
    blk = random_block(0, 2, rng, K_force=2)
    forcing = ForcingHierarchy(1e-2, 1.0, (2,), [blk])
    P = assemble_block_perturbation(0, beam, forcing)
    for _ in range(5):
        th = rng.uniform(0, 2 * np.pi, 2)
        z = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        zb = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        assert P.evaluate(th, z, zb) == pytest.approx(_energy_by_quadrature(beam, forcing, 0, th, z, zb),
                                                      rel=1e-11, abs=1e-13)


def test_weighted_block_field_is_linear_in_epsilon():
    rng = np.random.default_rng(0)
    beam = BeamParams(1.0, 4)
    blk = random_block(0, 1, rng)
    params = NormParams(s=0.5, r=1.0)
    norms = []
    for eps in (1e-6, 1e-4, 1e-2):
        forcing = ForcingHierarchy(eps, 1.0, (1,), [blk])
        norms.append(vf_majorant_norm(assemble_block_perturbation(0, beam, forcing) * forcing.weight(0), params))
    C = [n / e for n, e in zip(norms, (1e-6, 1e-4, 1e-2))]
    assert max(C) == pytest.approx(min(C), rel=1e-12)
