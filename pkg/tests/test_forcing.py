import math

import numpy as np
import pytest

from beamkam.exceptions import InvalidBlockError, InvalidInputError, InvalidParameterError
from beamkam.forcing import (ForcingBlock, ForcingHierarchy, block_weight, constant_block, cosine_block,
                             random_block)


@pytest.mark.parametrize("j, eps, rho, expected", [(0, 1e-2, 1.0, 1e-2), (1, 1e-2, 1.0, 1e-4),
                                                   (2, 1e-2, 0.5, 10 ** -4.5)])
def test_block_weight_examples(j, eps, rho, expected):
    assert block_weight(j, eps, rho) == pytest.approx(expected, rel=1e-12)


def test_block_weight_validates():
    with pytest.raises(InvalidParameterError):
        block_weight(0, 1.5, 1.0)
    with pytest.raises(InvalidParameterError):
        block_weight(0, 0.1, 0.0)


def test_schedule_must_increase():
    with pytest.raises(InvalidParameterError):
        ForcingHierarchy(1e-2, 1.0, (2, 2))


def test_conjugate_partner_required():
    with pytest.raises(InvalidInputError, match="conjugate"):
        ForcingBlock(0, 1, {0: {(1,): 0.5}})


def test_zero_hierarchy_evaluates_to_zero():
    f = ForcingHierarchy(1e-2, 1.0, (1, 2))
    assert f.eval_psi(0, np.array([0.3, 0.7])) == 0.0
    with pytest.raises(InvalidBlockError):
        f.block(4)


def test_single_cosine_block_value():
    f = ForcingHierarchy(1e-2, 1.0, (1,), [cosine_block(0, 1, {l: 1.0 for l in range(4)})])
    for l in range(4):
        assert f.eval_psi(l, np.array([0.0])) == pytest.approx(1e-2)


def test_two_random_blocks_add_up():
    rng = np.random.default_rng(9)
    b0, b1 = random_block(0, 1, rng), random_block(1, 2, rng)
    f = ForcingHierarchy(1e-2, 1.0, (1, 3), [b0, b1])
    th = rng.uniform(0, 2 * np.pi, 3)
    for l in range(4):
        manual = 0.0
        for blk, w, sl in ((b0, 1e-2, slice(0, 1)), (b1, 1e-4, slice(1, 3))):
            manual += w * sum(c * np.exp(1j * np.dot(k, th[sl])) for k, c in blk.coeffs[l].items()).real
        assert f.eval_psi(l, th) == pytest.approx(manual, abs=1e-15)


def test_eval_needs_all_angles():
    f = ForcingHierarchy(1e-2, 1.0, (1, 2), [cosine_block(0, 1, {0: 1.0})])
    with pytest.raises(InvalidInputError):
        f.eval_psi(0, np.array([0.1]))


def test_H2_examples():
    assert not ForcingHierarchy(1e-2, 1.0, (1,)).validate_H2().passed
    ok = ForcingHierarchy(1e-2, 1.0, (1,), [cosine_block(0, 1, {0: 1.0})]).validate_H2(1.0)
    assert ok.passed
    bad = ForcingHierarchy(1e-2, 1.0, (1,), [cosine_block(0, 1, {0: 2.0})]).validate_H2(1.0)
    assert not bad.passed
    assert bad.entries[0].sup_majorant == pytest.approx(2.0)


def test_psi_array_is_linear_in_block_data():
    rng = np.random.default_rng(2)
    a, b = random_block(0, 2, rng), random_block(0, 2, rng)
    summed = ForcingBlock(0, 2, {l: {k: a.coeffs[l].get(k, 0) + b.coeffs[l].get(k, 0)
                                     for k in set(a.coeffs[l]) | set(b.coeffs[l])} for l in range(4)})
    fa, fb, fs = (ForcingHierarchy(1e-2, 1.0, (2,), [x]) for x in (a, b, summed))
    for l in range(4):
        assert np.allclose(fs.psi_array(0, l, 2, 2), fa.psi_array(0, l, 2, 2) + fb.psi_array(0, l, 2, 2))


def test_with_epsilon_and_without_block():
    f = ForcingHierarchy(1e-2, 1.0, (1, 2), [constant_block(0, 1, {0: 1.0}), constant_block(1, 1, {0: 1.0})])
    assert f.with_epsilon(1e-4).weight(1) == pytest.approx(1e-8)
    assert f.without_block(1).block(1).is_zero()
    assert math.isclose(f.eval_psi(0, np.zeros(2)), 1e-2 + 1e-4)
