import math

import numpy as np
import pytest

from beamkam.bounds import (compound_bound, compound_sum_direct, expsum_bound, expsum_closed_form,
                            hilbert_like_bound, log_shell_count, spectral_norm)
from beamkam.exceptions import InvalidParameterError


def test_shell_counts():
    assert np.exp(log_shell_count(2, np.array([0, 1, 2]))) == pytest.approx([1, 4, 8])
    assert np.exp(log_shell_count(3, np.array([1]))) == pytest.approx([6])
    assert np.exp(log_shell_count(2, np.array([1]), "linf")) == pytest.approx([8])


def test_expsum_one_dimensional_example():
    chk = expsum_bound(1, 1.0, 0.0)
    assert chk.left == pytest.approx(1 + 2 * math.exp(-2) / (1 - math.exp(-2)), rel=1e-12)
    assert chk.left == pytest.approx(1.3130352855, rel=1e-9)
    assert chk.right == pytest.approx(1 + math.e)
    assert chk.passed


@pytest.mark.parametrize("n, sigma", [(2, 0.5), (3, 0.25), (1, 0.1)])
def test_expsum_against_closed_form(n, sigma):
    chk = expsum_bound(n, sigma, 0.0)
    assert chk.left == pytest.approx(expsum_closed_form(n, sigma), rel=1e-10)
    assert chk.passed
    if (n, sigma) == (2, 0.5):
        assert chk.right == pytest.approx(4 * (1 + math.e) ** 2, rel=1e-12)


def test_expsum_large_sigma_tends_to_one():
    assert expsum_bound(2, 30.0).left == pytest.approx(1.0, abs=1e-20)


def test_hilbert_examples():
    assert hilbert_like_bound(np.eye(5)).left == 0.0
    chk = hilbert_like_bound(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert chk.left == pytest.approx(1.0, rel=1e-8)
    assert chk.right == pytest.approx(math.pi / math.sqrt(3), rel=1e-8)
    assert chk.passed


def test_spectral_norm_matches_svd():
    A = np.random.default_rng(0).standard_normal((20, 20))
    assert spectral_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-6)


def test_compound_log_sum_matches_direct_summation():
    chk = compound_bound(1, 1.0, 0)
    direct = compound_sum_direct(1, 1.0, 0, K=400)
    assert chk.left == pytest.approx(0.5 * math.log(direct), rel=1e-10)
    assert chk.right == pytest.approx(10 * math.log(80 / math.e), rel=1e-12)
    assert chk.passed


def test_compound_margin_grows_when_sigma_halves():
    a = compound_bound(1, 0.5, 0)
    b = compound_bound(1, 0.25, 0)
    assert b.left > a.left and b.margin > a.margin


def test_compound_velocity_factor_is_exact():
    a, b = compound_bound(2, 0.5, 0), compound_bound(2, 0.5, 3)
    # (1 + v^2)^4 = 10^4 inside the root of the statement variant
    assert b.left - a.left == pytest.approx(0.5 * 4 * math.log(10), rel=1e-10)
    p0, p3 = compound_bound(2, 0.5, 0, variant="proof"), compound_bound(2, 0.5, 3, variant="proof")
    assert p3.left - p0.left == pytest.approx(4 * math.log(10), rel=1e-10)


def test_bad_arguments():
    with pytest.raises(InvalidParameterError):
        expsum_bound(1, 0.0)
    with pytest.raises(InvalidParameterError):
        compound_bound(1, 0.5, 0, variant="other")
    with pytest.raises(InvalidParameterError):
        hilbert_like_bound(np.ones((2, 3)))
