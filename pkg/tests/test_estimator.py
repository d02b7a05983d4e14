import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from beamkam.driver import run_iteration
from beamkam.estimator import KAMTorusEstimator
from conftest import linear_raw


def make():
    raw = linear_raw()
    return KAMTorusEstimator(forcing=raw["forcing"], epsilon=raw["epsilon"], N=raw["N"], b_schedule=(1,),
                             v_max=2, omega=tuple(raw["omega"]))


def test_get_params_and_clone():
    est = make()
    params = est.get_params()
    assert params["v_max"] == 2 and params["b_schedule"] == (1,)
    assert clone(est).get_params()["epsilon"] == est.epsilon


def test_transform_before_fit_raises():
    with pytest.raises(NotFittedError):
        make().transform(np.zeros((2, 1)))


def test_fit_transform_matches_driver(linear_cfg):
    est = make().fit()
    assert est.status_ == "ok" and len(est.report_) == 2
    theta = np.array([[0.0], [1.0], [2.5]])
    q = est.transform(theta)
    assert q.shape == (3, 4)
    res = run_iteration(linear_cfg.beam(), linear_cfg.hierarchy(), linear_cfg.omega_vector(), 2,
                        linear_cfg.settings())
    assert np.array_equal(est.normal_form_.Omega, res.normal.Omega)


def test_transform_validates_input():
    est = make().fit()
    with pytest.raises(ValueError):
        est.transform(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        est.transform(np.zeros((2, 0)))
