"""scikit-learn style wrapper: ``fit`` runs the iteration, ``transform`` maps angles to mode amplitudes."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import validate
from .driver import compose_embedding, run_iteration
from .exceptions import InvalidInputError


class KAMTorusEstimator(TransformerMixin, BaseEstimator):
    """Invariant torus of the truncated forced beam.

    Parameters mirror the run configuration (see :class:`beamkam.config.RunConfig`);
    ``forcing`` is the list of ``{block, l, k, re, im}`` rows.

    Attributes
    ----------
    normal_form_ : NormalFormState
    state_ : IterationState
    report_ : list of dict
        One record per step.
    status_ : str
    n_angles_ : int
        Number of angles ``transform`` expects.

    Examples
    --------
    >>> est = KAMTorusEstimator(forcing=rows, omega=(0.618, 0.414, 0.732)).fit()  # doctest: +SKIP
    >>> q = est.transform(theta)                                                   # doctest: +SKIP
    """

    def __init__(self, forcing=None, m=1.0, epsilon=1e-4, rho=1.0, N=4, K=3, b_schedule=(1, 2, 3), v_max=2,
                 omega=None, omega_seed=0, s0=0.5, r0=1.0, a=0.0, p=1.0, L=8):
        self.forcing = forcing
        self.m = m
        self.epsilon = epsilon
        self.rho = rho
        self.N = N
        self.K = K
        self.b_schedule = b_schedule
        self.v_max = v_max
        self.omega = omega
        self.omega_seed = omega_seed
        self.s0 = s0
        self.r0 = r0
        self.a = a
        self.p = p
        self.L = L

    def _config(self):
        raw = self.get_params()
        raw["forcing"] = None if self.forcing is None else [dict(r) if isinstance(r, dict) else list(r)
                                                             for r in self.forcing]
        raw["b_schedule"] = list(self.b_schedule)
        if raw["omega"] is not None:
            raw["omega"] = list(raw["omega"])
        return validate(raw)

    def fit(self, X=None, y=None):
        """Run the iteration. ``X`` and ``y`` are ignored (the problem has no training data)."""
        cfg = self._config()
        result = run_iteration(cfg.beam(), cfg.hierarchy(), cfg.omega_vector(), cfg.v_max, cfg.settings(),
                               cfg.s0, cfg.r0)
        self.config_ = cfg
        self.normal_form_ = result.normal
        self.state_ = result.state
        self.report_ = [r.to_dict() for r in result.records]
        self.status_ = result.status
        self.n_modes_ = cfg.beam().n_modes
        self.n_angles_ = max((link.b for link in result.state.chain), default=cfg.b_schedule[0])
        return self

    def transform(self, X):
        """Mode amplitudes ``q(theta)`` for each row of angles ``X`` (shape ``(n, n_angles_)``)."""
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=float)
        if X.shape[1] < self.n_angles_:
            raise InvalidInputError(f"expected at least {self.n_angles_} angles per row, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.n_modes_))
        for i, th in enumerate(X):
            out[i], _ = compose_embedding(self.state_, th)
        return out
