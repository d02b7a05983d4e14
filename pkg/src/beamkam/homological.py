"""Solution of the linearized conjugacy equation of one normalization step.

Coefficients are kept in absolute size (no factor ``eps_v`` pulled out). Given
the low part ``R`` (degree <= 2) and the high part ``P_high`` (degree >= 3) the
generator ``F`` of degree <= 2 is chosen so that

    {N, F} + R + {P_high, F}^{low} = dconst + sum_j dOmega_j z_j zbar_j

holds exactly on the truncated coefficient space. With the bracket convention
of :mod:`beamkam.algebra`, ``{N, F}`` multiplies each term by
``-i * divisor`` so every solved coefficient is ``R / (i * divisor)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import PolyHamiltonian, bracket_with_N, coef_norm, k_dot, k_l1, poisson_bracket
from .exceptions import OutOfClassError, RealityViolation, ResonantParameterError

logger = logging.getLogger(__name__)


@dataclass
class NormalFormState:
    """Tangential frequencies ``omega`` and normal frequencies ``Omega`` with drift history.

    ``omega`` holds the frequencies of every angle that can become active; only
    the first ``b_v`` entries enter at step ``v``.
    """

    v: int
    omega: np.ndarray
    Omega0: np.ndarray
    drift: list = field(default_factory=list)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.Omega0 = np.asarray(self.Omega0, dtype=float)
        self.drift = [np.asarray(d, dtype=float) for d in self.drift]

    @property
    def Omega(self) -> np.ndarray:
        out = self.Omega0.copy()
        for d in self.drift:
            out = out + d
        return out

    def advanced(self, dOmega) -> "NormalFormState":
        return NormalFormState(self.v + 1, self.omega, self.Omega0, self.drift + [np.asarray(dOmega, float)])

    def max_drift(self) -> float:
        return float(np.max(np.abs(self.Omega - self.Omega0)))


@dataclass(frozen=True)
class StepScale:
    """Screening data of step ``v``: ``alpha_v`` and the active angle count ``b_v``."""

    v: int
    alpha: float
    b: int


@dataclass(frozen=True)
class ScreenResult:
    passed: bool
    margin: float
    divisor: float
    threshold: float


def l2_weight(l) -> float:
    """``<l>_2 = max(1, |sum_j j^2 l_j|)``."""
    l = np.asarray(l)
    return float(max(1.0, abs(float(np.dot(np.arange(len(l)) ** 2, l)))))


def _check_class(l):
    if int(np.sum(np.abs(l))) > 2:
        raise OutOfClassError(f"|l|_1 = {int(np.sum(np.abs(l)))} > 2 for l={tuple(int(x) for x in l)}")


def divisor(k, l, state: NormalFormState) -> float:
    """``<k, omega> + <l, Omega>``."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l)
    _check_class(l)
    return float(np.dot(k, state.omega[: len(k)]) + np.dot(l, state.Omega))


def screen_threshold(k, l, alpha: float, v: int, b: int) -> float:
    kn = float(np.sum(np.abs(k)))
    return alpha * l2_weight(l) / ((1.0 + v * v) * (kn + 1.0) ** (2 * b + 2))


def screen(k, l, state: NormalFormState, scale: StepScale) -> ScreenResult:
    """Non-resonance test ``|divisor| >= alpha <l>_2 / ((1+v^2)(|k|+1)^{2b+2})``."""
    d = divisor(k, l, state)
    thr = screen_threshold(k, l, scale.alpha, scale.v, scale.b)
    return ScreenResult(abs(d) >= thr, abs(d) - thr, d, thr)


def _exponent_split(e, n):
    g = np.array(e[:n])
    h = np.array(e[n:])
    return g, h


def _divide(R: PolyHamiltonian, state: NormalFormState, scale: StepScale):
    """Divide each used coefficient by ``i * divisor``; collect the ``(k=0, l=0)`` entries.

    Returns ``(F, resonant_block, min_margin)`` where ``resonant_block`` holds the
    excluded ``(k=0, l=0)`` terms.
    """
    n = R.n_modes
    K, b = R.K, R.n_angles
    kd = k_dot(state.omega, K, b)
    kn = k_l1(K, b)
    center = (K,) * b
    F = PolyHamiltonian.zero_like(R)
    kept = PolyHamiltonian.zero_like(R)
    min_margin = np.inf
    for e, arr in R.terms.items():
        g, h = _exponent_split(e, n)
        l = g - h
        _check_class(l)
        d = kd + float(np.dot(l, state.Omega))
        used = arr != 0
        if not np.any(l):
            # k = 0 and l = 0 is the averaged part, never divided
            if used[center]:
                keep = np.zeros_like(arr)
                keep[center] = arr[center]
                kept.terms[e] = keep
            used = used.copy()
            used[center] = False
        if not np.any(used):
            continue
        thr = np.broadcast_to(
            scale.alpha * l2_weight(l) / ((1.0 + scale.v**2) * (kn + 1.0) ** (2 * scale.b + 2)), arr.shape)
        margin = np.where(used, np.abs(d) - thr, np.inf)
        worst = np.unravel_index(int(np.argmin(margin)), margin.shape) if b else ()
        if margin[worst] < 0:
            kvec = tuple(int(i) - K for i in worst)
            raise ResonantParameterError(kvec, tuple(int(x) for x in l), scale.v,
                                         float(np.broadcast_to(d, arr.shape)[worst]), float(thr[worst]))
        min_margin = min(min_margin, float(margin[worst]))
        F.terms[e] = np.where(used, arr / np.where(used, 1j * d, 1.0), 0)
    return F, kept, min_margin


def solve_F1(R_low: PolyHamiltonian, state: NormalFormState, scale: StepScale):
    """Solve the degree-0 and degree-1 groups.

    Returns
    -------
    F1 : PolyHamiltonian
        Generator part of degree <= 1.
    const : complex
        The ``k = 0`` constant of ``R_low`` (routed to the normal form).
    margin : float
        Smallest ``|divisor| - threshold`` over the divided coefficients.
    """
    part = R_low.degree_part(0, 1)
    F1, kept, margin = _divide(part, state, scale)
    zero = tuple([0] * (2 * R_low.n_modes))
    const = complex(kept.terms[zero][(R_low.K,) * R_low.n_angles]) if zero in kept.terms else 0j
    return F1, const, margin


def correction_W(P_high: PolyHamiltonian, F1: PolyHamiltonian) -> PolyHamiltonian:
    """``{P3, F1}`` with ``P3`` the cubic part of ``P_high``; result has degree exactly 2."""
    P3 = P_high.degree_part(3)
    W = poisson_bracket(P3, F1.degree_part(0, 1))
    bad = W.degrees() - {2}
    assert not bad, f"correction term has unexpected degrees {bad}"
    return W


def solve_F2(B: PolyHamiltonian, state: NormalFormState, scale: StepScale, reality_tol: float = 1e-10,
             ref_scale: float = 0.0):
    """Solve the degree-2 group, leaving the ``(k=0, z_j zbar_j)`` entries to the frequencies.

    Returns
    -------
    F2 : PolyHamiltonian
    B11_diag : ndarray
        Real averages ``[B^{11}_{jj}]``; imaginary parts above ``reality_tol`` times
        ``max(|B|, ref_scale)`` raise :class:`RealityViolation`.
    margin : float
    """
    part = B.degree_part(2)
    F2, kept, margin = _divide(part, state, scale)
    n = B.n_modes
    diag = np.zeros(n, dtype=complex)
    for e, arr in kept.terms.items():
        g, _ = _exponent_split(e, n)
        j = int(np.argmax(g))
        diag[j] = arr[(B.K,) * B.n_angles]
    ref = max(B.max_abs(), float(np.max(np.abs(diag))), ref_scale)
    if np.any(np.abs(diag.imag) > reality_tol * max(ref, 1e-300)):
        raise RealityViolation(f"averaged diagonal has imaginary part {np.max(np.abs(diag.imag)):.3e}")
    return F2, diag.real.copy(), margin


def normal_update(R00_avg: float, B11_diag, eps_v: float, reality_tol: float = 1e-10):
    """``dOmega_j = eps_v [B^{11}_{jj}]`` and ``dconst = eps_v [R^{00}]`` (the latter only logged)."""
    B11_diag = np.asarray(B11_diag)
    if np.iscomplexobj(B11_diag):
        scale = max(float(np.max(np.abs(B11_diag))), 1e-300)
        if np.any(np.abs(B11_diag.imag) > reality_tol * scale):
            raise RealityViolation("normal-frequency correction is not real")
        B11_diag = B11_diag.real
    dconst = eps_v * complex(R00_avg)
    if abs(dconst.imag) > reality_tol * max(abs(dconst), 1e-300):
        raise RealityViolation("normal-form constant is not real")
    logger.debug("normal-form constant %.6e dropped", dconst.real)
    return eps_v * np.asarray(B11_diag, dtype=float), float(dconst.real)


def delta_N(template: PolyHamiltonian, dOmega, dconst: float) -> PolyHamiltonian:
    """``dconst + sum_j dOmega_j z_j zbar_j`` on the truncation of ``template``."""
    n = template.n_modes
    items = [((0,) * template.n_angles, [0] * n, [0] * n, dconst)] if dconst else []
    for j, w in enumerate(np.asarray(dOmega)):
        if w:
            g = [0] * n
            g[j] = 1
            items.append(((0,) * template.n_angles, g, g, w))
    return PolyHamiltonian.from_terms(n, template.n_angles, template.K, items, template.D)


@dataclass(frozen=True)
class HomologicalSolution:
    """Everything one solve produces (absolute coefficients)."""

    F: PolyHamiltonian
    W: PolyHamiltonian
    B: PolyHamiltonian
    dOmega: np.ndarray
    dconst: float
    margin: float


def solve_homological(R: PolyHamiltonian, P_high: PolyHamiltonian, state: NormalFormState,
                      scale: StepScale, ref_scale: float = 0.0) -> HomologicalSolution:
    """Full solve: ``F1`` by division, ``W = {P3, F1}``, ``B = R2 + W``, ``F2`` by division.

    ``ref_scale`` is the coefficient size the reality check of the averaged
    diagonal is measured against (rounding from earlier steps lives there).
    """
    F1, const, m1 = solve_F1(R, state, scale)
    W = correction_W(P_high, F1)
    B = R.degree_part(2) + W
    F2, diag, m2 = solve_F2(B, state, scale, ref_scale=max(ref_scale, R.max_abs(), P_high.max_abs()))
    dOmega, dconst = normal_update(const, diag, 1.0)
    return HomologicalSolution(F1 + F2, W, B, dOmega, dconst, min(m1, m2))


def residual_check(state: NormalFormState, R: PolyHamiltonian, P_high: PolyHamiltonian,
                   F: PolyHamiltonian, dOmega, dconst: float, relative: bool = False) -> float:
    """Coefficient majorant of ``{N, F} + R + {P_high, F}^{low} - dN``.

    The ``{P_high, F}`` bracket is taken in full and then filtered by degree, so
    this does not reuse the cubic-only shortcut of :func:`correction_W`.
    """
    NF = bracket_with_N(state.omega, state.Omega, F)
    PF = poisson_bracket(P_high, F).degree_part(0, 2)
    res = NF + R + PF - delta_N(R, dOmega, dconst)
    value = coef_norm(res)
    if relative:
        ref = coef_norm(R) + coef_norm(PF)
        return value / ref if ref > 0 else value
    return value
