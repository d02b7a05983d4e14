"""Physical checks of a reconstructed torus: PDE residual and direct Galerkin integration.

Only :func:`reconstruct_solution` touches the transform chain. The residual and
the time integrator work from mode amplitudes and the forcing alone so they can
serve as oracles for the normal-form machinery.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .beam import BeamParams, basis_eval
from .exceptions import InvalidInputError
from .forcing import ForcingHierarchy


def default_step(beam: BeamParams) -> float:
    """``h = (1/20) * 2 pi / mu_N``: twenty steps per period of the fastest mode."""
    return 2.0 * math.pi / beam.mu[-1] / 20.0


def space_grid(n_points: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(n_points) / n_points


def basis_matrix(beam: BeamParams, x) -> np.ndarray:
    """``Phi[i, j] = phi_j(x_i) / sqrt(mu_j)`` so that ``u = Phi @ q``."""
    x = np.asarray(x, dtype=float)
    return np.stack([basis_eval(j, x) / math.sqrt(beam.mu[j]) for j in range(beam.n_modes)], axis=1)


@dataclass
class Reconstruction:
    t: np.ndarray
    x: np.ndarray
    q: np.ndarray      # (T, n_modes)
    chi: np.ndarray    # (T, n_modes), conjugate coordinate
    u: np.ndarray      # (T, X)


def reconstruct_solution(chain, beam: BeamParams, omega, t, x=None) -> Reconstruction:
    """Mode amplitudes ``q_j(omega t)`` on the torus and ``u(t, x) = sum_j q_j phi_j(x) / sqrt(mu_j)``.

    ``chain`` is a list of generator links (or an iteration state).
    """
    from .driver import IterationState, compose_embedding

    if isinstance(chain, IterationState):
        chain = chain.chain
    t = np.asarray(t, dtype=float)
    x = space_grid(8 * beam.n_modes) if x is None else np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    n = beam.n_modes
    q = np.zeros((len(t), n))
    chi = np.zeros((len(t), n))
    for i, ti in enumerate(t):
        qi, z = compose_embedding(list(chain), omega * ti, n_modes=n)
        q[i] = qi
        # zbar = conj(z) on real generators, so chi = i (z - zbar)/sqrt 2 = -sqrt 2 Im z
        chi[i] = -math.sqrt(2.0) * z.imag
    u = q @ basis_matrix(beam, x).T
    return Reconstruction(t, x, q, chi, u)


@dataclass
class ResidualReport:
    """Residual of ``u_tt + u_xxxx + m u + psi_0 + psi_1 u + psi_2 u^2 + psi_3 u^3``."""

    t: np.ndarray
    x: np.ndarray
    h: float
    sup: float
    l2: float
    discretization_bound: float
    q_norm_max: float | None = None
    integration_distance: float | None = None
    sup_t: np.ndarray | None = None

    def summary(self) -> dict:
        out = {"h": self.h, "sup": self.sup, "l2": self.l2, "discretization_bound": self.discretization_bound,
               "n_t": int(len(self.t)), "n_x": int(len(self.x))}
        if self.q_norm_max is not None:
            out["q_norm_max"] = self.q_norm_max
        if self.integration_distance is not None:
            out["integration_distance"] = self.integration_distance
        return out


def _psi_on_times(forcing: ForcingHierarchy | None, omega, t) -> np.ndarray:
    psi = np.zeros((4, len(t)))
    if forcing is None:
        return psi
    b = forcing.b_schedule[-1]
    omega = np.asarray(omega, dtype=float)[:b]
    for i, ti in enumerate(t):
        th = omega * ti
        for l in range(4):
            psi[l, i] = forcing.eval_psi(l, th)
    return psi


def spatial_fourth_derivative(u: np.ndarray, power: int = 4) -> np.ndarray:
    """``d^4 u / dx^4`` along the last axis via FFT (exact for band-limited periodic data).

    ``power`` is exposed so tests can confirm a wrong derivative order is detected.
    """
    n = u.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    return np.real(np.fft.ifft((1j * k) ** power * np.fft.fft(u, axis=-1), axis=-1))


def pde_residual(u: np.ndarray, t, x, forcing: ForcingHierarchy | None, beam: BeamParams, omega,
                 derivative_power: int = 4) -> ResidualReport:
    """Residual of the beam equation on a uniform ``(t, x)`` grid.

    ``u_tt`` uses second-order central differences (interior times only), the
    fourth space derivative is spectral on the uniform periodic grid.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if len(t) < 3:
        raise InvalidInputError("need at least 3 time points")
    h = float(t[1] - t[0])
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise InvalidInputError("time grid must be uniform")
    u_tt = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    uc = u[1:-1]
    psi = _psi_on_times(forcing, omega, t[1:-1])
    res = (u_tt + spatial_fourth_derivative(uc, derivative_power) + beam.m * uc
           + psi[0][:, None] + psi[1][:, None] * uc + psi[2][:, None] * uc**2 + psi[3][:, None] * uc**3)
    sup = float(np.max(np.abs(res)))
    dx = 2.0 * math.pi / u.shape[1]
    l2 = float(np.sqrt(np.max(np.sum(res**2, axis=1) * dx)))
    if len(t) >= 5:
        d4 = np.max(np.abs(u[4:] - 4 * u[3:-1] + 6 * u[2:-2] - 4 * u[1:-3] + u[:-4])) / h**4
    else:
        d4 = 0.0
    return ResidualReport(t[1:-1], x, h, sup, l2, h**2 / 12.0 * float(d4), sup_t=np.max(np.abs(res), axis=1))


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    energy_drift: float | None


def _projector(beam: BeamParams):
    n_x = 8 * beam.n_modes
    x = space_grid(n_x)
    Phi = basis_matrix(beam, x)            # u = Phi q
    w = 2.0 * math.pi / n_x
    # sqrt(mu_j) * int f phi_j dx  =  mu_j * int f phi_j/sqrt(mu_j) dx
    proj = (Phi * w * beam.mu[None, :]).T  # (n_modes, X)
    return Phi, proj


def direct_integrate(q0, qdot0, forcing: ForcingHierarchy | None, beam: BeamParams, omega,
                     t_span: tuple[float, float], h: float | None = None) -> Trajectory:
    """Velocity-Verlet integration of the Galerkin system.

    ``q_j'' = -mu_j^2 q_j - sqrt(mu_j) int f(u, t) phi_j dx`` with
    ``f = psi_0 + psi_1 u + psi_2 u^2 + psi_3 u^3`` and ``theta = omega t``.
    Projections use the trapezoid rule on ``8 (N + 1)`` points, exact for the
    trigonometric degrees involved.
    """
    h = default_step(beam) if h is None else float(h)
    t0, t1 = map(float, t_span)
    n_steps = int(round((t1 - t0) / h))
    if n_steps < 1:
        raise InvalidInputError("empty time span")
    if h * beam.mu[-1] > 0.5:
        warnings.warn(f"step h={h:.3g} under-resolves the fastest mode (h mu_N = {h * beam.mu[-1]:.2f})",
                      RuntimeWarning, stacklevel=2)
    Phi, proj = _projector(beam)
    mu2 = beam.mu**2
    omega = np.asarray(omega, dtype=float)
    b = forcing.b_schedule[-1] if forcing is not None else 0

    def accel(q, t):
        acc = -mu2 * q
        if forcing is None:
            return acc
        th = omega[:b] * t
        p0, p1, p2, p3 = (forcing.eval_psi(l, th) for l in range(4))
        u = Phi @ q
        f = p0 + p1 * u + p2 * u**2 + p3 * u**3
        return acc - proj @ f

    q = np.array(q0, dtype=float)
    qd = np.array(qdot0, dtype=float)
    t = t0 + h * np.arange(n_steps + 1)
    Q = np.empty((n_steps + 1, len(q)))
    QD = np.empty_like(Q)
    Q[0], QD[0] = q, qd
    a = accel(q, t0)
    for i in range(n_steps):
        qd_half = qd + 0.5 * h * a
        q = q + h * qd_half
        a = accel(q, t[i + 1])
        qd = qd_half + 0.5 * h * a
        Q[i + 1], QD[i + 1] = q, qd
    drift = None
    if forcing is None:
        E = 0.5 * np.sum(QD**2 + mu2 * Q**2, axis=1)
        drift = float(np.max(np.abs(E - E[0])) / E[0]) if E[0] > 0 else 0.0
    return Trajectory(t, Q, QD, drift)


def linear_response_mode0(forcing: ForcingHierarchy, beam: BeamParams, omega, t, psi1_const: float) -> np.ndarray:
    """Closed-form periodic response of mode 0 to ``psi_0`` with constant ``psi_1``.

    Solves ``q'' + (mu_0^2 + c) q = -sqrt(2 pi mu_0) psi_0(omega t)`` term by term,
    where ``c = psi1_const`` is the full (weighted) value of ``psi_1``.
    """
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    mu0 = beam.mu[0]
    out = np.zeros_like(t, dtype=complex)
    for j in range(forcing.n_blocks):
        blk = forcing.block(j)
        slots = list(forcing.new_angles(j))
        w = forcing.weight(j)
        for k, c in blk.coeffs[0].items():
            freq = float(np.dot(k, omega[slots]))
            amp = -math.sqrt(2.0 * math.pi * mu0) * w * c / (mu0**2 + psi1_const - freq**2)
            out += amp * np.exp(1j * freq * t)
    return out.real


def verify_run(chain, beam: BeamParams, forcing: ForcingHierarchy, omega, window: float | None = None,
               h: float | None = None, a: float = 0.0, p: float = 1.0, integrate: bool = True) -> ResidualReport:
    """Reconstruct, compute the residual and (optionally) compare with direct integration."""
    from .algebra import seq_norm

    h = default_step(beam) if h is None else float(h)
    if window is None:
        b = max((link.b for link in chain), default=1)
        window = 2.0 * math.pi / float(np.min(np.abs(np.asarray(omega)[:b])))
    n = int(round(window / h))
    t = h * np.arange(n + 1)
    rec = reconstruct_solution(chain, beam, omega, t)
    report = pde_residual(rec.u, t, rec.x, forcing, beam, omega)
    report.q_norm_max = float(max(seq_norm(qi, a, p + 2) for qi in rec.q))
    if integrate:
        traj = direct_integrate(rec.q[0], beam.mu * rec.chi[0], forcing, beam, omega, (0.0, t[-1]), h)
        report.integration_distance = float(np.max(np.abs(traj.q - rec.q)))
    return report
