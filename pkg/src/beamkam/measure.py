"""Resonant zones in frequency space and Monte Carlo estimates of the excluded measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

import numpy as np
from scipy.special import comb
from scipy.stats import binomtest

from .driver import build_schedule
from .exceptions import InvalidInputError, InvalidParameterError
from .homological import NormalFormState, l2_weight


@dataclass(frozen=True)
class ZoneSpec:
    """Zone ``{omega : |<k, omega> + <l, Omega>| < threshold}`` of step ``v``."""

    v: int
    k: tuple
    l: tuple
    threshold: float

    def __post_init__(self):
        if not any(self.k) and not any(self.l):
            raise InvalidInputError("zone requires (k, l) != 0")
        if not self.threshold > 0:
            raise InvalidInputError("zone threshold must be positive")


def zone_threshold(v: int, k, l, alpha: float, b: int) -> float:
    kn = float(np.sum(np.abs(k)))
    return alpha * l2_weight(l) / ((1.0 + v * v) * (kn + 1.0) ** (2 * b + 2))


def zone_test(omega, zone: ZoneSpec, state: NormalFormState) -> bool:
    """True iff ``omega`` lies strictly inside the zone."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape[0] != len(zone.k):
        raise InvalidInputError(f"omega has {omega.shape[0]} entries, zone expects {len(zone.k)}")
    d = float(np.dot(zone.k, omega) + np.dot(zone.l, state.Omega))
    return abs(d) < zone.threshold


def case1_empty(k, l, beta: float, alpha0: float) -> bool:
    """Zones with ``|k|_1 <= beta <l>_2 / 4`` are empty when ``beta > 6 alpha_0``."""
    if not beta > 6.0 * alpha0:
        raise InvalidParameterError(f"beta={beta:.4g} must exceed 6*alpha_0={6 * alpha0:.4g}")
    return float(np.sum(np.abs(k))) <= beta * l2_weight(l) / 4.0


def normal_indices(n_modes: int) -> list[tuple]:
    """All nonzero ``l`` with ``|l|_1 <= 2`` over ``n_modes`` modes."""
    out = set()
    for j in range(n_modes):
        for s in (1, -1):
            e = [0] * n_modes
            e[j] = s
            out.add(tuple(e))
            e2 = [0] * n_modes
            e2[j] = 2 * s
            out.add(tuple(e2))
    for i, j in combinations(range(n_modes), 2):
        for si, sj in product((1, -1), repeat=2):
            e = [0] * n_modes
            e[i], e[j] = si, sj
            out.add(tuple(e))
    return sorted(out)


def estimate_beta(Omega0, n_modes: int | None = None) -> float:
    """``min_{l != 0} |<l, Omega_0>| / <l>_2`` over ``|l|_1 <= 2``."""
    Omega0 = np.asarray(Omega0, dtype=float)
    ls = normal_indices(len(Omega0) if n_modes is None else n_modes)
    return float(min(abs(np.dot(l, Omega0)) / l2_weight(l) for l in ls))


@dataclass(frozen=True)
class MeasureConfig:
    m: float = 1.0
    N: int = 4
    rho: float = 1.0
    s0: float = 0.5
    r0: float = 1.0
    b_schedule: tuple = (1, 2, 3)
    K_meas: int = 6
    seed: int = 0
    alpha_scale: float = 1.0           # test hook: multiplies every alpha_v
    threshold_floor: float | None = None  # test hook: every threshold raised to at least this
    chunk: int = 2000


@dataclass
class MeasureRow:
    eps: float
    samples: int
    excluded_count: int
    fraction: float
    ci_low: float
    ci_high: float
    fraction_k_nonzero: float
    case1_certified: int
    case1_hits: int
    per_zone_total: float
    per_direction_total: float


@dataclass
class MeasureEstimate:
    rows: list
    fitted_C: float | None
    fitted_exponent: float | None
    beta: float
    neglected_tail: float
    notes: list = field(default_factory=list)

    def csv_lines(self) -> list[str]:
        head = "eps,samples,excluded_count,fraction,ci_low,ci_high,fitted_C,fitted_exponent"
        fmt = lambda x: "" if x is None else repr(float(x))  # noqa: E731
        lines = [head]
        for r in self.rows:
            lines.append(",".join([repr(r.eps), str(r.samples), str(r.excluded_count), repr(r.fraction),
                                   repr(r.ci_low), repr(r.ci_high), fmt(self.fitted_C),
                                   fmt(self.fitted_exponent)]))
        return lines


def _k_vectors(b: int, K: int) -> np.ndarray:
    rng = np.arange(-K, K + 1)
    return np.array(list(product(rng, repeat=b)), dtype=float).reshape(-1, b)


def _lattice_count_l1(b: int, n: int) -> float:
    if n == 0:
        return 1.0
    return float(sum(2**i * comb(b, i, exact=True) * comb(n - 1, i - 1, exact=True) for i in range(1, min(b, n) + 1)))


def _neglected_tail(alpha: float, b: int, v: int, K_meas: int, lmax: float, n_l: int, n_max: int = 20000) -> float:
    """Majorant of per-direction zone measures with ``|k|_1 > K_meas`` (the truncated k-range)."""
    total = 0.0
    for n in range(K_meas + 1, n_max):
        total += _lattice_count_l1(b, n) * 6.0 * alpha * lmax * n_l / (n * (1.0 + v * v) * (n + 1.0) ** (2 * b + 2))
    return total


def mc_measure(v_max: int, samples: int, eps_grid: Sequence[float], config: MeasureConfig = MeasureConfig()
               ) -> MeasureEstimate:
    """Fraction of uniform ``omega in [0,1]^{b_{v_max}}`` lying in any zone of steps ``0..v_max``.

    The same samples are used for every ``epsilon`` so the fractions are
    directly comparable. ``Omega`` is frozen at ``Omega_0 = mu``; the drift is
    far below the thresholds involved.
    """
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    if len(eps_grid) < 1:
        raise InvalidInputError("empty epsilon grid")
    from .beam import BeamParams

    beam = BeamParams(config.m, config.N)
    Omega = beam.mu
    b_max = config.b_schedule[min(v_max, len(config.b_schedule) - 1)]
    rng = np.random.default_rng(config.seed)
    W = rng.uniform(0.0, 1.0, size=(samples, b_max))
    ls = [tuple([0] * beam.n_modes)] + normal_indices(beam.n_modes)
    lO = np.array([float(np.dot(l, Omega)) for l in ls])
    lw = np.array([l2_weight(l) for l in ls])
    beta = estimate_beta(Omega)
    rows = []
    notes = []
    neglected = 0.0
    for eps in eps_grid:
        sched = build_schedule(eps, config.rho, config.s0, config.r0, config.b_schedule, v_max)
        excluded = np.zeros(samples, dtype=bool)
        excluded_knz = np.zeros(samples, dtype=bool)
        case1_cert = case1_hits = 0
        per_zone = per_dir = 0.0
        alpha0 = sched[0].alpha * config.alpha_scale
        case1_on = beta > 6.0 * alpha0
        if not case1_on:
            notes.append(f"eps={eps:g}: beta={beta:.4g} <= 6 alpha_0={6 * alpha0:.4g}, case-1 certification off")
        for v in range(v_max + 1):
            row = sched[v]
            b = row.b
            alpha = row.alpha * config.alpha_scale
            kv = _k_vectors(b, config.K_meas)
            kn = np.abs(kv).sum(axis=1)
            kmin = np.minimum(kv, 0).sum(axis=1)
            kmax = np.maximum(kv, 0).sum(axis=1)
            # thresholds (nk, nl)
            thr = alpha * lw[None, :] / ((1.0 + v * v) * (kn[:, None] + 1.0) ** (2 * b + 2))
            if config.threshold_floor is not None:
                thr = np.maximum(thr, config.threshold_floor)
            trivial = (kn[:, None] == 0) & (np.arange(len(ls))[None, :] == 0)
            # reachable: <k, omega> ranges over [kmin, kmax] on the unit cube
            reach = (lO[None, :] + kmax[:, None] > -thr) & (lO[None, :] + kmin[:, None] < thr) & ~trivial
            if alpha == 0.0 and config.threshold_floor is None:
                reach[:] = False
            if case1_on:
                cert = (kn[:, None] <= beta * lw[None, :] / 4.0) & ~trivial
                case1_cert += int(cert.sum())
            else:
                cert = np.zeros_like(reach)
            ki, li = np.nonzero(reach)
            nz = kn[ki] > 0
            per_zone += float(np.sum(2.0 * thr[ki[nz], li[nz]] / kn[ki[nz]]))
            per_dir += float(np.sum(6.0 * thr[ki[nz], li[nz]] / kn[ki[nz]]))
            if ki.size:
                Wv = W[:, :b]
                for start in range(0, samples, config.chunk):
                    sl = slice(start, start + config.chunk)
                    kw = Wv[sl] @ kv[ki].T
                    inside = np.abs(kw + lO[li][None, :]) < thr[ki, li][None, :]
                    excluded[sl] |= inside.any(axis=1)
                    excluded_knz[sl] |= inside[:, nz].any(axis=1)
                    if case1_on:
                        c = cert[ki, li]
                        case1_hits += int(inside[:, c].sum())
            neglected = max(neglected, _neglected_tail(alpha, b, v, config.K_meas, float(lw.max()), len(ls)))
        count = int(excluded.sum())
        ci = binomtest(count, samples).proportion_ci(confidence_level=0.95, method="exact")
        rows.append(MeasureRow(float(eps), samples, count, count / samples, float(ci.low), float(ci.high),
                               float(excluded_knz.mean()), case1_cert, case1_hits, per_zone, per_dir))
    fitted_C, fitted_exp = _fit(rows, config.rho)
    return MeasureEstimate(rows, fitted_C, fitted_exp, beta, neglected, notes)


def _fit(rows, rho: float):
    eps = np.array([r.eps for r in rows])
    frac = np.array([r.fraction for r in rows])
    if np.all(frac == 0):
        return 0.0, None
    C = float(np.max(frac / eps ** (rho / 48.0)))
    pos = frac > 0
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(eps[pos]), np.log(frac[pos]), 1)[0])
    else:
        slope = None
    return C, slope


def measure_along_line(zone: ZoneSpec, state: NormalFormState, base, direction, n_points: int = 20001,
                       t_range: float = 2.0) -> float:
    """Length of ``{t : base + t * direction in zone}`` for ``t in [-t_range, t_range]`` by dense sampling."""
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    ts = np.linspace(-t_range, t_range, n_points)
    d = (base[None, :] + ts[:, None] * direction[None, :]) @ np.asarray(zone.k, float) + float(np.dot(zone.l, state.Omega))
    return float(np.mean(np.abs(d) < zone.threshold) * 2.0 * t_range)
