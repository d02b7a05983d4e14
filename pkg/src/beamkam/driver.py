"""KAM iteration: constants schedule, single step, full run, embedding and snapshots."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import algebra
from .algebra import NormParams, PolyHamiltonian, bracket_with_N, coef_norm, degree_split, vf_majorant_norm
from .beam import BeamParams, assemble_block_perturbation
from .exceptions import DivergenceWarning, InvalidInputError, InvalidParameterError, ResonantParameterError
from .forcing import ForcingHierarchy
from .homological import NormalFormState, StepScale, delta_N, residual_check, solve_homological

logger = logging.getLogger(__name__)

ZETA2 = math.pi**2 / 6.0


# ------------------------------------------------------------------- schedule
@dataclass(frozen=True)
class ScheduleRow:
    v: int
    eps: float
    alpha: float
    M: float
    lam: float
    sigma: float
    s: float
    r: float
    d: float
    b: int


@dataclass(frozen=True)
class Schedule:
    """Per-step constants; ``rows[v]`` for ``v = 0..v_max + 1``."""

    epsilon: float
    rho: float
    s0: float
    r0: float
    rows: tuple
    sigma_adjusted: bool

    def __getitem__(self, v: int) -> ScheduleRow:
        return self.rows[v]

    def __len__(self) -> int:
        return len(self.rows)


def _tau(v: int) -> float:
    return sum(1.0 / j**2 for j in range(1, v + 1)) / (2.0 * ZETA2)


def build_schedule(epsilon: float, rho: float, s0: float, r0: float, b_schedule: Sequence[int],
                   v_max: int) -> Schedule:
    """Iteration constants through step ``v_max + 1`` (the extra row closes ``d_{v_max}``).

    ``b_v`` follows ``b_schedule`` and stays at its last entry once the
    schedule is exhausted.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < rho:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    if s0 <= 0 or r0 <= 0:
        raise InvalidParameterError("s0 and r0 must be positive")
    if v_max < 0:
        raise InvalidParameterError("v_max must be >= 0")
    b_schedule = tuple(int(b) for b in b_schedule)
    n = v_max + 2
    eps = [math.sqrt(epsilon)]
    for _ in range(1, n):
        eps.append(eps[-1] ** (1.0 + rho / 2.0))
    sigma0 = s0 / 24.0
    adjusted = sigma0 > 1.0 / 20.0
    if adjusted:
        logger.info("sigma_0 = s0/24 = %.4g exceeds 1/20; using 1/20", sigma0)
        sigma0 = 1.0 / 20.0
    M1 = eps[0] ** (1.0 - rho / 4.0)
    r = [(1.0 - _tau(v)) * r0 for v in range(n + 1)]
    rows = []
    sigma, s = sigma0, s0
    for v in range(n):
        M = 0.0 if v == 0 else (M1 + 1.0) * (2.0 - 2.0 ** (1 - v)) - 1.0
        alpha = eps[v] ** (rho / 18.0)
        b = b_schedule[min(v, len(b_schedule) - 1)]
        rows.append(ScheduleRow(v, eps[v], alpha, M, alpha / (M + 1.0), sigma, s, r[v],
                                (r[v] - r[v + 1]) / 4.0, b))
        s -= 6.0 * sigma
        sigma /= 2.0
    return Schedule(float(epsilon), float(rho), float(s0), float(r0), tuple(rows), adjusted)


# ----------------------------------------------------------------- run config
@dataclass(frozen=True)
class KAMSettings:
    """Numerical settings shared by every step."""

    K: int = 3
    D: int = 4
    L: int = 8
    a: float = 0.0
    p: float = 1.0
    lie_rtol: float = 1e-18


@dataclass
class ChainLink:
    """Generator of step ``v`` acting on ``b`` angles."""

    v: int
    b: int
    F: PolyHamiltonian


@dataclass
class IterationState:
    """State after ``v`` steps: normal form, split perturbation and transform chain."""

    v: int
    normal: NormalFormState
    R: PolyHamiltonian
    P_high: PolyHamiltonian
    chain: list = field(default_factory=list)
    dconst: list = field(default_factory=list)
    fourier_tail: float = 0.0
    next_block: int = 1

    def check_invariants(self):
        if self.R.degrees() - {0, 1, 2}:
            raise AssertionError(f"low part carries degrees {self.R.degrees()}")
        if self.P_high.degrees() - {3, 4}:
            raise AssertionError(f"high part carries degrees {self.P_high.degrees()}")
        if len(self.chain) != self.v:
            raise AssertionError("chain length differs from the step counter")


@dataclass
class StepRecord:
    """One line of the per-step report."""

    v: int
    b: int
    eps_v: float
    eps_next: float
    alpha_v: float
    R_norm: float
    R_rel: float
    R_next_norm: float
    R_next_rel: float
    realized_ratio: float
    scheduled_ratio: float
    P_high_norm: float
    F_norm: float
    F_coef_norm: float
    generator_bound_diag: float
    residual: float
    screen_margin: float
    max_drift: float
    Omega: list
    dconst: float
    lie_tail: float
    fourier_tail: float
    activated_block: int | None

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------------ initial
def initial_state(beam: BeamParams, forcing: ForcingHierarchy, omega, settings: KAMSettings) -> IterationState:
    """Split ``eps * P^{b_0}`` into low and high parts; normal frequencies start at ``mu``."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape[0] < forcing.b_schedule[-1]:
        raise InvalidInputError(f"omega needs {forcing.b_schedule[-1]} entries, got {omega.shape[0]}")
    P0 = assemble_block_perturbation(0, beam, forcing, K=settings.K, D=settings.D) * forcing.weight(0)
    low, high = degree_split(P0)
    normal = NormalFormState(0, omega, beam.mu.copy())
    return IterationState(0, normal, low, high, [], [], 0.0, 1)


def _norm_params(row: ScheduleRow, settings: KAMSettings) -> NormParams:
    return NormParams(a=settings.a, p=settings.p, s=row.s, r=row.r)


def _series(H: PolyHamiltonian, F: PolyHamiltonian, settings: KAMSettings):
    """Lie-series pieces ``ad_F^n H / n!`` with early stop once pieces fall below ``lie_rtol``."""
    pieces = [H]
    base = coef_norm(H)
    if base == 0.0 or F.is_zero():
        return pieces, 0.0
    term = H
    norms = [base]
    for n in range(1, settings.L + 1):
        term = algebra.poisson_bracket(term, F) / n
        nt = coef_norm(term)
        norms.append(nt)
        pieces.append(term)
        if nt <= settings.lie_rtol * base:
            break
    last, prev = norms[-1], norms[-2]
    if last == 0.0:
        return pieces, 0.0
    q = last / prev if prev > 0 else math.inf
    if q >= 1.0:
        raise DivergenceWarning(q)
    return pieces, last * q / (1.0 - q)


def _sum_split(pieces: Sequence[PolyHamiltonian], template: PolyHamiltonian):
    """Sum ``pieces`` separately over low and high degrees (pruning stays per part)."""
    low = PolyHamiltonian.zero_like(template)
    high = PolyHamiltonian.zero_like(template)
    tail = 0.0
    for P in pieces:
        lo, hi = degree_split(P)
        tail += P.tail
        low = low + lo
        high = high + hi
    low.tail = 0.0
    high.tail = 0.0
    return low, high, tail


def push_through_chain(H: PolyHamiltonian, chain: Sequence[ChainLink], settings: KAMSettings):
    """``H o Phi_0 o Phi_1 o ... o Phi_last``: transform by ``F_0`` first."""
    tail = 0.0
    fourier = 0.0
    for link in chain:
        F = link.F.lift(H.n_angles)
        pieces, tb = _series(H, F, settings)
        low, high, ft = _sum_split(pieces, H)
        H = low + high
        tail = max(tail, tb)
        fourier += ft
    return H, tail, fourier


# --------------------------------------------------------------------- step
def kam_step(state: IterationState, schedule: Schedule, beam: BeamParams, forcing: ForcingHierarchy,
             settings: KAMSettings) -> tuple[IterationState, StepRecord]:
    """One normalization step ``v -> v + 1``.

    Raises
    ------
    ResonantParameterError
        A divisor needed by the solve failed the screen.
    DivergenceWarning
        A Lie series tail failed to contract.
    """
    v = state.v
    row, nxt = schedule[v], schedule[v + 1]
    R = state.R.lift(row.b)
    P_high = state.P_high.lift(row.b)
    normal = state.normal
    sol = solve_homological(R, P_high, normal, StepScale(v, row.alpha, row.b))
    F = sol.F
    residual = residual_check(normal, R, P_high, F, sol.dOmega, sol.dconst, relative=True)

    # transformed Hamiltonian minus the new normal form
    X0 = bracket_with_N(normal.omega, normal.Omega, F)
    pX, tX = _series(X0, F, settings)
    pX = [P / (n + 1) for n, P in enumerate(pX)]
    pR, tR = _series(R, F, settings)
    pP, tP = _series(P_high, F, settings)
    dN = delta_N(R, sol.dOmega, sol.dconst)
    low, high, ftail = _sum_split(pX + pR + pP + [-dN], R)
    lie_tail = max(tX, tR, tP)

    chain = state.chain + [ChainLink(v, row.b, F)]
    activated = None
    if state.next_block < forcing.n_blocks:
        j = state.next_block
        b_new = max(forcing.b_schedule[j], nxt.b)
        A = assemble_block_perturbation(j, beam, forcing, K=settings.K, n_angles=b_new, D=settings.D)
        A = A * forcing.weight(j)
        A, t_act, f_act = push_through_chain(A, chain, settings)
        a_lo, a_hi = degree_split(A)
        low = low.lift(b_new) + a_lo
        high = high.lift(b_new) + a_hi
        lie_tail = max(lie_tail, t_act)
        ftail += f_act
        activated = j
    b_next = max(nxt.b, low.n_angles)
    low, high = low.lift(b_next), high.lift(b_next)
    low.tail = high.tail = 0.0

    new_normal = normal.advanced(sol.dOmega)
    new_state = IterationState(v + 1, new_normal, low, high, chain, state.dconst + [sol.dconst],
                               state.fourier_tail + ftail + F.tail,
                               state.next_block + (1 if activated is not None else 0))
    new_state.check_invariants()

    np_v, np_n = _norm_params(row, settings), _norm_params(nxt, settings)
    R_norm = vf_majorant_norm(R, np_v)
    R_next = vf_majorant_norm(low, np_n)
    F_norm = vf_majorant_norm(F, np_v)
    A_v = R_norm / row.eps
    rec = StepRecord(
        v=v, b=row.b, eps_v=row.eps, eps_next=nxt.eps, alpha_v=row.alpha,
        R_norm=R_norm, R_rel=A_v, R_next_norm=R_next, R_next_rel=R_next / nxt.eps,
        realized_ratio=(R_next / R_norm) if R_norm > 0 else 0.0,
        scheduled_ratio=nxt.eps / row.eps,
        P_high_norm=vf_majorant_norm(P_high, np_v), F_norm=F_norm, F_coef_norm=coef_norm(F),
        generator_bound_diag=row.eps * row.alpha**-2 / row.sigma * A_v**2,
        residual=residual, screen_margin=float(sol.margin) if np.isfinite(sol.margin) else None,
        max_drift=new_normal.max_drift(), Omega=[float(x) for x in new_normal.Omega],
        dconst=sol.dconst, lie_tail=lie_tail, fourier_tail=new_state.fourier_tail,
        activated_block=activated)
    return new_state, rec


# ---------------------------------------------------------------------- run
@dataclass
class RunResult:
    """Outcome of :func:`run_iteration`."""

    status: str
    normal: NormalFormState
    state: IterationState
    schedule: Schedule
    records: list
    initial: dict
    error: dict | None = None


def initial_record(state: IterationState, schedule: Schedule, beam: BeamParams, forcing: ForcingHierarchy,
                   settings: KAMSettings) -> dict:
    """Norms of the unweighted first block and of the initial split."""
    row = schedule[0]
    params = _norm_params(row, settings)
    P = assemble_block_perturbation(0, beam, forcing, K=settings.K, D=settings.D)
    return {
        "v": 0,
        "block0_vf_norm": vf_majorant_norm(P, params),
        "eps_block0": forcing.weight(0),
        "R_norm": vf_majorant_norm(state.R, params),
        "P_high_norm": vf_majorant_norm(state.P_high, params),
        "eps_0": row.eps,
    }


def run_iteration(beam: BeamParams, forcing: ForcingHierarchy, omega, v_max: int, settings: KAMSettings,
                  s0: float = 0.5, r0: float = 1.0, start: IterationState | None = None,
                  snapshot_dir: str | Path | None = None, raise_errors: bool = True,
                  stop_on_growth: bool = True, start_records: Sequence[StepRecord] | None = None) -> RunResult:
    """Run ``v_max`` steps (or continue ``start`` up to ``v_max``).

    ``start_records`` are the step records that produced ``start`` (as stored in
    a snapshot); they are prepended so a resumed run reports every step.

    On a resonant divisor or a diverging Lie series the partial result is
    attached to the raised exception as ``exc.partial`` (or returned with the
    matching status when ``raise_errors`` is false).
    """
    schedule = build_schedule(forcing.epsilon, forcing.rho, s0, r0, forcing.b_schedule, v_max)
    state = initial_state(beam, forcing, omega, settings) if start is None else start
    init = initial_record(initial_state(beam, forcing, omega, settings), schedule, beam, forcing, settings)
    records: list[StepRecord] = list(start_records or [])
    status = "ok"
    error = None
    prev_rel = records[-1].R_next_rel if records else None
    if snapshot_dir is not None and start is None:
        save_state(state, schedule, Path(snapshot_dir) / "state_000.txt")
    while state.v < v_max:
        try:
            state, rec = kam_step(state, schedule, beam, forcing, settings)
        except ResonantParameterError as exc:
            status, error = "resonant", {"type": "resonant", "k": list(exc.k), "l": list(exc.l),
                                         "step": exc.step, "divisor": exc.divisor, "threshold": exc.threshold}
            exc.partial = RunResult(status, state.normal, state, schedule, records, init, error)
            if raise_errors:
                raise
            break
        except DivergenceWarning as exc:
            status, error = "divergence", {"type": "divergence", "ratio": exc.ratio, "step": state.v}
            exc.partial = RunResult(status, state.normal, state, schedule, records, init, error)
            if raise_errors:
                raise
            break
        records.append(rec)
        if snapshot_dir is not None:
            save_state(state, schedule, Path(snapshot_dir) / f"state_{state.v:03d}.txt", records)
        if stop_on_growth and prev_rel is not None and rec.R_next_rel > prev_rel:
            status = "contraction_lost"
            break
        prev_rel = rec.R_next_rel
    return RunResult(status, state.normal, state, schedule, records, init, error)


# ---------------------------------------------------------------- embedding
def _affine_flow_map(F: PolyHamiltonian, theta) -> np.ndarray:
    """Augmented matrix of the time-1 flow of ``F(theta, ., .)`` on ``w = (z, zbar)``.

    With ``F = c + g.w + w.A.w/2`` the flow solves ``w' = J (A w + g)`` where
    ``J = [[0, iI], [-iI, 0]]``; the returned ``(2n+1)``-square matrix maps
    ``(w, 1)`` to ``(w(1), 1)``.
    """
    n = F.n_modes
    theta = np.asarray(theta, dtype=float)[: F.n_angles]
    phase = algebra._phase_grid(theta.astype(complex), F.K, F.n_angles)
    g = np.zeros(2 * n, dtype=complex)
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    for e, arr in F.terms.items():
        c = complex(np.sum(arr * phase))
        e = np.array(e)
        deg = int(e.sum())
        if deg == 1:
            g[int(np.argmax(e))] += c
        elif deg == 2:
            idx = np.flatnonzero(e)
            if len(idx) == 1:
                i = idx[0]
                A[i, i] += 2 * c
            else:
                i, j = idx
                A[i, j] += c
                A[j, i] += c
        elif deg > 2:
            raise InvalidInputError("generator of degree > 2")
    J = np.zeros((2 * n, 2 * n), dtype=complex)
    J[:n, n:] = 1j * np.eye(n)
    J[n:, :n] = -1j * np.eye(n)
    M = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    M[: 2 * n, : 2 * n] = J @ A
    M[: 2 * n, 2 * n] = J @ g
    return expm(M)


def compose_embedding(chain: Sequence[ChainLink] | IterationState, theta, n_modes: int | None = None):
    """Image of the point ``(theta, z = zbar = 0)`` under ``Phi_0 o ... o Phi_{v-1}``.

    Returns ``(q, z)`` with ``q = (z + zbar) / sqrt(2)``.
    """
    if isinstance(chain, IterationState):
        n_modes = chain.R.n_modes
        chain = chain.chain
    if not chain:
        if n_modes is None:
            raise InvalidInputError("n_modes required for an empty chain")
        return np.zeros(n_modes), np.zeros(n_modes, dtype=complex)
    n = chain[0].F.n_modes
    w = np.zeros(2 * n + 1, dtype=complex)
    w[-1] = 1.0
    for link in reversed(chain):
        w = _affine_flow_map(link.F, theta) @ w
    z, zbar = w[:n], w[n: 2 * n]
    q = (z + zbar) / math.sqrt(2.0)
    return q.real.copy(), z


def theta_samples(b: int, n_samples: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * math.pi, size=(n_samples, b))


def embedding_sup_norm(state: IterationState, a: float, p: float, n_samples: int = 64, seed: int = 0) -> float:
    """Sampled ``sup_theta ||q(theta)||_{a, p+2}``."""
    b = max((link.b for link in state.chain), default=1)
    best = 0.0
    for th in theta_samples(b, n_samples, seed):
        q, _ = compose_embedding(state, th)
        best = max(best, algebra.seq_norm(q, a, p + 2))
    return best


# -------------------------------------------------------------- persistence
def save_state(state: IterationState, schedule: Schedule, path: str | Path,
               records: Sequence[StepRecord] = ()) -> Path:
    """Write a resumable text snapshot (floats in hexadecimal).

    ``records`` are stored on a ``@records`` line as JSON; ``repr`` floats
    round-trip exactly, so a resumed report matches the uninterrupted one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    row = schedule[min(state.v, len(schedule) - 1)]
    hexs = lambda xs: [float(x).hex() for x in xs]  # noqa: E731
    header = {
        "v": state.v,
        "schedule_row": {k: (float(x).hex() if isinstance(x, float) else x) for k, x in asdict(row).items()},
        "omega": hexs(state.normal.omega),
        "Omega0": hexs(state.normal.Omega0),
        "drift": [hexs(d) for d in state.normal.drift],
        "Omega": hexs(state.normal.Omega),
        "dconst": hexs(state.dconst),
        "fourier_tail": float(state.fourier_tail).hex(),
        "next_block": state.next_block,
        "chain": [{"v": c.v, "b": c.b} for c in state.chain],
    }
    lines = ["@header " + json.dumps(header, sort_keys=True),
             "@records " + json.dumps([r.to_dict() for r in records], sort_keys=True), "@R"]
    lines += algebra.dump_lines(state.R)
    lines.append("@P_high")
    lines += algebra.dump_lines(state.P_high)
    for i, link in enumerate(state.chain):
        lines.append(f"@F {i}")
        lines += algebra.dump_lines(link.F)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_state(path: str | Path) -> IterationState:
    """Inverse of :func:`save_state`."""
    text = Path(path).read_text().splitlines()
    sections: list[tuple[str, list[str]]] = []
    for ln in text:
        if ln.startswith("@"):
            sections.append((ln, []))
        elif sections:
            sections[-1][1].append(ln)
    if not sections or not sections[0][0].startswith("@header "):
        raise InvalidInputError(f"{path}: not a state snapshot")
    header = json.loads(sections[0][0][len("@header "):])
    unhex = lambda xs: np.array([float.fromhex(x) for x in xs])  # noqa: E731
    normal = NormalFormState(header["v"], unhex(header["omega"]), unhex(header["Omega0"]),
                             [unhex(d) for d in header["drift"]])
    objs = {name: algebra.load_lines(body) for name, body in sections[1:] if not name.startswith("@records")}
    chain = [ChainLink(meta["v"], meta["b"], objs[f"@F {i}"]) for i, meta in enumerate(header["chain"])]
    state = IterationState(header["v"], normal, objs["@R"], objs["@P_high"], chain,
                           [float.fromhex(x) for x in header["dconst"]],
                           float.fromhex(header["fourier_tail"]), header["next_block"])
    return state


def load_records(path: str | Path) -> list[StepRecord]:
    """Step records stored in a snapshot (empty for snapshots written without them)."""
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("@records "):
            return [StepRecord(**d) for d in json.loads(ln[len("@records "):])]
    return []
