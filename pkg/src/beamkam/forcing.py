"""Almost-periodic forcing given as weighted trigonometric blocks on growing angle sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import InvalidBlockError, InvalidInputError, InvalidParameterError


def block_weight(j: int, epsilon: float, rho: float) -> float:
    """Weight ``epsilon ** ((1 + rho) ** j)`` of forcing block ``j``."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if rho <= 0.0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    return float(epsilon ** ((1.0 + rho) ** j))


@dataclass(frozen=True)
class ForcingBlock:
    """Four real trigonometric polynomials on the new angles of one block.

    ``coeffs[l]`` maps a frequency vector ``k`` (one entry per new angle) to a
    complex coefficient; conjugate symmetry ``c[-k] = conj(c[k])`` is enforced.
    """

    index: int
    n_new: int
    coeffs: Mapping[int, Mapping[tuple, complex]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for l in range(4):
            table = {}
            for k, c in dict(self.coeffs.get(l, {})).items():
                k = tuple(int(x) for x in k)
                if len(k) != self.n_new:
                    raise InvalidInputError(
                        f"block {self.index}, psi_{l}: k={k} must have {self.n_new} components")
                c = complex(c)
                if c != 0:
                    table[k] = table.get(k, 0j) + c
            for k, c in table.items():
                partner = table.get(tuple(-x for x in k), 0j)
                if abs(partner - np.conj(c)) > 1e-15 * max(abs(c), 1.0):
                    raise InvalidInputError(
                        f"block {self.index}, psi_{l}: coefficient at k={k} lacks its conjugate partner")
            clean[l] = table
        object.__setattr__(self, "coeffs", clean)

    def max_order(self) -> int:
        return max((max(map(abs, k), default=0) for t in self.coeffs.values() for k in t), default=0)

    def is_zero(self, l: int | None = None) -> bool:
        ls = range(4) if l is None else [l]
        return all(not self.coeffs[i] for i in ls)

    def evaluate(self, l: int, theta_new) -> complex:
        theta_new = np.asarray(theta_new)
        return complex(sum(c * np.exp(1j * np.dot(k, theta_new)) for k, c in self.coeffs[l].items()))


@dataclass(frozen=True)
class H2Entry:
    block: int
    l: int
    sup_majorant: float
    deriv_majorants: tuple
    passed: bool


@dataclass(frozen=True)
class H2Report:
    """Outcome of :meth:`ForcingHierarchy.validate_H2`."""

    C0: float
    entries: tuple
    psi0_nonzero: bool
    passed: bool
    messages: tuple


class ForcingHierarchy:
    """Block structure of the forcing ``psi_l = sum_j eps^{(1+rho)^j} psi_l^{b_j}``.

    Parameters
    ----------
    epsilon : float
        Forcing size in ``(0, 1)``.
    rho : float
        Block decay exponent, ``rho > 0``.
    b_schedule : sequence of int
        Strictly increasing cumulative angle counts ``b_0 < b_1 < ...``.
    blocks : sequence of ForcingBlock, optional
        Block data; absent blocks are identically zero.
    K_force : int
        Fourier cutoff for block coefficients.
    C0 : float
        Constant in the coefficient bounds.
    angle_order : sequence of int, optional
        Rearrangement of angle slots; identity by default.
    """

    def __init__(self, epsilon: float, rho: float, b_schedule: Sequence[int],
                 blocks: Sequence[ForcingBlock] = (), K_force: int = 2, C0: float = 1.0,
                 angle_order: Sequence[int] | None = None):
        if not 0.0 < epsilon < 1.0:
            raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
        if rho <= 0.0:
            raise InvalidParameterError(f"rho must be positive, got {rho}")
        b = tuple(int(x) for x in b_schedule)
        if not b or b[0] < 1 or any(y <= x for x, y in zip(b, b[1:])):
            raise InvalidParameterError(f"b-schedule must be strictly increasing with b_0 >= 1, got {b}")
        self.epsilon = float(epsilon)
        self.rho = float(rho)
        self.b_schedule = b
        self.K_force = int(K_force)
        self.C0 = float(C0)
        order = tuple(range(b[-1])) if angle_order is None else tuple(int(i) for i in angle_order)
        if sorted(order) != list(range(b[-1])):
            raise InvalidInputError("angle_order must be a permutation of the angle slots")
        self.angle_order = order
        self._blocks: dict[int, ForcingBlock] = {}
        for blk in blocks:
            if not 0 <= blk.index < len(b):
                raise InvalidBlockError(f"block {blk.index} outside the b-schedule of length {len(b)}")
            if blk.n_new != self.n_new(blk.index):
                raise InvalidInputError(f"block {blk.index} must act on {self.n_new(blk.index)} new angles")
            if blk.max_order() > self.K_force:
                raise InvalidInputError(f"block {blk.index} exceeds K_force={self.K_force}")
            self._blocks[blk.index] = blk

    @property
    def n_blocks(self) -> int:
        return len(self.b_schedule)

    def n_new(self, j: int) -> int:
        prev = self.b_schedule[j - 1] if j > 0 else 0
        return self.b_schedule[j] - prev

    def new_angles(self, j: int) -> tuple:
        """Angle slots of the new angles of block ``j``."""
        self._check(j)
        prev = self.b_schedule[j - 1] if j > 0 else 0
        return self.angle_order[prev: self.b_schedule[j]]

    def _check(self, j: int):
        if not 0 <= j < self.n_blocks:
            raise InvalidBlockError(f"forcing block {j} does not exist (have {self.n_blocks})")

    def block(self, j: int) -> ForcingBlock:
        self._check(j)
        return self._blocks.get(j, ForcingBlock(j, self.n_new(j)))

    def weight(self, j: int) -> float:
        return block_weight(j, self.epsilon, self.rho)

    def without_block(self, j: int) -> "ForcingHierarchy":
        self._check(j)
        keep = [blk for i, blk in self._blocks.items() if i != j]
        return ForcingHierarchy(self.epsilon, self.rho, self.b_schedule, keep, self.K_force, self.C0,
                                self.angle_order)

    def with_epsilon(self, epsilon: float) -> "ForcingHierarchy":
        return ForcingHierarchy(epsilon, self.rho, self.b_schedule, list(self._blocks.values()),
                                self.K_force, self.C0, self.angle_order)

    def eval_psi(self, l: int, theta) -> float:
        """Evaluate ``psi_l(theta)``; ``theta`` must cover every angle of the schedule."""
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.shape[0] < self.b_schedule[-1]:
            raise InvalidInputError(f"theta needs {self.b_schedule[-1]} components")
        total = 0j
        for j in range(self.n_blocks):
            blk = self.block(j)
            if blk.is_zero(l):
                continue
            total += self.weight(j) * blk.evaluate(l, theta[list(self.new_angles(j))])
        if abs(total.imag) > 1e-12 * max(abs(total), 1e-300):
            raise InvalidInputError("complex value from a real forcing (check conjugate symmetry)")
        return float(total.real)

    def psi_array(self, j: int, l: int, K: int, n_angles: int) -> np.ndarray:
        """Dense Fourier block of ``psi_l^{b_j}`` on ``n_angles`` angles, cutoff ``K``."""
        blk = self.block(j)
        if K < blk.max_order():
            raise InvalidInputError(f"cutoff K={K} below forcing order {blk.max_order()}")
        slots = self.new_angles(j)
        if n_angles <= max(slots):
            raise InvalidInputError(f"block {j} needs at least {max(slots) + 1} angles")
        arr = np.zeros((2 * K + 1,) * n_angles, dtype=complex)
        for k, c in blk.coeffs[l].items():
            idx = [K] * n_angles
            for slot, kk in zip(slots, k):
                idx[slot] = K + kk
            arr[tuple(idx)] += c
        return arr

    def validate_H2(self, C0: float | None = None) -> H2Report:
        """Coefficient-majorant check of the block bounds with constant ``C0``."""
        C0 = self.C0 if C0 is None else float(C0)
        entries, messages = [], []
        for j in range(self.n_blocks):
            blk = self.block(j)
            for l in range(4):
                table = blk.coeffs[l]
                sup = float(sum(abs(c) for c in table.values()))
                der = tuple(float(sum(abs(k[i]) * abs(c) for k, c in table.items())) for i in range(blk.n_new))
                ok = sup <= C0 and all(d <= C0 for d in der)
                if not ok:
                    messages.append(f"block {j}, psi_{l}: majorant {sup:.6g}, derivatives {der} exceed C0={C0}")
                entries.append(H2Entry(j, l, sup, der, ok))
        psi0 = any(not self.block(j).is_zero(0) for j in range(self.n_blocks))
        if not psi0:
            messages.append("psi_0 vanishes identically")
        passed = psi0 and all(e.passed for e in entries)
        return H2Report(C0, tuple(entries), psi0, passed, tuple(messages))


def cosine_block(j: int, n_new: int, amplitudes: Mapping[int, float], angle: int = 0) -> ForcingBlock:
    """Block with ``psi_l = amplitudes[l] * cos(theta_angle)``; handy for tests and defaults."""
    coeffs = {}
    for l, a in amplitudes.items():
        k = [0] * n_new
        k[angle] = 1
        coeffs[l] = {tuple(k): a / 2, tuple(-x for x in k): a / 2}
    return ForcingBlock(j, n_new, coeffs)


def constant_block(j: int, n_new: int, values: Mapping[int, float]) -> ForcingBlock:
    """Block with angle-independent ``psi_l = values[l]``."""
    return ForcingBlock(j, n_new, {l: {(0,) * n_new: v} for l, v in values.items()})


def random_block(j: int, n_new: int, rng: np.random.Generator, K_force: int = 2,
                 scale: float = 0.25, density: float = 0.5, ls: Sequence[int] = (0, 1, 2, 3)) -> ForcingBlock:
    """Random real trigonometric block; coefficients drawn from ``rng``."""
    coeffs = {}
    all_k = [k for k in np.ndindex(*([2 * K_force + 1] * n_new))]
    for l in ls:
        table = {}
        for idx in all_k:
            k = tuple(int(i) - K_force for i in idx)
            neg = tuple(-x for x in k)
            if k in table or rng.random() > density:
                continue
            if k == neg:
                table[k] = complex(scale * rng.standard_normal())
            else:
                c = scale * complex(rng.standard_normal(), rng.standard_normal()) / 2
                table[k] = c
                table[neg] = np.conj(c)
        coeffs[l] = table
    return ForcingBlock(j, n_new, coeffs)
