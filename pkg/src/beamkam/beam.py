"""Spectral data of the periodic beam operator on even modes and the block perturbations.

With ``u = sum_j q_j phi_j / sqrt(mu_j)`` and ``q_j = (z_j + zbar_j) / sqrt(2)`` the
forcing part of the energy ``int psi_0 u + psi_1 u^2/2 + psi_2 u^3/3 + psi_3 u^4/4 dx``
becomes a polynomial of degree four in ``(z, zbar)`` whose cubic and quartic
coefficients are the overlap integrals of three and four basis functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement, product

import numpy as np

from .algebra import PolyHamiltonian
from .exceptions import InvalidInputError, InvalidParameterError
from .forcing import ForcingHierarchy

SQRT_2PI = math.sqrt(2.0 * math.pi)


def eigenvalue(j: int, m: float) -> float:
    """``mu_j = sqrt(j^4 + m)``."""
    if m <= 0:
        raise InvalidParameterError(f"mass parameter must be positive, got m={m}")
    if j < 0:
        raise InvalidParameterError(f"mode index must be nonnegative, got {j}")
    return math.sqrt(float(j) ** 4 + m)


def basis_eval(j: int, x):
    """Even orthonormal basis: ``1/sqrt(2 pi)`` for ``j = 0``, ``cos(jx)/sqrt(pi)`` otherwise."""
    x = np.asarray(x, dtype=float)
    if j == 0:
        return np.full_like(x, 1.0 / SQRT_2PI) if x.ndim else 1.0 / SQRT_2PI
    return np.cos(j * x) / math.sqrt(math.pi)


def _norm_const(j: int) -> float:
    return 1.0 / SQRT_2PI if j == 0 else 1.0 / math.sqrt(math.pi)


def coupling3(i: int, j: int, l: int) -> float:
    """``int_0^{2pi} phi_i phi_j phi_l dx`` in closed form.

    ``cos a cos b cos c`` averages to a quarter of the number of sign choices
    with ``a +- b +- c = 0`` (counting the four patterns up to overall sign).
    """
    hits = sum(1 for sb, sc in product((1, -1), repeat=2) if i + sb * j + sc * l == 0)
    if hits == 0:
        return 0.0
    return _norm_const(i) * _norm_const(j) * _norm_const(l) * 2.0 * math.pi * hits / 4.0


def coupling4(i: int, j: int, k: int, l: int) -> float:
    """``int_0^{2pi} phi_i phi_j phi_k phi_l dx`` in closed form."""
    hits = sum(1 for sb, sc, sd in product((1, -1), repeat=3) if i + sb * j + sc * k + sd * l == 0)
    if hits == 0:
        return 0.0
    return _norm_const(i) * _norm_const(j) * _norm_const(k) * _norm_const(l) * 2.0 * math.pi * hits / 8.0


@dataclass(frozen=True)
class BeamParams:
    """Mass ``m > 0`` and mode cutoff ``N >= 1`` (modes ``0..N``)."""

    m: float
    N: int

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidParameterError(f"mass parameter must be positive, got m={self.m}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError(f"mode cutoff must be an integer >= 1, got N={self.N}")

    @property
    def n_modes(self) -> int:
        return self.N + 1

    @cached_property
    def mu(self) -> np.ndarray:
        return np.array([eigenvalue(j, self.m) for j in range(self.N + 1)])

    @cached_property
    def tensor3(self) -> dict:
        """Sparse ``G3`` keyed by sorted index triples."""
        out = {}
        for t in combinations_with_replacement(range(self.N + 1), 3):
            g = coupling3(*t)
            if g:
                out[t] = g
        return out

    @cached_property
    def tensor4(self) -> dict:
        """Sparse ``G4`` keyed by sorted index quadruples."""
        out = {}
        for t in combinations_with_replacement(range(self.N + 1), 4):
            g = coupling4(*t)
            if g:
                out[t] = g
        return out


def _n_permutations(t: tuple) -> int:
    count = math.factorial(len(t))
    for v in set(t):
        count //= math.factorial(t.count(v))
    return count


def _expand_product(modes: tuple, n_modes: int) -> dict:
    """Expand ``prod_i (z_{m_i} + zbar_{m_i})`` into ``{exponent tuple: multiplicity}``."""
    out: dict[tuple, int] = {}
    for choice in product((0, 1), repeat=len(modes)):
        e = [0] * (2 * n_modes)
        for mode, c in zip(modes, choice):
            e[mode + c * n_modes] += 1
        key = tuple(e)
        out[key] = out.get(key, 0) + 1
    return out


def block_monomials(beam: BeamParams) -> dict[int, dict[tuple, float]]:
    """Real monomial coefficients of each forcing group of the block perturbation.

    Returns ``{l: {exponent: c}}`` so that group ``l`` equals
    ``psi_l * sum_e c_e z^gamma zbar^kappa``.
    """
    n = beam.n_modes
    mu = beam.mu
    groups: dict[int, dict[tuple, float]] = {l: {} for l in range(4)}

    def add(l, modes, c):
        for e, mult in _expand_product(modes, n).items():
            groups[l][e] = groups[l].get(e, 0.0) + c * mult

    # mu_0 = sqrt(m), so sqrt(pi)/sqrt(mu_0) = sqrt(pi) m^(-1/4)
    add(0, (0,), math.sqrt(math.pi) / math.sqrt(mu[0]))
    for j in range(n):
        add(1, (j, j), 0.25 / mu[j])
    for t, g in beam.tensor3.items():
        add(2, t, math.sqrt(2.0) / 12.0 * g * _n_permutations(t) / math.sqrt(np.prod(mu[list(t)])))
    for t, g in beam.tensor4.items():
        add(3, t, g * _n_permutations(t) / 16.0 / math.sqrt(np.prod(mu[list(t)])))
    return groups


def assemble_block_perturbation(n: int, beam: BeamParams, forcing: ForcingHierarchy,
                                K: int | None = None, n_angles: int | None = None,
                                D: int = 4) -> PolyHamiltonian:
    """Unweighted block perturbation ``P^{b_n}`` as a :class:`PolyHamiltonian`.

    Parameters
    ----------
    n : int
        Block index; a missing block raises :class:`InvalidBlockError`.
    beam : BeamParams
    forcing : ForcingHierarchy
    K : int, optional
        Fourier cutoff of the result (defaults to ``forcing.K_force``).
    n_angles : int, optional
        Angle count of the result (defaults to ``b_n``).
    """
    forcing.block(n)
    K = forcing.K_force if K is None else int(K)
    b = forcing.b_schedule[n] if n_angles is None else int(n_angles)
    if b < forcing.b_schedule[n]:
        raise InvalidInputError(f"block {n} needs {forcing.b_schedule[n]} angles")
    groups = block_monomials(beam)
    H = PolyHamiltonian(beam.n_modes, b, K, D)
    for l in range(4):
        if forcing.block(n).is_zero(l):
            continue
        arr = forcing.psi_array(n, l, K, b)
        for e, c in groups[l].items():
            if sum(e) > D or c == 0.0:
                continue
            if e in H.terms:
                H.terms[e] = H.terms[e] + c * arr
            else:
                H.terms[e] = c * arr
    return H
