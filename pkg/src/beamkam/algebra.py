"""Polynomial Hamiltonians in (z, zbar) with trigonometric angle coefficients.

A :class:`PolyHamiltonian` stores, for every monomial ``z^gamma zbar^kappa``,
a dense block of Fourier coefficients indexed by ``k`` with ``|k|_inf <= K``.
Products of angle functions are carried out on a uniform angle grid large
enough (``4K + 1`` points per angle) to be alias free, then projected back to
``|k|_inf <= K``; the l1 mass of the discarded modes is kept in ``tail``.

Bracket convention
------------------
``poisson_bracket(H, F)`` is the derivative of ``H`` along the Hamiltonian
flow of ``F``::

    {H, F} = i * sum_j (dH/dz_j * dF/dzbar_j - dH/dzbar_j * dF/dz_j)

with ``dz/dt = i dF/dzbar`` and ``dzbar/dt = -i dF/dz``. With this choice
``H o phi_F^1 = sum_n ad_F^n H / n!`` and the normal form acts as
``{N, z^g zbar^h e^{i<k,theta>}} = -i (<k,omega> + <g-h,Omega>) * (same term)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .exceptions import DivergenceWarning, InvalidInputError

PRUNE_REL = 1e-14
_CHUNK_ELEMS = 4_000_000


def mode_weights(n_modes: int, a: float, p: float) -> np.ndarray:
    """Weights ``w_0 = 1``, ``w_j = j^p e^{ja}`` of the ``l^{a,p}`` norm."""
    j = np.arange(n_modes, dtype=float)
    w = np.ones(n_modes)
    w[1:] = j[1:] ** p * np.exp(j[1:] * a)
    return w


def seq_norm(z, a: float, p: float) -> float:
    """``||z||_{a,p} = sqrt(|z_0|^2 + sum_{j>=1} |z_j|^2 j^{2p} e^{2ja})``."""
    z = np.asarray(z)
    w = mode_weights(z.shape[-1], a, p)
    return float(np.sqrt(np.sum(np.abs(z) ** 2 * w**2, axis=-1)))


@dataclass(frozen=True)
class NormParams:
    """Domain ``D(s, r)`` and sequence weights for majorant norms."""

    a: float = 0.0
    p: float = 1.0
    s: float = 0.5
    r: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.p <= 0 or self.s <= 0 or self.r <= 0:
            raise InvalidInputError(f"invalid norm parameters {self}")


def _as_exponents(n_modes: int, gamma, kappa) -> tuple:
    def dense(x):
        if isinstance(x, dict):
            out = [0] * n_modes
            for j, e in x.items():
                if not 0 <= j < n_modes:
                    raise InvalidInputError(f"mode index {j} outside 0..{n_modes - 1}")
                out[j] = int(e)
            return out
        x = [int(e) for e in x]
        if len(x) != n_modes:
            raise InvalidInputError(f"exponent vector has length {len(x)}, expected {n_modes}")
        return x

    g, h = dense(gamma), dense(kappa)
    if min(g + h, default=0) < 0:
        raise InvalidInputError("negative exponent")
    return tuple(g + h)


class PolyHamiltonian:
    """Finite sum of terms ``c * e^{i<k,theta>} z^gamma zbar^kappa``.

    Parameters
    ----------
    n_modes : int
        Number of normal modes (``N + 1``).
    n_angles : int
        Number of active angles ``b``.
    K : int
        Fourier cutoff, ``|k|_inf <= K``.
    D : int
        Cap on the total (z, zbar) degree.
    terms : dict, optional
        Map from exponent tuple ``(gamma_0..gamma_N, kappa_0..kappa_N)`` to a
        complex array of shape ``(2K+1,) * n_angles`` indexed by ``k + K``.
    tail : float
        l1 mass of Fourier modes dropped while producing this object.
    """

    def __init__(self, n_modes: int, n_angles: int, K: int, D: int = 4, terms=None, tail: float = 0.0):
        if n_modes < 1 or n_angles < 0 or K < 0 or D < 0:
            raise InvalidInputError("invalid truncation parameters")
        self.n_modes = int(n_modes)
        self.n_angles = int(n_angles)
        self.K = int(K)
        self.D = int(D)
        self.tail = float(tail)
        self.terms: dict[tuple, np.ndarray] = {}
        self._grid = None
        if terms:
            for e, arr in terms.items():
                arr = np.asarray(arr, dtype=complex)
                if arr.shape != self.shape:
                    raise InvalidInputError(f"coefficient block shape {arr.shape} != {self.shape}")
                if len(e) != 2 * self.n_modes:
                    raise InvalidInputError("exponent tuple has wrong length")
                if sum(e) > self.D:
                    continue
                self.terms[tuple(int(x) for x in e)] = arr

    # ------------------------------------------------------------------ basics
    @property
    def shape(self) -> tuple:
        return (2 * self.K + 1,) * self.n_angles

    @classmethod
    def zero_like(cls, other: "PolyHamiltonian", n_angles: int | None = None) -> "PolyHamiltonian":
        return cls(other.n_modes, other.n_angles if n_angles is None else n_angles, other.K, other.D)

    @classmethod
    def from_terms(cls, n_modes, n_angles, K, items, D: int = 4) -> "PolyHamiltonian":
        """Build from ``(k, gamma, kappa, coeff)`` tuples; repeated keys add up.

        ``gamma``/``kappa`` may be dense sequences or ``{mode: exponent}`` dicts.
        """
        H = cls(n_modes, n_angles, K, D)
        for k, gamma, kappa, c in items:
            k = tuple(int(x) for x in k)
            if len(k) != n_angles:
                raise InvalidInputError(f"k={k} does not have {n_angles} components")
            if any(abs(x) > K for x in k):
                raise InvalidInputError(f"k={k} exceeds the Fourier cutoff K={K}")
            e = _as_exponents(n_modes, gamma, kappa)
            if sum(e) > D:
                raise InvalidInputError(f"monomial degree {sum(e)} exceeds D={D}")
            arr = H.terms.setdefault(e, np.zeros(H.shape, dtype=complex))
            arr[tuple(x + K for x in k)] += c
        return H

    def copy(self) -> "PolyHamiltonian":
        return PolyHamiltonian(self.n_modes, self.n_angles, self.K, self.D,
                               {e: a.copy() for e, a in self.terms.items()}, self.tail)

    def coefficient(self, k, gamma, kappa) -> complex:
        e = _as_exponents(self.n_modes, gamma, kappa)
        arr = self.terms.get(e)
        k = tuple(int(x) for x in k)
        if arr is None or any(abs(x) > self.K for x in k) or len(k) != self.n_angles:
            return 0j
        return complex(arr[tuple(x + self.K for x in k)])

    def items(self) -> Iterator[tuple[tuple, tuple, tuple, complex]]:
        """Yield ``(k, gamma, kappa, coeff)`` for every nonzero term, in sorted order."""
        n = self.n_modes
        for e in sorted(self.terms):
            arr = self.terms[e]
            for idx in zip(*np.nonzero(arr)):
                k = tuple(int(i) - self.K for i in idx)
                yield k, e[:n], e[n:], complex(arr[idx])

    def __len__(self) -> int:
        return int(sum(np.count_nonzero(a) for a in self.terms.values()))

    def is_zero(self) -> bool:
        return all(not np.any(a) for a in self.terms.values())

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(a))) for a in self.terms.values()), default=0.0)

    def degrees(self) -> set[int]:
        return {sum(e) for e, a in self.terms.items() if np.any(a)}

    def max_k_support(self) -> int:
        """Largest angle index (1-based count) carrying a nonzero k component."""
        used = 0
        for arr in self.terms.values():
            for ax in range(self.n_angles):
                other = tuple(i for i in range(self.n_angles) if i != ax)
                prof = np.abs(arr).sum(axis=other) if other else np.abs(arr)
                if np.any(np.delete(prof, self.K)):
                    used = max(used, ax + 1)
        return used

    def __repr__(self) -> str:
        return (f"PolyHamiltonian(n_modes={self.n_modes}, n_angles={self.n_angles}, K={self.K}, "
                f"D={self.D}, monomials={len(self.terms)}, terms={len(self)})")

    # -------------------------------------------------------------- arithmetic
    def _check_compatible(self, other: "PolyHamiltonian"):
        if not isinstance(other, PolyHamiltonian):
            raise InvalidInputError(f"expected PolyHamiltonian, got {type(other).__name__}")
        if (self.n_modes, self.K, self.D) != (other.n_modes, other.K, other.D):
            raise InvalidInputError(
                f"incompatible truncations (N+1, K, D): {(self.n_modes, self.K, self.D)} "
                f"vs {(other.n_modes, other.K, other.D)}")

    def lift(self, n_angles: int) -> "PolyHamiltonian":
        """Embed into a larger angle space; new angles carry only ``k = 0``."""
        if n_angles == self.n_angles:
            return self
        if n_angles < self.n_angles:
            raise InvalidInputError("cannot lift to fewer angles")
        out = PolyHamiltonian(self.n_modes, n_angles, self.K, self.D, tail=self.tail)
        extra = n_angles - self.n_angles
        sl = (Ellipsis,) + (self.K,) * extra
        for e, arr in self.terms.items():
            new = np.zeros(out.shape, dtype=complex)
            new[sl] = arr
            out.terms[e] = new
        return out

    def _aligned(self, other):
        self._check_compatible(other)
        b = max(self.n_angles, other.n_angles)
        return self.lift(b), other.lift(b)

    def __add__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        A, B = self._aligned(other)
        terms = {e: a.copy() for e, a in A.terms.items()}
        for e, a in B.terms.items():
            if e in terms:
                terms[e] = terms[e] + a
            else:
                terms[e] = a.copy()
        return _pruned(PolyHamiltonian(A.n_modes, A.n_angles, A.K, A.D, terms, A.tail + B.tail))

    def __neg__(self) -> "PolyHamiltonian":
        return self * -1.0

    def __sub__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        return self + (-other)

    def __mul__(self, c) -> "PolyHamiltonian":
        if isinstance(c, PolyHamiltonian):
            return multiply(self, c)
        c = complex(c)
        return PolyHamiltonian(self.n_modes, self.n_angles, self.K, self.D,
                               {e: a * c for e, a in self.terms.items()}, self.tail * abs(c))

    __rmul__ = __mul__

    def __truediv__(self, c) -> "PolyHamiltonian":
        return self * (1.0 / complex(c))

    # ------------------------------------------------------------- structure
    def select(self, predicate) -> "PolyHamiltonian":
        """Sub-Hamiltonian of monomials whose exponent tuple satisfies ``predicate``."""
        return PolyHamiltonian(self.n_modes, self.n_angles, self.K, self.D,
                               {e: a.copy() for e, a in self.terms.items() if predicate(e)})

    def degree_part(self, lo: int, hi: int | None = None) -> "PolyHamiltonian":
        hi = lo if hi is None else hi
        return self.select(lambda e: lo <= sum(e) <= hi)

    def conj_reflect(self) -> "PolyHamiltonian":
        """Map ``c(k, gamma, kappa) -> conj(c(-k, kappa, gamma))``."""
        n = self.n_modes
        terms = {}
        for e, arr in self.terms.items():
            terms[e[n:] + e[:n]] = np.conj(arr[(slice(None, None, -1),) * self.n_angles])
        return PolyHamiltonian(self.n_modes, self.n_angles, self.K, self.D, terms, self.tail)

    def exponent_matrix(self) -> np.ndarray:
        keys = list(self.terms)
        return np.array(keys, dtype=np.int64).reshape(len(keys), 2 * self.n_modes)

    # ------------------------------------------------------------------ grids
    def _grid_stack(self) -> tuple[list, np.ndarray]:
        if self._grid is None:
            keys = sorted(self.terms)
            stack = np.array([self.terms[e] for e in keys], dtype=complex).reshape((len(keys),) + self.shape)
            self._grid = (keys, _to_grid(stack, self.K, self.n_angles))
        return self._grid

    # --------------------------------------------------------------- evaluate
    def evaluate(self, theta, z, zbar) -> complex:
        """Evaluate at a (possibly complex) point; ``z``/``zbar`` are independent."""
        theta = np.asarray(theta, dtype=complex)
        z = np.asarray(z, dtype=complex)
        zbar = np.asarray(zbar, dtype=complex)
        phase = _phase_grid(theta, self.K, self.n_angles)
        total = 0j
        for e, arr in self.terms.items():
            g, h = np.array(e[: self.n_modes]), np.array(e[self.n_modes:])
            total += np.sum(arr * phase) * np.prod(z**g) * np.prod(zbar**h)
        return complex(total)

    def gradient(self, theta, z, zbar) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(dH/dtheta, dH/dz, dH/dzbar)`` at a point."""
        theta = np.asarray(theta, dtype=complex)
        z = np.asarray(z, dtype=complex)
        zbar = np.asarray(zbar, dtype=complex)
        n = self.n_modes
        phase = _phase_grid(theta, self.K, self.n_angles)
        kgrid = _k_grids(self.K, self.n_angles)
        d_theta = np.zeros(self.n_angles, dtype=complex)
        d_z = np.zeros(n, dtype=complex)
        d_zb = np.zeros(n, dtype=complex)
        for e, arr in self.terms.items():
            g, h = np.array(e[:n]), np.array(e[n:])
            fval = np.sum(arr * phase)
            mono = np.prod(z**g) * np.prod(zbar**h)
            for i in range(self.n_angles):
                d_theta[i] += np.sum(1j * kgrid[i] * arr * phase) * mono
            for j in range(n):
                if g[j]:
                    gg = g.copy(); gg[j] -= 1
                    d_z[j] += fval * g[j] * np.prod(z**gg) * np.prod(zbar**h)
                if h[j]:
                    hh = h.copy(); hh[j] -= 1
                    d_zb[j] += fval * h[j] * np.prod(z**g) * np.prod(zbar**hh)
        return d_theta, d_z, d_zb


# --------------------------------------------------------------------- helpers
def _k_grids(K: int, b: int) -> list[np.ndarray]:
    ks = np.arange(-K, K + 1)
    if b == 0:
        return []
    return list(np.meshgrid(*([ks] * b), indexing="ij"))


def _phase_grid(theta, K, b):
    if b == 0:
        return np.array(1.0 + 0j)
    if theta.shape[0] < b:
        raise InvalidInputError(f"need {b} angles, got {theta.shape[0]}")
    grids = _k_grids(K, b)
    arg = sum(g * theta[i] for i, g in enumerate(grids))
    return np.exp(1j * arg)


def k_dot(omega, K: int, b: int) -> np.ndarray:
    """Array of ``<k, omega>`` over the coefficient block (first ``b`` entries of omega)."""
    if b == 0:
        return np.array(0.0)
    omega = np.asarray(omega, dtype=float)
    if omega.shape[0] < b:
        raise InvalidInputError(f"frequency vector has {omega.shape[0]} entries, need {b}")
    return sum(g * omega[i] for i, g in enumerate(_k_grids(K, b)))


def k_l1(K: int, b: int) -> np.ndarray:
    if b == 0:
        return np.array(0)
    return sum(np.abs(g) for g in _k_grids(K, b))


def _grid_index(K: int):
    L = 4 * K + 1
    return L, np.arange(-K, K + 1) % L


def _to_grid(stack: np.ndarray, K: int, b: int) -> np.ndarray:
    M = stack.shape[0]
    if b == 0:
        return stack.reshape(M, 1).astype(complex)
    L, idx = _grid_index(K)
    A = np.zeros((M,) + (L,) * b, dtype=complex)
    A[(slice(None),) + np.ix_(*([idx] * b))] = stack
    G = np.fft.ifftn(A, axes=tuple(range(1, b + 1))) * (L**b)
    return G.reshape(M, L**b)


def _from_grid(G: np.ndarray, K: int, b: int) -> tuple[np.ndarray, float]:
    M = G.shape[0]
    if b == 0:
        return G.reshape((M,)), 0.0
    L, idx = _grid_index(K)
    C = np.fft.fftn(G.reshape((M,) + (L,) * b), axes=tuple(range(1, b + 1))) / (L**b)
    inner = C[(slice(None),) + np.ix_(*([idx] * b))]
    dropped = float(np.abs(C).sum() - np.abs(inner).sum())
    return inner, max(dropped, 0.0)


def _pruned(H: PolyHamiltonian, rel: float = PRUNE_REL, scale: float = 0.0) -> PolyHamiltonian:
    """Drop coefficients below ``rel * max(largest coefficient, scale)``."""
    m = max(H.max_abs(), scale)
    if m == 0.0:
        H.terms = {}
        return H
    thr = rel * m
    out = {}
    for e, arr in H.terms.items():
        arr = np.where(np.abs(arr) < thr, 0, arr)
        if np.any(arr):
            out[e] = arr
    H.terms = out
    H._grid = None
    return H


def _assemble(H: PolyHamiltonian, F: PolyHamiltonian, ia, ib, factor, out_exp, D) -> PolyHamiltonian:
    """Sum ``factor * H[ia] * F[ib]`` into monomials ``out_exp`` (alias-free grid products)."""
    b = H.n_angles
    result = PolyHamiltonian(H.n_modes, b, H.K, H.D)
    if len(ia) == 0:
        return result
    keep = out_exp.sum(axis=1) <= D
    ia, ib, factor, out_exp = ia[keep], ib[keep], factor[keep], out_exp[keep]
    if len(ia) == 0:
        return result
    uniq, ids = np.unique(out_exp, axis=0, return_inverse=True)
    ids = ids.reshape(-1)
    _, GH = H._grid_stack()
    _, GF = F._grid_stack()
    G = GH.shape[1]
    OUT = np.zeros((len(uniq), G), dtype=complex)
    chunk = max(1, _CHUNK_ELEMS // G)
    for start in range(0, len(ia), chunk):
        sl = slice(start, start + chunk)
        P = GH[ia[sl]] * GF[ib[sl]]
        n = P.shape[0]
        S = sparse.csr_matrix((factor[sl], (ids[sl], np.arange(n))), shape=(len(uniq), n))
        OUT += S @ P
    coeffs, dropped = _from_grid(OUT, H.K, b)
    for row, e in enumerate(uniq):
        result.terms[tuple(int(x) for x in e)] = coeffs[row].reshape(result.shape)
    result.tail = dropped
    scale = H.max_abs() * F.max_abs() * float(np.max(np.abs(factor)))
    return _pruned(result, scale=scale)


def _pairs(mask_a, mask_b):
    ia = np.nonzero(mask_a)[0]
    ib = np.nonzero(mask_b)[0]
    if len(ia) == 0 or len(ib) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    A, B = np.meshgrid(ia, ib, indexing="ij")
    return A.ravel(), B.ravel()


# ------------------------------------------------------------------ operations
def poisson_bracket(H: PolyHamiltonian, F: PolyHamiltonian) -> PolyHamiltonian:
    """``{H, F}``, the derivative of ``H`` along the flow of ``F`` (J-independent inputs)."""
    H, F = H._aligned(F)
    if not H.terms or not F.terms:
        return PolyHamiltonian.zero_like(H)
    n = H.n_modes
    keysH, _ = H._grid_stack()
    keysF, _ = F._grid_stack()
    eH = np.array(keysH, dtype=np.int64).reshape(len(keysH), 2 * n)
    eF = np.array(keysF, dtype=np.int64).reshape(len(keysF), 2 * n)
    IA, IB, FAC, OUT = [], [], [], []
    for v in range(n):
        for (hv, fv, sign) in ((v, n + v, 1j), (n + v, v, -1j)):
            ia, ib = _pairs(eH[:, hv] > 0, eF[:, fv] > 0)
            if len(ia) == 0:
                continue
            fac = sign * eH[ia, hv] * eF[ib, fv]
            out = eH[ia] + eF[ib]
            out[:, v] -= 1
            out[:, n + v] -= 1
            IA.append(ia); IB.append(ib); FAC.append(fac.astype(complex)); OUT.append(out)
    if not IA:
        return PolyHamiltonian.zero_like(H)
    return _assemble(H, F, np.concatenate(IA), np.concatenate(IB), np.concatenate(FAC),
                     np.concatenate(OUT), H.D)


def multiply(H: PolyHamiltonian, F: PolyHamiltonian) -> PolyHamiltonian:
    """Pointwise product; monomials above the degree cap are dropped."""
    H, F = H._aligned(F)
    if not H.terms or not F.terms:
        return PolyHamiltonian.zero_like(H)
    n = H.n_modes
    keysH, _ = H._grid_stack()
    keysF, _ = F._grid_stack()
    eH = np.array(keysH, dtype=np.int64).reshape(len(keysH), 2 * n)
    eF = np.array(keysF, dtype=np.int64).reshape(len(keysF), 2 * n)
    ia, ib = _pairs(np.ones(len(eH), bool), np.ones(len(eF), bool))
    return _assemble(H, F, ia, ib, np.ones(len(ia), dtype=complex), eH[ia] + eF[ib], H.D)


def bracket_with_N(omega, Omega, F: PolyHamiltonian) -> PolyHamiltonian:
    """``{N, F}`` for ``N = <omega, J> + sum_j Omega_j z_j zbar_j``.

    Each term is multiplied by ``-i (<k, omega> + <gamma - kappa, Omega>)``.
    """
    Omega = np.asarray(Omega, dtype=float)
    if Omega.shape[0] != F.n_modes:
        raise InvalidInputError("Omega length must equal the number of modes")
    kd = k_dot(omega, F.K, F.n_angles)
    n = F.n_modes
    out = PolyHamiltonian.zero_like(F)
    for e, arr in F.terms.items():
        lO = float(np.dot(np.array(e[:n]) - np.array(e[n:]), Omega))
        out.terms[e] = -1j * (kd + lO) * arr
    return _pruned(out)


def degree_split(H: PolyHamiltonian) -> tuple[PolyHamiltonian, PolyHamiltonian]:
    """Return ``(low, high)``: terms of (z, zbar)-degree ``<= 2`` and ``>= 3``."""
    low = H.select(lambda e: sum(e) <= 2)
    high = H.select(lambda e: sum(e) >= 3)
    low.tail = H.tail
    return low, high


def coef_norm(H: PolyHamiltonian, s: float = 0.0) -> float:
    """Coefficient majorant ``sum |c| e^{|k|_1 s}``."""
    if not H.terms:
        return 0.0
    w = np.exp(k_l1(H.K, H.n_angles) * s)
    return float(sum(np.sum(np.abs(H.terms[e]) * w) for e in sorted(H.terms)))


def lie_transform(H: PolyHamiltonian, F: PolyHamiltonian, L: int = 8,
                  return_terms: bool = False):
    """Lie series ``H o phi_F^1 = sum_{n=0}^{L} ad_F^n H / n!`` with a tail bound.

    Returns ``(transformed, tail_bound)``. The tail bound is geometric in the
    ratio of coefficient majorants of the last two retained terms; a ratio
    ``>= 1`` raises :class:`DivergenceWarning`.
    """
    if L < 1:
        raise InvalidInputError("series order L must be >= 1")
    if F.degrees() and max(F.degrees()) > 2:
        raise InvalidInputError("generator must have degree <= 2")
    H, F = H._aligned(F)
    total = H.copy()
    term = H
    norms = [coef_norm(H)]
    pieces = [H]
    tail_mass = H.tail
    for n in range(1, L + 1):
        term = poisson_bracket(term, F) / n
        tail_mass += term.tail
        norms.append(coef_norm(term))
        pieces.append(term)
        if term.is_zero():
            break
        total = total + term
    total.tail = tail_mass
    last, prev = norms[-1], norms[-2]
    if last == 0.0:
        bound = 0.0
    else:
        q = last / prev if prev > 0 else math.inf
        if q >= 1.0:
            raise DivergenceWarning(q)
        bound = last * q / (1.0 - q)
    if return_terms:
        return total, bound, pieces
    return total, bound


def check_real(H: PolyHamiltonian, rtol: float = 1e-12) -> bool:
    """True iff ``c(-k, kappa, gamma) == conj(c(k, gamma, kappa))`` to ``rtol``."""
    R = H.conj_reflect()
    m = H.max_abs()
    if m == 0.0:
        return True
    keys = set(H.terms) | set(R.terms)
    zero = np.zeros(H.shape, dtype=complex)
    worst = max(float(np.max(np.abs(H.terms.get(e, zero) - R.terms.get(e, zero)))) for e in keys)
    return worst <= rtol * m


def realify(H: PolyHamiltonian) -> PolyHamiltonian:
    """Symmetrize: ``(H + conj_reflect(H)) / 2``."""
    return (H + H.conj_reflect()) * 0.5


def vf_majorant_norm(H: PolyHamiltonian, params: NormParams) -> float:
    """Majorant of ``sup_{D(s,r)} |X_H|_r`` with ``|W|_r = |X| + |Y|/r^2 + (||U|| + ||V||)/r``.

    Coefficients are replaced by moduli, ``e^{i<k,theta>}`` by ``e^{|k|_1 s}``
    and each ``|z_j|`` by ``r / w_j`` (the polydisc containing the l^{a,p} ball).
    The sequence norm of ``U, V`` uses the ``l^{a,p+2}`` weights. ``X = H_J``
    vanishes for J-independent Hamiltonians.
    """
    if not H.terms:
        return 0.0
    n = H.n_modes
    zeta = params.r / mode_weights(n, params.a, params.p)
    W2 = mode_weights(n, params.a, params.p + 2)
    ew = np.exp(k_l1(H.K, H.n_angles) * params.s)
    kabs = [np.abs(g) for g in _k_grids(H.K, H.n_angles)]
    Y = np.zeros(H.n_angles)
    U = np.zeros(n)
    V = np.zeros(n)
    for e in sorted(H.terms):
        arr = H.terms[e]
        g, h = np.array(e[:n]), np.array(e[n:])
        A = float(np.sum(np.abs(arr) * ew))
        if A == 0.0:
            continue
        mono = float(np.prod(zeta ** (g + h)))
        for i in range(H.n_angles):
            Y[i] += float(np.sum(np.abs(arr) * kabs[i] * ew)) * mono
        for j in range(n):
            if g[j]:
                U[j] += A * g[j] * mono / zeta[j]
            if h[j]:
                V[j] += A * h[j] * mono / zeta[j]
    r = params.r
    Ymax = float(Y.max()) if H.n_angles else 0.0
    return Ymax / r**2 + (float(np.sqrt(np.sum((U * W2) ** 2))) + float(np.sqrt(np.sum((V * W2) ** 2)))) / r


def vector_field_norm_at(H: PolyHamiltonian, params: NormParams, theta, z, zbar) -> float:
    """Pointwise ``|X_H|_r`` (used to check the majorant from below)."""
    d_theta, d_z, d_zb = H.gradient(theta, z, zbar)
    W2 = mode_weights(H.n_modes, params.a, params.p + 2)
    Y = float(np.max(np.abs(d_theta))) if H.n_angles else 0.0
    U = float(np.sqrt(np.sum((np.abs(d_z) * W2) ** 2)))
    V = float(np.sqrt(np.sum((np.abs(d_zb) * W2) ** 2)))
    return Y / params.r**2 + (U + V) / params.r


# ----------------------------------------------------------------- dump format
def _fmt_pairs(exps: Sequence[int]) -> str:
    pairs = [f"{j}:{e}" for j, e in enumerate(exps) if e]
    return ",".join(pairs) if pairs else "-"


def _parse_pairs(text: str, n: int) -> list[int]:
    out = [0] * n
    if text != "-":
        for item in text.split(","):
            j, e = item.split(":")
            out[int(j)] = int(e)
    return out


def dump_lines(H: PolyHamiltonian) -> list[str]:
    """Line-oriented dump; floats rendered in hexadecimal for bit-exact round trips."""
    lines = [f"# polyham n_modes={H.n_modes} n_angles={H.n_angles} K={H.K} D={H.D} tail={float(H.tail).hex()}"]
    for k, g, h, c in H.items():
        ks = ",".join(str(x) for x in k) if k else "-"
        lines.append(f"{H.n_angles} {ks} {_fmt_pairs(g)} {_fmt_pairs(h)} {c.real.hex()} {c.imag.hex()}")
    return lines


def dumps(H: PolyHamiltonian) -> str:
    return "\n".join(dump_lines(H)) + "\n"


def load_lines(lines: Iterable[str]) -> PolyHamiltonian:
    lines = [ln for ln in (x.strip() for x in lines) if ln]
    head = lines[0]
    if not head.startswith("# polyham"):
        raise InvalidInputError("missing polyham header")
    fields = dict(item.split("=") for item in head.split()[2:])
    H = PolyHamiltonian(int(fields["n_modes"]), int(fields["n_angles"]), int(fields["K"]), int(fields["D"]),
                        tail=float.fromhex(fields["tail"]))
    n = H.n_modes
    for ln in lines[1:]:
        b, ks, gs, hs, re, im = ln.split()
        if int(b) != H.n_angles:
            raise InvalidInputError(f"record angle count {b} != {H.n_angles}")
        k = [] if ks == "-" else [int(x) for x in ks.split(",")]
        e = tuple(_parse_pairs(gs, n) + _parse_pairs(hs, n))
        arr = H.terms.setdefault(e, np.zeros(H.shape, dtype=complex))
        arr[tuple(x + H.K for x in k)] = complex(float.fromhex(re), float.fromhex(im))
    return H


def loads(text: str) -> PolyHamiltonian:
    return load_lines(text.splitlines())


def monomials(n_modes: int, degree: int) -> list[tuple]:
    """All exponent tuples of total degree ``degree`` in ``2 * n_modes`` variables."""
    out = []
    for e in product(range(degree + 1), repeat=2 * n_modes):
        if sum(e) == degree:
            out.append(e)
    return out
