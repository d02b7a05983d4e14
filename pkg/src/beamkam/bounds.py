"""Numerical checks of three auxiliary inequalities (lattice sums and a Schur-type bound).

Lattice sums over ``k in Z^n`` are reduced to one-dimensional sums over shells
``|k| = j`` with exact shell counts, so large truncations stay cheap. The
compound sum is evaluated in log space because its terms overflow doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .exceptions import InvalidParameterError


@dataclass(frozen=True)
class BoundCheck:
    """Left side versus right side of one inequality; ``margin = right - left``.

    For log-domain checks ``left``/``right`` are natural logarithms and
    ``log_domain`` is set.
    """

    name: str
    params: dict
    left: float
    right: float
    margin: float
    passed: bool
    log_domain: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "left": self.left, "right": self.right,
                "margin": self.margin, "passed": self.passed, "log_domain": self.log_domain, **self.extra}


def log_shell_count(n: int, j: np.ndarray, norm: str = "l1") -> np.ndarray:
    """Log of the number of ``k in Z^n`` with ``|k| = j``."""
    j = np.asarray(j, dtype=np.int64)
    out = np.empty(j.shape, dtype=float)
    if norm == "l1":
        for idx, jj in np.ndenumerate(j):
            if jj == 0:
                out[idx] = 0.0
                continue
            terms = [i * math.log(2.0) + gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
                     + gammaln(jj) - gammaln(i) - gammaln(jj - i + 1) for i in range(1, min(n, jj) + 1)]
            out[idx] = float(logsumexp(terms))
    elif norm == "linf":
        jf = j.astype(float)
        with np.errstate(divide="ignore"):
            out = np.where(j == 0, 0.0, np.log((2 * jf + 1) ** n - (2 * jf - 1) ** n))
    else:
        raise InvalidParameterError(f"unknown norm {norm!r}")
    return out


def _shell_sum_log(n: int, log_term, K_trunc: int, norm: str, decay: float, degree: float):
    """``log sum_{j>=0} count(j) * exp(log_term(j))`` with a geometric tail majorant.

    ``log_term(j)`` grows at most like ``degree * log j - decay * j``; the shell
    count is a polynomial of degree ``n - 1`` in ``j``.
    """
    peak = (degree + n) / decay if decay > 0 else 0.0
    K = int(max(K_trunc, math.ceil(2.0 * peak + 60.0 / max(decay, 1e-12))))
    j = np.arange(K + 1)
    logs = log_shell_count(n, j, norm) + log_term(j)
    head = float(logsumexp(logs))
    # tail: for j >= jt the ratio of consecutive terms is at most q (each factor decreases in j)
    jt = max(K + 1, n + 1)
    q = math.exp((n - 1) * math.log(jt / (jt - n + 1.0)) + degree * math.log((jt + 1.0) / jt) - decay)
    if q >= 1.0:
        return head, math.inf, K
    log_first = float(log_shell_count(n, np.array([jt]), norm)[0] + log_term(np.array([jt]))[0])
    log_tail = log_first - math.log1p(-q)
    return float(np.logaddexp(head, log_tail)), log_tail, K


def expsum_bound(n: int, sigma: float, v_pow: float = 0.0, K_trunc: int = 100, norm: str = "l1") -> BoundCheck:
    """``sum_{k in Z^n} |k|^v e^{-2|k| sigma}`` versus ``(v/e)^v sigma^{-(v+n)} (1+e)^n``."""
    if sigma <= 0 or n < 1:
        raise InvalidParameterError("need sigma > 0 and n >= 1")

    def log_term(j):
        j = np.asarray(j, dtype=float)
        with np.errstate(divide="ignore"):
            lp = np.where(j == 0, 0.0 if v_pow == 0 else -np.inf, v_pow * np.log(np.maximum(j, 1e-300)))
        return lp - 2.0 * sigma * j

    log_left, log_tail, K = _shell_sum_log(n, log_term, K_trunc, norm, 2.0 * sigma, v_pow)
    vv = (v_pow / math.e) ** v_pow if v_pow > 0 else 1.0
    right = vv * sigma ** (-(v_pow + n)) * (1.0 + math.e) ** n
    left = math.exp(log_left)
    return BoundCheck("lattice_expsum", {"n": n, "sigma": sigma, "v_pow": v_pow, "K_trunc": K, "norm": norm},
                      left, right, right - left, left <= right,
                      extra={"tail_majorant": math.exp(log_tail) if np.isfinite(log_tail) else math.inf})


def expsum_closed_form(n: int, sigma: float) -> float:
    """``((1 + e^{-2 sigma}) / (1 - e^{-2 sigma}))^n`` for the l1 lattice sum with ``v = 0``."""
    x = math.exp(-2.0 * sigma)
    return ((1.0 + x) / (1.0 - x)) ** n


def spectral_norm(A: np.ndarray, tol: float = 1e-8, max_iter: int = 100000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``A^T A``."""
    A = np.asarray(A, dtype=float)
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x_new = y / ny
        lam_new = math.sqrt(ny)
        if abs(lam_new - lam) <= tol * lam_new and np.linalg.norm(x_new - x) < 1e-6:
            return lam_new
        x, lam = x_new, lam_new
    return lam


def hilbert_like_bound(A: np.ndarray, trials: int = 1) -> BoundCheck:
    """``||B|| <= (pi / sqrt 3) ||A||`` for ``B_ij = |A_ij| / |i - j|``, ``B_ii = 0``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError("A must be square")
    n = A.shape[0]
    i, j = np.indices((n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.where(i == j, 0.0, np.abs(A) / np.abs(i - j))
    nB = max(spectral_norm(B, seed=s) for s in range(trials))
    nA = max(spectral_norm(A, seed=s) for s in range(trials))
    right = math.pi / math.sqrt(3.0) * nA
    return BoundCheck("offdiag_schur", {"size": n}, nB, right, right - nB, nB <= right * (1 + 1e-8))


def _compound_log_terms(b: int, v: int, sigma: float, k_pow: int):
    def log_term(j):
        j = np.asarray(j, dtype=float)
        with np.errstate(divide="ignore"):
            lk = np.where(j == 0, -np.inf, k_pow * np.log(np.maximum(j, 1e-300)))
        return lk + 4.0 * (math.log1p(v * v) + (2 * b + 2) * np.log1p(j)) - 2.0 * sigma * j

    return log_term


def compound_bound(b: int, sigma: float, v: int, K_trunc: int = 200, variant: str = "statement",
                   norm: str = "l1") -> BoundCheck:
    """Compound lattice sum with weights ``[(1+v^2)(|k|+1)^{2b+2}]^4``, checked in log space.

    ``variant="statement"``: ``sqrt(2^b sum |k|^2 (...)^4 e^{-2|k|sigma})`` against
    ``(16(2b+3)/e)^{4b+6} sigma^{-(5b+6)}``.
    ``variant="proof"``: ``2^b sum |k|^4 (...)^4 e^{-2|k|sigma}`` against
    ``(16(2b+3)/e)^{8b+12} sigma^{-(9b+12)}``.
    """
    if sigma <= 0 or b < 1:
        raise InvalidParameterError("need sigma > 0 and b >= 1")
    k_pow = 2 if variant == "statement" else 4
    if variant not in ("statement", "proof"):
        raise InvalidParameterError(f"unknown variant {variant!r}")
    degree = k_pow + 4.0 * (2 * b + 2)
    log_sum, log_tail, K = _shell_sum_log(b, _compound_log_terms(b, v, sigma, k_pow), K_trunc, norm,
                                          2.0 * sigma, degree)
    base = math.log(16.0 * (2 * b + 3) / math.e)
    if variant == "statement":
        left = 0.5 * (b * math.log(2.0) + log_sum)
        right = (4 * b + 6) * base - (5 * b + 6) * math.log(sigma)
    else:
        left = b * math.log(2.0) + log_sum
        right = (8 * b + 12) * base - (9 * b + 12) * math.log(sigma)
    return BoundCheck("compound_" + variant, {"b": b, "sigma": sigma, "v": v, "K_trunc": K, "norm": norm},
                      left, right, right - left, left <= right, log_domain=True,
                      extra={"log_tail_majorant": log_tail})


def compound_sum_direct(b: int, sigma: float, v: int, K: int, k_pow: int = 2) -> float:
    """Plain floating-point evaluation of ``2^b sum_{|k|_1 <= K} |k|^p (...)^4 e^{-2|k|sigma}``."""
    total = 0.0
    for j in range(K + 1):
        count = math.exp(float(log_shell_count(b, np.array([j]))[0]))
        total += count * (j**k_pow) * ((1 + v * v) * (j + 1) ** (2 * b + 2)) ** 4 * math.exp(-2 * j * sigma)
    return 2**b * total


def default_suite(sigma0: float = 1.0 / 48.0, seed: int = 0) -> list[BoundCheck]:
    """All checks of the acceptance grid."""
    out = []
    for n in (1, 2, 3):
        for s in (0.25, 0.5, 1.0):
            out.append(expsum_bound(n, s, 0.0))
            out.append(expsum_bound(n, s, 2.0))
    rng = np.random.default_rng(seed)
    for _ in range(100):
        out.append(hilbert_like_bound(rng.standard_normal((50, 50))))
    for b in (1, 2):
        for v in (0, 1, 2):
            for s in (sigma0, sigma0 / 2.0):
                for variant in ("statement", "proof"):
                    out.append(compound_bound(b, s, v, variant=variant))
    return out
