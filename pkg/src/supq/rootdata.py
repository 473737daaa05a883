"""Restricted roots of su(p,q), the Cartan integration density and the
x = tanh^2(t) substitution that turns it into ``mu_{p,q}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .group import Signature


@dataclass(frozen=True)
class RestrictedRoot:
    coeffs: tuple[int, ...]
    multiplicity: int

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(t, dtype=float) @ np.asarray(self.coeffs, dtype=float)


@dataclass(frozen=True)
class RootSystem:
    sig: Signature
    roots: tuple[RestrictedRoot, ...]


def build_sigma_plus(sig: Signature) -> RootSystem:
    """Positive restricted roots with multiplicities.

    e_r - e_s and e_r + e_s (r < s) with multiplicity 2, 2e_r with
    multiplicity 1, and e_r with multiplicity 2(p - q) when p > q.
    """
    q = sig.q

    def unit(*pairs):
        c = [0] * q
        for idx, val in pairs:
            c[idx] += val
        return tuple(c)

    roots = []
    for r, s in combinations(range(q), 2):
        roots.append(RestrictedRoot(unit((r, 1), (s, -1)), 2))
    for r, s in combinations(range(q), 2):
        roots.append(RestrictedRoot(unit((r, 1), (s, 1)), 2))
    for r in range(q):
        roots.append(RestrictedRoot(unit((r, 2)), 1))
    if sig.p > sig.q:
        for r in range(q):
            roots.append(RestrictedRoot(unit((r, 1)), 2 * (sig.p - sig.q)))
    return RootSystem(sig, tuple(roots))


def in_chamber(t, R: float | None = None) -> bool:
    t = np.asarray(t, dtype=float)
    ok = bool(np.all(np.diff(t) < 0) and t[-1] > 0)
    return ok and (R is None or t[0] < R)


def check_chamber(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or not in_chamber(t):
        raise ValueError("t must satisfy t_1 > t_2 > ... > t_q > 0")
    return t


def check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not (in_chamber(x) and x[0] < 1):
        raise ValueError("x must satisfy 1 > x_1 > ... > x_q > 0")
    return x


def _log_sinh(y: np.ndarray) -> np.ndarray:
    # log sinh y for y > 0 without overflow
    y = np.asarray(y, dtype=float)
    return y + np.log(-np.expm1(-2.0 * y)) - np.log(2.0)


def log_sinh_density(rs: RootSystem, t) -> float:
    t = check_chamber(t)
    return float(sum(lam.multiplicity * _log_sinh(lam(t)) for lam in rs.roots))


def sinh_density(rs: RootSystem, t) -> float:
    """``prod_{lambda} sinh(lambda(H_t))^{m_lambda}``."""
    return float(np.exp(log_sinh_density(rs, t)))


def _log_mu_parts(sig: Signature, log_x, log_1mx, diffs) -> float:
    q, n = sig.q, sig.n
    val = np.sum((sig.p - q) * log_x - n * log_1mx)
    for r, s in combinations(range(q), 2):
        val += 2.0 * np.log(diffs[(r, s)])
    return float(val)


def mu(sig: Signature, x) -> float:
    """``prod_r x_r^{p-q} (1 - x_r)^{-n} * prod_{r<s} (x_r - x_s)^2``."""
    x = check_x(x)
    diffs = {(r, s): x[r] - x[s] for r, s in combinations(range(sig.q), 2)}
    return float(np.exp(_log_mu_parts(sig, np.log(x), np.log1p(-x), diffs)))


def mu_batch(sig: Signature, x: np.ndarray) -> np.ndarray:
    """Vectorized ``mu`` over rows of ``x`` (no chamber check: symmetric in x)."""
    x = np.asarray(x, dtype=float)
    val = np.prod(x ** (sig.p - sig.q) / (1.0 - x) ** sig.n, axis=-1)
    for r, s in combinations(range(sig.q), 2):
        val = val * (x[..., r] - x[..., s]) ** 2
    return val


def nu(n: int, N: int) -> float:
    """Truncation level ``(sqrt(1 + n/2N^2) + sqrt(n/2N^2))^{-2}`` in x-space."""
    r = n / (2.0 * N * N)
    return float((np.sqrt(1.0 + r) + np.sqrt(r)) ** -2)


def max_R(n: int, N: int) -> float:
    """Largest Cartan radius ``artanh(sqrt(nu_n(N)))`` compatible with level N."""
    return float(np.arctanh(np.sqrt(nu(n, N))))


def max_R_arcosh(n: int, N: int) -> float:
    return float(0.25 * np.arccosh(1.0 + 4.0 * N * N / n))


def cov_identity_residual(sig: Signature, t) -> float:
    """Relative gap between the Cartan density and ``mu(tanh^2 t) * |dx/dt|``.

    Evaluated in log space; ``1 - x`` and ``x_r - x_s`` are formed from ``t``
    directly so that large ``t`` keeps full relative precision.
    """
    t = check_chamber(t)
    rs = build_sigma_plus(sig)
    lhs = log_sinh_density(rs, t)
    log_x = 2.0 * np.log(np.tanh(t))
    log_1mx = -2.0 * np.log(np.cosh(t))
    diffs = {
        (r, s): np.sinh(t[r] - t[s]) * np.sinh(t[r] + t[s]) / (np.cosh(t[r]) * np.cosh(t[s])) ** 2
        for r, s in combinations(range(sig.q), 2)
    }
    # |dx_r/dt_r| = 2 tanh(t_r) sech^2(t_r)
    jac = np.sum(np.log(2.0) + np.log(np.tanh(t)) + log_1mx)
    rhs = _log_mu_parts(sig, log_x, log_1mx, diffs) + jac
    return float(abs(np.expm1(rhs - lhs)))
