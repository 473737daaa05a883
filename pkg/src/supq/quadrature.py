"""Integration over the truncated ordered simplex ``T_R = {R > x_1 > ... > x_q > 0}``.

Symmetric integrands are integrated over the cube ``[0, R]^q`` and divided
by ``q!``.  Endpoint singularities of the form ``x^a`` (and ``(1 - x)^b`` when
``R = 1``) are absorbed into tensor-product Gauss-Jacobi weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.special


class NotConverged(ArithmeticError):
    pass


class SymmetryViolation(ValueError):
    pass


@dataclass(frozen=True)
class QuadResult:
    value: float  # an array when the integrand is vector-valued
    abs_err: float
    evals: int


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    max_points_per_axis: int = 400
    min_points: int = 16
    scheme: str = "gauss_jacobi_tensor"
    chunk: int = 1 << 20

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.scheme not in ("gauss_jacobi_tensor", "adaptive_1d"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.min_points <= self.max_points_per_axis:
            raise ValueError("need 1 <= min_points <= max_points_per_axis")

    def escalated(self) -> "QuadConfig | None":
        """Twice the starting node count, or ``None`` once at the cap."""
        # refinement compares n with 2n, so the start may not pass half the cap
        if 2 * self.min_points > self.max_points_per_axis // 2:
            return None
        return replace(self, min_points=2 * self.min_points, rel_tol=self.rel_tol / 2)


@lru_cache(maxsize=512)
def _jacobi(npoints: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    u, w = scipy.special.roots_jacobi(npoints, alpha, beta)
    u.flags.writeable = False
    w.flags.writeable = False
    return u, w


def gauss_jacobi_nodes(npoints: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-1, 1]`` for the weight ``(1 - u)^alpha (1 + u)^beta``."""
    if not (alpha > -1 and beta > -1):
        raise ValueError("Jacobi exponents must exceed -1")
    if npoints < 1:
        raise ValueError("npoints must be positive")
    return _jacobi(int(npoints), float(alpha), float(beta))


def _axis_rule(npoints: int, R: float, a: float, b: float):
    """Rule on ``[0, R]`` for ``x^a`` (and ``(1-x)^b`` when ``R == 1``).

    Returns nodes, weights and the log of the absorbed weight at the nodes.
    """
    if R == 1.0:
        u, w = gauss_jacobi_nodes(npoints, b, a)
        x = 0.5 * (1.0 + u)
        w = w / 2.0 ** (a + b + 1.0)
        logw = a * np.log(x) + b * np.log1p(-x)
    else:
        u, w = gauss_jacobi_nodes(npoints, 0.0, a)
        x = 0.5 * R * (1.0 + u)
        w = w * (0.5 * R) ** (a + 1.0)
        logw = a * np.log(x)
    return x, w, logw


def _tensor_sum(integrand, q: int, x, w, logw, regular: bool, chunk: int) -> tuple[float, float, int]:
    npts = x.size
    total = 0.0
    mag = 0.0
    # chunk along the first axis, full tensor over the rest
    rest = npts ** (q - 1)
    step = max(1, chunk // max(rest, 1))
    rest_idx = np.indices((npts,) * (q - 1)).reshape(q - 1, -1).T if q > 1 else np.zeros((1, 0), int)
    for start in range(0, npts, step):
        first = np.arange(start, min(start + step, npts))
        idx = np.concatenate(
            [np.repeat(first, rest)[:, None], np.tile(rest_idx, (first.size, 1))], axis=1
        )
        pts = x[idx]
        wt = np.prod(w[idx], axis=1)
        vals = np.asarray(integrand(pts), dtype=float)
        if not regular:
            vals = (vals.T * np.exp(-np.sum(logw[idx], axis=1))).T
        total = total + wt @ vals
        mag = mag + np.abs(wt) @ np.abs(vals)
    return total, mag, npts ** q


def _spot_check_symmetry(integrand, q: int, R: float, seed: int = 12345) -> None:
    if q < 2:
        return
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05 * R, 0.95 * R, size=(10, q))
    perm = np.stack([rng.permutation(q) for _ in range(10)])
    a = np.asarray(integrand(pts), dtype=float)
    b = np.asarray(integrand(np.take_along_axis(pts, perm, axis=1)), dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b)).max(axis=tuple(range(1, a.ndim)), keepdims=True)
    bad = np.abs(a - b) > 1e-8 * np.where(scale > 0, scale, 1.0)
    if np.any(bad):
        raise SymmetryViolation("integrand is not symmetric under coordinate permutations")


def integrate_simplex(
    q: int,
    integrand: Callable[[np.ndarray], np.ndarray],
    R: float,
    sing: tuple[float, float] = (0.0, 0.0),
    cfg: QuadConfig = QuadConfig(),
    regular: bool = False,
) -> QuadResult:
    """Integrate a symmetric function over ``T_R``.

    ``integrand`` is vectorized: it maps an ``(M, q)`` array of points to
    ``M`` values (or an ``(M, k)`` array for ``k`` integrands sharing one
    rule, judged jointly for convergence).  ``sing = (a, b)`` declares that the integrand behaves like
    ``prod x_r^a (1 - x_r)^b``; with ``regular=True`` the integrand is taken
    to exclude those factors (they are then supplied by the rule).
    """
    q = int(getattr(q, "q", q))
    a, b = map(float, sing)
    if not (a > -1 and b > -1):
        raise ValueError("singular exponents must exceed -1")
    if not 0 < R <= 1:
        raise ValueError("R must lie in (0, 1]")
    if cfg.scheme == "adaptive_1d":
        return _adaptive_1d(integrand, q, R, a, b, cfg, regular)
    _spot_check_symmetry(integrand, q, R)

    fact = math.factorial(q)
    evals = 0
    n = max(1, min(cfg.min_points, cfg.max_points_per_axis // 2))
    prev = None
    while True:
        x, w, logw = _axis_rule(n, R, a, b)
        val, mag, ne = _tensor_sum(integrand, q, x, w, logw, regular, cfg.chunk)
        evals += ne
        val /= fact
        mag /= fact
        if prev is not None:
            diff = float(np.max(np.abs(val - prev)))
            if diff <= cfg.rel_tol * float(np.max(np.abs(val))):
                err = max(diff, 64 * np.finfo(float).eps * float(np.max(mag)))
                return QuadResult(val if np.ndim(val) else float(val), err, evals)
        if n >= cfg.max_points_per_axis:
            change = np.max(np.abs(val - prev)) if prev is not None else np.inf
            raise NotConverged(f"no convergence at {n} points per axis (last change {change:.3e})")
        prev = val
        n = min(2 * n, cfg.max_points_per_axis)


def _adaptive_1d(integrand, q, R, a, b, cfg, regular) -> QuadResult:
    if q != 1:
        raise ValueError("adaptive_1d handles q = 1 only")
    wvar_b = b if R == 1.0 else 0.0

    def g(t):
        if regular:
            v = float(np.asarray(integrand(np.array([[t]])), dtype=float)[0])
            return v if R == 1.0 else v * (1.0 - t) ** b
        # QUADPACK may sample the endpoints, where dividing out the weight is 0/0
        t = min(max(t, 1e-300), 1.0 - 1e-16)
        v = float(np.asarray(integrand(np.array([[t]])), dtype=float)[0])
        return v / (t ** a * (1.0 - t) ** wvar_b)

    val, err, info = scipy.integrate.quad(
        g, 0.0, R, weight="alg", wvar=(a, wvar_b), epsabs=0.0, epsrel=cfg.rel_tol,
        limit=200, full_output=True,
    )
    if err > 10 * cfg.rel_tol * abs(val) and err > 1e-300:
        raise NotConverged(f"adaptive quadrature stalled (err {err:.3e})")
    return QuadResult(float(val), float(err), int(info["neval"]))


def _betacf(a: float, b: float, x: float, maxit: int = 1000, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, maxit + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NotConverged("incomplete beta continued fraction did not converge")


def regularized_beta(a: float, b: float, x: float) -> float:
    """``I_x(a, b)`` by continued fraction."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def incomplete_ratio_1d(m: int, l: int, R: float) -> float:
    """Mass of ``x^{l/2} (1 - x)^{m/2 - 2}`` on ``[0, R]`` relative to ``[0, 1]``."""
    a, b = 0.5 * l + 1.0, 0.5 * m - 1.0
    if l < 0 or b <= 0:
        raise ValueError(f"need l >= 0 and m >= 3, got l={l}, m={m}")
    if not 0 <= R <= 1:
        raise ValueError("R must lie in [0, 1]")
    return regularized_beta(a, b, R)
