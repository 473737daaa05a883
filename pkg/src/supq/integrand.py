"""Weights, polynomials on the matrix ball, Haar sampling on K, and the
K-integrated density whose mass decides non-vanishing.

All polynomial evaluation is batched: ``z`` may carry leading axes, the last
two being ``(p, q)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import cmatrix as cm
from .group import KElement, Signature

DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 0xA111


@dataclass(frozen=True)
class WeightSpec:
    """The character ``chi_m(diag(A, D)) = det(D)**m`` of K."""

    sig: Signature
    m: int

    def __post_init__(self):
        if self.m < 2 * self.sig.n - 1:
            raise ValueError(f"weight m={self.m} must be >= 2n-1 = {2 * self.sig.n - 1}")


@dataclass(frozen=True)
class DetPower:
    l: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("det power must be nonnegative")

    def check(self, sig: Signature) -> None:
        if sig.p != sig.q:
            raise ValueError("det^l is only defined for p = q")

    def __call__(self, z) -> complex:
        val = np.linalg.det(np.asarray(z, dtype=np.complex128)) ** self.l
        return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class Constant:
    c: complex = 1.0

    def check(self, sig: Signature) -> None:
        pass

    def __call__(self, z):
        z = np.asarray(z)
        if z.ndim > 2:
            return np.full(z.shape[:-2], complex(self.c))
        return complex(self.c)


@dataclass(frozen=True)
class MonomialSum:
    """``sum_j c_j prod_{r,s} z[r,s]**e_j[r,s]``."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty monomial sum")
        shapes = {np.shape(e) for e, _ in self.terms}
        if len(shapes) != 1:
            raise ValueError("exponent matrices differ in shape")
        for e, _ in self.terms:
            if np.any(np.asarray(e) < 0):
                raise ValueError("negative exponent")

    @classmethod
    def of(cls, terms: Sequence) -> "MonomialSum":
        return cls(tuple((tuple(map(tuple, np.asarray(e, dtype=int))), complex(c)) for e, c in terms))

    def check(self, sig: Signature) -> None:
        shape = np.shape(self.terms[0][0])
        if shape != (sig.p, sig.q):
            raise ValueError(f"exponents have shape {shape}, expected {(sig.p, sig.q)}")

    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.terms)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros(z.shape[:-2], dtype=np.complex128)
        for e, c in self.terms:
            e = np.asarray(e)
            term = np.full(z.shape[:-2], c, dtype=np.complex128)
            for r, s in zip(*np.nonzero(e)):
                term = term * z[..., r, s] ** int(e[r, s])
            out = out + term
        return out if out.ndim else complex(out)


PolySpec = Union[DetPower, Constant, MonomialSum]


def eval_poly(f: PolySpec, z):
    return f(z)


_FACTOR = re.compile(r"z\[(\d+)\]\[(\d+)\](?:\^(\d+))?")


def _split_terms(body: str) -> list[str]:
    terms, depth, cur = [], 0, ""
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("*", "e", "E")):
            terms.append(cur)
            cur = ""
        cur += ch
    if cur.strip():
        terms.append(cur)
    return terms


def parse_poly(text: str, sig: Signature) -> PolySpec:
    """Parse ``det^l``, ``const c`` or ``sum: c * z[r][s]^e * ... + ...``.

    Indices in ``z[r][s]`` are 1-based.  Coefficients are Python complex
    literals (``2``, ``-1.5``, ``(1+2j)``); a missing coefficient means 1.
    """
    text = text.strip()
    if text.startswith("det"):
        m = re.fullmatch(r"det\s*\^\s*(\d+)", text)
        if not m:
            raise ValueError(f"bad det spec {text!r}")
        f = DetPower(int(m.group(1)))
    elif text.startswith("const"):
        f = Constant(complex(text[len("const"):].strip().replace(" ", "") or "1"))
    elif text.startswith("sum:"):
        terms = []
        for raw in _split_terms(text[4:]):
            raw = raw.replace(" ", "")
            sign = 1
            while raw and raw[0] in "+-":
                sign = -sign if raw[0] == "-" else sign
                raw = raw[1:]
            coef = 1.0 + 0j
            expo = np.zeros((sig.p, sig.q), dtype=int)
            for part in raw.split("*"):
                fm = _FACTOR.fullmatch(part)
                if fm:
                    r, s = int(fm.group(1)) - 1, int(fm.group(2)) - 1
                    if not (0 <= r < sig.p and 0 <= s < sig.q):
                        raise ValueError(f"index out of range in {part!r}")
                    expo[r, s] += int(fm.group(3) or 1)
                elif part:
                    coef *= complex(part.strip("()"))
            terms.append((expo, sign * coef))
        f = MonomialSum.of(terms)
    else:
        raise ValueError(f"unrecognized polynomial spec {text!r}")
    f.check(sig)
    return f


@dataclass
class HaarSampler:
    """Seeded stream of Haar-random elements of K."""

    seed: int = DEFAULT_SEED
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)


def _rng(sampler) -> np.random.Generator:
    if isinstance(sampler, HaarSampler):
        return sampler.rng
    if isinstance(sampler, np.random.Generator):
        return sampler
    return np.random.default_rng(sampler)


def haar_unitary_batch(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def haar_batch_K(sig: Signature, count: int, sampler) -> tuple[np.ndarray, np.ndarray]:
    rng = _rng(sampler)
    a = haar_unitary_batch(sig.p, count, rng)
    d = haar_unitary_batch(sig.q, count, rng)
    phase = np.linalg.det(a) * np.linalg.det(d)
    d[:, :, -1] /= phase[:, None]
    return a, d


def haar_sample_K(sig: Signature, sampler) -> KElement:
    rng = _rng(sampler)
    g = lambda k: (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    a = cm.qr_unitary(g(sig.p))
    d = cm.qr_unitary(g(sig.q))
    d[:, -1] /= np.linalg.det(a) * np.linalg.det(d)
    return KElement(a, d)


def _weight_factor(m: int, x: np.ndarray) -> np.ndarray:
    # prod_r (1 - x_r)^{m/2}, via logs since m may be odd
    return np.exp(0.5 * m * np.sum(np.log1p(-x), axis=-1))


def _ball_point(a: np.ndarray, d: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``A (x^{1/2})_{p x q} D*`` with broadcasting over leading axes."""
    q = d.shape[-1]
    return a[..., :, :q] * np.sqrt(x)[..., None, :] @ np.swapaxes(d.conj(), -1, -2)


def phi(w: WeightSpec, f: PolySpec, k: KElement, x) -> float:
    """Density at ``(k, x)``: ``prod (1 - x_r)^{m/2} * |f(A x^{1/2} D*)|``."""
    x = _check_x(x, w.sig.q)
    f.check(w.sig)
    z = _ball_point(k.A, k.D, x)
    return float(_weight_factor(w.m, x) * abs(f(z)))


def _check_x(x, q: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != q:
        raise ValueError(f"x must have trailing length {q}")
    if np.any(x <= 0) or np.any(x >= 1):
        raise ValueError("x must lie in the open unit cube")
    return x


@dataclass(frozen=True)
class KAverageConfig:
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    method: str = "auto"  # "auto" uses closed forms where available, "mc" forces sampling
    chunk: int = 2_000_000


def has_closed_form(f: PolySpec, cfg: KAverageConfig) -> bool:
    return cfg.method == "auto" and isinstance(f, (Constant, DetPower))


def _closed_form(w: WeightSpec, f: PolySpec, x: np.ndarray) -> np.ndarray:
    base = _weight_factor(w.m, x)
    if isinstance(f, Constant):
        return base * abs(f.c)
    return base * np.exp(0.5 * f.l * np.sum(np.log(x), axis=-1))


def phi_k_batches(w: WeightSpec, f: PolySpec, x, cfg: KAverageConfig, batches: int = 1) -> np.ndarray:
    """Monte Carlo K-averages over ``batches`` disjoint blocks of one Haar sample set.

    Returns shape ``x.shape[:-1] + (batches,)``.  The sample set depends only
    on ``cfg``, so the result is a smooth deterministic function of ``x``.
    """
    sig = w.sig
    f.check(sig)
    x = _check_x(x, sig.q)
    per = cfg.samples // batches
    if per < 1:
        raise ValueError("fewer samples than batches")
    a, d = haar_batch_K(sig, per * batches, cfg.seed)
    xb = x.reshape(-1, sig.q)
    out = np.empty((xb.shape[0], batches))
    step = max(1, cfg.chunk // (per * batches * sig.p * sig.q))
    for i in range(0, xb.shape[0], step):
        xs = xb[i:i + step]
        z = _ball_point(a[:, None], d[:, None], xs[None, :, :])
        vals = np.abs(f(z)).reshape(batches, per, xs.shape[0])
        out[i:i + step] = vals.mean(axis=1).T
    out *= _weight_factor(w.m, xb)[:, None]
    return out.reshape(x.shape[:-1] + (batches,))


def phi_k_avg(w: WeightSpec, f: PolySpec, x, cfg: KAverageConfig = KAverageConfig()):
    """``int_K phi(k, x) dk`` with ``int_K dk = 1``.

    Returns ``(value, stderr)``; both arrays when ``x`` carries a leading
    batch axis.  Closed forms (zero stderr) for constants and, when
    ``p = q``, powers of the determinant; Monte Carlo otherwise.
    """
    f.check(w.sig)
    x = _check_x(x, w.sig.q)
    if has_closed_form(f, cfg):
        val = _closed_form(w, f, x)
        return _pack(val, np.zeros_like(val))
    # one sample per batch gives the plain sample mean and its standard error
    vals = phi_k_batches(w, f, x, cfg, batches=cfg.samples)
    err = vals.std(axis=-1, ddof=1) / np.sqrt(cfg.samples) if cfg.samples > 1 else np.zeros(vals.shape[:-1])
    return _pack(vals.mean(axis=-1), err)


def _pack(val, err):
    if np.ndim(val) == 0:
        return float(val), float(err)
    return val, err
