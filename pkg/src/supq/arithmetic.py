"""Exact enumeration of principal congruence subgroups of SU(p,q; Z[i]),
the norm bounds that separate them from ``K exp(S_R) K exp(-S_R) K``,
and truncated Poincare series over the enumerated elements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import groupby
from typing import Iterator, Sequence

import numpy as np

from .group import DomainPoint, GroupElement, Signature
from .integrand import haar_batch_K
from .rootdata import max_R

DEFAULT_CANDIDATE_CAP = 10_000_000


class BoundTooLarge(RuntimeError):
    pass


class Violation(AssertionError):
    pass


@dataclass(frozen=True)
class GaussInt:
    re: int
    im: int = 0

    def __add__(self, other):
        o = _gi(other)
        return GaussInt(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _gi(other)
        return GaussInt(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return GaussInt(-self.re, -self.im)

    def __mul__(self, other):
        o = _gi(other)
        return GaussInt(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self) -> "GaussInt":
        return GaussInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __bool__(self) -> bool:
        return bool(self.re or self.im)


def _gi(x) -> GaussInt:
    if isinstance(x, GaussInt):
        return x
    if isinstance(x, (int, np.integer)):
        return GaussInt(int(x), 0)
    if isinstance(x, complex) and x.real.is_integer() and x.imag.is_integer():
        return GaussInt(int(x.real), int(x.imag))
    if isinstance(x, (tuple, list)) and len(x) == 2 and all(isinstance(v, (int, np.integer)) for v in x):
        return GaussInt(int(x[0]), int(x[1]))
    raise TypeError(f"cannot treat {x!r} as a Gaussian integer")


ZERO, ONE = GaussInt(0), GaussInt(1)
GaussMatrix = tuple[tuple[GaussInt, ...], ...]


def gmul(a: GaussMatrix, b: GaussMatrix) -> GaussMatrix:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum((a[i][t] * b[t][j] for t in range(k)), ZERO) for j in range(m)) for i in range(n)
    )


def gadjoint(a: GaussMatrix) -> GaussMatrix:
    return tuple(tuple(a[j][i].conj() for j in range(len(a))) for i in range(len(a[0])))


def gdet(a: GaussMatrix) -> GaussInt:
    """Exact determinant by Laplace expansion (desk-scale sizes only)."""
    n = len(a)
    if n == 1:
        return a[0][0]
    total = ZERO
    for j in range(n):
        if not a[0][j]:
            continue
        minor = tuple(tuple(row[c] for c in range(n) if c != j) for row in a[1:])
        term = a[0][j] * gdet(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def frob_norm_sq_exact(a: GaussMatrix) -> int:
    return sum(x.norm() for row in a for x in row)


@dataclass(frozen=True)
class LatticeElement:
    sig: Signature
    entries: GaussMatrix
    norm_sq: int

    @classmethod
    def of(cls, sig: Signature, entries) -> "LatticeElement":
        ent = tuple(tuple(_gi(x) for x in row) for row in entries)
        return cls(sig, ent, frob_norm_sq_exact(ent))

    def in_K(self) -> bool:
        p, n = self.sig.p, self.sig.n
        return not any(self.entries[r][s] for r in range(n) for s in range(n) if (r < p) != (s < p))

    def matrix(self) -> np.ndarray:
        return np.array([[complex(x) for x in row] for row in self.entries])

    def as_group(self) -> GroupElement:
        return GroupElement(self.sig, self.matrix())

    def level_ok(self, N: int) -> bool:
        return all(
            (x.re - (1 if r == s else 0)) % N == 0 and x.im % N == 0
            for r, row in enumerate(self.entries) for s, x in enumerate(row)
        )

    def is_unitary_for_form(self) -> bool:
        """Exact check of ``g* I_{p,q} g = I_{p,q}`` and ``det g = 1``."""
        p, n = self.sig.p, self.sig.n
        ipq = tuple(tuple(GaussInt(1 if r == s and r < p else -1 if r == s else 0) for s in range(n))
                    for r in range(n))
        return gmul(gmul(gadjoint(self.entries), ipq), self.entries) == ipq and gdet(self.entries) == ONE

    def to_json(self, level: int) -> str:
        return json.dumps({
            "level": level,
            "norm_sq": self.norm_sq,
            "entries": [[[x.re, x.im] for x in row] for row in self.entries],
        })


def _congruent_range(radius: int, N: int, residue: int) -> range:
    lo = -radius
    start = lo + ((residue - lo) % N)
    return range(start, radius + 1, N)


def gauss_disc(max_norm: int, N: int = 1, residue: GaussInt = ZERO) -> Iterator[GaussInt]:
    """Gaussian integers ``g`` with ``|g|^2 <= max_norm`` and ``g = residue (mod N)``."""
    if max_norm < 0:
        return
    r = math.isqrt(max_norm)
    for x in _congruent_range(r, N, residue.re):
        rem = max_norm - x * x
        ry = math.isqrt(rem)
        for y in _congruent_range(ry, N, residue.im):
            yield GaussInt(x, y)


def gauss_circle(k: int, N: int = 1, residue: GaussInt = ZERO) -> Iterator[GaussInt]:
    """Gaussian integers of norm exactly ``k`` congruent to ``residue`` mod ``N``."""
    if k < 0:
        return
    r = math.isqrt(k)
    for x in _congruent_range(r, N, residue.re):
        y2 = k - x * x
        y = math.isqrt(y2)
        if y * y != y2:
            continue
        for yy in ((y, -y) if y else (0,)):
            if (yy - residue.im) % N == 0:
                yield GaussInt(x, yy)


def _enumerate_su11(N: int, bound: int, cap: int) -> list[LatticeElement]:
    """SU(1,1) normal form ``[[a, b], [conj b, conj a]]`` with ``|a|^2 - |b|^2 = 1``."""
    sig = Signature(1, 1)
    out = []
    if bound < 2:
        return out
    seen = 0
    # norm_sq = 2 + 4|b|^2
    for b in gauss_disc((bound - 2) // 4, N, ZERO):
        for a in gauss_circle(1 + b.norm(), N, ONE):
            seen += 1
            if seen > cap:
                raise BoundTooLarge(f"more than {cap} candidates")
            out.append(LatticeElement(sig, ((a, b), (b.conj(), a.conj())), 2 + 4 * b.norm()))
    return out


def _form_dot(u: Sequence[GaussInt], v: Sequence[GaussInt], p: int) -> GaussInt:
    # <u, v> = u* I_{p,q} v
    total = ZERO
    for r, (x, y) in enumerate(zip(u, v)):
        t = x.conj() * y
        total = total + t if r < p else total - t
    return total


def _enumerate_backtrack(sig: Signature, N: int, bound: int, cap: int) -> list[LatticeElement]:
    """Column-by-column search with exact Gram-relation pruning.

    Column ``j`` must be congruent to ``e_j`` mod N, have form-norm
    ``+1`` (j < p) or ``-1`` (j >= p), and be form-orthogonal to the earlier
    columns.  Within a column, the entries of the opposite-sign block and all
    but one entry of the same-sign block are enumerated; the last one is
    solved on a circle.
    """
    p, n = sig.p, sig.n
    counter = [0]
    found = []

    def bump():
        counter[0] += 1
        if counter[0] > cap:
            raise BoundTooLarge(f"more than {cap} partial columns")

    def columns(j: int, budget: int) -> Iterator[tuple[GaussInt, ...]]:
        plus = j < p
        same = list(range(p)) if plus else list(range(p, n))
        other = list(range(p, n)) if plus else list(range(p))
        free = other + same[:-1]
        last = same[-1]
        resid = [ONE if r == j else ZERO for r in range(n)]
        vec = [ZERO] * n

        def rec(i: int, other_sq: int, same_sq: int):
            # |col|^2 = 1 + 2*other_sq must stay within budget
            if 1 + 2 * other_sq > budget:
                return
            if i == len(free):
                target = 1 + other_sq - same_sq
                for v in gauss_circle(target, N, resid[last]):
                    vec[last] = v
                    bump()
                    yield tuple(vec)
                return
            r = free[i]
            if r in other:
                room = (budget - 1) // 2 - other_sq
            else:
                room = 1 + other_sq - same_sq
            for v in gauss_disc(room, N, resid[r]):
                vec[r] = v
                if r in other:
                    yield from rec(i + 1, other_sq + v.norm(), same_sq)
                else:
                    yield from rec(i + 1, other_sq, same_sq + v.norm())
            vec[r] = ZERO

        yield from rec(0, 0, 0)

    cols: list[tuple[GaussInt, ...]] = []

    def search(j: int, used: int):
        if j == n:
            ent = tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))
            if gdet(ent) == ONE:
                found.append(LatticeElement(sig, ent, used))
            return
        budget = bound - used - (n - j - 1)
        for col in columns(j, budget):
            if any(_form_dot(prev, col, p) for prev in cols):
                continue
            cols.append(col)
            search(j + 1, used + sum(x.norm() for x in col))
            cols.pop()

    search(0, 0)
    return found


def enumerate_gamma(
    sig: Signature, N: int, bound: int, method: str = "auto", cap: int = DEFAULT_CANDIDATE_CAP
) -> list[LatticeElement]:
    """All ``gamma`` in the level-``N`` congruence subgroup with ``||gamma||^2 <= bound``.

    Sorted by ``(norm_sq, entries)`` so shells and outputs are reproducible.
    """
    if N < 1:
        raise ValueError("level N must be positive")
    if method == "auto":
        method = "normal_form" if (sig.p, sig.q) == (1, 1) else "backtrack"
    if method == "normal_form":
        if (sig.p, sig.q) != (1, 1):
            raise ValueError("normal form enumeration is for SU(1,1)")
        out = _enumerate_su11(N, bound, cap)
    elif method == "backtrack":
        out = _enumerate_backtrack(sig, N, bound, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sorted(out, key=_sort_key)


def _sort_key(e: LatticeElement):
    return (e.norm_sq, tuple((x.re, x.im) for row in e.entries for x in row))


@dataclass(frozen=True)
class OffKNormReport:
    level: int
    total: int
    in_K: int
    off_K: int
    min_off_K_norm: int | None
    required: int


def check_lemma_8_3(sig: Signature, N: int, elems: Sequence[LatticeElement]) -> OffKNormReport:
    """Every element outside K has ``||gamma||^2 >= 4 N^2 + n`` (exact integers)."""
    required = 4 * N * N + sig.n
    off = [e.norm_sq for e in elems if not e.in_K()]
    for e in elems:
        if not e.in_K() and e.norm_sq < required:
            raise Violation(f"off-K element with norm_sq {e.norm_sq} < {required}: {e.entries}")
    return OffKNormReport(N, len(elems), len(elems) - len(off), len(off), min(off) if off else None, required)


def sample_chamber(q: int, R: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of ``T_R`` (sorted cube samples, strict inequalities)."""
    t = -np.sort(-rng.uniform(0.0, R, size=(count, q)), axis=1)
    ok = (t[:, -1] > 0) & np.all(np.diff(t, axis=1) < 0, axis=1) if q > 1 else t[:, -1] > 0
    return t[ok]


def _exp_Ht_batch(sig: Signature, t: np.ndarray) -> np.ndarray:
    p, n = sig.p, sig.n
    out = np.broadcast_to(np.eye(n, dtype=np.complex128), (t.shape[0], n, n)).copy()
    for r in range(sig.q):
        ch, sh = np.cosh(t[:, r]), np.sinh(t[:, r])
        out[:, r, r] = ch
        out[:, p + r, p + r] = ch
        out[:, r, p + r] = sh
        out[:, p + r, r] = sh
    return out


def _k_batch(sig: Signature, count: int, rng) -> np.ndarray:
    a, d = haar_batch_K(sig, count, rng)
    p, n = sig.p, sig.n
    out = np.zeros((count, n, n), dtype=np.complex128)
    out[:, :p, :p] = a
    out[:, p:, p:] = d
    return out


def sample_KSK_matrices(sig: Signature, R: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``k1 exp(H_t) k2 exp(-H_l) k3`` with ``t, l`` uniform on ``T_R`` and Haar ``k``'s."""
    if R <= 0:
        raise ValueError("R must be positive")
    def draw(k):
        pts = np.empty((0, sig.q))
        while pts.shape[0] < k:
            pts = np.vstack([pts, sample_chamber(sig.q, R, 2 * k, rng)])
        return pts[:k]
    t, l = draw(count), draw(count)
    k1, k2, k3 = (_k_batch(sig, count, rng) for _ in range(3))
    return k1 @ _exp_Ht_batch(sig, t) @ k2 @ _exp_Ht_batch(sig, -l) @ k3


def sample_KSK(sig: Signature, R: float, count: int, sampler) -> list[GroupElement]:
    rng = sampler.rng if hasattr(sampler, "rng") else np.random.default_rng(sampler)
    return [GroupElement(sig, m) for m in sample_KSK_matrices(sig, R, count, rng)]


def ksk_norm_bound(sig: Signature, R: float) -> float:
    return sig.n * math.cosh(4.0 * R)


def check_s1(sig: Signature, N: int, R: float) -> bool:
    """Sufficient separation test ``n cosh(4R) <= 4 N^2 + n`` for level ``N >= 3``."""
    if N < 3:
        raise ValueError("separation test needs N >= 3")
    return sig.n * math.cosh(4.0 * R) <= 4 * N * N + sig.n


def check_s1_radius(sig: Signature, N: int, R: float) -> bool:
    """Same test phrased through the closed-form radius ``artanh sqrt(nu_n(N))``."""
    return R <= max_R(sig.n, N) * (1 + 1e-15)


@dataclass(frozen=True)
class TruncationReport:
    bound: int
    terms_used: int
    partial_value: complex
    tail_indicator: float


def _poincare_terms(elems: Sequence[LatticeElement], p: int, m: int, l: int, z: np.ndarray):
    for e in elems:
        g = e.matrix()
        a, b, c, d = g[:p, :p], g[:p, p:], g[p:, :p], g[p:, p:]
        num = np.linalg.det(a @ z + b) ** l if l else 1.0
        yield e.norm_sq, complex(num / np.linalg.det(c @ z + d) ** (l + m))


def truncated_poincare(
    sig: Signature, N: int, m: int, l: int, z: DomainPoint | np.ndarray, bound: int,
    elems: Sequence[LatticeElement] | None = None,
) -> TruncationReport:
    """Partial sum of ``det(Az + B)^l / det(Cz + D)^{l+m}`` over ``||gamma||^2 <= bound``.

    Shells of equal ``norm_sq`` are summed separately and then accumulated in
    increasing order.  ``elems`` may be a precomputed (larger) enumeration.
    """
    if sig.p != sig.q:
        raise ValueError("det-power Poincare series need p = q")
    if N < 3:
        raise ValueError("level N must be >= 3")
    zz = z.z if isinstance(z, DomainPoint) else np.asarray(z, dtype=np.complex128).reshape(sig.p, sig.q)
    if elems is None:
        elems = enumerate_gamma(sig, N, bound)
    elems = sorted((e for e in elems if e.norm_sq <= bound), key=_sort_key)
    total = 0j
    tail = 0.0
    used = 0
    for _, shell in groupby(_poincare_terms(elems, sig.p, m, l, zz), key=lambda t: t[0]):
        vals = [v for _, v in shell]
        total += math.fsum(v.real for v in vals) + 1j * math.fsum(v.imag for v in vals)
        tail = math.fsum(abs(v) for v in vals)
        used += len(vals)
    return TruncationReport(bound, used, total, tail)


def equivariance_mismatch(
    sig: Signature, N: int, m: int, l: int, z: np.ndarray, gamma0: LatticeElement, bound: int,
    elems: Sequence[LatticeElement] | None = None,
) -> float:
    """``|det(C0 z + D0)^{-m} P_B(gamma0.z) - P_B(z)|`` for the weight-``m`` slash.

    The full series is invariant; the truncations differ by the elements whose
    norm crosses the bound under right translation by ``gamma0``.
    """
    p = sig.p
    g = gamma0.matrix()
    a, b, c, d = g[:p, :p], g[:p, p:], g[p:, :p], g[p:, p:]
    zz = np.asarray(z, dtype=np.complex128).reshape(p, sig.q)
    gz = (a @ zz + b) @ np.linalg.inv(c @ zz + d)
    j = np.linalg.det(c @ zz + d) ** m
    lhs = truncated_poincare(sig, N, m, l, gz, bound, elems).partial_value / j
    rhs = truncated_poincare(sig, N, m, l, zz, bound, elems).partial_value
    return abs(lhs - rhs)
