"""SU(p,q) group algebra on the matrix ball ``Omega = {z : I_q - z*z > 0}``.

Block convention throughout: ``g = [[A, B], [C, D]]`` with ``A`` of size
``p x p`` and ``D`` of size ``q x q``.  One-dimensional weights are the
characters ``chi_m(diag(A, D)) = det(D)**m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cmatrix as cm

MEMBERSHIP_TOL = 1e-10


class NotInGroup(ValueError):
    pass


class NotInDomain(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise TypeError("p and q must be integers")
        if not self.p >= self.q >= 1:
            raise ValueError(f"need p >= q >= 1, got p={self.p}, q={self.q}")

    @property
    def n(self) -> int:
        return self.p + self.q

    def ipq(self) -> np.ndarray:
        return np.diag([1.0] * self.p + [-1.0] * self.q).astype(np.complex128)

    def blocks(self, mat: np.ndarray):
        p = self.p
        return mat[:p, :p], mat[:p, p:], mat[p:, :p], mat[p:, p:]


@dataclass(frozen=True, eq=False)
class GroupElement:
    sig: Signature
    mat: np.ndarray

    @property
    def blocks(self):
        return self.sig.blocks(self.mat)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.sig, self.mat @ other.mat)

    def inv(self) -> "GroupElement":
        # g^{-1} = I_{p,q} g* I_{p,q}
        ipq = self.sig.ipq()
        return GroupElement(self.sig, ipq @ self.mat.conj().T @ ipq)


@dataclass(frozen=True, eq=False)
class DomainPoint:
    sig: Signature
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class KElement:
    A: np.ndarray
    D: np.ndarray

    def matrix(self) -> np.ndarray:
        p, q = self.A.shape[0], self.D.shape[0]
        out = np.zeros((p + q, p + q), dtype=np.complex128)
        out[:p, :p] = self.A
        out[p:, p:] = self.D
        return out

    def as_group(self, sig: Signature) -> GroupElement:
        return GroupElement(sig, self.matrix())


@dataclass(frozen=True, eq=False)
class Factorization:
    """``g = [[I, b_plus], [0, I]] @ diag(k_zero) @ [[I, 0], [c_minus, I]]``."""

    b_plus: np.ndarray
    k_zero: tuple[np.ndarray, np.ndarray]
    c_minus: np.ndarray

    def reassemble(self) -> np.ndarray:
        a0, d0 = self.k_zero
        p, q = a0.shape[0], d0.shape[0]
        n = p + q
        up = np.eye(n, dtype=np.complex128)
        up[:p, p:] = self.b_plus
        mid = np.zeros((n, n), dtype=np.complex128)
        mid[:p, :p], mid[p:, p:] = a0, d0
        lo = np.eye(n, dtype=np.complex128)
        lo[p:, :p] = self.c_minus
        return up @ mid @ lo


def membership_residual(sig: Signature, mat: np.ndarray) -> float:
    ipq = sig.ipq()
    rel = np.max(np.abs(mat.conj().T @ ipq @ mat - ipq))
    return max(float(rel), abs(cm.det(mat) - 1.0))


def make_group_element(sig: Signature, mat, tol: float = MEMBERSHIP_TOL) -> GroupElement:
    """Certify that ``mat`` lies in SU(p,q) and wrap it."""
    arr = cm.as_cmatrix(mat)
    if arr.shape != (sig.n, sig.n):
        raise cm.DimensionError(f"expected {sig.n}x{sig.n}, got {arr.shape}")
    res = membership_residual(sig, arr)
    if res >= tol:
        raise NotInGroup(f"membership residual {res:.3e} exceeds {tol:.1e}")
    return GroupElement(sig, arr)


def make_domain_point(sig: Signature, z, tol: float = 1e-12) -> DomainPoint:
    arr = cm.as_cmatrix(z)
    if arr.shape != (sig.p, sig.q):
        raise cm.DimensionError(f"expected {sig.p}x{sig.q}, got {arr.shape}")
    gram = np.eye(sig.q) - arr.conj().T @ arr
    if not cm.is_positive_definite(0.5 * (gram + gram.conj().T), tol=tol):
        raise NotInDomain("I_q - z* z is not positive definite")
    return DomainPoint(sig, arr)


def factor(sig: Signature, mat) -> Factorization:
    arr = cm.as_cmatrix(mat)
    a, b, c, d = sig.blocks(arr)
    d_inv = cm.inverse(d)
    bd = b @ d_inv
    return Factorization(b_plus=bd, k_zero=(a - bd @ c, d.copy()), c_minus=d_inv @ c)


def act(g: GroupElement, z: DomainPoint, check: bool = True) -> DomainPoint:
    """Linear fractional action ``(Az + B)(Cz + D)^{-1}``."""
    if g.sig != z.sig:
        raise ValueError("signature mismatch")
    a, b, c, d = g.blocks
    w = (a @ z.z + b) @ cm.inverse(c @ z.z + d)
    return make_domain_point(g.sig, w) if check else DomainPoint(g.sig, w)


def unipotent(z: DomainPoint) -> np.ndarray:
    """``exp(z) = [[I_p, z], [0, I_q]]``."""
    p, q = z.sig.p, z.sig.q
    out = np.eye(p + q, dtype=np.complex128)
    out[:p, p:] = z.z
    return out


def automorphy(g: GroupElement, z: DomainPoint) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal part ``(A - (g.z) C, C z + D)`` of ``g exp(z)``."""
    a, b, c, d = g.blocks
    gz = act(g, z, check=False).z
    return a - gz @ c, c @ z.z + d


def automorphy_via_factor(g: GroupElement, z: DomainPoint) -> tuple[np.ndarray, np.ndarray]:
    return factor(g.sig, g.mat @ unipotent(z)).k_zero


def j_scalar(m: int, g: GroupElement, z: DomainPoint) -> complex:
    a, b, c, d = g.blocks
    return cm.det(c @ z.z + d) ** m


def slash(f: Callable[[np.ndarray], complex], m: int, g: GroupElement) -> Callable[[DomainPoint], complex]:
    """Weight-``m`` slash ``(f|g)(z) = det(Cz + D)^{-m} f(g.z)``.

    ``f`` is any callable on ``p x q`` arrays (e.g. ``PolySpec.__call__``).
    """

    def sliced(z: DomainPoint) -> complex:
        return f(act(g, z, check=False).z) / j_scalar(m, g, z)

    return sliced


def lift_F(f: Callable[[np.ndarray], complex], m: int, g: GroupElement, tol: float = 1e-10) -> complex:
    """Evaluate the lift ``F_f(g) = (f|g)(0)`` by two routes and cross-check."""
    zero = DomainPoint(g.sig, np.zeros((g.sig.p, g.sig.q), dtype=np.complex128))
    via_slash = slash(f, m, g)(zero)
    fac = factor(g.sig, g.mat)
    via_blocks = f(fac.b_plus) / cm.det(fac.k_zero[1]) ** m
    scale = max(1.0, abs(via_blocks))
    if abs(via_slash - via_blocks) > tol * scale:
        raise ArithmeticError(f"lift routes disagree: {via_slash} vs {via_blocks}")
    return via_blocks


def exp_Ht(sig: Signature, t) -> GroupElement:
    """``exp`` of the Cartan element with ``t`` on the anti-diagonal ``p x q`` block."""
    t = np.asarray(t, dtype=float)
    if t.shape != (sig.q,) or not np.all(np.isfinite(t)):
        raise ValueError(f"t must be a finite vector of length {sig.q}")
    p, q = sig.p, sig.q
    mat = np.eye(sig.n, dtype=np.complex128)
    for r in range(q):
        ch, sh = np.cosh(t[r]), np.sinh(t[r])
        mat[r, r] = ch
        mat[p + r, p + r] = ch
        mat[r, p + r] = sh
        mat[p + r, r] = sh
    return GroupElement(sig, mat)


def _special_k(u: np.ndarray, v: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Rephase ``(u, v)`` into S(U(p) x U(q)) without changing ``u[:, :q] s v*``."""
    u, v = u.copy(), v.copy()
    phase = np.linalg.det(u) * np.linalg.det(v)
    if u.shape[0] > q:
        u[:, -1] /= phase
    else:
        half = np.exp(-0.5j * np.angle(phase))
        u[:, 0] *= half
        v[:, 0] *= half
    return u, v


def kak_decompose(g: GroupElement) -> tuple[KElement, np.ndarray, KElement]:
    """Cartan decomposition ``g = k1 exp(H_t) k2`` with ``t_1 >= ... >= t_q >= 0``.

    Polar part from the SVD of ``g``; the Hermitian generator is then rotated
    into the Cartan subspace by the SVD of its off-diagonal block.
    """
    sig = g.sig
    p, q = sig.p, sig.q
    u, s, v = cm.svd(g.mat)
    gen = (v * np.log(s)) @ v.conj().T
    y = gen[:p, p:]
    uy, t, vy = cm.svd(y)
    uy, vy = _special_k(uy, vy, q)
    k_rot = KElement(uy, vy).matrix()
    t = np.asarray(t[:q], dtype=float)
    k1 = g.mat @ k_rot @ exp_Ht(sig, -t).mat
    k1 = KElement(k1[:p, :p], k1[p:, p:])
    k2 = KElement(uy.conj().T, vy.conj().T)
    return k1, t, k2


def random_k(sig: Signature, rng: np.random.Generator) -> KElement:
    from .integrand import haar_sample_K
    return haar_sample_K(sig, rng)


def random_element(sig: Signature, rng: np.random.Generator, tmax: float = 2.0) -> GroupElement:
    """``k exp(H_t) k'`` with Haar ``k, k'`` and ``t`` drawn in the closed chamber."""
    t = np.sort(rng.uniform(0.0, tmax, size=sig.q))[::-1]
    k1, k2 = random_k(sig, rng), random_k(sig, rng)
    return GroupElement(sig, k1.matrix() @ exp_Ht(sig, t).mat @ k2.matrix())


def random_point(sig: Signature, rng: np.random.Generator, tmax: float = 1.5) -> DomainPoint:
    g = random_element(sig, rng, tmax=tmax)
    zero = DomainPoint(sig, np.zeros((sig.p, sig.q), dtype=np.complex128))
    return act(g, zero)
