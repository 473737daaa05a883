"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  LU-based
routines (``det``, ``inverse``) are written out here so that the singularity
threshold is under our control; SVD and QR delegate to LAPACK through numpy.
"""

from __future__ import annotations

import numpy as np

#: pivot magnitude below ``PIVOT_RTOL * row_scale`` marks a singular matrix
PIVOT_RTOL = 1e-14


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class Singular(ArithmeticError):
    """A matrix (or block) is numerically singular."""


class NotHermitian(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


def as_cmatrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _square(a) -> np.ndarray:
    arr = as_cmatrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def mul(a, b) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_cmatrix(a).conj().T


def lu_factor(a) -> tuple[np.ndarray, np.ndarray, int]:
    """LU factorization with partial pivoting.

    Returns ``(lu, perm, sign)`` where ``lu`` packs the unit-lower and upper
    factors, ``perm`` is the row permutation and ``sign`` its parity.
    Raises :class:`Singular` when a pivot falls below the relative threshold.
    """
    lu = _square(a).copy()
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1
    scale = np.max(np.abs(lu), axis=1)
    if np.any(scale == 0):
        raise Singular("matrix has a zero row")
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[piv, k]) < PIVOT_RTOL * scale[perm[piv]]:
            raise Singular(f"pivot {k} below threshold")
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
            sign = -sign
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign


def det(a) -> complex:
    arr = _square(a)
    try:
        lu, _, sign = lu_factor(arr)
    except Singular:
        return 0j
    return complex(sign * np.prod(np.diag(lu)))


def inverse(a) -> np.ndarray:
    lu, perm, _ = lu_factor(a)
    n = lu.shape[0]
    rhs = np.eye(n, dtype=np.complex128)[perm]
    # forward substitution with the unit lower factor
    for k in range(n):
        rhs[k + 1:] -= np.outer(lu[k + 1:, k], rhs[k])
    # back substitution with the upper factor
    for k in range(n - 1, -1, -1):
        rhs[k] /= lu[k, k]
        rhs[:k] -= np.outer(lu[:k, k], rhs[k])
    return rhs


def frob_norm_sq(a) -> float:
    """Squared Frobenius norm ``tr(a* a)``."""
    arr = as_cmatrix(a)
    return float(np.sum(arr.real ** 2 + arr.imag ** 2))


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(U, s, V)`` with ``a = U @ diag(s) @ V*`` and ``s`` descending."""
    arr = as_cmatrix(a)
    try:
        u, s, vh = np.linalg.svd(arr)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return u, s, vh.conj().T


def is_positive_definite(a, tol: float = 1e-12) -> bool:
    """Cholesky test: every pivot must exceed ``tol``."""
    arr = _square(a)
    if np.max(np.abs(arr - arr.conj().T), initial=0.0) > tol:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    work = 0.5 * (arr + arr.conj().T)
    n = work.shape[0]
    for k in range(n):
        pivot = work[k, k].real
        if not pivot > tol:
            return False
        col = work[k + 1:, k] / np.sqrt(pivot)
        work[k + 1:, k + 1:] -= np.outer(col, col.conj())
    return True


def qr_unitary(a) -> np.ndarray:
    """Unitary factor of ``a = QR`` normalized so that ``diag(R) > 0``."""
    arr = _square(a)
    q, r = np.linalg.qr(arr)
    d = np.diag(r)
    if np.min(np.abs(d)) < PIVOT_RTOL * max(np.max(np.abs(arr)), 1.0):
        raise Singular("matrix is rank deficient")
    return q * (d / np.abs(d))
