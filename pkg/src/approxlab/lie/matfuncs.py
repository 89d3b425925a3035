"""Batched matrix exponential and principal logarithm for small dense matrices.

``expm`` uses scaling and squaring with the degree-13 Padé approximant.
``logm`` uses inverse scaling and squaring: Denman-Beavers square roots until
the argument is close to the identity, then Gauss-Legendre quadrature of
``log(I + X) = int_0^1 X (I + tX)^-1 dt`` (the diagonal Padé approximant).
Both accept a single matrix ``(n, n)`` or a stack ``(..., n, n)``.
"""

from __future__ import annotations

import numpy as np

_B13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_GL_NODES = (_GL_NODES + 1.0) / 2.0
_GL_WEIGHTS = _GL_WEIGHTS / 2.0


class LogDomainError(ValueError):
    """A matrix has an eigenvalue on the closed negative real axis."""


def _norm1(A: np.ndarray) -> np.ndarray:
    return np.abs(A).sum(axis=-2).max(axis=-1)


def _stack(A):
    A = np.asarray(A, dtype=float)
    single = A.ndim == 2
    if single:
        A = A[None]
    return A.reshape(-1, *A.shape[-2:]), single, A.shape[:-2]


def expm(A) -> np.ndarray:
    A, single, lead = _stack(A)
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n), A.shape)
    nrm = _norm1(A)
    s = np.where(nrm > _THETA13, np.ceil(np.log2(np.maximum(nrm, 1e-300) / _THETA13)), 0).astype(int)
    A = A / (2.0 ** s)[:, None, None]
    b = _B13
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    R = np.linalg.solve(V - U, V + U)
    for step in range(int(s.max(initial=0))):
        sel = s > step
        R[sel] = R[sel] @ R[sel]
    R = R.reshape(*lead, n, n)
    return R[0] if single else R


def _check_domain(A: np.ndarray) -> np.ndarray:
    """Boolean mask of matrices with an eigenvalue on the closed negative real axis."""
    ev = np.linalg.eigvals(A)
    scale = np.maximum(np.abs(ev), 1e-300)
    on_axis = (np.abs(ev.imag) <= 1e-12 * scale) & (ev.real <= 0)
    return on_axis.any(axis=-1)


def sqrtm_db(A: np.ndarray, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Principal square root by the Denman-Beavers iteration (stacked input)."""
    Y = A.copy()
    Z = np.broadcast_to(np.eye(A.shape[-1]), A.shape).copy()
    for _ in range(max_iter):
        Yi = np.linalg.inv(Y)
        Zi = np.linalg.inv(Z)
        Y_new = 0.5 * (Y + Zi)
        Z = 0.5 * (Z + Yi)
        delta = _norm1(Y_new - Y) / np.maximum(_norm1(Y_new), 1e-300)
        Y = Y_new
        if float(delta.max(initial=0.0)) <= tol:
            break
    return Y


def logm(A, *, check: bool = True) -> np.ndarray:
    """Principal matrix logarithm; raises :class:`LogDomainError` outside its domain."""
    A, single, lead = _stack(A)
    n = A.shape[-1]
    if check:
        bad = _check_domain(A)
        if bad.any():
            raise LogDomainError(f"{int(bad.sum())} matrix(es) have eigenvalues on the closed negative real axis")
    eye = np.eye(n)
    T = A.copy()
    k = np.zeros(A.shape[0], dtype=int)
    for _ in range(64):
        far = _norm1(T - eye) > 0.25
        if not far.any():
            break
        T[far] = sqrtm_db(T[far])
        k[far] += 1
    X = T - eye
    L = np.zeros_like(X)
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        L += w * np.linalg.solve(eye + t * X, X)
    L *= (2.0**k)[:, None, None]
    L = L.reshape(*lead, n, n)
    return L[0] if single else L


def log_domain_ok(A) -> np.ndarray:
    A, single, lead = _stack(A)
    ok = ~_check_domain(A)
    return ok[0] if single else ok.reshape(lead)
