"""Batched numeric kernels: 4x4 Lyapunov solve and PPT symplectic spectrum.

Two interchangeable implementations exist for every kernel:

* ``numba`` -- per-point loops compiled with ``@njit`` (default when numba
  imports),
* ``numpy`` -- stacked LAPACK calls.

The backend is picked from the ``MECHENT_BACKEND`` environment variable
(``numba`` or ``numpy``) at import time and can be switched later with
:func:`set_backend`.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

# upper-triangle enumeration of a symmetric 4x4
_PAIRS = [(i, j) for i in range(4) for j in range(i, 4)]
_INDEX = np.zeros((4, 4), dtype=np.int64)
for _n, (_i, _j) in enumerate(_PAIRS):
    _INDEX[_i, _j] = _INDEX[_j, _i] = _n
_PAIR_ARR = np.array(_PAIRS, dtype=np.int64)

# vec(B R + R B^T) = (I (x) B + B (x) I) vec(R), restricted to symmetric R
_DUP = np.zeros((16, 10))
_ELIM = np.zeros((10, 16))
for _i in range(4):
    for _j in range(4):
        _DUP[_i * 4 + _j, _INDEX[_i, _j]] = 1.0
for _n, (_i, _j) in enumerate(_PAIRS):
    _ELIM[_n, _i * 4 + _j] = 1.0


def _lyapunov_numpy(drift, diffusion):
    eye = np.eye(4)
    kron = np.einsum("ab,nij->naibj", eye, drift).reshape(-1, 16, 16)
    kron += np.einsum("nab,ij->naibj", drift, eye).reshape(-1, 16, 16)
    system = _ELIM @ kron @ _DUP
    rhs = -diffusion.reshape(-1, 16) @ _ELIM.T
    x = np.linalg.solve(system, rhs[..., None])[..., 0]
    return (x @ _DUP.T).reshape(-1, 4, 4)


def _invariants_numpy(cov):
    det_a = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] * cov[:, 1, 0]
    det_b = cov[:, 2, 2] * cov[:, 3, 3] - cov[:, 2, 3] * cov[:, 3, 2]
    det_c = cov[:, 0, 2] * cov[:, 1, 3] - cov[:, 0, 3] * cov[:, 1, 2]
    det_r = np.linalg.det(cov)
    return det_a, det_b, det_c, det_r


def _symplectic_numpy(cov, sign):
    det_a, det_b, det_c, det_r = _invariants_numpy(cov)
    zeta = det_a + det_b + sign * 2.0 * det_c
    rad = zeta * zeta - 4.0 * det_r
    inner = zeta - np.sqrt(np.maximum(rad, 0.0))
    return np.sqrt(np.maximum(inner, 0.0) / 2.0), rad, zeta, det_r


if HAS_NUMBA:

    @njit(cache=True)
    def _solve_inplace(a, b):
        # Gaussian elimination with partial pivoting; returns False if singular.
        n = b.shape[0]
        for col in range(n):
            piv = col
            best = abs(a[col, col])
            for row in range(col + 1, n):
                v = abs(a[row, col])
                if v > best:
                    best = v
                    piv = row
            if best == 0.0:
                return False
            if piv != col:
                for k in range(n):
                    tmp = a[col, k]
                    a[col, k] = a[piv, k]
                    a[piv, k] = tmp
                tmp = b[col]
                b[col] = b[piv]
                b[piv] = tmp
            inv = 1.0 / a[col, col]
            for row in range(col + 1, n):
                f = a[row, col] * inv
                if f != 0.0:
                    for k in range(col, n):
                        a[row, k] -= f * a[col, k]
                    b[row] -= f * b[col]
        for row in range(n - 1, -1, -1):
            acc = b[row]
            for k in range(row + 1, n):
                acc -= a[row, k] * b[k]
            b[row] = acc / a[row, row]
        return True

    @njit(cache=True)
    def _lyapunov_numba(drift, diffusion, index, pairs):
        npts = drift.shape[0]
        out = np.empty((npts, 4, 4))
        a = np.empty((10, 10))
        b = np.empty(10)
        for p in range(npts):
            bm = drift[p]
            a[:, :] = 0.0
            for row in range(10):
                i = pairs[row, 0]
                j = pairs[row, 1]
                for k in range(4):
                    a[row, index[k, j]] += bm[i, k]
                    a[row, index[i, k]] += bm[j, k]
                b[row] = -diffusion[p, i, j]
            if not _solve_inplace(a, b):
                out[p, :, :] = np.nan
                continue
            for i in range(4):
                for j in range(4):
                    out[p, i, j] = b[index[i, j]]
        return out

    @njit(cache=True)
    def _det4(m):
        # LU with partial pivoting on a copy
        a = m.copy()
        det = 1.0
        for col in range(4):
            piv = col
            best = abs(a[col, col])
            for row in range(col + 1, 4):
                if abs(a[row, col]) > best:
                    best = abs(a[row, col])
                    piv = row
            if best == 0.0:
                return 0.0
            if piv != col:
                for k in range(4):
                    tmp = a[col, k]
                    a[col, k] = a[piv, k]
                    a[piv, k] = tmp
                det = -det
            det *= a[col, col]
            for row in range(col + 1, 4):
                f = a[row, col] / a[col, col]
                for k in range(col, 4):
                    a[row, k] -= f * a[col, k]
        return det

    @njit(cache=True)
    def _symplectic_numba(cov, sign):
        npts = cov.shape[0]
        vs = np.empty(npts)
        rad = np.empty(npts)
        zeta = np.empty(npts)
        det_r = np.empty(npts)
        for p in range(npts):
            c = cov[p]
            det_a = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
            det_b = c[2, 2] * c[3, 3] - c[2, 3] * c[3, 2]
            det_c = c[0, 2] * c[1, 3] - c[0, 3] * c[1, 2]
            d = _det4(c)
            z = det_a + det_b + sign * 2.0 * det_c
            r = z * z - 4.0 * d
            inner = z - np.sqrt(max(r, 0.0))
            vs[p] = np.sqrt(max(inner, 0.0) / 2.0)
            rad[p] = r
            zeta[p] = z
            det_r[p] = d
        return vs, rad, zeta, det_r


_backend = None


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for all batched kernels."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    _backend = name


def get_backend():
    return _backend


set_backend(os.environ.get("MECHENT_BACKEND", "numba" if HAS_NUMBA else "numpy").strip().lower())


def lyapunov_batch(drift, diffusion):
    """Solve ``B R + R B^T = -F`` for stacks of 4x4 matrices.

    Singular systems give NaN-filled solutions (numba) or raise
    ``LinAlgError`` (numpy); callers gate on stability first.
    """
    drift = np.ascontiguousarray(drift, dtype=float).reshape(-1, 4, 4)
    diffusion = np.ascontiguousarray(diffusion, dtype=float).reshape(-1, 4, 4)
    if _backend == "numba":
        return _lyapunov_numba(drift, diffusion, _INDEX, _PAIR_ARR)
    return _lyapunov_numpy(drift, diffusion)


def symplectic_batch(cov, transpose=True):
    """Smallest symplectic eigenvalue for a stack of 4x4 covariances.

    With ``transpose=True`` this is the partially transposed spectrum
    (``zeta = det A + det B - 2 det C``); otherwise the physical one.
    Returns ``(v_min, radicand, zeta, det_r)``.
    """
    cov = np.ascontiguousarray(cov, dtype=float).reshape(-1, 4, 4)
    sign = -1.0 if transpose else 1.0
    if _backend == "numba":
        return _symplectic_numba(cov, sign)
    return _symplectic_numpy(cov, sign)


def lyapunov_residual_batch(drift, diffusion, cov):
    """``||B R + R B^T + F||_inf / ||F||_inf`` per point."""
    lhs = drift @ cov + cov @ np.swapaxes(drift, -1, -2) + diffusion
    num = np.abs(lhs).sum(axis=-1).max(axis=-1)
    den = np.abs(diffusion).sum(axis=-1).max(axis=-1)
    return num / np.where(den == 0.0, 1.0, den)
