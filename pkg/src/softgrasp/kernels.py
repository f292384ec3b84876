"""Numeric hot loops with two interchangeable backends.

Every kernel exists twice: a compiled version (numba, ``*_numba``) and a
vectorized numpy version (``*_numpy``).  At import time one of them is bound
to the public name.  Setting the environment variable ``SOFTGRASP_PURE_NUMPY``
to ``1`` (or ``true``/``yes``) before import forces the numpy path, which is
also used automatically when numba is not installed.  Both variants stay
importable so benchmarks can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

PURE_NUMPY_ENV = "SOFTGRASP_PURE_NUMPY"

# Facet normals closer to perpendicular than this to a ray direction are
# treated as not bounding the ray.
_RAY_DOT_MIN = 1e-12


def _numba_disabled_by_env() -> bool:
    return os.environ.get(PURE_NUMPY_ENV, "").strip().lower() in ("1", "true", "yes")


try:
    if _numba_disabled_by_env():
        raise ImportError("numba disabled via environment")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# Ray exit distances through a facet list.


def ray_exit_batch_numpy(normals: np.ndarray, offsets: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Distance along each unit ray from the origin to the last facet crossed.

    ``normals`` is (nf, d) with outward unit normals, ``offsets`` (nf,) the
    facet offsets (facet i is ``normals[i] . x <= offsets[i]``), ``dirs``
    (nd, d).  Rays not bounded by any facet get ``inf``.  Negative results
    from roundoff are clamped to zero.  The origin is assumed feasible.
    """
    dots = dirs @ normals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        steps = np.where(dots > _RAY_DOT_MIN, offsets[None, :] / dots, np.inf)
    return np.maximum(steps.min(axis=1), 0.0)


if HAS_NUMBA:

    @njit(cache=True)
    def _ray_exit_nb(normals, offsets, dirs, out):  # pragma: no cover - compiled
        nf = normals.shape[0]
        d = normals.shape[1]
        for k in range(dirs.shape[0]):
            best = np.inf
            for i in range(nf):
                dot = 0.0
                for j in range(d):
                    dot += normals[i, j] * dirs[k, j]
                if dot > _RAY_DOT_MIN:
                    s = offsets[i] / dot
                    if s < best:
                        best = s
            if best < 0.0:
                best = 0.0
            out[k] = best

    def ray_exit_batch_numba(normals: np.ndarray, offsets: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        out = np.empty(dirs.shape[0])
        _ray_exit_nb(
            np.ascontiguousarray(normals, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.float64),
            np.ascontiguousarray(dirs, dtype=np.float64),
            out,
        )
        return out

else:
    ray_exit_batch_numba = None


# ---------------------------------------------------------------------------
# Sum of |det| over a batch of square matrices (simplex fan volumes).


def det_abs_sum_numpy(mats: np.ndarray) -> float:
    """Sum of absolute determinants over a (m, d, d) stack."""
    if mats.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.det(mats)).sum())


if HAS_NUMBA:

    @njit(cache=True)
    def _det_abs_sum_nb(mats):  # pragma: no cover - compiled
        m = mats.shape[0]
        d = mats.shape[1]
        total = 0.0
        for t in range(m):
            a = mats[t].copy()
            det = 1.0
            for col in range(d):
                piv = col
                big = abs(a[col, col])
                for r in range(col + 1, d):
                    if abs(a[r, col]) > big:
                        big = abs(a[r, col])
                        piv = r
                if big == 0.0:
                    det = 0.0
                    break
                if piv != col:
                    for j in range(d):
                        tmp = a[col, j]
                        a[col, j] = a[piv, j]
                        a[piv, j] = tmp
                    det = -det
                det *= a[col, col]
                inv = 1.0 / a[col, col]
                for r in range(col + 1, d):
                    f = a[r, col] * inv
                    for j in range(col, d):
                        a[r, j] -= f * a[col, j]
            total += abs(det)
        return total

    def det_abs_sum_numba(mats: np.ndarray) -> float:
        if mats.shape[0] == 0:
            return 0.0
        return float(_det_abs_sum_nb(np.ascontiguousarray(mats, dtype=np.float64)))

else:
    det_abs_sum_numba = None


# ---------------------------------------------------------------------------
# Linear tetrahedron stiffness matrices.


def _elastic_matrix(lam: float, mu: float) -> np.ndarray:
    """6x6 isotropic elasticity matrix in Voigt order (xx, yy, zz, xy, yz, zx)."""
    d = np.zeros((6, 6))
    d[:3, :3] = lam
    d[0, 0] = d[1, 1] = d[2, 2] = lam + 2.0 * mu
    d[3, 3] = d[4, 4] = d[5, 5] = mu
    return d


def tet_stiffness_batch_numpy(coords: np.ndarray, lam: float, mu: float):
    """Element stiffness for a batch of linear tets.

    ``coords`` is (m, 4, 3).  Returns ``(ke, vols)`` with ``ke`` of shape
    (m, 12, 12) and signed volumes (m,).  Elements with non-positive volume
    get a zero matrix; the caller decides whether that is an error.
    """
    m = coords.shape[0]
    edges = coords[:, 1:, :] - coords[:, :1, :]
    dets = np.linalg.det(edges)
    vols = dets / 6.0
    ok = vols > 0.0
    grads = np.zeros((m, 4, 3))
    if np.any(ok):
        inv = np.linalg.inv(edges[ok])
        # gradient of shape function i (i=1..3) is column i-1 of inv(edges)
        grads_ok = np.transpose(inv, (0, 2, 1))
        grads[ok, 1:, :] = grads_ok
        grads[ok, 0, :] = -grads_ok.sum(axis=1)
    b = np.zeros((m, 6, 12))
    for a in range(4):
        gx = grads[:, a, 0]
        gy = grads[:, a, 1]
        gz = grads[:, a, 2]
        c = 3 * a
        b[:, 0, c] = gx
        b[:, 1, c + 1] = gy
        b[:, 2, c + 2] = gz
        b[:, 3, c] = gy
        b[:, 3, c + 1] = gx
        b[:, 4, c + 1] = gz
        b[:, 4, c + 2] = gy
        b[:, 5, c] = gz
        b[:, 5, c + 2] = gx
    dmat = _elastic_matrix(lam, mu)
    ke = np.einsum("mja,jk,mkb->mab", b, dmat, b, optimize=True)
    ke *= np.where(ok, vols, 0.0)[:, None, None]
    return ke, vols


if HAS_NUMBA:

    @njit(cache=True)
    def _tet_stiffness_nb(coords, dmat, ke, vols):  # pragma: no cover - compiled
        m = coords.shape[0]
        for t in range(m):
            e = np.empty((3, 3))
            for i in range(3):
                for j in range(3):
                    e[i, j] = coords[t, i + 1, j] - coords[t, 0, j]
            det = (
                e[0, 0] * (e[1, 1] * e[2, 2] - e[1, 2] * e[2, 1])
                - e[0, 1] * (e[1, 0] * e[2, 2] - e[1, 2] * e[2, 0])
                + e[0, 2] * (e[1, 0] * e[2, 1] - e[1, 1] * e[2, 0])
            )
            vol = det / 6.0
            vols[t] = vol
            if vol <= 0.0:
                for i in range(12):
                    for j in range(12):
                        ke[t, i, j] = 0.0
                continue
            inv = np.empty((3, 3))
            inv[0, 0] = (e[1, 1] * e[2, 2] - e[1, 2] * e[2, 1]) / det
            inv[0, 1] = (e[0, 2] * e[2, 1] - e[0, 1] * e[2, 2]) / det
            inv[0, 2] = (e[0, 1] * e[1, 2] - e[0, 2] * e[1, 1]) / det
            inv[1, 0] = (e[1, 2] * e[2, 0] - e[1, 0] * e[2, 2]) / det
            inv[1, 1] = (e[0, 0] * e[2, 2] - e[0, 2] * e[2, 0]) / det
            inv[1, 2] = (e[0, 2] * e[1, 0] - e[0, 0] * e[1, 2]) / det
            inv[2, 0] = (e[1, 0] * e[2, 1] - e[1, 1] * e[2, 0]) / det
            inv[2, 1] = (e[0, 1] * e[2, 0] - e[0, 0] * e[2, 1]) / det
            inv[2, 2] = (e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]) / det
            grads = np.empty((4, 3))
            for i in range(3):
                for j in range(3):
                    grads[i + 1, j] = inv[j, i]
            for j in range(3):
                grads[0, j] = -(grads[1, j] + grads[2, j] + grads[3, j])
            b = np.zeros((6, 12))
            for a in range(4):
                gx = grads[a, 0]
                gy = grads[a, 1]
                gz = grads[a, 2]
                c = 3 * a
                b[0, c] = gx
                b[1, c + 1] = gy
                b[2, c + 2] = gz
                b[3, c] = gy
                b[3, c + 1] = gx
                b[4, c + 1] = gz
                b[4, c + 2] = gy
                b[5, c] = gz
                b[5, c + 2] = gx
            kt = vol * (b.T @ (dmat @ b))
            for i in range(12):
                for j in range(12):
                    ke[t, i, j] = kt[i, j]

    def tet_stiffness_batch_numba(coords: np.ndarray, lam: float, mu: float):
        m = coords.shape[0]
        ke = np.empty((m, 12, 12))
        vols = np.empty(m)
        _tet_stiffness_nb(
            np.ascontiguousarray(coords, dtype=np.float64),
            _elastic_matrix(lam, mu),
            ke,
            vols,
        )
        return ke, vols

else:
    tet_stiffness_batch_numba = None


# ---------------------------------------------------------------------------
# Backend selection.

if HAS_NUMBA:
    ray_exit_batch = ray_exit_batch_numba
    det_abs_sum = det_abs_sum_numba
    tet_stiffness_batch = tet_stiffness_batch_numba
else:
    ray_exit_batch = ray_exit_batch_numpy
    det_abs_sum = det_abs_sum_numpy
    tet_stiffness_batch = tet_stiffness_batch_numpy


def backend_name() -> str:
    return "numba" if HAS_NUMBA else "numpy"
