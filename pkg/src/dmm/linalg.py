"""Small dense linear-algebra kernels: cyclic Jacobi eigensolver, sign and order conventions."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["jacobi_eigh", "fix_signs", "sort_eigenpairs"]

# relative magnitude tolerance for "largest coordinate" ties
_SIGN_TIE = 1e-12


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all ``(p, q)`` pairs in row order until the off-diagonal
    Frobenius norm drops below ``tol * ||a||_F``.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues, unsorted.
    v : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        return np.diag(a).copy(), v
    threshold = tol * scale
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        # measured directly: ||a||^2 - ||diag||^2 cancels catastrophically
        off = math.sqrt(float(np.sum(a[off_mask] ** 2)))
        if off < threshold:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
                rotated = True
        if not rotated:
            break
    return np.diag(a).copy(), v


def fix_signs(vectors):
    """Flip columns so each one's largest-magnitude entry is positive.

    Near-ties in magnitude (relative ``1e-12``) resolve to the lowest index.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        return fix_signs(vectors[:, None])[:, 0]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        mag = np.abs(col)
        top = mag.max() if mag.size else 0.0
        if top == 0.0:
            continue
        i = int(np.argmax(mag >= top * (1.0 - _SIGN_TIE)))
        if col[i] < 0:
            vectors[:, j] = -col
    return vectors


def sort_eigenpairs(values, vectors, tie_tol: float = 1e-12):
    """Order eigenpairs by descending value; near-equal values by ascending
    lexicographic order of their (sign-fixed) eigenvectors."""
    values = np.asarray(values, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    order = list(np.argsort(-values, kind="stable"))
    scale = max(float(np.max(np.abs(values))) if values.size else 0.0, 1e-300)
    out: list[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values[order[i]] - values[order[j]] <= tie_tol * scale:
            j += 1
        group = sorted(order[i:j], key=lambda c: tuple(np.round(vectors[:, c], 12)))
        out.extend(group)
        i = j
    idx = np.asarray(out, dtype=np.int64)
    return values[idx], vectors[:, idx]
