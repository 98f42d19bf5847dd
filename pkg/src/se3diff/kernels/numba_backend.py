"""Compiled loop kernels. Same contracts as ``numpy_backend``.

Kept free of fancy numpy so numba compiles everything in nopython mode.
No fastmath: results must be stable enough to compare against the
vectorized backend at tight tolerances.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def pairwise_distances(coords):
    n = coords.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            dz = coords[i, 2] - coords[j, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def weighted_product(alpha, coords, dists, eps):
    n = coords.shape[0]
    out = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            if i == j or dists[i, j] < eps:
                continue
            w = alpha[i, j] / dists[i, j]
            for c in range(3):
                out[i, c] += w * (coords[i, c] - coords[j, c])
    return out


@njit(cache=True)
def sparse_scatter(score, coords, dists, adjacency, degrees, eps):
    n = coords.shape[0]
    out = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            if i == j or not adjacency[i, j] or dists[i, j] < eps:
                continue
            w = score[i, j] / dists[i, j]
            for c in range(3):
                out[i, c] += w * (coords[i, c] - coords[j, c])
        inv = 1.0 / (2.0 * degrees[i])
        for c in range(3):
            out[i, c] *= inv
    return out


@njit(cache=True)
def mds_objective(coords, target):
    n = coords.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            dz = coords[i, 2] - coords[j, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz) - target[i, j]
            total += r * r
    return total


@njit(cache=True)
def smoothed_objective(coords, target, eps):
    n = coords.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            dz = coords[i, 2] - coords[j, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz + eps) - target[i, j]
            total += r * r
    return total


@njit(cache=True)
def smoothed_gradient(coords, target, eps):
    n = coords.shape[0]
    out = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            dz = coords[i, 2] - coords[j, 2]
            s = np.sqrt(dx * dx + dy * dy + dz * dz + eps)
            w = 2.0 * (s - target[i, j]) / s
            out[i, 0] += w * dx
            out[i, 1] += w * dy
            out[i, 2] += w * dz
    return out


@njit(cache=True)
def distance_increments(diff, noise):
    b = noise.shape[0]
    a = np.sqrt(diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2])
    out = np.empty(b)
    for i in range(b):
        mx = noise[i, 0]
        my = noise[i, 1]
        mz = noise[i, 2]
        num = 2.0 * (mx * diff[0] + my * diff[1] + mz * diff[2]) \
            + mx * mx + my * my + mz * mz
        sx = mx + diff[0]
        sy = my + diff[1]
        sz = mz + diff[2]
        den = np.sqrt(sx * sx + sy * sy + sz * sz) + a
        out[i] = num / den
    return out


@njit(cache=True)
def jacobi_eigh(a):
    """Cyclic Jacobi rotations until the off-diagonal mass is gone.

    Returns eigenvalues in descending order and eigenvector columns in
    the same order. Quadratic convergence makes ~8 sweeps enough for
    any matrix this package produces; the 60-sweep cap is a safety net.
    """
    n = a.shape[0]
    m = a.copy()
    v = np.eye(n)
    frob = 0.0
    for i in range(n):
        for j in range(n):
            frob += m[i, j] * m[i, j]
    frob = np.sqrt(frob)
    tol = 1e-14 * frob if frob > 0.0 else 0.0

    for _ in range(60):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += m[i, j] * m[i, j]
        if np.sqrt(2.0 * off) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                if np.abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    sign = 1.0 if theta >= 0.0 else -1.0
                    t = sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # m <- J^T m J with the rotation in the (p, q) plane
                for k in range(n):
                    mkp = m[k, p]
                    mkq = m[k, q]
                    m[k, p] = c * mkp - s * mkq
                    m[k, q] = s * mkp + c * mkq
                for k in range(n):
                    mpk = m[p, k]
                    mqk = m[q, k]
                    m[p, k] = c * mpk - s * mqk
                    m[q, k] = s * mpk + c * mqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq

    w = np.empty(n)
    for i in range(n):
        w[i] = m[i, i]
    order = np.argsort(-w)
    w_sorted = np.empty(n)
    v_sorted = np.empty((n, n))
    for idx in range(n):
        w_sorted[idx] = w[order[idx]]
        for k in range(n):
            v_sorted[k, idx] = v[k, order[idx]]
    return w_sorted, v_sorted
