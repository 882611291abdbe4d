"""Loop kernels compiled with numba."""

import math

import numpy as np
from numba import njit

from ._codes import ABOVE, BELOW, INSIDE, LEFT_OF, NEAR, ON, OVERLAP_OR_NEAR, RIGHT_OF, SQRT2, UNDER


@njit(cache=True)
def _pair(code, ax0, ay0, ax1, ay1, bx0, by0, bx1, by1, near_frac, min_overlap, inside_frac, contact_tol):
    wa = ax1 - ax0
    ha = ay1 - ay0
    wb = bx1 - bx0
    hb = by1 - by0
    cxa = (ax0 + ax1) * 0.5
    cya = (ay0 + ay1) * 0.5
    cxb = (bx0 + bx1) * 0.5
    cyb = (by0 + by1) * 0.5
    ox = max(min(ax1, bx1) - max(ax0, bx0), 0.0)
    oy = max(min(ay1, by1) - max(ay0, by0), 0.0)

    if code == LEFT_OF:
        return cxa < cxb and ox < 0.5 * min(wa, wb)
    if code == RIGHT_OF:
        return cxa > cxb and ox < 0.5 * min(wa, wb)
    if code == ABOVE:
        return cya < cyb and oy < 0.5 * min(ha, hb)
    if code == BELOW:
        return cya > cyb and oy < 0.5 * min(ha, hb)
    if code == UNDER:
        return cya > cyb and oy < 0.5 * min(ha, hb) and ox > 0.0
    if code == ON:
        return ay1 >= by0 - contact_tol and ay1 <= by0 + 0.5 * hb + contact_tol and ox >= min_overlap * wa
    if code == INSIDE:
        return ox * oy >= inside_frac * (wa * ha)
    dist = math.sqrt((cxa - cxb) ** 2 + (cya - cyb) ** 2)
    if code == NEAR:
        return dist <= near_frac * SQRT2
    if code == OVERLAP_OR_NEAR:
        return ox * oy > 0.0 or dist <= near_frac * SQRT2
    return False


@njit(cache=True)
def relation_matrix(code, a, b, near_frac, min_overlap, inside_frac, contact_tol):
    n = a.shape[0]
    m = b.shape[0]
    out = np.zeros((n, m), dtype=np.bool_)
    for i in range(n):
        for j in range(m):
            out[i, j] = _pair(
                code, a[i, 0], a[i, 1], a[i, 2], a[i, 3], b[j, 0], b[j, 1], b[j, 2], b[j, 3],
                near_frac, min_overlap, inside_frac, contact_tol,
            )
    return out


@njit(cache=True)
def first_witness(code, a, b, near_frac, min_overlap, inside_frac, contact_tol):
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            if _pair(
                code, a[i, 0], a[i, 1], a[i, 2], a[i, 3], b[j, 0], b[j, 1], b[j, 2], b[j, 3],
                near_frac, min_overlap, inside_frac, contact_tol,
            ):
                return i, j
    return -1, -1
