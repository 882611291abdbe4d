"""Vectorized numpy relation kernels.

Arrays are ``(n, 4)`` float64 in ``x0, y0, x1, y1`` order. Formulas are kept
term-for-term identical to the numba kernels so both paths round the same.
"""

import numpy as np

from ._codes import ABOVE, BELOW, INSIDE, LEFT_OF, NEAR, ON, OVERLAP_OR_NEAR, RIGHT_OF, SQRT2, UNDER


def relation_matrix(code, a, b, near_frac, min_overlap, inside_frac, contact_tol):
    ax0, ay0, ax1, ay1 = (a[:, i][:, None] for i in range(4))
    bx0, by0, bx1, by1 = (b[:, i][None, :] for i in range(4))
    wa = ax1 - ax0
    ha = ay1 - ay0
    wb = bx1 - bx0
    hb = by1 - by0
    cxa = (ax0 + ax1) * 0.5
    cya = (ay0 + ay1) * 0.5
    cxb = (bx0 + bx1) * 0.5
    cyb = (by0 + by1) * 0.5
    ox = np.maximum(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0.0)
    oy = np.maximum(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0.0)

    if code == LEFT_OF:
        out = (cxa < cxb) & (ox < 0.5 * np.minimum(wa, wb))
    elif code == RIGHT_OF:
        out = (cxa > cxb) & (ox < 0.5 * np.minimum(wa, wb))
    elif code == ABOVE:
        out = (cya < cyb) & (oy < 0.5 * np.minimum(ha, hb))
    elif code == BELOW:
        out = (cya > cyb) & (oy < 0.5 * np.minimum(ha, hb))
    elif code == UNDER:
        out = (cya > cyb) & (oy < 0.5 * np.minimum(ha, hb)) & (ox > 0.0)
    elif code == ON:
        out = (
            (ay1 >= by0 - contact_tol)
            & (ay1 <= by0 + 0.5 * hb + contact_tol)
            & (ox >= min_overlap * wa)
        )
    elif code == INSIDE:
        out = ox * oy >= inside_frac * (wa * ha)
    elif code == NEAR:
        out = np.sqrt((cxa - cxb) ** 2 + (cya - cyb) ** 2) <= near_frac * SQRT2
    elif code == OVERLAP_OR_NEAR:
        dist = np.sqrt((cxa - cxb) ** 2 + (cya - cyb) ** 2)
        out = (ox * oy > 0.0) | (dist <= near_frac * SQRT2)
    else:
        raise ValueError(f"unknown relation code {code}")
    return np.broadcast_to(out, (a.shape[0], b.shape[0])).copy()
