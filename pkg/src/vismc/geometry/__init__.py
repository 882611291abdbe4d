"""Pairwise spatial relations between box lists.

The numba kernels are used when numba imports cleanly and
``VISMC_DISABLE_NUMBA`` is unset (or ``0``); otherwise the numpy path runs.
Both paths compute identical results.
"""

from __future__ import annotations

import logging
import os
from typing import Sequence

import numpy as np

from . import _numpy
from ._codes import RELATION_CODES, SQRT2

logger = logging.getLogger(__name__)

RELATIONS = tuple(RELATION_CODES)

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

_active = "numpy"


def available_backends() -> list[str]:
    return ["numpy"] + (["numba"] if _numba is not None else [])


def set_backend(name: str) -> None:
    global _active
    if name not in available_backends():
        raise ValueError(f"geometry backend {name!r} not available")
    _active = name


def active_backend() -> str:
    return _active


def _default_backend() -> str:
    if os.environ.get("VISMC_DISABLE_NUMBA", "0") not in ("", "0", "false", "no"):
        return "numpy"
    return "numba" if _numba is not None else "numpy"


set_backend(_default_backend())


def as_array(boxes: Sequence) -> np.ndarray:
    """``(n, 4)`` float64 array from Box objects or 4-sequences."""
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    rows = [b.coords if hasattr(b, "coords") else tuple(b) for b in boxes]
    return np.asarray(rows, dtype=np.float64).reshape(-1, 4)


def relation_matrix(relation: str, a, b, cfg, backend: str | None = None) -> np.ndarray:
    """Boolean ``(len(a), len(b))`` matrix of ``relation(a[i], b[j])``."""
    code = RELATION_CODES[relation]
    a_arr = a if isinstance(a, np.ndarray) else as_array(a)
    b_arr = b if isinstance(b, np.ndarray) else as_array(b)
    args = (code, a_arr, b_arr, float(cfg.near_frac), float(cfg.min_overlap),
            float(cfg.inside_frac), float(cfg.contact_tol))
    if (backend or _active) == "numba":
        return _numba.relation_matrix(*args)
    return _numpy.relation_matrix(*args)


def first_witness(relation: str, a, b, cfg, backend: str | None = None) -> tuple[int, int] | None:
    """Index pair of the first satisfying pair in row-major order, if any."""
    code = RELATION_CODES[relation]
    a_arr = a if isinstance(a, np.ndarray) else as_array(a)
    b_arr = b if isinstance(b, np.ndarray) else as_array(b)
    if a_arr.shape[0] == 0 or b_arr.shape[0] == 0:
        return None
    if (backend or _active) == "numba":
        i, j = _numba.first_witness(code, a_arr, b_arr, float(cfg.near_frac), float(cfg.min_overlap),
                                    float(cfg.inside_frac), float(cfg.contact_tol))
        return None if i < 0 else (int(i), int(j))
    mat = relation_matrix(relation, a_arr, b_arr, cfg, backend="numpy")
    hits = np.argwhere(mat)
    return None if hits.size == 0 else (int(hits[0, 0]), int(hits[0, 1]))


def iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    inter = max(min(ax1, bx1) - max(ax0, bx0), 0.0) * max(min(ay1, by1) - max(ay0, by0), 0.0)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


__all__ = [
    "RELATIONS", "SQRT2", "active_backend", "as_array", "available_backends",
    "first_witness", "iou", "relation_matrix", "set_backend",
]
