"""Kernel selection.

The compiled extension is used when it imports; otherwise, or when the
environment sets ``IEIM_BACKEND=python``, the numpy twins are used.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available() -> list[str]:
    return list(_BACKENDS)


def _default() -> str:
    want = os.environ.get("IEIM_BACKEND", "").strip().lower()
    if want:
        if want not in _BACKENDS:
            raise ImportError(f"IEIM_BACKEND={want!r} is not available ({available()})")
        return want
    return "cython" if "cython" in _BACKENDS else "python"


NAME = _default()


def get(name: str | None = None):
    return _BACKENDS[name or NAME]


def worker_count(requested: int | None = None) -> int:
    """Workers to use: ``requested``, capped by ``IEIM_THREADS`` if set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("IEIM_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def refractory_mask(t, pix, npix, refractory, backend=None):
    t = np.ascontiguousarray(t, dtype=np.int64)
    pix = np.ascontiguousarray(pix, dtype=np.int64)
    return get(backend).refractory_mask(t, pix, int(npix), int(refractory))
