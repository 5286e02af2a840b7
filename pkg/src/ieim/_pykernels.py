"""Pure numpy implementations of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled versions exactly; they are
used when the extension is not built or ``IEIM_BACKEND=python`` is set.
"""

from __future__ import annotations

import numpy as np


def refractory_mask(t, pix, npix, refractory):
    t = np.asarray(t, dtype=np.int64)
    pix = np.asarray(pix, dtype=np.int64)
    n = len(t)
    keep = np.ones(n, dtype=bool)
    if n < 2:
        return keep
    order = np.lexsort((np.arange(n), pix))  # pixel-major, stream order within
    st, sp = t[order], pix[order]
    same = np.diff(sp) == 0
    close = same & (np.diff(st) < refractory)
    if not close.any():
        return keep
    if refractory <= 1:
        keep[order[1:][close]] = False
        return keep
    # greedy chains are inherently sequential; only walk pixels with conflicts
    bounds = np.flatnonzero(np.r_[True, ~same, True])
    hot = np.unique(np.searchsorted(bounds, np.flatnonzero(close) + 1, side="right") - 1)
    for g in hot:
        lo, hi = bounds[g], bounds[g + 1]
        last = st[lo]
        for i in range(lo + 1, hi):
            if st[i] - last < refractory:
                keep[order[i]] = False
            else:
                last = st[i]
    return keep


def _gated(t, pix, p, starts, c0, c1, gate_lo, gate_hi):
    """Gated positive events of cycles [c0, c1) as (cycle, pixel, t)."""
    sel = p > 0
    t, pix = t[sel], pix[sel]
    c = np.searchsorted(starts, t, side="right") - 1
    inside = (c >= c0) & (c < c1)
    t, pix, c = t[inside], pix[inside], c[inside]
    ph = (t - starts[c]).astype(np.float64)
    ok = (ph >= gate_lo) & (ph < gate_hi)
    return c[ok], pix[ok], t[ok]


def _groups(c, pix, t, npix):
    """Sort by (cycle, pixel) keeping time order; return sorted arrays and group bounds."""
    key = c * npix + pix
    order = np.argsort(key, kind="stable")
    key, t = key[order], t[order]
    if len(key) == 0:
        return key, t, np.zeros(1, np.int64)
    bounds = np.flatnonzero(np.r_[True, np.diff(key) != 0, True])
    return key, t, bounds


def iei_cycles(t, pix, p, starts, c0, c1, gate_lo, gate_hi, npix, median,
               min_events, single_value, scale, frames, conf):
    t = np.asarray(t, np.int64)
    c, q, tt = _gated(t, np.asarray(pix, np.int64), np.asarray(p), np.asarray(starts),
                      c0, c1, gate_lo, gate_hi)
    key, tt, bounds = _groups(c, q, tt, npix)
    if len(key) == 0:
        return
    gstart = bounds[:-1]
    counts = np.diff(bounds)
    gkey = key[gstart]
    rows, cols = gkey // npix - c0, gkey % npix

    single = counts == 1
    frames[rows[single], cols[single]] = single_value
    conf[rows[single], cols[single]] = 1

    meas = counts >= min_events
    if not meas.any():
        return
    if not median:
        dt = (tt[gstart[meas] + 1] - tt[gstart[meas]]).astype(np.float64)
    else:
        gid = np.repeat(np.arange(len(counts)), counts)
        within = np.r_[False, np.diff(gid) == 0]
        iv = np.diff(tt, prepend=0)[within]
        ig = gid[within]
        # sort intervals inside each group
        o = np.lexsort((iv, ig))
        iv = iv[o].astype(np.float64)
        ni = counts - 1
        istart = np.cumsum(ni) - ni
        sel = np.flatnonzero(meas)
        a = iv[istart[sel] + (ni[sel] - 1) // 2]
        b = iv[istart[sel] + ni[sel] // 2]
        dt = 0.5 * (a + b)
    frames[rows[meas], cols[meas]] = scale / dt
    conf[rows[meas], cols[meas]] = 2


def last_pair_ratios(t, pix, p, starts, n_cycles, gate_hi, npix):
    t = np.asarray(t, np.int64)
    starts = np.asarray(starts)
    c, q, tt = _gated(t, np.asarray(pix, np.int64), np.asarray(p), starts,
                      0, n_cycles, 0.0, gate_hi)
    key, tt, bounds = _groups(c, q, tt, npix)
    if len(key) == 0:
        z = np.zeros(0, np.int64)
        return z, z.copy(), np.zeros(0)
    counts = np.diff(bounds)
    ends = bounds[1:]
    ok = counts >= 3
    last = ends[ok] - 1
    gkey = key[last]
    cyc = gkey // npix
    rel_last = tt[last] - starts[cyc]
    rel_prev = tt[last - 1] - starts[cyc]
    good = rel_prev > 0
    return (cyc[good], gkey[good] % npix,
            rel_last[good].astype(np.float64) / rel_prev[good].astype(np.float64))
