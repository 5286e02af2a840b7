# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Every function here has a numpy twin in
``_pykernels`` and both must return identical results."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, qsort
from libc.math cimport floor

cnp.import_array()

ctypedef cnp.int64_t i64


cdef int _cmp_double(const void *a, const void *b) noexcept nogil:
    cdef double da = (<double *>a)[0]
    cdef double db = (<double *>b)[0]
    return (da > db) - (da < db)


cdef inline void _sort(double *v, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    if n > 24:
        qsort(v, n, sizeof(double), _cmp_double)
        return
    for i in range(1, n):
        key = v[i]
        j = i - 1
        while j >= 0 and v[j] > key:
            v[j + 1] = v[j]
            j -= 1
        v[j + 1] = key


def refractory_mask(const i64[::1] t, const i64[::1] pix, Py_ssize_t npix, i64 refractory):
    """Greedy per-pixel suppression on a time-sorted stream."""
    cdef Py_ssize_t n = t.shape[0], i
    keep = np.ones(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] k = keep
    last_arr = np.empty(npix, dtype=np.int64)
    cdef i64[::1] last = last_arr
    seen_arr = np.zeros(npix, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    cdef i64 q
    with nogil:
        for i in range(n):
            q = pix[i]
            if seen[q] and t[i] - last[q] < refractory:
                k[i] = 0
            else:
                seen[q] = 1
                last[q] = t[i]
    return keep


def iei_cycles(
    const i64[::1] t,
    const i64[::1] pix,
    const cnp.int8_t[::1] p,
    const i64[::1] starts,
    Py_ssize_t c0,
    Py_ssize_t c1,
    double gate_lo,
    double gate_hi,
    Py_ssize_t npix,
    int median,
    int min_events,
    double single_value,
    double scale,
    double[:, ::1] frames,
    cnp.uint8_t[:, ::1] conf,
):
    """Fill ``frames[c - c0]`` for cycles ``c0 <= c < c1``.

    ``t`` must be the time-sorted slice of events inside those cycles.
    """
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i, j, e, lo, hi, m, off, ntouch, c, row
    cdef i64 q, ph_i, start
    cdef double ph, dt, a, b
    cdef int *cnt = <int *>malloc(npix * sizeof(int))
    cdef int *fill = <int *>malloc(npix * sizeof(int))
    cdef Py_ssize_t *offs = <Py_ssize_t *>malloc(npix * sizeof(Py_ssize_t))
    cdef i64 *touched = <i64 *>malloc((n + 1) * sizeof(i64))
    cdef i64 *buf = <i64 *>malloc((n + 1) * sizeof(i64))
    cdef double *iv = <double *>malloc((n + 1) * sizeof(double))
    if not (cnt and fill and offs and touched and buf and iv):
        free(cnt); free(fill); free(offs); free(touched); free(buf); free(iv)
        raise MemoryError()
    with nogil:
        for i in range(npix):
            cnt[i] = 0
            fill[i] = 0
        e = 0
        for c in range(c0, c1):
            row = c - c0
            start = starts[c]
            lo = e
            while e < n and t[e] < starts[c + 1]:
                e += 1
            hi = e
            ntouch = 0
            for i in range(lo, hi):
                if p[i] <= 0:
                    continue
                ph = <double>(t[i] - start)
                if ph < gate_lo or ph >= gate_hi:
                    continue
                q = pix[i]
                if cnt[q] == 0:
                    touched[ntouch] = q
                    ntouch += 1
                cnt[q] += 1
            off = 0
            for j in range(ntouch):
                q = touched[j]
                offs[q] = off
                off += cnt[q]
            for i in range(lo, hi):
                if p[i] <= 0:
                    continue
                ph = <double>(t[i] - start)
                if ph < gate_lo or ph >= gate_hi:
                    continue
                q = pix[i]
                buf[offs[q] + fill[q]] = t[i]
                fill[q] += 1
            for j in range(ntouch):
                q = touched[j]
                m = cnt[q]
                off = offs[q]
                if m >= min_events:
                    if median:
                        for i in range(m - 1):
                            iv[i] = <double>(buf[off + i + 1] - buf[off + i])
                        _sort(iv, m - 1)
                        a = iv[(m - 2) // 2]
                        b = iv[(m - 1) // 2]
                        dt = 0.5 * (a + b)
                    else:
                        dt = <double>(buf[off + 1] - buf[off])
                    frames[row, q] = scale / dt
                    conf[row, q] = 2
                elif m == 1:
                    frames[row, q] = single_value
                    conf[row, q] = 1
                cnt[q] = 0
                fill[q] = 0
    free(cnt); free(fill); free(offs); free(touched); free(buf); free(iv)


def last_pair_ratios(
    const i64[::1] t,
    const i64[::1] pix,
    const cnp.int8_t[::1] p,
    const i64[::1] starts,
    Py_ssize_t n_cycles,
    double gate_hi,
    Py_ssize_t npix,
):
    """Per (cycle, pixel) with >= 3 gated positive events: the ratio of the
    final two onset-relative timestamps. Returns (cycle, pixel, ratio)."""
    cdef Py_ssize_t n = t.shape[0], i, c, nout = 0
    cdef i64 q, start, rel
    cnt_arr = np.zeros(npix, dtype=np.int64)
    last_arr = np.zeros(npix, dtype=np.int64)
    prev_arr = np.zeros(npix, dtype=np.int64)
    stamp_arr = np.full(npix, -1, dtype=np.int64)
    cdef i64[::1] cnt = cnt_arr, last = last_arr, prev = prev_arr, stamp = stamp_arr
    out_c = np.empty(n, dtype=np.int64)
    out_q = np.empty(n, dtype=np.int64)
    out_r = np.empty(n, dtype=np.float64)
    cdef i64[::1] oc = out_c, oq = out_q
    cdef double[::1] orr = out_r
    # pending groups are flushed when a pixel's cycle changes or at the end
    with nogil:
        c = 0
        for i in range(n):
            if p[i] <= 0:
                continue
            while c < n_cycles and t[i] >= starts[c + 1]:
                c += 1
            if c >= n_cycles:
                break
            start = starts[c]
            rel = t[i] - start
            if <double>rel >= gate_hi:
                continue
            q = pix[i]
            if stamp[q] != c:
                if stamp[q] >= 0 and cnt[q] >= 3 and prev[q] > 0:
                    oc[nout] = stamp[q]
                    oq[nout] = q
                    orr[nout] = <double>last[q] / <double>prev[q]
                    nout += 1
                stamp[q] = c
                cnt[q] = 0
            prev[q] = last[q]
            last[q] = rel
            cnt[q] += 1
        for q in range(npix):
            if stamp[q] >= 0 and cnt[q] >= 3 and prev[q] > 0:
                oc[nout] = stamp[q]
                oq[nout] = q
                orr[nout] = <double>last[q] / <double>prev[q]
                nout += 1
    return out_c[:nout], out_q[:nout], out_r[:nout]
