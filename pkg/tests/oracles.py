"""Independent reference computations, written without the package.

Everything here uses only the standard library (plus mpmath for the
high-precision event-time oracle) so that a bug in ``ieim`` cannot leak
into the expected values.
"""

import math
import struct

import mpmath

mpmath.mp.dps = 50


def ramp_times_mp(g, c_thr, n):
    """First ``n`` rising-ramp crossings by iterating the log-capacitor
    recurrence (1 + g t_k) = (1 + g t_{k-1}) e^c from t_0 = 0, at 50 digits."""
    g, c = mpmath.mpf(g), mpmath.mpf(c_thr)
    out, level = [], mpmath.mpf(1)
    for _ in range(n):
        level *= mpmath.e ** c
        out.append((level - 1) / g)
    return out


def ulps(value: float, exact) -> float:
    """Distance from a float to a high-precision reference, in ulps of the float."""
    return float(abs(mpmath.mpf(value) - exact) / mpmath.mpf(math.ulp(value)))


def crossings_on_ramp(m_peak, c_thr):
    """Count of k >= 1 with log(1 + m_peak) >= k c_thr, by brute enumeration."""
    total, k = math.log1p(m_peak), 0
    while (k + 1) * c_thr <= total:
        k += 1
    return k


def iei_first_pair(t1_s, t2_s, c_thr, H, K):
    return c_thr / (H * K * (t2_s - t1_s))


def ssim_constant(a, b, k1=0.01, data_range=1.0):
    """SSIM of two constant images: only the luminance term survives."""
    c1 = (k1 * data_range) ** 2
    return (2 * a * b + c1) / (a * a + b * b + c1)


def ievt_bytes(width, height, tick_ns, events):
    """Hand-packed IEVT file from (t, x, y, p) tuples."""
    out = b"IEVT" + struct.pack("<HHHIQ", 1, width, height, tick_ns, len(events)) + bytes(10)
    for t, x, y, p in events:
        out += struct.pack("<QHHb3x", t, x, y, p)
    return out


def pearson(a, b):
    a, b = list(a), list(b)
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    den = math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
    return num / den
