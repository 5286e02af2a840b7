import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_stream
from ieim.events import EventStream
from ieim.metrics import (
    FrameEquivalent,
    NoMeasuredPixels,
    SsimParams,
    correlation,
    dynamic_range,
    mse,
    ssim,
    stream_stats,
)
from oracles import pearson, ssim_constant

grids = arrays(np.float64, (12, 13), elements=st.floats(0, 1))


def test_mse_examples():
    z = np.zeros((3, 3))
    assert mse(z, z) == 0.0
    assert mse(z, np.ones((3, 3))) == 1.0
    assert mse([[0.0, 0.5]], [[0.5, 0.5]]) == 0.125
    with pytest.raises(ValueError):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))


def test_ssim_constant_closed_form():
    a, b = np.full((16, 16), 0.2), np.full((16, 16), 0.8)
    assert abs(ssim(a, b) - 0.470666078517865) < 1e-12
    assert abs(ssim(a, b) - ssim_constant(0.2, 0.8)) < 1e-12


@settings(max_examples=60)
@given(grids, grids)
def test_ssim_properties(a, b):
    assert abs(ssim(a, a) - 1.0) < 1e-12
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1 - 1e-12 <= ssim(a, b) <= 1 + 1e-12
    assert mse(a, b) >= 0


def test_ssim_matches_reference_implementation(rng):
    skm = pytest.importorskip("skimage.metrics")
    a, b = rng.uniform(0, 1, (40, 40)), rng.uniform(0, 1, (40, 40))
    ref = skm.structural_similarity(a, b, data_range=1.0, gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False)
    # the reference crops a border after 'same' filtering; 'valid' filtering is the same set
    assert ssim(a, b) == pytest.approx(ref, abs=1e-9)


def test_ssim_rejects_small_and_bad_params():
    with pytest.raises(ValueError):
        ssim(np.zeros((5, 20)), np.zeros((5, 20)))
    with pytest.raises(ValueError):
        SsimParams(window=4)
    with pytest.raises(ValueError):
        SsimParams(k1=1.5)


def test_bandwidth_examples():
    fe = FrameEquivalent(1280, 720, 16, 100)
    assert fe.bytes_per_s == 184_320_000
    s = EventStream(4, 4, 1000, np.arange(10**6), np.zeros(10**6), np.zeros(10**6),
                    np.ones(10**6))
    r = stream_stats(s, 1.0, fe)
    assert r.events_per_s == 1e6 and r.bytes_per_s == 16e6
    assert r.ratio == pytest.approx(16e6 / 184.32e6)
    assert stream_stats(EventStream(4, 4), 1.0, fe).events_per_s == 0
    with pytest.raises(ValueError):
        stream_stats(s, 0.0, fe)


def test_bandwidth_linear_in_rate():
    fe = FrameEquivalent(64, 64)
    a = stream_stats(make_stream([(i, 0, 0, 1) for i in range(10)]), 1.0, fe)
    b = stream_stats(make_stream([(i, 0, 0, 1) for i in range(20)]), 1.0, fe)
    assert b.ratio == pytest.approx(2 * a.ratio)


def test_dynamic_range():
    assert dynamic_range(np.full((2, 2), 0.3)) == 0.0
    assert dynamic_range(np.array([[0.001, 1.0]])) == pytest.approx(60.0)
    assert dynamic_range(np.array([[0.0, 0.4]])) == 0.0
    conf = np.array([[2, 1]])
    assert dynamic_range(np.array([[0.5, 0.001]]), conf) == 0.0
    with pytest.raises(NoMeasuredPixels):
        dynamic_range(np.zeros((2, 2)))


def test_correlation(rng):
    a, b = rng.uniform(size=50), rng.uniform(size=50)
    assert correlation(a, b) == pytest.approx(pearson(a, b), abs=1e-12)
    assert correlation(np.ones(5), a[:5]) == 0.0
