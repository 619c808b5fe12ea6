import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightfield3d.data import Volume
from lightfield3d.errors import ShapeError
from lightfield3d.metrics import MetricReport, evaluate, prepare, psnr, ssim
from oracles import ssim_sliding_direct


def test_prepare():
    rng = np.random.default_rng(0)
    v = rng.random((3, 8, 8))
    assert np.array_equal(prepare(v, 0.0), v)
    assert np.all(prepare(np.full((2, 4, 4), 0.3), 0.3) == 0)
    assert np.array_equal(prepare(Volume(v), 0.4), np.where(v > 0.4, v - 0.4, 0.0))


def test_psnr_closed_form_and_sentinel():
    a = np.zeros((10, 10))
    b = np.full((10, 10), 0.01)  # mse = 1e-4
    assert psnr(a, b, 1.0) == pytest.approx(40.0, abs=1e-9)
    assert psnr(a, a, 1.0) == math.inf
    report = MetricReport(math.inf, 1.0, 1.0, 0.0)
    assert "psnr = 99.000000" in report.to_text()


def test_psnr_random_oracle_and_symmetry():
    rng = np.random.default_rng(1)
    a, b = rng.random((4, 6, 7)), rng.random((4, 6, 7))
    want = 10 * math.log10(0.9**2 / (((a - b) ** 2).sum() / a.size))
    assert psnr(a, b, 0.9) == pytest.approx(want, rel=1e-12)
    assert psnr(a, b, 0.9) == psnr(b, a, 0.9)
    with pytest.raises(ShapeError):
        psnr(a, b[:2], 1.0)


@pytest.mark.parametrize("c1,c2", [(0.2, 0.7), (1.0, 0.0), (0.5, 0.5)])
def test_ssim_constant_images(c1, c2):
    rng_ = 1.0
    C1 = (0.01 * rng_) ** 2
    want = (2 * c1 * c2 + C1) / (c1**2 + c2**2 + C1)
    got = ssim(np.full((16, 16), c1), np.full((16, 16), c2), data_range=rng_)
    assert got == pytest.approx(want, abs=1e-12)


def test_ssim_matches_sliding_window_oracle():
    rng = np.random.default_rng(2)
    a = rng.random((32, 32))
    b = np.clip(a + 0.1 * rng.standard_normal((32, 32)), 0, None)
    assert abs(ssim(a, b, 1.0) - ssim_sliding_direct(a, b, 1.0)) < 1e-6


def test_ssim_identity_and_stack_average():
    rng = np.random.default_rng(3)
    a = rng.random((3, 16, 16))
    b = rng.random((3, 16, 16))
    assert ssim(a, a) == 1.0
    per_slice = [ssim(a[z], b[z], 1.0) for z in range(3)]
    assert ssim(a, b, 1.0) == pytest.approx(np.mean(per_slice), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), noise=st.floats(0.01, 2.0))
def test_ssim_symmetric_and_bounded(seed, noise):
    rng = np.random.default_rng(seed)
    a = rng.random((14, 15))
    b = np.abs(a + noise * rng.standard_normal(a.shape))
    s = ssim(a, b, 1.0)
    assert s == pytest.approx(ssim(b, a, 1.0), abs=1e-12)
    assert s <= 1.0


def test_evaluate_uses_truth_peak_after_bg():
    rng = np.random.default_rng(4)
    truth = rng.random((2, 12, 12)) + 0.5
    recon = truth + 0.01
    rep = evaluate(recon, truth, bg=0.5)
    t, r = prepare(truth, 0.5), prepare(recon, 0.5)
    assert rep.psnr == pytest.approx(psnr(r, t, t.max()))
    assert rep.bg_used == 0.5
    assert -1 <= rep.ssim <= 1 and -1 <= rep.ssim_mip <= 1
    same = evaluate(truth, truth)
    assert same.psnr == math.inf and same.ssim == 1.0
