import numpy as np
import pytest

from lightfield3d import nn
from lightfield3d.data import LightField, Volume
from lightfield3d.errors import ConfigError, DataError, NumericError
from lightfield3d.optics import AlignedFeatures, align_features, forward_project
from lightfield3d.psf import PsfConfig, extract_centroid_kernels, synthesize_psf
from lightfield3d.v2v import (
    V2vConfig,
    branch_forward,
    dc_loss,
    decode_volume,
    encode_views,
    estimate_background,
    fft_loss,
    fuse,
    init_weights,
    mse_loss,
    split_views,
    total_loss,
    train,
)
from lightfield3d.v2v.train import branch_plan
from oracles import numeric_grad, rel_err

TINY = V2vConfig(enc_channels=2, enc_layers=1, dec_levels=2, dec_width=3, steps=3, lr=1e-2, seed=4)
TINY_PSF = PsfConfig(nu=4, k=3, nz=2, z_focal=0.5, shift_scale=1.0)


@pytest.fixture(scope="module")
def tiny_scene():
    psf = synthesize_psf(TINY_PSF)
    rng = np.random.default_rng(0)
    vol = Volume(rng.random((2, 8, 8)))
    lf = forward_project(vol, psf)
    noisy = LightField(np.clip(lf.data + 0.05 * rng.standard_normal(lf.data.shape), 0, None))
    return psf, noisy


# ---------------------------------------------------------------- split


def test_split_four():
    s = split_views(4)
    assert s.subset_a == (0, 2) and s.subset_b == (1, 3)


def test_split_thirteen():
    s = split_views(13)
    assert len(s.subset_a) == 7 and len(s.subset_b) == 6
    assert set(s.subset_a).isdisjoint(s.subset_b)
    assert set(s.subset_a) | set(s.subset_b) == set(range(13))


@pytest.mark.parametrize("nu", range(2, 33))
def test_split_partition(nu):
    s = split_views(nu)
    assert set(s.subset_a).isdisjoint(s.subset_b)
    assert sorted(s.subset_a + s.subset_b) == list(range(nu))
    assert abs(len(s.subset_a) - len(s.subset_b)) <= 1


def test_split_needs_two_views():
    with pytest.raises(DataError):
        split_views(1)


def test_branch_plan_swaps_subsets():
    (_, ia, sa), (_, ib, sb) = branch_plan(13, V2vConfig())
    assert ia == sb and ib == sa and set(ia).isdisjoint(sa)
    (_, ia, sa), _ = branch_plan(5, V2vConfig(use_split=False))
    assert ia == sa == tuple(range(5))


# ---------------------------------------------------------------- network


def test_encoder_shares_weights_across_views():
    params = init_weights(TINY, nz=2, dtype=np.float64)
    rng = np.random.default_rng(1)
    v = rng.random((8, 8))
    f = encode_views(np.stack([v, v]), params, TINY).data
    assert np.array_equal(f[0], f[1])
    views = rng.random((3, 8, 8))
    perm = [2, 0, 1]
    assert np.array_equal(encode_views(views[perm], params, TINY).data,
                          encode_views(views, params, TINY).data[perm])


def test_encoder_shared_between_branches():
    params = init_weights(TINY, nz=2)
    names = list(params)
    assert not any(n.startswith("enc_") for n in names)
    assert {n.split(".")[0] for n in names} == {"enc", "dec_a", "dec_b"}


def test_decoder_shape_and_nonnegative():
    params = init_weights(V2vConfig(enc_channels=2, dec_width=4), nz=3, dtype=np.float64)
    rng = np.random.default_rng(2)
    aligned = AlignedFeatures(rng.standard_normal((3, 2, 12, 16)))
    out = decode_volume(aligned, params, V2vConfig(enc_channels=2, dec_width=4), "b")
    assert out.shape == (3, 12, 16)
    assert out.min() >= 0 and np.any(out > 0)


def test_branch_indices_and_simulated_views(tiny_scene):
    psf, lf = tiny_scene
    params = init_weights(TINY, 2, np.float64)
    kernels = extract_centroid_kernels(psf)
    for branch, inp, sup in branch_plan(4, TINY):
        out = branch_forward(lf.data, inp, sup, psf, kernels, params, TINY, branch, 2.0, 0.7)
        assert out.input_indices == inp and out.sim_indices == sup
        vol = Volume(out.volume.value)
        want = forward_project(vol, psf.views(sup)).data
        assert np.max(np.abs(out.sim_views.value - want)) <= 1e-5 * np.max(np.abs(want))


def test_branch_volume_matches_module_pipeline(tiny_scene):
    psf, lf = tiny_scene
    params = init_weights(TINY, 2, np.float64)
    kernels = extract_centroid_kernels(psf)
    out = branch_forward(lf.data, (0, 2), (1, 3), psf, kernels, params, TINY, "a")
    feats = encode_views(lf.data[[0, 2]], params, TINY)
    vol = decode_volume(align_features(feats, kernels.views((0, 2))), params, TINY, "a")
    assert np.allclose(out.volume.value, vol, atol=1e-12)


def test_zero_input_zero_bias_gives_zero(tiny_scene):
    psf, _ = tiny_scene
    params = init_weights(TINY, 2, np.float64)
    for p in params.values():
        if p.name.endswith(".b"):
            p.value[...] = 0
    out = branch_forward(np.zeros((4, 8, 8)), (1, 3), (0, 2), psf, extract_centroid_kernels(psf),
                         params, TINY, "b")
    assert np.all(out.volume.value == 0) and np.all(out.sim_views.value == 0)


def test_end_to_end_gradcheck(tiny_scene):
    psf, lf = tiny_scene
    params = init_weights(TINY, 2, np.float64)
    kernels = extract_centroid_kernels(psf)
    # lift the head bias so most voxels are active and the relu is away from its kink
    params["dec_a.head.b"].value[...] = 0.5

    def loss():
        out = branch_forward(lf.data, (0, 2), (1, 3), psf, kernels, params, TINY, "a")
        return total_loss(out.sim_views, lf.data[[1, 3]], out.volume, 0.4)[0]

    L = loss()
    for p in params.values():
        p.zero_grad()
    L.backward()
    for name in ("enc.0.w", "dec_a.down0.0.w", "dec_a.head.b"):
        p = params[name]
        num = numeric_grad(lambda: loss().item(), p.value, h=1e-6)
        assert rel_err(p.grad, num) < 1e-4, name


# ---------------------------------------------------------------- losses


def test_loss_examples():
    a = np.array([0.0, 2.0])
    assert mse_loss(a, np.zeros(2)).item() == 2.0
    assert mse_loss(a, a).item() == 0.0
    img = np.random.default_rng(3).random((1, 5, 6))
    for mode in ("l2", "l1"):
        assert fft_loss(img, img, mode).item() == 0.0
    assert fft_loss(img + 0.3, img, "l2").item() == pytest.approx(30 * 0.09, rel=1e-12)
    v = np.full((2, 3, 3), 1.0)
    assert dc_loss(v, 0.5).item() == 0.0
    v[1, 2, 0] = 0.0
    assert dc_loss(v, 0.5).item() == 0.5


def test_loss_oracles():
    rng = np.random.default_rng(4)
    a, b = rng.random((3, 6, 5)), rng.random((3, 6, 5))
    assert mse_loss(a, b).item() == pytest.approx(((a - b) ** 2).sum() / a.size, rel=1e-12)
    spec = np.fft.fft2(a - b)
    assert fft_loss(a, b, "l1").item() == pytest.approx(np.abs(spec).sum() / a.size, rel=1e-12)
    v = rng.random((2, 4, 4))
    assert dc_loss(v, 0.5).item() == pytest.approx(np.maximum(0.5 - v, 0).sum(), rel=1e-12)


def test_total_loss_weights():
    rng = np.random.default_rng(5)
    sim, real, vol = rng.random((2, 4, 4)), rng.random((2, 4, 4)), rng.random((2, 4, 4))
    t, m, f, d = total_loss(sim, real, vol, 0.3, alpha=0.0, beta=0.0)
    assert t.item() == m.item()
    t, m, f, d = total_loss(sim, real, vol, 0.3)
    assert t.item() == pytest.approx(m.item() + 0.1 * f.item() + d.item(), rel=1e-12)


def test_total_loss_gradcheck_wrt_sim_views():
    rng = np.random.default_rng(6)
    sim = nn.Param(rng.random((2, 4, 5)))
    real, vol = rng.random((2, 4, 5)), rng.random((2, 3, 3))
    total_loss(sim, real, vol, 0.2)[0].backward()
    num = numeric_grad(lambda: total_loss(sim, real, vol, 0.2)[0].item(), sim.value, h=1e-6)
    assert rel_err(sim.grad, num) < 1e-6


# ---------------------------------------------------------------- background


def test_background_constant_field():
    assert estimate_background(np.full((2, 3, 3), 4.25)) == 4.25


def test_background_two_levels():
    arr = np.full(1000, 10.0)
    arr[:100] = 100.0
    bg = estimate_background(arr)
    width = 90 / 256
    assert 10.0 <= bg <= 10.0 + width


def test_background_ties_take_lower_bin():
    arr = np.array([0.0, 0.0, 1.0, 1.0])
    assert estimate_background(arr) == pytest.approx(0.5 / 256)


def test_background_clipped_gaussian():
    rng = np.random.default_rng(7)
    img = np.maximum(20 + 3 * rng.standard_normal((4, 128, 128)), 0)
    mask = rng.random(img.shape) < 0.02
    img[mask] += rng.uniform(50, 200, mask.sum())
    assert abs(estimate_background(LightField(img)) - 20) <= 1.5


def test_background_empty():
    with pytest.raises(DataError):
        estimate_background(np.zeros(0))


# ---------------------------------------------------------------- training


def test_fuse():
    rng = np.random.default_rng(8)
    a, b = Volume(rng.random((2, 3, 4))), Volume(rng.random((2, 3, 4)))
    assert np.array_equal(fuse(a, a).data, a.data)
    assert np.all(fuse(Volume(np.zeros((1, 2, 2))), Volume(np.full((1, 2, 2), 2.0))).data == 1)
    assert np.allclose(fuse(Volume(3 * a.data), Volume(3 * b.data)).data, 3 * fuse(a, b).data)


def test_train_log_and_determinism(tiny_scene):
    psf, lf = tiny_scene
    r1 = train(lf, psf, TINY)
    r2 = train(lf, psf, TINY)
    assert len(r1.loss_log) == TINY.steps
    assert [e[0] for e in r1.loss_log] == [1, 2, 3]
    assert r1.loss_log == r2.loss_log
    for k in r1.params:
        assert r1.params[k].value.tobytes() == r2.params[k].value.tobytes()
    assert r1.fused.data.min() >= 0
    assert np.allclose(r1.fused.data, 0.5 * (r1.volume_a.data + r1.volume_b.data))


def test_train_bg_override(tiny_scene):
    psf, lf = tiny_scene
    r = train(lf, psf, V2vConfig(**{**TINY.__dict__, "bg_override": 0.125, "steps": 1}))
    assert r.bg_volume == 0.125


def test_train_reduces_loss(tiny_scene):
    psf, lf = tiny_scene
    r = train(lf, psf, V2vConfig(**{**TINY.__dict__, "steps": 60}), dtype=np.float64)
    assert r.loss_log[-1][1] < r.loss_log[0][1]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_overflow_aborts(tiny_scene):
    psf, lf = tiny_scene
    huge = LightField(lf.data * 1e30)
    with pytest.raises(NumericError, match="step 1"):
        train(huge, psf, TINY, dtype=np.float32)


def test_config_rejects_nan_background():
    with pytest.raises(ConfigError):
        V2vConfig(bg_override=float("nan"))
