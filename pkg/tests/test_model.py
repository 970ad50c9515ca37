"""Detector builder tests: architecture echoes, shapes, inference contract."""

import numpy as np
import pytest

from vader.cwt import spectrogram_stack
from vader.engine import Conv
from vader.errors import InvalidHyperParams, ShapeMismatch
from vader.model import (
    VaderConfig,
    build_vader,
    infer,
    max_kernel_time_span,
    model_manifest,
    network_input,
)
from vader.planner import HyperParams, InputKind

RNG = np.random.default_rng(0)


def _cfg(kind=InputKind.RAW, k=9, m=2, p=4, base=16):
    return VaderConfig(HyperParams(kind, k, m, p, base_width=base))


def test_invalid_hyperparams_rejected():
    with pytest.raises(InvalidHyperParams):
        build_vader(_cfg(k=3, m=4, p=3))
    with pytest.raises(InvalidHyperParams):
        build_vader(_cfg(k=3, m=3, p=3))


@pytest.mark.parametrize(
    "kind,k,m,p",
    [
        (InputKind.RAW, 9, 2, 4),
        (InputKind.RAW, 9, 3, 4),
        (InputKind.RAW, 5, 2, 2),
        (InputKind.RAW, 13, 4, 3),
        (InputKind.SPECTROGRAM, 9, 2, 4),
        (InputKind.SPECTROGRAM, 9, 3, 4),
        (InputKind.SPECTROGRAM, 9, 2, 3),
        (InputKind.SPECTROGRAM, 7, 5, 3),
    ],
)
def test_walker_echoes_receptive_field_formula(kind, k, m, p):
    cfg = _cfg(kind, k, m, p, base=4)
    net = build_vader(cfg)
    assert max_kernel_time_span(net) == k * m**p == cfg.mrf


def test_param_count_is_locked():
    golden = {
        (InputKind.RAW, 2): 912633,
        (InputKind.RAW, 3): 912633,
        (InputKind.SPECTROGRAM, 2): 941577,
        (InputKind.SPECTROGRAM, 3): 926601,
    }
    for (kind, m), expect in golden.items():
        net = build_vader(_cfg(kind, 9, m, 4, base=16))
        assert net.param_count() == expect, (kind, m)


def test_widths_double_and_cap():
    cfg = _cfg(base=16, p=4)
    assert cfg.widths == (16, 32, 64, 128, 256)
    wide = VaderConfig(HyperParams(InputKind.RAW, 9, 2, 6, base_width=16))
    assert wide.widths == (16, 32, 64, 128, 256, 256, 256)


def test_raw_infer_range_and_length():
    net = build_vader(_cfg(k=5, m=2, p=2, base=4))
    net.init_params(3)
    for n in (64, 100, 355):
        probs = infer(net, RNG.normal(size=n))
        assert probs.shape == (n,)
        assert probs.min() > 0.0 and probs.max() < 1.0


def test_fcn_doubling_without_rebuild():
    net = build_vader(_cfg(k=5, m=2, p=2, base=4))
    net.init_params(3)
    x = RNG.normal(size=96)
    assert infer(net, x).shape == (96,)
    assert infer(net, np.tile(x, 2)).shape == (192,)


def test_first_groupnorm_single_group():
    net = build_vader(_cfg(base=16))
    gns = [n.layer for n in net.nodes if n.layer.kind == "group_norm"]
    assert gns[0].groups == 1
    # all later group norms target 16 channels per group
    for gn in gns[1:]:
        assert gn.groups == max(1, gn.channels // 16)


def test_spectrogram_kernel_extents():
    net = build_vader(_cfg(InputKind.SPECTROGRAM, k=9, m=2, p=4))
    by_name = {n.name: n.layer for n in net.nodes}
    first_conv = next(l for n, l in sorted(by_name.items()) if isinstance(l, Conv))
    assert (first_conv.kf, first_conv.kt) == (9, 9)
    enc1_mid = next(l for n, l in by_name.items() if "enc1_mid_conv" in n)
    assert (enc1_mid.kf, enc1_mid.kt) == (8, 9)  # frequency halved to 8 bins


def test_spectrogram_infer_shape():
    net = build_vader(_cfg(InputKind.SPECTROGRAM, k=9, m=2, p=3, base=4))
    net.init_params(5)
    stack = spectrogram_stack(RNG.normal(size=250))
    probs = infer(net, stack)
    assert probs.shape == (250,)
    assert probs.min() > 0.0 and probs.max() < 1.0


def test_network_input_shapes():
    assert network_input(np.zeros(10)).shape == (1, 1, 1, 10)
    assert network_input(np.zeros((16, 6, 20))).shape == (1, 6, 16, 20)
    with pytest.raises(ShapeMismatch):
        network_input(np.zeros((4, 4, 20)))


def test_manifest_contents():
    cfg = _cfg(k=9, m=2, p=4, base=8)
    net = build_vader(cfg)
    manifest = model_manifest(net, cfg)
    assert manifest["mrf"] == 144
    assert manifest["param_count"] == net.param_count()
    assert manifest["kernel_size"] == 9
    kinds = {layer["kind"] for layer in manifest["layers"]}
    assert {"conv", "max_pool", "group_norm", "relu", "sigmoid", "concat", "add", "transposed_conv"} <= kinds


def test_batched_forward_matches_single_on_detector():
    """Zero-padded batching through the full detector reproduces per-sample
    inference within float32 rounding."""
    net = build_vader(_cfg(k=5, m=2, p=2, base=4))
    net.init_params(9)
    a = RNG.normal(size=90).astype(np.float32)
    b = RNG.normal(size=128).astype(np.float32)
    xb = np.zeros((2, 1, 1, 128), dtype=np.float32)
    xb[0, 0, 0, :90] = a
    xb[1, 0, 0, :] = b
    yb = net.forward(xb, valid=np.array([90, 128]))
    assert np.allclose(yb[0, 0, 0, :90], infer(net, a), atol=2e-6)
    assert np.allclose(yb[1, 0, 0, :], infer(net, b), atol=2e-6)
