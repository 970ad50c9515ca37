"""Parametric U-Net builder for raw-signal and spectrogram axle detectors.

The encoder is an input convolution block followed by ``pool_steps`` stages
of [residual block, max pool], the bottleneck is one more residual block,
and the decoder mirrors the encoder with [transposed convolution, skip
concatenation, convolution block] per stage. A single-filter convolution
with sigmoid activation emits one probability per input sample.

Convolution blocks are conv + ReLU + group norm; the very first group norm
uses a single group, which standardises the raw measurement, and later ones
target 16 channels per group. Residual blocks are bottleneck-style:
1x1 reduce to a quarter width, full kernel, 1x1 expand, each followed by
group norm + ReLU, with an identity (or 1x1-projected) shortcut and a ReLU
after the add.

Spectrogram inputs carry a frequency axis: encoder pooling shrinks it
(never below one bin), kernels span at most the remaining bins, skip
tensors are max-reduced over frequency before concatenation, and the head
convolution spans whatever frequency extent is left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SensorChannel
from .engine import (
    Add,
    Concat,
    Conv,
    GroupNorm,
    MaxPool,
    Network,
    ReLU,
    ReduceMaxFreq,
    Sigmoid,
    TileFreq,
    TransposedConvTime,
    groupnorm_groups,
    pad_time_to_multiple,
)
from .errors import InvalidHyperParams, ShapeMismatch
from .planner import HyperParams, InputKind, mrf

#: Frequency bins and wavelet channels of the spectrogram input tensor.
SPEC_BINS = 16
SPEC_CHANNELS = 6
#: Channel widths double per pooling level but never beyond this.
MAX_WIDTH = 256


@dataclass(frozen=True)
class VaderConfig:
    """Everything needed to build one detector instance."""

    hyper: HyperParams
    sample_rate: float = 600.0
    max_width: int = MAX_WIDTH

    @property
    def widths(self) -> tuple[int, ...]:
        """Channel width per level, level 0 through the bottleneck."""
        return tuple(
            min(self.hyper.base_width * 2**j, self.max_width)
            for j in range(self.hyper.pool_steps + 1)
        )

    @property
    def mrf(self) -> int:
        return mrf(self.hyper.kernel_size, self.hyper.pool_size, self.hyper.pool_steps)


class _Builder:
    def __init__(self, net: Network, kernel_size: int):
        self.net = net
        self.k = kernel_size
        self.counter = 0

    def _name(self, label: str) -> str:
        self.counter += 1
        return f"{self.counter:03d}_{label}"

    def conv(self, src, c_in, c_out, freq_bins, label, kf=None, kt=None, freq_padding="same"):
        kf = min(self.k, freq_bins) if kf is None else kf
        kt = self.k if kt is None else kt
        name = self._name(label)
        layer = Conv(c_in, c_out, kf, kt, freq_padding, name=name, dtype=self.net.dtype)
        return self.net.add(name, layer, [src])

    def conv_block(self, src, c_in, c_out, freq_bins, label, groups=None):
        """conv + ReLU + group norm."""
        c = self.conv(src, c_in, c_out, freq_bins, f"{label}_conv")
        r = self.net.add(self._name(f"{label}_relu"), ReLU(), [c])
        g = groups if groups is not None else groupnorm_groups(c_out)
        name = self._name(f"{label}_gn")
        return self.net.add(name, GroupNorm(c_out, g, name=name, dtype=self.net.dtype), [r])

    def _conv_gn_relu(self, src, c_in, c_out, freq_bins, label, kf=None, kt=None):
        c = self.conv(src, c_in, c_out, freq_bins, f"{label}_conv", kf=kf, kt=kt)
        name = self._name(f"{label}_gn")
        g = self.net.add(name, GroupNorm(c_out, groupnorm_groups(c_out), name=name, dtype=self.net.dtype), [c])
        return self.net.add(self._name(f"{label}_relu"), ReLU(), [g])

    def residual_block(self, src, c_in, c_out, freq_bins, label):
        """Bottleneck residual block with post-add ReLU."""
        mid = max(1, c_out // 4)
        h = self._conv_gn_relu(src, c_in, mid, freq_bins, f"{label}_reduce", kf=1, kt=1)
        h = self._conv_gn_relu(h, mid, mid, freq_bins, f"{label}_mid")
        h = self._conv_gn_relu(h, mid, c_out, freq_bins, f"{label}_expand", kf=1, kt=1)
        shortcut = src
        if c_in != c_out:
            shortcut = self.conv(src, c_in, c_out, freq_bins, f"{label}_project", kf=1, kt=1)
        a = self.net.add(self._name(f"{label}_add"), Add(), [h, shortcut])
        return self.net.add(self._name(f"{label}_relu"), ReLU(), [a])


def build_vader(cfg: VaderConfig, dtype=np.float32) -> Network:
    """Assemble the detector network described by ``cfg``.

    Raises InvalidHyperParams when the kernel does not exceed the pooling
    size (upsampling could not interpolate between pooled values).
    """
    hp = cfg.hyper
    if not hp.valid:
        raise InvalidHyperParams(
            f"kernel_size {hp.kernel_size} must exceed pool_size {hp.pool_size}"
        )
    k, m, p = hp.kernel_size, hp.pool_size, hp.pool_steps
    widths = cfg.widths
    spectro = hp.input_kind is InputKind.SPECTROGRAM
    c_in = SPEC_CHANNELS if spectro else 1
    freq = SPEC_BINS if spectro else 1

    net = Network(dtype=dtype, time_multiple=m**p)
    net.config = cfg
    b = _Builder(net, k)

    cur = b.conv_block(-1, c_in, widths[0], freq, "input", groups=1)
    skips: list[tuple[int, int]] = []  # (node, freq bins at that level)
    prev_w = widths[0]
    for level in range(p):
        rb = b.residual_block(cur, prev_w, widths[level], freq, f"enc{level}")
        skips.append((rb, freq))
        pool_f = min(m, freq)
        cur = net.add(b._name(f"enc{level}_pool"), MaxPool(pool_f, m), [rb])
        freq = -(-freq // pool_f)
        prev_w = widths[level]

    cur = b.residual_block(cur, prev_w, widths[p], freq, "bottleneck")

    for level in range(p - 1, -1, -1):
        name = b._name(f"dec{level}_up")
        up = net.add(
            name,
            TransposedConvTime(
                widths[level + 1], widths[level], min(k, freq), k, stride=m, name=name, dtype=dtype
            ),
            [cur],
        )
        skip, skip_freq = skips[level]
        if skip_freq > 1:
            skip = net.add(b._name(f"dec{level}_skipmax"), ReduceMaxFreq(), [skip])
        if freq > 1:
            skip = net.add(b._name(f"dec{level}_skiptile"), TileFreq(freq), [skip])
        cat = net.add(b._name(f"dec{level}_concat"), Concat(), [up, skip])
        cur = b.conv_block(cat, 2 * widths[level], widths[level], freq, f"dec{level}")

    head = b.conv(cur, widths[0], 1, freq, "head", kf=freq, kt=1, freq_padding="valid")
    net.add(b._name("head_sigmoid"), Sigmoid(), [head])
    return net


def network_input(channel_or_stack, dtype=np.float32) -> np.ndarray:
    """Convert a sensor channel or spectrogram stack to a (1, C, F, T) array."""
    if isinstance(channel_or_stack, SensorChannel):
        arr = channel_or_stack.samples
    else:
        arr = np.asarray(channel_or_stack)
    if arr.ndim == 1:
        return arr.reshape(1, 1, 1, -1).astype(dtype)
    if arr.ndim == 3 and arr.shape[0] == SPEC_BINS and arr.shape[1] == SPEC_CHANNELS:
        return arr.transpose(1, 0, 2)[None, ...].astype(dtype)
    raise ShapeMismatch(
        f"expected a 1-D signal or a ({SPEC_BINS}, {SPEC_CHANNELS}, n) stack, got shape {arr.shape}"
    )


def infer(network: Network, channel_or_stack) -> np.ndarray:
    """Probability of an axle above the sensor, one value per input sample."""
    x = network_input(channel_or_stack, dtype=network.dtype)
    n = x.shape[-1]
    x = pad_time_to_multiple(x, network.time_multiple)
    y = network.forward(x, valid=np.array([n]))
    return y[0, 0, 0, :n]


def max_kernel_time_span(network: Network) -> int:
    """Widest original-sample span any single kernel in the graph covers.

    Walks the concrete layer graph, tracking how many original samples one
    position represents at each node; independent of the closed-form
    receptive-field arithmetic it is checked against.
    """
    coverage = {-1: 1}
    widest = 1
    for i, node in enumerate(network.nodes):
        c = max(coverage[j] for j in node.inputs)
        layer = node.layer
        if isinstance(layer, Conv):
            widest = max(widest, layer.kt * c)
        elif isinstance(layer, MaxPool):
            widest = max(widest, layer.pool_t * c)
            c *= layer.pool_t
        elif isinstance(layer, TransposedConvTime):
            widest = max(widest, layer.kt * c)
            c //= layer.stride
        coverage[i] = c
    return widest


def model_manifest(network: Network, cfg: VaderConfig) -> dict:
    """JSON-ready description of one built model."""
    return {
        "input_kind": cfg.hyper.input_kind.value,
        "kernel_size": cfg.hyper.kernel_size,
        "pool_size": cfg.hyper.pool_size,
        "pool_steps": cfg.hyper.pool_steps,
        "base_width": cfg.hyper.base_width,
        "max_width": cfg.max_width,
        "sample_rate": cfg.sample_rate,
        "mrf": cfg.mrf,
        "param_count": network.param_count(),
        "layers": [
            {"name": n.name, "kind": n.layer.kind, "inputs": n.inputs, **n.layer.config()}
            for n in network.nodes
        ],
    }
