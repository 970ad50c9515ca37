"""Deterministic reverse-mode NN engine over (batch, channel, freq, time) arrays.

Activations are dense ndarrays of shape ``(N, C, F, T)``; 1-D signals ride
along with ``F == 1``. Every sample in a batch carries a *valid* time length
so shorter signals can be zero-padded to the batch maximum without changing
their result: after every node the padded tail is forced back to zero, group
statistics count only valid positions, and gradients at padded positions are
exactly zero. A batched forward therefore replicates per-sample forwards up
to summation rounding (ulp level; only reduction trees differ).

Layers are stateless between calls: ``forward`` returns an opaque cache that
``backward`` consumes, so inference (``want_cache=False``) is reentrant and
training owns its parameters exclusively.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import MissingForwardCache, ShapeMismatch

__all__ = [
    "Param",
    "Layer",
    "Conv",
    "TransposedConvTime",
    "MaxPool",
    "GroupNorm",
    "ReLU",
    "Sigmoid",
    "Concat",
    "Add",
    "ReduceMaxFreq",
    "TileFreq",
    "Network",
    "zero_invalid",
    "pad_time_to_multiple",
    "groupnorm_groups",
]

#: Sigmoid outputs are clipped into this open interval so the probability
#: contract stays strict even where float arithmetic would saturate.
SIGMOID_EPS = 1e-7


class Param:
    """One trainable array with its gradient buffer."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape


def zero_invalid(arr: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Zero the padded time tail of each sample in place."""
    T = arr.shape[-1]
    for n, v in enumerate(valid):
        if v < T:
            arr[n, ..., v:] = 0
    return arr


def pad_time_to_multiple(x: np.ndarray, multiple: int) -> np.ndarray:
    T = x.shape[-1]
    rem = T % multiple
    if rem == 0:
        return x
    pad = [(0, 0)] * (x.ndim - 1) + [(0, multiple - rem)]
    return np.pad(x, pad)


def groupnorm_groups(channels: int) -> int:
    """Group count targeting 16 channels per group; single group for narrow
    layers, largest divisor otherwise."""
    g = max(1, channels // 16)
    while channels % g:
        g -= 1
    return g


def _conv_core(x, weight, pf_lo, pf_hi, pt_lo, pt_hi):
    """Stride-1 2D correlation of (N,C,F,T) with (Cout,Cin,KF,KT) weights."""
    c_out, c_in, kf, kt = weight.shape
    if x.shape[1] != c_in:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, kernel expects {c_in}")
    xp = np.pad(x, ((0, 0), (0, 0), (pf_lo, pf_hi), (pt_lo, pt_hi)))
    N, _, Fp, Tp = xp.shape
    if Fp < kf or Tp < kt:
        raise ShapeMismatch(f"padded input {Fp}x{Tp} smaller than kernel {kf}x{kt}")
    fo, to = Fp - kf + 1, Tp - kt + 1
    if kf == 1 and kt == 1:
        cols = xp.transpose(0, 2, 3, 1).reshape(N * fo * to, c_in)
    else:
        win = sliding_window_view(xp, (kf, kt), axis=(2, 3))
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(N * fo * to, c_in * kf * kt)
    y = cols @ weight.reshape(c_out, -1).T
    return y.reshape(N, fo, to, c_out).transpose(0, 3, 1, 2), cols


class Layer:
    kind = "layer"

    def params(self) -> list[Param]:
        return []

    def config(self) -> dict:
        return {}

    def out_valid(self, valids):
        return valids[0]

    def forward(self, xs, valids, want_cache):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError


def _require(cache):
    if cache is None:
        raise MissingForwardCache("backward() needs a forward() pass with want_cache=True")
    return cache


class Conv(Layer):
    """Stride-1 convolution, 'same' on time (odd kernels), 'same' or 'valid'
    on frequency."""

    kind = "conv"

    def __init__(self, c_in, c_out, kf, kt, freq_padding="same", name="conv", dtype=np.float32):
        if kt % 2 != 1:
            raise ValueError(f"time kernel extent must be odd, got {kt}")
        if freq_padding not in ("same", "valid"):
            raise ValueError(freq_padding)
        self.c_in, self.c_out, self.kf, self.kt = c_in, c_out, kf, kt
        self.freq_padding = freq_padding
        self.name = name
        self.weight = Param(f"{name}.weight", np.zeros((c_out, c_in, kf, kt), dtype=dtype))
        self.bias = Param(f"{name}.bias", np.zeros(c_out, dtype=dtype))

    def init(self, rng):
        fan_in = self.c_in * self.kf * self.kt
        bound = np.sqrt(6.0 / fan_in)
        self.weight.value[...] = rng.uniform(-bound, bound, self.weight.shape)

    def params(self):
        return [self.weight, self.bias]

    def config(self):
        return {
            "c_in": self.c_in,
            "c_out": self.c_out,
            "kernel": [self.kf, self.kt],
            "freq_padding": self.freq_padding,
        }

    def _pads(self):
        pt = (self.kt - 1) // 2
        if self.freq_padding == "same":
            return (self.kf - 1) // 2, self.kf // 2, pt, pt
        return 0, 0, pt, pt

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        pf_lo, pf_hi, pt_lo, pt_hi = self._pads()
        y, _ = _conv_core(x, self.weight.value, pf_lo, pf_hi, pt_lo, pt_hi)
        y += self.bias.value[None, :, None, None]
        cache = x if want_cache else None
        return y, valids[0], cache

    def backward(self, cache, dy):
        x = _require(cache)
        pf_lo, pf_hi, pt_lo, pt_hi = self._pads()
        xp = np.pad(x, ((0, 0), (0, 0), (pf_lo, pf_hi), (pt_lo, pt_hi)))
        N, _, Fp, Tp = xp.shape
        kf, kt = self.kf, self.kt
        fo, to = Fp - kf + 1, Tp - kt + 1
        if kf == 1 and kt == 1:
            cols = xp.transpose(0, 2, 3, 1).reshape(N * fo * to, self.c_in)
        else:
            win = sliding_window_view(xp, (kf, kt), axis=(2, 3))
            cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(N * fo * to, self.c_in * kf * kt)
        dy_mat = dy.transpose(0, 2, 3, 1).reshape(-1, self.c_out)
        self.weight.grad += (dy_mat.T @ cols).reshape(self.weight.shape)
        self.bias.grad += dy.sum(axis=(0, 2, 3))
        w_flip = np.ascontiguousarray(self.weight.value[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        dx, _ = _conv_core(dy, w_flip, kf - 1 - pf_lo, kf - 1 - pf_hi, kt - 1 - pt_lo, kt - 1 - pt_hi)
        return [dx]


class TransposedConvTime(Layer):
    """Transposed convolution upsampling the time axis by ``stride``;
    frequency is processed stride-1 with 'same' padding."""

    kind = "transposed_conv"

    def __init__(self, c_in, c_out, kf, kt, stride, name="tconv", dtype=np.float32):
        if stride < 2:
            raise ValueError(f"stride must be >= 2, got {stride}")
        self.c_in, self.c_out, self.kf, self.kt, self.stride = c_in, c_out, kf, kt, stride
        self.name = name
        self.weight = Param(f"{name}.weight", np.zeros((c_out, c_in, kf, kt), dtype=dtype))
        self.bias = Param(f"{name}.bias", np.zeros(c_out, dtype=dtype))

    def init(self, rng):
        fan_in = self.c_in * self.kf * self.kt
        bound = np.sqrt(6.0 / fan_in)
        self.weight.value[...] = rng.uniform(-bound, bound, self.weight.shape)

    def params(self):
        return [self.weight, self.bias]

    def config(self):
        return {
            "c_in": self.c_in,
            "c_out": self.c_out,
            "kernel": [self.kf, self.kt],
            "stride": self.stride,
        }

    def _pads(self):
        pf_lo, pf_hi = (self.kf - 1) // 2, self.kf // 2
        total_t = self.kt + self.stride - 2
        pt_lo = total_t // 2
        return pf_lo, pf_hi, pt_lo, total_t - pt_lo

    def _stuff(self, x):
        N, C, F, T = x.shape
        stuffed = np.zeros((N, C, F, (T - 1) * self.stride + 1), dtype=x.dtype)
        stuffed[..., :: self.stride] = x
        return stuffed

    def out_valid(self, valids):
        return valids[0] * self.stride

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        stuffed = self._stuff(x)
        pf_lo, pf_hi, pt_lo, pt_hi = self._pads()
        y, _ = _conv_core(stuffed, self.weight.value, pf_lo, pf_hi, pt_lo, pt_hi)
        y += self.bias.value[None, :, None, None]
        cache = stuffed if want_cache else None
        return y, valids[0] * self.stride, cache

    def backward(self, cache, dy):
        stuffed = _require(cache)
        pf_lo, pf_hi, pt_lo, pt_hi = self._pads()
        kf, kt = self.kf, self.kt
        xp = np.pad(stuffed, ((0, 0), (0, 0), (pf_lo, pf_hi), (pt_lo, pt_hi)))
        N, _, Fp, Tp = xp.shape
        fo, to = Fp - kf + 1, Tp - kt + 1
        win = sliding_window_view(xp, (kf, kt), axis=(2, 3))
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(N * fo * to, self.c_in * kf * kt)
        dy_mat = dy.transpose(0, 2, 3, 1).reshape(-1, self.c_out)
        self.weight.grad += (dy_mat.T @ cols).reshape(self.weight.shape)
        self.bias.grad += dy.sum(axis=(0, 2, 3))
        w_flip = np.ascontiguousarray(self.weight.value[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        dstuffed, _ = _conv_core(
            dy, w_flip, kf - 1 - pf_lo, kf - 1 - pf_hi, kt - 1 - pt_lo, kt - 1 - pt_hi
        )
        return [dstuffed[..., :: self.stride]]


class MaxPool(Layer):
    """Max pooling; time extent must divide the padded input, frequency is
    ceil-padded with the dtype minimum."""

    kind = "max_pool"

    def __init__(self, pool_f, pool_t, name="pool"):
        self.pool_f, self.pool_t = pool_f, pool_t
        self.name = name

    def config(self):
        return {"pool": [self.pool_f, self.pool_t]}

    def out_valid(self, valids):
        return -(-valids[0] // self.pool_t)

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        N, C, F, T = x.shape
        pf, pt = self.pool_f, self.pool_t
        if T % pt:
            raise ShapeMismatch(f"time length {T} not divisible by pool size {pt}")
        fpad = (-F) % pf
        if fpad:
            x = np.pad(x, ((0, 0), (0, 0), (0, fpad), (0, 0)), constant_values=np.finfo(x.dtype).min)
        Fp = F + fpad
        win = x.reshape(N, C, Fp // pf, pf, T // pt, pt).transpose(0, 1, 2, 4, 3, 5)
        win = win.reshape(N, C, Fp // pf, T // pt, pf * pt)
        arg = win.argmax(axis=-1)
        y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
        cache = (arg, (N, C, F, T, fpad)) if want_cache else None
        return y, self.out_valid(valids), cache

    def backward(self, cache, dy):
        arg, (N, C, F, T, fpad) = _require(cache)
        pf, pt = self.pool_f, self.pool_t
        Fp = F + fpad
        onehot = arg[..., None] == np.arange(pf * pt)
        dwin = onehot * dy[..., None]
        dx = (
            dwin.reshape(N, C, Fp // pf, T // pt, pf, pt)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(N, C, Fp, T)
        )
        if fpad:
            dx = dx[:, :, :F, :]
        return [np.ascontiguousarray(dx)]


class GroupNorm(Layer):
    """Per-sample, per-group normalisation over (channels-in-group, F, valid T)
    with a trainable per-channel affine map."""

    kind = "group_norm"

    def __init__(self, channels, groups, eps=1e-5, name="gn", dtype=np.float32):
        if channels % groups:
            raise ValueError(f"channels {channels} not divisible by groups {groups}")
        self.channels, self.groups, self.eps = channels, groups, eps
        self.name = name
        self.gamma = Param(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = Param(f"{name}.beta", np.zeros(channels, dtype=dtype))

    def params(self):
        return [self.gamma, self.beta]

    def config(self):
        return {"channels": self.channels, "groups": self.groups, "eps": self.eps}

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        valid = valids[0]
        N, C, F, T = x.shape
        if C != self.channels:
            raise ShapeMismatch(f"expected {self.channels} channels, got {C}")
        g, cg = self.groups, C // self.groups
        xg = x.reshape(N, g, cg, F, T)
        count = (valid.astype(np.int64) * cg * F).reshape(N, 1)
        # padded tails are zero, so full-axis sums equal valid-position sums
        s1 = xg.sum(axis=(2, 3, 4))
        s2 = (xg * xg).sum(axis=(2, 3, 4))
        mean = s1 / count
        var = np.maximum(s2 / count - mean * mean, 0.0)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (xg - mean[:, :, None, None, None]) * inv_std[:, :, None, None, None]
        xhat = xhat.reshape(N, C, F, T)
        y = xhat * self.gamma.value[None, :, None, None] + self.beta.value[None, :, None, None]
        cache = (x, mean, inv_std, valid) if want_cache else None
        return y, valid, cache

    def backward(self, cache, dy):
        x, mean, inv_std, valid = _require(cache)
        N, C, F, T = x.shape
        g, cg = self.groups, C // self.groups
        count = (valid.astype(x.dtype) * cg * F).reshape(N, 1)
        xc = x.reshape(N, g, cg, F, T) - mean[:, :, None, None, None]
        xhat = xc * inv_std[:, :, None, None, None]
        self.gamma.grad += (dy * xhat.reshape(N, C, F, T)).sum(axis=(0, 2, 3))
        self.beta.grad += dy.sum(axis=(0, 2, 3))
        dxhat = (dy * self.gamma.value[None, :, None, None]).reshape(N, g, cg, F, T)
        # dy is zero on padded tails, so these sums run over valid positions
        s_d = dxhat.sum(axis=(2, 3, 4))
        s_dx = (dxhat * xhat).sum(axis=(2, 3, 4))
        dx = (
            dxhat
            - (s_d / count)[:, :, None, None, None]
            - xhat * (s_dx / count)[:, :, None, None, None]
        ) * inv_std[:, :, None, None, None]
        dx = dx.reshape(N, C, F, T)
        return [zero_invalid(dx, valid)]


class ReLU(Layer):
    kind = "relu"

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        y = np.maximum(x, 0)
        cache = (x > 0) if want_cache else None
        return y, valids[0], cache

    def backward(self, cache, dy):
        pos = _require(cache)
        return [dy * pos]


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        np.clip(y, SIGMOID_EPS, 1.0 - SIGMOID_EPS, out=y)
        cache = y if want_cache else None
        return y, valids[0], cache

    def backward(self, cache, dy):
        y = _require(cache)
        return [dy * y * (1.0 - y)]


class Concat(Layer):
    """Channel concatenation; inputs must agree on (N, F, T)."""

    kind = "concat"

    def out_valid(self, valids):
        return np.minimum.reduce(valids)

    def forward(self, xs, valids, want_cache):
        base = xs[0].shape
        for x in xs[1:]:
            if x.shape[0] != base[0] or x.shape[2:] != base[2:]:
                raise ShapeMismatch(f"concat inputs disagree: {base} vs {x.shape}")
        y = np.concatenate(xs, axis=1)
        cache = [x.shape[1] for x in xs] if want_cache else None
        return y, self.out_valid(valids), cache

    def backward(self, cache, dy):
        widths = _require(cache)
        out, start = [], 0
        for w in widths:
            out.append(np.ascontiguousarray(dy[:, start : start + w]))
            start += w
        return out


class Add(Layer):
    kind = "add"

    def out_valid(self, valids):
        return np.minimum.reduce(valids)

    def forward(self, xs, valids, want_cache):
        a, b = xs
        if a.shape != b.shape:
            raise ShapeMismatch(f"add inputs disagree: {a.shape} vs {b.shape}")
        return a + b, self.out_valid(valids), ()

    def backward(self, cache, dy):
        return [dy, dy.copy()]


class ReduceMaxFreq(Layer):
    """Collapse the frequency axis to a single bin by max."""

    kind = "reduce_max_freq"

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        arg = x.argmax(axis=2)
        y = np.take_along_axis(x, arg[:, :, None, :], axis=2)
        cache = (arg, x.shape) if want_cache else None
        return y, valids[0], cache

    def backward(self, cache, dy):
        arg, shape = _require(cache)
        onehot = arg[:, :, None, :] == np.arange(shape[2])[None, None, :, None]
        return [onehot * dy]


class TileFreq(Layer):
    """Repeat a single-bin frequency axis ``reps`` times."""

    kind = "tile_freq"

    def __init__(self, reps):
        self.reps = reps

    def config(self):
        return {"reps": self.reps}

    def forward(self, xs, valids, want_cache):
        (x,) = xs
        if x.shape[2] != 1:
            raise ShapeMismatch(f"tile expects one frequency bin, got {x.shape[2]}")
        return np.repeat(x, self.reps, axis=2), valids[0], ()

    def backward(self, cache, dy):
        return [dy.sum(axis=2, keepdims=True)]


class Node:
    __slots__ = ("name", "layer", "inputs")

    def __init__(self, name, layer, inputs):
        self.name = name
        self.layer = layer
        self.inputs = inputs  # node indices; -1 is the network input


class Network:
    """A topologically ordered DAG of layers with a single input and output.

    ``time_multiple`` records the pooling product the input length must be
    padded to before calling :meth:`forward`.
    """

    def __init__(self, dtype=np.float32, time_multiple=1):
        self.nodes: list[Node] = []
        self.dtype = dtype
        self.time_multiple = time_multiple

    def add(self, name: str, layer: Layer, inputs) -> int:
        self.nodes.append(Node(name, layer, list(inputs)))
        return len(self.nodes) - 1

    def params(self) -> list[Param]:
        out = []
        for node in self.nodes:
            out.extend(node.layer.params())
        return out

    def zero_grads(self) -> None:
        for p in self.params():
            p.grad[...] = 0

    def param_count(self) -> int:
        return int(sum(p.value.size for p in self.params()))

    def init_params(self, seed: int) -> None:
        ss = np.random.SeedSequence(seed)
        children = ss.spawn(len(self.nodes))
        for node, child in zip(self.nodes, children):
            if hasattr(node.layer, "init"):
                node.layer.init(np.random.Generator(np.random.PCG64(child)))

    def forward(self, x: np.ndarray, valid=None, want_cache=False):
        """Run the graph; returns the output array, and with ``want_cache``
        a context to hand to :meth:`backward`."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        if x.ndim != 4:
            raise ShapeMismatch(f"expected (N, C, F, T) input, got shape {x.shape}")
        if x.shape[-1] % self.time_multiple:
            raise ShapeMismatch(
                f"time length {x.shape[-1]} not a multiple of {self.time_multiple}"
            )
        if valid is None:
            valid = np.full(x.shape[0], x.shape[-1], dtype=np.int64)
        else:
            valid = np.asarray(valid, dtype=np.int64)
        x = zero_invalid(x.copy() if not x.flags.writeable else x, valid)
        acts: dict[int, np.ndarray] = {-1: x}
        valids: dict[int, np.ndarray] = {-1: valid}
        caches: list = []
        for i, node in enumerate(self.nodes):
            xs = [acts[j] for j in node.inputs]
            vs = [valids[j] for j in node.inputs]
            y, v, cache = node.layer.forward(xs, vs, want_cache)
            zero_invalid(y, v)
            acts[i] = y
            valids[i] = v
            caches.append(cache)
        out = acts[len(self.nodes) - 1]
        if not want_cache:
            return out
        return out, _Context(acts, valids, caches)

    def backward(self, ctx, dy: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; returns the input gradient."""
        if ctx is None:
            raise MissingForwardCache("no forward context")
        grads: dict[int, np.ndarray] = {len(self.nodes) - 1: np.asarray(dy, dtype=self.dtype)}
        dinput = None
        for i in range(len(self.nodes) - 1, -1, -1):
            g = grads.pop(i, None)
            if g is None:
                continue
            zero_invalid(g, ctx.valids[i])
            node = self.nodes[i]
            dxs = node.layer.backward(ctx.caches[i], g)
            for j, dx in zip(node.inputs, dxs):
                if j < 0:
                    dinput = dx if dinput is None else dinput + dx
                elif j in grads:
                    grads[j] += dx
                else:
                    grads[j] = dx
        if dinput is not None:
            zero_invalid(dinput, ctx.valids[-1])
        return dinput


class _Context:
    __slots__ = ("acts", "valids", "caches")

    def __init__(self, acts, valids, caches):
        self.acts = acts
        self.valids = valids
        self.caches = caches
