"""Checkpoint format: flat little-endian float64 binary plus a JSON manifest.

The manifest records the layer topology, parameter shapes, optimizer step
counter and the RNG seed the run started from. Values are widened to
float64 on save and narrowed back on load, which is lossless for float32
training, so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatch
from .layers import Network
from .optim import ParamStore

MAGIC = "vader-checkpoint"
VERSION = 1


def _manifest(network: Network, store: ParamStore | None, seed) -> dict:
    return {
        "format": MAGIC,
        "version": VERSION,
        "seed": seed,
        "dtype": np.dtype(network.dtype).name,
        "step": 0 if store is None else store.step_count,
        "has_adam": store is not None,
        "layers": [
            {"name": n.name, "kind": n.layer.kind, "inputs": n.inputs, **n.layer.config()}
            for n in network.nodes
        ],
        "params": [{"name": p.name, "shape": list(p.shape)} for p in network.params()],
    }


def checkpoint_blobs(network: Network, store: ParamStore | None = None, seed=None):
    """(manifest_json, binary) for the current parameter state."""
    manifest = _manifest(network, store, seed)
    buf = io.BytesIO()
    for p in network.params():
        buf.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    if store is not None:
        for arrs in (store.m, store.v):
            for a in arrs:
                buf.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return json.dumps(manifest, indent=1, sort_keys=True), buf.getvalue()


def checkpoint_bytes(network: Network, store: ParamStore | None = None, seed=None) -> bytes:
    """Single byte string (manifest + binary) suitable for hashing."""
    manifest, binary = checkpoint_blobs(network, store, seed)
    return manifest.encode("utf-8") + b"\x00" + binary


def save_checkpoint(stem, network: Network, store: ParamStore | None = None, seed=None) -> Path:
    """Write ``<stem>.json`` and ``<stem>.bin``; returns the manifest path."""
    stem = Path(stem)
    manifest, binary = checkpoint_blobs(network, store, seed)
    stem.parent.mkdir(parents=True, exist_ok=True)
    json_path = stem.with_suffix(".json")
    json_path.write_text(manifest + "\n", encoding="utf-8")
    stem.with_suffix(".bin").write_bytes(binary)
    return json_path


def load_checkpoint(stem, network: Network, store: ParamStore | None = None) -> dict:
    """Restore parameters (and moments, if present) into ``network``.

    The target network must match the manifest's topology; returns the
    manifest dict.
    """
    stem = Path(stem)
    manifest = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    if manifest.get("format") != MAGIC:
        raise ShapeMismatch(f"{stem}: not a checkpoint manifest")
    params = network.params()
    recorded = manifest["params"]
    if len(recorded) != len(params) or any(
        list(p.shape) != r["shape"] or p.name != r["name"] for p, r in zip(params, recorded)
    ):
        raise ShapeMismatch(f"{stem}: checkpoint does not match the network topology")
    raw = stem.with_suffix(".bin").read_bytes()
    flat = np.frombuffer(raw, dtype="<f8")
    sizes = [p.value.size for p in params]
    need = sum(sizes) * (3 if manifest["has_adam"] else 1)
    if flat.size != need:
        raise ShapeMismatch(f"{stem}: expected {need} values, found {flat.size}")

    def take(offset, target):
        for arr, size in zip(target, sizes):
            chunk = flat[offset : offset + size].reshape(arr.shape)
            arr[...] = chunk.astype(arr.dtype)
            offset += size
        return offset

    offset = take(0, [p.value for p in params])
    if manifest["has_adam"]:
        if store is None:
            raise ShapeMismatch(f"{stem}: checkpoint has optimizer state but no store given")
        offset = take(offset, store.m)
        take(offset, store.v)
        store.step_count = int(manifest["step"])
    return manifest
