"""Versioned binary checkpoint container shared by the network and baselines.

Layout (all integers unsigned 32-bit little-endian, floats 64-bit
little-endian, arrays row-major):

    magic b"CDMS" | version | kind
    kind 0 (mlp):    n_layers | dims[n_layers+1] | dropout f64
                     | has_normalizer u32 | [lo f64*n_in | hi f64*n_in]
                     | per layer: W (n_in*n_out f64) | b (n_out f64)
    kind 1 (linear): feature_map (0 identity, 1 poly2) | n_in | n_out
                     | coef (arity*n_out f64) | intercept (n_out f64)

Loading rejects wrong magic, unknown versions, short files, and trailing
bytes, each with its own exception type.
"""

from __future__ import annotations

import struct

import numpy as np

from .baselines import FEATURE_MAPS, LinearModel, feature_arity
from .dataset import Normalizer
from .mlp import MlpModel

MAGIC = b"CDMS"
FORMAT_VERSION = 1
_KIND_MLP = 0
_KIND_LINEAR = 1


class CheckpointError(Exception):
    """Base class for checkpoint read failures."""


class BadMagic(CheckpointError):
    pass


class UnsupportedVersion(CheckpointError):
    pass


class TruncatedCheckpoint(CheckpointError):
    pass


def _u32(*values) -> bytes:
    return struct.pack("<%dI" % len(values), *values)


def _f64(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_model(model, path) -> None:
    """Serialize an MlpModel or LinearModel; bytes are a pure function of the model."""
    chunks = [MAGIC, _u32(FORMAT_VERSION)]
    if isinstance(model, MlpModel):
        dims = model.dims
        chunks.append(_u32(_KIND_MLP, len(model.weights), *dims))
        chunks.append(struct.pack("<d", model.dropout_rate))
        if model.normalizer is not None:
            chunks.append(_u32(1))
            chunks.append(_f64(model.normalizer.lo))
            chunks.append(_f64(model.normalizer.hi))
        else:
            chunks.append(_u32(0))
        for w, b in zip(model.weights, model.biases):
            chunks.append(_f64(w))
            chunks.append(_f64(b))
    elif isinstance(model, LinearModel):
        kind_tag = FEATURE_MAPS.index(model.feature_map)
        n_in, n_out = 8, model.intercept.size
        chunks.append(_u32(_KIND_LINEAR, kind_tag, n_in, n_out))
        chunks.append(_f64(model.coef))
        chunks.append(_f64(model.intercept))
    else:
        raise TypeError(f"cannot checkpoint object of type {type(model).__name__}")
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpoint(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack("<%dI" % count, self.take(4 * count))
        return vals[0] if count == 1 else vals

    def f64(self, count: int):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise CheckpointError(f"{len(self.data) - self.pos} trailing bytes")


def load_model(path):
    """Load a checkpoint, returning an MlpModel or LinearModel."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != MAGIC:
        raise BadMagic("not a model checkpoint (bad magic)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format version {version}, expected {FORMAT_VERSION}")
    kind = r.u32()
    if kind == _KIND_MLP:
        n_layers = r.u32()
        dims = r.u32(n_layers + 1)
        dims = (dims,) if n_layers == 0 else dims
        (dropout,) = struct.unpack("<d", r.take(8))
        normalizer = None
        if r.u32():
            lo = r.f64(dims[0])
            hi = r.f64(dims[0])
            normalizer = Normalizer(lo=lo, hi=hi)
        weights, biases = [], []
        for n_in, n_out in zip(dims[:-1], dims[1:]):
            weights.append(r.f64(n_in * n_out).reshape(n_in, n_out))
            biases.append(r.f64(n_out))
        r.done()
        return MlpModel(weights=weights, biases=biases, dropout_rate=dropout,
                        normalizer=normalizer, format_version=version)
    if kind == _KIND_LINEAR:
        tag = r.u32()
        if tag >= len(FEATURE_MAPS):
            raise CheckpointError(f"unknown feature-map tag {tag}")
        feature_map = FEATURE_MAPS[tag]
        n_in = r.u32()
        n_out = r.u32()
        arity = feature_arity(feature_map, n_in)
        coef = r.f64(arity * n_out).reshape(arity, n_out)
        intercept = r.f64(n_out)
        r.done()
        return LinearModel(coef=coef, intercept=intercept, feature_map=feature_map)
    raise CheckpointError(f"unknown model kind {kind}")
