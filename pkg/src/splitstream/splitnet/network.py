"""Network description, forward/backward execution, and the SNET file format.

A network is an ordered list of layer specs with a fixed input shape.
Inference runs in float32; training and gradient evaluation run in float64.
Weights are held in float64 in memory and narrowed to float32 when written
to disk, so a saved and reloaded network reproduces its file bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import BinaryIO, Optional

import numpy as np

from ..tensor import FeatureTensor
from . import layers as L

KIND_CONV = "conv"
KIND_MAXPOOL = "maxpool"
KIND_LEAKY_RELU = "leaky_relu"
KIND_FLATTEN = "flatten"
KIND_DENSE = "dense"
KIND_SOFTMAX = "softmax"

_KIND_CODES = {
    KIND_CONV: 1,
    KIND_MAXPOOL: 2,
    KIND_LEAKY_RELU: 3,
    KIND_FLATTEN: 4,
    KIND_DENSE: 5,
    KIND_SOFTMAX: 6,
}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

SNET_MAGIC = b"SNET"
SNET_VERSION = 1
_SNET_HEADER = struct.Struct("<4sBBIIIII")
_CONV_REC = struct.Struct("<BIIBB")
_DENSE_REC = struct.Struct("<II")

DEFAULT_LEAKY_SLOPE = 0.1


class NetworkFormatError(ValueError):
    """Malformed or truncated SNET data."""


@dataclass
class LayerSpec:
    """One layer: a kind tag plus whatever parameters that kind needs."""

    kind: str
    kernel: int = 0
    in_channels: int = 0
    out_channels: int = 0
    stride: int = 1
    same_pad: bool = True
    in_width: int = 0
    out_width: int = 0
    slope: float = DEFAULT_LEAKY_SLOPE
    weights: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None

    def copy(self) -> "LayerSpec":
        return replace(
            self,
            weights=None if self.weights is None else self.weights.copy(),
            bias=None if self.bias is None else self.bias.copy(),
        )


@dataclass
class NetworkSpec:
    layers: list
    input_shape: tuple      # (rows, cols, channels)
    class_count: int

    def __post_init__(self) -> None:
        if len(self.layers) < 2:
            raise ValueError("network needs at least 2 layers")
        if not any(l.kind == KIND_MAXPOOL for l in self.layers):
            raise ValueError("network needs at least one maxpool layer")
        infer_shapes(self)  # raises if the chain is inconsistent

    def copy(self) -> "NetworkSpec":
        return NetworkSpec(layers=[l.copy() for l in self.layers],
                           input_shape=self.input_shape,
                           class_count=self.class_count)


def infer_shapes(net: NetworkSpec) -> list:
    """Output shape after each layer; flattened shapes are 1-tuples."""
    shape = tuple(net.input_shape)
    shapes = []
    for i, spec in enumerate(net.layers):
        if spec.kind == KIND_CONV:
            if len(shape) != 3 or shape[2] != spec.in_channels:
                raise ValueError(f"layer {i}: conv expects {spec.in_channels} "
                                 f"channels, input shape is {shape}")
            n, m = L.conv_output_shape(shape[0], shape[1], spec.kernel,
                                       spec.stride, spec.same_pad)
            shape = (n, m, spec.out_channels)
        elif spec.kind == KIND_MAXPOOL:
            if len(shape) != 3:
                raise ValueError(f"layer {i}: maxpool needs a 3-d input")
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif spec.kind == KIND_LEAKY_RELU:
            pass
        elif spec.kind == KIND_FLATTEN:
            shape = (int(np.prod(shape)),)
        elif spec.kind == KIND_DENSE:
            if len(shape) != 1 or shape[0] != spec.in_width:
                raise ValueError(f"layer {i}: dense expects width "
                                 f"{spec.in_width}, input shape is {shape}")
            shape = (spec.out_width,)
        elif spec.kind == KIND_SOFTMAX:
            if len(shape) != 1:
                raise ValueError(f"layer {i}: softmax needs a flat input")
        else:
            raise ValueError(f"layer {i}: unknown kind {spec.kind!r}")
        shapes.append(shape)
    return shapes


def _layer_forward(spec: LayerSpec, x: np.ndarray):
    if spec.kind == KIND_CONV:
        return L.conv_forward(x, spec.weights, spec.bias, spec.stride,
                              spec.same_pad)
    if spec.kind == KIND_MAXPOOL:
        return L.maxpool_forward(x)
    if spec.kind == KIND_LEAKY_RELU:
        return L.leaky_relu_forward(x, spec.slope)
    if spec.kind == KIND_FLATTEN:
        return L.flatten_forward(x)
    if spec.kind == KIND_DENSE:
        return L.dense_forward(x, spec.weights, spec.bias)
    if spec.kind == KIND_SOFTMAX:
        return L.softmax_forward(x)
    raise ValueError(f"unknown kind {spec.kind!r}")


def _layer_backward(spec: LayerSpec, dout: np.ndarray, cache):
    if spec.kind == KIND_CONV:
        return L.conv_backward(dout, cache)
    if spec.kind == KIND_MAXPOOL:
        return L.maxpool_backward(dout, cache)
    if spec.kind == KIND_LEAKY_RELU:
        return L.leaky_relu_backward(dout, cache)
    if spec.kind == KIND_FLATTEN:
        return L.flatten_backward(dout, cache)
    if spec.kind == KIND_DENSE:
        return L.dense_backward(dout, cache)
    if spec.kind == KIND_SOFTMAX:
        return L.softmax_backward(dout, cache)
    raise ValueError(f"unknown kind {spec.kind!r}")


def _weights_as(spec: LayerSpec, dtype) -> LayerSpec:
    if spec.weights is None:
        return spec
    return replace(spec, weights=spec.weights.astype(dtype),
                   bias=spec.bias.astype(dtype))


def run_layers(net: NetworkSpec, x: np.ndarray, start: int = 0,
               stop: Optional[int] = None, dtype=np.float32):
    """Run layers [start, stop) on a batched input; returns (out, activations).

    ``activations`` holds the output of every executed layer, in order.
    """
    stop = len(net.layers) if stop is None else stop
    x = np.asarray(x, dtype=dtype)
    acts = []
    for spec in net.layers[start:stop]:
        x, _ = _layer_forward(_weights_as(spec, dtype), x)
        acts.append(x)
    return x, acts


def forward(net: NetworkSpec, v: FeatureTensor):
    """Float32 inference on one tensor; returns (class scores, activations)."""
    if tuple(v.data.shape) != tuple(net.input_shape):
        raise ValueError(f"input shape {v.data.shape} != net input "
                         f"{tuple(net.input_shape)}")
    out, acts = run_layers(net, v.data[None, ...], dtype=np.float32)
    return out[0], [a[0] for a in acts]


def forward_with_caches(net: NetworkSpec, x: np.ndarray, start: int = 0,
                        stop: Optional[int] = None):
    """Float64 batched forward keeping layer caches for a backward pass."""
    stop = len(net.layers) if stop is None else stop
    x = np.asarray(x, dtype=np.float64)
    caches = []
    for spec in net.layers[start:stop]:
        x, cache = _layer_forward(_weights_as(spec, np.float64), x)
        caches.append(cache)
    return x, caches


def backward_through(net: NetworkSpec, caches, dout: np.ndarray,
                     start: int = 0, stop: Optional[int] = None):
    """Backward over layers [start, stop); returns (dx, per-layer grads)."""
    stop = len(net.layers) if stop is None else stop
    grads = [None] * (stop - start)
    for i in range(stop - 1, start - 1, -1):
        spec = _weights_as(net.layers[i], np.float64)
        dout, dw, db = _layer_backward(spec, dout, caches[i - start])
        if dw is not None:
            grads[i - start] = (dw, db)
    return dout, grads


def backward(net: NetworkSpec, v: FeatureTensor, target: int,
             loss: str = "cross_entropy"):
    """Loss and exact analytic gradients on one example; float64 throughout."""
    if loss != "cross_entropy":
        raise ValueError(f"unsupported loss {loss!r}")
    x = v.data[None, ...].astype(np.float64)
    probs, caches = forward_with_caches(net, x)
    loss_value, dprobs = L.cross_entropy(probs, np.array([target]))
    _, grads = backward_through(net, caches, dprobs)
    return loss_value, grads


def sgd_step(net: NetworkSpec, grads, lr: float) -> NetworkSpec:
    """One gradient-descent update; returns a new network."""
    if len(grads) != len(net.layers):
        raise ValueError("one gradient entry per layer required")
    out = net.copy()
    for spec, grad in zip(out.layers, grads):
        if grad is None:
            continue
        dw, db = grad
        spec.weights = spec.weights - lr * dw
        spec.bias = spec.bias - lr * db
    return out


# ---------------------------------------------------------------------------
# construction and serialization


def init_conv(kernel: int, in_channels: int, out_channels: int,
              rng: np.random.Generator, stride: int = 1,
              same_pad: bool = True) -> LayerSpec:
    fan_in = kernel * kernel * in_channels
    w = rng.normal(0.0, np.sqrt(2.0 / fan_in),
                   size=(kernel, kernel, in_channels, out_channels))
    return LayerSpec(kind=KIND_CONV, kernel=kernel, in_channels=in_channels,
                     out_channels=out_channels, stride=stride,
                     same_pad=same_pad, weights=w,
                     bias=np.zeros(out_channels))


def init_dense(in_width: int, out_width: int,
               rng: np.random.Generator) -> LayerSpec:
    w = rng.normal(0.0, np.sqrt(2.0 / in_width), size=(in_width, out_width))
    return LayerSpec(kind=KIND_DENSE, in_width=in_width, out_width=out_width,
                     weights=w, bias=np.zeros(out_width))


def reference_network(seed: int = 0, input_shape=(32, 32, 1),
                      class_count: int = 3) -> NetworkSpec:
    """The reference toy classifier: three conv/pool stages, then dense+softmax."""
    rng = np.random.default_rng(seed)
    n, m, c = input_shape
    flat = (n // 8) * (m // 8) * 16
    specs = [
        init_conv(3, c, 8, rng),
        LayerSpec(kind=KIND_LEAKY_RELU),
        LayerSpec(kind=KIND_MAXPOOL),
        init_conv(3, 8, 16, rng),
        LayerSpec(kind=KIND_LEAKY_RELU),
        LayerSpec(kind=KIND_MAXPOOL),
        init_conv(3, 16, 16, rng),
        LayerSpec(kind=KIND_LEAKY_RELU),
        LayerSpec(kind=KIND_MAXPOOL),
        LayerSpec(kind=KIND_FLATTEN),
        init_dense(flat, class_count, rng),
        LayerSpec(kind=KIND_SOFTMAX),
    ]
    return NetworkSpec(layers=specs, input_shape=tuple(input_shape),
                       class_count=class_count)


def save_network(net: NetworkSpec, sink: BinaryIO) -> int:
    """Write ``net`` in SNET format (weights as float32 LE)."""
    n, m, c = net.input_shape
    written = sink.write(_SNET_HEADER.pack(SNET_MAGIC, SNET_VERSION, 0, n, m, c,
                                           net.class_count, len(net.layers)))
    for spec in net.layers:
        sink.write(bytes([_KIND_CODES[spec.kind]]))
        written += 1
        if spec.kind == KIND_CONV:
            written += sink.write(_CONV_REC.pack(spec.kernel, spec.in_channels,
                                                 spec.out_channels, spec.stride,
                                                 int(spec.same_pad)))
            written += sink.write(spec.weights.astype("<f4").tobytes())
            written += sink.write(spec.bias.astype("<f4").tobytes())
        elif spec.kind == KIND_DENSE:
            written += sink.write(_DENSE_REC.pack(spec.in_width, spec.out_width))
            written += sink.write(spec.weights.astype("<f4").tobytes())
            written += sink.write(spec.bias.astype("<f4").tobytes())
        elif spec.kind == KIND_LEAKY_RELU:
            written += sink.write(struct.pack("<f", spec.slope))
    return written


def _read_exact(source: BinaryIO, count: int) -> bytes:
    data = source.read(count)
    if len(data) < count:
        raise NetworkFormatError(f"truncated: wanted {count} bytes, got {len(data)}")
    return data


def load_network(source: BinaryIO) -> NetworkSpec:
    """Inverse of :func:`save_network` (weights promoted to float64)."""
    magic, version, _flags, n, m, c, classes, layer_count = _SNET_HEADER.unpack(
        _read_exact(source, _SNET_HEADER.size))
    if magic != SNET_MAGIC:
        raise NetworkFormatError(f"bad magic {magic!r}")
    if version != SNET_VERSION:
        raise NetworkFormatError(f"unsupported version {version}")
    specs = []
    for _ in range(layer_count):
        code = _read_exact(source, 1)[0]
        kind = _CODE_KINDS.get(code)
        if kind is None:
            raise NetworkFormatError(f"unknown layer kind code {code}")
        if kind == KIND_CONV:
            kernel, cin, cout, stride, same_pad = _CONV_REC.unpack(
                _read_exact(source, _CONV_REC.size))
            wlen = kernel * kernel * cin * cout
            w = np.frombuffer(_read_exact(source, 4 * wlen), dtype="<f4")
            b = np.frombuffer(_read_exact(source, 4 * cout), dtype="<f4")
            specs.append(LayerSpec(kind=kind, kernel=kernel, in_channels=cin,
                                   out_channels=cout, stride=stride,
                                   same_pad=bool(same_pad),
                                   weights=w.astype(np.float64).reshape(
                                       kernel, kernel, cin, cout),
                                   bias=b.astype(np.float64)))
        elif kind == KIND_DENSE:
            fin, fout = _DENSE_REC.unpack(_read_exact(source, _DENSE_REC.size))
            w = np.frombuffer(_read_exact(source, 4 * fin * fout), dtype="<f4")
            b = np.frombuffer(_read_exact(source, 4 * fout), dtype="<f4")
            specs.append(LayerSpec(kind=kind, in_width=fin, out_width=fout,
                                   weights=w.astype(np.float64).reshape(fin, fout),
                                   bias=b.astype(np.float64)))
        elif kind == KIND_LEAKY_RELU:
            (slope,) = struct.unpack("<f", _read_exact(source, 4))
            specs.append(LayerSpec(kind=kind, slope=float(slope)))
        else:
            specs.append(LayerSpec(kind=kind))
    try:
        return NetworkSpec(layers=specs, input_shape=(n, m, c),
                           class_count=classes)
    except ValueError as exc:
        raise NetworkFormatError(f"inconsistent network: {exc}") from exc


def save_network_file(net: NetworkSpec, path) -> int:
    with open(path, "wb") as fh:
        return save_network(net, fh)


def load_network_file(path) -> NetworkSpec:
    with open(path, "rb") as fh:
        return load_network(fh)
