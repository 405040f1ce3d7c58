"""Versioned binary checkpoints for networks and optimizer state.

All multi-byte values are little-endian; parameters are float64
row-major. The exact byte layout is documented in
docs/checkpoint_format.md and spot-checked byte-for-byte in the tests.
Writing the same state twice produces identical bytes, which the
determinism tests rely on.
"""

from __future__ import annotations

import struct
from io import BytesIO

import numpy as np

from bootq.nn import ACTIVATIONS, AdamState, DenseNet, Layer
from bootq.qnet import MultiHeadNet, NetPair

MAGIC = b"BQCK"
VERSION = 1

_ACT_CODE = {"identity": 0, "relu": 1}


class CheckpointError(ValueError):
    """Corrupt, truncated, or incompatible checkpoint data."""


def _write_u32(fh, value: int) -> None:
    fh.write(struct.pack("<I", value))


def _write_u64(fh, value: int) -> None:
    fh.write(struct.pack("<Q", value))


def _write_f64(fh, value: float) -> None:
    fh.write(struct.pack("<d", value))


def _write_array(fh, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read(fh, fmt: str):
    size = struct.calcsize(fmt)
    data = fh.read(size)
    if len(data) != size:
        raise CheckpointError("unexpected end of checkpoint data")
    return struct.unpack(fmt, data)[0]


def _read_array(fh, shape) -> np.ndarray:
    count = int(np.prod(shape)) if shape else 1
    data = fh.read(8 * count)
    if len(data) != 8 * count:
        raise CheckpointError("unexpected end of checkpoint data")
    return np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)


def write_dense(fh, net: DenseNet) -> None:
    _write_u32(fh, len(net.layers))
    for layer in net.layers:
        _write_u32(fh, layer.out_dim)
        _write_u32(fh, layer.in_dim)
        fh.write(struct.pack("<B", _ACT_CODE[layer.activation]))
        _write_array(fh, layer.weight)
        _write_array(fh, layer.bias)


def read_dense(fh) -> DenseNet:
    n_layers = _read(fh, "<I")
    layers = []
    for _ in range(n_layers):
        out_dim = _read(fh, "<I")
        in_dim = _read(fh, "<I")
        code = _read(fh, "<B")
        if code >= len(ACTIVATIONS):
            raise CheckpointError(f"unknown activation code {code}")
        weight = _read_array(fh, (out_dim, in_dim))
        bias = _read_array(fh, (out_dim,))
        layers.append(Layer(weight, bias, ("identity", "relu")[code]))
    return DenseNet(layers)


def write_adam(fh, state: AdamState) -> None:
    _write_f64(fh, state.learning_rate)
    _write_f64(fh, state.beta1)
    _write_f64(fh, state.beta2)
    _write_f64(fh, state.eps)
    _write_u64(fh, state.t)
    _write_u32(fh, len(state.m))
    for m, v in zip(state.m, state.v):
        fh.write(struct.pack("<B", m.ndim))
        for dim in m.shape:
            _write_u32(fh, dim)
        _write_array(fh, m)
        _write_array(fh, v)


def read_adam(fh) -> AdamState:
    state = AdamState(
        learning_rate=_read(fh, "<d"),
        beta1=_read(fh, "<d"),
        beta2=_read(fh, "<d"),
        eps=_read(fh, "<d"),
        t=_read(fh, "<Q"),
    )
    n_arrays = _read(fh, "<I")
    for _ in range(n_arrays):
        ndim = _read(fh, "<B")
        shape = tuple(_read(fh, "<I") for _ in range(ndim))
        state.m.append(_read_array(fh, shape))
        state.v.append(_read_array(fh, shape))
    return state


def write_multi_head(fh, net: MultiHeadNet) -> None:
    _write_u32(fh, net.obs_dim)
    _write_u32(fh, net.action_count)
    _write_u32(fh, net.num_heads)
    body_hidden = net.body_dims[1:]
    head_hidden = net.head_dims[1:-1]
    _write_u32(fh, len(body_hidden))
    for width in body_hidden:
        _write_u32(fh, width)
    _write_u32(fh, len(head_hidden))
    for width in head_hidden:
        _write_u32(fh, width)
    write_dense(fh, net.body)
    for k in range(net.num_heads):
        write_dense(fh, net.head(k))


def read_multi_head(fh) -> MultiHeadNet:
    obs_dim = _read(fh, "<I")
    action_count = _read(fh, "<I")
    num_heads = _read(fh, "<I")
    body_hidden = tuple(_read(fh, "<I") for _ in range(_read(fh, "<I")))
    head_hidden = tuple(_read(fh, "<I") for _ in range(_read(fh, "<I")))
    net = MultiHeadNet(obs_dim, action_count, num_heads, body_hidden, head_hidden)
    body = read_dense(fh)
    for view, loaded in zip(net._body_w, (l.weight for l in body.layers)):
        view[:] = loaded
    for view, loaded in zip(net._body_b, (l.bias for l in body.layers)):
        view[:] = loaded
    for k in range(num_heads):
        head = read_dense(fh)
        for j, layer in enumerate(head.layers):
            net._head_w[j][k] = layer.weight
            net._head_b[j][k] = layer.bias
    return net


def save_dense_net(path, net: DenseNet) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        _write_u32(fh, VERSION)
        write_dense(fh, net)


def load_dense_net(path) -> DenseNet:
    with open(path, "rb") as fh:
        _check_header(fh)
        return read_dense(fh)


def _check_header(fh) -> None:
    magic = fh.read(4)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}; not a checkpoint file")
    version = _read(fh, "<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")


def save_trainer_checkpoint(
    path, pair: NetPair, adam_state: AdamState, frames: int, steps: int
) -> None:
    buf = BytesIO()
    buf.write(MAGIC)
    _write_u32(buf, VERSION)
    _write_u64(buf, frames)
    _write_u64(buf, steps)
    _write_u64(buf, pair.frames_since_sync)
    write_multi_head(buf, pair.policy)
    write_multi_head(buf, pair.target)
    write_adam(buf, adam_state)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_trainer_checkpoint(path) -> tuple[NetPair, AdamState, int, int]:
    with open(path, "rb") as fh:
        _check_header(fh)
        frames = _read(fh, "<Q")
        steps = _read(fh, "<Q")
        frames_since_sync = _read(fh, "<Q")
        policy = read_multi_head(fh)
        target = read_multi_head(fh)
        adam_state = read_adam(fh)
    pair = NetPair(policy=policy, target=target, frames_since_sync=frames_since_sync)
    return pair, adam_state, frames, steps
