"""Compact little-endian binary model format (see ``docs/model-format.md``).

Layout::

    offset      size          field
    0           4             magic b"BNSI"
    4           2   u16       format version (1)
    6           1   u8        depth
    7           1   u8        d_proj
    8           1   u8        d_in
    9           1   u8        reserved, must be 0
    10          4   f32       sigma
    14          2   u16       feature mask, bit i = canonical feature i
    16          4*d_in f32    standardization mean
    16+4*d_in   4*d_in f32    standardization scale
    16+8*d_in   ...           matrix blocks Z, proj_bias, W, V, theta

Each matrix block starts with a u8 encoding tag. Tag 0 (dense) is followed
by every entry as f32, row-major. Tag 1 (bitmap) is followed by
``ceil(n / 8)`` bitmap bytes (entry ``8*i + j`` is bit ``j`` of byte ``i``)
and then the f32 values of the set entries in row-major order. The writer
picks bitmap only when it is strictly smaller than dense.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DeserializationError, ValidationError
from ..hrv import FEATURE_NAMES
from .model import BonsaiModel, n_internal, n_nodes

MAGIC = b"BNSI"
VERSION = 1
HEADER_FIXED = 16
DENSE, BITMAP = 0, 1
MATRICES = ("Z", "proj_bias", "W", "V", "theta")


def _feature_mask(names):
    lookup = {n: i for i, n in enumerate(FEATURE_NAMES)}
    try:
        idx = [lookup[n] for n in names]
    except KeyError as exc:
        raise ValidationError(f"feature {exc.args[0]!r} is not a canonical feature") from None
    if idx != sorted(set(idx)):
        raise ValidationError("feature_subset must be in canonical order without repeats")
    mask = 0
    for i in idx:
        mask |= 1 << i
    return mask


def _mask_to_names(mask):
    return tuple(n for i, n in enumerate(FEATURE_NAMES) if mask >> i & 1)


def block_size(n_entries, nnz):
    """Bytes taken by one matrix block under the writer's encoding choice."""
    dense = 4 * n_entries
    bitmap = (n_entries + 7) // 8 + 4 * nnz
    return 1 + (bitmap if bitmap < dense else dense)


def expected_size(depth, d_proj, d_in, nnz):
    """Byte length of a serialized model given per-matrix non-zero counts.

    ``nnz`` maps each of ``Z, proj_bias, W, V, theta`` to its non-zero count.
    """
    shapes = {
        "Z": d_proj * d_in,
        "proj_bias": d_proj,
        "W": n_nodes(depth) * d_proj,
        "V": n_nodes(depth) * d_proj,
        "theta": n_internal(depth) * d_proj,
    }
    return HEADER_FIXED + 8 * d_in + sum(block_size(shapes[k], nnz[k]) for k in MATRICES)


def _encode_matrix(a):
    flat = np.ascontiguousarray(a, dtype=np.float32).reshape(-1)
    present = flat != 0
    nnz = int(present.sum())
    if (flat.size + 7) // 8 + 4 * nnz < 4 * flat.size:
        bits = np.packbits(present, bitorder="little").tobytes()
        return bytes([BITMAP]) + bits + flat[present].astype("<f4").tobytes()
    return bytes([DENSE]) + flat.astype("<f4").tobytes()


def serialize(model: BonsaiModel) -> bytes:
    for name, value, limit in (("depth", model.depth, 255), ("d_proj", model.d_proj, 255),
                               ("d_in", model.d_in, len(FEATURE_NAMES))):
        if value > limit:
            raise ValidationError(f"{name}={value} exceeds format limit {limit}")
    mask = _feature_mask(model.feature_subset)
    out = [
        MAGIC,
        struct.pack("<HBBBBfH", VERSION, model.depth, model.d_proj, model.d_in, 0,
                    model.sigma, mask),
        model.mean.astype("<f4").tobytes(),
        model.scale.astype("<f4").tobytes(),
    ]
    out.extend(_encode_matrix(getattr(model, name)) for name in MATRICES)
    return b"".join(out)


class _Reader:
    def __init__(self, buf):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise DeserializationError(
                self.pos, f"truncated while reading {what} ({n} bytes wanted, "
                          f"{len(self.buf) - self.pos} left)")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def f32(self, count, what):
        return np.frombuffer(self.take(4 * count, what), dtype="<f4").astype(np.float64)


def _decode_matrix(r, shape, what):
    n = int(np.prod(shape))
    at = r.pos
    tag = r.take(1, f"{what} tag")[0]
    if tag == DENSE:
        return r.f32(n, what).reshape(shape)
    if tag == BITMAP:
        bits = np.frombuffer(r.take((n + 7) // 8, f"{what} bitmap"), dtype=np.uint8)
        present = np.unpackbits(bits, bitorder="little")[:n].astype(bool)
        out = np.zeros(n)
        out[present] = r.f32(int(present.sum()), f"{what} values")
        return out.reshape(shape)
    raise DeserializationError(at, f"unknown encoding tag {tag} for {what}")


def deserialize(data: bytes) -> BonsaiModel:
    r = _Reader(data)
    magic = bytes(r.take(4, "magic"))
    if magic != MAGIC:
        raise DeserializationError(0, f"bad magic {magic!r}")
    version, depth, d_proj, d_in, reserved, sigma, mask = struct.unpack(
        "<HBBBBfH", r.take(struct.calcsize("<HBBBBfH"), "header"))
    if version != VERSION:
        raise DeserializationError(4, f"unsupported version {version}")
    if reserved != 0:
        raise DeserializationError(9, f"reserved byte is {reserved}, expected 0")
    names = _mask_to_names(mask)
    if len(names) != d_in or mask >> len(FEATURE_NAMES):
        raise DeserializationError(14, f"feature mask {mask:#06x} inconsistent with d_in={d_in}")
    if d_proj < 1 or d_in < 1:
        raise DeserializationError(7, "d_proj and d_in must be >= 1")
    mean = r.f32(d_in, "mean")
    scale = r.f32(d_in, "scale")
    shapes = {
        "Z": (d_proj, d_in),
        "proj_bias": (d_proj,),
        "W": (n_nodes(depth), d_proj),
        "V": (n_nodes(depth), d_proj),
        "theta": (n_internal(depth), d_proj),
    }
    mats = {name: _decode_matrix(r, shapes[name], name) for name in MATRICES}
    if r.pos != len(r.buf):
        raise DeserializationError(r.pos, f"{len(r.buf) - r.pos} trailing bytes")
    try:
        return BonsaiModel(depth=depth, sigma=sigma, mean=mean, scale=scale,
                           feature_subset=names, **mats)
    except ValidationError as exc:
        raise DeserializationError(HEADER_FIXED, str(exc)) from None


def model_size_bytes(model: BonsaiModel) -> int:
    return len(serialize(model))


def save_model(model: BonsaiModel, path) -> Path:
    path = Path(path)
    path.write_bytes(serialize(model))
    return path


def load_model(path) -> BonsaiModel:
    return deserialize(Path(path).read_bytes())
