"""Standalone writer for the capscore embedding-container format.

This is an independent implementation of the published byte layout (see the
engine's docs/FORMATS.md); the exporter deliberately does not import the
engine, so the file format is the only coupling between the two packages.

Layout, little-endian throughout::

    magic    8B   b"CAPSEMB1"
    version  u16  = 1
    dtype    u8   = 1 (float32)
    role     u8   = 1 visual-feature | 2 text-feature |
                    3 text-token-sequence | 4 frame-sequence |
                    5 projection-checkpoint
    dim      u32
    count    u32
    meta_len u32, canonical JSON (sorted keys, compact, ascii)
    index    per id: id_len u16 + id utf-8 + rows u32
             (role 3 adds: per row, surf_len u16 + surface utf-8)
    payload  total_rows * dim float32, row-major, index order
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"CAPSEMB1"
VERSION = 1
DTYPE_F32 = 1

ROLE_CODES = {
    "visual-feature": 1,
    "text-feature": 2,
    "text-token-sequence": 3,
    "frame-sequence": 4,
    "projection-checkpoint": 5,
}


def encode_container(role: str, ids, row_blocks, surfaces=None, metadata=None) -> bytes:
    """Serialize ``row_blocks`` (one float32 matrix per id) for ``role``."""
    if role not in ROLE_CODES:
        raise ValueError(f"unknown role {role!r}")
    blocks = [np.ascontiguousarray(b, dtype="<f4") for b in row_blocks]
    if len(blocks) != len(ids):
        raise ValueError("ids and row blocks differ in length")
    if not blocks:
        raise ValueError("container needs at least one id")
    dim = blocks[0].shape[1]
    if any(b.ndim != 2 or b.shape[1] != dim or b.shape[0] < 1 for b in blocks):
        raise ValueError("row blocks must be non-empty matrices of equal width")
    if any(not np.all(np.isfinite(b)) for b in blocks):
        raise ValueError("row blocks contain non-finite values")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids")
    if role == "text-token-sequence":
        if surfaces is None or any(len(s) != b.shape[0]
                                   for s, b in zip(surfaces, blocks)):
            raise ValueError("token containers need one surface per row")
    elif surfaces is not None:
        raise ValueError("surfaces only belong in token containers")

    meta = json.dumps(metadata or {}, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True).encode("ascii")
    parts = [MAGIC,
             struct.pack("<HBB", VERSION, DTYPE_F32, ROLE_CODES[role]),
             struct.pack("<II", dim, len(ids)),
             struct.pack("<I", len(meta)), meta]
    for k, (ident, block) in enumerate(zip(ids, blocks)):
        raw = ident.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", block.shape[0]))
        if role == "text-token-sequence":
            for surf in surfaces[k]:
                surf_raw = surf.encode("utf-8")
                parts.append(struct.pack("<H", len(surf_raw)))
                parts.append(surf_raw)
    parts.extend(block.tobytes() for block in blocks)
    return b"".join(parts)


def write_flat(path, role, ids, matrix, metadata=None) -> None:
    matrix = np.asarray(matrix)
    blocks = [matrix[i:i + 1] for i in range(matrix.shape[0])]
    _write(path, encode_container(role, ids, blocks, metadata=metadata))


def write_sequences(path, role, ids, blocks, surfaces=None, metadata=None) -> None:
    _write(path, encode_container(role, ids, blocks, surfaces=surfaces,
                                  metadata=metadata))


def write_checkpoint(path, visual_projection, textual_projection, metadata=None) -> None:
    """Backbone projection matrices as a checkpoint-format initializer."""
    vp = np.asarray(visual_projection)
    tp = np.asarray(textual_projection)
    if vp.shape[1] != tp.shape[1]:
        raise ValueError("projections must share the joint dimension")
    data = encode_container("projection-checkpoint",
                            ["visual_projection", "textual_projection"],
                            [vp, tp], metadata=metadata)
    _write(path, data)


def _write(path, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)
