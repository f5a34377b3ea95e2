"""Binary embedding containers: bit-exact tensor interchange.

One file holds one role's worth of float32 rows plus an id index. Layout
(all integers little-endian, payload float32 little-endian)::

    offset  size  field
    0       8     magic  b"CAPSEMB1"
    8       2     format version (u16) = 1
    10      1     dtype code (u8): 1 = float32
    11      1     role code (u8): 1 visual-feature, 2 text-feature,
                  3 text-token-sequence, 4 frame-sequence,
                  5 projection-checkpoint
    12      4     dim (u32): row width
    16      4     count (u32): number of ids
    20      4     meta_len (u32), then meta_len bytes of canonical JSON
                  (sorted keys, compact separators, ascii)
    ...           index, one entry per id:
                      id_len (u16), id utf-8 bytes, rows (u32),
                      and for role 3 only: per row, surf_len (u16) +
                      surface utf-8 bytes
    ...           payload: total_rows * dim float32 values, row-major,
                  in index order
    EOF           trailing bytes are an error

Round-tripping is byte-exact: the writer always emits canonical metadata
JSON and preserves id order, so write(read(f)) == f.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ContainerFormatError

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
ROLE_NAMES = {code: name for name, code in ROLE_CODES.items()}

FLAT_ROLES = ("visual-feature", "text-feature")
SEQUENCE_ROLES = ("text-token-sequence", "frame-sequence")

CHECKPOINT_VISUAL_ID = "visual_projection"
CHECKPOINT_TEXTUAL_ID = "textual_projection"


@dataclass
class EmbeddingContainer:
    """In-memory view of one container file."""

    role: str
    dim: int
    ids: list
    rows_per_id: list
    payload: np.ndarray                 # (total_rows, dim) float32
    surfaces: list | None = None        # per id, list of token strings (role 3)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLE_CODES:
            raise ContainerFormatError(f"unknown role {self.role!r}", code="bad-role")
        if self.dim < 1:
            raise ContainerFormatError("dim must be positive", code="bad-shape")
        if len(self.ids) != len(self.rows_per_id):
            raise ContainerFormatError("ids and rows_per_id disagree", code="bad-shape")
        if len(set(self.ids)) != len(self.ids):
            raise ContainerFormatError("duplicate ids in container", code="duplicate-id")
        payload = np.asarray(self.payload, dtype=np.float32)
        if payload.ndim != 2 or payload.shape[1] != self.dim:
            raise ContainerFormatError("payload shape does not match dim", code="bad-shape")
        if payload.shape[0] != sum(self.rows_per_id):
            raise ContainerFormatError("payload rows do not match index", code="bad-shape")
        if not np.all(np.isfinite(payload)):
            raise ContainerFormatError("payload has non-finite values", code="non-finite-values")
        if any(r < 1 for r in self.rows_per_id):
            raise ContainerFormatError("every id needs at least one row", code="bad-shape")
        if self.role == "text-token-sequence":
            if self.surfaces is None or len(self.surfaces) != len(self.ids):
                raise ContainerFormatError("token containers need per-id surfaces",
                                           code="bad-shape")
            for surfs, rows in zip(self.surfaces, self.rows_per_id):
                if len(surfs) != rows:
                    raise ContainerFormatError("surface count does not match rows",
                                               code="bad-shape")
        elif self.surfaces is not None:
            raise ContainerFormatError("surfaces only belong in token containers",
                                       code="bad-shape")
        if self.role in FLAT_ROLES and any(r != 1 for r in self.rows_per_id):
            raise ContainerFormatError(f"role {self.role} requires one row per id",
                                       code="bad-shape")
        object.__setattr__(self, "payload", payload)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def total_rows(self) -> int:
        return int(self.payload.shape[0])

    def offsets(self) -> dict:
        out = {}
        pos = 0
        for i, rows in zip(self.ids, self.rows_per_id):
            out[i] = (pos, pos + rows)
            pos += rows
        return out


def container_to_bytes(container: EmbeddingContainer) -> bytes:
    parts = [MAGIC,
             struct.pack("<HBB", VERSION, DTYPE_F32, ROLE_CODES[container.role]),
             struct.pack("<II", container.dim, len(container.ids))]
    meta = json.dumps(container.metadata, sort_keys=True,
                      separators=(",", ":"), ensure_ascii=True).encode("ascii")
    parts.append(struct.pack("<I", len(meta)))
    parts.append(meta)
    for idx, (ident, rows) in enumerate(zip(container.ids, container.rows_per_id)):
        raw = ident.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ContainerFormatError(f"id too long: {ident[:32]!r}...", code="bad-index")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", rows))
        if container.role == "text-token-sequence":
            for surf in container.surfaces[idx]:
                surf_raw = surf.encode("utf-8")
                if len(surf_raw) > 0xFFFF:
                    raise ContainerFormatError("surface token too long", code="bad-index")
                parts.append(struct.pack("<H", len(surf_raw)))
                parts.append(surf_raw)
    payload = np.ascontiguousarray(container.payload, dtype="<f4")
    parts.append(payload.tobytes())
    return b"".join(parts)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, *, code: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerFormatError("container ends mid-field", code=code)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, *, code: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), code=code))


def container_from_bytes(data: bytes) -> EmbeddingContainer:
    cur = _Cursor(data)
    magic = cur.take(len(MAGIC), code="truncated-header")
    if magic != MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}", code="bad-magic")
    version, dtype, role_code = cur.unpack("<HBB", code="truncated-header")
    if version != VERSION:
        raise ContainerFormatError(f"unsupported version {version}", code="bad-version")
    if dtype != DTYPE_F32:
        raise ContainerFormatError(f"unsupported dtype code {dtype}", code="bad-dtype")
    if role_code not in ROLE_NAMES:
        raise ContainerFormatError(f"unknown role code {role_code}", code="bad-role")
    role = ROLE_NAMES[role_code]
    dim, count = cur.unpack("<II", code="truncated-header")
    (meta_len,) = cur.unpack("<I", code="truncated-header")
    meta_raw = cur.take(meta_len, code="truncated-header")
    try:
        metadata = json.loads(meta_raw.decode("ascii")) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerFormatError(f"metadata is not valid JSON: {exc}",
                                   code="bad-metadata") from exc
    if not isinstance(metadata, dict):
        raise ContainerFormatError("metadata must be a JSON object", code="bad-metadata")

    ids, rows_per_id = [], []
    surfaces = [] if role == "text-token-sequence" else None
    for _ in range(count):
        (id_len,) = cur.unpack("<H", code="truncated-index")
        try:
            ident = cur.take(id_len, code="truncated-index").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ContainerFormatError("id is not valid utf-8", code="bad-index") from exc
        (rows,) = cur.unpack("<I", code="truncated-index")
        if rows < 1:
            raise ContainerFormatError(f"id {ident!r} declares zero rows", code="bad-index")
        ids.append(ident)
        rows_per_id.append(rows)
        if surfaces is not None:
            surfs = []
            for _ in range(rows):
                (surf_len,) = cur.unpack("<H", code="truncated-index")
                try:
                    surfs.append(cur.take(surf_len, code="truncated-index").decode("utf-8"))
                except UnicodeDecodeError as exc:
                    raise ContainerFormatError("surface is not valid utf-8",
                                               code="bad-index") from exc
            surfaces.append(surfs)
    if len(set(ids)) != len(ids):
        raise ContainerFormatError("duplicate ids in container", code="duplicate-id")

    total_rows = sum(rows_per_id)
    expected = total_rows * dim * 4
    remaining = len(data) - cur.pos
    if remaining < expected:
        raise ContainerFormatError(
            f"truncated payload: expected {expected} bytes, found {remaining}",
            code="truncated-payload")
    if remaining > expected:
        raise ContainerFormatError(
            f"{remaining - expected} trailing bytes after payload", code="trailing-data")
    payload = np.frombuffer(cur.take(expected, code="truncated-payload"),
                            dtype="<f4").reshape(total_rows, dim).copy()
    return EmbeddingContainer(role=role, dim=dim, ids=ids, rows_per_id=rows_per_id,
                              payload=payload, surfaces=surfaces, metadata=metadata)


def write_container(container: EmbeddingContainer, path) -> None:
    data = container_to_bytes(container)
    with open(path, "wb") as fh:
        fh.write(data)


def read_container(path) -> EmbeddingContainer:
    with open(path, "rb") as fh:
        return container_from_bytes(fh.read())


def flat_container(role: str, ids, matrix, metadata=None) -> EmbeddingContainer:
    """One vector per id (visual-feature / text-feature roles)."""
    matrix = np.asarray(matrix)
    return EmbeddingContainer(role=role, dim=int(matrix.shape[1]), ids=list(ids),
                              rows_per_id=[1] * len(ids), payload=matrix,
                              metadata=metadata or {})


def sequence_container(role: str, ids, matrices, surfaces=None, metadata=None) -> EmbeddingContainer:
    """Variable-length row blocks per id (token/frame sequence roles)."""
    mats = [np.asarray(m) for m in matrices]
    if not mats:
        raise ContainerFormatError("sequence container needs at least one id",
                                   code="bad-shape")
    payload = np.concatenate(mats, axis=0)
    return EmbeddingContainer(role=role, dim=int(payload.shape[1]), ids=list(ids),
                              rows_per_id=[m.shape[0] for m in mats], payload=payload,
                              surfaces=surfaces, metadata=metadata or {})
