"""Unit-sphere vector primitives: normalization, cosine, pooling, projection.

All arithmetic runs in float64. Interchange files store float32 and are
promoted on load, so every function here can assume (and enforce) finite
64-bit inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVectorError, DimensionMismatchError

# tolerance for "already on the unit sphere" checks at API boundaries
UNIT_ATOL = 1e-6


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatchError("expected a non-empty 1-d vector")
    return v


def l2_normalize(x) -> np.ndarray:
    """Map a feature vector onto the unit hypersphere."""
    v = _as_vector(x)
    if not np.all(np.isfinite(v)):
        raise DegenerateVectorError("degenerate feature vector: non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateVectorError("degenerate feature vector: zero norm")
    return v / norm


def require_unit(v: np.ndarray, what: str = "embedding") -> np.ndarray:
    """Validate that ``v`` is unit-norm within :data:`UNIT_ATOL`."""
    v = _as_vector(v)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_ATOL:
        raise DegenerateVectorError(f"{what} is not unit-norm (|v| = {norm:.6g})")
    return v


def cosine(u, v) -> float:
    """Cosine similarity of two unit vectors (their dot product)."""
    a = require_unit(u, "left argument")
    b = require_unit(v, "right argument")
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"cosine of vectors with dims {a.shape[0]} and {b.shape[0]}"
        )
    return float(a @ b)


def mean_pool(seq) -> np.ndarray:
    """Arithmetic mean of unit vectors, re-normalized to unit length."""
    try:
        rows = np.asarray(seq, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatchError("mean_pool over vectors of unequal dims") from exc
    if rows.size == 0:
        raise DegenerateVectorError("mean_pool of an empty sequence")
    if rows.ndim != 2:
        raise DimensionMismatchError("mean_pool expects a sequence of 1-d vectors")
    mean = rows.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateVectorError("degenerate pooled vector: zero-norm mean")
    return mean / norm


@dataclass(frozen=True)
class ProjectionHead:
    """Linear, bias-free map from backbone feature space to the joint space."""

    weights: np.ndarray  # (backbone_dim, joint_dim)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DimensionMismatchError("projection weights must be a 2-d matrix")
        if not np.all(np.isfinite(w)):
            raise DegenerateVectorError("projection weights contain non-finite entries")
        object.__setattr__(self, "weights", w)

    @property
    def backbone_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def joint_dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def identity(cls, dim: int) -> "ProjectionHead":
        return cls(np.eye(dim))

    @classmethod
    def random_orthonormal(cls, backbone_dim: int, joint_dim: int, rng: np.random.Generator) -> "ProjectionHead":
        """Seeded init with orthonormal columns (rows when joint_dim > backbone_dim)."""
        gauss = rng.standard_normal((max(backbone_dim, joint_dim), min(backbone_dim, joint_dim)))
        q, _ = np.linalg.qr(gauss)
        w = q if backbone_dim >= joint_dim else q.T
        return cls(w)


def project(x, head: ProjectionHead) -> np.ndarray:
    """Project one feature vector through ``head`` and normalize."""
    v = _as_vector(x)
    if v.shape[0] != head.backbone_dim:
        raise DimensionMismatchError(
            f"feature dim {v.shape[0]} does not match head backbone dim {head.backbone_dim}"
        )
    z = v @ head.weights
    norm = float(np.linalg.norm(z))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateVectorError("degenerate projected vector: zero norm")
    return z / norm


def project_rows(X: np.ndarray, head: ProjectionHead) -> np.ndarray:
    """Batch variant of :func:`project` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatchError("expected a 2-d feature matrix")
    if X.shape[1] != head.backbone_dim:
        raise DimensionMismatchError(
            f"feature dim {X.shape[1]} does not match head backbone dim {head.backbone_dim}"
        )
    Z = X @ head.weights
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0.0):
        raise DegenerateVectorError("degenerate projected vector: zero norm in batch")
    return Z / norms
