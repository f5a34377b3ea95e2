"""Positive-augmented symmetric contrastive loss and its analytic gradients.

The loss over a batch of N real pairs plus N generated images and N generated
captions is

    L = L(V, T) + lambda_v * L(V_gen, T) + lambda_t * L(V, T_gen)

where each term is a symmetric InfoNCE: cross-entropy of the diagonal under a
row-wise softmax of the scaled cosine matrix, plus the same under a
column-wise softmax, each averaged over the batch.

Gradients are taken with respect to the two projection-head weight matrices.
With S = E_v E_t^T / tau, dL/dS = (P + Q - 2 I) / N where P is the row softmax
and Q the column softmax; the chain then runs through the L2 normalization
(e = z / |z|, dL/dz = (g - (g . e) e) / |z|) and the linear projection
(dL/dW = X^T dL/dZ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import ProjectionHead, UNIT_ATOL
from .errors import DegenerateVectorError, DimensionMismatchError


@dataclass(frozen=True)
class LossConfig:
    """Temperature and generated-positive weights of the combined loss."""

    tau: float = 0.01
    lambda_v: float = 0.05
    lambda_t: float = 0.1

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.lambda_v < 0 or self.lambda_t < 0:
            raise ValueError("lambda weights must be non-negative")


@dataclass(frozen=True)
class Heads:
    """The visual/textual projection-head pair being trained."""

    visual: ProjectionHead
    textual: ProjectionHead

    def __post_init__(self):
        if self.visual.joint_dim != self.textual.joint_dim:
            raise DimensionMismatchError("heads must share the joint dimension")

    @property
    def joint_dim(self) -> int:
        return self.visual.joint_dim


@dataclass(frozen=True)
class TupleBatch:
    """Feature rows of a batch of (real image, real caption, generated image,
    generated caption) tuples, prior to projection."""

    visual: np.ndarray        # (N, visual_backbone_dim)
    textual: np.ndarray       # (N, textual_backbone_dim)
    visual_gen: np.ndarray    # (N, visual_backbone_dim)
    textual_gen: np.ndarray   # (N, textual_backbone_dim)

    def __post_init__(self):
        for field in ("visual", "textual", "visual_gen", "textual_gen"):
            m = np.asarray(getattr(self, field), dtype=np.float64)
            if m.ndim != 2:
                raise DimensionMismatchError(f"{field} features must form a 2-d matrix")
            object.__setattr__(self, field, m)
        mats = [self.visual, self.textual, self.visual_gen, self.textual_gen]
        n = {m.shape[0] for m in mats}
        if len(n) != 1 or mats[0].shape[0] == 0:
            raise DimensionMismatchError("tuple batch arrays must share a positive row count")
        if self.visual.shape[1] != self.visual_gen.shape[1]:
            raise DimensionMismatchError("real and generated image features differ in dim")
        if self.textual.shape[1] != self.textual_gen.shape[1]:
            raise DimensionMismatchError("real and generated caption features differ in dim")

    def __len__(self) -> int:
        return self.visual.shape[0]

    def take(self, idx: np.ndarray) -> "TupleBatch":
        return TupleBatch(self.visual[idx], self.textual[idx],
                          self.visual_gen[idx], self.textual_gen[idx])


def _check_embedding_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] == 0:
        raise DimensionMismatchError(f"{name} must be a non-empty matrix of row vectors")
    norms = np.linalg.norm(M, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_ATOL):
        raise DegenerateVectorError(f"{name} rows must be unit-norm")
    return M


def info_nce(V, T, tau: float) -> float:
    """Symmetric InfoNCE over matched rows of V and T.

    Returns the sum of the image-to-text and text-to-image cross-entropy
    terms, each averaged over the batch; the diagonal holds the positives.
    """
    V = _check_embedding_matrix(V, "V")
    T = _check_embedding_matrix(T, "T")
    if V.shape != T.shape:
        raise DimensionMismatchError("V and T must have identical shapes")
    if tau <= 0:
        raise ValueError("tau must be positive")
    S = (V @ T.T) / tau
    return _diag_cross_entropy(S) + _diag_cross_entropy(S.T)


def _diag_cross_entropy(S: np.ndarray) -> float:
    """Mean over rows of -log softmax(S)[i, i], computed with a max shift."""
    shift = S.max(axis=1, keepdims=True)
    lse = shift[:, 0] + np.log(np.exp(S - shift).sum(axis=1))
    return float(np.mean(lse - np.diag(S)))


def _softmax_rows(S: np.ndarray) -> np.ndarray:
    shifted = S - S.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _info_nce_value_and_embedding_grads(Ev, Et, tau):
    """Loss plus dL/dEv, dL/dEt for one InfoNCE term on projected embeddings."""
    n = Ev.shape[0]
    S = (Ev @ Et.T) / tau
    loss = _diag_cross_entropy(S) + _diag_cross_entropy(S.T)
    P = _softmax_rows(S)
    Q = _softmax_rows(S.T).T
    G = (P + Q - 2.0 * np.eye(n)) / n
    dEv = (G @ Et) / tau
    dEt = (G.T @ Ev) / tau
    return loss, dEv, dEt


def _project_cached(X: np.ndarray, head: ProjectionHead):
    """Row projection keeping pre-normalization norms for the backward pass."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != head.backbone_dim:
        raise DimensionMismatchError(
            f"feature dim {X.shape[1]} does not match head backbone dim {head.backbone_dim}"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        Z = X @ head.weights
        norms = np.linalg.norm(Z, axis=1, keepdims=True)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0.0):
        raise DegenerateVectorError("degenerate projected vector: non-finite or zero norm")
    return Z / norms, norms


def _normalization_backward(X, E, norms, dE) -> np.ndarray:
    """dL/dW for Z = X W, E = Z / |Z| row-wise, given dL/dE."""
    inner = np.sum(dE * E, axis=1, keepdims=True)
    dZ = (dE - inner * E) / norms
    return X.T @ dZ


def pac_loss(batch: TupleBatch, heads: Heads, cfg: LossConfig) -> float:
    """Combined loss L = L(V,T) + lambda_v L(V',T) + lambda_t L(V,T')."""
    Ev, _ = _project_cached(batch.visual, heads.visual)
    Et, _ = _project_cached(batch.textual, heads.textual)
    Evg, _ = _project_cached(batch.visual_gen, heads.visual)
    Etg, _ = _project_cached(batch.textual_gen, heads.textual)
    loss = info_nce(Ev, Et, cfg.tau)
    if cfg.lambda_v != 0.0:
        loss += cfg.lambda_v * info_nce(Evg, Et, cfg.tau)
    if cfg.lambda_t != 0.0:
        loss += cfg.lambda_t * info_nce(Ev, Etg, cfg.tau)
    return loss


def pac_loss_grad(batch: TupleBatch, heads: Heads, cfg: LossConfig):
    """Loss plus exact gradients w.r.t. the visual and textual weight matrices."""
    Ev, nv = _project_cached(batch.visual, heads.visual)
    Et, nt = _project_cached(batch.textual, heads.textual)
    Evg, nvg = _project_cached(batch.visual_gen, heads.visual)
    Etg, ntg = _project_cached(batch.textual_gen, heads.textual)

    loss, dEv, dEt = _info_nce_value_and_embedding_grads(Ev, Et, cfg.tau)
    dEvg = np.zeros_like(Evg)
    dEtg = np.zeros_like(Etg)

    if cfg.lambda_v != 0.0:
        l2, g_vg, g_t = _info_nce_value_and_embedding_grads(Evg, Et, cfg.tau)
        loss += cfg.lambda_v * l2
        dEvg += cfg.lambda_v * g_vg
        dEt += cfg.lambda_v * g_t
    if cfg.lambda_t != 0.0:
        l3, g_v, g_tg = _info_nce_value_and_embedding_grads(Ev, Etg, cfg.tau)
        loss += cfg.lambda_t * l3
        dEv += cfg.lambda_t * g_v
        dEtg += cfg.lambda_t * g_tg

    grad_visual = (_normalization_backward(batch.visual, Ev, nv, dEv)
                   + _normalization_backward(batch.visual_gen, Evg, nvg, dEvg))
    grad_textual = (_normalization_backward(batch.textual, Et, nt, dEt)
                    + _normalization_backward(batch.textual_gen, Etg, ntg, dEtg))
    return loss, grad_visual, grad_textual
