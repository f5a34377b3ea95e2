"""Checkpoint files: the two projection matrices plus training metadata,
stored in the tensor container format (role ``projection-checkpoint``)."""

from __future__ import annotations

import dataclasses

import numpy as np

from .container import (CHECKPOINT_TEXTUAL_ID, CHECKPOINT_VISUAL_ID,
                        EmbeddingContainer, read_container, write_container)
from .contrastive import Heads, LossConfig
from .embedding import ProjectionHead
from .errors import ContainerFormatError


def save_checkpoint(path, heads: Heads, loss_cfg: LossConfig | None = None,
                    train_cfg=None, extra: dict | None = None) -> None:
    meta = dict(extra or {})
    if loss_cfg is not None:
        meta["loss_config"] = dataclasses.asdict(loss_cfg)
    if train_cfg is not None:
        meta["train_config"] = dataclasses.asdict(train_cfg)
    payload = np.concatenate([heads.visual.weights, heads.textual.weights], axis=0)
    container = EmbeddingContainer(
        role="projection-checkpoint",
        dim=heads.joint_dim,
        ids=[CHECKPOINT_VISUAL_ID, CHECKPOINT_TEXTUAL_ID],
        rows_per_id=[heads.visual.backbone_dim, heads.textual.backbone_dim],
        payload=payload.astype(np.float32),
        metadata=meta,
    )
    write_container(container, path)


def load_checkpoint(path):
    """Returns (heads, metadata)."""
    container = read_container(path)
    if container.role != "projection-checkpoint":
        raise ContainerFormatError(
            f"expected a checkpoint container, found role {container.role!r}",
            code="bad-role")
    offsets = container.offsets()
    for required in (CHECKPOINT_VISUAL_ID, CHECKPOINT_TEXTUAL_ID):
        if required not in offsets:
            raise ContainerFormatError(f"checkpoint lacks {required!r}", code="bad-index")
    payload = container.payload.astype(np.float64)
    lo, hi = offsets[CHECKPOINT_VISUAL_ID]
    visual = ProjectionHead(payload[lo:hi])
    lo, hi = offsets[CHECKPOINT_TEXTUAL_ID]
    textual = ProjectionHead(payload[lo:hi])
    return Heads(visual, textual), container.metadata
