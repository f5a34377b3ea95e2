"""Shared fixtures: deterministic vectors and a small on-disk workspace of
containers and manifests used by the service/CLI tests."""

from __future__ import annotations

import numpy as np
import pytest

from capscore.checkpoint import save_checkpoint
from capscore.container import flat_container, write_container
from capscore.contrastive import Heads
from capscore.embedding import ProjectionHead
from capscore.manifests import write_jsonl


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unit_rows(rng, 1, dim)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def image_workspace(tmp_path):
    """Three images, five captions (three candidates + two references), one
    identity checkpoint; candidate cap1 matches img1 best, and so on."""
    rng = np.random.default_rng(99)
    dim = 8
    images = unit_rows(rng, 3, dim)
    img_ids = ["img1", "img2", "img3"]
    # candidate captions lean toward their own image
    captions = {}
    for k, ident in enumerate(["cap1", "cap2", "cap3"]):
        mix = images[k] + 0.35 * unit(rng, dim)
        captions[ident] = mix / np.linalg.norm(mix)
    for k, ident in enumerate(["ref1", "ref2"]):
        mix = images[0] + 0.5 * unit(rng, dim)
        captions[ident] = mix / np.linalg.norm(mix)
    cap_ids = list(captions)

    visual_path = tmp_path / "visual.bin"
    text_path = tmp_path / "text.bin"
    write_container(flat_container("visual-feature", img_ids, images), visual_path)
    write_container(flat_container("text-feature", cap_ids,
                                   np.stack([captions[c] for c in cap_ids])), text_path)

    checkpoint_path = tmp_path / "identity.ckpt"
    save_checkpoint(checkpoint_path,
                    Heads(ProjectionHead.identity(dim), ProjectionHead.identity(dim)))

    manifest_path = tmp_path / "score.jsonl"
    write_jsonl(manifest_path, [
        {"id": f"rec{k + 1}", "candidate": f"cap{k + 1}", "media": f"img{k + 1}",
         "refs": ["ref1", "ref2"]}
        for k in range(3)
    ])
    return {
        "dir": tmp_path,
        "dim": dim,
        "visual": str(visual_path),
        "text": str(text_path),
        "checkpoint": str(checkpoint_path),
        "manifest": str(manifest_path),
        "images": dict(zip(img_ids, images)),
        "captions": captions,
    }
