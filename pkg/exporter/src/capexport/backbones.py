"""Frozen dual-encoder backbones.

A backbone maps images to visual feature vectors and captions to per-token
plus global textual feature vectors, all *pre-projection*; it also exposes
the projection matrices that map either side into the shared joint space.

``chromatic`` is a deterministic, dependency-light backbone grounded in pixel
statistics and color words: it has just enough cross-modal signal for smoke
tests and fixtures and needs no downloaded weights. ``clip-vit-b32`` wraps a
real CLIP dual encoder behind an optional import.
"""

from __future__ import annotations

import hashlib
import re
import string

import numpy as np
from PIL import Image

_TOKEN_SPLIT = re.compile(r"[\s" + re.escape(string.punctuation) + r"]+")

# concept layout: 4 quadrant RGB means + global RGB mean + global RGB std
CONCEPT_DIM = 18
VISUAL_DIM = 32
TEXT_DIM = 24

COLOR_PROTOTYPES = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
    "gray": (0.5, 0.5, 0.5),
    "grey": (0.5, 0.5, 0.5),
    "orange": (1.0, 0.5, 0.0),
}


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _orthonormal_rows(rows: int, cols: int, seed: int) -> np.ndarray:
    gauss = np.random.default_rng(seed).standard_normal((cols, rows))
    q, _ = np.linalg.qr(gauss)
    return q.T  # (rows, cols) with orthonormal rows


class ChromaticBackbone:
    """Deterministic pixel-statistics encoder with a shared concept space."""

    name = "chromatic"
    visual_dim = VISUAL_DIM
    text_dim = TEXT_DIM
    joint_dim = CONCEPT_DIM

    def __init__(self):
        self._lift_visual = _orthonormal_rows(CONCEPT_DIM, VISUAL_DIM, seed=1301)
        self._lift_text = _orthonormal_rows(CONCEPT_DIM, TEXT_DIM, seed=1303)

    # -- images -----------------------------------------------------------
    def encode_image(self, path) -> np.ndarray:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB").resize((16, 16)),
                             dtype=np.float64) / 255.0
        return self._concept_to_visual(self._image_concept(rgb))

    def _image_concept(self, rgb: np.ndarray) -> np.ndarray:
        h, w, _ = rgb.shape
        quads = [rgb[:h // 2, :w // 2], rgb[:h // 2, w // 2:],
                 rgb[h // 2:, :w // 2], rgb[h // 2:, w // 2:]]
        parts = [q.reshape(-1, 3).mean(axis=0) for q in quads]
        parts.append(rgb.reshape(-1, 3).mean(axis=0))
        parts.append(rgb.reshape(-1, 3).std(axis=0))
        return np.concatenate(parts)

    def _concept_to_visual(self, concept: np.ndarray) -> np.ndarray:
        return concept @ self._lift_visual

    # -- text -------------------------------------------------------------
    def encode_caption(self, text: str):
        """Returns (surfaces, token feature rows, global feature) or None for
        captions that tokenize to nothing."""
        surfaces = tokenize(text)
        if not surfaces:
            return None
        concepts = np.stack([self._token_concept(tok) for tok in surfaces])
        tokens = concepts @ self._lift_text
        global_feature = concepts.mean(axis=0) @ self._lift_text
        return surfaces, tokens, global_feature

    def _token_concept(self, token: str) -> np.ndarray:
        if token in COLOR_PROTOTYPES:
            color = np.asarray(COLOR_PROTOTYPES[token])
            return np.concatenate([np.tile(color, 5), np.zeros(3)])
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        return np.random.default_rng(seed).standard_normal(CONCEPT_DIM) * 0.05

    # -- projections ------------------------------------------------------
    def projections(self):
        """Backbone projection matrices into the joint space; for orthonormal
        lifts the transpose inverts the lift exactly."""
        return self._lift_visual.T, self._lift_text.T


class ClipBackbone:
    """CLIP ViT-B/32-class dual encoder via transformers (optional extra).

    Exports pooled pre-projection features, last-layer token states trimmed
    to the attention mask, and the model's own projection matrices."""

    name = "clip-vit-b32"

    def __init__(self, model_id: str = "openai/clip-vit-base-patch32",
                 device: str = "cpu", batch_size: int = 16):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(
                "the clip backbone needs the [clip] extra (torch, transformers)"
            ) from exc
        self._torch = torch
        self.device = device
        self.batch_size = batch_size
        self.model = CLIPModel.from_pretrained(model_id).to(device).eval()
        self.processor = CLIPProcessor.from_pretrained(model_id)
        self.visual_dim = self.model.config.vision_config.hidden_size
        self.text_dim = self.model.config.text_config.hidden_size
        self.joint_dim = self.model.config.projection_dim

    def encode_image(self, path) -> np.ndarray:
        torch = self._torch
        with Image.open(path) as img:
            inputs = self.processor(images=img.convert("RGB"), return_tensors="pt")
        with torch.no_grad():
            out = self.model.vision_model(pixel_values=inputs["pixel_values"].to(self.device))
        return out.pooler_output[0].cpu().numpy().astype(np.float64)

    def encode_caption(self, text: str):
        torch = self._torch
        inputs = self.processor(text=[text], return_tensors="pt", padding=True,
                                truncation=True)
        with torch.no_grad():
            out = self.model.text_model(
                input_ids=inputs["input_ids"].to(self.device),
                attention_mask=inputs["attention_mask"].to(self.device))
        length = int(inputs["attention_mask"][0].sum())
        tokens = out.last_hidden_state[0, :length].cpu().numpy().astype(np.float64)
        pooled = out.pooler_output[0].cpu().numpy().astype(np.float64)
        surfaces = self.processor.tokenizer.convert_ids_to_tokens(
            inputs["input_ids"][0][:length])
        return list(surfaces), tokens, pooled

    def projections(self):
        visual = self.model.visual_projection.weight.detach().cpu().numpy().T
        textual = self.model.text_projection.weight.detach().cpu().numpy().T
        return visual.astype(np.float64), textual.astype(np.float64)


BACKBONES = {
    "chromatic": ChromaticBackbone,
    "clip-vit-b32": ClipBackbone,
}


def load_backbone(name: str, **kwargs):
    if name not in BACKBONES:
        raise ValueError(f"unknown backbone {name!r}; available: {sorted(BACKBONES)}")
    return BACKBONES[name](**kwargs)
