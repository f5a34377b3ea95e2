"""Lookup layers over loaded containers.

``FeatureStore`` indexes raw backbone features by id and role.
``EmbeddingStore`` is the projected view the scorers consume: every vector
has been pushed through the projection heads (or only normalized when no
checkpoint is in play) and lies on the unit sphere.
"""

from __future__ import annotations

import numpy as np

from .container import EmbeddingContainer, read_container
from .contrastive import Heads, TupleBatch
from .embedding import ProjectionHead, project_rows
from .errors import ContainerFormatError, DanglingIdError, DimensionMismatchError
from .scoring import TokenSequence


class FeatureStore:
    """Raw feature rows keyed by id, one namespace per container role."""

    def __init__(self):
        self.visual: dict[str, np.ndarray] = {}
        self.text: dict[str, np.ndarray] = {}
        self.tokens: dict[str, tuple] = {}      # id -> (surfaces, rows)
        self.frames: dict[str, np.ndarray] = {}
        self.dims: dict[str, int] = {}

    def load(self, path) -> "FeatureStore":
        return self.add(read_container(path), source=str(path))

    def add(self, container: EmbeddingContainer, source: str = "<memory>") -> "FeatureStore":
        role = container.role
        if role == "projection-checkpoint":
            raise ContainerFormatError(
                f"{source}: checkpoints cannot be loaded as features", code="bad-role")
        known = self.dims.get(role)
        if known is not None and known != container.dim:
            raise DimensionMismatchError(
                f"{source}: role {role} dim {container.dim} conflicts with {known}")
        self.dims[role] = container.dim
        target = {"visual-feature": self.visual, "text-feature": self.text,
                  "text-token-sequence": self.tokens, "frame-sequence": self.frames}[role]
        offsets = container.offsets()
        payload = container.payload.astype(np.float64)
        for idx, ident in enumerate(container.ids):
            if ident in target:
                raise ContainerFormatError(
                    f"{source}: duplicate id {ident!r} for role {role}",
                    code="duplicate-id")
            lo, hi = offsets[ident]
            if role == "visual-feature" or role == "text-feature":
                target[ident] = payload[lo]
            elif role == "frame-sequence":
                target[ident] = payload[lo:hi]
            else:
                target[ident] = (tuple(container.surfaces[idx]), payload[lo:hi])
        return self

    def gather_tuples(self, tuples) -> TupleBatch:
        """Stack the four feature matrices for a tuple list; missing ids are
        reported once, aggregated."""
        missing = []
        rows = {"v": [], "t": [], "v_gen": [], "t_gen": []}
        for tup in tuples:
            for field_name, table in (("v", self.visual), ("t", self.text),
                                      ("v_gen", self.visual), ("t_gen", self.text)):
                ident = getattr(tup, field_name)
                if ident not in table:
                    missing.append(ident)
                else:
                    rows[field_name].append(table[ident])
        if missing:
            raise DanglingIdError(missing)
        return TupleBatch(np.stack(rows["v"]), np.stack(rows["t"]),
                          np.stack(rows["v_gen"]), np.stack(rows["t_gen"]))


class EmbeddingStore:
    """Unit-sphere embeddings for scoring, keyed by id."""

    def __init__(self, visual, text, tokens, frames):
        self.visual = visual
        self.text = text
        self.tokens = tokens
        self.frames = frames

    @classmethod
    def project(cls, features: FeatureStore, heads: Heads | None) -> "EmbeddingStore":
        """Project every stored feature through the heads; with no heads the
        features are assumed pre-projected and are only normalized."""
        visual_head = heads.visual if heads else None
        textual_head = heads.textual if heads else None
        visual = _project_table(features.visual, visual_head)
        text = _project_table(features.text, textual_head)
        frames = {i: _project_matrix(m, visual_head) for i, m in features.frames.items()}
        tokens = {i: (surfs, _project_matrix(m, textual_head))
                  for i, (surfs, m) in features.tokens.items()}
        return cls(visual, text, tokens, frames)

    def token_sequence(self, ident: str) -> TokenSequence:
        surfs, rows = self.tokens[ident]
        return TokenSequence(surfaces=surfs, vectors=rows,
                             global_embedding=self.text[ident])


def _project_matrix(matrix: np.ndarray, head: ProjectionHead | None) -> np.ndarray:
    if head is None:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise DimensionMismatchError("cannot normalize zero-norm feature rows")
        return matrix / norms
    return project_rows(matrix, head)


def _project_table(table: dict, head: ProjectionHead | None) -> dict:
    if not table:
        return {}
    ids = list(table)
    matrix = _project_matrix(np.stack([table[i] for i in ids]), head)
    return {ident: matrix[k] for k, ident in enumerate(ids)}
