"""Candidate-caption scoring for images and videos.

Image scores are clamped scaled cosines in the finetuned joint space; the
reference-based variant takes the harmonic mean with the best
candidate-to-reference cosine. Video scores average a coarse term (global
caption vs. mean-pooled frames) with a fine term (idf-weighted F1 over
token/frame cosine maxima).
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field

import numpy as np

from .embedding import UNIT_ATOL, mean_pool, require_unit
from .errors import DegenerateVectorError, DimensionMismatchError, ManifestError

_TOKEN_SPLIT = re.compile(r"[\s" + re.escape(string.punctuation) + r"]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation; idf lookup keys only."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class ScoreConfig:
    """Readability scaling: ``w`` for image scores, ``video_w`` for video."""

    w: float = 2.0
    video_w: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.video_w <= 0:
            raise ValueError("scaling factors must be positive")


def pac_score(t, v, cfg: ScoreConfig = ScoreConfig()) -> float:
    """w * max(cos(t, v), 0) for a caption embedding t and image embedding v."""
    t = require_unit(t, "caption embedding")
    v = require_unit(v, "image embedding")
    if t.shape != v.shape:
        raise DimensionMismatchError("caption and image embeddings differ in dim")
    return cfg.w * max(float(t @ v), 0.0)


def harmonic_mean(a: float, b: float) -> float:
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def ref_pac_score(t, v, refs, cfg: ScoreConfig = ScoreConfig()) -> float:
    """Harmonic mean of the reference-free score and the best clamped
    candidate-to-reference cosine."""
    t = require_unit(t, "caption embedding")
    refs = [require_unit(r, "reference embedding") for r in refs]
    if not refs:
        raise ManifestError("reference-based scoring needs at least one reference")
    best = max(float(t @ r) for r in refs)
    return harmonic_mean(pac_score(t, v, cfg), max(0.0, best))


@dataclass(frozen=True)
class IdfTable:
    """Smoothed inverse document frequencies over a reference corpus.

    An empty table (corpus_size 0) yields zero weight everywhere, which the
    fine-grained scorer treats as uniform weighting.
    """

    weights: dict = field(default_factory=dict)
    corpus_size: int = 0

    def lookup(self, token: str) -> float:
        return self.weights.get(token, math.log(self.corpus_size + 1))


def compute_idf(reference_corpus) -> IdfTable:
    """idf(w) = ln((M + 1) / (df(w) + 1)) with df counting captions containing w."""
    corpus = [list(tokens) for tokens in reference_corpus]
    if not corpus:
        raise ManifestError("idf needs a non-empty reference corpus")
    m = len(corpus)
    df: dict[str, int] = {}
    for tokens in corpus:
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    weights = {tok: math.log((m + 1) / (count + 1)) for tok, count in df.items()}
    return IdfTable(weights, m)


@dataclass(frozen=True)
class TokenSequence:
    """Per-token embeddings of a caption plus its global embedding."""

    surfaces: tuple               # token surface strings, idf lookup only
    vectors: np.ndarray           # (len(surfaces), joint_dim), unit rows
    global_embedding: np.ndarray  # unit vector

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] == 0:
            raise DimensionMismatchError("token sequence needs at least one vector row")
        if len(self.surfaces) != vecs.shape[0]:
            raise DimensionMismatchError("surfaces and vectors disagree in length")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_ATOL):
            raise DegenerateVectorError("token embeddings must be unit-norm")
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "global_embedding",
                           require_unit(self.global_embedding, "global embedding"))


def _unit_rows(M, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] == 0:
        raise DimensionMismatchError(f"{what} must be a non-empty matrix")
    norms = np.linalg.norm(M, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_ATOL):
        raise DegenerateVectorError(f"{what} rows must be unit-norm")
    return M


def _idf_weights(surfaces, idf: IdfTable) -> np.ndarray:
    raw = np.array([idf.lookup(tok) for tok in surfaces], dtype=np.float64)
    total = raw.sum()
    if total <= 0.0:
        return np.full(len(surfaces), 1.0 / len(surfaces))
    return raw / total


def video_fine(candidate: TokenSequence, frames, idf: IdfTable) -> float:
    """Idf-weighted F1 of clamped per-token/per-frame cosine maxima."""
    F = _unit_rows(frames, "frame embeddings")
    if F.shape[1] != candidate.vectors.shape[1]:
        raise DimensionMismatchError("token and frame embeddings differ in dim")
    sims = candidate.vectors @ F.T
    per_token = np.maximum(sims.max(axis=1), 0.0)
    per_frame = np.maximum(sims.max(axis=0), 0.0)
    precision = float(_idf_weights(candidate.surfaces, idf) @ per_token)
    recall = float(per_frame.mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def video_score(candidate: TokenSequence, frames, idf: IdfTable,
                cfg: ScoreConfig = ScoreConfig()) -> float:
    """Mean of the coarse (global-vs-pooled, clamped) and fine terms, scaled."""
    F = _unit_rows(frames, "frame embeddings")
    coarse = max(float(candidate.global_embedding @ mean_pool(F)), 0.0)
    fine = video_fine(candidate, F, idf)
    return cfg.video_w * (coarse + fine) / 2.0


def ref_video_score(candidate: TokenSequence, frames, refs, idf: IdfTable,
                    cfg: ScoreConfig = ScoreConfig()) -> float:
    """Average of the video score and the best against-reference score, where
    a reference's tokens play the frame role and its global embedding the
    pooled-video role."""
    refs = list(refs)
    if not refs:
        raise ManifestError("reference-based video scoring needs references")
    for r in refs:
        if not isinstance(r, TokenSequence):
            raise ManifestError("video reference lacking token embeddings")
    own = video_score(candidate, frames, idf, cfg)
    best_ref = max(_against_reference(candidate, r, idf, cfg) for r in refs)
    return (own + best_ref) / 2.0


def _against_reference(candidate: TokenSequence, ref: TokenSequence,
                       idf: IdfTable, cfg: ScoreConfig) -> float:
    coarse = max(float(candidate.global_embedding @ ref.global_embedding), 0.0)
    fine = video_fine(candidate, ref.vectors, idf)
    return cfg.video_w * (coarse + fine) / 2.0
