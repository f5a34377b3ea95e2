"""Batch scoring and report serialization.

Reports are line-delimited text: ``#``-prefixed header lines carrying the
configuration (including the seed, for replay), one ``id<TAB>score`` line per
record in id order, and a ``#``-prefixed summary footer. All floats are
printed with ten decimals so replays are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DanglingIdError, ManifestError
from .protocols import PairwiseResult
from .scoring import (IdfTable, ScoreConfig, compute_idf, pac_score,
                      ref_pac_score, ref_video_score, video_score)
from .store import EmbeddingStore

REPORT_HEADER = "# capscore-report v1"


@dataclass
class ScoreReport:
    """Per-record scores plus corpus aggregates."""

    mode: str                     # image | video
    variant: str                  # free | ref
    config: ScoreConfig
    records: list = field(default_factory=list)   # (id, score), id-ordered

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def mean(self):
        if not self.records:
            return None
        return float(np.mean([s for _, s in self.records]))

    @property
    def stddev(self):
        if not self.records:
            return None
        return float(np.std([s for _, s in self.records]))

    def to_text(self) -> str:
        lines = [f"{REPORT_HEADER} kind=score mode={self.mode} "
                 f"variant={self.variant} w={self.config.w:g} "
                 f"video-w={self.config.video_w:g}"]
        lines += [f"{ident}\t{score:.10f}" for ident, score in self.records]
        lines.append(f"# n {self.n}")
        if self.records:
            lines.append(f"# mean {self.mean:.10f}")
            lines.append(f"# stddev {self.stddev:.10f}")
        else:
            lines.append("# mean undefined")
            lines.append("# stddev undefined")
        return "\n".join(lines) + "\n"


def parse_score_lines(text: str) -> dict:
    """id -> score from report text, skipping header/footer lines."""
    scores: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ManifestError(f"score line {lineno}: expected 'id<TAB>score'")
        ident, raw = parts
        try:
            value = float(raw)
        except ValueError as exc:
            raise ManifestError(f"score line {lineno}: bad score {raw!r}") from exc
        if ident in scores:
            raise ManifestError(f"score line {lineno}: duplicate id {ident!r}")
        scores[ident] = value
    if not scores:
        raise ManifestError("no score lines found")
    return scores


def read_score_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_score_lines(fh.read())


def batch_score(queries, store: EmbeddingStore, mode: str = "image",
                variant: str = "free", cfg: ScoreConfig = ScoreConfig(),
                reference_pool=None) -> ScoreReport:
    """Score every query record; records come back ordered by record id.

    Reference ids come from each record, falling back to ``reference_pool``
    keyed by media id. Unresolvable ids across the whole manifest are
    aggregated into one error before any scoring happens.
    """
    if mode not in ("image", "video"):
        raise ManifestError(f"unknown scoring mode {mode!r}")
    if variant not in ("free", "ref"):
        raise ManifestError(f"unknown scoring variant {variant!r}")
    ordered = sorted(queries, key=lambda q: q.id)
    resolved_refs = {}
    for query in ordered:
        refs = list(query.refs) if query.refs else list(
            (reference_pool or {}).get(query.media, []))
        if variant == "ref" and not refs:
            raise ManifestError(f"record {query.id!r} has no references")
        resolved_refs[query.id] = refs

    _check_resolvable(ordered, resolved_refs, store, mode, variant)

    idf = IdfTable()
    if mode == "video":
        ref_ids = sorted({r for refs in resolved_refs.values() for r in refs})
        if ref_ids:
            idf = compute_idf([store.tokens[r][0] for r in ref_ids])

    report = ScoreReport(mode=mode, variant=variant, config=cfg)
    for query in ordered:
        refs = resolved_refs[query.id]
        if mode == "image":
            t = store.text[query.candidate]
            v = store.visual[query.media]
            if variant == "free":
                score = pac_score(t, v, cfg)
            else:
                score = ref_pac_score(t, v, [store.text[r] for r in refs], cfg)
        else:
            candidate = store.token_sequence(query.candidate)
            frames = store.frames[query.media]
            if variant == "free":
                score = video_score(candidate, frames, idf, cfg)
            else:
                score = ref_video_score(candidate, frames,
                                        [store.token_sequence(r) for r in refs],
                                        idf, cfg)
        report.records.append((query.id, score))
    return report


def _check_resolvable(queries, resolved_refs, store: EmbeddingStore,
                      mode: str, variant: str) -> None:
    missing = []
    for query in queries:
        refs = resolved_refs[query.id] if variant == "ref" else []
        if mode == "image":
            if query.candidate not in store.text:
                missing.append(query.candidate)
            if query.media not in store.visual:
                missing.append(query.media)
            missing += [r for r in refs if r not in store.text]
        else:
            if query.candidate not in store.tokens or query.candidate not in store.text:
                missing.append(query.candidate)
            if query.media not in store.frames:
                missing.append(query.media)
            missing += [r for r in refs if r not in store.tokens or r not in store.text]
    if missing:
        raise DanglingIdError(missing)


def correlation_report_text(stat: str, value: float, n: int) -> str:
    return (f"{REPORT_HEADER} kind=correlation stat={stat} n={n}\n"
            f"{stat}\t{value:.10f}\n")


def pairwise_report_text(result: PairwiseResult) -> str:
    lines = [f"{REPORT_HEADER} kind=pairwise seed={result.seed} "
             f"draws={result.draws} refs-per-draw={result.refs_per_draw} "
             f"n-pairs={result.n_pairs}"]
    for category in sorted(result.per_category):
        lines.append(f"{category}\t{result.per_category[category]:.10f}")
    lines.append(f"# mean {result.mean:.10f}")
    return "\n".join(lines) + "\n"


def foil_report_text(accuracy: float, n_pairs: int, variant: str) -> str:
    return (f"{REPORT_HEADER} kind=foil variant={variant} n-pairs={n_pairs}\n"
            f"accuracy\t{accuracy:.10f}\n")
