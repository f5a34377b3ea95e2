"""Human-judgment protocols: pairwise preference accuracy, hallucination
detection accuracy, and system-level score tables.

Pairwise accuracy follows the five-references-per-draw, five-draw recipe:
per draw the per-media references are sampled from a named substream, both
candidates are scored with the same references, and a score tie counts 0.5
so a constant scorer lands at exactly 50%. Hallucination accuracy is strict:
ties count as failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ManifestError
from .rng import substream

PAIR_CATEGORIES = ("HC", "HI", "HM", "MM", "none")


@dataclass(frozen=True)
class PairwisePair:
    media: str
    a: str
    b: str
    winner: str                 # "A" | "B", fixed at ingestion time
    category: str = "none"

    def __post_init__(self):
        if self.winner not in ("A", "B"):
            raise ManifestError(f"pair winner must be A or B, got {self.winner!r}")
        if self.category not in PAIR_CATEGORIES:
            raise ManifestError(f"unknown pair category {self.category!r}")


@dataclass(frozen=True)
class FoilPair:
    media: str
    correct: str
    foil: str

    def __post_init__(self):
        if self.correct == self.foil:
            raise ManifestError("correct and foil caption ids must differ")


@dataclass
class PairwiseResult:
    per_category: dict           # category -> accuracy in percent
    mean: float                  # mean over categories present, percent
    draws: int
    refs_per_draw: int
    seed: int
    n_pairs: int


def pairwise_accuracy(pairs, scorer, reference_pool=None, refs_per_draw: int = 5,
                      draws: int = 5, seed: int = 0) -> PairwiseResult:
    """Fraction of pairs where the human-preferred candidate scores strictly
    higher, per category and averaged over categories and draws.

    ``scorer(candidate_id, media_id, refs)`` is called with ``refs=None`` for
    reference-free scoring (``reference_pool is None``), which uses a single
    pass regardless of ``draws``.
    """
    pairs = list(pairs)
    if not pairs:
        raise ManifestError("pairwise accuracy over an empty pair list")
    if reference_pool is None:
        draw_refs = [None]
    else:
        for pair in pairs:
            pool = reference_pool.get(pair.media, [])
            if len(pool) < refs_per_draw:
                raise ManifestError(
                    f"media {pair.media!r} has {len(pool)} references, "
                    f"need {refs_per_draw}")
        draw_refs = list(range(draws))

    categories = sorted({p.category for p in pairs})
    per_category_draws = {cat: [] for cat in categories}
    for draw in draw_refs:
        refs_cache: dict[str, list] = {}

        def refs_for(media: str):
            if draw is None:
                return None
            if media not in refs_cache:
                pool = reference_pool[media]
                rng = substream(seed, f"pairwise-draw{draw}:{media}")
                picked = rng.choice(len(pool), size=refs_per_draw, replace=False)
                refs_cache[media] = [pool[i] for i in sorted(picked)]
            return refs_cache[media]

        totals = {cat: 0.0 for cat in categories}
        counts = {cat: 0 for cat in categories}
        for pair in pairs:
            refs = refs_for(pair.media)
            score_a = scorer(pair.a, pair.media, refs)
            score_b = scorer(pair.b, pair.media, refs)
            if score_a == score_b:
                credit = 0.5
            elif (score_a > score_b) == (pair.winner == "A"):
                credit = 1.0
            else:
                credit = 0.0
            totals[pair.category] += credit
            counts[pair.category] += 1
        for cat in categories:
            per_category_draws[cat].append(100.0 * totals[cat] / counts[cat])

    per_category = {cat: float(np.mean(vals)) for cat, vals in per_category_draws.items()}
    mean = float(np.mean([per_category[cat] for cat in categories]))
    return PairwiseResult(per_category, mean, len(draw_refs), refs_per_draw,
                          seed, len(pairs))


def foil_accuracy(pairs, scorer) -> float:
    """Fraction of pairs where the correct caption outscores the foil; a tie
    counts as failure."""
    pairs = list(pairs)
    if not pairs:
        raise ManifestError("hallucination accuracy over an empty pair list")
    wins = sum(1 for p in pairs
               if scorer(p.correct, p.media) > scorer(p.foil, p.media))
    return wins / len(pairs)


@dataclass
class SystemReport:
    metric_names: list
    rows: list                   # (model name, [mean per metric])

    def to_text(self) -> str:
        header = ["model"] + list(self.metric_names)
        body = [[name] + [f"{v:.10f}" for v in means] for name, means in self.rows]
        widths = [max(len(r[c]) for r in [header] + body) for c in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in [header] + body]
        return "\n".join(lines) + "\n"


def system_report(models, metrics) -> SystemReport:
    """Corpus-mean score of each model under each metric.

    ``models`` is a list of (name, {media_id: candidate_id}); all models must
    cover the same media set. ``metrics`` is a list of
    (name, scorer(candidate_id, media_id) -> float).
    """
    models = list(models)
    if not models:
        raise ManifestError("system report needs at least one model")
    media_sets = [frozenset(candidates) for _, candidates in models]
    if len(set(media_sets)) != 1:
        raise ManifestError("mismatched media sets across models")
    if not media_sets[0]:
        raise ManifestError("system report needs a non-empty media set")
    media_order = sorted(media_sets[0])
    rows = []
    for name, candidates in models:
        means = [float(np.mean([scorer(candidates[m], m) for m in media_order]))
                 for _, scorer in metrics]
        rows.append((name, means))
    return SystemReport([n for n, _ in metrics], rows)
