"""Line-delimited JSON manifests: training tuples, score queries, judgments,
pairwise preference pairs, hallucination pairs, and reference pools.

Every record is one JSON object per line; parsing errors carry the line
number. Pairwise winners may be given directly or derived from vote counts,
in which case ties are broken by a named substream of the seed so that
ingestion is reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ManifestError
from .protocols import FoilPair, PairwisePair
from .rng import substream
from .trainer import AugmentedTuple


@dataclass(frozen=True)
class ScoreQuery:
    """One candidate to score: ids resolve against the loaded containers."""

    id: str
    candidate: str
    media: str
    refs: tuple = ()


@dataclass(frozen=True)
class JudgmentRecord:
    id: str
    candidate: str
    media: str
    human_score: float
    refs: tuple = ()


def _iter_records(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ManifestError(f"{path}:{lineno}: record must be a JSON object")
            yield lineno, record


def _required(record, key, lineno, path, kind=str):
    if key not in record:
        raise ManifestError(f"{path}:{lineno}: missing field {key!r}")
    value = record[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ManifestError(f"{path}:{lineno}: field {key!r} must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise ManifestError(f"{path}:{lineno}: field {key!r} must be {kind.__name__}")
    return value


def _ref_list(record, lineno, path):
    refs = record.get("refs", [])
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise ManifestError(f"{path}:{lineno}: field 'refs' must be a list of ids")
    return tuple(refs)


def load_tuples(path) -> list[AugmentedTuple]:
    out = []
    for lineno, rec in _iter_records(path):
        out.append(AugmentedTuple(
            v=_required(rec, "v", lineno, path),
            t=_required(rec, "t", lineno, path),
            v_gen=_required(rec, "v_gen", lineno, path),
            t_gen=_required(rec, "t_gen", lineno, path)))
    if not out:
        raise ManifestError(f"{path}: no tuples found")
    return out


def load_score_queries(path) -> list[ScoreQuery]:
    out = []
    for lineno, rec in _iter_records(path):
        out.append(ScoreQuery(
            id=_required(rec, "id", lineno, path),
            candidate=_required(rec, "candidate", lineno, path),
            media=_required(rec, "media", lineno, path),
            refs=_ref_list(rec, lineno, path)))
    _require_unique(out, path, "id")
    return out


def load_judgments(path) -> list[JudgmentRecord]:
    out = []
    for lineno, rec in _iter_records(path):
        out.append(JudgmentRecord(
            id=_required(rec, "id", lineno, path),
            candidate=_required(rec, "candidate", lineno, path),
            media=_required(rec, "media", lineno, path),
            human_score=_required(rec, "human_score", lineno, path, float),
            refs=_ref_list(rec, lineno, path)))
    _require_unique(out, path, "id")
    if not out:
        raise ManifestError(f"{path}: no judgment records found")
    return out


def load_pairwise(path, seed: int = 0) -> list[PairwisePair]:
    """Winner comes from 'winner' or from 'votes_a'/'votes_b'; vote ties are
    broken by the tie-break substream keyed on (media, a, b)."""
    out = []
    for lineno, rec in _iter_records(path):
        media = _required(rec, "media", lineno, path)
        a = _required(rec, "a", lineno, path)
        b = _required(rec, "b", lineno, path)
        category = rec.get("category", "none")
        if "winner" in rec:
            winner = rec["winner"]
        elif "votes_a" in rec and "votes_b" in rec:
            votes_a = _required(rec, "votes_a", lineno, path, float)
            votes_b = _required(rec, "votes_b", lineno, path, float)
            if votes_a > votes_b:
                winner = "A"
            elif votes_b > votes_a:
                winner = "B"
            else:
                rng = substream(seed, f"pairwise-tie:{media}:{a}:{b}")
                winner = "A" if rng.integers(2) == 0 else "B"
        else:
            raise ManifestError(
                f"{path}:{lineno}: need 'winner' or 'votes_a'/'votes_b'")
        try:
            out.append(PairwisePair(media=media, a=a, b=b, winner=winner,
                                    category=category))
        except ManifestError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise ManifestError(f"{path}: no pairs found")
    return out


def load_foil(path) -> list[FoilPair]:
    out = []
    for lineno, rec in _iter_records(path):
        try:
            out.append(FoilPair(
                media=_required(rec, "media", lineno, path),
                correct=_required(rec, "correct", lineno, path),
                foil=_required(rec, "foil", lineno, path)))
        except ManifestError as exc:
            if str(exc).startswith(str(path)):
                raise
            raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise ManifestError(f"{path}: no foil pairs found")
    return out


def load_reference_pool(path) -> dict:
    """{"media": id, "refs": [caption ids]} records -> media -> ref id list."""
    pool: dict[str, list] = {}
    for lineno, rec in _iter_records(path):
        media = _required(rec, "media", lineno, path)
        refs = _ref_list(rec, lineno, path)
        if not refs:
            raise ManifestError(f"{path}:{lineno}: empty reference list")
        if media in pool:
            raise ManifestError(f"{path}:{lineno}: duplicate media {media!r}")
        pool[media] = list(refs)
    if not pool:
        raise ManifestError(f"{path}: no reference records found")
    return pool


def _require_unique(records, path, attr):
    seen = set()
    for rec in records:
        key = getattr(rec, attr)
        if key in seen:
            raise ManifestError(f"{path}: duplicate {attr} {key!r}")
        seen.add(key)


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
