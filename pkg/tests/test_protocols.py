import numpy as np
import pytest

from capscore.errors import ManifestError
from capscore.protocols import (FoilPair, PairwisePair, foil_accuracy,
                                pairwise_accuracy, system_report)


def make_pairs():
    return [
        PairwisePair("m1", "a1", "b1", "A", "HC"),
        PairwisePair("m1", "a2", "b2", "B", "HC"),
        PairwisePair("m2", "a3", "b3", "A", "HI"),
        PairwisePair("m2", "a4", "b4", "B", "MM"),
        PairwisePair("m3", "a5", "b5", "A", "MM"),
    ]


class TestPairwiseAccuracy:
    def test_oracle_scorer_scores_hundred(self):
        pairs = make_pairs()
        winners = {(p.media, p.a if p.winner == "A" else p.b) for p in pairs}

        def scorer(candidate, media, refs):
            return 1.0 if (media, candidate) in winners else 0.0

        result = pairwise_accuracy(pairs, scorer)
        assert result.mean == 100.0
        assert all(v == 100.0 for v in result.per_category.values())

    def test_constant_scorer_scores_exactly_fifty(self):
        result = pairwise_accuracy(make_pairs(), lambda c, m, r: 0.123)
        assert result.mean == 50.0
        assert all(v == 50.0 for v in result.per_category.values())

    def test_length_baseline_matches_hand_enumeration(self):
        lengths = {"a1": 9, "b1": 4,     # A longer, A wins -> hit
                   "a2": 7, "b2": 7,     # tie -> 0.5
                   "a3": 2, "b3": 6,     # B longer, A wins -> miss
                   "a4": 3, "b4": 8,     # B longer, B wins -> hit
                   "a5": 5, "b5": 1}     # A longer, A wins -> hit
        result = pairwise_accuracy(make_pairs(), lambda c, m, r: lengths[c])
        # HC: (1 + 0.5)/2 ; HI: 0/1 ; MM: (1 + 1)/2
        assert result.per_category["HC"] == pytest.approx(75.0)
        assert result.per_category["HI"] == 0.0
        assert result.per_category["MM"] == 100.0
        assert result.mean == pytest.approx((75.0 + 0.0 + 100.0) / 3.0)

    def test_reference_draws_are_seeded_and_reproducible(self):
        pool = {"m1": [f"r{i}" for i in range(8)],
                "m2": [f"s{i}" for i in range(8)],
                "m3": [f"t{i}" for i in range(8)]}
        calls_a, calls_b = [], []

        def recording_scorer(calls):
            def scorer(candidate, media, refs):
                calls.append((candidate, media, tuple(refs)))
                return float(len(candidate))
            return scorer

        r1 = pairwise_accuracy(make_pairs(), recording_scorer(calls_a),
                               reference_pool=pool, refs_per_draw=3, draws=4,
                               seed=99)
        r2 = pairwise_accuracy(make_pairs(), recording_scorer(calls_b),
                               reference_pool=pool, refs_per_draw=3, draws=4,
                               seed=99)
        assert calls_a == calls_b
        assert r1 == r2
        # both candidates of one pair see the same drawn references
        by_draw_media = {}
        for candidate, media, refs in calls_a:
            by_draw_media.setdefault((media, refs), set()).add(candidate)
        assert any(len(v) > 1 for v in by_draw_media.values())

    def test_insufficient_references_rejected(self):
        pool = {"m1": ["r1"], "m2": ["r1", "r2", "r3", "r4", "r5"],
                "m3": ["r1", "r2", "r3", "r4", "r5"]}
        with pytest.raises(ManifestError, match="references"):
            pairwise_accuracy(make_pairs(), lambda c, m, r: 0.0,
                              reference_pool=pool)

    def test_accuracy_bounded(self):
        rng = np.random.default_rng(7)
        scores = {}

        def scorer(candidate, media, refs):
            return scores.setdefault(candidate, rng.uniform())

        result = pairwise_accuracy(make_pairs(), scorer)
        assert 0.0 <= result.mean <= 100.0
        assert all(0.0 <= v <= 100.0 for v in result.per_category.values())


class TestFoilAccuracy:
    def make_geometry(self, n=24, dim=12, seed=5):
        """Foil embeddings are the correct ones plus orthogonal noise, which
        strictly lowers the cosine to the image."""
        rng = np.random.default_rng(seed)
        images = {}
        captions = {}
        pairs = []
        for k in range(n):
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            t = v.copy()
            noise = rng.standard_normal(dim)
            noise -= (noise @ v) * v          # orthogonal to the image
            noise /= np.linalg.norm(noise)
            foil = t + 0.8 * noise
            foil /= np.linalg.norm(foil)
            images[f"img{k}"] = v
            captions[f"ok{k}"] = t
            captions[f"foil{k}"] = foil
            pairs.append(FoilPair(f"img{k}", f"ok{k}", f"foil{k}"))
        return pairs, images, captions

    def test_indicator_scorer(self):
        pairs = [FoilPair("m1", "c1", "f1"), FoilPair("m2", "c2", "f2")]
        assert foil_accuracy(pairs, lambda c, m: 1.0 if c.startswith("c") else 0.0) == 1.0

    def test_constant_scorer_fails_all_ties(self):
        pairs = [FoilPair("m1", "c1", "f1"), FoilPair("m2", "c2", "f2")]
        assert foil_accuracy(pairs, lambda c, m: 0.5) == 0.0

    def test_orthogonal_noise_geometry_is_detected(self):
        pairs, images, captions = self.make_geometry()

        def scorer(candidate, media):
            return 2.0 * max(float(captions[candidate] @ images[media]), 0.0)

        assert foil_accuracy(pairs, scorer) == 1.0

    def test_identical_ids_rejected(self):
        with pytest.raises(ManifestError):
            FoilPair("m", "same", "same")

    def test_empty_rejected(self):
        with pytest.raises(ManifestError):
            foil_accuracy([], lambda c, m: 0.0)


class TestSystemReport:
    def test_single_model_single_metric(self):
        report = system_report([("model-a", {"m1": "c1", "m2": "c2"})],
                               [("metric", lambda c, m: 0.25)])
        assert report.rows == [("model-a", [0.25])]
        assert "model-a" in report.to_text()

    def test_identical_models_identical_rows(self):
        candidates = {"m1": "c1", "m2": "c2"}
        report = system_report([("one", candidates), ("two", dict(candidates))],
                               [("metric", lambda c, m: float(len(c)))])
        assert report.rows[0][1] == report.rows[1][1]

    def test_graded_models_are_monotone_and_match_oracle(self):
        quality = {"weak": 0.2, "mid": 0.5, "strong": 0.9}
        media = ["m1", "m2", "m3", "m4"]
        models = [(name, {m: f"{name}:{m}" for m in media}) for name in quality]

        def scorer(candidate, media_id):
            name = candidate.split(":")[0]
            return quality[name] + 0.01 * len(media_id)

        report = system_report(models, [("metric", scorer)])
        means = {name: row[0] for name, row in report.rows}
        expected = {name: np.mean([scorer(f"{name}:{m}", m) for m in media])
                    for name in quality}
        for name in quality:
            assert means[name] == pytest.approx(expected[name], abs=1e-12)
        assert means["weak"] < means["mid"] < means["strong"]

    def test_mismatched_media_sets_rejected(self):
        with pytest.raises(ManifestError, match="mismatched media sets"):
            system_report([("a", {"m1": "c"}), ("b", {"m2": "c"})],
                          [("metric", lambda c, m: 0.0)])
