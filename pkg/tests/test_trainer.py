import numpy as np
import pytest

from capscore.contrastive import LossConfig, TupleBatch
from capscore.errors import EngineError, TrainingDivergedError
from capscore.rng import substream
from capscore.trainer import (GridEvalBundle, TrainConfig, grid_search,
                              retrieval_at_1, train)


def rotation_dataset(n, dim, sigma, seed, noise_positives=False):
    """Visual features and rotated textual features of shared latents; the
    generated items are noisy copies unless noise_positives asks for junk."""
    rng = substream(seed, "toy-data")
    rot, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    z = rng.standard_normal((n, dim))
    xv = z + sigma * rng.standard_normal((n, dim))
    xt = z @ rot + sigma * rng.standard_normal((n, dim))
    if noise_positives:
        xvg = rng.standard_normal((n, dim))
        xtg = rng.standard_normal((n, dim))
    else:
        xvg = z + sigma * rng.standard_normal((n, dim))
        xtg = z @ rot + sigma * rng.standard_normal((n, dim))
    return TupleBatch(xv, xt, xvg, xtg)


def split(data, n_train):
    n = len(data)
    return data.take(np.arange(n_train)), data.take(np.arange(n_train, n))


class TestTrain:
    def test_toy_rotation_reaches_perfect_retrieval(self):
        data = rotation_dataset(192, 12, 0.01, seed=7)
        train_data, val_data = split(data, 160)
        cfg = TrainConfig(learning_rate=1e-2, batch_size=64, patience_iters=600,
                          max_iters=800, seed=7, val_every=100)
        heads, history = train(train_data, val_data, cfg, LossConfig(tau=0.1))
        assert history.validations[-1][1] < history.validations[0][1]
        assert history.best_val_loss < history.validations[0][1]
        i2t, t2i = retrieval_at_1(val_data, heads)
        assert i2t == 1.0 and t2i == 1.0

    def test_fixed_seed_is_bitwise_deterministic(self):
        data = rotation_dataset(48, 8, 0.05, seed=3)
        train_data, val_data = split(data, 40)
        cfg = TrainConfig(learning_rate=1e-3, batch_size=16, patience_iters=100,
                          max_iters=200, seed=11, val_every=50)
        loss_cfg = LossConfig(tau=0.5)
        heads_a, hist_a = train(train_data, val_data, cfg, loss_cfg)
        heads_b, hist_b = train(train_data, val_data, cfg, loss_cfg)
        assert hist_a.train_loss == hist_b.train_loss
        assert hist_a.validations == hist_b.validations
        assert np.array_equal(heads_a.visual.weights, heads_b.visual.weights)
        assert np.array_equal(heads_a.textual.weights, heads_b.textual.weights)

    def test_patience_one_with_constant_single_tuple_stops_quickly(self):
        rng = substream(1, "single")
        row = rng.standard_normal((1, 4))
        data = TupleBatch(row, row.copy(), row.copy(), row.copy())
        cfg = TrainConfig(learning_rate=1e-3, batch_size=256, patience_iters=1,
                          max_iters=10_000, seed=0, val_every=5)
        heads, history = train(data, data, cfg, LossConfig(tau=0.1))
        assert history.stop_reason == "patience"
        assert len(history.train_loss) <= 10

    def test_empty_split_rejected(self):
        rng = substream(2, "tiny")
        data = TupleBatch(*[rng.standard_normal((2, 4)) for _ in range(4)])
        # an empty split cannot even be represented as a batch
        with pytest.raises(EngineError):
            train(data.take(np.arange(0)), data, TrainConfig(), LossConfig())

    def test_non_finite_loss_aborts_with_diagnostic(self):
        rng = substream(4, "diverge")
        data = TupleBatch(*[rng.standard_normal((8, 4)) for _ in range(4)])
        cfg = TrainConfig(learning_rate=1e9, batch_size=8, patience_iters=50,
                          max_iters=200, seed=1, val_every=10)
        with pytest.raises(TrainingDivergedError):
            train(data, data, cfg, LossConfig(tau=1e-4))


class TestGridSearch:
    def make_bundle(self, noise_positives, seed=17):
        """Bundle whose single task is a graded correlation: candidates at
        increasing corruption levels must rank by (negated) corruption."""
        from capscore.embedding import project_rows
        from capscore.rankstats import spearman_rho

        rng = substream(seed, "toy-data")
        dim, n, sigma = 8, 96, 0.02
        rot, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        z = rng.standard_normal((n, dim))
        xv = z + sigma * rng.standard_normal((n, dim))
        xt = z @ rot + sigma * rng.standard_normal((n, dim))
        if noise_positives:
            xvg = rng.standard_normal((n, dim))
            xtg = rng.standard_normal((n, dim))
        else:
            xvg = z + sigma * rng.standard_normal((n, dim))
            xtg = z @ rot + sigma * rng.standard_normal((n, dim))
        data = TupleBatch(xv, xt, xvg, xtg)
        train_data, val_data = split(data, 80)

        erng = substream(seed, "graded")
        levels = [0.0, 0.3, 0.6, 1.2, 2.4]
        media = np.repeat(z[:16], len(levels), axis=0)
        cands = np.stack([z[i] @ rot + eps * erng.standard_normal(dim)
                          for i in range(16) for eps in levels])
        human = np.array([-eps for _ in range(16) for eps in levels])

        def task(heads):
            ev = project_rows(media, heads.visual)
            et = project_rows(cands, heads.textual)
            return spearman_rho(np.sum(ev * et, axis=1), human)

        cfg = TrainConfig(learning_rate=5e-3, batch_size=32, patience_iters=200,
                          max_iters=240, seed=seed, val_every=40)
        return GridEvalBundle(train_data, val_data, cfg, LossConfig(tau=0.1),
                              [task])

    def test_single_point_grid(self):
        bundle = self.make_bundle(noise_positives=False)
        best, results = grid_search([(0.05, 0.1)], bundle)
        assert best == (0.05, 0.1)
        assert len(results) == 1

    def test_pure_noise_positives_prefer_zero_lambdas(self):
        bundle = self.make_bundle(noise_positives=True)
        best, results = grid_search([(0.0, 0.0), (0.05, 0.1)], bundle)
        assert best == (0.0, 0.0)
        assert results[0][1] > results[1][1]

    def test_grid_containing_published_point(self):
        bundle = self.make_bundle(noise_positives=False)
        grid = [(0.0, 0.0), (0.05, 0.1)]
        best, results = grid_search(grid, bundle)
        assert best in grid
        assert [point for point, _, _ in results] == grid

    def test_tie_breaks_to_first_grid_point(self):
        bundle = self.make_bundle(noise_positives=False)
        bundle.evaluate_point = lambda lv, lt: (0.5, [0.5])
        best, _ = grid_search([(0.0, 0.1), (0.2, 0.3)], bundle)
        assert best == (0.0, 0.1)

    def test_empty_grid_rejected(self):
        bundle = self.make_bundle(noise_positives=False)
        with pytest.raises(ValueError):
            grid_search([], bundle)
