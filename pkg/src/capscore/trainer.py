"""Projection-head finetuning: minibatch loop, early stopping, grid search.

Training is deterministic for a fixed seed: shuffling uses a named substream
of the master seed, the last partial batch of every epoch is dropped, and the
returned heads are the ones from the best-validation checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .contrastive import Heads, LossConfig, TupleBatch, pac_loss, pac_loss_grad
from .embedding import ProjectionHead, project_rows
from .errors import DegenerateVectorError, ManifestError, TrainingDivergedError
from .optim import AdamWConfig, OptimizerState, adamw_step
from .rng import substream


@dataclass(frozen=True)
class AugmentedTuple:
    """Ids of one (real image, real caption, generated image, generated caption)."""

    v: str
    t: str
    v_gen: str
    t_gen: str


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 256
    patience_iters: int = 1500
    max_iters: int = 100_000
    seed: int = 0
    adamw: AdamWConfig = field(default_factory=AdamWConfig)
    val_every: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("batch_size", "patience_iters", "max_iters", "val_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)          # one entry per iteration
    validations: list = field(default_factory=list)         # (iteration, full-loss) pairs
    best_iteration: int = 0
    best_val_loss: float = float("inf")
    stop_reason: str = ""


def train(train_data: TupleBatch, val_data: TupleBatch, cfg: TrainConfig,
          loss_cfg: LossConfig, init_heads: Heads | None = None,
          joint_dim: int | None = None):
    """Minimize the combined loss over minibatches of ``train_data``.

    Stops when the full validation loss has not reached a new strict minimum
    for ``cfg.patience_iters`` training iterations (checked every
    ``cfg.val_every``), or at ``cfg.max_iters``. Returns the heads from the
    best-validation checkpoint and the loss history.
    """
    if len(train_data) == 0 or len(val_data) == 0:
        raise ManifestError("train and validation splits must both be non-empty")
    heads = init_heads if init_heads is not None else _seeded_heads(
        train_data, cfg.seed, joint_dim)

    wv, wt = heads.visual.weights, heads.textual.weights
    sv, st = OptimizerState.zeros_like(wv), OptimizerState.zeros_like(wt)
    batch_size = min(cfg.batch_size, len(train_data))
    shuffle = substream(cfg.seed, "shuffle")

    history = TrainHistory()
    best = (float("inf"), wv.copy(), wt.copy(), 0)
    val0 = pac_loss(val_data, _heads_from(wv, wt), loss_cfg)
    history.validations.append((0, val0))
    best = (val0, wv.copy(), wt.copy(), 0)

    iteration = 0
    last_min_iter = 0
    while iteration < cfg.max_iters and not history.stop_reason:
        order = shuffle.permutation(len(train_data))
        for start in range(0, len(order) - batch_size + 1, batch_size):
            batch = train_data.take(order[start:start + batch_size])
            try:
                loss, gv, gt = pac_loss_grad(batch, _heads_from(wv, wt), loss_cfg)
            except DegenerateVectorError as exc:
                raise TrainingDivergedError(
                    f"weights degenerated at iteration {iteration + 1}: {exc}") from exc
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite training loss at iteration {iteration + 1}")
            wv, sv = adamw_step(wv, gv, sv, cfg.learning_rate, cfg.adamw)
            wt, st = adamw_step(wt, gt, st, cfg.learning_rate, cfg.adamw)
            iteration += 1
            history.train_loss.append(loss)

            if iteration % cfg.val_every == 0:
                val = pac_loss(val_data, _heads_from(wv, wt), loss_cfg)
                if not np.isfinite(val):
                    raise TrainingDivergedError(
                        f"non-finite validation loss at iteration {iteration}")
                history.validations.append((iteration, val))
                if val < best[0]:
                    best = (val, wv.copy(), wt.copy(), iteration)
                    last_min_iter = iteration
                elif iteration - last_min_iter >= cfg.patience_iters:
                    history.stop_reason = "patience"
                    break
            if iteration >= cfg.max_iters:
                history.stop_reason = history.stop_reason or "max-iters"
                break

    history.stop_reason = history.stop_reason or "max-iters"
    history.best_val_loss, history.best_iteration = best[0], best[3]
    return _heads_from(best[1], best[2]), history


def _heads_from(wv: np.ndarray, wt: np.ndarray) -> Heads:
    return Heads(ProjectionHead(wv), ProjectionHead(wt))


def _seeded_heads(data: TupleBatch, seed: int, joint_dim: int | None) -> Heads:
    dv, dt = data.visual.shape[1], data.textual.shape[1]
    if joint_dim is None:
        joint_dim = min(dv, dt)
    rng = substream(seed, "init")
    return Heads(ProjectionHead.random_orthonormal(dv, joint_dim, rng),
                 ProjectionHead.random_orthonormal(dt, joint_dim, rng))


def retrieval_at_1(data: TupleBatch, heads: Heads):
    """Diagonal R@1 for image-to-text and text-to-image over real pairs."""
    Ev = project_rows(data.visual, heads.visual)
    Et = project_rows(data.textual, heads.textual)
    S = Ev @ Et.T
    i2t = float(np.mean(S.argmax(axis=1) == np.arange(len(S))))
    t2i = float(np.mean(S.argmax(axis=0) == np.arange(len(S))))
    return i2t, t2i


@dataclass
class GridEvalBundle:
    """Everything grid search needs: training data plus correlation tasks.

    ``tasks`` is a list of callables mapping trained heads to a correlation
    score; their mean is the grid objective.
    """

    train_data: TupleBatch
    val_data: TupleBatch
    train_cfg: TrainConfig
    base_loss_cfg: LossConfig
    tasks: list

    def evaluate_point(self, lambda_v: float, lambda_t: float):
        loss_cfg = replace(self.base_loss_cfg, lambda_v=lambda_v, lambda_t=lambda_t)
        heads, _ = train(self.train_data, self.val_data, self.train_cfg, loss_cfg)
        scores = [task(heads) for task in self.tasks]
        return float(np.mean(scores)), scores


def grid_search(lambda_grid, bundle: GridEvalBundle):
    """Train one model per (lambda_v, lambda_t) point and keep the best mean
    correlation; ties resolve to the earliest grid point."""
    grid = list(lambda_grid)
    if not grid:
        raise ValueError("lambda grid must be non-empty")
    if not bundle.tasks:
        raise ValueError("grid search needs at least one correlation task")
    results = []
    best_idx, best_mean = 0, -float("inf")
    for i, (lv, lt) in enumerate(grid):
        mean, per_task = bundle.evaluate_point(lv, lt)
        results.append(((lv, lt), mean, per_task))
        if mean > best_mean:
            best_idx, best_mean = i, mean
    return grid[best_idx], results
