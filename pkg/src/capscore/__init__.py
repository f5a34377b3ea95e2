"""Contrastive caption-evaluation engine.

Core layers: unit-sphere embedding primitives, positive-augmented contrastive
training of projection heads, image/video candidate scoring, human-judgment
correlation and accuracy protocols, and a bit-exact container format tying
them together. A FastAPI service wraps the engine; the CLI is a thin client.
"""

__version__ = "0.1.0"

from .contrastive import Heads, LossConfig, TupleBatch, info_nce, pac_loss, pac_loss_grad
from .embedding import ProjectionHead, cosine, l2_normalize, mean_pool, project
from .optim import AdamWConfig, OptimizerState, adamw_step
from .rankstats import kendall_tau_b, kendall_tau_c, spearman_rho
from .scoring import (IdfTable, ScoreConfig, TokenSequence, compute_idf,
                      pac_score, ref_pac_score, ref_video_score, video_fine,
                      video_score)
from .trainer import AugmentedTuple, TrainConfig, grid_search, retrieval_at_1, train

__all__ = [
    "AdamWConfig", "AugmentedTuple", "Heads", "IdfTable", "LossConfig",
    "OptimizerState", "ProjectionHead", "ScoreConfig", "TokenSequence",
    "TrainConfig", "TupleBatch", "adamw_step", "compute_idf", "cosine",
    "grid_search", "info_nce", "kendall_tau_b", "kendall_tau_c",
    "l2_normalize", "mean_pool", "pac_loss", "pac_loss_grad", "pac_score",
    "project", "ref_pac_score", "ref_video_score", "retrieval_at_1",
    "spearman_rho", "train", "video_fine", "video_score",
]
