"""FastAPI service wrapping the scoring engine.

Every endpoint takes file paths (containers, manifests, checkpoints) resolved
on the server's filesystem, runs the corresponding engine operation, and
returns both structured values and the pinned report text. Engine errors map
to HTTP 400 with their stable error code; missing files map to 404.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..checkpoint import load_checkpoint, save_checkpoint
from ..container import read_container
from ..contrastive import Heads, LossConfig
from ..errors import EngineError, ManifestError
from ..manifests import (load_foil, load_judgments, load_pairwise,
                         load_reference_pool, load_score_queries, load_tuples)
from ..rankstats import STATISTICS
from ..reports import (batch_score, correlation_report_text, foil_report_text,
                       pairwise_report_text, read_score_file)
from ..rng import substream
from ..scoring import ScoreConfig, pac_score, ref_pac_score
from ..store import EmbeddingStore, FeatureStore
from ..trainer import GridEvalBundle, TrainConfig, grid_search, train
from . import models


def create_app() -> FastAPI:
    app = FastAPI(title="capscore service", version=__version__)

    @app.exception_handler(EngineError)
    async def _engine_error(request: Request, exc: EngineError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "code": exc.code})

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=404,
                            content={"detail": str(exc), "code": "missing-file"})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "code": "invalid-value"})

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/inspect", response_model=models.InspectResponse)
    def inspect(req: models.InspectRequest):
        container = read_container(req.path)
        return models.InspectResponse(
            path=req.path, role=container.role, dim=container.dim,
            count=len(container), total_rows=container.total_rows,
            metadata=container.metadata, ids_preview=container.ids[:10])

    @app.post("/train", response_model=models.TrainResponse)
    def train_endpoint(req: models.TrainRequest):
        tuples = load_tuples(req.tuples)
        store = FeatureStore()
        store.load(req.features_visual)
        store.load(req.features_text)
        train_tuples, val_tuples = _split(tuples, req.val_split, req.seed)
        train_data = store.gather_tuples(train_tuples)
        val_data = store.gather_tuples(val_tuples)
        loss_cfg = LossConfig(tau=req.tau, lambda_v=req.lambda_v, lambda_t=req.lambda_t)
        train_cfg = TrainConfig(learning_rate=req.lr, batch_size=req.batch,
                                patience_iters=req.patience, max_iters=req.max_iters,
                                seed=req.seed, val_every=req.val_every)
        init_heads = None
        if req.init_checkpoint:
            init_heads, _ = load_checkpoint(req.init_checkpoint)
        heads, history = train(train_data, val_data, train_cfg, loss_cfg,
                               init_heads=init_heads, joint_dim=req.joint_dim)
        save_checkpoint(req.out, heads, loss_cfg, train_cfg, extra={
            "iterations": len(history.train_loss),
            "best_iteration": history.best_iteration,
            "best_val_loss": history.best_val_loss,
            "stop_reason": history.stop_reason,
            "seed": req.seed,
        })
        return models.TrainResponse(
            checkpoint=req.out, iterations=len(history.train_loss),
            best_iteration=history.best_iteration,
            best_val_loss=history.best_val_loss,
            initial_val_loss=history.validations[0][1],
            stop_reason=history.stop_reason, seed=req.seed)

    @app.post("/score", response_model=models.ScoreResponse)
    def score(req: models.ScoreRequest):
        store = _embedding_store(req.checkpoint,
                                 visual=req.features_visual,
                                 text=req.features_text)
        queries = load_score_queries(req.manifest)
        pool = load_reference_pool(req.refs) if req.refs else None
        variant = "ref" if (req.refs or req.use_record_refs) else "free"
        cfg = ScoreConfig(w=req.w)
        report = batch_score(queries, store, mode="image", variant=variant,
                             cfg=cfg, reference_pool=pool)
        return _score_response(report, req.out)

    @app.post("/score-video", response_model=models.ScoreResponse)
    def score_video(req: models.ScoreVideoRequest):
        store = _embedding_store(req.checkpoint, frames=req.frames,
                                 tokens=req.tokens, text=req.features_text)
        queries = load_score_queries(req.manifest)
        pool = load_reference_pool(req.refs) if req.refs else None
        variant = "ref" if (req.refs or req.use_record_refs) else "free"
        cfg = ScoreConfig(video_w=req.video_w)
        report = batch_score(queries, store, mode="video", variant=variant,
                             cfg=cfg, reference_pool=pool)
        return _score_response(report, req.out)

    @app.post("/eval/corr", response_model=models.CorrResponse)
    def eval_corr(req: models.CorrRequest):
        if req.stat not in STATISTICS:
            raise ManifestError(f"unknown statistic {req.stat!r}; "
                                f"choose from {sorted(STATISTICS)}")
        scores = read_score_file(req.scores)
        judgments = load_judgments(req.judgments)
        missing = [j.id for j in judgments if j.id not in scores]
        if missing:
            raise ManifestError(
                f"{len(missing)} judgment ids missing from the score file, "
                f"first: {missing[:5]}")
        x = [scores[j.id] for j in judgments]
        y = [j.human_score for j in judgments]
        value = STATISTICS[req.stat](x, y)
        return models.CorrResponse(
            stat=req.stat, value=value, n=len(judgments),
            report_text=correlation_report_text(req.stat, value, len(judgments)))

    @app.post("/eval/pairwise", response_model=models.PairwiseResponse)
    def eval_pairwise(req: models.PairwiseRequest):
        from ..protocols import pairwise_accuracy
        store = _embedding_store(req.checkpoint, visual=req.features_visual,
                                 text=req.features_text)
        pairs = load_pairwise(req.pairs, seed=req.seed)
        pool = load_reference_pool(req.refs) if req.refs else None
        scorer = _image_scorer(store, ScoreConfig(w=req.w))
        result = pairwise_accuracy(pairs, scorer, reference_pool=pool,
                                   refs_per_draw=req.refs_per_draw,
                                   draws=req.draws, seed=req.seed)
        return models.PairwiseResponse(
            per_category=result.per_category, mean=result.mean,
            draws=result.draws, refs_per_draw=result.refs_per_draw,
            seed=result.seed, n_pairs=result.n_pairs,
            report_text=pairwise_report_text(result))

    @app.post("/eval/foil", response_model=models.FoilResponse)
    def eval_foil(req: models.FoilRequest):
        from ..protocols import foil_accuracy
        store = _embedding_store(req.checkpoint, visual=req.features_visual,
                                 text=req.features_text)
        pairs = load_foil(req.pairs)
        pool = load_reference_pool(req.refs) if req.refs else None
        cfg = ScoreConfig(w=req.w)
        image_scorer = _image_scorer(store, cfg)
        if pool is None:
            scorer = lambda candidate, media: image_scorer(candidate, media, None)
            variant = "free"
        else:
            for pair in pairs:
                if pair.media not in pool:
                    raise ManifestError(f"media {pair.media!r} missing from pool")
            scorer = lambda candidate, media: image_scorer(candidate, media, pool[media])
            variant = "ref"
        accuracy = foil_accuracy(pairs, scorer)
        return models.FoilResponse(
            accuracy=accuracy, n_pairs=len(pairs), variant=variant,
            report_text=foil_report_text(accuracy, len(pairs), variant))

    @app.post("/tune", response_model=models.TuneResponse)
    def tune(req: models.TuneRequest):
        if not req.grid:
            raise ManifestError("lambda grid must be non-empty")
        if not req.tasks:
            raise ManifestError("grid search needs at least one correlation task")
        tuples = load_tuples(req.tuples)
        store = FeatureStore()
        store.load(req.features_visual)
        store.load(req.features_text)
        train_tuples, val_tuples = _split(tuples, req.val_split, req.seed)
        train_data = store.gather_tuples(train_tuples)
        val_data = store.gather_tuples(val_tuples)
        train_cfg = TrainConfig(learning_rate=req.lr, batch_size=req.batch,
                                patience_iters=req.patience, max_iters=req.max_iters,
                                seed=req.seed, val_every=req.val_every)
        base_loss = LossConfig(tau=req.tau)
        score_cfg = ScoreConfig(w=req.w)
        tasks = [_correlation_task(task, store, score_cfg) for task in req.tasks]
        bundle = GridEvalBundle(train_data, val_data, train_cfg, base_loss, tasks)
        (best_v, best_t), results = grid_search(req.grid, bundle)
        out = None
        if req.out:
            best_cfg = LossConfig(tau=req.tau, lambda_v=best_v, lambda_t=best_t)
            heads, history = train(train_data, val_data, train_cfg, best_cfg,
                                   joint_dim=req.joint_dim)
            save_checkpoint(req.out, heads, best_cfg, train_cfg, extra={
                "iterations": len(history.train_loss),
                "best_iteration": history.best_iteration,
                "best_val_loss": history.best_val_loss,
                "stop_reason": history.stop_reason,
                "seed": req.seed,
            })
            out = req.out
        return models.TuneResponse(
            best_lambda_v=best_v, best_lambda_t=best_t,
            results=[models.TunePointResult(
                lambda_v=lv, lambda_t=lt, mean_correlation=mean, per_task=per_task)
                for (lv, lt), mean, per_task in results],
            out=out)

    return app


def _split(tuples, val_split: float, seed: int):
    n = len(tuples)
    n_val = max(1, int(round(n * val_split)))
    if n_val >= n:
        raise ManifestError(
            f"val_split={val_split} leaves no training tuples (n={n})")
    order = substream(seed, "val-split").permutation(n)
    val_idx = set(order[:n_val].tolist())
    train_tuples = [tuples[i] for i in range(n) if i not in val_idx]
    val_tuples = [tuples[i] for i in sorted(val_idx)]
    return train_tuples, val_tuples


def _embedding_store(checkpoint_path, visual=None, text=None,
                     tokens=None, frames=None) -> EmbeddingStore:
    features = FeatureStore()
    for path in (visual, text, tokens, frames):
        if path:
            features.load(path)
    heads = None
    if checkpoint_path:
        heads, _ = load_checkpoint(checkpoint_path)
    return EmbeddingStore.project(features, heads)


def _image_scorer(store: EmbeddingStore, cfg: ScoreConfig):
    def scorer(candidate: str, media: str, refs):
        t = store.text[candidate]
        v = store.visual[media]
        if refs is None:
            return pac_score(t, v, cfg)
        return ref_pac_score(t, v, [store.text[r] for r in refs], cfg)
    return scorer


def _correlation_task(task: "models.TuneTask", features: FeatureStore,
                      cfg: ScoreConfig):
    if task.stat not in STATISTICS:
        raise ManifestError(f"unknown statistic {task.stat!r}")
    judgments = load_judgments(task.judgments)
    stat_fn = STATISTICS[task.stat]

    def run(heads: Heads) -> float:
        store = EmbeddingStore.project(features, heads)
        x = [pac_score(store.text[j.candidate], store.visual[j.media], cfg)
             for j in judgments]
        y = [j.human_score for j in judgments]
        return stat_fn(x, y)

    return run


def _score_response(report, out_path):
    text = report.to_text()
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return models.ScoreResponse(
        mode=report.mode, variant=report.variant, n=report.n,
        mean=report.mean, stddev=report.stddev,
        records=[models.ScoreRecord(id=i, score=s) for i, s in report.records],
        report_text=text, out=out_path)
