"""Command-line client for the scoring service.

Every subcommand builds one request model and posts it to the service. With
``--server URL`` the request goes over HTTP to a running instance; otherwise
the app is mounted in-process, so all commands work with no daemon while
exercising the exact same endpoint code.
"""

from __future__ import annotations

import argparse
import json
import sys

from .service import models


def _client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    import warnings
    with warnings.catch_warnings():
        # some starlette builds warn on this import; the in-process client
        # is our supported transport, so keep the CLI quiet
        warnings.filterwarnings("ignore", message=".*testclient.*is deprecated.*")
        from fastapi.testclient import TestClient

    from .service import create_app
    return TestClient(create_app(), raise_server_exceptions=False)


def _post(args, path: str, payload: dict):
    payload = {k: v for k, v in payload.items() if v is not None}
    with _client(args.server) as client:
        response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json()
        except ValueError:
            detail = {"detail": response.text}
        code = detail.get("code", response.status_code)
        print(f"error [{code}]: {detail.get('detail', detail)}", file=sys.stderr)
        return None
    return response.json()


def _cmd_train(args) -> int:
    body = dict(tuples=args.tuples, features_visual=args.features_visual,
                features_text=args.features_text, out=args.out,
                val_split=args.val_split, lambda_v=args.lambda_v,
                lambda_t=args.lambda_t, lr=args.lr, batch=args.batch,
                patience=args.patience, max_iters=args.max_iters,
                val_every=args.val_every, tau=args.tau, seed=args.seed,
                joint_dim=args.joint_dim, init_checkpoint=args.init_checkpoint)
    result = _post(args, "/train", body)
    if result is None:
        return 1
    print(f"checkpoint written: {result['checkpoint']}")
    print(f"iterations {result['iterations']}  best-iteration {result['best_iteration']}")
    print(f"validation loss {result['initial_val_loss']:.10f} -> "
          f"{result['best_val_loss']:.10f}  ({result['stop_reason']})")
    return 0


def _cmd_score(args) -> int:
    body = dict(manifest=args.manifest, features_visual=args.features_visual,
                features_text=args.features_text, checkpoint=args.checkpoint,
                refs=args.refs, use_record_refs=args.use_record_refs or None,
                w=args.w, out=args.out)
    result = _post(args, "/score", body)
    return _print_score(result, args.out)


def _cmd_score_video(args) -> int:
    video_w = args.w_alias if args.w_alias is not None else args.video_w
    body = dict(manifest=args.manifest, frames=args.frames, tokens=args.tokens,
                features_text=args.features_text, checkpoint=args.checkpoint,
                refs=args.refs, use_record_refs=args.use_record_refs or None,
                video_w=video_w, out=args.out)
    result = _post(args, "/score-video", body)
    return _print_score(result, args.out)


def _print_score(result, out) -> int:
    if result is None:
        return 1
    if out:
        mean = "undefined" if result["mean"] is None else f"{result['mean']:.10f}"
        print(f"report written: {out}  (n={result['n']} mean={mean})")
    else:
        sys.stdout.write(result["report_text"])
    return 0


def _cmd_eval_corr(args) -> int:
    result = _post(args, "/eval/corr", dict(scores=args.scores,
                                            judgments=args.judgments,
                                            stat=args.stat))
    if result is None:
        return 1
    sys.stdout.write(result["report_text"])
    return 0


def _cmd_eval_pairwise(args) -> int:
    body = dict(pairs=args.pairs, features_visual=args.features_visual,
                features_text=args.features_text, checkpoint=args.checkpoint,
                refs=args.refs, draws=args.draws,
                refs_per_draw=args.refs_per_draw, seed=args.seed, w=args.w)
    result = _post(args, "/eval/pairwise", body)
    if result is None:
        return 1
    sys.stdout.write(result["report_text"])
    return 0


def _cmd_eval_foil(args) -> int:
    body = dict(pairs=args.pairs, features_visual=args.features_visual,
                features_text=args.features_text, checkpoint=args.checkpoint,
                refs=args.refs, w=args.w)
    result = _post(args, "/eval/foil", body)
    if result is None:
        return 1
    sys.stdout.write(result["report_text"])
    return 0


def _cmd_tune(args) -> int:
    grid = []
    for point in args.grid.split(";"):
        parts = point.split(",")
        if len(parts) != 2:
            print(f"error: bad grid point {point!r}, expected 'LV,LT'", file=sys.stderr)
            return 1
        grid.append((float(parts[0]), float(parts[1])))
    tasks = []
    for entry in args.task:
        judgments, _, stat = entry.partition(":")
        tasks.append({"judgments": judgments, "stat": stat or "kendall-c"})
    body = dict(tuples=args.tuples, features_visual=args.features_visual,
                features_text=args.features_text, grid=grid, tasks=tasks,
                val_split=args.val_split, lr=args.lr, batch=args.batch,
                patience=args.patience, max_iters=args.max_iters,
                val_every=args.val_every, tau=args.tau, seed=args.seed,
                joint_dim=args.joint_dim, w=args.w, out=args.out)
    result = _post(args, "/tune", body)
    if result is None:
        return 1
    for row in result["results"]:
        per_task = " ".join(f"{v:.6f}" for v in row["per_task"])
        print(f"lambda_v={row['lambda_v']:g} lambda_t={row['lambda_t']:g}  "
              f"mean={row['mean_correlation']:.6f}  [{per_task}]")
    print(f"best: lambda_v={result['best_lambda_v']:g} "
          f"lambda_t={result['best_lambda_t']:g}")
    if result["out"]:
        print(f"checkpoint written: {result['out']}")
    return 0


def _cmd_inspect(args) -> int:
    result = _post(args, "/inspect", dict(path=args.path))
    if result is None:
        return 1
    print(f"role {result['role']}")
    print(f"dim {result['dim']}")
    print(f"count {result['count']}")
    print(f"total-rows {result['total_rows']}")
    if result["metadata"]:
        print("metadata " + json.dumps(result["metadata"], sort_keys=True))
    if result["ids_preview"]:
        print("ids " + " ".join(result["ids_preview"]))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _add_score_data_flags(sub, video: bool = False):
    if video:
        sub.add_argument("--frames", required=True, help="frame-sequence container")
        sub.add_argument("--tokens", required=True, help="text-token-sequence container")
        sub.add_argument("--features-text", required=True, help="text-feature container")
    else:
        sub.add_argument("--features-visual", required=True, help="visual-feature container")
        sub.add_argument("--features-text", required=True, help="text-feature container")
    sub.add_argument("--checkpoint", default=None,
                     help="projection checkpoint; omitted = features are pre-projected")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capscore",
                                     description="caption-evaluation engine client")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="finetune projection heads")
    train.add_argument("--tuples", required=True)
    train.add_argument("--features-visual", required=True)
    train.add_argument("--features-text", required=True)
    train.add_argument("--val-split", type=float, default=0.1)
    train.add_argument("--lambda-v", type=float, default=models.DEFAULT_LAMBDA_V)
    train.add_argument("--lambda-t", type=float, default=models.DEFAULT_LAMBDA_T)
    train.add_argument("--lr", type=float, default=models.DEFAULT_LR)
    train.add_argument("--batch", type=int, default=models.DEFAULT_BATCH)
    train.add_argument("--patience", type=int, default=models.DEFAULT_PATIENCE)
    train.add_argument("--max-iters", type=int, default=100_000)
    train.add_argument("--val-every", type=int, default=100)
    train.add_argument("--tau", type=float, default=models.DEFAULT_TAU)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--joint-dim", type=int, default=None)
    train.add_argument("--init-checkpoint", default=None)
    train.add_argument("--out", required=True)
    train.set_defaults(func=_cmd_train)

    score = commands.add_parser("score", help="image scores for a manifest")
    score.add_argument("--manifest", required=True)
    _add_score_data_flags(score)
    score.add_argument("--refs", default=None,
                       help="reference-pool manifest; enables the reference-based score")
    score.add_argument("--use-record-refs", action="store_true",
                       help="reference-based score from per-record refs")
    score.add_argument("--w", type=float, default=models.DEFAULT_W)
    score.add_argument("--out", default=None)
    score.set_defaults(func=_cmd_score)

    video = commands.add_parser("score-video", help="video scores for a manifest")
    video.add_argument("--manifest", required=True)
    _add_score_data_flags(video, video=True)
    video.add_argument("--refs", default=None)
    video.add_argument("--use-record-refs", action="store_true")
    video.add_argument("--video-w", type=float, default=models.DEFAULT_VIDEO_W)
    video.add_argument("--w", type=float, default=None, dest="w_alias",
                       help="alias for --video-w")
    video.add_argument("--out", default=None)
    video.set_defaults(func=_cmd_score_video)

    corr = commands.add_parser("eval-corr", help="rank correlation against judgments")
    corr.add_argument("--scores", required=True, help="score report file")
    corr.add_argument("--judgments", required=True)
    corr.add_argument("--stat", choices=["kendall-b", "kendall-c", "spearman"],
                      default="kendall-b")
    corr.set_defaults(func=_cmd_eval_corr)

    pairwise = commands.add_parser("eval-pairwise", help="pairwise preference accuracy")
    pairwise.add_argument("--pairs", required=True)
    _add_score_data_flags(pairwise)
    pairwise.add_argument("--refs", default=None, help="reference-pool manifest")
    pairwise.add_argument("--draws", type=int, default=models.DEFAULT_DRAWS)
    pairwise.add_argument("--refs-per-draw", type=int,
                          default=models.DEFAULT_REFS_PER_DRAW)
    pairwise.add_argument("--seed", type=int, default=0)
    pairwise.add_argument("--w", type=float, default=models.DEFAULT_W)
    pairwise.set_defaults(func=_cmd_eval_pairwise)

    foil = commands.add_parser("eval-foil", help="hallucination detection accuracy")
    foil.add_argument("--pairs", required=True)
    _add_score_data_flags(foil)
    foil.add_argument("--refs", default=None, help="reference-pool manifest")
    foil.add_argument("--w", type=float, default=models.DEFAULT_W)
    foil.set_defaults(func=_cmd_eval_foil)

    tune = commands.add_parser("tune", help="grid search over lambda weights")
    tune.add_argument("--tuples", required=True)
    tune.add_argument("--features-visual", required=True)
    tune.add_argument("--features-text", required=True)
    tune.add_argument("--grid", required=True,
                      help="semicolon-separated points, e.g. '0,0;0.05,0.1'")
    tune.add_argument("--task", action="append", required=True,
                      help="judgments manifest, optionally ':STAT' (repeatable)")
    tune.add_argument("--val-split", type=float, default=0.1)
    tune.add_argument("--lr", type=float, default=models.DEFAULT_LR)
    tune.add_argument("--batch", type=int, default=models.DEFAULT_BATCH)
    tune.add_argument("--patience", type=int, default=models.DEFAULT_PATIENCE)
    tune.add_argument("--max-iters", type=int, default=100_000)
    tune.add_argument("--val-every", type=int, default=100)
    tune.add_argument("--tau", type=float, default=models.DEFAULT_TAU)
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--joint-dim", type=int, default=None)
    tune.add_argument("--w", type=float, default=models.DEFAULT_W)
    tune.add_argument("--out", default=None)
    tune.set_defaults(func=_cmd_tune)

    inspect = commands.add_parser("inspect", help="container metadata")
    inspect.add_argument("path")
    inspect.set_defaults(func=_cmd_inspect)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # connection failures, local file issues
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
