import argparse
import json
import logging
import sys

from .export import ExportJob, export_augmented_tuples, export_features


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capexport",
                                     description="dual-encoder feature exporter")
    parser.add_argument("--backbone", default="chromatic",
                        help="chromatic (built-in) or clip-vit-b32 (needs [clip])")
    parser.add_argument("--backbone-options", default="{}",
                        help="JSON kwargs for the backbone constructor")
    commands = parser.add_subparsers(dest="command", required=True)

    features = commands.add_parser("features", help="export feature containers")
    features.add_argument("--images", help="JSONL listing: {id, path}")
    features.add_argument("--captions", help="JSONL listing: {id, text}")
    features.add_argument("--videos", help="JSONL listing: {id, frames: [paths]}")
    features.add_argument("--out-visual")
    features.add_argument("--out-text")
    features.add_argument("--out-tokens")
    features.add_argument("--out-frames")
    features.add_argument("--init-out", help="projection initializer checkpoint")
    features.add_argument("--final-embeddings", action="store_true",
                          help="write projected unit embeddings instead of "
                               "pre-projection features")
    features.set_defaults(func=_cmd_features)

    tuples = commands.add_parser("tuples",
                                 help="export positive-augmented training tuples")
    tuples.add_argument("--pairs", required=True,
                        help="JSONL: {id, image, caption, gen_image, gen_caption}")
    tuples.add_argument("--out-manifest", required=True)
    tuples.add_argument("--out-visual", required=True)
    tuples.add_argument("--out-text", required=True)
    tuples.set_defaults(func=_cmd_tuples)
    return parser


def _cmd_features(args) -> int:
    job = ExportJob(backbone=args.backbone, images=args.images,
                    captions=args.captions, videos=args.videos,
                    out_visual=args.out_visual, out_text=args.out_text,
                    out_tokens=args.out_tokens, out_frames=args.out_frames,
                    init_out=args.init_out, final_embeddings=args.final_embeddings,
                    backbone_options=json.loads(args.backbone_options))
    summary = export_features(job)
    for path in summary["written"]:
        print(f"wrote {path}")
    if summary["skipped"]:
        print(f"skipped {summary['skipped']} unreadable/empty inputs")
    return 0


def _cmd_tuples(args) -> int:
    summary = export_augmented_tuples(
        args.pairs, args.out_manifest, args.out_visual, args.out_text,
        backbone_name=args.backbone,
        backbone_options=json.loads(args.backbone_options))
    print(f"wrote {summary['tuples']} tuples "
          f"({summary['dropped']} dropped) to {args.out_manifest}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
