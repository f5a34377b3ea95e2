"""Export jobs: run a frozen backbone over media listings and write
interchange containers plus the projection initializer.

Unreadable or empty inputs are skipped with a logged warning and excluded
from the id index; everything that is written is deterministic for a fixed
backbone and input listing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .backbones import load_backbone
from .containers import write_checkpoint, write_flat, write_sequences

log = logging.getLogger("capexport")


@dataclass
class ExportJob:
    backbone: str = "chromatic"
    images: str | None = None          # JSONL {"id", "path"}
    captions: str | None = None        # JSONL {"id", "text"}
    videos: str | None = None          # JSONL {"id", "frames": [paths]}
    out_visual: str | None = None
    out_text: str | None = None
    out_tokens: str | None = None
    out_frames: str | None = None
    init_out: str | None = None        # projection initializer checkpoint
    final_embeddings: bool = False     # project + normalize before writing
    backbone_options: dict = field(default_factory=dict)


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            records.append(record)
    return records


def export_features(job: ExportJob) -> dict:
    """Run the job; returns a summary of what was written and skipped."""
    if job.final_embeddings and job.init_out:
        raise ValueError("--final-embeddings already applies the projection; "
                         "an initializer checkpoint would be meaningless")
    backbone = load_backbone(job.backbone, **job.backbone_options)
    visual_proj, textual_proj = backbone.projections()
    summary = {"written": [], "skipped": 0}
    meta = {"backbone": backbone.name,
            "stage": "final-embedding" if job.final_embeddings else "pre-projection"}

    if job.images:
        if not job.out_visual:
            raise ValueError("image input needs --out-visual")
        ids, rows = [], []
        for record in read_jsonl(job.images):
            feature = _encode_image(backbone, record["path"])
            if feature is None:
                summary["skipped"] += 1
                continue
            if job.final_embeddings:
                feature = _project(feature, visual_proj)
            ids.append(record["id"])
            rows.append(feature)
        _require_any(ids, job.images)
        write_flat(job.out_visual, "visual-feature",
                   ids, np.stack(rows).astype(np.float32), metadata=meta)
        summary["written"].append(job.out_visual)

    if job.captions:
        if not (job.out_text or job.out_tokens):
            raise ValueError("caption input needs --out-text and/or --out-tokens")
        ids, globals_, token_blocks, surfaces = [], [], [], []
        for record in read_jsonl(job.captions):
            encoded = backbone.encode_caption(record["text"])
            if encoded is None:
                log.warning("caption %s tokenizes to nothing, skipped", record["id"])
                summary["skipped"] += 1
                continue
            surfs, tokens, global_feature = encoded
            if job.final_embeddings:
                global_feature = _project(global_feature, textual_proj)
                tokens = np.stack([_project(t, textual_proj) for t in tokens])
            ids.append(record["id"])
            globals_.append(global_feature)
            token_blocks.append(np.asarray(tokens, dtype=np.float32))
            surfaces.append(list(surfs))
        _require_any(ids, job.captions)
        if job.out_text:
            write_flat(job.out_text, "text-feature",
                       ids, np.stack(globals_).astype(np.float32), metadata=meta)
            summary["written"].append(job.out_text)
        if job.out_tokens:
            write_sequences(job.out_tokens, "text-token-sequence", ids,
                            token_blocks, surfaces=surfaces, metadata=meta)
            summary["written"].append(job.out_tokens)

    if job.videos:
        if not job.out_frames:
            raise ValueError("video input needs --out-frames")
        ids, blocks = [], []
        for record in read_jsonl(job.videos):
            frames = []
            for path in record["frames"]:
                feature = _encode_image(backbone, path)
                if feature is None:
                    summary["skipped"] += 1
                    continue
                if job.final_embeddings:
                    feature = _project(feature, visual_proj)
                frames.append(feature)
            if not frames:
                log.warning("video %s has no readable frames, skipped", record["id"])
                summary["skipped"] += 1
                continue
            ids.append(record["id"])
            blocks.append(np.stack(frames).astype(np.float32))
        _require_any(ids, job.videos)
        write_sequences(job.out_frames, "frame-sequence", ids, blocks, metadata=meta)
        summary["written"].append(job.out_frames)

    if job.init_out:
        write_checkpoint(job.init_out,
                         visual_proj.astype(np.float32),
                         textual_proj.astype(np.float32),
                         metadata={"backbone": backbone.name,
                                   "kind": "backbone-initializer"})
        summary["written"].append(job.init_out)
    return summary


def export_augmented_tuples(pairs_path, out_manifest, out_visual, out_text,
                            backbone_name: str = "chromatic",
                            backbone_options: dict | None = None) -> dict:
    """Build (v, t, v_gen, t_gen) training rows from real pairs and their
    pre-generated counterparts; pairs with a missing generated asset are
    dropped with a warning."""
    backbone = load_backbone(backbone_name, **(backbone_options or {}))
    visual_ids, visual_rows = [], []
    text_ids, text_rows = [], []
    tuples = []
    dropped = 0
    for record in read_jsonl(pairs_path):
        pair_id = record["id"]
        gen_image = record.get("gen_image")
        gen_caption = record.get("gen_caption")
        if not gen_image or not gen_caption:
            log.warning("pair %s lacks a generated asset, dropped", pair_id)
            dropped += 1
            continue
        real_image = _encode_image(backbone, record["image"])
        gen_image_feature = _encode_image(backbone, gen_image)
        real_caption = backbone.encode_caption(record["caption"])
        gen_caption_feature = backbone.encode_caption(gen_caption)
        if (real_image is None or gen_image_feature is None
                or real_caption is None or gen_caption_feature is None):
            log.warning("pair %s has an unreadable asset, dropped", pair_id)
            dropped += 1
            continue
        v, t = f"img:{pair_id}", f"cap:{pair_id}"
        v_gen, t_gen = f"genimg:{pair_id}", f"gencap:{pair_id}"
        visual_ids += [v, v_gen]
        visual_rows += [real_image, gen_image_feature]
        text_ids += [t, t_gen]
        text_rows += [real_caption[2], gen_caption_feature[2]]
        tuples.append({"v": v, "t": t, "v_gen": v_gen, "t_gen": t_gen})
    if not tuples:
        raise ValueError(f"{pairs_path}: no complete tuples to export")
    meta = {"backbone": backbone.name, "stage": "pre-projection"}
    write_flat(out_visual, "visual-feature", visual_ids,
               np.stack(visual_rows).astype(np.float32), metadata=meta)
    write_flat(out_text, "text-feature", text_ids,
               np.stack(text_rows).astype(np.float32), metadata=meta)
    with open(out_manifest, "w", encoding="utf-8") as fh:
        for row in tuples:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
    return {"tuples": len(tuples), "dropped": dropped}


def _encode_image(backbone, path):
    try:
        return backbone.encode_image(path)
    except (OSError, ValueError) as exc:
        log.warning("unreadable image %s: %s", path, exc)
        return None


def _project(feature: np.ndarray, projection: np.ndarray) -> np.ndarray:
    z = feature @ projection
    norm = float(np.linalg.norm(z))
    if norm == 0.0:
        raise ValueError("projected feature has zero norm")
    return z / norm


def _require_any(ids, source):
    if not ids:
        raise ValueError(f"{source}: every record was skipped")
