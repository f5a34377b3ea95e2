import numpy as np
import pytest
from fastapi.testclient import TestClient

from capscore.checkpoint import load_checkpoint
from capscore.manifests import write_jsonl
from capscore.scoring import ScoreConfig, pac_score, ref_pac_score
from capscore.service import create_app


@pytest.fixture
def client():
    with TestClient(create_app(), raise_server_exceptions=False) as c:
        yield c


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_inspect(client, image_workspace):
    response = client.post("/inspect", json={"path": image_workspace["visual"]})
    assert response.status_code == 200
    body = response.json()
    assert body["role"] == "visual-feature"
    assert body["dim"] == image_workspace["dim"]
    assert body["count"] == 3
    assert body["ids_preview"] == ["img1", "img2", "img3"]


def test_inspect_missing_file(client):
    response = client.post("/inspect", json={"path": "/nonexistent/file.bin"})
    assert response.status_code == 404
    assert response.json()["code"] == "missing-file"


def test_score_free_matches_library(client, image_workspace):
    ws = image_workspace
    response = client.post("/score", json={
        "manifest": ws["manifest"], "features_visual": ws["visual"],
        "features_text": ws["text"], "checkpoint": ws["checkpoint"]})
    assert response.status_code == 200
    body = response.json()
    assert body["variant"] == "free" and body["n"] == 3
    cfg = ScoreConfig(w=2.0)
    for record in body["records"]:
        k = record["id"][-1]
        expected = pac_score(ws["captions"][f"cap{k}"], ws["images"][f"img{k}"], cfg)
        assert record["score"] == pytest.approx(expected, abs=1e-6)


def test_score_ref_variant_uses_record_refs(client, image_workspace):
    ws = image_workspace
    response = client.post("/score", json={
        "manifest": ws["manifest"], "features_visual": ws["visual"],
        "features_text": ws["text"], "checkpoint": ws["checkpoint"],
        "use_record_refs": True, "w": 2.0})
    assert response.status_code == 200
    body = response.json()
    assert body["variant"] == "ref"
    cfg = ScoreConfig(w=2.0)
    refs = [ws["captions"]["ref1"], ws["captions"]["ref2"]]
    for record in body["records"]:
        k = record["id"][-1]
        expected = ref_pac_score(ws["captions"][f"cap{k}"], ws["images"][f"img{k}"],
                                 refs, cfg)
        assert record["score"] == pytest.approx(expected, abs=1e-6)


def test_score_writes_out_file(client, image_workspace, tmp_path):
    ws = image_workspace
    out = tmp_path / "report.txt"
    response = client.post("/score", json={
        "manifest": ws["manifest"], "features_visual": ws["visual"],
        "features_text": ws["text"], "out": str(out)})
    assert response.status_code == 200
    assert out.read_text() == response.json()["report_text"]


def test_score_dangling_ids_return_400(client, image_workspace, tmp_path):
    ws = image_workspace
    manifest = tmp_path / "bad.jsonl"
    write_jsonl(manifest, [{"id": "r", "candidate": "nope", "media": "img1"}])
    response = client.post("/score", json={
        "manifest": str(manifest), "features_visual": ws["visual"],
        "features_text": ws["text"]})
    assert response.status_code == 400
    assert response.json()["code"] == "dangling-ids"


def test_eval_corr_roundtrip(client, image_workspace, tmp_path):
    ws = image_workspace
    scores_path = tmp_path / "scores.txt"
    client.post("/score", json={
        "manifest": ws["manifest"], "features_visual": ws["visual"],
        "features_text": ws["text"], "out": str(scores_path)})
    judgments = tmp_path / "judgments.jsonl"
    write_jsonl(judgments, [
        {"id": f"rec{k}", "candidate": f"cap{k}", "media": f"img{k}",
         "human_score": float(k)} for k in (1, 2, 3)])
    response = client.post("/eval/corr", json={
        "scores": str(scores_path), "judgments": str(judgments),
        "stat": "spearman"})
    assert response.status_code == 200
    body = response.json()
    assert body["n"] == 3
    assert -1.0 <= body["value"] <= 1.0
    assert body["report_text"].startswith("# capscore-report v1 kind=correlation")


def test_eval_corr_unknown_stat(client, image_workspace, tmp_path):
    response = client.post("/eval/corr", json={
        "scores": "x", "judgments": "y", "stat": "pearson"})
    assert response.status_code == 400


def test_eval_pairwise_with_pool(client, image_workspace, tmp_path):
    ws = image_workspace
    pairs = tmp_path / "pairs.jsonl"
    # cap1 matches img1 better than cap2 does, and so on
    write_jsonl(pairs, [
        {"media": "img1", "a": "cap1", "b": "cap2", "winner": "A", "category": "HC"},
        {"media": "img2", "a": "cap1", "b": "cap2", "winner": "B", "category": "MM"},
    ])
    pool = tmp_path / "pool.jsonl"
    write_jsonl(pool, [{"media": "img1", "refs": ["ref1", "ref2"]},
                       {"media": "img2", "refs": ["ref1", "ref2"]}])
    response = client.post("/eval/pairwise", json={
        "pairs": str(pairs), "features_visual": ws["visual"],
        "features_text": ws["text"], "refs": str(pool),
        "refs_per_draw": 2, "draws": 3, "seed": 5})
    assert response.status_code == 200
    body = response.json()
    assert set(body["per_category"]) == {"HC", "MM"}
    assert body["n_pairs"] == 2
    # replay is byte-identical
    again = client.post("/eval/pairwise", json={
        "pairs": str(pairs), "features_visual": ws["visual"],
        "features_text": ws["text"], "refs": str(pool),
        "refs_per_draw": 2, "draws": 3, "seed": 5})
    assert again.json()["report_text"] == body["report_text"]


def test_eval_foil(client, image_workspace, tmp_path):
    ws = image_workspace
    pairs = tmp_path / "foil.jsonl"
    write_jsonl(pairs, [{"media": "img1", "correct": "cap1", "foil": "cap2"},
                        {"media": "img2", "correct": "cap2", "foil": "cap3"}])
    response = client.post("/eval/foil", json={
        "pairs": str(pairs), "features_visual": ws["visual"],
        "features_text": ws["text"]})
    assert response.status_code == 200
    body = response.json()
    assert body["variant"] == "free"
    assert 0.0 <= body["accuracy"] <= 1.0


def test_train_and_rescoring_flow(client, tmp_path):
    """End to end: export synthetic features, train via the endpoint, then
    score with the trained checkpoint."""
    from capscore.container import flat_container, write_container
    from capscore.rng import substream

    rng = substream(13, "service-train")
    dim, n = 8, 72
    rot, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    z = rng.standard_normal((n, dim))
    visual = z + 0.01 * rng.standard_normal((n, dim))
    textual = z @ rot + 0.01 * rng.standard_normal((n, dim))
    vis_ids = [f"img{i}" for i in range(n)] + [f"gimg{i}" for i in range(n)]
    txt_ids = [f"cap{i}" for i in range(n)] + [f"gcap{i}" for i in range(n)]
    vis_path, txt_path = tmp_path / "v.bin", tmp_path / "t.bin"
    write_container(flat_container(
        "visual-feature", vis_ids,
        np.vstack([visual, visual + 0.01]).astype(np.float32)), vis_path)
    write_container(flat_container(
        "text-feature", txt_ids,
        np.vstack([textual, textual + 0.01]).astype(np.float32)), txt_path)
    tuples = tmp_path / "tuples.jsonl"
    write_jsonl(tuples, [{"v": f"img{i}", "t": f"cap{i}",
                          "v_gen": f"gimg{i}", "t_gen": f"gcap{i}"}
                         for i in range(n)])
    ckpt = tmp_path / "trained.ckpt"
    with TestClient(create_app()) as client:
        response = client.post("/train", json={
            "tuples": str(tuples), "features_visual": str(vis_path),
            "features_text": str(txt_path), "out": str(ckpt),
            "val_split": 0.15, "lr": 0.01, "batch": 32, "patience": 300,
            "max_iters": 400, "val_every": 50, "tau": 0.1, "seed": 13})
        assert response.status_code == 200
        body = response.json()
        assert body["best_val_loss"] < body["initial_val_loss"]
        heads, meta = load_checkpoint(ckpt)
        assert meta["train_config"]["batch_size"] == 32
        assert meta["loss_config"]["lambda_v"] == 0.05

        manifest = tmp_path / "score.jsonl"
        write_jsonl(manifest, [{"id": f"q{i}", "candidate": f"cap{i}",
                                "media": f"img{i}"} for i in range(4)])
        scored = client.post("/score", json={
            "manifest": str(manifest), "features_visual": str(vis_path),
            "features_text": str(txt_path), "checkpoint": str(ckpt)})
        assert scored.status_code == 200
        # trained space scores matched pairs high
        assert scored.json()["mean"] > 1.5
