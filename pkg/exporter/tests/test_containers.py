"""Cross-component format tests: everything capexport writes must be read
back by the engine with zero conversion loss at float32."""

import subprocess
import sys

import numpy as np
import pytest

from capexport.containers import (encode_container, write_checkpoint,
                                  write_flat, write_sequences)


def test_flat_container_readable_with_exact_values(tmp_path):
    rng = np.random.default_rng(7)
    values = rng.standard_normal((4, 6)).astype(np.float32)
    path = tmp_path / "flat.bin"
    write_flat(path, "visual-feature", [f"v{i}" for i in range(4)], values,
               metadata={"backbone": "chromatic", "stage": "pre-projection"})

    from capscore.container import read_container
    loaded = read_container(path)
    assert loaded.role == "visual-feature"
    assert loaded.ids == ["v0", "v1", "v2", "v3"]
    assert np.array_equal(loaded.payload, values)          # f32-exact
    assert loaded.metadata["backbone"] == "chromatic"


def test_token_container_readable(tmp_path):
    rng = np.random.default_rng(8)
    blocks = [rng.standard_normal((3, 5)).astype(np.float32),
              rng.standard_normal((2, 5)).astype(np.float32)]
    path = tmp_path / "tokens.bin"
    write_sequences(path, "text-token-sequence", ["c0", "c1"], blocks,
                    surfaces=[["a", "red", "dog"], ["blue", "sky"]])

    from capscore.container import read_container
    loaded = read_container(path)
    assert loaded.surfaces == [["a", "red", "dog"], ["blue", "sky"]]
    offsets = loaded.offsets()
    for ident, block in zip(["c0", "c1"], blocks):
        lo, hi = offsets[ident]
        assert np.array_equal(loaded.payload[lo:hi], block)


def test_checkpoint_readable(tmp_path):
    rng = np.random.default_rng(9)
    vp = rng.standard_normal((10, 4)).astype(np.float32)
    tp = rng.standard_normal((8, 4)).astype(np.float32)
    path = tmp_path / "init.ckpt"
    write_checkpoint(path, vp, tp, metadata={"backbone": "chromatic"})

    from capscore.checkpoint import load_checkpoint
    heads, meta = load_checkpoint(path)
    assert np.array_equal(heads.visual.weights.astype(np.float32), vp)
    assert np.array_equal(heads.textual.weights.astype(np.float32), tp)
    assert meta["backbone"] == "chromatic"


def test_round_trip_through_engine_writer_is_byte_identical(tmp_path):
    """Engine read + engine re-write reproduces the exporter's bytes, so the
    two independent writers implement the same canonical encoding."""
    rng = np.random.default_rng(10)
    data = encode_container("text-feature", ["a", "b"],
                            [rng.standard_normal((1, 3)).astype(np.float32),
                             rng.standard_normal((1, 3)).astype(np.float32)],
                            metadata={"k": 1})
    from capscore.container import container_from_bytes, container_to_bytes
    assert container_to_bytes(container_from_bytes(data)) == data


def test_engine_cli_inspect_reads_exporter_output(tmp_path):
    rng = np.random.default_rng(11)
    path = tmp_path / "caps.bin"
    write_flat(path, "text-feature", ["x", "y"],
               rng.standard_normal((2, 7)).astype(np.float32))
    proc = subprocess.run([sys.executable, "-m", "capscore.cli", "inspect",
                           str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "role text-feature" in proc.stdout
    assert "dim 7" in proc.stdout


def test_writer_rejects_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate"):
        encode_container("visual-feature", ["a", "a"],
                         [np.ones((1, 2), dtype=np.float32)] * 2)


def test_writer_rejects_non_finite():
    bad = np.ones((1, 2), dtype=np.float32)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        encode_container("visual-feature", ["a"], [bad])
