import json

import pytest
from PIL import Image


def solid_image(path, rgb, size=(24, 24)):
    Image.new("RGB", size, rgb).save(path)
    return str(path)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


@pytest.fixture
def media(tmp_path):
    """Three solid-color images plus matching/mismatching captions."""
    images = {
        "red": solid_image(tmp_path / "red.png", (255, 0, 0)),
        "green": solid_image(tmp_path / "green.png", (0, 255, 0)),
        "blue": solid_image(tmp_path / "blue.png", (0, 0, 255)),
    }
    captions = {
        "red": "a red square on a wall",
        "green": "bright green grass field",
        "blue": "the deep blue sea",
    }
    return {"dir": tmp_path, "images": images, "captions": captions}
