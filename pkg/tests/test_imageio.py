"""PNG round trips, grid sheets, the bitmap font, and frame loading."""

import numpy as np
import pytest

import toonfuse as tf
from toonfuse.errors import FormatError, ValidationError
from toonfuse.imageio import (
    GLYPH_PITCH,
    compose_grid,
    load_frame_dir,
    load_png,
    render_text,
    save_png,
)

from conftest import rand_image


def test_png_round_trip_is_quantization_exact(tmp_path, rng):
    img = rand_image(rng, 16)
    path = str(tmp_path / "a.png")
    save_png(path, img)
    back = load_png(path)
    want = np.clip(np.rint(img.values * 255.0), 0, 255) / 255.0
    assert np.array_equal(back.values, want)
    # a second save/load cycle is a fixed point
    save_png(path, back)
    assert np.array_equal(load_png(path).values, back.values)


def test_png_bytes_are_reproducible(tmp_path, rng):
    img = rand_image(rng, 16)
    p1, p2 = str(tmp_path / "1.png"), str(tmp_path / "2.png")
    save_png(p1, img)
    save_png(p2, img)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_load_missing_png(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_png(str(tmp_path / "nope.png"))


def test_load_undecodable_png(tmp_path):
    path = str(tmp_path / "junk.png")
    with open(path, "wb") as f:
        f.write(b"not a png at all")
    with pytest.raises(FormatError):
        load_png(path)


def test_render_text_lights_pixels():
    canvas = np.zeros((10, 40, 3))
    render_text(canvas, 1, 1, "m=7")
    assert canvas.sum() > 0
    # unknown glyphs advance without drawing
    blank = np.zeros((10, 40, 3))
    render_text(blank, 1, 1, "???")
    assert blank.sum() == 0


def test_compose_grid_layout(gen16, rng):
    cells = tuple(
        tuple(rand_image(rng, 16) for _ in range(3)) for _ in range(2)
    )
    grid = tf.GridResult(cells=cells, row_labels=("age=10", "age=55"), col_labels=("t=0.00", "t=0.50", "t=1.00"))
    sheet = compose_grid(grid)
    top = 9
    left = max(len("age=10"), len("age=55")) * GLYPH_PITCH + 2
    assert sheet.height == top + 2 * 16 + 1
    assert sheet.width == left + 3 * 16 + 2
    # cells land unchanged
    got = sheet.values[top : top + 16, left : left + 16]
    assert np.array_equal(got, cells[0][0].values)
    # separator line between the first two columns
    assert np.all(sheet.values[top : top + 16, left + 16] == 1.0)


def test_grid_result_validates_shape_coherence(rng):
    a, b = rand_image(rng, 8), rand_image(rng, 16)
    with pytest.raises(ValidationError):
        tf.GridResult(cells=((a, b),), row_labels=("",), col_labels=("x", "y"))
    with pytest.raises(ValidationError):
        tf.GridResult(cells=((a,),), row_labels=("", "extra"), col_labels=("x",))


def test_load_frame_dir_orders_lexicographically(tmp_path, rng):
    for name in ("c.png", "a.png", "b.png"):
        save_png(str(tmp_path / name), rand_image(rng, 8))
    frames = load_frame_dir(str(tmp_path))
    assert [n for n, _ in frames] == ["a.png", "b.png", "c.png"]


def test_load_frame_dir_rejects_empty(tmp_path):
    with pytest.raises(ValidationError):
        load_frame_dir(str(tmp_path))


def test_load_frame_dir_names_unreadable_file(tmp_path, rng):
    save_png(str(tmp_path / "a.png"), rand_image(rng, 8))
    with open(tmp_path / "b.png", "wb") as f:
        f.write(b"garbage")
    with pytest.raises(FormatError, match="b.png"):
        load_frame_dir(str(tmp_path))
