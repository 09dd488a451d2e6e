"""PNG input/output and grid compositing.

Images are 8-bit RGB PNGs without alpha; quantization to 8 bits happens only
here.  Grid sheets separate cells with 1-pixel lines and bake axis labels with
the embedded 5x7 bitmap font, so the output is self-describing.
"""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

from .errors import FormatError, ValidationError
from .formats import write_atomic
from .pipeline import GridResult
from .synthesis import ImageBuffer

# 5x7 glyphs; '#' marks lit pixels.  Enough coverage for the grid labels
# (digits, separators, and the axis names).
_GLYPHS = {
    "0": [" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "],
    "1": ["  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "],
    "2": [" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"],
    "3": [" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "],
    "4": ["   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "],
    "5": ["#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "],
    "6": ["  ## ", " #   ", "#    ", "#### ", "#   #", "#   #", " ### "],
    "7": ["#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "],
    "8": [" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "],
    "9": [" ### ", "#   #", "#   #", " ####", "    #", "   # ", " ##  "],
    ".": ["     ", "     ", "     ", "     ", "     ", " ##  ", " ##  "],
    "=": ["     ", "     ", "#####", "     ", "#####", "     ", "     "],
    "-": ["     ", "     ", "     ", "#####", "     ", "     ", "     "],
    "+": ["     ", "  #  ", "  #  ", "#####", "  #  ", "  #  ", "     "],
    "a": ["     ", "     ", " ### ", "    #", " ####", "#   #", " ####"],
    "c": ["     ", "     ", " ### ", "#    ", "#    ", "#   #", " ### "],
    "e": ["     ", "     ", " ### ", "#   #", "#####", "#    ", " ### "],
    "g": ["     ", "     ", " ####", "#   #", " ####", "    #", " ### "],
    "i": ["  #  ", "     ", " ##  ", "  #  ", "  #  ", "  #  ", " ### "],
    "m": ["     ", "     ", "## # ", "# # #", "# # #", "# # #", "# # #"],
    "n": ["     ", "     ", "# ## ", "##  #", "#   #", "#   #", "#   #"],
    "o": ["     ", "     ", " ### ", "#   #", "#   #", "#   #", " ### "],
    "p": ["     ", "     ", "#### ", "#   #", "#### ", "#    ", "#    "],
    "r": ["     ", "     ", "# ## ", "##   ", "#    ", "#    ", "#    "],
    "s": ["     ", "     ", " ####", "#    ", " ### ", "    #", "#### "],
    "t": [" #   ", " #   ", "#### ", " #   ", " #   ", " #   ", "  ## "],
    "v": ["     ", "     ", "#   #", "#   #", "#   #", " # # ", "  #  "],
    "x": ["     ", "     ", "#   #", " # # ", "  #  ", " # # ", "#   #"],
    " ": ["     ", "     ", "     ", "     ", "     ", "     ", "     "],
}

GLYPH_W, GLYPH_H, GLYPH_PITCH = 5, 7, 6


def render_text(canvas: np.ndarray, row: int, col: int, text: str, value: float = 1.0) -> None:
    """Stamp text into a HxWx3 array in place; unknown glyphs advance blank."""
    for ch in text:
        glyph = _GLYPHS.get(ch)
        if glyph is not None:
            for gy, line in enumerate(glyph):
                for gx, bit in enumerate(line):
                    if bit == "#":
                        y, x = row + gy, col + gx
                        if 0 <= y < canvas.shape[0] and 0 <= x < canvas.shape[1]:
                            canvas[y, x] = value
        col += GLYPH_PITCH


def save_png(path: str, img: ImageBuffer) -> None:
    """Quantize to 8-bit RGB and write atomically."""
    u8 = np.clip(np.rint(img.values * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    write_atomic(path, buf.getvalue())


def load_png(path: str) -> ImageBuffer:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise FormatError(f"{path}: cannot decode image: {e}") from e
    return ImageBuffer(arr.astype(np.float64) / 255.0)


def compose_grid(grid: GridResult, separator: float = 1.0) -> ImageBuffer:
    """Assemble grid cells into one sheet: 1-pixel separators between cells,
    a top strip for column labels, and a left strip for row labels."""
    cell_h = grid.cells[0][0].height
    cell_w = grid.cells[0][0].width
    top = GLYPH_H + 2
    left = 0
    if any(lbl.strip() for lbl in grid.row_labels):
        left = max(len(lbl) for lbl in grid.row_labels) * GLYPH_PITCH + 2

    height = top + grid.rows * cell_h + (grid.rows - 1)
    width = left + grid.cols * cell_w + (grid.cols - 1)
    canvas = np.zeros((height, width, 3), dtype=np.float64)

    for j, lbl in enumerate(grid.col_labels):
        render_text(canvas, 1, left + j * (cell_w + 1) + 1, lbl)
    for i, lbl in enumerate(grid.row_labels):
        render_text(canvas, top + i * (cell_h + 1) + 1, 1, lbl)

    for i in range(grid.rows):
        for j in range(grid.cols):
            y = top + i * (cell_h + 1)
            x = left + j * (cell_w + 1)
            canvas[y : y + cell_h, x : x + cell_w] = grid.cells[i][j].values
            if i < grid.rows - 1:
                canvas[y + cell_h, x : x + cell_w + 1] = separator
            if j < grid.cols - 1:
                canvas[y : y + cell_h + 1, x + cell_w] = separator
    return ImageBuffer(canvas)


def load_frame_dir(frame_dir: str) -> list[tuple[str, ImageBuffer]]:
    """Lexicographically ordered decodable frames of a directory."""
    if not os.path.isdir(frame_dir):
        raise ValidationError(f"not a directory: {frame_dir}")
    names = sorted(
        n for n in os.listdir(frame_dir) if n.lower().endswith(".png")
    )
    if not names:
        raise ValidationError(f"no .png frames in {frame_dir}")
    frames = []
    for name in names:
        path = os.path.join(frame_dir, name)
        try:
            frames.append((name, load_png(path)))
        except (FormatError, OSError) as e:
            raise FormatError(f"unreadable frame {name}: {e}") from e
    return frames
