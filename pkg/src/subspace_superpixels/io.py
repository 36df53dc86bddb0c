"""Reading and writing images and label grids.

Images are 8-bit PNG/PPM files scaled to [0, 1]. Label grids are stored
either as 16-bit grayscale PNG or as headerless CSV of integers (one image
row per line).
"""

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError
from .units import ImageBuffer

_MAX_PNG_LABEL = np.iinfo(np.uint16).max


def read_image(path):
    """Load an 8-bit image as an :class:`ImageBuffer` with RGB in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("RGB", "L", "RGBA", "P", "LA"):
                raise InvalidInputError(
                    f"{path}: unsupported image mode {im.mode!r}, expected 8-bit"
                )
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, SyntaxError) as exc:
        raise InvalidInputError(f"cannot read image {path}: {exc}") from exc
    return ImageBuffer(rgb / 255.0)


def write_image(path, rgb):
    """Write an (H, W, 3) array in [0, 1] as an 8-bit image."""
    arr = np.clip(np.rint(np.asarray(rgb) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def read_labels(path):
    """Read a label grid from a 16-bit PNG or an integer CSV file."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            arr = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
        except (OSError, ValueError) as exc:
            raise InvalidInputError(f"cannot read label csv {path}: {exc}") from exc
        return arr
    try:
        with Image.open(path) as im:
            arr = np.array(im)
    except (OSError, SyntaxError) as exc:
        raise InvalidInputError(f"cannot read label map {path}: {exc}") from exc
    if arr.ndim != 2:
        raise InvalidInputError(f"{path}: label map must be single-channel")
    return arr.astype(np.int64)


def write_labels(path, labels):
    """Write a label grid; the format follows the file extension."""
    path = Path(path)
    labels = np.asarray(labels)
    if path.suffix.lower() == ".csv":
        np.savetxt(path, labels, fmt="%d", delimiter=",")
        return
    if labels.min() < 0 or labels.max() > _MAX_PNG_LABEL:
        raise InvalidInputError("labels do not fit in a 16-bit PNG")
    Image.fromarray(labels.astype(np.uint16)).save(path)
