"""Grayscale image files: binary PGM (P5, 8/16-bit), ASCII PGM (P2), optional PNG, and .npy."""

import hashlib
import os

import numpy as np


def _tokens(data, start, count):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out = []
    pos = start
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        end = pos
        while end < n and not data[end : end + 1].isspace() and data[end : end + 1] != b"#":
            end += 1
        if end == pos:
            raise ValueError("truncated PGM header")
        out.append(int(data[pos:end]))
        pos = end
    return out, pos


def read_pgm(path):
    """Read a P5 or P2 PGM file.

    Returns
    -------
    image : ndarray of shape (H, W), float64
        Intensities on the file's native scale.
    maxval : int
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    (width, height, maxval), pos = _tokens(data, 2, 3)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid PGM header {width}x{height} maxval {maxval}")
    if magic == b"P2":
        vals, _ = _tokens(data, pos, width * height)
        img = np.array(vals, dtype=np.float64).reshape(height, width)
    else:
        pos += 1  # single whitespace byte before the raster
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = width * height
        if len(data) - pos < count * dtype.itemsize:
            raise ValueError(f"{path}: truncated PGM raster")
        img = np.frombuffer(data, dtype, count, pos).reshape(height, width).astype(np.float64)
    if img.max(initial=0) > maxval:
        raise ValueError(f"{path}: pixel values exceed maxval {maxval}")
    return img, maxval


def write_pgm(path, img, maxval=255):
    """Write a binary P5 PGM, rounding and clipping to ``[0, maxval]``."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"PGM images must be 2-D, got shape {arr.shape}")
    if not 0 < maxval < 65536:
        raise ValueError(f"maxval must be in [1, 65535], got {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = np.clip(np.rint(arr), 0, maxval).astype(dtype)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (arr.shape[1], arr.shape[0], maxval))
        fh.write(raster.tobytes())


def read_png(path):
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on the install
        raise ImportError("PNG support requires Pillow: pip install 'artifact[png]'") from exc
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return arr, 65535
        return np.asarray(im.convert("L"), dtype=np.float64), 255


def read_image(path):
    """Load a grayscale image as ``(float64 array, peak value)`` by file extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        return read_png(path)
    if ext == ".npy":
        arr = np.load(path)
        if arr.ndim != 2:
            raise ValueError(f"{path}: expected a 2-D array, got shape {arr.shape}")
        return arr.astype(np.float64), 255
    return read_pgm(path)


def write_image(path, img, maxval=255):
    """Save as PGM, or as a raw float ``.npy`` when the extension asks for it."""
    if str(path).lower().endswith(".npy"):
        np.save(path, np.asarray(img, dtype=np.float64))
    else:
        write_pgm(path, img, maxval)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
