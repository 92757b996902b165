import math

import numpy as np


def check_image(img, name="image"):
    """Return ``img`` as a float64 array of shape (H, W, d).

    Accepts (H, W) grayscale or (H, W, d) multichannel input.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"{name} must have shape (H, W) or (H, W, d), got {np.shape(img)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def restore_shape(arr, like):
    """Drop the channel axis again if ``like`` was 2-D."""
    return arr[:, :, 0] if np.ndim(like) == 2 else arr


def check_positive(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be finite and > 0, got {value}")
    return value


def check_signal(f, n, name="signal"):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != n:
        raise ValueError(f"{name} must be a vector of length {n}, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite values")
    return f
