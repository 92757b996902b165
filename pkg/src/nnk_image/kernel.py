"""Bilateral kernel, dense window (BF) graphs and the classical bilateral filter."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_image, check_positive, restore_shape
from .graph import SparseGraph
from .lattice import check_window_fits

DEFAULT_SIGMA_F = 30.0


@dataclass(frozen=True)
class KernelParams:
    """Spatial and range bandwidths of the bilateral kernel.

    ``sigma_d`` is in pixels, ``sigma_f`` in intensity units of the image
    (``[0, 255]`` for 8-bit input).
    """

    sigma_d: float
    sigma_f: float

    def __post_init__(self):
        object.__setattr__(self, "sigma_d", check_positive(self.sigma_d, "sigma_d"))
        object.__setattr__(self, "sigma_f", check_positive(self.sigma_f, "sigma_f"))

    @property
    def mu(self):
        return (self.sigma_f / self.sigma_d) ** 2

    @classmethod
    def default(cls, window_size, sigma_d=None, sigma_f=None):
        """Defaults ``sigma_d = w / 4`` and ``sigma_f = 30``."""
        return cls(
            window_size / 4.0 if sigma_d is None else sigma_d,
            DEFAULT_SIGMA_F if sigma_f is None else sigma_f,
        )


def bilateral_weight(params, xi, xj, fi, fj):
    """Bilateral edge weight between two pixels.

    ``exp(-|xi - xj|^2 / (2 sigma_d^2)) * exp(-|fi - fj|^2 / (2 sigma_f^2))``
    """
    xi, xj = np.asarray(xi, dtype=np.float64), np.asarray(xj, dtype=np.float64)
    fi, fj = np.atleast_1d(np.asarray(fi, dtype=np.float64)), np.atleast_1d(np.asarray(fj, dtype=np.float64))
    if fi.shape != fj.shape:
        raise ValueError("intensity vectors must have the same dimension")
    d2 = float(np.sum((xi - xj) ** 2))
    f2 = float(np.sum((fi - fj) ** 2))
    return np.exp(-d2 / (2 * params.sigma_d**2)) * np.exp(-f2 / (2 * params.sigma_f**2))


def _shifted_weights(img, dy, dx, params):
    """Weights from every pixel to its neighbor at ``(dy, dx)``.

    Returns the weight plane and the boolean mask of pixels whose neighbor
    lies inside the image. Entries outside the mask are zero.
    """
    h, w, _ = img.shape
    out = np.zeros((h, w))
    mask = np.zeros((h, w), dtype=bool)
    r0, r1 = max(0, -dy), min(h, h - dy)
    c0, c1 = max(0, -dx), min(w, w - dx)
    if r0 >= r1 or c0 >= c1:
        return out, mask
    src = img[r0:r1, c0:c1]
    dst = img[r0 + dy : r1 + dy, c0 + dx : c1 + dx]
    f2 = np.sum((src - dst) ** 2, axis=2)
    spatial = np.exp(-(dy * dy + dx * dx) / (2 * params.sigma_d**2))
    out[r0:r1, c0:c1] = spatial * np.exp(-f2 / (2 * params.sigma_f**2))
    mask[r0:r1, c0:c1] = True
    return out, mask


def build_bf_graph(img, plan, params):
    """Dense window graph: every pixel linked to all in-image window neighbors.

    No self-loops; the result is symmetric because the kernel is.
    """
    img = check_image(img)
    check_window_fits(plan, img.shape)
    h, w, _ = img.shape
    n = h * w
    idx = np.arange(n, dtype=np.int64).reshape(h, w)

    # plan offsets come in (dy, dx) pairs; visiting them in row-major order
    # of the offset itself yields column-sorted CSR rows directly
    order = np.lexsort((plan.offsets[:, 1], plan.offsets[:, 0]))
    planes, masks, cols = [], [], []
    for k in order:
        dy, dx = (int(v) for v in plan.offsets[k])
        wt, mask = _shifted_weights(img, dy, dx, params)
        planes.append(wt.ravel())
        masks.append(mask.ravel())
        cols.append((idx + dy * w + dx).ravel())
    planes = np.stack(planes, axis=1)
    masks = np.stack(masks, axis=1)
    cols = np.stack(cols, axis=1)

    counts = masks.sum(axis=1)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return SparseGraph(
        n,
        row_ptr,
        cols[masks],
        planes[masks],
        image_shape=(h, w),
        window_size=plan.window_size,
        meta={"method": "bf", "sigma_d": params.sigma_d, "sigma_f": params.sigma_f},
    )


def bf_filter(img, plan, params, include_self=True):
    """Classical bilateral filter ``D^-1 K f`` over the clipped window.

    With ``include_self`` the center pixel contributes with weight 1.
    """
    arr = check_image(img)
    check_window_fits(plan, arr.shape)
    num = arr.copy() if include_self else np.zeros_like(arr)
    den = np.ones(arr.shape[:2]) if include_self else np.zeros(arr.shape[:2])
    h, w, _ = arr.shape
    for dy, dx in plan.offsets:
        dy, dx = int(dy), int(dx)
        wt, mask = _shifted_weights(arr, dy, dx, params)
        r0, r1 = max(0, -dy), min(h, h - dy)
        c0, c1 = max(0, -dx), min(w, w - dx)
        if r0 >= r1 or c0 >= c1:
            continue
        num[r0:r1, c0:c1] += wt[r0:r1, c0:c1, None] * arr[r0 + dy : r1 + dy, c0 + dx : c1 + dx]
        den += wt
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den[:, :, None]
    # rows with no positive weight keep their input value
    empty = den == 0
    out[empty] = arr[empty]
    return restore_shape(out, img)
