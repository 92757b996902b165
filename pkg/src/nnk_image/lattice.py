"""Image-independent window geometry.

Pixel positions inside a ``w x w`` window are the same for every pixel of
every image, so the neighbor ordering and the pruning threshold factors are
computed once per window size and shared read-only.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MIN_WINDOW = 3
MAX_WINDOW = 63


@dataclass(frozen=True, eq=False)
class WindowPlan:
    """Distance-sorted window offsets and their threshold-factor table.

    Attributes
    ----------
    window_size : int
        Odd window side ``w``.
    offsets : ndarray of shape (w*w - 1, 2), int64
        ``(dy, dx)`` offsets from the window center, sorted by squared
        distance with ties broken lexicographically on ``(dy, dx)``.
    delta : ndarray of shape (w*w - 1, w*w - 1), float64
        ``delta[j, k] = (x_k - x_j) . (x_j - x_i)`` with ``x_i`` the center.
    same_direction : tuple of ndarray
        ``same_direction[j]`` lists every ``k != j`` with ``delta[j, k] >= 0``,
        in plan order.
    """

    window_size: int
    offsets: np.ndarray
    delta: np.ndarray
    same_direction: tuple

    @property
    def radius(self):
        return (self.window_size - 1) // 2

    @property
    def n_offsets(self):
        return self.offsets.shape[0]

    @property
    def sq_dist(self):
        return (self.offsets**2).sum(axis=1)

    def same_direction_csr(self):
        """Flatten ``same_direction`` into ``(indptr, indices)`` int64 arrays."""
        lengths = np.array([len(s) for s in self.same_direction], dtype=np.int64)
        indptr = np.zeros(self.n_offsets + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        if indptr[-1]:
            indices = np.concatenate(self.same_direction).astype(np.int64)
        else:
            indices = np.zeros(0, dtype=np.int64)
        return indptr, indices


def _check_window(w):
    if isinstance(w, bool) or not isinstance(w, (int, np.integer)):
        raise ValueError(f"window size must be an integer, got {w!r}")
    w = int(w)
    if w % 2 == 0 or not MIN_WINDOW <= w <= MAX_WINDOW:
        raise ValueError(
            f"window size must be odd and in [{MIN_WINDOW}, {MAX_WINDOW}], got {w}"
        )
    return w


@lru_cache(maxsize=None)
def _precompute(w):
    r = (w - 1) // 2
    coords = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    coords.remove((0, 0))
    coords.sort(key=lambda o: (o[0] ** 2 + o[1] ** 2, o[0], o[1]))
    offsets = np.array(coords, dtype=np.int64)

    # delta[j, k] = x_k . x_j - |x_j|^2, exact in integers before the cast
    gram = offsets @ offsets.T
    delta = (gram - np.diag(gram)[:, None]).astype(np.float64)

    same_direction = []
    for j in range(len(coords)):
        ks = np.flatnonzero(delta[j] >= 0)
        ks = ks[ks != j]
        ks.setflags(write=False)
        same_direction.append(ks)

    offsets.setflags(write=False)
    delta.setflags(write=False)
    return WindowPlan(w, offsets, delta, tuple(same_direction))


def precompute_window(w):
    """Build the :class:`WindowPlan` for an odd window size ``w``.

    Results are cached; repeated calls return the same immutable plan.

    Raises
    ------
    ValueError
        If ``w`` is even, not an integer, or outside ``[3, 63]``.
    """
    return _precompute(_check_window(w))


def valid_neighbors(plan, pixel, dims):
    """Plan offsets of ``pixel`` that fall inside an ``H x W`` image.

    Returns a list of ``(offset_index, (row, col))`` in plan order.
    """
    row, col = pixel
    height, width = dims
    rows = row + plan.offsets[:, 0]
    cols = col + plan.offsets[:, 1]
    inside = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    return [(int(k), (int(rows[k]), int(cols[k]))) for k in np.flatnonzero(inside)]


def check_window_fits(plan, shape):
    """Reject windows whose reach exceeds the image in both directions.

    A window is accepted as long as at least one offset can land inside the
    image; rows near the border are clipped rather than padded.
    """
    height, width = shape[:2]
    if plan.radius >= max(height, width):
        raise ValueError(
            f"window size {plan.window_size} is larger than the "
            f"{height}x{width} image"
        )
