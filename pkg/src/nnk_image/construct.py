"""Sparse NNK image graphs via window pruning.

Each pixel visits its window neighbors from nearest to farthest. A neighbor
that survives is connected and then prunes every still-open neighbor ``k`` in
its own direction (threshold factor ``delta[j, k] >= 0``) whose intensity
satisfies

    (f_j - f_k) . (f_j - f_i) <= mu * delta[j, k],   mu = (sigma_f / sigma_d)^2

which is the kernel ratio interval condition specialised to the bilateral
kernel on a regular lattice. Survivors keep their bilateral weights.
"""

import numba
import numpy as np

from ._validation import check_image
from .graph import SparseGraph, symmetrize
from .lattice import check_window_fits

ABSENT = -2
KEPT = -1
_OPEN = -3


def prune_test(fi, fj, fk, mu, delta_jk):
    """True when connected neighbor ``j`` removes candidate ``k``.

    ``delta_jk`` must be non-negative; callers only test same-direction pairs.
    """
    fi, fj, fk = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (fi, fj, fk))
    return bool(np.dot(fj - fk, fj - fi) <= mu * delta_jk)


@numba.njit(parallel=True, cache=True)
def _prune_rows(img, offsets, delta, sd_ptr, sd_idx, mu, state):
    h, w, d = img.shape
    n_off = offsets.shape[0]
    for p in numba.prange(h * w):
        r = p // w
        c = p - r * w
        st = state[p]
        for k in range(n_off):
            rr = r + offsets[k, 0]
            cc = c + offsets[k, 1]
            if rr < 0 or rr >= h or cc < 0 or cc >= w:
                st[k] = -2
            else:
                st[k] = -3
        for j in range(n_off):
            if st[j] != -3:
                continue
            st[j] = -1
            rj = r + offsets[j, 0]
            cj = c + offsets[j, 1]
            for t in range(sd_ptr[j], sd_ptr[j + 1]):
                k = sd_idx[t]
                if st[k] != -3:
                    continue
                rk = r + offsets[k, 0]
                ck = c + offsets[k, 1]
                lhs = 0.0
                for ch in range(d):
                    fj = img[rj, cj, ch]
                    lhs += (fj - img[rk, ck, ch]) * (fj - img[r, c, ch])
                if lhs <= mu * delta[j, k]:
                    st[k] = j
    return state


def prune_states(img, plan, params, n_jobs=None):
    """Per-pixel pruning outcome for every plan offset.

    Returns an int16 array of shape (H * W, w * w - 1): ``KEPT`` (-1) for
    connected neighbors, ``ABSENT`` (-2) for offsets outside the image, and
    otherwise the plan index of the connected neighbor that pruned it.
    """
    img = check_image(img)
    check_window_fits(plan, img.shape)
    h, w, _ = img.shape
    sd_ptr, sd_idx = plan.same_direction_csr()
    state = np.empty((h * w, plan.n_offsets), dtype=np.int16)
    prev = numba.get_num_threads()
    if n_jobs is not None:
        numba.set_num_threads(max(1, min(int(n_jobs), numba.config.NUMBA_NUM_THREADS)))
    try:
        _prune_rows(img, plan.offsets, plan.delta, sd_ptr, sd_idx, params.mu, state)
    finally:
        numba.set_num_threads(prev)
    return state


def _assemble(img, plan, params, keep):
    h, w, _ = img.shape
    n = h * w
    order = np.lexsort((plan.offsets[:, 1], plan.offsets[:, 0]))
    keep = keep[:, order]
    offs = plan.offsets[order]

    rows, ks = np.nonzero(keep)
    dy, dx = offs[ks, 0], offs[ks, 1]
    cols = rows + dy * w + dx
    flat = img.reshape(n, -1)
    f2 = np.sum((flat[rows] - flat[cols]) ** 2, axis=1)
    d2 = (dy * dy + dx * dx).astype(np.float64)
    weights = np.exp(-d2 / (2 * params.sigma_d**2)) * np.exp(-f2 / (2 * params.sigma_f**2))

    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(keep.sum(axis=1), out=row_ptr[1:])
    return SparseGraph(
        n,
        row_ptr,
        cols,
        weights,
        image_shape=(h, w),
        window_size=plan.window_size,
        meta={"method": "nnk", "sigma_d": params.sigma_d, "sigma_f": params.sigma_f},
    )


def build_nnk_graph(img, plan, params, symmetric="max", n_jobs=None, return_witnesses=False):
    """Sparse NNK graph of an image.

    Parameters
    ----------
    img : array-like of shape (H, W) or (H, W, d)
    plan : WindowPlan
    params : KernelParams
    symmetric : {"max", "average", None}
        Symmetrization applied to the row-wise result; ``None`` returns the
        directed graph exactly as pruned.
    n_jobs : int, optional
        Worker threads for the per-pixel loop.
    return_witnesses : bool
        Also return the raw pruning state from :func:`prune_states`.
    """
    arr = check_image(img)
    state = prune_states(arr, plan, params, n_jobs=n_jobs)
    graph = _assemble(arr, plan, params, state == KEPT)
    if symmetric is not None:
        graph = symmetrize(graph, symmetric)
    if return_witnesses:
        return graph, state
    return graph


def witness_pairs(state, plan, shape):
    """Expand a pruning state into ``(i, k, j)`` node triples.

    Each row says node ``k`` was removed from node ``i``'s neighborhood
    because connected node ``j`` pruned it.
    """
    h, w = shape
    pix, ks = np.nonzero(state >= 0)
    js = state[pix, ks].astype(np.int64)
    off = plan.offsets
    k_nodes = pix + off[ks, 0] * w + off[ks, 1]
    j_nodes = pix + off[js, 0] * w + off[js, 1]
    return np.column_stack([pix, k_nodes, j_nodes]), np.column_stack([ks, js])
