"""Per-pixel timing of NNK graph construction and of graph filtering."""

import time

import numpy as np

from ._validation import check_image
from .construct import build_nnk_graph
from .kernel import KernelParams, build_bf_graph
from .lattice import precompute_window
from .oracle import exact_nnk_row
from .spectral import build_laplacian, design_wavelets, estimate_lambda_max, sgw_forward

BENCH_COLUMNS = ("w", "method", "mean_us_per_pixel", "std")


def center_crop(img, size):
    img = np.asarray(img)
    h, w = img.shape[:2]
    if size > h or size > w:
        raise ValueError(f"crop {size}x{size} is larger than the {h}x{w} image")
    r0, c0 = (h - size) // 2, (w - size) // 2
    return img[r0 : r0 + size, c0 : c0 + size]


def time_simplified(img, w, params=None, repeats=3, n_jobs=None):
    """Per-pixel microseconds of the pruned construction, one sample per repeat."""
    img = check_image(img)
    plan = precompute_window(w)
    params = KernelParams.default(w) if params is None else params
    build_nnk_graph(img[: w + 1, : w + 1], plan, params, n_jobs=n_jobs)  # JIT warm-up
    n = img.shape[0] * img.shape[1]
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        build_nnk_graph(img, plan, params, n_jobs=n_jobs)
        samples.append((time.perf_counter() - t0) * 1e6 / n)
    return np.array(samples)


def time_exact(img, w, params=None, n_pixels=64, seed=0):
    """Per-pixel microseconds of the exact NNLS solve over the full window.

    The exact solver is timed on ``n_pixels`` randomly chosen pixels; each
    pixel is one sample.
    """
    img = check_image(img)
    plan = precompute_window(w)
    params = KernelParams.default(w) if params is None else params
    h, wd = img.shape[:2]
    rng = np.random.default_rng(seed)
    flat = rng.choice(h * wd, size=min(n_pixels, h * wd), replace=False)
    samples = []
    for p in flat:
        t0 = time.perf_counter()
        exact_nnk_row(img, plan, params, (int(p // wd), int(p % wd)))
        samples.append((time.perf_counter() - t0) * 1e6)
    return np.array(samples)


def bench_construction(img, windows=(3, 5, 7, 9, 11), crop=128, repeats=3, exact_pixels=64, seed=0, n_jobs=None):
    """Rows of ``(w, method, mean_us_per_pixel, std)`` for both constructions."""
    img = center_crop(check_image(img), crop)
    rows = []
    for w in windows:
        for method, samples in (
            ("simplified", time_simplified(img, w, repeats=repeats, n_jobs=n_jobs)),
            ("exact", time_exact(img, w, n_pixels=exact_pixels, seed=seed)),
        ):
            rows.append(
                {"w": int(w), "method": method, "mean_us_per_pixel": float(samples.mean()), "std": float(samples.std())}
            )
    return rows


def speedups(rows):
    """``exact / simplified`` per-pixel time ratio for each window size."""
    by = {(r["w"], r["method"]): r["mean_us_per_pixel"] for r in rows}
    return {w: by[(w, "exact")] / by[(w, "simplified")] for w, m in by if m == "exact"}


def time_forward(img, method, w=11, cheby_degree=30, num_scales=6, repeats=5):
    """Best-of-``repeats`` wall time (s) of one forward wavelet transform."""
    img = check_image(img)
    params = KernelParams.default(w)
    plan = precompute_window(w)
    graph = build_nnk_graph(img, plan, params) if method == "nnk" else build_bf_graph(img, plan, params)
    L = build_laplacian(graph)
    design = design_wavelets(estimate_lambda_max(L), num_scales, cheby_degree)
    f = img[:, :, 0].ravel()
    sgw_forward(L, design, f)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        sgw_forward(L, design, f)
        best = min(best, time.perf_counter() - t0)
    return best, L.nnz
