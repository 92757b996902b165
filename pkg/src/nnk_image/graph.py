"""Compressed sparse row pixel graphs, symmetrization, accounting and file I/O."""

import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

MAGIC = b"NNKG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


@dataclass(eq=False)
class SparseGraph:
    """Weighted adjacency over ``n`` pixel nodes in CSR layout.

    Attributes
    ----------
    n : int
        Number of nodes (``H * W`` for image graphs, row-major).
    row_ptr : ndarray of shape (n + 1,), int64
    col_idx : ndarray of shape (nnz,), int64
    weights : ndarray of shape (nnz,), float64
        Non-negative edge weights in ``(0, 1]``.
    image_shape : tuple of int, optional
        ``(H, W)`` of the pixel lattice the graph was built on.
    window_size : int, optional
        Window used during construction.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    weights: np.ndarray
    image_shape: tuple = None
    window_size: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = int(self.n)
        self.row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.row_ptr.shape != (self.n + 1,):
            raise ValueError("row_ptr must have length n + 1")
        if self.row_ptr[0] != 0 or np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must start at 0 and be non-decreasing")
        nnz = int(self.row_ptr[-1])
        if self.col_idx.shape != (nnz,) or self.weights.shape != (nnz,):
            raise ValueError("col_idx and weights must have length row_ptr[-1]")
        if nnz and (self.col_idx.min() < 0 or self.col_idx.max() >= self.n):
            raise ValueError("col_idx out of range")
        if self.image_shape is not None:
            self.image_shape = tuple(int(s) for s in self.image_shape)

    @property
    def nnz(self):
        return int(self.row_ptr[-1])

    def degrees(self):
        """Weighted degree ``sum_j W[i, j]`` of every node."""
        rows = np.repeat(np.arange(self.n), np.diff(self.row_ptr))
        return np.bincount(rows, weights=self.weights, minlength=self.n)

    def counts(self):
        """Unweighted out-degree of every node."""
        return np.diff(self.row_ptr)

    def to_scipy(self):
        return sp.csr_matrix((self.weights, self.col_idx, self.row_ptr), shape=(self.n, self.n))

    @classmethod
    def from_scipy(cls, mat, **kwargs):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.shape[0], mat.indptr, mat.indices, mat.data, **kwargs)

    def is_symmetric(self, rtol=0.0):
        a = self.to_scipy()
        diff = abs(a - a.T)
        if diff.nnz == 0:
            return True
        return diff.max() <= rtol * max(abs(a).max(), 1.0)

    def edges(self):
        """Directed ``(i, j)`` pairs as an (nnz, 2) array."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))
        return np.column_stack([rows, self.col_idx])

    def same_arrays(self, other):
        return (
            self.n == other.n
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.weights, other.weights)
        )


def _with_meta(graph, mat, **extra):
    meta = dict(graph.meta)
    meta.update(extra)
    return SparseGraph.from_scipy(
        mat, image_shape=graph.image_shape, window_size=graph.window_size, meta=meta
    )


def symmetrize(graph, mode="max"):
    """Make the support and weights symmetric.

    The support becomes the union of ``(i, j)`` and ``(j, i)``. With
    ``mode="max"`` an edge present in one direction only keeps its weight;
    with ``mode="average"`` the missing direction counts as zero.
    """
    a = graph.to_scipy()
    if mode == "max":
        sym = a.maximum(a.T)
    elif mode == "average":
        sym = (a + a.T) * 0.5
    else:
        raise ValueError(f"mode must be 'max' or 'average', got {mode!r}")
    return _with_meta(graph, sym, symmetrized=mode)


def graph_stats(graph):
    """Edge and degree accounting.

    ``undirected_edges`` counts unordered pairs ``{i, j}`` in the support,
    so it is meaningful for directed (pre-symmetrization) graphs as well.
    ``interior_mean_degree`` is only reported for image graphs whose window
    size is known; it averages over pixels at least one radius from every
    border.
    """
    counts = graph.counts()
    edges = graph.edges()
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    undirected = int(np.unique(lo * graph.n + hi).size) if graph.nnz else 0
    stats = {
        "nodes": graph.n,
        "directed_edges": graph.nnz,
        "undirected_edges": undirected,
        "mean_degree": float(counts.mean()) if graph.n else 0.0,
        "max_degree": int(counts.max()) if graph.n else 0,
        "degree_histogram": np.bincount(counts).tolist() if graph.n else [],
        "weight_sum": float(graph.weights.sum()),
        "symmetric": bool(graph.is_symmetric()),
    }
    if graph.image_shape is not None and graph.window_size is not None:
        h, w = graph.image_shape
        r = (graph.window_size - 1) // 2
        if h > 2 * r and w > 2 * r:
            grid = counts.reshape(h, w)[r : h - r, r : w - r]
            stats["interior_mean_degree"] = float(grid.mean())
    return stats


def save_graph(graph, path):
    """Write ``graph`` in the little-endian ``NNKG`` binary CSR format.

    Layout: magic ``NNKG``, u32 version, u64 n, u64 nnz, then ``row_ptr``
    as u64, ``col_idx`` as u32 and ``weights`` as f32.
    """
    if graph.n > np.iinfo(np.uint32).max:
        raise ValueError("graph too large for u32 column indices")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, graph.n, graph.nnz))
        fh.write(graph.row_ptr.astype("<u8").tobytes())
        fh.write(graph.col_idx.astype("<u4").tobytes())
        fh.write(graph.weights.astype("<f4").tobytes())


def load_graph(path):
    """Read a graph written by :func:`save_graph` (weights come back as float32 values)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated graph header")
    magic, version, n, nnz = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an NNKG graph file")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported graph format version {version}")
    expected = _HEADER.size + 8 * (n + 1) + 4 * nnz + 4 * nnz
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    pos = _HEADER.size
    row_ptr = np.frombuffer(data, "<u8", n + 1, pos)
    pos += 8 * (n + 1)
    col_idx = np.frombuffer(data, "<u4", nnz, pos)
    pos += 4 * nnz
    weights = np.frombuffer(data, "<f4", nnz, pos)
    return SparseGraph(n, row_ptr.astype(np.int64), col_idx.astype(np.int64), weights.astype(np.float64))


def write_stats(stats, path, config=None):
    payload = {"format_version": FORMAT_VERSION, "stats": stats}
    if config is not None:
        payload["config"] = config
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
