"""scikit-learn compatible wrappers.

Images play the role of ``X``: graph builders and filters take a single
(H, W) or (H, W, d) array, the wavelet transform takes node signals of a
fitted graph. All hyperparameters live in ``__init__`` so ``get_params``,
``set_params`` and ``clone`` work as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image, check_signal, restore_shape
from .construct import build_nnk_graph
from .kernel import KernelParams, bf_filter, build_bf_graph
from .lattice import precompute_window
from .pipeline import PEAK_8BIT, ThresholdRule, denoise_sgw
from .spectral import (
    DEFAULT_DEGREE,
    DEFAULT_SCALES,
    BandCoefficients,
    build_laplacian,
    design_wavelets,
    estimate_lambda_max,
    sgw_forward,
    sgw_inverse,
)


class _ImageGraphBase(TransformerMixin, BaseEstimator):
    def _params(self):
        return KernelParams.default(self.window_size, self.sigma_d, self.sigma_f)

    def fit(self, X, y=None):
        """Build the graph of image ``X``; stores it as ``graph_``."""
        img = check_image(X, "X")
        self.plan_ = precompute_window(self.window_size)
        self.kernel_params_ = self._params()
        self.graph_ = self._build(img)
        self.image_shape_ = img.shape[:2]
        self.n_features_in_ = img.shape[2]
        return self

    def transform(self, X):
        """Adjacency of the graph of ``X`` as a scipy CSR matrix."""
        check_is_fitted(self, "graph_")
        return self._build(check_image(X, "X")).to_scipy()

    def fit_transform(self, X, y=None):
        return self.fit(X).graph_.to_scipy()


class NNKImageGraph(_ImageGraphBase):
    """Sparse NNK graph of an image, pruned with the lattice KRI rule.

    Parameters
    ----------
    window_size : int, default=11
        Odd side of the candidate window.
    sigma_d : float, optional
        Spatial bandwidth in pixels; ``window_size / 4`` if omitted.
    sigma_f : float, default=30.0
        Intensity bandwidth on the image's native scale.
    symmetrize : {"max", "average"} or None, default="max"
    n_jobs : int, optional
        Threads for the per-pixel pruning loop.

    Attributes
    ----------
    graph_ : SparseGraph
    plan_ : WindowPlan
    kernel_params_ : KernelParams
    """

    def __init__(self, window_size=11, sigma_d=None, sigma_f=30.0, symmetrize="max", n_jobs=None):
        self.window_size = window_size
        self.sigma_d = sigma_d
        self.sigma_f = sigma_f
        self.symmetrize = symmetrize
        self.n_jobs = n_jobs

    def _build(self, img):
        return build_nnk_graph(
            img, precompute_window(self.window_size), self._params(), symmetric=self.symmetrize, n_jobs=self.n_jobs
        )


class BilateralGraph(_ImageGraphBase):
    """Dense window graph with bilateral weights (all ``w*w - 1`` neighbors)."""

    def __init__(self, window_size=11, sigma_d=None, sigma_f=30.0):
        self.window_size = window_size
        self.sigma_d = sigma_d
        self.sigma_f = sigma_f

    def _build(self, img):
        return build_bf_graph(img, precompute_window(self.window_size), self._params())


class BilateralFilter(TransformerMixin, BaseEstimator):
    """Classical bilateral filter ``D^-1 K f``; stateless apart from validation."""

    def __init__(self, window_size=11, sigma_d=None, sigma_f=30.0, include_self=True):
        self.window_size = window_size
        self.sigma_d = sigma_d
        self.sigma_f = sigma_f
        self.include_self = include_self

    def fit(self, X, y=None):
        img = check_image(X, "X")
        self.n_features_in_ = img.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        params = KernelParams.default(self.window_size, self.sigma_d, self.sigma_f)
        return bf_filter(X, precompute_window(self.window_size), params, self.include_self)


class SpectralGraphWavelet(TransformerMixin, BaseEstimator):
    """Spectral graph wavelet transform on a fixed graph.

    ``fit`` takes a symmetric :class:`SparseGraph`; ``transform`` maps a
    node signal of length ``n`` to an ``(n_bands, n)`` coefficient array and
    ``inverse_transform`` solves the least-squares synthesis.
    """

    def __init__(self, num_scales=DEFAULT_SCALES, cheby_degree=DEFAULT_DEGREE, lambda_max=None):
        self.num_scales = num_scales
        self.cheby_degree = cheby_degree
        self.lambda_max = lambda_max

    def fit(self, X, y=None):
        self.laplacian_ = build_laplacian(X)
        self.lambda_max_ = estimate_lambda_max(self.laplacian_) if self.lambda_max is None else float(self.lambda_max)
        self.design_ = design_wavelets(self.lambda_max_, self.num_scales, self.cheby_degree)
        self.n_features_in_ = self.laplacian_.n
        return self

    def transform(self, X):
        check_is_fitted(self, "design_")
        f = check_signal(np.ravel(X), self.n_features_in_)
        return sgw_forward(self.laplacian_, self.design_, f).bands

    def inverse_transform(self, X):
        check_is_fitted(self, "design_")
        bands = np.asarray(X, dtype=np.float64)
        coeffs = BandCoefficients(bands, self.design_.scales, self.lambda_max_, self.cheby_degree)
        return sgw_inverse(self.laplacian_, self.design_, coeffs)


class SGWDenoiser(TransformerMixin, BaseEstimator):
    """Graph-wavelet denoiser: graph from the noisy image, per-band shrinkage.

    Parameters
    ----------
    method : {"nnk", "bf"}, default="nnk"
    window_size : int, default=11
    sigma_d, sigma_f : float
        Bilateral bandwidths; ``sigma_d`` defaults to ``window_size / 4``.
    num_scales : int, default=6
    cheby_degree : int, default=30
    threshold_mode : {"soft", "hard"}, default="soft"
    threshold_k : float, default=3.0
        Multiplier on the per-band MAD noise estimate.
    peak : float, default=255.0
    presmooth : bool, default=False
        Build the graph on a bilateral-filtered guide instead of the input.

    Attributes
    ----------
    report_ : DenoiseReport
        Report of the last ``transform`` call.
    """

    def __init__(
        self,
        method="nnk",
        window_size=11,
        sigma_d=None,
        sigma_f=30.0,
        num_scales=DEFAULT_SCALES,
        cheby_degree=DEFAULT_DEGREE,
        threshold_mode="soft",
        threshold_k=3.0,
        peak=PEAK_8BIT,
        presmooth=False,
        n_jobs=None,
    ):
        self.method = method
        self.window_size = window_size
        self.sigma_d = sigma_d
        self.sigma_f = sigma_f
        self.num_scales = num_scales
        self.cheby_degree = cheby_degree
        self.threshold_mode = threshold_mode
        self.threshold_k = threshold_k
        self.peak = peak
        self.presmooth = presmooth
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        img = check_image(X, "X")
        if img.shape[2] != 1:
            raise ValueError("SGWDenoiser expects a grayscale image")
        precompute_window(self.window_size)
        ThresholdRule(self.threshold_mode, self.threshold_k)
        self.n_features_in_ = 1
        return self

    def transform(self, X, reference=None):
        check_is_fitted(self, "n_features_in_")
        out, self.report_ = denoise_sgw(
            X,
            method=self.method,
            window_size=self.window_size,
            params=KernelParams.default(self.window_size, self.sigma_d, self.sigma_f),
            num_scales=self.num_scales,
            cheby_degree=self.cheby_degree,
            rule=ThresholdRule(self.threshold_mode, self.threshold_k),
            peak=self.peak,
            presmooth=self.presmooth,
            reference=reference,
            n_jobs=self.n_jobs,
        )
        return restore_shape(out[:, :, None], X)
