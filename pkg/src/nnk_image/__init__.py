"""Sparse NNK graphs for images and spectral graph wavelet experiments."""

__version__ = "0.1.0"

from .construct import build_nnk_graph, prune_test
from .estimators import BilateralFilter, BilateralGraph, NNKImageGraph, SGWDenoiser, SpectralGraphWavelet
from .graph import SparseGraph, graph_stats, load_graph, save_graph, symmetrize
from .kernel import KernelParams, bf_filter, bilateral_weight, build_bf_graph
from .lattice import WindowPlan, precompute_window, valid_neighbors
from .oracle import LocalKernelSystem, kri_check, solve_nnk_exact, solve_two_node
from .pipeline import NoiseSpec, ThresholdRule, add_noise, denoise_sgw, energy_compaction, psnr, ssim
from .spectral import (
    BandCoefficients,
    WaveletDesign,
    build_laplacian,
    cheby_coefficients,
    design_wavelets,
    estimate_lambda_max,
    sgw_forward,
    sgw_inverse,
)

__all__ = [
    "BandCoefficients",
    "BilateralFilter",
    "BilateralGraph",
    "KernelParams",
    "LocalKernelSystem",
    "NNKImageGraph",
    "NoiseSpec",
    "SGWDenoiser",
    "SparseGraph",
    "SpectralGraphWavelet",
    "ThresholdRule",
    "WaveletDesign",
    "WindowPlan",
    "add_noise",
    "bf_filter",
    "bilateral_weight",
    "build_bf_graph",
    "build_laplacian",
    "build_nnk_graph",
    "cheby_coefficients",
    "denoise_sgw",
    "design_wavelets",
    "energy_compaction",
    "estimate_lambda_max",
    "graph_stats",
    "kri_check",
    "load_graph",
    "precompute_window",
    "prune_test",
    "psnr",
    "save_graph",
    "sgw_forward",
    "sgw_inverse",
    "solve_nnk_exact",
    "solve_two_node",
    "ssim",
    "symmetrize",
    "valid_neighbors",
]
