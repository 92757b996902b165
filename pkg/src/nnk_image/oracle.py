"""Exact non-negative kernel regression, used to validate the fast construction.

At node ``i`` with candidate neighbors ``S`` the NNK weights solve

    min_{theta >= 0}  || phi_i - Phi_S theta ||^2
        = theta' K_S theta - 2 k_i' theta + K_ii

so only the kernel matrix ``K_S`` among the neighbors and the vector
``k_i`` of kernel values to node ``i`` are needed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import valid_neighbors

ZERO_RTOL = 1e-9


class NumericalDomainError(ArithmeticError):
    """Kernel matrix is not positive semidefinite within tolerance."""


class DegenerateDictionaryError(ValueError):
    """Two atoms of the dictionary coincide (``K_jk >= 1``)."""


@dataclass(frozen=True, eq=False)
class LocalKernelSystem:
    """Gram system of one node: ``K_S`` among neighbors and ``k_i`` to the node."""

    K_S: np.ndarray
    k_i: np.ndarray

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K_S, dtype=np.float64))
        k = np.atleast_1d(np.asarray(self.k_i, dtype=np.float64))
        if K.shape != (k.size, k.size):
            raise ValueError(f"K_S must be {k.size}x{k.size}, got {K.shape}")
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(k))):
            raise ValueError("kernel values must be finite")
        if not np.allclose(K, K.T, rtol=0, atol=1e-12):
            raise ValueError("K_S must be symmetric")
        object.__setattr__(self, "K_S", K)
        object.__setattr__(self, "k_i", k)

    @classmethod
    def from_points(cls, positions, intensities, params, center=0):
        """Bilateral Gram system for node ``center`` against all other points."""
        x = np.asarray(positions, dtype=np.float64).reshape(len(positions), -1)
        f = np.asarray(intensities, dtype=np.float64).reshape(len(intensities), -1)
        d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
        f2 = ((f[:, None, :] - f[None, :, :]) ** 2).sum(-1)
        gram = np.exp(-d2 / (2 * params.sigma_d**2)) * np.exp(-f2 / (2 * params.sigma_f**2))
        rest = np.delete(np.arange(len(x)), center)
        return cls(gram[np.ix_(rest, rest)], gram[center, rest])

    def objective(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return float(theta @ self.K_S @ theta - 2 * self.k_i @ theta + 1.0)


def _solve_passive(K, k, passive):
    idx = np.flatnonzero(passive)
    sub = K[np.ix_(idx, idx)]
    try:
        c = scipy.linalg.cho_factor(sub, check_finite=False)
        z = scipy.linalg.cho_solve(c, k[idx], check_finite=False)
    except np.linalg.LinAlgError:
        if np.linalg.eigvalsh(sub).min() < -1e-10 * max(1.0, np.abs(sub).max()) * len(idx):
            raise NumericalDomainError("kernel matrix is not positive semidefinite") from None
        z = np.linalg.lstsq(sub, k[idx], rcond=None)[0]
    full = np.zeros_like(k)
    full[idx] = z
    return full


def solve_nnk_exact(system, max_iter=None):
    """Exact NNK weights by a Lawson-Hanson active-set method on the Gram form.

    The dual-feasibility test compares each gradient entry against a
    rounding bound of its own terms, so atoms with tiny but positive kernel
    values are still admitted when they genuinely improve the fit.

    Returns
    -------
    theta : ndarray
        Non-negative weights; inactive atoms are exactly zero.

    Raises
    ------
    NumericalDomainError
        If ``K_S`` has an eigenvalue below ``-1e-10 * n * max|K_S|``.
    """
    K, k = system.K_S, system.k_i
    n = k.size
    if n and np.linalg.eigvalsh(K)[0] < -1e-10 * n * max(1.0, np.abs(K).max()):
        raise NumericalDomainError("kernel matrix is not positive semidefinite")
    if max_iter is None:
        max_iter = 3 * n + 10
    eps = np.finfo(np.float64).eps
    absK = np.abs(K)
    theta = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        grad = k - K @ theta
        tol = 10 * eps * n * (np.abs(k) + absK @ theta)
        cand = ~passive & (grad > tol)
        if not cand.any():
            break
        passive[np.flatnonzero(cand)[np.argmax(grad[cand])]] = True
        for _ in range(max_iter):
            z = _solve_passive(K, k, passive)
            if np.all(z[passive] > 0):
                theta = z
                break
            blocking = passive & (z <= 0)
            den = theta[blocking] - z[blocking]
            step = np.min(np.divide(theta[blocking], den, out=np.zeros_like(den), where=den > 0))
            theta = theta + step * (z - theta)
            passive &= theta > eps * np.abs(z).max()
            theta[~passive] = 0.0
            if not passive.any():
                break
    return theta


def support(theta, k_i, rtol=ZERO_RTOL):
    """Boolean support of ``theta``; entries at or below ``rtol * k_i`` count as zero."""
    return np.asarray(theta) > rtol * np.asarray(k_i)


def kkt_residuals(system, theta):
    """``(min theta, min grad, |complementarity|)`` of the NNK quadratic program.

    ``grad = K_S theta - k_i``; at the optimum all three are within rounding
    of ``>= 0``, ``>= 0`` and ``0``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    grad = system.K_S @ theta - system.k_i
    return float(theta.min()), float(grad.min()), float(abs(theta @ grad))


def solve_two_node(Kij, Kik, Kjk):
    """Closed-form NNK weights ``(theta_ij, theta_ik)`` with two candidate neighbors.

    Falls back to the single surviving atom when the interior solution has a
    negative coordinate.
    """
    if Kjk >= 1:
        raise DegenerateDictionaryError(f"K_jk must be < 1, got {Kjk}")
    den = 1.0 - Kjk * Kjk
    tj = (Kij - Kjk * Kik) / den
    tk = (Kik - Kjk * Kij) / den
    if tk < 0:
        return float(Kij), 0.0
    if tj < 0:
        return 0.0, float(Kik)
    return float(tj), float(tk)


def kri_check(Kij, Kik, Kjk):
    """True when ``k`` gets no edge given that ``j`` is connected: ``Kij * Kjk >= Kik``."""
    return Kij * Kjk >= Kik


def exact_nnk_row(img, plan, params, pixel):
    """Exact NNK support and weights of one pixel over its full clipped window.

    Returns ``(offset_indices, theta, system)`` with offsets in plan order.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    neigh = valid_neighbors(plan, pixel, img.shape[:2])
    ks = np.array([k for k, _ in neigh], dtype=np.int64)
    pts = [pixel] + [p for _, p in neigh]
    vals = [img[r, c] for r, c in pts]
    system = LocalKernelSystem.from_points(pts, vals, params, center=0)
    return ks, solve_nnk_exact(system), system


def exact_nnk_states(img, plan, params, pixels=None):
    """Retained-neighbor mask of the exact solver, shaped like ``prune_states``.

    Only the listed ``pixels`` (default: all) are solved; other rows are
    left ``False``.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    keep = np.zeros((h * w, plan.n_offsets), dtype=bool)
    if pixels is None:
        pixels = [(r, c) for r in range(h) for c in range(w)]
    for r, c in pixels:
        ks, theta, system = exact_nnk_row(img, plan, params, (r, c))
        keep[r * w + c, ks] = support(theta, system.k_i)
    return keep
