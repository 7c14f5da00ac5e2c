"""Neighborhood component analysis feature weighting.

Gradient ascent on the regularized leave-one-out objective

    f(w) = mean_i p_i - lambda * sum_r w_r^2

where p_i is the probability that sample i is matched to a same-class
neighbor under a softmax over exp(-d_w / kernel_width) with the weighted
L1 distance d_w(x_i, x_j) = sum_r w_r^2 |x_ir - x_jr|.  The squared-weight
parameterization keeps effective weights non-negative; redundant features
are driven toward zero by the L2 penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class SingleClass(ValueError):
    pass


class NonFiniteObjective(RuntimeError):
    pass


@dataclass
class NcaModel:
    weights: np.ndarray  # non-negative effective weight magnitudes, one per feature
    lam: float
    kernel_width: float
    loo_probs: np.ndarray  # per-sample p_i at the final iterate
    objective_trace: list  # accepted f(w) values, non-decreasing
    n_iterations: int


def _pairwise_abs_diff(X: np.ndarray) -> np.ndarray:
    return np.abs(X[:, None, :] - X[None, :, :])


def objective_and_gradient(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    lam: float,
    kernel_width: float,
    diffs: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """f(w), its gradient in the weight parameters, and the p_i vector."""
    n = X.shape[0]
    if diffs is None:
        diffs = _pairwise_abs_diff(X)
    dist = diffs @ (w * w)
    kernel = np.exp(-dist / kernel_width)
    np.fill_diagonal(kernel, 0.0)
    same = (y[:, None] == y[None, :]).astype(np.float64)
    np.fill_diagonal(same, 0.0)

    denom = kernel.sum(axis=1)
    safe = np.where(denom > 0, denom, 1.0)
    p = (kernel * same).sum(axis=1) / safe

    # d p_i / d w_r = (2 w_r / width) * (p_i * sum_j kbar_ij D_ijr
    #                                    - sum_{j same} kbar_ij D_ijr)
    kbar = kernel / safe[:, None]
    all_term = np.einsum("ij,ijr->ir", kbar, diffs)
    same_term = np.einsum("ij,ijr->ir", kbar * same, diffs)
    dp = (2.0 * w / kernel_width) * (p[:, None] * all_term - same_term)

    f = float(p.mean() - lam * np.sum(w * w))
    grad = dp.mean(axis=0) - 2.0 * lam * w
    if not np.isfinite(f) or not np.all(np.isfinite(grad)):
        raise NonFiniteObjective("objective or gradient is not finite")
    return f, grad, p


def nca_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: Optional[float] = None,
    kernel_width: float = 1.0,
    max_iters: int = 200,
    init_step: float = 1.0,
    tol: float = 1e-7,
) -> NcaModel:
    """Maximize the LOO objective by gradient ascent with backtracking.

    ``X`` should already be standardized per feature (the default kernel
    width of 1 assumes unit-scale distances).  ``lam`` defaults to 1/N.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n, n_features = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if np.unique(y).size < 2:
        raise SingleClass("NCA requires at least 2 classes")
    if lam is None:
        lam = 1.0 / n

    diffs = _pairwise_abs_diff(X)
    w = np.ones(n_features)
    f, grad, p = objective_and_gradient(X, y, w, lam, kernel_width, diffs)
    trace = [f]
    iterations = 0
    for iterations in range(1, max_iters + 1):
        step = init_step
        accepted = False
        for _ in range(40):
            w_new = w + step * grad
            f_new, grad_new, p_new = objective_and_gradient(
                X, y, w_new, lam, kernel_width, diffs
            )
            if f_new >= f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        improvement = f_new - f
        w, f, grad, p = w_new, f_new, grad_new, p_new
        trace.append(f)
        if improvement < tol * max(abs(f), 1.0):
            break
    return NcaModel(
        weights=np.abs(w),
        lam=lam,
        kernel_width=kernel_width,
        loo_probs=p,
        objective_trace=trace,
        n_iterations=iterations,
    )


def select_features(model: NcaModel, threshold_frac: float = 0.15) -> np.ndarray:
    """Indices whose weight reaches threshold_frac of the top weight.

    Never empty: the top-weighted feature always survives.
    """
    if not 0 < threshold_frac < 1:
        raise ValueError("threshold_frac must be in (0, 1)")
    w = model.weights
    keep = np.flatnonzero(w >= threshold_frac * w.max())
    if keep.size == 0:
        keep = np.array([int(np.argmax(w))])
    return keep
