"""Destructive kernel orthogonal matching pursuit.

Given a reference function ``h_ref = sum_j w_j kappa(s_j, .)`` and a budget
``epsilon``, greedily delete the dictionary element whose removal (followed
by a least-squares refit of the remaining weights against ``h_ref``) costs the
least, while the Hilbert-norm error stays within ``epsilon``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import RkhsFunction, quadratic_norm_sq

# eigenvalues below this fraction of the largest are treated as zero
PINV_RTOL = 1e-10
# leave-one-out shortcut is used only for gram matrices better conditioned than this
FAST_PATH_MAX_COND = 1e8


@dataclass(frozen=True, eq=False)
class PruneResult:
    pruned: RkhsFunction
    final_error: float
    removed: int
    removal_order: list[int] = field(default_factory=list)


def pinv_solve(K: np.ndarray, B: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Minimum-norm solution of ``K X = B`` for symmetric PSD ``K``."""
    if K.shape[0] == 0:
        return np.zeros((0,) + B.shape[1:])
    vals, vecs = np.linalg.eigh(K)
    keep = vals > rtol * max(vals[-1], 0.0)
    if not keep.any():
        return np.zeros((K.shape[0],) + B.shape[1:])
    V = vecs[:, keep]
    return V @ ((V.T @ B) / vals[keep][:, None])


def _refit(K_full: np.ndarray, W_ref: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Least-squares weights on the ``keep`` subset approximating the reference."""
    return pinv_solve(K_full[np.ix_(keep, keep)], K_full[keep] @ W_ref)


def _residual_error(K_full: np.ndarray, W_ref: np.ndarray, keep: np.ndarray, W_keep: np.ndarray) -> float:
    R = W_ref.copy()
    R[keep] -= W_keep
    return quadratic_norm_sq(K_full, R)


def leave_one_out_error(reference: RkhsFunction, j: int):
    """Squared error of dropping element ``j`` and refitting the rest.

    Returns ``(error_sq, refit_weights)`` where ``refit_weights`` holds one row
    per retained center, in their original order.
    """
    M = reference.M
    if not 0 <= j < M:
        raise IndexError(f"index {j} out of range for {M} dictionary elements")
    K = reference.kernel(reference.centers)
    keep = np.delete(np.arange(M), j)
    W = _refit(K, reference.weights, keep)
    return _residual_error(K, reference.weights, keep, W), W


def _round_errors(K_full, W_ref, keep, W_keep, base_err):
    """Leave-one-out errors for every element currently in ``keep``.

    The current weights are the projection of the reference onto
    ``span(keep)``, so by Pythagoras dropping element ``i`` costs
    ``base_err + |W_keep[i]|**2 / inv(K)[i, i]`` when the gram matrix is
    invertible.
    """
    m = keep.size
    K = K_full[np.ix_(keep, keep)]
    vals, vecs = np.linalg.eigh(K)
    if vals[0] > vals[-1] / FAST_PATH_MAX_COND:
        Kinv_diag = np.einsum("ij,j,ij->i", vecs, 1.0 / vals, vecs)
        return base_err + np.sum(W_keep**2, axis=1) / Kinv_diag
    errs = np.empty(m)
    for i in range(m):
        sub = np.delete(keep, i)
        errs[i] = _residual_error(K_full, W_ref, sub, _refit(K_full, W_ref, sub))
    return errs


def komp(reference: RkhsFunction, epsilon: float) -> PruneResult:
    """Prune ``reference`` while ``||pruned - reference||_H <= epsilon``."""
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    M = reference.M
    if M == 0:
        return PruneResult(reference, 0.0, 0, [])
    K_full = reference.kernel(reference.centers)
    W_ref = reference.weights
    scale = max(np.sqrt(quadratic_norm_sq(K_full, W_ref)), float(np.max(np.abs(W_ref))))
    # roundoff allowance so exact redundancies are still removed at epsilon = 0
    slack = min(64 * np.finfo(float).eps * scale, 1e-9)
    budget_sq = (epsilon + slack) ** 2

    keep = np.arange(M)
    W = W_ref.copy()
    err = 0.0
    order: list[int] = []
    while keep.size:
        errs = _round_errors(K_full, W_ref, keep, W, err)
        i = int(np.argmin(errs))
        if errs[i] > budget_sq:
            break
        sub = np.delete(keep, i)
        W_sub = _refit(K_full, W_ref, sub)
        new_err = _residual_error(K_full, W_ref, sub, W_sub)
        if new_err > budget_sq:
            break
        order.append(int(keep[i]))
        keep, W, err = sub, W_sub, new_err

    pruned = RkhsFunction(reference.kernel, reference.centers[keep], W, reference.p)
    return PruneResult(pruned, float(np.sqrt(err)), M - keep.size, order)
