"""Vector-valued RKHS functions built on a diagonal Gaussian kernel.

A function ``h`` is stored as a dictionary of state centers ``s_j`` and
action-space weights ``w_j``::

    h(s) = sum_j kappa(s_j, s) w_j

The matrix-valued kernel is ``kappa(x, y) * I_p``, so every action coordinate
shares the same scalar gram matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """Diagonal Gaussian kernel ``exp(-0.5 * sum_i (x_i - y_i)**2 / b_i)``.

    Parameters
    ----------
    bandwidths
        Per-coordinate squared length-scales ``b_i``; all must be positive.
    """

    bandwidths: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in np.atleast_1d(np.asarray(self.bandwidths, dtype=float)))
        if len(b) == 0:
            raise ValueError("bandwidths must be non-empty")
        if not all(np.isfinite(v) and v > 0 for v in b):
            raise ValueError(f"bandwidths must be finite and positive, got {b}")
        object.__setattr__(self, "bandwidths", b)
        object.__setattr__(self, "_inv", _frozen(1.0 / np.asarray(b)))

    @property
    def n(self) -> int:
        return len(self.bandwidths)

    def __call__(self, X, Y=None) -> np.ndarray:
        """Kernel matrix between the rows of ``X`` and ``Y``."""
        X = self._rows(X)
        Y = X if Y is None else self._rows(Y)
        diff = X[:, None, :] - Y[None, :, :]
        return np.exp(-0.5 * np.einsum("ijk,ijk,k->ij", diff, diff, self._inv))

    def _rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and X.shape[0] == 0:
            X = X.reshape(0, self.n)
        X = np.atleast_2d(X)
        if X.shape[-1] != self.n:
            raise ValueError(f"expected state dimension {self.n}, got {X.shape[-1]}")
        return X


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Scalar kernel value ``kappa(x, y)`` in ``(0, 1]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (spec.n,) or y.shape != (spec.n,):
        raise ValueError(f"expected state vectors of length {spec.n}, got {x.shape} and {y.shape}")
    d = x - y
    return float(np.exp(-0.5 * np.sum(d * d * spec._inv)))


def gram_matrix(spec: KernelSpec, D1, D2) -> np.ndarray:
    """Matrix with entries ``kappa(D1[l], D2[m])``."""
    return spec(D1, D2)


@dataclass(frozen=True, eq=False)
class RkhsFunction:
    """Kernel expansion ``h(s) = sum_j kappa(centers[j], s) weights[j]``.

    Instances are immutable; every operation returns a new function.
    """

    kernel: KernelSpec
    centers: np.ndarray
    weights: np.ndarray
    p: int = field(default=-1)

    def __post_init__(self):
        n = self.kernel.n
        c = np.asarray(self.centers, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        p = self.p
        if p < 0:
            if w.ndim == 2:
                p = w.shape[1]
            elif w.size:
                raise ValueError("weights must be an (M, p) array")
            else:
                raise ValueError("p must be given for an empty function")
        c = c.reshape(-1, n) if c.size else np.zeros((0, n))
        w = w.reshape(-1, p) if w.size else np.zeros((0, p))
        if c.shape[0] != w.shape[0]:
            raise ValueError(f"{c.shape[0]} centers but {w.shape[0]} weights")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(w))):
            raise ValueError("centers and weights must be finite")
        object.__setattr__(self, "centers", _frozen(c))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "p", int(p))

    @classmethod
    def zero(cls, kernel: KernelSpec, p: int) -> "RkhsFunction":
        return cls(kernel, np.zeros((0, kernel.n)), np.zeros((0, p)), p)

    @property
    def n(self) -> int:
        return self.kernel.n

    @property
    def M(self) -> int:
        return self.centers.shape[0]

    def __len__(self) -> int:
        return self.M

    def __call__(self, s) -> np.ndarray:
        return evaluate(self, s)

    def evaluate_many(self, S) -> np.ndarray:
        """Evaluate at every row of ``S``; returns a ``(len(S), p)`` array."""
        S = self.kernel._rows(S)
        if self.M == 0:
            return np.zeros((S.shape[0], self.p))
        return self.kernel(S, self.centers) @ self.weights

    def scaled(self, alpha: float) -> "RkhsFunction":
        return RkhsFunction(self.kernel, self.centers, alpha * self.weights, self.p)

    def __neg__(self) -> "RkhsFunction":
        return self.scaled(-1.0)

    def __add__(self, other: "RkhsFunction") -> "RkhsFunction":
        _check_compatible(self, other)
        return RkhsFunction(
            self.kernel,
            np.vstack([self.centers, other.centers]),
            np.vstack([self.weights, other.weights]),
            self.p,
        )

    def __sub__(self, other: "RkhsFunction") -> "RkhsFunction":
        return self + (-other)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "bandwidths": list(self.kernel.bandwidths),
            "centers": self.centers.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RkhsFunction":
        kernel = KernelSpec(tuple(doc["bandwidths"]))
        if kernel.n != int(doc["n"]):
            raise ValueError("bandwidth count does not match n")
        p = int(doc["p"])
        centers = np.array(doc["centers"], dtype=float).reshape(-1, kernel.n)
        weights = np.array(doc["weights"], dtype=float).reshape(-1, p)
        return cls(kernel, centers, weights, p)


def _check_compatible(h1: RkhsFunction, h2: RkhsFunction) -> None:
    if h1.kernel != h2.kernel:
        raise ValueError("functions use different kernels")
    if h1.p != h2.p:
        raise ValueError(f"action dimensions differ: {h1.p} vs {h2.p}")


def evaluate(h: RkhsFunction, s) -> np.ndarray:
    """Point evaluation ``h(s)`` through the reproducing property."""
    s = np.asarray(s, dtype=float)
    if s.shape != (h.n,):
        raise ValueError(f"expected state of length {h.n}, got shape {s.shape}")
    if h.M == 0:
        return np.zeros(h.p)
    d = h.centers - s
    k = np.exp(-0.5 * (d * d) @ h.kernel._inv)
    return k @ h.weights


def inner_product(h1: RkhsFunction, h2: RkhsFunction) -> float:
    """Hilbert inner product ``sum_{j,l} kappa(s_j, s'_l) <w_j, w'_l>``."""
    _check_compatible(h1, h2)
    if h1.M == 0 or h2.M == 0:
        return 0.0
    K = h1.kernel(h1.centers, h2.centers)
    return float(np.sum(K * (h1.weights @ h2.weights.T)))


def quadratic_norm_sq(K: np.ndarray, W: np.ndarray) -> float:
    """``sum_c W[:, c]^T K W[:, c]`` with the clamping rule for roundoff."""
    M = W.shape[0]
    if M == 0:
        return 0.0
    val = float(np.sum(W * (K @ W)))
    if val < 0.0:
        if val < -1e-9 * M:
            raise ArithmeticError(f"squared Hilbert norm is negative beyond roundoff: {val}")
        return 0.0
    return val


def hilbert_norm_sq(h: RkhsFunction) -> float:
    """Squared norm, with bitwise-identical centers merged first.

    Merging is exact (the function is unchanged) and keeps differences such as
    ``h - h`` or ``pruned - h`` from losing half their digits to cancellation
    in the quadratic form.
    """
    if h.M == 0:
        return 0.0
    centers, inverse = np.unique(h.centers, axis=0, return_inverse=True)
    W = np.zeros((centers.shape[0], h.p))
    np.add.at(W, inverse.reshape(-1), h.weights)
    return quadratic_norm_sq(h.kernel(centers), W)


def hilbert_norm(h: RkhsFunction) -> float:
    return float(np.sqrt(hilbert_norm_sq(h)))


def add_scaled_kernel(h: RkhsFunction, center, coeff) -> RkhsFunction:
    """Return ``h + kappa(center, .) coeff`` with one more dictionary element."""
    center = np.asarray(center, dtype=float)
    coeff = np.asarray(coeff, dtype=float)
    if center.shape != (h.n,):
        raise ValueError(f"center must have length {h.n}, got shape {center.shape}")
    if coeff.shape != (h.p,):
        raise ValueError(f"coeff must have length {h.p}, got shape {coeff.shape}")
    return RkhsFunction(
        h.kernel,
        np.vstack([h.centers, center[None, :]]),
        np.vstack([h.weights, coeff[None, :]]),
        h.p,
    )
