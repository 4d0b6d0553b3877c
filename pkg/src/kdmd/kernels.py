"""Positive-definite kernel functions and Gram-matrix assembly.

Every inner product used by the decomposition is realized through these
kernel evaluations, so this module is deliberately small and heavily
checked: symmetric by construction, and exact (not merely approximate)
agreement between the scalar and matrix evaluation paths is a test target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "gaussian_rbf",
    "exp_dot_product",
    "polynomial",
    "linear",
    "eval_kernel",
    "gram",
]

_KINDS = ("gaussian_rbf", "exp_dot_product", "polynomial", "linear")

# Upper bound on elements of the (block, q, n) difference tensor used by the
# squared-distance path; keeps peak temporary memory near 32 MB.
_BLOCK_ELEMENTS = 4_194_304


@dataclass(frozen=True)
class KernelSpec:
    """Which positive-definite kernel to use, plus its hyperparameters.

    Parameters
    ----------
    kind : str
        One of ``gaussian_rbf``, ``exp_dot_product``, ``polynomial``,
        ``linear``.
    mu : float
        Width/scale for the exponential kernels: ``gaussian_rbf`` is
        ``exp(-||x-y||^2 / mu)`` and ``exp_dot_product`` is
        ``exp(x.T y / mu)``.  Note the squared distance is divided by ``mu``
        directly, so ``mu=2`` recovers the classic ``exp(-||x-y||^2 / 2)``
        form.  Ignored by the other kinds.
    degree : int
        Degree of the polynomial kernel ``(x.T y + offset) ** degree``.
        Ignored by the other kinds.
    offset : float
        Nonnegative offset of the polynomial kernel.  Ignored by the other
        kinds.
    """

    kind: str
    mu: float = 1.0
    degree: int = 1
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {_KINDS}")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be a positive finite real, got {self.mu!r}")
        if not (isinstance(self.degree, (int, np.integer)) and self.degree >= 1):
            raise ValueError(f"degree must be a positive integer, got {self.degree!r}")
        if not (np.isfinite(self.offset) and self.offset >= 0):
            raise ValueError(f"offset must be a nonnegative finite real, got {self.offset!r}")


def gaussian_rbf(mu: float) -> KernelSpec:
    """Gaussian RBF kernel ``exp(-||x-y||^2 / mu)``."""
    return KernelSpec(kind="gaussian_rbf", mu=float(mu))


def exp_dot_product(mu: float) -> KernelSpec:
    """Exponential dot-product kernel ``exp(x.T y / mu)``."""
    return KernelSpec(kind="exp_dot_product", mu=float(mu))


def polynomial(degree: int, offset: float = 0.0) -> KernelSpec:
    """Polynomial kernel ``(x.T y + offset) ** degree``."""
    return KernelSpec(kind="polynomial", degree=int(degree), offset=float(offset))


def linear() -> KernelSpec:
    """Linear kernel ``x.T y``."""
    return KernelSpec(kind="linear")


def _as_points(arr, name: str) -> np.ndarray:
    """Coerce a list of vectors (or a points-as-rows matrix) to float64 (p, n)."""
    pts = np.asarray(arr, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise ValueError(f"{name} must be a list of vectors, got ndim={pts.ndim}")
    if pts.shape[0] == 0 or pts.shape[1] == 0:
        raise ValueError(f"{name} must contain at least one nonempty vector")
    if not np.isfinite(pts).all():
        raise ValueError(f"{name} contains non-finite entries")
    return pts


def eval_kernel(kernel: KernelSpec, x, y) -> float:
    """Evaluate ``K(x, y)`` for a single pair of points.

    Parameters
    ----------
    kernel : KernelSpec
    x, y : array_like, shape (n,)
        Finite vectors of the same dimension.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        On dimension mismatch or non-finite input.
    """
    xv = np.asarray(x, dtype=float).reshape(-1)
    yv = np.asarray(y, dtype=float).reshape(-1)
    if xv.size == 0 or yv.size == 0:
        raise ValueError("kernel arguments must be nonempty vectors")
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: x has {xv.size} components, y has {yv.size}")
    if not (np.isfinite(xv).all() and np.isfinite(yv).all()):
        raise ValueError("kernel arguments must be finite")

    if kernel.kind == "gaussian_rbf":
        d = xv - yv
        return float(np.exp(-(d * d).sum() / kernel.mu))
    if kernel.kind == "exp_dot_product":
        return float(np.exp(xv @ yv / kernel.mu))
    if kernel.kind == "polynomial":
        return float((xv @ yv + kernel.offset) ** kernel.degree)
    return float(xv @ yv)


def gram(kernel: KernelSpec, rows, cols) -> np.ndarray:
    """Assemble the kernel matrix ``[K(rows[i], cols[j])]``.

    Each entry is computed independently (no cross-entry reductions), so the
    result does not depend on internal chunking, and ``gram(k, P, P)`` is
    exactly symmetric.  For ``rows == cols`` the result is positive
    semidefinite up to roundoff.

    Parameters
    ----------
    kernel : KernelSpec
    rows, cols : array_like, shape (p, n) and (q, n)
        Point sets, one point per row (a list of vectors is accepted).

    Returns
    -------
    numpy.ndarray, shape (p, q)

    Raises
    ------
    ValueError
        On empty input, dimension mismatch, or non-finite entries.
    """
    R = _as_points(rows, "rows")
    C = _as_points(cols, "cols")
    if R.shape[1] != C.shape[1]:
        raise ValueError(
            f"dimension mismatch: rows have {R.shape[1]} components, cols have {C.shape[1]}"
        )

    if kernel.kind == "gaussian_rbf":
        return np.exp(-_sqdist(R, C) / kernel.mu)
    if kernel.kind == "exp_dot_product":
        return np.exp(R @ C.T / kernel.mu)
    if kernel.kind == "polynomial":
        return (R @ C.T + kernel.offset) ** kernel.degree
    return R @ C.T


def _sqdist(R: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (p, q).

    Computed from explicit differences, never the dot-product expansion:
    the direct form cannot go negative and is symmetric in exact arithmetic.
    Rows are processed in blocks to bound temporary memory; blocking does
    not change any entry's arithmetic.
    """
    p, n = R.shape
    q = C.shape[0]
    out = np.empty((p, q))
    block = max(1, _BLOCK_ELEMENTS // max(1, q * n))
    for start in range(0, p, block):
        stop = min(start + block, p)
        diff = R[start:stop, None, :] - C[None, :, :]
        out[start:stop] = np.einsum("bqn,bqn->bq", diff, diff)
    return out
