"""Finite-rank Koopman approximation from snapshot pairs.

Given pairs (x_i, y_i) with y_i = F(x_i), the kernel sections K(., x_i) span
a finite subspace of the RKHS; the compression of the Koopman composition
operator onto that subspace has matrix ``rep = G^{-1} A`` with
``G[i, l] = K(x_i, x_l)`` and ``A[i, j] = K(y_i, x_j)``.  Its eigensystem
yields approximate Koopman eigenvalues, eigenfunctions

    phi_j(x) = sum_i (v_j)_i K(x, x_i),     v_j^H G v_j = 1,

and modes ``xi = X (V^T G)^{-1}`` that interpolate the identity observable:
``x_i = sum_j xi[:, j] * phi_j(x_i)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, gram
from .numerics import (
    DEFAULT_POLICY,
    RegularizationPolicy,
    SingularMatrixError,
    eig_general,
    solve_gram,
    solve_square,
)

__all__ = [
    "SnapshotSet",
    "KoopmanModel",
    "fit",
    "eigenfunction_values",
    "modes",
    "DuplicateCenterWarning",
    "NearDefectiveWarning",
]


class DuplicateCenterWarning(UserWarning):
    """Duplicate snapshot states were dropped from the center set."""


class NearDefectiveWarning(UserWarning):
    """The eigenvector matrix is nearly singular (near-defective spectrum)."""


def _locked(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SnapshotSet:
    """Snapshot data, states as columns.

    With only ``x`` given the data is a time series and the pairs are
    ``(x_i, x_{i+1})`` for ``i = 1..m-1``.  With ``y`` given the pairs are
    ``(x_i, y_i)`` in arbitrary order, ``y_i = F(x_i)``.
    """

    x: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.array(self.x, dtype=float))
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"x must be a nonempty n-by-m matrix, got shape {np.shape(self.x)}")
        if not np.isfinite(x).all():
            raise ValueError("x contains non-finite entries")
        object.__setattr__(self, "x", _locked(x))
        if self.y is None:
            if x.shape[1] < 2:
                raise ValueError("a time series needs at least 2 snapshots to form a pair")
        else:
            y = np.atleast_2d(np.array(self.y, dtype=float))
            if y.shape != x.shape:
                raise ValueError(f"y shape {y.shape} does not match x shape {x.shape}")
            if not np.isfinite(y).all():
                raise ValueError("y contains non-finite entries")
            object.__setattr__(self, "y", _locked(y))

    @property
    def state_dim(self) -> int:
        return self.x.shape[0]

    @property
    def snapshot_count(self) -> int:
        return self.x.shape[1]

    @property
    def is_timeseries(self) -> bool:
        return self.y is None

    @property
    def num_pairs(self) -> int:
        return self.x.shape[1] - 1 if self.y is None else self.x.shape[1]

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Paired data matrices ``(X, Y)``, one pair per column."""
        if self.y is None:
            return self.x[:, :-1], self.x[:, 1:]
        return self.x, self.y


@dataclass(frozen=True)
class KoopmanModel:
    """Fitted finite-rank Koopman approximation.

    ``centers`` are the pair-domain states (columns); ``gram`` their kernel
    Gram matrix; ``rep`` the operator matrix with ``gram @ rep ~= A``;
    ``lambdas``/``eigvecs`` its eigensystem with columns normalized to
    ``v^H G v = 1``; ``modes`` the state-reconstruction coefficients
    ``X (V^T G)^{-1}``; ``first_center`` the reconstruction anchor.
    """

    kernel: KernelSpec
    centers: np.ndarray
    gram: np.ndarray
    rep: np.ndarray
    lambdas: np.ndarray
    eigvecs: np.ndarray
    modes: np.ndarray
    policy: RegularizationPolicy
    first_center: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n, p = np.shape(self.centers)
        shapes = {
            "centers": (np.asarray(self.centers, dtype=float), (n, p)),
            "gram": (np.asarray(self.gram, dtype=float), (p, p)),
            "rep": (np.asarray(self.rep, dtype=float), (p, p)),
            "lambdas": (np.asarray(self.lambdas, dtype=complex), (p,)),
            "eigvecs": (np.asarray(self.eigvecs, dtype=complex), (p, p)),
            "modes": (np.asarray(self.modes, dtype=complex), (n, p)),
            "first_center": (np.asarray(self.first_center, dtype=float), (n,)),
        }
        for name, (arr, want) in shapes.items():
            if arr.shape != want:
                raise ValueError(f"{name} has shape {arr.shape}, expected {want}")
            object.__setattr__(self, name, _locked(arr.copy()))

    @property
    def state_dim(self) -> int:
        return self.centers.shape[0]

    @property
    def num_modes(self) -> int:
        return self.centers.shape[1]


def _distinct_pairs(snapshots: SnapshotSet) -> tuple[np.ndarray, np.ndarray]:
    """Paired data with duplicate centers dropped (exact equality).

    Keeps the first occurrence of each center; a duplicate center would make
    the Gram matrix exactly singular.
    """
    X, Y = snapshots.pairs()
    seen: dict[bytes, int] = {}
    keep: list[int] = []
    for i in range(X.shape[1]):
        key = (X[:, i] + 0.0).tobytes()  # +0.0 folds -0.0 into 0.0
        if key in seen:
            continue
        seen[key] = i
        keep.append(i)
    dropped = X.shape[1] - len(keep)
    if dropped:
        warnings.warn(
            f"dropped {dropped} duplicate center(s) out of {X.shape[1]} pairs",
            DuplicateCenterWarning,
            stacklevel=3,
        )
        X, Y = X[:, keep], Y[:, keep]
    if X.shape[1] < 2:
        raise ValueError(f"need at least 2 distinct centers, got {X.shape[1]}")
    return X, Y


def _gram_normalize(V: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Scale eigenvector columns to ``v^H G v = 1``."""
    s = np.einsum("ij,ik,kj->j", V.conj(), G, V).real
    if np.min(s) <= 0.0:
        raise SingularMatrixError(
            "an eigenvector has nonpositive Gram norm; "
            "the Gram matrix is numerically rank-deficient"
        )
    return V / np.sqrt(s)


def _mode_matrix(
    centers: np.ndarray,
    G: np.ndarray,
    V: np.ndarray,
    policy: RegularizationPolicy,
) -> np.ndarray:
    """Solve ``xi (V^T G) = X`` for the mode matrix (plain transpose)."""
    M = V.T @ G
    return solve_square(M.transpose(), centers.T, policy).T


def _symmetrize_conjugate_columns(lambdas: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Make columns at real eigenvalues real and conjugate-pair columns
    exactly conjugate (they are so mathematically; solves leave noise)."""
    out = cols.copy()
    done = np.zeros(lambdas.size, dtype=bool)
    for a in range(lambdas.size):
        if done[a]:
            continue
        if lambdas[a].imag == 0.0:
            out[:, a] = out[:, a].real
            done[a] = True
            continue
        for b in range(a + 1, lambdas.size):
            if not done[b] and lambdas[b] == np.conj(lambdas[a]):
                avg = 0.5 * (out[:, a] + np.conj(out[:, b]))
                out[:, a] = avg
                out[:, b] = np.conj(avg)
                done[a] = done[b] = True
                break
        else:
            done[a] = True  # unpaired non-real eigenvalue: leave as computed
    return out


def _assemble_model(
    kernel: KernelSpec,
    X: np.ndarray,
    G: np.ndarray,
    rep: np.ndarray,
    modes_matrix: np.ndarray,
    lambdas: np.ndarray,
    V: np.ndarray,
    policy: RegularizationPolicy,
) -> KoopmanModel:
    return KoopmanModel(
        kernel=kernel,
        centers=X,
        gram=G,
        rep=rep,
        lambdas=lambdas,
        eigvecs=V,
        modes=modes_matrix,
        policy=policy,
        first_center=X[:, 0],
    )


def fit(
    snapshots: SnapshotSet,
    kernel: KernelSpec,
    policy: RegularizationPolicy = DEFAULT_POLICY,
) -> KoopmanModel:
    """Fit the finite-rank Koopman approximation to snapshot pairs.

    Parameters
    ----------
    snapshots : SnapshotSet
    kernel : KernelSpec
    policy : RegularizationPolicy
        Stabilization for the Gram solve; the default adds a tiny relative
        ridge.

    Returns
    -------
    KoopmanModel

    Raises
    ------
    ValueError
        Fewer than 2 distinct centers after duplicate removal.
    SingularMatrixError
        Numerically singular Gram matrix under ``kind="none"``.

    Warns
    -----
    DuplicateCenterWarning
        When duplicate centers are dropped.
    NearDefectiveWarning
        When the eigenvector matrix has condition number above 1e12
        (nearly non-diagonalizable representation); results are still
        returned but modes are unreliable.
    """
    X, Y = _distinct_pairs(snapshots)
    G = gram(kernel, X.T, X.T)
    A = gram(kernel, Y.T, X.T)
    rep = solve_gram(G, A, policy)
    lambdas, V = eig_general(rep)
    V = _gram_normalize(V, G)
    if np.linalg.cond(V) > 1e12:
        warnings.warn(
            "eigenvector matrix condition exceeds 1e12; the representation "
            "is nearly defective and modes may be unreliable",
            NearDefectiveWarning,
            stacklevel=2,
        )
    xi = _symmetrize_conjugate_columns(lambdas, _mode_matrix(X, G, V, policy))
    return _assemble_model(kernel, X, G, rep, xi, lambdas, V, policy)


def eigenfunction_values(model: KoopmanModel, points) -> np.ndarray:
    """Evaluate all normalized eigenfunctions at the given points.

    Parameters
    ----------
    model : KoopmanModel
    points : array_like
        Points as rows ``(t, n)``, or a single vector of length ``n``.

    Returns
    -------
    numpy.ndarray, complex, shape (num_modes, num_points)
        Entry ``(j, t)`` is ``phi_j(points[t]) = sum_i (v_j)_i K(points[t],
        centers[i])``.
    """
    kp = gram(model.kernel, points, model.centers.T)  # (t, p) kernel values
    return model.eigvecs.T @ kp.T


def modes(model: KoopmanModel, policy: RegularizationPolicy | None = None) -> np.ndarray:
    """Recompute the Koopman mode matrix ``xi = X (V^T G)^{-1}``.

    ``fit`` stores this eagerly on the model; this recomputes it, optionally
    under a different regularization policy.

    Raises
    ------
    SingularMatrixError
        Singular ``V^T G`` under ``kind="none"``.
    """
    pol = model.policy if policy is None else policy
    xi = _mode_matrix(model.centers, model.gram, model.eigvecs, pol)
    return _symmetrize_conjugate_columns(model.lambdas, xi)
