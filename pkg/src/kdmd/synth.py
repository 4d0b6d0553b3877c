"""Synthetic dynamical systems with known behavior, and a deliberately
naive decomposition oracle for cross-checking the main fit at desk scale.

The generated families are planar rotations (periodic, unit-circle
spectrum), affine maps (the bounded-operator regime, closed-form
trajectories), and scalar geometric sequences.  Forward-incomplete maps
(e.g. tangent-style dynamics that leave their own domain) are intentionally
not offered: they admit no well-defined composition operator to
approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .kernels import KernelSpec, eval_kernel
from .koopman import SnapshotSet

__all__ = [
    "SynthSystem",
    "rotation",
    "affine",
    "scalar_geometric",
    "generate",
    "OracleDecomposition",
    "oracle_dmd",
]

_KINDS = ("rotation", "affine", "scalar_geometric")

#: oracle_dmd refuses instances larger than this (dense O(m^3) reference)
_ORACLE_MAX_SNAPSHOTS = 20


@dataclass(frozen=True)
class SynthSystem:
    """A small discrete-time system ``x_{i+1} = F(x_i)`` plus sampling plan.

    ``kind`` selects F: ``"rotation"`` (planar rotation by ``theta``),
    ``"affine"`` (``x -> matrix @ x + shift``), or ``"scalar_geometric"``
    (``x -> ratio * x`` in one dimension).  ``x0`` is the initial state and
    ``m`` the number of snapshots to emit (including ``x0``).
    """

    kind: str
    x0: np.ndarray
    m: int
    theta: float = 0.0
    matrix: np.ndarray | None = None
    shift: np.ndarray | None = None
    ratio: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {_KINDS}")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if not np.isfinite(x0).all():
            raise ValueError("x0 contains non-finite entries")
        object.__setattr__(self, "x0", x0)
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 2):
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        n = x0.size
        if self.kind == "rotation":
            if n != 2:
                raise ValueError(f"rotation needs a 2-dimensional x0, got dimension {n}")
            if not np.isfinite(self.theta):
                raise ValueError("theta must be finite")
        elif self.kind == "affine":
            A = np.asarray(self.matrix, dtype=float)
            if A.shape != (n, n):
                raise ValueError(f"matrix must have shape {(n, n)}, got {A.shape}")
            b = np.zeros(n) if self.shift is None else np.asarray(self.shift, dtype=float).reshape(-1)
            if b.size != n:
                raise ValueError(f"shift must have dimension {n}, got {b.size}")
            if not (np.isfinite(A).all() and np.isfinite(b).all()):
                raise ValueError("matrix/shift contain non-finite entries")
            object.__setattr__(self, "matrix", A)
            object.__setattr__(self, "shift", b)
        else:  # scalar_geometric
            if n != 1:
                raise ValueError(f"scalar_geometric needs a scalar x0, got dimension {n}")
            if not np.isfinite(self.ratio):
                raise ValueError("ratio must be finite")

    @property
    def state_dim(self) -> int:
        return self.x0.size

    def step(self, x: np.ndarray) -> np.ndarray:
        """Apply F once."""
        if self.kind == "rotation":
            c, s = np.cos(self.theta), np.sin(self.theta)
            return np.array([c * x[0] - s * x[1], s * x[0] + c * x[1]])
        if self.kind == "affine":
            return self.matrix @ x + self.shift
        return self.ratio * x


def rotation(theta: float, x0=(1.0, 0.0), m: int = 5) -> SynthSystem:
    """Planar rotation by ``theta`` radians per step."""
    return SynthSystem(kind="rotation", x0=np.asarray(x0, dtype=float), m=m, theta=theta)


def affine(matrix, shift=None, x0=None, m: int = 8) -> SynthSystem:
    """Affine map ``x -> matrix @ x + shift``."""
    A = np.asarray(matrix, dtype=float)
    if x0 is None:
        x0 = np.ones(A.shape[0])
    return SynthSystem(kind="affine", x0=np.asarray(x0, dtype=float), m=m, matrix=A, shift=shift)


def scalar_geometric(ratio: float, x0: float = 1.0, m: int = 6) -> SynthSystem:
    """Scalar sequence ``x_{i+1} = ratio * x_i``."""
    return SynthSystem(kind="scalar_geometric", x0=np.array([float(x0)]), m=m, ratio=ratio)


def generate(system: SynthSystem) -> SnapshotSet:
    """Roll the system forward into a time-series :class:`SnapshotSet`
    of ``m`` snapshots starting at ``x0``."""
    x = np.empty((system.state_dim, system.m))
    x[:, 0] = system.x0
    for i in range(system.m - 1):
        x[:, i + 1] = system.step(x[:, i])
    return SnapshotSet(x=x)


class OracleDecomposition(NamedTuple):
    """Reference decomposition: operator matrix, eigenvalues, modes."""

    rep: np.ndarray
    lambdas: np.ndarray
    modes: np.ndarray


def oracle_dmd(snapshots: SnapshotSet, kernel: KernelSpec) -> OracleDecomposition:
    """Brute-force reference decomposition for tiny instances.

    Everything is computed the slow, obvious way, independent of the main
    code paths: Gram and interaction matrices entry by entry, the operator
    matrix via an explicit SVD pseudo-inverse, the eigensystem via a
    different backend cross-checked against a Schur form, and modes via an
    explicit inverse.  Intended solely as a comparison target in tests.

    Raises
    ------
    ValueError
        More than 20 snapshots (this is a deliberately unoptimized path).
    ArithmeticError
        If the two independent eigenvalue routines disagree.
    """
    if snapshots.snapshot_count > _ORACLE_MAX_SNAPSHOTS:
        raise ValueError(
            f"oracle_dmd is limited to {_ORACLE_MAX_SNAPSHOTS} snapshots, "
            f"got {snapshots.snapshot_count}"
        )
    X, Y = snapshots.pairs()
    p = X.shape[1]
    G = np.empty((p, p))
    A = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            G[i, j] = eval_kernel(kernel, X[:, i], X[:, j])
            A[i, j] = eval_kernel(kernel, Y[:, i], X[:, j])
    rep = np.linalg.pinv(G) @ A

    lam, V = scipy.linalg.eig(rep)
    schur_lam = np.diag(scipy.linalg.schur(rep, output="complex")[0])
    _check_same_multiset(lam, schur_lam, rep)

    # normalize v^H G v = 1 to match the main convention
    s = np.einsum("ij,ik,kj->j", V.conj(), G, V).real
    V = V / np.sqrt(s)
    xi = X @ np.linalg.inv(V.T @ G)
    return OracleDecomposition(rep=rep, lambdas=lam, modes=xi)


def _check_same_multiset(a: np.ndarray, b: np.ndarray, rep: np.ndarray) -> None:
    """Greedy nearest-match comparison of two eigenvalue multisets."""
    tol = 1e-8 * max(1.0, float(np.linalg.norm(rep, 2)))
    remaining = list(b)
    for v in a:
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - v))
        if abs(remaining.pop(j) - v) > tol:
            raise ArithmeticError(
                "oracle self-check failed: eigenvalue and Schur routines disagree"
            )
