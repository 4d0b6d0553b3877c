"""Dense linear-algebra kernel: regularized Gram solves, non-symmetric
eigendecomposition with a deterministic ordering, and projection weights.

All routines are pure functions over numpy arrays.  Gram matrices of nearby
snapshots are routinely ill-conditioned, so solves go through an explicit
eigen/SVD filter controlled by a :class:`RegularizationPolicy` instead of a
bare inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import KernelSpec, gram

__all__ = [
    "RegularizationPolicy",
    "tikhonov",
    "truncated_svd",
    "no_regularization",
    "DEFAULT_POLICY",
    "SingularMatrixError",
    "EigenConvergenceError",
    "solve_gram",
    "solve_square",
    "eig_general",
    "project",
]

_POLICY_KINDS = ("tikhonov", "truncated_svd", "none")

#: conjugate eigenvalues are paired when |a - conj(b)| is below this
_CONJ_PAIR_TOL = 1e-8


class SingularMatrixError(ArithmeticError):
    """A solve was requested without regularization on a numerically
    singular matrix.

    Attributes
    ----------
    condition : float
        Estimated condition number of the offending matrix (may be ``inf``).
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class EigenConvergenceError(ArithmeticError):
    """The iterative eigenvalue algorithm failed to converge."""


@dataclass(frozen=True)
class RegularizationPolicy:
    """How to stabilize solves against (near-)singular matrices.

    ``tikhonov_lambda`` and ``svd_rtol`` are relative: the ridge added under
    ``kind="tikhonov"`` is ``tikhonov_lambda`` times the largest eigenvalue
    of the system matrix, and ``kind="truncated_svd"`` discards spectral
    components below ``svd_rtol`` times the largest.  ``kind="none"`` solves
    exactly and raises :class:`SingularMatrixError` on numerically singular
    input rather than returning garbage.
    """

    kind: str = "tikhonov"
    tikhonov_lambda: float = 1e-10
    svd_rtol: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {_POLICY_KINDS}")
        if not (np.isfinite(self.tikhonov_lambda) and self.tikhonov_lambda >= 0):
            raise ValueError(f"tikhonov_lambda must be nonnegative, got {self.tikhonov_lambda!r}")
        if not (0 <= self.svd_rtol < 1):
            raise ValueError(f"svd_rtol must lie in [0, 1), got {self.svd_rtol!r}")


def tikhonov(lam: float = 1e-10) -> RegularizationPolicy:
    """Ridge-regularized solves with relative ridge ``lam``."""
    return RegularizationPolicy(kind="tikhonov", tikhonov_lambda=float(lam))


def truncated_svd(rtol: float) -> RegularizationPolicy:
    """Pseudo-inverse solves truncating relative singular values below ``rtol``."""
    return RegularizationPolicy(kind="truncated_svd", svd_rtol=float(rtol))


def no_regularization() -> RegularizationPolicy:
    """Exact solves; numerically singular systems fail loudly."""
    return RegularizationPolicy(kind="none")


#: default everywhere a policy is optional: a tiny relative ridge
DEFAULT_POLICY = tikhonov(1e-10)


def solve_gram(G, B, policy: RegularizationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Solve ``G @ W = B`` for a symmetric positive-semidefinite ``G``.

    Parameters
    ----------
    G : array_like, shape (p, p)
        Symmetric (within 1e-12 relative) PSD matrix.
    B : array_like, shape (p,) or (p, q)
    policy : RegularizationPolicy

    Returns
    -------
    numpy.ndarray
        ``W`` with the same trailing shape as ``B``.

    Raises
    ------
    SingularMatrixError
        Under ``kind="none"`` when ``G`` is numerically singular.
    ValueError
        On dimension mismatch or an asymmetric ``G``.
    """
    Gm = np.asarray(G, dtype=float)
    Bm = np.asarray(B, dtype=float)
    if Gm.ndim != 2 or Gm.shape[0] != Gm.shape[1]:
        raise ValueError(f"G must be square, got shape {Gm.shape}")
    if not np.isfinite(Gm).all():
        raise ValueError("G contains non-finite entries")
    scale = np.abs(Gm).max()
    if np.abs(Gm - Gm.T).max() > 1e-12 * max(scale, 1e-300):
        raise ValueError("G is not symmetric within 1e-12 relative")
    squeeze = Bm.ndim == 1
    if squeeze:
        Bm = Bm[:, None]
    if Bm.ndim != 2 or Bm.shape[0] != Gm.shape[0]:
        raise ValueError(f"B shape {np.asarray(B).shape} does not conform to G shape {Gm.shape}")

    evals, evecs = np.linalg.eigh(Gm)
    top = np.abs(evals).max() if evals.size else 0.0
    if evals.size and evals.min() < -1e-8 * max(top, 1e-300):
        raise ValueError(
            "G has a significantly negative eigenvalue "
            f"({evals.min():.3e}); not positive semidefinite"
        )
    filt = _spectral_filter(evals, policy, Gm.shape[0], hermitian=True)
    W = evecs @ (filt[:, None] * (evecs.T @ Bm))
    return W[:, 0] if squeeze else W


def solve_square(M, B, policy: RegularizationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Solve ``M @ W = B`` for a general (possibly complex) square ``M``.

    Same regularization semantics as :func:`solve_gram`, realized through an
    SVD filter since ``M`` need not be Hermitian.
    """
    Mm = np.asarray(M)
    Bm = np.asarray(B)
    if Mm.ndim != 2 or Mm.shape[0] != Mm.shape[1]:
        raise ValueError(f"M must be square, got shape {Mm.shape}")
    if not np.isfinite(Mm).all():
        raise ValueError("M contains non-finite entries")
    squeeze = Bm.ndim == 1
    if squeeze:
        Bm = Bm[:, None]
    if Bm.shape[0] != Mm.shape[0]:
        raise ValueError(f"B shape {np.asarray(B).shape} does not conform to M shape {Mm.shape}")

    U, s, Vh = np.linalg.svd(Mm)
    filt = _spectral_filter(s, policy, Mm.shape[0], hermitian=False)
    W = Vh.conj().T @ (filt[:, None] * (U.conj().T @ Bm))
    return W[:, 0] if squeeze else W


def _spectral_filter(
    spectrum: np.ndarray, policy: RegularizationPolicy, p: int, hermitian: bool
) -> np.ndarray:
    """Per-component inversion filter for an eigen- or singular-spectrum.

    For the Hermitian path ``spectrum`` holds signed eigenvalues; Tikhonov
    there is the classic ``1 / (e + ridge)``.  For the SVD path it holds
    singular values and Tikhonov becomes ``s / (s^2 + ridge * smax^2)``, the
    normal-equations ridge.  Both keep the ridge relative to the largest
    eigenvalue of the Hermitian matrix actually inverted.
    """
    mags = np.abs(spectrum)
    top = mags.max() if mags.size else 0.0
    if policy.kind == "none":
        floor = p * np.finfo(float).eps * top
        if top == 0.0 or mags.min() <= floor:
            cond = float("inf") if mags.min() == 0.0 else float(top / mags.min())
            raise SingularMatrixError(
                f"matrix of size {p}x{p} is numerically singular; "
                "use a tikhonov or truncated_svd policy",
                condition=cond,
            )
        return 1.0 / spectrum
    if policy.kind == "tikhonov":
        if hermitian:
            return 1.0 / (spectrum + policy.tikhonov_lambda * top)
        return spectrum / (spectrum**2 + policy.tikhonov_lambda * top**2)
    # truncated_svd: keep strictly positive components above the cutoff
    cutoff = policy.svd_rtol * top
    keep = spectrum > max(cutoff, 0.0)
    out = np.zeros_like(spectrum)
    out[keep] = 1.0 / spectrum[keep]
    return out


def eig_general(M) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a real square matrix, deterministically
    ordered.

    Eigenvalues are sorted by descending magnitude, ties broken by
    descending real part, then the positive-imaginary member of a conjugate
    pair first.  Non-real eigenvalues are paired and averaged to exact
    conjugates (with conjugate eigenvectors), and each eigenvector is phased
    so its largest-magnitude entry is real and positive.

    Parameters
    ----------
    M : array_like, shape (p, p)
        Real matrix with finite entries.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        ``(lambdas, V)``: eigenvalues (p,) complex and eigenvectors as the
        columns of ``V`` (p, p) complex, with ``M @ V[:, j]`` equal to
        ``lambdas[j] * V[:, j]`` up to the backend's residual bound.

    Raises
    ------
    EigenConvergenceError
        If the QR iteration fails to converge.
    ValueError
        On non-square, non-real, or non-finite input.
    """
    Mm = np.asarray(M)
    if np.iscomplexobj(Mm):
        raise ValueError("eig_general expects a real matrix")
    Mm = Mm.astype(float, copy=False)
    if Mm.ndim != 2 or Mm.shape[0] != Mm.shape[1]:
        raise ValueError(f"M must be square, got shape {Mm.shape}")
    if not np.isfinite(Mm).all():
        raise ValueError("M contains non-finite entries")
    p = Mm.shape[0]

    try:
        w, V = np.linalg.eig(Mm)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(
            f"eigendecomposition of a {p}x{p} matrix did not converge "
            "within the QR iteration budget (~30 sweeps per eigenvalue)"
        ) from exc
    w = w.astype(complex, copy=True)
    V = V.astype(complex, copy=True)

    _pair_conjugates(w, V)

    # Magnitude/real-part ties must be detected up to floating-point noise,
    # or the secondary keys never engage; snap those keys to a relative grid
    # (well above eigenvalue backend error, far below spectral gaps).
    mags = np.abs(w)
    tol = 1e-9 * mags.max() if mags.max() > 0 else 1.0
    order = np.lexsort((-w.imag, -np.round(w.real / tol), -np.round(mags / tol)))
    w = w[order]
    V = V[:, order]

    # phase convention: largest-magnitude entry real and positive
    for j in range(p):
        k = int(np.argmax(np.abs(V[:, j])))
        pivot = V[k, j]
        if pivot != 0:
            V[:, j] = V[:, j] * (np.conj(pivot) / abs(pivot))
    return w, V


def _pair_conjugates(w: np.ndarray, V: np.ndarray) -> None:
    """Average near-conjugate eigenpairs to exact conjugates, in place."""
    unmatched = [j for j in range(w.size) if w[j].imag != 0.0]
    while unmatched:
        a = unmatched.pop(0)
        if not unmatched:
            break
        target = np.conj(w[a])
        b = min(unmatched, key=lambda j: abs(w[j] - target))
        if abs(w[b] - target) > _CONJ_PAIR_TOL:
            continue
        unmatched.remove(b)
        lam = 0.5 * (w[a] + np.conj(w[b]))
        w[a], w[b] = lam, np.conj(lam)
        va = 0.5 * (V[:, a] + np.conj(V[:, b]))
        V[:, a], V[:, b] = va, np.conj(va)


def project(
    kernel: KernelSpec,
    centers,
    g_values,
    policy: RegularizationPolicy = DEFAULT_POLICY,
) -> np.ndarray:
    """Weights of the least-squares projection onto kernel sections at
    ``centers``.

    Returns ``w`` such that ``sum_i w[i] * K(., centers[i])`` is the
    projection of the function with samples ``g_values[i]`` at the centers;
    obtained by solving the Gram system ``G w = g_values``.

    Parameters
    ----------
    kernel : KernelSpec
    centers : array_like, shape (p, n)
        One center per row.
    g_values : array_like, shape (p,)
        Target function sampled at the centers.
    policy : RegularizationPolicy
    """
    g = np.asarray(g_values, dtype=float).reshape(-1)
    G = gram(kernel, centers, centers)
    if g.size != G.shape[0]:
        raise ValueError(f"expected {G.shape[0]} sampled values, got {g.size}")
    if not np.isfinite(g).all():
        raise ValueError("g_values contains non-finite entries")
    return solve_gram(G, g, policy)
