"""Trajectory reconstruction and prediction from a fitted Koopman model,
plus data-driven eigenfunction quality measures.

The forecast formula advances eigenfunction values of an anchor state by
eigenvalue powers and re-expands through the modes:

    state(i) = Re[ sum_j xi[:, j] * lambda_j^(i-1) * phi_j(anchor) ],

so ``state(1)`` is the anchor's mode-interpolation.  Powers accumulate
multiplicatively step by step rather than via ``lambda**i`` for stability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .koopman import KoopmanModel, SnapshotSet, eigenfunction_values

__all__ = [
    "Forecast",
    "reconstruct",
    "predict_from",
    "eigen_residuals",
    "pointwise_error_bound",
]

#: eigenvalue-power magnitudes are capped here to keep states finite
_POWER_CAP = 1e300


@dataclass(frozen=True)
class Forecast:
    """Forecast trajectory with real states.

    ``imag_residual`` is the largest 2-norm of the imaginary part discarded
    when truncating the complex mode expansion to real states; for a model
    fitted on real data with proper conjugate pairing it is tiny relative to
    the state norm.  ``lambda_powers_clamped`` reports that some
    ``|lambda|^i`` exceeded the overflow guard and was capped.
    """

    states: np.ndarray
    imag_residual: float
    lambda_powers_clamped: bool

    def __post_init__(self) -> None:
        s = np.asarray(self.states, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "states", s)


def predict_from(model: KoopmanModel, x0, steps: int) -> Forecast:
    """Forecast ``steps`` states starting from anchor ``x0``.

    ``state(1)`` is the mode-interpolation of ``x0`` itself (zeroth power);
    subsequent states advance one eigenvalue power per step.

    Parameters
    ----------
    model : KoopmanModel
    x0 : array_like, shape (n,)
    steps : int
        Number of states to emit, >= 1.
    """
    if not isinstance(steps, (int, np.integer)) or isinstance(steps, bool):
        raise ValueError(f"steps must be an integer, got {steps!r}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    anchor = np.asarray(x0, dtype=float).reshape(-1)
    if anchor.size != model.state_dim:
        raise ValueError(f"x0 has dimension {anchor.size}, model expects {model.state_dim}")
    if not np.isfinite(anchor).all():
        raise ValueError("x0 contains non-finite entries")

    phi0 = eigenfunction_values(model, anchor)[:, 0]  # (p,)
    coeff = model.modes * phi0[None, :]  # (n, p): xi_j * phi_j(x0)
    lam = model.lambdas
    powers = np.ones_like(lam)
    states = np.empty((model.state_dim, steps), dtype=float)
    imag_worst = 0.0
    clamped = False
    for i in range(steps):
        s = coeff @ powers
        states[:, i] = s.real
        imag_worst = max(imag_worst, float(np.linalg.norm(s.imag)))
        powers = powers * lam
        mags = np.abs(powers)
        over = mags > _POWER_CAP
        if over.any():
            powers[over] *= _POWER_CAP / mags[over]
            clamped = True
    return Forecast(states=states, imag_residual=imag_worst, lambda_powers_clamped=clamped)


def reconstruct(model: KoopmanModel, steps: int) -> Forecast:
    """Forecast anchored at the model's first center.

    With time-series training data, ``state(i)`` approximates the i-th
    training snapshot (and extrapolates beyond the training window for
    larger ``i``).
    """
    return predict_from(model, model.first_center, steps)


def eigen_residuals(model: KoopmanModel, test_pairs: SnapshotSet) -> np.ndarray:
    """Worst-case one-step eigenfunction residual per eigenpair.

    Entry ``j`` is ``max over pairs |phi_j(y) - lambda_j phi_j(x)|`` — the
    pointwise, data-measurable surrogate of the RKHS residual
    ``||(K phi_j) - lambda_j phi_j||``.

    Parameters
    ----------
    model : KoopmanModel
    test_pairs : SnapshotSet
        Held-out (or training) pairs of dimension ``n``.

    Returns
    -------
    numpy.ndarray, real, shape (num_modes,)
    """
    X, Y = test_pairs.pairs()
    if X.shape[0] != model.state_dim:
        raise ValueError(
            f"test pairs have dimension {X.shape[0]}, model expects {model.state_dim}"
        )
    phi_x = eigenfunction_values(model, X.T)
    phi_y = eigenfunction_values(model, Y.T)
    return np.abs(phi_y - model.lambdas[:, None] * phi_x).max(axis=1)


def pointwise_error_bound(C: float, eps: float, lambda_abs: float, m: int) -> float:
    """Propagated eigenfunction error bound over an ``m``-step chain.

    Evaluates ``C * eps * sum_{k=0}^{m} lambda_abs^k`` — the telescoped
    growth of a one-step residual ``eps`` under ``m`` applications of the
    dynamics, with RKHS constant ``C``.  At ``lambda_abs = 1`` this is the
    exact limit ``C * eps * (m + 1)``.

    Parameters
    ----------
    C : float
        Positive RKHS evaluation constant (1 is valid for the Gaussian
        kernel family).
    eps : float
        Nonnegative one-step residual.
    lambda_abs : float
        Nonnegative eigenvalue magnitude.
    m : int
        Nonnegative chain length.
    """
    if not (np.isfinite(C) and C > 0):
        raise ValueError(f"C must be a positive finite real, got {C!r}")
    if not (np.isfinite(eps) and eps >= 0):
        raise ValueError(f"eps must be a nonnegative finite real, got {eps!r}")
    if not (np.isfinite(lambda_abs) and lambda_abs >= 0):
        raise ValueError(f"lambda_abs must be a nonnegative finite real, got {lambda_abs!r}")
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 0:
        raise ValueError(f"m must be a nonnegative integer, got {m!r}")
    total = 1.0
    term = 1.0
    for _ in range(int(m)):
        term *= lambda_abs
        total += term
    return C * eps * total
