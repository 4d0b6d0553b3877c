"""Kernel dynamic mode decomposition over reproducing kernel Hilbert spaces.

From snapshot pairs of a dynamical system, :func:`fit` builds the
finite-rank compression of the Koopman composition operator onto the span
of kernel sections at the data, exposing its eigenvalues, eigenfunctions,
and modes; :func:`reconstruct` and :func:`predict_from` turn the spectrum
back into trajectories.

Quick start::

    import numpy as np
    from kdmd import SnapshotSet, fit, gaussian_rbf, reconstruct

    x = np.array([[1.0, 0.0, -1.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0, -1.0, 0.0]])   # quarter rotations
    model = fit(SnapshotSet(x=x), gaussian_rbf(2.0))
    print(model.lambdas)            # ~ {1, i, -i, -1}
    print(reconstruct(model, 8).states)
"""

from .forecast import (
    Forecast,
    eigen_residuals,
    pointwise_error_bound,
    predict_from,
    reconstruct,
)
from .io import (
    FieldGrid,
    ModelFormatError,
    SnapshotFormatError,
    load_matrix,
    load_model,
    load_snapshots,
    save_matrix,
    save_model,
    save_snapshots,
    write_pgm,
)
from .kernels import (
    KernelSpec,
    eval_kernel,
    exp_dot_product,
    gaussian_rbf,
    gram,
    linear,
    polynomial,
)
from .koopman import (
    DuplicateCenterWarning,
    KoopmanModel,
    NearDefectiveWarning,
    SnapshotSet,
    eigenfunction_values,
    fit,
    modes,
)
from .numerics import (
    DEFAULT_POLICY,
    EigenConvergenceError,
    RegularizationPolicy,
    SingularMatrixError,
    eig_general,
    no_regularization,
    project,
    solve_gram,
    solve_square,
    tikhonov,
    truncated_svd,
)
from .pipeline import PipelineReport, RunConfig, format_report, run_pipeline
from .synth import (
    OracleDecomposition,
    SynthSystem,
    affine,
    generate,
    oracle_dmd,
    rotation,
    scalar_geometric,
)
from .vvrkhs import BlockGram, block_gram, fit_vector_valued

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # kernels
    "KernelSpec",
    "gaussian_rbf",
    "exp_dot_product",
    "polynomial",
    "linear",
    "eval_kernel",
    "gram",
    # numerics
    "RegularizationPolicy",
    "tikhonov",
    "truncated_svd",
    "no_regularization",
    "DEFAULT_POLICY",
    "solve_gram",
    "solve_square",
    "eig_general",
    "project",
    "SingularMatrixError",
    "EigenConvergenceError",
    # koopman
    "SnapshotSet",
    "KoopmanModel",
    "fit",
    "eigenfunction_values",
    "modes",
    "DuplicateCenterWarning",
    "NearDefectiveWarning",
    # forecast
    "Forecast",
    "reconstruct",
    "predict_from",
    "eigen_residuals",
    "pointwise_error_bound",
    # vvrkhs
    "BlockGram",
    "block_gram",
    "fit_vector_valued",
    # synth
    "SynthSystem",
    "rotation",
    "affine",
    "scalar_geometric",
    "generate",
    "OracleDecomposition",
    "oracle_dmd",
    # io
    "load_snapshots",
    "save_snapshots",
    "load_matrix",
    "save_matrix",
    "load_model",
    "save_model",
    "FieldGrid",
    "write_pgm",
    "SnapshotFormatError",
    "ModelFormatError",
    # pipeline
    "RunConfig",
    "PipelineReport",
    "run_pipeline",
    "format_report",
]
