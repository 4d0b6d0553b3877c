import numpy as np
import numpy.testing as npt
import pytest

from kdmd.kernels import exp_dot_product, gaussian_rbf
from kdmd.koopman import SnapshotSet, fit
from kdmd.numerics import no_regularization
from kdmd.synth import (
    SynthSystem,
    affine,
    generate,
    oracle_dmd,
    rotation,
    scalar_geometric,
)

from _util import multiset_distance


class TestGenerators:
    def test_rotation_quarter_turns(self):
        snaps = generate(rotation(np.pi / 2, x0=(1.0, 0.0), m=5))
        expected = np.array(
            [[1.0, 0.0, -1.0, 0.0, 1.0], [0.0, 1.0, 0.0, -1.0, 0.0]]
        )
        npt.assert_allclose(snaps.x, expected, atol=1e-15)
        assert snaps.is_timeseries

    def test_affine_halving(self):
        snaps = generate(affine(np.array([[0.5]]), x0=np.array([1.0]), m=4))
        npt.assert_array_equal(snaps.x, [[1.0, 0.5, 0.25, 0.125]])

    def test_affine_counter(self):
        sys = affine(np.array([[1.0]]), shift=np.array([1.0]), x0=np.array([0.0]), m=3)
        snaps = generate(sys)
        npt.assert_array_equal(snaps.x, [[0.0, 1.0, 2.0]])

    def test_affine_default_start_is_ones(self):
        snaps = generate(affine(np.eye(2) * 0.5, m=2))
        npt.assert_array_equal(snaps.x[:, 0], [1.0, 1.0])

    def test_scalar_geometric(self):
        snaps = generate(scalar_geometric(0.5, x0=2.0, m=4))
        npt.assert_array_equal(snaps.x, [[2.0, 1.0, 0.5, 0.25]])

    def test_step_matches_generate(self):
        sys = affine(np.array([[0.9, 0.1], [0.0, 0.8]]), shift=np.array([0.1, -0.1]), m=6)
        snaps = generate(sys)
        for i in range(5):
            npt.assert_array_equal(sys.step(snaps.x[:, i]), snaps.x[:, i + 1])

    @pytest.mark.parametrize(
        "build",
        [
            lambda: rotation(np.pi / 2, m=1),
            lambda: rotation(np.pi / 2, x0=(1.0, 0.0, 0.0)),
            lambda: rotation(np.nan),
            lambda: affine(np.ones((2, 3))),
            lambda: affine(np.eye(2), shift=np.ones(3)),
            lambda: affine(np.eye(2), x0=np.ones(3)),
            lambda: scalar_geometric(0.5, m=0),
            lambda: scalar_geometric(np.inf),
        ],
    )
    def test_validation(self, build):
        with pytest.raises(ValueError):
            build()

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            SynthSystem(kind="spiral", x0=np.zeros(2), m=4)


class TestOracleDmd:
    def test_identity_dynamics(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(2, 6))
        dec = oracle_dmd(SnapshotSet(x=X, y=X), gaussian_rbf(2.0))
        npt.assert_allclose(dec.rep, np.eye(6), atol=1e-10)
        npt.assert_allclose(dec.lambdas, np.ones(6), atol=1e-10)

    def test_rotation_spectrum(self):
        snaps = generate(rotation(np.pi / 2, m=5))
        dec = oracle_dmd(snaps, gaussian_rbf(2.0))
        expected = np.array([1.0, 1j, -1j, -1.0])
        assert multiset_distance(dec.lambdas, expected) <= 1e-8

    def test_periodic_orbit_spectrum_on_unit_circle(self):
        # a quarter-turn orbit closes after 4 steps, so the sampled span is
        # invariant and the finite section inherits unit-circle eigenvalues
        snaps = generate(rotation(np.pi / 2, m=5))
        dec = oracle_dmd(snaps, exp_dot_product(2.0))
        npt.assert_allclose(np.abs(dec.lambdas), 1.0, atol=1e-8)

    def test_refuses_large_problems(self):
        X = np.random.default_rng(0).normal(size=(2, 22))
        with pytest.raises(ValueError, match="20"):
            oracle_dmd(SnapshotSet(x=X), gaussian_rbf(2.0))

    def test_agrees_with_fit_when_well_conditioned(self):
        rng = np.random.default_rng(11)
        A = np.array([[0.9, 0.05], [0.0, 0.8]])
        X = np.empty((2, 6))
        X[:, 0] = rng.uniform(1.0, 2.0, size=2)
        for i in range(5):
            X[:, i + 1] = A @ X[:, i] + np.array([0.2, -0.1])
        kernel = gaussian_rbf(0.5)
        from kdmd.kernels import gram
        from kdmd.koopman import SnapshotSet

        cond = np.linalg.cond(gram(kernel, X[:, :-1].T, X[:, :-1].T))
        assert cond < 1e6, "test needs a well-conditioned configuration"
        snaps = SnapshotSet(x=X)
        model = fit(snaps, kernel, policy=no_regularization())
        dec = oracle_dmd(snaps, kernel)
        assert multiset_distance(model.lambdas, dec.lambdas) <= 1e-8
        npt.assert_allclose(np.sort(np.abs(model.lambdas)), np.sort(np.abs(dec.lambdas)), atol=1e-8)

    def test_nonfinite_snapshots_rejected(self):
        bad = np.ones((2, 4))
        bad[1, 2] = np.nan
        with pytest.raises(ValueError, match="finite"):
            oracle_dmd(SnapshotSet(x=np.ones((2, 4)), y=bad), gaussian_rbf(2.0))
