import numpy as np
import numpy.testing as npt
import pytest

from kdmd.cli import main
from kdmd.io import load_matrix, load_model


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def rotation_csv(tmp_path):
    """Quarter-turn rotation snapshots written through the synth subcommand."""
    p = tmp_path / "snaps.csv"
    assert run("synth", "--system", "rotation", "--theta", np.pi / 2, "--m", 9, "--out", p) == 0
    return p


@pytest.fixture
def rotation_model(tmp_path, rotation_csv):
    # train on the first full period only: the orbit revisits its four
    # points, and near-duplicate centers make the Gram matrix singular
    p = tmp_path / "model.txt"
    assert (
        run("fit", "--input", rotation_csv, "--kernel", "gaussian_rbf", "--mu", 2.0,
            "--train", "1-4", "--out", p)
        == 0
    )
    return p


class TestSynth:
    def test_rotation_output(self, rotation_csv):
        x = load_matrix(rotation_csv)
        assert x.shape == (2, 9)
        npt.assert_allclose(x[:, 4], x[:, 0], atol=1e-15)  # period 4

    def test_affine_with_matrix_and_shift(self, tmp_path):
        p = tmp_path / "aff.csv"
        assert (
            run("synth", "--system", "affine", "--matrix", "0.5,0;0,0.5",
                "--shift", "1,0", "--x0", "0,0", "--m", 3, "--out", p)
            == 0
        )
        npt.assert_allclose(load_matrix(p), [[0.0, 1.0, 1.5], [0.0, 0.0, 0.0]], atol=1e-15)

    def test_scalar_geometric_raw_format(self, tmp_path):
        p = tmp_path / "geo.bin"
        assert (
            run("synth", "--system", "scalar_geometric", "--ratio", 0.5, "--x0", "2",
                "--m", 4, "--out", p, "--format", "raw_f64")
            == 0
        )
        npt.assert_array_equal(load_matrix(p, fmt="raw_f64"), [[2.0, 1.0, 0.5, 0.25]])

    def test_missing_parameter_is_reported(self, tmp_path, capsys):
        assert run("synth", "--system", "rotation", "--out", tmp_path / "x.csv") == 1
        assert "error:" in capsys.readouterr().err


class TestFit:
    def test_writes_loadable_model(self, tmp_path, rotation_csv, capsys):
        p = tmp_path / "m.txt"
        assert run("fit", "--input", rotation_csv, "--mu", 2.0, "--train", "1-4",
                   "--out", p) == 0
        assert load_model(p).num_modes == 4
        assert "4 modes" in capsys.readouterr().out

    def test_full_window_fit_without_train_flag(self, tmp_path):
        # an eighth-turn orbit has eight distinct points, so every pair is usable
        snaps = tmp_path / "oct.csv"
        assert run("synth", "--system", "rotation", "--theta", np.pi / 4, "--m", 9,
                   "--out", snaps) == 0
        p = tmp_path / "m.txt"
        assert run("fit", "--input", snaps, "--mu", 2.0, "--out", p) == 0
        assert load_model(p).num_modes == 8

    def test_near_duplicate_centers_reported(self, tmp_path, rotation_csv, capsys):
        # the 9-snapshot quarter-turn orbit revisits its points to within
        # rounding; the Gram matrix is then numerically singular and the fit
        # must fail with a clear message rather than return garbage
        assert run("fit", "--input", rotation_csv, "--mu", 2.0,
                   "--out", tmp_path / "m.txt") == 1
        assert "rank-deficient" in capsys.readouterr().err

    def test_train_range_out_of_bounds(self, tmp_path, rotation_csv, capsys):
        assert (
            run("fit", "--input", rotation_csv, "--train", "1-99", "--out", tmp_path / "m.txt")
            == 1
        )
        assert "error:" in capsys.readouterr().err

    def test_arbitrary_pairs_via_input_y(self, tmp_path):
        # halving map sampled at two independent states; with the plain inner
        # product the feature space is the state space itself, so both
        # eigenvalues are exactly the contraction factor
        x = tmp_path / "x.csv"
        y = tmp_path / "y.csv"
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.savetxt(x, a, delimiter=",")
        np.savetxt(y, 0.5 * a, delimiter=",")
        p = tmp_path / "m.txt"
        assert run("fit", "--input", x, "--input-y", y, "--kernel", "linear", "--out", p) == 0
        lams = load_model(p).lambdas
        npt.assert_allclose(lams, [0.5, 0.5], atol=1e-10)

    def test_unknown_kernel_rejected(self, tmp_path, rotation_csv):
        with pytest.raises(SystemExit) as exc:
            run("fit", "--input", rotation_csv, "--kernel", "sigmoid", "--out", tmp_path / "m.txt")
        assert exc.value.code == 2

    def test_missing_input_file(self, tmp_path, capsys):
        assert run("fit", "--input", tmp_path / "nope.csv", "--out", tmp_path / "m.txt") == 1
        assert "error:" in capsys.readouterr().err


class TestEigModes:
    def test_eig_to_stdout(self, rotation_model, capsys):
        assert run("eig", "--model", rotation_model) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "index,real,imag,abs"
        assert len(lines) == 5

    def test_eig_to_file(self, tmp_path, rotation_model):
        p = tmp_path / "eig.csv"
        assert run("eig", "--model", rotation_model, "--out", p) == 0
        rows = p.read_text().strip().splitlines()
        assert rows[0] == "index,real,imag,abs"
        vals = np.array([[float(t) for t in r.split(",")] for r in rows[1:]])
        npt.assert_allclose(np.sort(vals[:, 3]), 1.0, atol=1e-6)  # unit circle

    def test_modes_table(self, rotation_model, capsys):
        assert run("modes", "--model", rotation_model) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "mode,component,real,imag"
        assert len(lines) == 1 + 4 * 2  # p modes x n components


class TestForecastCommands:
    def test_reconstruct(self, tmp_path, rotation_model, rotation_csv):
        p = tmp_path / "rec.csv"
        assert run("reconstruct", "--model", rotation_model, "--steps", 8, "--out", p) == 0
        rec = load_matrix(p)
        truth = load_matrix(rotation_csv)[:, :8]
        npt.assert_allclose(rec, truth, atol=1e-6)

    def test_predict_with_inline_x0(self, tmp_path, rotation_model):
        p = tmp_path / "pred.csv"
        assert run("predict", "--model", rotation_model, "--x0", "0,1", "--steps", 4, "--out", p) == 0
        got = load_matrix(p)
        expected = np.array([[0.0, -1.0, 0.0, 1.0], [1.0, 0.0, -1.0, 0.0]])
        npt.assert_allclose(got, expected, atol=1e-6)

    def test_predict_with_x0_file(self, tmp_path, rotation_model):
        x0 = tmp_path / "x0.csv"
        x0.write_text("0\n1\n")
        p = tmp_path / "pred.csv"
        assert run("predict", "--model", rotation_model, "--x0-file", x0, "--steps", 2, "--out", p) == 0
        npt.assert_allclose(load_matrix(p)[:, 0], [0.0, 1.0], atol=1e-8)

    def test_predict_requires_exactly_one_x0_source(self, tmp_path, rotation_model, capsys):
        p = tmp_path / "pred.csv"
        x0 = tmp_path / "x0.csv"
        x0.write_text("0\n1\n")
        assert run("predict", "--model", rotation_model, "--x0", "0,1", "--x0-file", x0,
                   "--steps", 2, "--out", p) == 1
        assert "error:" in capsys.readouterr().err
        assert run("predict", "--model", rotation_model, "--steps", 2, "--out", p) == 1

    def test_frames_written_with_grid(self, tmp_path, rotation_model):
        p = tmp_path / "rec.csv"
        frames = tmp_path / "frames"
        assert run("reconstruct", "--model", rotation_model, "--steps", 3, "--out", p,
                   "--grid", "2x1", "--frames-dir", frames) == 0
        pgms = sorted(frames.glob("*.pgm"))
        assert len(pgms) == 3
        assert pgms[0].read_bytes().startswith(b"P5\n2 1\n255\n")


class TestResiduals:
    def test_table_shape(self, tmp_path, rotation_model, rotation_csv, capsys):
        assert run("residuals", "--model", rotation_model, "--input", rotation_csv) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "index,lambda_real,lambda_imag,residual"
        vals = [float(r.split(",")[-1]) for r in lines[1:]]
        assert len(vals) == 4
        assert max(vals) <= 1e-6


class TestPipeline:
    def test_end_to_end(self, tmp_path, rotation_csv, capsys):
        out = tmp_path / "run"
        assert run("pipeline", "--input", rotation_csv, "--train", "1-4", "--predict", "6-9",
                   "--mu", 2.0, "--out", out) == 0
        for name in ("model.txt", "eigenvalues.csv", "modes.csv",
                     "reconstruction.csv", "prediction.csv", "errors.csv"):
            assert (out / name).exists(), name
        report = capsys.readouterr().out
        assert "modes" in report
        errs = (out / "errors.csv").read_text().strip().splitlines()
        assert errs[0] == "snapshot,phase,relative_error"
        worst = max(float(r.split(",")[-1]) for r in errs[1:])
        assert worst <= 1e-6

    def test_deterministic_bytes(self, tmp_path, rotation_csv):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("pipeline", "--input", rotation_csv, "--train", "1-4",
                       "--predict", "5-8", "--mu", 2.0, "--out", out) == 0
        for name in ("model.txt", "eigenvalues.csv", "modes.csv",
                     "reconstruction.csv", "prediction.csv", "errors.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_pgm_frames(self, tmp_path, rotation_csv):
        out = tmp_path / "run"
        assert run("pipeline", "--input", rotation_csv, "--train", "1-4", "--predict", "6-9",
                   "--mu", 2.0, "--grid", "2x1", "--out", out) == 0
        recs = sorted(out.glob("recon_*.pgm"))
        preds = sorted(out.glob("pred_*.pgm"))
        truths = sorted(out.glob("truth_*.pgm"))
        assert len(recs) == 5  # snapshots 1..5 of the training window
        assert len(preds) == 4
        assert len(truths) >= 5

    def test_backward_prediction_rejected(self, tmp_path, rotation_csv, capsys):
        assert run("pipeline", "--input", rotation_csv, "--train", "3-5", "--predict", "1-2",
                   "--out", tmp_path / "run") == 1
        assert "forward" in capsys.readouterr().err

    def test_bad_range_syntax_rejected(self, tmp_path, rotation_csv):
        with pytest.raises(SystemExit) as exc:
            run("pipeline", "--input", rotation_csv, "--train", "4~9", "--out", tmp_path / "o")
        assert exc.value.code == 2


class TestTopLevel:
    def test_no_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run()
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run("frobnicate")
        assert exc.value.code == 2
