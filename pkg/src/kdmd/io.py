"""File formats: snapshot matrices (CSV and raw binary), model
serialization, and grayscale heatmap frames for gridded fields.

All text output uses 17-significant-digit floats, which round-trip IEEE
doubles exactly, so save -> load is bit-identical and repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import KernelSpec
from .koopman import KoopmanModel, SnapshotSet
from .numerics import RegularizationPolicy

__all__ = [
    "SnapshotFormatError",
    "ModelFormatError",
    "load_matrix",
    "save_matrix",
    "load_snapshots",
    "save_snapshots",
    "save_model",
    "load_model",
    "FieldGrid",
    "write_pgm",
]

_FORMATS = ("csv", "raw_f64")

#: refuse binary headers claiming more entries than this (corrupt files)
_MAX_ENTRIES = 1_000_000_000


class SnapshotFormatError(ValueError):
    """A snapshot file failed to parse; the message carries line/offset."""


class ModelFormatError(ValueError):
    """A model file failed to parse; the message carries the line number."""


def _fmt(v: float) -> str:
    return "%.17g" % v


def _check_format(fmt: str) -> None:
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {_FORMATS}")


def load_matrix(path, fmt: str = "csv") -> np.ndarray:
    """Read an n-by-m matrix of states-as-columns.

    CSV: one state component per row, one snapshot per column; a single
    leading header row is tolerated.  raw_f64: two little-endian uint64
    (n, m) followed by n*m little-endian float64 in column-major order.

    Raises
    ------
    SnapshotFormatError
        Ragged rows, non-numeric cells (with line/column), or truncated
        binary payload (with byte offset).
    """
    _check_format(fmt)
    path = Path(path)
    if fmt == "csv":
        return _load_csv(path)
    return _load_raw(path)


def _load_csv(path: Path) -> np.ndarray:
    lines = path.read_text().splitlines()
    rows: list[list[float]] = []
    width = None
    first_data_line = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        tokens = [t.strip() for t in line.split(",")]
        values = []
        bad_col = None
        for col, tok in enumerate(tokens, start=1):
            try:
                values.append(float(tok))
            except ValueError:
                bad_col = (col, tok)
                break
        if bad_col is not None:
            if not rows and first_data_line is None:
                first_data_line = lineno  # header row: skip
                continue
            raise SnapshotFormatError(
                f"{path}: line {lineno}, column {bad_col[0]}: "
                f"could not parse {bad_col[1]!r} as a number"
            )
        if first_data_line is None:
            first_data_line = lineno
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise SnapshotFormatError(
                f"{path}: line {lineno} has {len(values)} values, expected {width}"
            )
        rows.append(values)
    if not rows:
        raise SnapshotFormatError(f"{path}: no numeric data found")
    return np.array(rows, dtype=float)


def _load_raw(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if len(blob) < 16:
        raise SnapshotFormatError(
            f"{path}: truncated header, need 16 bytes, file has {len(blob)}"
        )
    n, m = struct.unpack("<QQ", blob[:16])
    if n < 1 or m < 1 or n * m > _MAX_ENTRIES:
        raise SnapshotFormatError(f"{path}: implausible dimensions {n}x{m} in header")
    expected = 16 + 8 * n * m
    if len(blob) != expected:
        raise SnapshotFormatError(
            f"{path}: expected {expected} bytes for a {n}x{m} matrix, "
            f"file has {len(blob)} (payload ends at offset {len(blob)})"
        )
    flat = np.frombuffer(blob, dtype="<f8", offset=16)
    return flat.reshape((n, m), order="F").astype(float)


def save_matrix(path, x, fmt: str = "csv") -> None:
    """Write an n-by-m matrix of states-as-columns (inverse of
    :func:`load_matrix`; CSV carries no header)."""
    _check_format(fmt)
    path = Path(path)
    xm = np.atleast_2d(np.asarray(x, dtype=float))
    if fmt == "csv":
        lines = [",".join(_fmt(v) for v in row) for row in xm]
        path.write_text("\n".join(lines) + "\n")
    else:
        header = struct.pack("<QQ", xm.shape[0], xm.shape[1])
        path.write_bytes(header + xm.astype("<f8").tobytes(order="F"))


def load_snapshots(path, fmt: str = "csv") -> SnapshotSet:
    """Load a time-series :class:`SnapshotSet` (see :func:`load_matrix`)."""
    return SnapshotSet(x=load_matrix(path, fmt))


def save_snapshots(path, snapshots, fmt: str = "csv") -> None:
    """Write snapshot states; accepts a :class:`SnapshotSet` or a matrix.

    Paired sets (explicit ``y``) must be saved as two files — one per
    matrix — since the formats carry a single matrix.
    """
    if isinstance(snapshots, SnapshotSet):
        if snapshots.y is not None:
            raise ValueError(
                "paired snapshots carry two matrices; save x and y separately"
            )
        snapshots = snapshots.x
    save_matrix(path, snapshots, fmt)


# ---------------------------------------------------------------------------
# model serialization


def _matrix_lines(a: np.ndarray) -> list[str]:
    if np.iscomplexobj(a):
        return [
            " ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in row) for row in a
        ]
    return [" ".join(_fmt(v) for v in row) for row in a]


def save_model(path, model: KoopmanModel) -> None:
    """Serialize a fitted model to a sectioned text file.

    Everything needed to evaluate, reconstruct, and predict is stored:
    kernel, policy, centers, Gram matrix, operator matrix, eigensystem, and
    modes — floats at 17 significant digits (exact round trip).
    """
    n, p = model.centers.shape
    k = model.kernel
    pol = model.policy
    out: list[str] = [
        "kdmd-model 1",
        f"kernel {k.kind}",
        f"mu {_fmt(k.mu)}",
        f"degree {k.degree}",
        f"offset {_fmt(k.offset)}",
        f"policy {pol.kind}",
        f"tikhonov_lambda {_fmt(pol.tikhonov_lambda)}",
        f"svd_rtol {_fmt(pol.svd_rtol)}",
        f"state_dim {n}",
        f"num_modes {p}",
        "first_center",
        " ".join(_fmt(v) for v in model.first_center),
        f"centers {n} {p}",
        *_matrix_lines(model.centers),
        f"gram {p} {p}",
        *_matrix_lines(model.gram),
        f"rep {p} {p}",
        *_matrix_lines(model.rep),
        f"lambdas {p}",
        *(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in model.lambdas),
        f"eigvecs {p} {p}",
        *_matrix_lines(model.eigvecs),
        f"modes {n} {p}",
        *_matrix_lines(model.modes),
    ]
    Path(path).write_text("\n".join(out) + "\n")


class _ModelReader:
    def __init__(self, path: Path):
        self.path = path
        self.lines = path.read_text().splitlines()
        self.pos = 0

    def fail(self, why: str):
        raise ModelFormatError(f"{self.path}: line {self.pos}: {why}")

    def next_line(self) -> str:
        if self.pos >= len(self.lines):
            self.pos += 1
            self.fail("unexpected end of file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyword(self, name: str) -> list[str]:
        parts = self.next_line().split()
        if not parts or parts[0] != name:
            self.fail(f"expected section {name!r}")
        return parts[1:]

    def floats(self, count: int) -> list[float]:
        toks = self.next_line().split()
        if len(toks) != count:
            self.fail(f"expected {count} numbers, found {len(toks)}")
        try:
            return [float(t) for t in toks]
        except ValueError as exc:
            self.fail(f"bad number: {exc}")

    def real_matrix(self, rows: int, cols: int) -> np.ndarray:
        return np.array([self.floats(cols) for _ in range(rows)], dtype=float)

    def complex_matrix(self, rows: int, cols: int) -> np.ndarray:
        flat = np.array([self.floats(2 * cols) for _ in range(rows)], dtype=float)
        # assemble via the real/imag views: `re + 1j*im` would flip the sign
        # of negative-zero imaginary parts and break byte-exact re-saves
        out = np.empty((rows, cols), dtype=complex)
        out.real = flat[:, 0::2]
        out.imag = flat[:, 1::2]
        return out


def load_model(path) -> KoopmanModel:
    """Read back a model written by :func:`save_model` (bit-exact)."""
    r = _ModelReader(Path(path))
    magic = r.next_line()
    if magic.strip() != "kdmd-model 1":
        r.fail(f"not a model file (first line {magic!r})")
    kind = r.keyword("kernel")[0]
    mu = float(r.keyword("mu")[0])
    degree = int(r.keyword("degree")[0])
    offset = float(r.keyword("offset")[0])
    pol_kind = r.keyword("policy")[0]
    lam = float(r.keyword("tikhonov_lambda")[0])
    rtol = float(r.keyword("svd_rtol")[0])
    n = int(r.keyword("state_dim")[0])
    p = int(r.keyword("num_modes")[0])
    try:
        kernel = KernelSpec(kind=kind, mu=mu, degree=degree, offset=offset)
        policy = RegularizationPolicy(kind=pol_kind, tikhonov_lambda=lam, svd_rtol=rtol)
    except ValueError as exc:
        r.fail(str(exc))
    r.keyword("first_center")
    first_center = np.array(r.floats(n))
    r.keyword("centers")
    centers = r.real_matrix(n, p)
    r.keyword("gram")
    gram_m = r.real_matrix(p, p)
    r.keyword("rep")
    rep = r.real_matrix(p, p)
    r.keyword("lambdas")
    lam_rows = np.array([r.floats(2) for _ in range(p)])
    lambdas = np.empty(p, dtype=complex)
    lambdas.real = lam_rows[:, 0]
    lambdas.imag = lam_rows[:, 1]
    r.keyword("eigvecs")
    eigvecs = r.complex_matrix(p, p)
    r.keyword("modes")
    modes_m = r.complex_matrix(n, p)
    try:
        return KoopmanModel(
            kernel=kernel,
            centers=centers,
            gram=gram_m,
            rep=rep,
            lambdas=lambdas,
            eigvecs=eigvecs,
            modes=modes_m,
            policy=policy,
            first_center=first_center,
        )
    except ValueError as exc:
        raise ModelFormatError(f"{r.path}: inconsistent contents: {exc}") from exc


# ---------------------------------------------------------------------------
# gridded fields


@dataclass(frozen=True)
class FieldGrid:
    """Maps a flattened field state vector onto an ``ny``-by-``nx`` image.

    ``row_major=True`` means entry ``iy*nx + ix`` of the state is pixel
    ``(ix, iy)``; ``False`` means the state is column-major (``ix*ny + iy``).
    """

    nx: int
    ny: int
    row_major: bool = True

    def __post_init__(self) -> None:
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def frame(self, state) -> np.ndarray:
        """Reshape one state vector into an (ny, nx) image array."""
        v = np.asarray(state, dtype=float).reshape(-1)
        if v.size != self.size:
            raise ValueError(
                f"state has {v.size} entries, grid {self.nx}x{self.ny} needs {self.size}"
            )
        if self.row_major:
            return v.reshape((self.ny, self.nx))
        return v.reshape((self.ny, self.nx), order="F")


def write_pgm(path, frame) -> None:
    """Write a 2-D array as an 8-bit binary PGM (P5), min-max scaled.

    A constant frame maps to all-black; scaling is per frame.
    """
    f = np.atleast_2d(np.asarray(frame, dtype=float))
    if f.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {f.shape}")
    if not np.isfinite(f).all():
        raise ValueError("frame contains non-finite values")
    lo, hi = float(f.min()), float(f.max())
    if hi > lo:
        img = np.round((f - lo) / (hi - lo) * 255.0)
    else:
        img = np.zeros_like(f)
    data = img.clip(0, 255).astype(np.uint8)
    header = f"P5\n{f.shape[1]} {f.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())
