"""Sample ingestion, histogram building, zero imputation and file formats.

CSV conventions
---------------
* samples: two numeric columns ``x,y``; an optional header row; ``NA``
  (or ``NaN`` / empty) cells drop the row, and dropped rows are counted.
* histograms and grids: a header row of x-midpoints, a header column of
  y-midpoints, and the numeric body (one row per y value).
* coefficient blocks: ``#``-prefixed header lines carrying the basis
  configuration (degrees, domains, interior knots), then the matrix
  body. Values are emitted with 17 significant digits so read/write
  round-trips are lossless at that precision.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .clr import HistogramGrid
from .exceptions import ParseError
from .knots import KnotConfig
from .smoother import BCoeffs, TensorBasisSpec, ZBCoeffs

__all__ = [
    "SampleSet",
    "build_histogram",
    "impute_zeros",
    "read_samples",
    "write_samples",
    "read_histogram",
    "write_histogram",
    "read_grid",
    "write_grid",
    "read_coeffs",
    "write_coeffs",
    "write_vector_block",
]

_NA_TOKENS = {"", "na", "nan"}
_FMT = "%.17g"


@dataclass(eq=False)
class SampleSet:
    """Raw bivariate observations plus their declared domain.

    ``x_range`` / ``y_range`` of None means the domain is resolved from
    the data when a histogram is built.
    """

    points: np.ndarray
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    n_dropped_na: int = 0
    accept_rate: float | None = None
    n_proposed: int | None = None

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {self.points.shape}")


def build_histogram(samples: SampleSet, m: int, n: int) -> HistogramGrid:
    """Aggregate samples into an ``m`` by ``n`` equispaced histogram.

    The final class on each axis is right-closed, so points exactly on
    the upper domain corner are retained. Out-of-range points are
    dropped, counted in ``n_dropped`` and reported with a warning.
    Zero frequencies are allowed here; see `impute_zeros`.
    """
    if m < 2 or n < 2:
        raise ValueError(f"need at least 2 classes per axis, got ({m}, {n})")
    if samples.points.shape[0] == 0:
        raise ValueError("cannot build a histogram from an empty sample set")
    xs, ys = samples.points[:, 0], samples.points[:, 1]
    x_lo, x_hi = samples.x_range if samples.x_range else (xs.min(), xs.max())
    y_lo, y_hi = samples.y_range if samples.y_range else (ys.min(), ys.max())
    if not (x_lo < x_hi and y_lo < y_hi):
        raise ValueError("degenerate histogram range")
    x_edges = np.linspace(x_lo, x_hi, m + 1)
    y_edges = np.linspace(y_lo, y_hi, n + 1)
    freq, _, _ = np.histogram2d(xs, ys, bins=(x_edges, y_edges))
    dropped = samples.points.shape[0] - int(freq.sum())
    if dropped:
        warnings.warn(f"{dropped} points outside the declared range were dropped")
    return HistogramGrid(
        x_mid=0.5 * (x_edges[:-1] + x_edges[1:]),
        y_mid=0.5 * (y_edges[:-1] + y_edges[1:]),
        freq=freq,
        x_width=float(x_edges[1] - x_edges[0]),
        y_width=float(y_edges[1] - y_edges[0]),
        n_dropped=dropped,
    )


_NEIGHBOR_OFFSETS = {
    8: [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)],
    4: [(-1, 0), (1, 0), (0, -1), (0, 1)],
}


def impute_zeros(hist: HistogramGrid, neighborhood: int = 8) -> HistogramGrid:
    """Replace zero bins by scaled geometric means of positive neighbors.

    Each pass replaces every zero bin having at least one positive
    neighbor with the geometric mean of its positive neighbors times
    2/3; replacement values are computed from the previous pass's state,
    so the result is independent of traversal order. Passes repeat until
    no zeros remain. Positive bins are never touched.
    """
    if neighborhood not in _NEIGHBOR_OFFSETS:
        raise ValueError("neighborhood must be 4 or 8")
    freq = hist.freq.copy()
    if not np.any(freq > 0):
        raise ValueError("cannot impute an all-zero histogram")
    offsets = _NEIGHBOR_OFFSETS[neighborhood]
    m, n = freq.shape
    for _ in range(m * n):
        zeros = freq == 0
        if not zeros.any():
            break
        log_sum = np.zeros_like(freq)
        pos_count = np.zeros_like(freq)
        positive = freq > 0
        padded_log = np.zeros((m + 2, n + 2))
        padded_pos = np.zeros((m + 2, n + 2))
        padded_log[1:-1, 1:-1] = np.log(freq, where=positive, out=np.zeros_like(freq))
        padded_pos[1:-1, 1:-1] = positive
        for di, dj in offsets:
            log_sum += padded_log[1 + di : 1 + di + m, 1 + dj : 1 + dj + n]
            pos_count += padded_pos[1 + di : 1 + di + m, 1 + dj : 1 + dj + n]
        fill = zeros & (pos_count > 0)
        if not fill.any():
            raise ValueError("imputation stalled: zero bins with no positive neighbors")
        freq[fill] = (2.0 / 3.0) * np.exp(log_sum[fill] / pos_count[fill])
    return replace(hist, freq=freq)


# ---------------------------------------------------------------------------
# CSV helpers


def _parse_float(token: str, row: int, col: int, path: Path) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(
            f"{path}: non-numeric value {token!r} at row {row}, column {col}"
        ) from None


def read_samples(path) -> SampleSet:
    """Read an ``x,y`` samples CSV, dropping and counting NA rows."""
    path = Path(path)
    points: list[tuple[float, float]] = []
    dropped = 0
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    seen_data = False
    for idx, raw in enumerate(rows):
        cells = [tok.strip() for tok in raw]
        if not cells or all(tok == "" for tok in cells):
            continue
        if not seen_data:
            seen_data = True
            try:
                float(cells[0])
            except ValueError:
                if cells[0].lower() not in _NA_TOKENS:
                    continue  # header row
        if any(tok.lower() in _NA_TOKENS for tok in cells[:2]):
            dropped += 1
            continue
        if len(cells) < 2:
            raise ParseError(f"{path}: expected two columns at row {idx + 1}")
        points.append(
            (
                _parse_float(cells[0], idx + 1, 1, path),
                _parse_float(cells[1], idx + 1, 2, path),
            )
        )
    if not points:
        raise ParseError(f"{path}: no usable sample rows")
    return SampleSet(np.asarray(points), n_dropped_na=dropped)


def write_samples(path, samples: SampleSet) -> None:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y"])
        for row in samples.points:
            writer.writerow([_FMT % row[0], _FMT % row[1]])


def write_grid(path, x, y, values) -> None:
    """Write a grid CSV: header row of x values, header column of y values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = np.asarray(values, dtype=float)
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([""] + [_FMT % v for v in x])
        for j in range(y.size):
            writer.writerow([_FMT % y[j]] + [_FMT % v for v in values[:, j]])


def read_grid(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a grid CSV; returns ``(x, y, values)`` with values shaped (m, n)."""
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2 or len(rows[0]) < 2:
        raise ParseError(f"{path}: not a grid CSV")
    x = np.array([_parse_float(tok, 1, c + 2, path) for c, tok in enumerate(rows[0][1:])])
    y = np.empty(len(rows) - 1)
    values = np.empty((x.size, y.size))
    for j, row in enumerate(rows[1:]):
        if len(row) != x.size + 1:
            raise ParseError(f"{path}: row {j + 2} has {len(row)} cells, expected {x.size + 1}")
        y[j] = _parse_float(row[0], j + 2, 1, path)
        for i, tok in enumerate(row[1:]):
            values[i, j] = _parse_float(tok, j + 2, i + 2, path)
    return x, y, values


def write_histogram(path, hist: HistogramGrid) -> None:
    write_grid(path, hist.x_mid, hist.y_mid, hist.freq)


def read_histogram(path) -> HistogramGrid:
    x_mid, y_mid, freq = read_grid(path)
    if x_mid.size < 2 or y_mid.size < 2:
        raise ParseError(f"{path}: histogram needs at least 2 classes per axis")
    return HistogramGrid(
        x_mid=x_mid,
        y_mid=y_mid,
        freq=freq,
        x_width=float(x_mid[1] - x_mid[0]),
        y_width=float(y_mid[1] - y_mid[0]),
    )


# ---------------------------------------------------------------------------
# coefficient blocks


def _spec_header(spec: TensorBasisSpec, kind: str) -> list[str]:
    return [
        f"# kind={kind}",
        f"# g={spec.x.n_interior} h={spec.y.n_interior} k={spec.x.degree} l={spec.y.degree}",
        "# x_domain=" + ",".join(_FMT % v for v in (spec.x.lo, spec.x.hi)),
        "# x_interior=" + ",".join(_FMT % v for v in spec.x.interior),
        "# y_domain=" + ",".join(_FMT % v for v in (spec.y.lo, spec.y.hi)),
        "# y_interior=" + ",".join(_FMT % v for v in spec.y.interior),
    ]


def _write_block(path, spec: TensorBasisSpec, matrix: np.ndarray, kind: str) -> None:
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = _spec_header(spec, kind)
    for row in matrix:
        lines.append(",".join(_FMT % v for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_coeffs(path, spec: TensorBasisSpec, coeffs) -> None:
    """Write a coefficient file (packed block for the zero-integral form)."""
    if isinstance(coeffs, ZBCoeffs):
        _write_block(path, spec, coeffs.packed(), "zb")
    elif isinstance(coeffs, BCoeffs):
        _write_block(path, spec, coeffs.matrix, "b")
    else:
        raise TypeError(f"unsupported coefficient type {type(coeffs).__name__}")


def write_vector_block(path, spec: TensorBasisSpec, vector: np.ndarray, kind: str) -> None:
    """Write a single coefficient vector (e.g. one marginal) as a one-row block."""
    _write_block(path, spec, np.asarray(vector, dtype=float)[None, :], kind)


def read_coeffs(path):
    """Read a coefficient file; returns ``(spec, payload)``.

    The payload is `ZBCoeffs` for ``kind=zb``, `BCoeffs` for ``kind=b``
    and a plain array for any other block kind.
    """
    path = Path(path)
    meta: dict[str, str] = {}
    body: list[list[float]] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].strip().split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    meta[key] = value
            continue
        body.append(
            [_parse_float(tok, lineno, c + 1, path) for c, tok in enumerate(line.split(","))]
        )
    required = {"kind", "x_domain", "x_interior", "y_domain", "y_interior", "k", "l"}
    if not required <= meta.keys():
        raise ParseError(f"{path}: missing header fields {sorted(required - meta.keys())}")

    def axis(prefix: str, degree_key: str) -> KnotConfig:
        lo, hi = (float(v) for v in meta[f"{prefix}_domain"].split(","))
        interior_txt = meta[f"{prefix}_interior"]
        interior = tuple(float(v) for v in interior_txt.split(",")) if interior_txt else ()
        return KnotConfig(lo, hi, interior, int(meta[degree_key]))

    spec = TensorBasisSpec(axis("x", "k"), axis("y", "l"))
    matrix = np.asarray(body, dtype=float)
    kind = meta["kind"]
    if kind == "zb":
        if matrix.shape != (spec.n_zb_x + 1, spec.n_zb_y + 1):
            raise ParseError(
                f"{path}: block shape {matrix.shape} does not match basis "
                f"({spec.n_zb_x + 1}, {spec.n_zb_y + 1})"
            )
        return spec, ZBCoeffs.from_packed(matrix)
    if kind == "b":
        if matrix.shape != (spec.n_zb_x + 1, spec.n_zb_y + 1):
            raise ParseError(f"{path}: block shape {matrix.shape} does not match basis")
        return spec, BCoeffs(matrix)
    return spec, matrix
