"""Moment estimation, SPD matrix functions and seeded Gaussian sampling.

Conventions used throughout the package:

* empirical moments are population moments, i.e. weighted by the
  probability weights themselves with no Bessel correction.  This keeps
  the rescaling algebra exact: cov(Q X) = Q cov(X) Q holds to rounding
  error for any diagonal Q.
* symmetric eigendecompositions use a deterministic sign convention
  (largest-magnitude component of each eigenvector is positive), so
  whitening matrices are reproducible across runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataFormatError,
    DegenerateCoordinate,
    DimensionMismatch,
    NearSingular,
)

# Relative eigenvalue floor below which inverse square roots refuse to run.
EIG_FLOOR = 1e-12
# Absolute variance floor below which a coordinate counts as degenerate.
VARIANCE_FLOOR = 1e-300
# Allowed deviation of the weight sum from one.
WEIGHT_TOL = 1e-12


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError("points must be a 1-D or 2-D array")
    return pts


@dataclass(frozen=True)
class EmpiricalMeasure:
    """A weighted point cloud standing in for a probability measure.

    ``points`` is N x d (rows are observations, units arbitrary per
    column); ``weights`` is a length-N nonnegative vector summing to one.
    Omitting ``weights`` gives the uniform measure.  Instances are
    immutable and safe to share between threads.
    """

    points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = _as_points(self.points)
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("need at least one point in at least one dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape[0] != pts.shape[0]:
                raise ValueError("weights length does not match point count")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and nonnegative")
            if abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise ValueError("weights must sum to one within 1e-12")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.n_points, rtol=0, atol=1e-15))


@dataclass(frozen=True)
class GaussianMeasure:
    """A Gaussian law given by its mean vector and covariance matrix."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).ravel()
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be square")
        if cov.shape[0] != m.shape[0]:
            raise DimensionMismatch("mean and covariance dimensions disagree")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(cov))):
            raise ValueError("Gaussian moments contain non-finite entries")
        if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("covariance is not symmetric within 1e-10")
        lam = np.linalg.eigvalsh(0.5 * (cov + cov.T))
        if lam[0] < -1e-9 * max(1.0, lam[-1]):
            raise ValueError("covariance has a negative eigenvalue")
        m = m.copy()
        cov = cov.copy()
        m.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class SpdFactorization:
    """Eigendecomposition of a symmetric PSD matrix.

    Eigenvalues are sorted descending; eigenvectors are the matching
    columns with the deterministic sign convention described in the
    module docstring.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        g = self.eigenvectors
        return (g * self.eigenvalues) @ g.T


def spd_factorize(a: np.ndarray) -> SpdFactorization:
    """Symmetric eigendecomposition with deterministic eigenvector signs."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not symmetric within 1e-10")
    lam, vec = np.linalg.eigh(0.5 * (a + a.T))
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vec = vec[:, order]
    # sign convention: largest-|component| entry of each column positive
    idx = np.argmax(np.abs(vec), axis=0)
    signs = np.sign(vec[idx, np.arange(vec.shape[1])])
    signs[signs == 0] = 1.0
    vec = vec * signs
    return SpdFactorization(eigenvalues=lam, eigenvectors=vec)


def estimate_mean(m: EmpiricalMeasure) -> np.ndarray:
    """Weighted mean of the point cloud."""
    return m.weights @ m.points


def estimate_covariance(m: EmpiricalMeasure) -> np.ndarray:
    """Population-weighted covariance (normalised by total weight one)."""
    mu = estimate_mean(m)
    centred = m.points - mu
    return (centred * m.weights[:, None]).T @ centred


def estimate_correlation(m: EmpiricalMeasure) -> np.ndarray:
    """Correlation matrix of the point cloud.

    Raises DegenerateCoordinate for any coordinate whose variance is
    at or below the absolute floor.
    """
    cov = estimate_covariance(m)
    return correlation_from_covariance(cov)


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    var = np.diag(cov)
    for i, v in enumerate(var):
        if v <= VARIANCE_FLOOR:
            raise DegenerateCoordinate(i)
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def spd_sqrt(a: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix."""
    fac = spd_factorize(a)
    lam = fac.eigenvalues
    scale = max(lam[0], 0.0)
    if lam[-1] < -1e-9 * max(1.0, scale):
        raise NearSingular("matrix has a significantly negative eigenvalue")
    lam = np.maximum(lam, 0.0)
    g = fac.eigenvectors
    return (g * np.sqrt(lam)) @ g.T


def spd_inv_sqrt(a: np.ndarray) -> np.ndarray:
    """Inverse principal square root; refuses near-singular input."""
    fac = spd_factorize(a)
    lam = fac.eigenvalues
    if lam[0] <= 0 or lam[-1] <= EIG_FLOOR * lam[0]:
        raise NearSingular(
            f"eigenvalue ratio {lam[-1]:.3e}/{lam[0]:.3e} below floor {EIG_FLOOR:g}"
        )
    g = fac.eigenvectors
    return (g / np.sqrt(lam)) @ g.T


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Left factor L with L L^T = cov; Cholesky with eigen fallback for PSD."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        fac = spd_factorize(cov)
        lam = np.maximum(fac.eigenvalues, 0.0)
        return fac.eigenvectors * np.sqrt(lam)


def sample_gaussian(g: GaussianMeasure, n: int, seed: int) -> EmpiricalMeasure:
    """Draw n i.i.d. points; identical seeds give bitwise identical output."""
    if n < 1:
        raise ValueError("need n >= 1 draws")
    factor = _psd_factor(g.covariance)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, g.dim))
    return EmpiricalMeasure(points=g.mean + z @ factor.T)


def gaussian_from_empirical(m: EmpiricalMeasure) -> GaussianMeasure:
    """Gaussian with the sample's own (population) moments."""
    return GaussianMeasure(mean=estimate_mean(m), covariance=estimate_covariance(m))


def load_measure_csv(path) -> tuple[EmpiricalMeasure, list[str]]:
    """Read a point cloud from CSV: header row, one observation per row.

    An optional final column named ``__weight`` carries nonnegative raw
    weights, which are normalised to sum to one.  Parsing is strict: a
    non-numeric cell is fatal, reported with its row and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise DataFormatError(f"{path}: blank column name in header", row=1)
        has_weight = header[-1] == "__weight"
        ncol = len(header)
        rows: list[list[float]] = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != ncol:
                raise DataFormatError(
                    f"{path}: row {lineno} has {len(raw)} cells, expected {ncol}",
                    row=lineno,
                )
            vals = []
            for colno, cell in enumerate(raw, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, "
                        f"column {colno} ({header[colno - 1]})",
                        row=lineno,
                        column=colno,
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if has_weight:
        w = data[:, -1]
        if np.any(w < 0):
            raise DataFormatError(f"{path}: negative __weight entry")
        total = w.sum()
        if total <= 0:
            raise DataFormatError(f"{path}: __weight column sums to zero")
        measure = EmpiricalMeasure(points=data[:, :-1], weights=w / total)
        return measure, header[:-1]
    return EmpiricalMeasure(points=data), header


def write_matrix_csv(path, header: list[str], rows: np.ndarray) -> None:
    """Write a numeric matrix as CSV with 17 significant digits."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") for v in row])
