"""Scale-stable whitening transforms (ZCA-cor and Cholesky).

A whitening matrix W for a covariance S satisfies W S W^T = I.  The
ZCA-cor construction W = P^{-1/2} V^{-1/2} (correlation inverse square
root times inverse standard deviations) and the Cholesky construction
W = L^{-1} are both scale stable: rescaling any input coordinate by a
positive constant leaves the whitened variables unchanged.  ZCA-cor is
the package default; Cholesky is provided for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateCoordinate, DimensionMismatch, NearSingular
from .measures import (
    VARIANCE_FLOOR,
    EmpiricalMeasure,
    GaussianMeasure,
    correlation_from_covariance,
    estimate_covariance,
    estimate_mean,
    spd_inv_sqrt,
)

# Tolerance for the defining identity W S W^T = I.
WHITEN_TOL = 1e-8

PROCESSES = ("zca_cor", "cholesky", "identity")


@dataclass(frozen=True)
class WhiteningMatrix:
    """A whitening matrix together with the moments it was built from."""

    matrix: np.ndarray
    process: str
    source_mean: np.ndarray
    source_covariance: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.matrix, dtype=float)).copy()
        mu = np.asarray(self.source_mean, dtype=float).ravel().copy()
        cov = np.atleast_2d(np.asarray(self.source_covariance, dtype=float)).copy()
        if self.process not in PROCESSES:
            raise ValueError(f"unknown whitening process {self.process!r}")
        if w.shape[0] != w.shape[1] or w.shape[0] != mu.shape[0]:
            raise DimensionMismatch("whitening matrix and moments disagree in shape")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", w)
        object.__setattr__(self, "source_mean", mu)
        object.__setattr__(self, "source_covariance", cov)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_whitens(w: np.ndarray, cov: np.ndarray) -> None:
    d = w.shape[0]
    resid = w @ cov @ w.T - np.eye(d)
    if np.max(np.abs(resid)) > WHITEN_TOL:
        raise NearSingular(
            f"whitening identity violated by {np.max(np.abs(resid)):.2e}"
        )


def zca_cor_whitening(mean, covariance) -> WhiteningMatrix:
    """ZCA-cor whitening W = P^{-1/2} V^{-1/2} from given moments."""
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    var = np.diag(cov)
    for i, v in enumerate(var):
        if v <= VARIANCE_FLOOR:
            raise DegenerateCoordinate(i)
    corr = correlation_from_covariance(cov)
    w = spd_inv_sqrt(corr) / np.sqrt(var)[None, :]
    _check_whitens(w, cov)
    return WhiteningMatrix(w, "zca_cor", mean, cov)


def cholesky_whitening(mean, covariance) -> WhiteningMatrix:
    """Cholesky whitening W = L^{-1} with L the lower factor of the covariance."""
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    try:
        lower = scipy.linalg.cholesky(cov, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NearSingular(f"Cholesky factorisation failed: {exc}") from None
    w = scipy.linalg.solve_triangular(lower, np.eye(cov.shape[0]), lower=True)
    _check_whitens(w, cov)
    return WhiteningMatrix(w, "cholesky", mean, cov)


def identity_whitening(mean) -> WhiteningMatrix:
    """Explicit identity whitening for degenerate (Dirac-like) measures.

    Never chosen automatically; callers opt in when a measure has no
    invertible covariance but the surrounding computation is still
    meaningful (for example a point mass in already-whitened space).
    """
    mean = np.asarray(mean, dtype=float).ravel()
    d = mean.shape[0]
    return WhiteningMatrix(np.eye(d), "identity", mean, np.eye(d))


def whitening_from_measure(m, process: str = "zca_cor") -> WhiteningMatrix:
    """Build a whitening matrix from a measure's own moments."""
    if isinstance(m, EmpiricalMeasure):
        mean, cov = estimate_mean(m), estimate_covariance(m)
    elif isinstance(m, GaussianMeasure):
        mean, cov = m.mean, m.covariance
    else:
        raise TypeError("expected an EmpiricalMeasure or GaussianMeasure")
    if process == "zca_cor":
        return zca_cor_whitening(mean, cov)
    if process == "cholesky":
        return cholesky_whitening(mean, cov)
    if process == "identity":
        return identity_whitening(mean)
    raise ValueError(f"unknown whitening process {process!r}")


def whiten_empirical(m: EmpiricalMeasure, w: WhiteningMatrix) -> EmpiricalMeasure:
    """Map every point x to W x; weights are unchanged."""
    if m.dim != w.dim:
        raise DimensionMismatch(
            f"measure dimension {m.dim} != whitening dimension {w.dim}"
        )
    return EmpiricalMeasure(points=m.points @ w.matrix.T, weights=m.weights)


def whiten_gaussian(g: GaussianMeasure, w: WhiteningMatrix) -> GaussianMeasure:
    """Whiten a Gaussian: mean W m, covariance the identity by construction.

    W must have been built from g's own covariance; this is verified and
    the output covariance is then set to the exact identity.
    """
    if g.dim != w.dim:
        raise DimensionMismatch(
            f"Gaussian dimension {g.dim} != whitening dimension {w.dim}"
        )
    _check_whitens(w.matrix, g.covariance)
    return GaussianMeasure(mean=w.matrix @ g.mean, covariance=np.eye(g.dim))
