"""Thin-plate-spline solving, evaluation, and bending energy.

A transform maps normalized 2-D points through an affine part plus a radial
basis expansion:

    F_d(p) = a_d0 * x + a_d1 * y + a_d2 + sum_i w_id * U(|p - c_i|)

with the surface-spline kernel U(r) = r^2 * log(r^2) and U(0) = 0.  Solving
interpolates one 2-D value per constraint point while minimizing integrated
squared curvature; the regularized system trades exact interpolation for
smoothness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, SingularSystemError

# Default ridge term: 1e-8 times the squared mean pairwise distance between
# constraint points, so behaviour does not depend on coordinate scale.
DEFAULT_REGULARIZATION_SCALE = 1e-8

# Condition-number ceiling beyond which the solve is reported as singular
# rather than returning digits that are mostly noise.
_MAX_CONDITION = 1e12

# The curvature integral of U(r) = r^2 log(r^2) over the plane reduces to a
# quadratic form in the weights scaled by this constant (U is 16*pi times the
# fundamental solution of the biharmonic operator).
_BENDING_SCALE = 16.0 * math.pi

_SIDE_CONDITION_TOL = 1e-8


def rbf_u(r):
    """Radial kernel U(r) = r^2 * log(r^2), with U(0) defined as 0.

    Accepts a scalar or an array of radii; radii must be non-negative.
    """
    arr = np.asarray(r, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("radius must be non-negative")
    r2 = arr * arr
    r2 = np.where(r2 == 0.0, 1.0, r2)  # log(1) = 0 gives U(0) = 0 exactly
    out = r2 * np.log(r2)
    if np.isscalar(r) or arr.ndim == 0:
        return float(out)
    return out


def _u_from_r2(r2: np.ndarray) -> np.ndarray:
    """U evaluated from squared radii, in place where possible."""
    r2[r2 == 0.0] = 1.0
    out = np.log(r2)
    out *= r2
    return out


@dataclass(frozen=True, eq=False)
class TpsTransform:
    """A solved thin-plate-spline map from normalized points to normalized points.

    Attributes
    ----------
    affine : np.ndarray
        (2, 3) matrix; row d holds (coefficient of x, coefficient of y,
        constant) for output dimension d.
    weights : np.ndarray
        (n, 2) radial weights, one column per output dimension.
    centers : np.ndarray
        (n, 2) the constraint points the radial terms are anchored at.
    regularization : float
        The ridge value the system was solved with.
    """

    affine: np.ndarray
    weights: np.ndarray
    centers: np.ndarray
    regularization: float

    def __post_init__(self) -> None:
        affine = np.asarray(self.affine, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        centers = np.asarray(self.centers, dtype=np.float64)
        if affine.shape != (2, 3):
            raise ValueError(f"affine must have shape (2, 3), got {affine.shape}")
        if weights.ndim != 2 or weights.shape[1] != 2:
            raise ValueError(f"weights must have shape (n, 2), got {weights.shape}")
        if centers.shape != weights.shape:
            raise ValueError(
                f"centers shape {centers.shape} does not match weights shape {weights.shape}"
            )
        for arr in (affine, weights, centers):
            if not np.all(np.isfinite(arr)):
                raise ValueError("transform coefficients must be finite")
            arr.setflags(write=False)
        if not isinstance(self.regularization, float):
            object.__setattr__(self, "regularization", float(self.regularization))
        if not (self.regularization >= 0.0 and math.isfinite(self.regularization)):
            raise ValueError(f"regularization must be finite and >= 0, got {self.regularization}")
        object.__setattr__(self, "affine", affine)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "centers", centers)

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def side_condition_residual(self) -> float:
        """Largest violation of the zero-sum and zero-moment weight conditions.

        A properly solved transform satisfies sum(w) = 0 and sum(w * x) =
        sum(w * y) = 0 per output dimension, which is what makes the radial
        part decay to affine at infinity.
        """
        sums = self.weights.sum(axis=0)
        moments = self.centers.T @ self.weights
        return float(max(np.abs(sums).max(), np.abs(moments).max()))


def _pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def solve_tps(points, values, regularization: float | None = None) -> TpsTransform:
    """Solve for the transform interpolating ``points -> values``.

    Parameters
    ----------
    points : array_like
        (n, 2) constraint locations in normalized coordinates, n >= 3.
    values : array_like
        (n, 2) target locations, one per constraint point.
    regularization : float, optional
        Ridge term added to the kernel block diagonal.  ``None`` selects
        ``1e-8 * (mean pairwise distance)**2``; pass ``0.0`` for exact
        interpolation.

    Raises
    ------
    GeometryError
        For fewer than 3 points or (near-)duplicate constraint points.
    SingularSystemError
        When the system is too ill-conditioned to solve, e.g. for collinear
        constraints.  Raising the regularization usually helps.
    """
    pts = np.asarray(points, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
    if vals.shape != pts.shape:
        raise ValueError(f"values shape {vals.shape} does not match points shape {pts.shape}")
    if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
        raise ValueError("points and values must be finite")
    n = pts.shape[0]
    if n < 3:
        raise GeometryError(f"need at least 3 constraint points, got {n}")

    sq = _pairwise_sq_dists(pts)
    off_diag = ~np.eye(n, dtype=bool)
    min_dist = math.sqrt(float(sq[off_diag].min()))
    if min_dist <= 1e-9:
        raise GeometryError(
            f"constraint points are not distinct (closest pair {min_dist:.3e} apart)"
        )
    if regularization is None:
        mean_dist = float(np.sqrt(sq[off_diag]).mean())
        regularization = DEFAULT_REGULARIZATION_SCALE * mean_dist * mean_dist
    regularization = float(regularization)
    if not (regularization >= 0.0 and math.isfinite(regularization)):
        raise ValueError(f"regularization must be finite and >= 0, got {regularization}")

    kernel = _u_from_r2(sq.copy())
    np.fill_diagonal(kernel, regularization)

    size = n + 3
    system = np.zeros((size, size), dtype=np.float64)
    system[:n, :n] = kernel
    system[:n, n] = 1.0
    system[:n, n + 1] = pts[:, 0]
    system[:n, n + 2] = pts[:, 1]
    system[n, :n] = 1.0
    system[n + 1, :n] = pts[:, 0]
    system[n + 2, :n] = pts[:, 1]

    rhs = np.zeros((size, 2), dtype=np.float64)
    rhs[:n] = vals

    condition = np.linalg.cond(system)
    if not math.isfinite(condition) or condition > _MAX_CONDITION:
        raise SingularSystemError(
            f"interpolation system is singular or near-singular (condition {condition:.3e}); "
            "check for collinear landmarks or raise the regularization"
        )
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"interpolation system could not be solved: {exc}") from exc
    if not np.all(np.isfinite(solution)):
        raise SingularSystemError("interpolation solve produced non-finite coefficients")

    weights = solution[:n]
    poly = solution[n:]
    affine = np.empty((2, 3), dtype=np.float64)
    affine[:, 0] = poly[1]
    affine[:, 1] = poly[2]
    affine[:, 2] = poly[0]

    transform = TpsTransform(
        affine=affine, weights=weights, centers=pts.copy(), regularization=regularization
    )
    residual = transform.side_condition_residual()
    if residual > _SIDE_CONDITION_TOL:
        raise SingularSystemError(
            f"solved weights violate the side conditions by {residual:.3e}; "
            "the system is numerically unreliable"
        )
    return transform


def _eval_arrays(
    transform: TpsTransform, px: np.ndarray, py: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the transform at contiguous coordinate arrays.

    Shared by point evaluation and field rasterization so both produce
    bit-identical results.  px and py must be contiguous float64 1-D arrays.
    """
    cx = np.ascontiguousarray(transform.centers[:, 0])
    cy = np.ascontiguousarray(transform.centers[:, 1])
    dx = px[:, None] - cx[None, :]
    dy = py[:, None] - cy[None, :]
    np.multiply(dx, dx, out=dx)
    np.multiply(dy, dy, out=dy)
    r2 = dx
    r2 += dy
    del dx, dy
    u = _u_from_r2(r2)
    bend = u @ transform.weights

    a = transform.affine
    fx = a[0, 0] * px
    fx += a[0, 1] * py
    fx += a[0, 2]
    fx += bend[:, 0]
    fy = a[1, 0] * px
    fy += a[1, 1] * py
    fy += a[1, 2]
    fy += bend[:, 1]
    return fx, fy


def eval_tps(transform: TpsTransform, points) -> np.ndarray:
    """Apply the transform to an (m, 2) array of normalized points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (m, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    fx, fy = _eval_arrays(transform, px, py)
    out = np.empty_like(pts)
    out[:, 0] = fx
    out[:, 1] = fy
    return out


def bending_energy(transform: TpsTransform) -> float:
    """Integrated squared curvature of the transform over the plane.

    Equals ``16 * pi * sum_d w_d.T K w_d`` where K is the kernel matrix of
    the centers; the affine part contributes nothing.  Non-negative up to
    round-off for weights satisfying the side conditions.
    """
    kernel = _u_from_r2(_pairwise_sq_dists(transform.centers))
    w = transform.weights
    quad = float(np.einsum("id,ij,jd->", w, kernel, w))
    return _BENDING_SCALE * quad
