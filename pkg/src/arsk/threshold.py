"""Soft and SCAD thresholding operators (scalar and row-group) and penalty values.

The scalar operators act elementwise on arrays as well as on plain floats.
The group operators shrink a whole vector along its own direction, which is
what produces exact all-zero rows in the error matrix.
"""
import numpy as np

from .exceptions import InvalidParameterError
from .model import PenaltySpec, LASSO, SCAD

DEFAULT_A = 3.7


def _check_lambda(lam):
    if not lam >= 0:
        raise InvalidParameterError(f"lambda must be nonnegative, got {lam!r}")


def _check_a(a):
    if not a > 2:
        raise InvalidParameterError(f"SCAD parameter a must exceed 2, got {a!r}")


def soft_scalar(x, lam):
    """Soft thresholding, the prox of ``lam * |w|``."""
    _check_lambda(lam)
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def scad_scalar(x, lam, a=DEFAULT_A):
    """SCAD thresholding, the prox of the SCAD penalty with unit curvature.

    Branches: soft threshold for ``|x| <= 2 lam``, linear interpolation
    ``((a-1) x - a lam sgn(x)) / (a-2)`` for ``2 lam < |x| < a lam`` and the
    identity beyond ``a lam``.
    """
    _check_lambda(lam)
    _check_a(a)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    sgn = np.sign(x)
    soft = sgn * np.maximum(ax - lam, 0.0)
    mid = ((a - 1.0) * x - a * lam * sgn) / (a - 2.0)
    out = np.where(ax <= 2.0 * lam, soft, np.where(ax < a * lam, mid, x))
    return float(out) if out.ndim == 0 else out


def _group_factor_soft(norm, lam):
    if norm <= lam or norm == 0.0:
        return 0.0
    return 1.0 - lam / norm


def _group_factor_scad(norm, lam, a):
    if norm <= 2.0 * lam:
        return _group_factor_soft(norm, lam)
    if norm <= a * lam:
        return (a - 1.0) / (a - 2.0) * _group_factor_soft(norm, a * lam / (a - 1.0))
    return 1.0


def soft_group(z, lam):
    """Multivariate soft threshold ``z * max(0, 1 - lam / ||z||)``.

    A zero vector maps to zero for every ``lam``.
    """
    _check_lambda(lam)
    z = np.asarray(z, dtype=float)
    return _group_factor_soft(float(np.linalg.norm(z)), lam) * z


def scad_group(z, lam, a=DEFAULT_A):
    """Multivariate SCAD threshold.

    ``soft_group(z, lam)`` while ``||z|| <= 2 lam``, then
    ``(a-1)/(a-2) * soft_group(z, a lam/(a-1))`` up to ``a lam`` and the
    identity past it.  Boundary ties go to the lower branch.
    """
    _check_lambda(lam)
    _check_a(a)
    z = np.asarray(z, dtype=float)
    return _group_factor_scad(float(np.linalg.norm(z)), lam, a) * z


def group_threshold_rows(R, spec):
    """Apply the group operator of `spec` to every row of `R`."""
    R = np.asarray(R, dtype=float)
    norms = np.sqrt(np.einsum("ij,ij->i", R, R))
    return row_factors(norms, spec)[:, None] * R


def row_factors(norms, spec):
    """Shrink factors in [0, (a-1)/(a-2)] for a vector of row norms."""
    lam = spec.lam
    norms = np.asarray(norms, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        soft = np.where(norms > lam, 1.0 - lam / norms, 0.0)
        if spec.kind == LASSO:
            return soft
        a = spec.a
        lam2 = a * lam / (a - 1.0)
        mid = (a - 1.0) / (a - 2.0) * np.where(norms > lam2, 1.0 - lam2 / norms, 0.0)
    return np.where(norms <= 2.0 * lam, soft, np.where(norms <= a * lam, mid, 1.0))


def scalar_threshold(x, spec):
    """Elementwise thresholding of `x` with the scalar operator of `spec`."""
    if spec.kind == LASSO:
        return soft_scalar(x, spec.lam)
    return scad_scalar(x, spec.lam, spec.a)


def penalty_value(spec, v):
    """Penalty ``P(v; lam)`` for a nonnegative magnitude `v`.

    `v` is ``|w_j|`` for the weight penalty or a row norm of the error
    matrix for the group penalty; both share the same scalar profile.
    """
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise InvalidParameterError("penalty argument must be nonnegative")
    lam = spec.lam
    if spec.kind == LASSO:
        out = lam * v_arr
    else:
        a = spec.a
        out = np.where(
            v_arr <= lam,
            lam * v_arr,
            np.where(
                v_arr <= a * lam,
                -(v_arr ** 2 - 2.0 * a * lam * v_arr + lam ** 2) / (2.0 * (a - 1.0)),
                (a + 1.0) * lam ** 2 / 2.0,
            ),
        )
    return float(out) if out.ndim == 0 else out


__all__ = [
    "DEFAULT_A",
    "PenaltySpec",
    "SCAD",
    "LASSO",
    "soft_scalar",
    "scad_scalar",
    "soft_group",
    "scad_group",
    "group_threshold_rows",
    "row_factors",
    "scalar_threshold",
    "penalty_value",
]
