"""Blowdown limits and pointed limits of the instanton families.

Three degenerations are implemented, each as a pair (limit formulas,
residual table).  The limit formulas are closed-form; the residual table
evaluates the *actual* family metric at finite scaling parameter, applies
the scaling/recombination, and reports the entrywise distance to the limit.
A limit is only trusted when its residuals decay monotonically over decades
of the parameter, so every formula here is a measured limit, not an
assumption.

1. Large-mass limit of the generalized family at fixed blowdown chart
   (u, v):  u_orig = c u, v_orig = c v with c = (M / (2 sqrt2))^(1/4).
   The leaf factor obeys the exact identity

       lam_scaled = sqrt(2 sqrt2 / M) + P,   P = (1+k) u^2 + (1-k) v^2,

   so it converges to P at rate M^(-1/2).  Collapsing the short torus
   direction gives the 3-dimensional cone-like limit ("conifold"); keeping
   both directions with an M-dependent recombination gives a 4-dimensional
   limit ("second blowdown") whose fiber determinant is exactly u^2 v^2.

2. Large-radius blowdown of the exceptional family: u_orig = M u,
   v_orig = M v, metric scaled by M^-4, second angle by M^-2.  The polytope
   factor converges to u^2 (du^2 + dv^2) at rate M^-2.

3. Unscaled pointed limit of the exceptional family along the v-axis,
   recentered at distance A: the limit is the half-plane family with the
   two momentum variables switched, and its fibers open up from tori to
   cylinders.

Conventions.  Arguments named u, v are always the blowdown-chart
coordinates; k is passed directly since the limits forget M.  The collapsed
angle in the conifold is theta = ((1+k)/2) theta^1 + ((1-k)/2) theta^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .family import BadParams, Family, InstantonParams, moment_map
from .metrics import conformal_factor, fiber_matrix
from .numerics import BoundaryTooClose, fd_gradient, fd_laplacian

SQRT2 = math.sqrt(2.0)


class SingularAxis(Exception):
    """Evaluation on the curvature-singular axis of a blowdown limit."""


def _check_k(k: float) -> None:
    if not -1.0 < k < 1.0:
        raise BadParams(f"need |k| < 1, got k = {k}")


# --------------------------------------------------------------------------
# conifold (3-dimensional) limit
# --------------------------------------------------------------------------

#: The collapsed-circle coefficient of the measured limit is exactly twice
#: the dtheta^2 coefficient carried by ConifoldMetric (the discrepancy is a
#: normalization of the collapsing angle, constant in k, measured at rate
#: M^(-1/2) over four decades).  Distances/curvatures below use the
#: ConifoldMetric normalization; only the residual table needs this factor.
CONIFOLD_FIBER_LIMIT_FACTOR = 2.0


@dataclass(frozen=True)
class ConifoldMetric:
    """g3 = conformal (du^2 + dv^2) + fiber_scalar dtheta^2."""

    k: float
    conformal: float
    fiber_scalar: float


@dataclass(frozen=True)
class ConifoldCurvature:
    """Curvature of the 3-metric: polytope sectional curvature, the Ricci
    block in (u, v, theta) coordinates, and the scalar curvature.

    Ricci of this 3-metric is *not* diagonal off the axes: it carries a
    (u,v) cross term.  All entries vanish identically at k = 0."""

    k_sigma: float
    ric_uu: float
    ric_uv: float
    ric_vv: float
    ric_theta: float
    scalar3: float


def conifold_metric(k: float, u: float, v: float) -> ConifoldMetric:
    _check_k(k)
    P = (1.0 + k) * u * u + (1.0 - k) * v * v
    if P == 0.0:
        raise SingularAxis("the conifold metric degenerates at the origin")
    scal = u * u * v * v * (u * u + v * v) / P
    return ConifoldMetric(k, P, scal)


def conifold_limit_residual(k: float, u: float, v: float,
                            M: float) -> tuple[float, float]:
    """(leaf residual, fiber residual) of the scaled generalized family at
    mass M against the conifold limit.

    The leaf residual is |lam_scaled - P| = sqrt(2 sqrt2 / M) exactly.  The
    fiber residual is the entrywise max distance of the unscaled torus
    matrix to the rank-one form S * w w^T, where w = ((1+k)/2, (1-k)/2) is
    the collapsed combination and S is the measured limit coefficient."""
    _check_k(k)
    params = InstantonParams(Family.GENERALIZED_TN, M=M, k=k)
    c = (M / (2.0 * SQRT2)) ** 0.25
    lam_scaled = conformal_factor(params, c * u, c * v) * c * c
    lim = conifold_metric(k, u, v)
    leaf_res = abs(lam_scaled - lim.conformal)

    F = np.array(fiber_matrix(params, c * u, c * v), dtype=float)
    w = np.array([(1.0 + k) / 2.0, (1.0 - k) / 2.0])
    S = CONIFOLD_FIBER_LIMIT_FACTOR * lim.fiber_scalar
    fiber_res = float(np.abs(F - S * np.outer(w, w)).max())
    return leaf_res, fiber_res


def conifold_curvatures(k: float, u: float, v: float) -> ConifoldCurvature:
    """Closed-form curvature of the conifold 3-metric.

    K_sigma has the closed form 2k((1+k)u^2 - (1-k)v^2) / P^3.  The Ricci
    entries are the actual Ricci tensor of the 3-metric, obtained by
    brute-force symbolic computation and cross-checkable against
    conifold_ricci_fd; a diagonal shortcut for this metric fails off the
    axes (see conifold_ricci_diagonal_variant)."""
    _check_k(k)
    u2, v2 = u * u, v * v
    P = (1.0 + k) * u2 + (1.0 - k) * v2
    Q = u2 + v2
    if P == 0.0 or Q == 0.0:
        raise SingularAxis("curvature blows up at the cone point")
    K = 2.0 * k * ((1.0 + k) * u2 - (1.0 - k) * v2) / P ** 3

    den = Q * Q * P * P
    ric_uu = 2.0 * k * (2.0 * k * u2 ** 3 + 3.0 * k * u2 * u2 * v2
                        - 3.0 * k * v2 ** 3 + 2.0 * u2 ** 3
                        + u2 * u2 * v2 + 2.0 * u2 * v2 * v2
                        + 3.0 * v2 ** 3) / den
    ric_uv = 2.0 * k * u * v * (3.0 * k * u2 * u2 + 4.0 * k * u2 * v2
                                + 3.0 * k * v2 * v2 + 3.0 * u2 * u2
                                - 3.0 * v2 * v2) / den
    ric_vv = -2.0 * k * (3.0 * k * u2 ** 3 - 3.0 * k * u2 * v2 * v2
                         - 2.0 * k * v2 ** 3 + 3.0 * u2 ** 3
                         + 2.0 * u2 * u2 * v2 + u2 * v2 * v2
                         + 2.0 * v2 ** 3) / den
    ric_theta = -6.0 * k * u2 * v2 * (k * u2 * u2 + k * v2 * v2
                                      + u2 * u2 - v2 * v2) / P ** 4
    scalar3 = -8.0 * k * (k * u2 * u2 - k * u2 * v2 + k * v2 * v2
                          + u2 * u2 - v2 * v2) / (Q * P ** 3)
    return ConifoldCurvature(K, ric_uu, ric_uv, ric_vv, ric_theta, scalar3)


def conifold_ricci_diagonal_variant(k: float, u: float,
                                    v: float) -> tuple[float, float, float]:
    """A diagonal shortcut for the conifold Ricci: (uu, vv, theta) entries

        ( -4 sqrt2 k / (Q P^2),  +4 sqrt2 k / (Q P^2),  -2 k (u^2 - v^2) / P^3 )

    scaled by u v.  Kept only as a reference point: it does not match the
    Ricci tensor of the conifold 3-metric (conifold_curvatures /
    conifold_ricci_fd), which is not even diagonal off the axes."""
    _check_k(k)
    u2, v2 = u * u, v * v
    P = (1.0 + k) * u2 + (1.0 - k) * v2
    Q = u2 + v2
    return (-4.0 * SQRT2 * k * u * v / (Q * P * P),
            4.0 * SQRT2 * k * u * v / (Q * P * P),
            -2.0 * k * u * v * (u2 - v2) / P ** 3)


def _g3(k: float, u: float, v: float) -> np.ndarray:
    P = (1.0 + k) * u * u + (1.0 - k) * v * v
    W = u * u * v * v * (u * u + v * v) / P
    return np.diag([P, P, W])


def _christoffel3(k: float, u: float, v: float, step: float):
    g = _g3(k, u, v)
    ginv = np.linalg.inv(g)
    dg = np.zeros((3, 3, 3))
    dg[0] = (_g3(k, u + step, v) - _g3(k, u - step, v)) / (2.0 * step)
    dg[1] = (_g3(k, u, v + step) - _g3(k, u, v - step)) / (2.0 * step)
    gam = 0.5 * (np.einsum('lm,imj->lij', ginv, dg)
                 + np.einsum('lm,jmi->lij', ginv, dg)
                 - np.einsum('lm,mij->lij', ginv, dg))
    return gam, g, ginv


def conifold_ricci_fd(k: float, u: float, v: float,
                      *, step: float = 1e-4) -> tuple[float, float, float, float]:
    """Ricci tensor of the conifold 3-metric by central finite differences
    of the Christoffel symbols: entries (uu, uv, vv, theta), O(step^2)."""
    _check_k(k)
    if u - 2.0 * step <= 0.0 or v - 2.0 * step <= 0.0:
        raise BoundaryTooClose(
            f"FD stencil at ({u}, {v}) reaches the degenerate axes")
    gam0, _, _ = _christoffel3(k, u, v, step)
    dgam = np.zeros((3, 3, 3, 3))   # dgam[m, l, i, j] = d_m Gamma^l_ij
    dgam[0] = (_christoffel3(k, u + step, v, step)[0]
               - _christoffel3(k, u - step, v, step)[0]) / (2.0 * step)
    dgam[1] = (_christoffel3(k, u, v + step, step)[0]
               - _christoffel3(k, u, v - step, step)[0]) / (2.0 * step)
    riem = (np.einsum('iljk->lkij', dgam) - np.einsum('jlik->lkij', dgam)
            + np.einsum('lim,mjk->lkij', gam0, gam0)
            - np.einsum('ljm,mik->lkij', gam0, gam0))
    ric = np.einsum('lkli->ki', riem)
    return float(ric[0, 0]), float(ric[0, 1]), float(ric[1, 1]), float(ric[2, 2])


def conifold_polytope_curvature_fd(k: float, u: float, v: float,
                                   *, step: float = 1e-4) -> float:
    """Conformal-oracle K of the polytope factor P (du^2 + dv^2)."""
    _check_k(k)

    def logP(a, b):
        return math.log((1.0 + k) * a * a + (1.0 - k) * b * b)

    lap = fd_laplacian(logP, u, v, step=step,
                       bounds=((-math.inf, math.inf), (-math.inf, math.inf)))
    P = (1.0 + k) * u * u + (1.0 - k) * v * v
    return -lap / (2.0 * P)


# --------------------------------------------------------------------------
# blowdown distance function and its geodesics
# --------------------------------------------------------------------------

def blowdown_distance(k: float, u: float, v: float) -> float:
    """S = (1/2) sqrt(1+k) u^2 + (1/2) sqrt(1-k) v^2: distance to the cone
    point of the blowdown; |grad S| = 1 for the polytope factor exactly."""
    _check_k(k)
    return 0.5 * math.sqrt(1.0 + k) * u * u + 0.5 * math.sqrt(1.0 - k) * v * v


def blowdown_distance_gradient_deficit(k: float, u: float, v: float,
                                       *, step: float = 1e-6) -> float:
    """| |grad S|_{g_Sigma} - 1 | by central differences (the closed-form
    identity (1+k)u^2 + (1-k)v^2 = P makes this zero up to FD error)."""
    gx, gy = fd_gradient(lambda a, b: blowdown_distance(k, a, b), u, v,
                         step=step,
                         bounds=((-math.inf, math.inf), (-math.inf, math.inf)))
    P = (1.0 + k) * u * u + (1.0 - k) * v * v
    return abs(math.sqrt((gx * gx + gy * gy) / P) - 1.0)


def blowdown_geodesic(k: float, c1: float, c2: float,
                      t: float) -> tuple[float, float]:
    """gamma(t) = (c1 t^sqrt(1+k), c2 t^sqrt(1-k)), t >= 0: the gradient
    curves of S through the cone point.  Along them v / u^(b/a) is constant
    with a = sqrt(1+k), b = sqrt(1-k)."""
    _check_k(k)
    if t < 0.0:
        raise BadParams(f"geodesic parameter must be >= 0, got {t}")
    return c1 * t ** math.sqrt(1.0 + k), c2 * t ** math.sqrt(1.0 - k)


def blowdown_characteristic_residual(k: float, c1: float, c2: float,
                                     t: float) -> float:
    """|gamma'_u S_v - gamma'_v S_u| along the power curve: identically zero
    (the curve is tangent to grad S), so any nonzero value is pure roundoff."""
    _check_k(k)
    if t <= 0.0:
        raise BadParams(f"need t > 0 to differentiate the curve, got {t}")
    a = math.sqrt(1.0 + k)
    b = math.sqrt(1.0 - k)
    u, v = blowdown_geodesic(k, c1, c2, t)
    du = c1 * a * t ** (a - 1.0)
    dv = c2 * b * t ** (b - 1.0)
    return abs(du * (b * v) - dv * (a * u))


# --------------------------------------------------------------------------
# second (4-dimensional) generalized blowdown
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlowdownMetric4:
    """Limit 4-metric: conformal (du^2 + dv^2) plus the torus form with
    matrix fiber; det(fiber) = u^2 v^2 identically.  moments are the
    commuting momentum functions of the limit torus action."""

    k: float
    conformal: float
    fiber: np.ndarray
    moments: tuple[float, float]


def second_blowdown_metric(k: float, u: float, v: float) -> BlowdownMetric4:
    _check_k(k)
    u2, v2 = u * u, v * v
    P = (1.0 + k) * u2 + (1.0 - k) * v2
    if P == 0.0:
        raise SingularAxis("the limit degenerates at the cone point")
    Q = u2 + v2
    fiber = np.array([
        [u2 * v2 * Q / P, -2.0 * k * u2 * v2 / P],
        [-2.0 * k * u2 * v2 / P, ((1.0 + k) ** 2 * u2 + (1.0 - k) ** 2 * v2) / P],
    ])
    moments = (0.5 * u2 * v2, -0.5 * (1.0 + k) * u2 + 0.5 * (1.0 - k) * v2)
    return BlowdownMetric4(k, P, fiber, moments)


def second_blowdown_moment_residual(k: float, u: float, v: float) -> float:
    """Entrywise max of | fiber_ij - grad(phi_i).grad(phi_j) / conformal |.

    The momentum functions kept here carry the sign phi^2 =
    -(1+k)u^2/2 + (1-k)v^2/2; the opposite sign flips the fiber cross term
    and is incompatible with the limit matrix."""
    m = second_blowdown_metric(k, u, v)
    grads = np.array([
        [u * v * v, u * u * v],
        [-(1.0 + k) * u, (1.0 - k) * v],
    ])
    oracle = grads @ grads.T / m.conformal
    return float(np.abs(m.fiber - oracle).max())


def second_blowdown_limit_residual(k: float, u: float, v: float,
                                   M: float) -> tuple[float, float]:
    """(leaf, fiber) residuals of the generalized family at mass M against
    the 4-dimensional blowdown, after the M-dependent torus recombination

        T = [[sqrt2/(1+k), 0],
             [sqrt(2 sqrt2 M)(1-k)/2, -sqrt(2 sqrt2 M)(1+k)/2]].
    """
    _check_k(k)
    params = InstantonParams(Family.GENERALIZED_TN, M=M, k=k)
    c = (M / (2.0 * SQRT2)) ** 0.25
    lim = second_blowdown_metric(k, u, v)
    lam_scaled = conformal_factor(params, c * u, c * v) * c * c
    leaf_res = abs(lam_scaled - lim.conformal)

    F = np.array(fiber_matrix(params, c * u, c * v), dtype=float)
    root = math.sqrt(2.0 * SQRT2 * M)
    T = np.array([[SQRT2 / (1.0 + k), 0.0],
                  [root * (1.0 - k) / 2.0, -root * (1.0 + k) / 2.0]])
    fiber_res = float(np.abs(T @ F @ T.T - lim.fiber).max())
    return leaf_res, fiber_res


def blowdown_xy_from_uv(u: float, v: float) -> tuple[float, float]:
    """Polytope transition of the blowdown chart: (x, y) = (uv, (u^2-v^2)/2),
    the half-square map; dx^2 + dy^2 = (u^2+v^2)(du^2 + dv^2)."""
    return u * v, 0.5 * (u * u - v * v)


def second_blowdown_conformal_xy(k: float, x: float, y: float) -> float:
    """Polytope conformal factor in the (x, y) chart: (k y + r) / r with
    r = sqrt(x^2 + y^2).  Consistency with the (u, v) chart:

        ((k y + r)/r) * (u^2 + v^2) = P    at (x, y) = (uv, (u^2-v^2)/2).
    """
    _check_k(k)
    r = math.hypot(x, y)
    if r == 0.0:
        raise SingularAxis("the (x, y) form degenerates at the cone point")
    return (k * y + r) / r


# --------------------------------------------------------------------------
# exceptional blowdown
# --------------------------------------------------------------------------

def exceptional_blowdown_metric(u: float, v: float) -> tuple[float, np.ndarray]:
    """(conformal, fiber) of the exceptional family's blowdown:

        g_Sigma = u^2 (du^2 + dv^2),
        fiber   = (1/2) [[v^2 (u^2 + v^2), v^2], [v^2, 1]].

    Singular along u = 0 (both topologically and in curvature)."""
    if u == 0.0:
        raise SingularAxis("the blowdown is singular along the u = 0 axis")
    u2, v2 = u * u, v * v
    fiber = 0.5 * np.array([[v2 * (u2 + v2), v2], [v2, 1.0]])
    return u2, fiber


def exceptional_blowdown_curvature(u: float) -> float:
    """Polytope sectional curvature of the exceptional blowdown: +u^(-4).

    The conformal oracle on g_Sigma = u^2 (du^2 + dv^2) gives
    K = -Lap(log u^2) / (2 u^2) = +1/u^4 > 0; the variant carrying the
    opposite sign fails the oracle (see exceptional_blowdown curvature
    tests).  Either way |K| blows up along the singular axis."""
    if u == 0.0:
        raise SingularAxis("curvature is singular along u = 0")
    return 1.0 / u ** 4


def exceptional_blowdown_curvature_fd(u: float, *, step: float = 1e-5) -> float:
    if u - step <= 0.0:
        raise BoundaryTooClose(f"FD stencil at u={u} reaches the singular axis")
    lap = fd_laplacian(lambda a, b: 2.0 * math.log(a), u, 1.0, step=step,
                       bounds=((0.0, math.inf), (-math.inf, math.inf)))
    return -lap / (2.0 * u * u)


def exceptional_blowdown_limit_residual(u: float, v: float,
                                        M: float) -> tuple[float, float]:
    """(leaf, fiber) residuals of the exceptional family at scale M against
    its blowdown.  Scaling: (u, v) -> (M u, M v), metric by M^-4, second
    angle by M^-2, so the fiber entries pick up (M^-4, M^-2, 1)."""
    params = InstantonParams(Family.EXCEPTIONAL_TN)
    conf, fib = exceptional_blowdown_metric(u, v)
    lam_scaled = conformal_factor(params, M * u, M * v) * M * M / M ** 4
    leaf_res = abs(lam_scaled - conf)

    F = np.array(fiber_matrix(params, M * u, M * v), dtype=float)
    scaled = np.array([[F[0, 0] / M ** 4, F[0, 1] / M ** 2],
                       [F[0, 1] / M ** 2, F[1, 1]]])
    fiber_res = float(np.abs(scaled - fib).max())
    return leaf_res, fiber_res


# --------------------------------------------------------------------------
# unscaled pointed limit along the exceptional v-axis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PointedLimitSample:
    """One row of the pointed-limit residual table.

    fiber is the recombined torus matrix of the exceptional family at
    recentering parameter A, limit_fiber the closed-form limit.  At finite A
    the fibers are tori; in the limit the long direction opens up, so the
    limit carries the topology tag "cylinder" (pointwise metric data alone
    cannot see the difference; the tag records it)."""

    A: float
    conformal: float
    fiber: np.ndarray
    limit_fiber: np.ndarray
    residual: float
    fiber_topology: str


#: Topology of the limit fibration (simply connected total space).
LIMIT_FIBER_TOPOLOGY = "cylinder"


def _pointed_recombination(A: float) -> np.ndarray:
    """Killing-field recombination used at recentering parameter A.  The
    (1,1) coefficient sqrt2/A is forced by requiring the recombined fiber to
    stay bounded: the variant with 1/(2A) in that slot makes the fiber
    diverge like A^2 (kept in pointed_limit_divergent_transform for the
    regression that documents this)."""
    return np.array([[SQRT2 / A, -SQRT2 * A], [0.0, SQRT2]])


def pointed_limit_divergent_transform(A: float) -> np.ndarray:
    """X1-coefficient variant 1/(2A): recombined fiber diverges as A grows;
    retained only so tests can document the failure."""
    return np.array([[0.5 / A, -SQRT2 * A], [0.0, SQRT2]])


def pointed_limit_fiber(u: float, v: float) -> np.ndarray:
    """Closed-form limit fiber: (1/(1+u^2)) [[(1+u^2)^2 + 4u^2v^2, 2u^2v],
    [2u^2v, u^2]].  Equals the half-plane family fiber at (x, y) = (u, v)
    with the two torus indices swapped."""
    lam = 1.0 + u * u
    return np.array([[(lam * lam + 4.0 * u * u * v * v) / lam,
                      2.0 * u * u * v / lam],
                     [2.0 * u * u * v / lam, u * u / lam]])


def pointed_limit_halfplane(A: float, u: float, v: float) -> PointedLimitSample:
    """Exceptional family recentered at (0, A), evaluated at shifted
    coordinates (u, v) (original v-coordinate A + v), with the Killing
    recombination applied.  residual -> 0 as A -> infinity at rate O(1/A),
    and is exactly zero on the centering ray v = 0."""
    if A <= 0.0:
        raise BadParams(f"recentering parameter must be positive, got {A}")
    params = InstantonParams(Family.EXCEPTIONAL_TN)
    if A + v <= 0.0:
        raise BadParams(f"shifted point leaves the quadrant: A + v = {A + v}")
    T = _pointed_recombination(A)
    F = np.array(fiber_matrix(params, u, A + v), dtype=float)
    G = T @ F @ T.T
    L = pointed_limit_fiber(u, v)
    return PointedLimitSample(
        A=A,
        conformal=conformal_factor(params, u, A + v),
        fiber=G,
        limit_fiber=L,
        residual=float(np.abs(G - L).max()),
        fiber_topology="torus",
    )


def pointed_limit_moments(A: float, u: float, v: float) -> tuple[float, float]:
    """Momentum functions of the recombined Killing fields, normalized to
    vanish at the recentering base point (0, A).  Converge to
    (v (1 + u^2), u^2 / 2) with exact deficit (v^2 (1 + u^2) / (2A), 0)."""
    if A <= 0.0:
        raise BadParams(f"recentering parameter must be positive, got {A}")
    params = InstantonParams(Family.EXCEPTIONAL_TN)
    T = _pointed_recombination(A)
    p = np.array(moment_map(params, u, A + v))
    base = np.array(moment_map(params, 0.0, A))
    out = T @ (p - base)
    return float(out[0]), float(out[1])


def pointed_limit_moments_limit(u: float, v: float) -> tuple[float, float]:
    """Limit momentum functions: the half-plane pair with indices switched."""
    return v * (1.0 + u * u), 0.5 * u * u


def halfplane_swap_residual(u: float, v: float) -> float:
    """Entrywise distance between the pointed-limit fiber at (u, v) and the
    half-plane family fiber at (x, y) = (u, v) with torus indices swapped.
    An algebraic identity, so this is roundoff-level."""
    params = InstantonParams(Family.EXCEPTIONAL_HALF_PLANE)
    H = np.array(fiber_matrix(params, u, v), dtype=float)
    return float(np.abs(pointed_limit_fiber(u, v) - H[::-1, ::-1]).max())
