"""Curvature: the polytope sectional curvature, Ricci potentials and norms,
L^2 energy integrals against closed-form targets, a finite-difference
curvature oracle for the full 4-metric, and decay-rate fits along geodesics.

Conventions fixed here once:

* ``polytope_curvature`` returns the genuine Gauss curvature of the leaf
  metric lambda (du^2 + dv^2), i.e. the value the conformal oracle
  K = -Laplacian(log lambda)/(2 lambda) converges to.  For the generalized
  family this is (M/sqrt(2)) (-1 + k(1+k)u^2 - k(1-k)v^2) / D^3.  The same
  formula with prefactor M instead of M/sqrt(2) disagrees with the oracle
  (and with the k -> 1 degeneration onto the exceptional family) by exactly
  sqrt(2) and is kept available as ``polytope_curvature_overscaled`` for
  regression tests.

* ``ricci_norm`` follows the convention in which the pseudo-volume identity
      d(R1) ^ d(R2) = |Ric|^2 * lambda x du dv
  holds exactly for the quadrant families.  The half-plane instanton's
  closed-form |Ric| = sqrt(8)/(1+x^2)^2 sits a factor sqrt(2) below that
  convention (its pseudo-volume density is 16x/(1+x^2)^3, not 8x); both the
  norm and the true Jacobian density are kept, and the factor-2 offset in
  the product identity is asserted, not hidden.

* The FD oracle's Ricci tensor norm relates to ricci_norm by a frozen
  per-family calibration factor (RICCI_NORM_CALIBRATION): 2 for the
  Taub-NUT-type families, sqrt(2) for the half-plane instanton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .family import (BadParams, Chart, ChartPoint, Family, InstantonParams,
                     require)
from .geodesics import point_from_polar
from .metrics import (TORUS_VOLUME, conformal_factor, fiber_matrix,
                      volume_density)
from .numerics import (BoundaryTooClose, QuadratureResult, dual_partials,
                       fd_jacobian2, fd_laplacian, fit_power_law,
                       integrate_2d_improper, integrate_2d_region)

SQRT2 = math.sqrt(2.0)

# FD tensor norm -> closed-form |Ric| divisor, frozen against symbolic Ricci
# norms of the three 4-metrics (|Ric|^2_tensor = 8 M^2 k^2 / D^4,
# 16/(1+u^2)^4, 16/(1+x^2)^4 respectively).
RICCI_NORM_CALIBRATION = {
    Family.GENERALIZED_TN: 2.0,
    Family.EXCEPTIONAL_TN: 2.0,
    Family.EXCEPTIONAL_HALF_PLANE: SQRT2,
    Family.FLAT: 2.0,
}

INFINITE = math.inf


class OriginSingularity(Exception):
    """The (x, y)-form of a quantity is 0/0 at the polytope corner."""


class IllConditioned(Exception):
    """The 4-metric is too close to degenerate for FD curvature."""


@dataclass
class RicciPotentials:
    r1: float
    r2: float


@dataclass
class EnergyReport:
    closed_form: float           # math.inf when the integral diverges
    quadrature: QuadratureResult | None
    rel_error: float
    growth_samples: list[tuple[float, float]] = field(default_factory=list)
    growth_exponent: float | None = None


@dataclass
class Curvature4Sample:
    scalar: float
    ricci_norm: float
    rm_norm_sq: float
    position: ChartPoint


# --------------------------------------------------------------------------
# polytope (leaf) sectional curvature
# --------------------------------------------------------------------------

def polytope_curvature(params: InstantonParams, u: float, v: float) -> float:
    """Gauss curvature of the leaf metric at (u, v) (or (x, y))."""
    fam = params.family
    if fam is Family.GENERALIZED_TN:
        k, M = params.k, params.M
        D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
        return (M / SQRT2) * (-1.0 + k * (1.0 + k) * u * u
                              - k * (1.0 - k) * v * v) / D ** 3
    if fam is Family.EXCEPTIONAL_TN:
        return -(1.0 - u * u) / (1.0 + u * u) ** 3
    if fam is Family.EXCEPTIONAL_HALF_PLANE:
        return -(1.0 - u * u) / (1.0 + u * u) ** 3
    return 0.0


def polytope_curvature_overscaled(params: InstantonParams, u: float, v: float) -> float:
    """The M-prefactor variant of the generalized-family Gauss curvature
    (exactly sqrt(2) times the oracle value; see module docstring)."""
    require(params, Family.GENERALIZED_TN, what="this curvature variant")
    return SQRT2 * polytope_curvature(params, u, v)


def polytope_curvature_polar_form(params: InstantonParams, r: float,
                                  theta: float) -> float:
    """The same overscaled variant written in the half-plane polar chart
    (r, theta), x = r cos(theta), y = r sin(theta).  Provided to cross-check
    that the polar and quadratic-coordinate forms agree identically (they
    do, for every M, once 2*eta is read as the (u,v) polar angle)."""
    require(params, Family.GENERALIZED_TN, what="the polar-form curvature")
    if r == 0.0:
        raise OriginSingularity("use the (u,v) form at the polytope corner")
    k, M = params.k, params.M
    den = 1.0 + SQRT2 * M * r * (1.0 + k * math.sin(theta))
    return M * (-1.0 + SQRT2 * M * k * r * (k + math.sin(theta))) / den ** 3


def polytope_curvature_fd(params: InstantonParams, u: float, v: float,
                          *, step: float = 1e-3) -> float:
    """Conformal-metric Gauss curvature oracle K = -Lap(log lambda)/(2 lambda),
    O(step^2).  Needs 2*step of clearance from the chart boundary."""
    if u - 2 * step < 0.0:
        raise BoundaryTooClose(f"u={u} < 2*step")
    if params.family is not Family.EXCEPTIONAL_HALF_PLANE and v - 2 * step < 0.0:
        raise BoundaryTooClose(f"v={v} < 2*step")

    def loglam(a, b):
        return math.log(conformal_factor(params, a, b))

    lap = fd_laplacian(loglam, u, v, step=step, bounds=((-math.inf, math.inf), (-math.inf, math.inf)))
    return -lap / (2.0 * conformal_factor(params, u, v))


# --------------------------------------------------------------------------
# Ricci data
# --------------------------------------------------------------------------

def ricci_potentials(params: InstantonParams, u, v) -> RicciPotentials:
    """The invariant potential pair whose exterior product is the Ricci
    pseudo-volume form.  Accepts Dual arguments in the scalar slots."""
    fam = params.family
    if fam is Family.GENERALIZED_TN:
        k = params.k
        D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
        r1 = (1.0 + (1.0 + k) * (u * u + v * v)) / D / SQRT2
        r2 = (1.0 + (1.0 - k) * (u * u + v * v)) / D / SQRT2
        return RicciPotentials(r1, r2)
    if fam is Family.EXCEPTIONAL_TN:
        lam = 1.0 + u * u
        return RicciPotentials((1.0 + u * u + v * v) / lam / SQRT2,
                               (1.0 / SQRT2) / lam)
    if fam is Family.EXCEPTIONAL_HALF_PLANE:
        lam = 1.0 + u * u
        return RicciPotentials(2.0 / lam, 4.0 * v / lam)
    return RicciPotentials(1.0 / SQRT2, 1.0 / SQRT2)  # flat: constants


def ricci_pseudo_volume_density(params: InstantonParams, u: float, v: float) -> float:
    """|det d(R1, R2)/d(u, v)|, in closed form.

    GeneralizedTN: 8 k^2 u v / D^3.  ExceptionalTN: 2 u v / (1+u^2)^3.
    ExceptionalHalfPlane: 16 x / (1+x^2)^3; the Jacobian cross-check
    (ricci_pseudo_jacobian_fd) pins the prefactor 16, not 8.
    """
    fam = params.family
    if fam is Family.GENERALIZED_TN:
        k = params.k
        D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
        return 8.0 * k * k * u * v / D ** 3
    if fam is Family.EXCEPTIONAL_TN:
        return 2.0 * u * v / (1.0 + u * u) ** 3
    if fam is Family.EXCEPTIONAL_HALF_PLANE:
        return 16.0 * u / (1.0 + u * u) ** 3
    return 0.0


def ricci_pseudo_jacobian_fd(params: InstantonParams, u: float, v: float,
                             *, step: float = 1e-4) -> float:
    """FD oracle for the pseudo-volume density: |det of the potential
    Jacobian| by central differences."""
    def pots(a, b):
        p = ricci_potentials(params, a, b)
        return p.r1, p.r2

    jac = fd_jacobian2(pots, u, v, step=step, bounds=((-math.inf, math.inf), (-math.inf, math.inf)))
    return abs(jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0])


def ricci_norm(params: InstantonParams, u: float, v: float) -> float:
    """|Ric| in the convention of the module docstring."""
    fam = params.family
    if fam is Family.GENERALIZED_TN:
        k, M = params.k, params.M
        D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
        return SQRT2 * abs(k) * M / D ** 2
    if fam is Family.EXCEPTIONAL_TN:
        return 2.0 / (1.0 + u * u) ** 2
    if fam is Family.EXCEPTIONAL_HALF_PLANE:
        return math.sqrt(8.0) / (1.0 + u * u) ** 2
    return 0.0


# --------------------------------------------------------------------------
# L^2 energies
# --------------------------------------------------------------------------

def l2_ricci(params: InstantonParams, *, rel_tol: float = 1e-9,
             growth_radii: tuple[float, ...] = (25.0, 50.0, 100.0, 200.0)
             ) -> EnergyReport:
    """Total L^2 Ricci energy: the fiber volume 4 pi^2 times the integral of
    the pseudo-volume density over the polytope.

    GeneralizedTN (|k|<1): finite, closed form 4 pi^2 k^2/(1-k^2), verified
    by improper quadrature.  The exceptional families diverge; the report
    then carries partial energies over growing almost-balls (quadratic
    growth for ExceptionalTN) or strips of growing height (linear growth for
    the half-plane), with the fitted growth exponent.
    """
    fam = params.family
    if fam is Family.FLAT:
        return EnergyReport(0.0, None, 0.0)
    if fam is Family.GENERALIZED_TN:
        k = params.k
        closed = 4.0 * math.pi ** 2 * k * k / (1.0 - k * k)
        if k == 0.0:
            return EnergyReport(0.0, None, 0.0)

        def f(u, v):
            return TORUS_VOLUME * ricci_pseudo_volume_density(params, u, v)

        quad = integrate_2d_improper(f, decay_exponent=2.0,
                                     rel_tol=rel_tol, abs_tol=1e-12)
        return EnergyReport(closed, quad, abs(quad.value - closed) / closed)

    samples = []
    for R in growth_radii:
        if fam is Family.EXCEPTIONAL_TN:
            u_max = math.sqrt(2.0 * R)

            def v_max(u, R=R):
                return R - u * u / 2.0

            quad = integrate_2d_region(
                lambda u, v: TORUS_VOLUME * ricci_pseudo_volume_density(params, u, v),
                u_max, v_max)
            val = quad.value
        else:  # half-plane: strip |y| <= R (density is y-independent)
            quad = integrate_2d_region(
                lambda u, v: TORUS_VOLUME * ricci_pseudo_volume_density(params, u, v),
                1e4, lambda u: R)
            val = 2.0 * quad.value
        samples.append((R, val))
    fit = fit_power_law([s[0] for s in samples], [s[1] for s in samples])
    return EnergyReport(INFINITE, None, INFINITE,
                        growth_samples=samples, growth_exponent=fit.exponent)


def l2_riemann(params: InstantonParams) -> float:
    """Total L^2 Riemann energy via the Gauss-Bonnet combination for
    scalar-flat 4-manifolds of Euler characteristic 1:

        integral |Rm|^2 = 32 pi^2 + 4 * integral |Ric|^2
                        = 16 pi^2 (2 - k^2) / (1 - k^2).
    """
    require(params, Family.GENERALIZED_TN,
            what="the finite Riemann energy (exceptional families diverge)")
    k = params.k
    return 32.0 * math.pi ** 2 + 4.0 * (4.0 * math.pi ** 2 * k * k / (1.0 - k * k))


# --------------------------------------------------------------------------
# FD curvature of the 4-metric
# --------------------------------------------------------------------------

def _metric_and_first_derivs(params: InstantonParams, u: float, v: float):
    """g, dg/du, dg/dv as 4x4 arrays; first derivatives are exact
    (forward-mode duals on the rational metric entries)."""
    g = np.zeros((4, 4))
    gu = np.zeros((4, 4))
    gv = np.zeros((4, 4))
    idx = [(0, 0), (1, 1), (2, 2), (2, 3), (3, 3)]

    def entry(i, j, a, b):
        # Block-diagonal: low block lam * I, fiber block from fiber_matrix.
        # Both helpers accept dual numbers (metric4 packs into a float array
        # and cannot).
        if i < 2:
            return conformal_factor(params, a, b)
        m = fiber_matrix(params, a, b)
        return m[i - 2][j - 2]

    for (i, j) in idx:
        val, du_, dv_ = dual_partials(lambda a, b, i=i, j=j: entry(i, j, a, b), u, v)
        g[i, j] = g[j, i] = val
        gu[i, j] = gu[j, i] = du_
        gv[i, j] = gv[j, i] = dv_
    return g, gu, gv


def _christoffel(params: InstantonParams, u: float, v: float):
    g, gu, gv = _metric_and_first_derivs(params, u, v)
    ginv = np.linalg.inv(g)
    dg = np.zeros((4, 4, 4))        # dg[m, i, j] = d_m g_ij; theta-derivs are 0
    dg[0] = gu
    dg[1] = gv
    # Gamma^l_{ij} = (1/2) g^{lm} (d_i g_mj + d_j g_mi - d_m g_ij)
    term = np.einsum('imj->mij', dg) + np.einsum('jmi->mij', dg) - dg
    return 0.5 * np.einsum('lm,mij->lij', ginv, term), g, ginv


def curvature4_fd(params: InstantonParams, u: float, v: float,
                  *, step: float = 1e-3) -> Curvature4Sample:
    """Scalar curvature, |Ric| and |Rm|^2 of the full 4-metric by finite
    differences (exact metric first derivatives, central FD of the
    Christoffel symbols).  The reported ricci_norm is already divided by the
    frozen RICCI_NORM_CALIBRATION factor, so it is directly comparable to
    ricci_norm(params, u, v); errors are O(step^2).
    """
    if u - 2 * step <= 0.0:
        raise BoundaryTooClose(f"u={u} too close to the fiber-degenerate axis")
    if params.family in (Family.GENERALIZED_TN, Family.EXCEPTIONAL_TN) \
            and v - 2 * step <= 0.0:
        raise BoundaryTooClose(f"v={v} too close to the fiber-degenerate axis")

    gam0, g, ginv = _christoffel(params, u, v)
    if np.linalg.cond(g) > 1e12:
        raise IllConditioned(f"cond(g) = {np.linalg.cond(g):.2e} at ({u}, {v})")
    dgam = np.zeros((4, 4, 4, 4))   # dgam[m, l, i, j] = d_m Gamma^l_ij
    dgam[0] = (_christoffel(params, u + step, v)[0]
               - _christoffel(params, u - step, v)[0]) / (2 * step)
    dgam[1] = (_christoffel(params, u, v + step)[0]
               - _christoffel(params, u, v - step)[0]) / (2 * step)

    # R^l_{kij} = d_i Gamma^l_jk - d_j Gamma^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    riem = (np.einsum('iljk->lkij', dgam) - np.einsum('jlik->lkij', dgam)
            + np.einsum('lim,mjk->lkij', gam0, gam0)
            - np.einsum('ljm,mik->lkij', gam0, gam0))
    ric = np.einsum('lkli->ki', riem)
    scalar = float(np.einsum('ki,ki->', ginv, ric))
    ric_sq = float(np.einsum('ij,kl,ik,jl->', ric, ric, ginv, ginv))
    riem_low = np.einsum('lm,mkij->lkij', g, riem)
    rm_sq = float(np.einsum('abcd,efgh,ae,bf,cg,dh->',
                            riem_low, riem_low, ginv, ginv, ginv, ginv))
    cal = RICCI_NORM_CALIBRATION[params.family]
    return Curvature4Sample(scalar=scalar,
                            ricci_norm=math.sqrt(max(ric_sq, 0.0)) / cal,
                            rm_norm_sq=rm_sq,
                            position=ChartPoint(Chart.UV, u, v))


# --------------------------------------------------------------------------
# decay fits
# --------------------------------------------------------------------------

def decay_rate_along_geodesic(params: InstantonParams, eta: float,
                              quantity: str, R_samples) -> float:
    """Fitted power-law exponent of |quantity| vs R along the eta-geodesic.

    quantity: "K_sigma" | "Ric" | "Rm_fd".  Samples are taken with
    point_from_polar; Rm_fd nudges axis points into the interior by a
    distance-proportional offset since the FD oracle cannot sit on an axis.
    """
    if len(R_samples) < 4:
        raise BadParams("need at least 4 radii for a decay fit")
    vals = []
    for R in R_samples:
        rec = point_from_polar(params, float(R), eta)
        u, v = rec.u, rec.v
        if quantity == "K_sigma":
            q = abs(polytope_curvature(params, u, v))
        elif quantity == "Ric":
            q = ricci_norm(params, u, v)
        elif quantity == "Rm_fd":
            u, v = max(u, 1e-2 * R), max(v, 1e-2 * R)
            q = math.sqrt(curvature4_fd(params, u, v,
                                        step=min(1e-3 * R, 1e-2)).rm_norm_sq)
        else:
            raise BadParams(f"unknown quantity {quantity!r}")
        if q < 1e-300:
            raise BadParams(f"{quantity} vanishes along this geodesic; "
                            "no power law to fit")
        vals.append(q)
    return fit_power_law(list(R_samples), vals).exponent
