"""Almost-balls, almost-spheres, and volume growth.

The geodesic ball B(R) about the origin is never meshed.  Every volume
statement goes through the almost-ball

    AB(R) = { (u, v) : Rtilde(u, v) <= R }

(the sublevel set of the distance surrogate from taubnut.family), whose
volume has an exact closed form in both bounded-fiber families, together
with the two-sided inclusion

    AB(R / (1 + eps)) subset B(R) subset AB(R (1 + eps)),

where eps = eps(R) is *measured*: the max of |Rtilde/R - 1| over an
eta-grid of exact geodesic endpoints at distance R.  The surrogate error
decays like log(R)/R, so the bracket tightens as R grows.

Volumes are totals over the torus fibers (a factor 4 pi^2) of the density
lam * x; the half-plane family has unbounded fibers and is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .family import (BadParams, Family, InstantonParams, WrongFamily,
                     almost_distance, require, uv_from_almost_polar)
from .geodesics import distance, point_from_polar
from .metrics import TORUS_VOLUME, volume_density
from .numerics import (InsufficientSamples, QuadratureResult, fit_power_law,
                       integrate_2d_region)

SQRT2 = math.sqrt(2.0)


class SmallRadius(Exception):
    """Radius below the regime where the measured bracket applies."""


# --------------------------------------------------------------------------
# almost-ball geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlmostBallSpec:
    """Quadrant region AB(R) = {Rtilde <= R} described by its boundary graph
    v = v_max(u), 0 <= u <= u_max."""

    params: InstantonParams
    radius: float
    u_max: float

    def v_max(self, u: float) -> float:
        p = self.params
        if p.family is Family.GENERALIZED_TN:
            budget = (math.sqrt(SQRT2 * p.M) * self.radius
                      - math.sqrt(1.0 + p.k) * u * u)
            if budget <= 0.0:
                return 0.0
            return math.sqrt(budget / math.sqrt(1.0 - p.k))
        return max(self.radius - 0.5 * u * u, 0.0)

    def contains(self, u: float, v: float) -> bool:
        return almost_distance(self.params, u, v) <= self.radius


def almost_ball_spec(params: InstantonParams, R: float) -> AlmostBallSpec:
    require(params, Family.GENERALIZED_TN, Family.EXCEPTIONAL_TN,
            what="the almost-ball region")
    if R <= 0.0:
        raise BadParams(f"almost-ball radius must be positive, got {R}")
    if params.family is Family.GENERALIZED_TN:
        u_max = math.sqrt(math.sqrt(SQRT2 * params.M) * R
                          / math.sqrt(1.0 + params.k))
    else:
        u_max = math.sqrt(2.0 * R)
    return AlmostBallSpec(params, R, u_max)


def almost_ball_volume(params: InstantonParams, R: float) -> float:
    """Exact volume of AB(R).

    Generalized family:
        (2 sqrt2 pi^2 / (M sqrt(1-k^2))) *
            (R^2 + (sqrt(1+k) + sqrt(1-k)) sqrt(sqrt2 M) R^3 / 3)
    Exceptional family:
        (pi^2 / 6)(R^4 + 2 R^3)

    The half-plane family has unbounded fibers (infinite volume per unit of
    the noncompact fiber coordinate) and is rejected rather than normalized.
    """
    if params.family in (Family.EXCEPTIONAL_HALF_PLANE, Family.FLAT):
        raise WrongFamily(
            "almost-ball volume is defined for the GeneralizedTN and "
            f"ExceptionalTN families, not {params.family.value}")
    if R < 0.0:
        raise BadParams(f"almost-ball radius must be >= 0, got {R}")
    if params.family is Family.GENERALIZED_TN:
        k, M = params.k, params.M
        pre = 2.0 * SQRT2 * math.pi ** 2 / (M * math.sqrt(1.0 - k * k))
        cubic = (math.sqrt(1.0 + k) + math.sqrt(1.0 - k)) \
            * math.sqrt(SQRT2 * M) / 3.0
        return pre * (R * R + cubic * R ** 3)
    return math.pi ** 2 / 6.0 * (R ** 4 + 2.0 * R ** 3)


def almost_ball_volume_quadrature(params: InstantonParams, R: float,
                                  *, rel_tol: float = 1e-10) -> QuadratureResult:
    """Independent route: adaptive quadrature of the volume density over the
    almost-ball region.  Used to validate the closed forms."""
    spec = almost_ball_spec(params, R)
    return integrate_2d_region(
        lambda u, v: TORUS_VOLUME * volume_density(params, u, v),
        spec.u_max, spec.v_max, rel_tol=rel_tol)


# --------------------------------------------------------------------------
# measured bracketing of true geodesic balls
# --------------------------------------------------------------------------

#: eta-grid used when measuring the surrogate error (13 rays in the closed
#: quadrant, step pi/24).
EPSILON_GRID = tuple(j * math.pi / 24.0 for j in range(13))


def measured_epsilon_bar(params: InstantonParams, R: float,
                         *, tol: float = 1e-12) -> float:
    """max over the standard eta-grid of |Rtilde/R - 1| at geodesic radius R.

    Endpoints come from the exact geodesic solver, so this measures the true
    discrepancy of the surrogate, not a modeled bound.
    """
    if R <= 0.0:
        raise BadParams(f"radius must be positive, got {R}")
    worst = 0.0
    for eta in EPSILON_GRID:
        rec = point_from_polar(params, R, eta, tol=tol)
        rt = almost_distance(params, rec.u, rec.v)
        worst = max(worst, abs(rt / R - 1.0))
    return worst


def ball_volume_bracket(params: InstantonParams, R: float,
                        *, tol: float = 1e-12) -> tuple[float, float]:
    """(lower, upper) bracket for Vol B(R) via almost-ball volumes.

    With eps = measured_epsilon_bar(R), every point of AB(R/(1+eps)) lies
    within distance R of the origin and every point of B(R) lies in
    AB(R(1+eps)); hence

        Vol AB(R/(1+eps)) <= Vol B(R) <= Vol AB(R(1+eps)).
    """
    if R < 10.0:
        raise SmallRadius(
            f"bracket requires R >= 10 (surrogate error is only controlled "
            f"in the large-radius regime), got {R}")
    eps = measured_epsilon_bar(params, R, tol=tol)
    return (almost_ball_volume(params, R / (1.0 + eps)),
            almost_ball_volume(params, R * (1.0 + eps)))


def volume_growth_exponent(params: InstantonParams, radii) -> float:
    """Power-law exponent fitted to almost-ball volumes over the radii.

    Cubic for the generalized family, quartic for the exceptional one (in
    the large-radius regime; the R^2 term dominates small radii).
    """
    radii = [float(R) for R in radii]
    if len(radii) < 4:
        raise InsufficientSamples(
            f"need at least 4 radii for a growth fit, got {len(radii)}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise BadParams("radii must be strictly increasing")
    vols = [almost_ball_volume(params, R) for R in radii]
    return fit_power_law(radii, vols).exponent


# --------------------------------------------------------------------------
# almost-sphere sandwich
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichSample:
    """Measured gap Rtilde - R over one almost-sphere AS(Rtilde).

    gap_min/gap_max are extremes of the raw gap; c_min/c_max are the same,
    normalized by log(R).  Across spheres of different radii the normalized
    band should stay bounded (the surrogate differs from the distance by
    O(log R) additively)."""

    r_tilde: float
    gap_min: float
    gap_max: float
    c_min: float
    c_max: float


def sphere_sandwich(params: InstantonParams, r_tilde: float,
                    *, n: int = 50, tol: float = 1e-12) -> SandwichSample:
    """Sample AS(r_tilde) at n angles and measure Rtilde - distance."""
    require(params, Family.GENERALIZED_TN, Family.EXCEPTIONAL_TN,
            what="the almost-sphere parametrization")
    if r_tilde <= 0.0:
        raise BadParams(f"need a positive radius, got {r_tilde}")
    gaps = []
    cs = []
    for i in range(n):
        psi = 0.5 * math.pi * i / (n - 1)
        u, v = uv_from_almost_polar(params, r_tilde, psi)
        R = distance(params, u, v, tol=tol)
        gap = r_tilde - R
        gaps.append(gap)
        cs.append(gap / math.log(R))
    return SandwichSample(r_tilde, min(gaps), max(gaps), min(cs), max(cs))
