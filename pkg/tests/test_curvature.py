import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taubnut.curvature import (RICCI_NORM_CALIBRATION, OriginSingularity,
                               curvature4_fd, decay_rate_along_geodesic,
                               l2_ricci, l2_riemann, polytope_curvature,
                               polytope_curvature_fd,
                               polytope_curvature_overscaled,
                               polytope_curvature_polar_form,
                               ricci_norm, ricci_potentials,
                               ricci_pseudo_jacobian_fd,
                               ricci_pseudo_volume_density)
from taubnut.family import Family, InstantonParams, WrongFamily
from taubnut.metrics import volume_density

SQRT2 = math.sqrt(2.0)

GEN = InstantonParams()
GEN05 = InstantonParams(k=0.5)
GEN09 = InstantonParams(k=0.9)
EXC = InstantonParams(family=Family.EXCEPTIONAL_TN)
HP = InstantonParams(family=Family.EXCEPTIONAL_HALF_PLANE)
FLAT = InstantonParams(family=Family.FLAT)

INTERIOR = [(0.4, 0.9), (1.0, 1.0), (2.2, 0.5), (0.7, 2.8)]


# ----------------------------------------------------------- leaf curvature K

def test_k_sigma_standard_scale_origin():
    # sup |sec| = 1 at M = sqrt(2): K(0,0) = -1
    assert polytope_curvature(GEN, 0.0, 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_k_sigma_closed_form():
    k, M, u, v = 0.5, SQRT2, 1.2, 0.8
    D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
    expect = (M / SQRT2) * (-1.0 + k * (1.0 + k) * u * u
                            - k * (1.0 - k) * v * v) / D ** 3
    assert polytope_curvature(GEN05, u, v) == pytest.approx(expect, rel=1e-14)


def test_k_sigma_exceptional_closed_form():
    for u in (0.3, 1.0, 2.5):
        expect = -(1.0 - u * u) / (1.0 + u * u) ** 3
        assert polytope_curvature(EXC, u, 0.7) == pytest.approx(expect,
                                                                rel=1e-14)
        assert polytope_curvature(HP, u, -0.3) == pytest.approx(expect,
                                                                rel=1e-14)


@pytest.mark.parametrize("params", [GEN, GEN05, GEN09, EXC, HP])
def test_k_sigma_vs_conformal_oracle(params):
    # K = -Laplacian(log lambda) / (2 lambda), the defining identity
    for u, v in INTERIOR:
        if params.family is Family.EXCEPTIONAL_HALF_PLANE:
            v -= 1.5
        got = polytope_curvature(params, u, v)
        fd = polytope_curvature_fd(params, u, v)
        assert abs(got - fd) < 1e-4 * max(1.0, abs(got))


def test_overscaled_variant_differs_by_sqrt2():
    # the prefactor-M variant is exactly sqrt(2) times the true curvature;
    # keeping this pinned stops silent renormalization
    for u, v in INTERIOR:
        truth = polytope_curvature(GEN05, u, v)
        over = polytope_curvature_overscaled(GEN05, u, v)
        assert over == pytest.approx(SQRT2 * truth, rel=1e-14)
        assert abs(over - polytope_curvature_fd(GEN05, u, v)) > 0.1 * abs(truth)


def test_polar_form_matches_overscaled_every_mass():
    # polar radius r = (u^2+v^2)/(sqrt2 M), angle theta = pi/2 - 2 eta
    for M in (0.7, SQRT2, 3.0):
        p = InstantonParams(M=M, k=0.4)
        for u, v in INTERIOR:
            r = (u * u + v * v) / (SQRT2 * M)
            theta = math.pi / 2.0 - 2.0 * math.atan2(v, u)
            got = polytope_curvature_polar_form(p, r, theta)
            over = polytope_curvature_overscaled(p, u, v)
            assert got == pytest.approx(over, rel=1e-12)


def test_polar_form_origin_raises():
    with pytest.raises(OriginSingularity):
        polytope_curvature_polar_form(GEN05, 0.0, 0.3)


def test_flat_is_flat():
    for u, v in INTERIOR:
        assert polytope_curvature(FLAT, u, v) == 0.0
        assert ricci_norm(FLAT, u, v) == 0.0


# ------------------------------------------------------------ Ricci quantities

def test_ricci_potentials_halfplane():
    x, y = 0.8, -1.1
    pots = ricci_potentials(HP, x, y)
    assert pots.r1 == pytest.approx(2.0 / (1.0 + x * x), rel=1e-14)
    assert pots.r2 == pytest.approx(4.0 * y / (1.0 + x * x), rel=1e-14)


def test_pseudo_density_closed_forms():
    k, u, v = 0.5, 1.2, 0.8
    D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
    assert ricci_pseudo_volume_density(GEN05, u, v) == pytest.approx(
        8.0 * k * k * u * v / D ** 3, rel=1e-14)
    assert ricci_pseudo_volume_density(EXC, u, v) == pytest.approx(
        2.0 * u * v / (1.0 + u * u) ** 3, rel=1e-14)
    x = 0.9
    assert ricci_pseudo_volume_density(HP, x, 0.0) == pytest.approx(
        16.0 * x / (1.0 + x * x) ** 3, rel=1e-14)


def test_pseudo_density_vanishes_at_k0():
    for u, v in INTERIOR:
        assert ricci_pseudo_volume_density(GEN, u, v) == 0.0


@pytest.mark.parametrize("params", [GEN05, GEN09, EXC, HP])
def test_pseudo_density_vs_jacobian(params):
    # d(R1) ^ d(R2) computed by finite differences of the potentials must
    # reproduce the closed-form density; this is what pins the half-plane
    # prefactor at 16, not 8
    for u, v in INTERIOR:
        if params.family is Family.EXCEPTIONAL_HALF_PLANE:
            v -= 1.5
        fd = ricci_pseudo_jacobian_fd(params, u, v)
        closed = ricci_pseudo_volume_density(params, u, v)
        assert abs(fd - closed) < 1e-5 * max(1.0, abs(closed))


def test_halfplane_prefactor_refutes_8():
    x = 0.9
    fd = ricci_pseudo_jacobian_fd(HP, x, 0.3)
    assert abs(fd - 8.0 * x / (1.0 + x * x) ** 3) > 1e-2


def test_ricci_norm_closed_forms():
    k, u, v = 0.5, 1.2, 0.8
    D = 1.0 + (1.0 + k) * u * u + (1.0 - k) * v * v
    assert ricci_norm(GEN05, u, v) == pytest.approx(
        SQRT2 * k * SQRT2 / D ** 2, rel=1e-14)
    assert ricci_norm(EXC, u, v) == pytest.approx(2.0 / (1.0 + u * u) ** 2,
                                                  rel=1e-14)
    assert ricci_norm(HP, u, v) == pytest.approx(
        math.sqrt(8.0) / (1.0 + u * u) ** 2, rel=1e-14)


@pytest.mark.parametrize("params,factor", [(GEN05, 1.0), (EXC, 1.0),
                                           (HP, 2.0)])
def test_product_identity(params, factor):
    # pseudo-density = factor * |Ric|^2 * lambda * x, exactly; the factor 2
    # on the half plane is the honest mismatch between its norm convention
    # and its Jacobian density
    for u, v in INTERIOR:
        lhs = ricci_pseudo_volume_density(params, u, v)
        rhs = factor * ricci_norm(params, u, v) ** 2 \
            * volume_density(params, u, v)
        assert lhs == pytest.approx(rhs, rel=1e-12)


# ------------------------------------------------------------------- energies

def test_l2_ricci_closed_vs_quadrature():
    for k in (0.3, 0.5, 0.9):
        rep = l2_ricci(InstantonParams(k=k))
        assert rep.closed_form == pytest.approx(
            4.0 * math.pi ** 2 * k * k / (1.0 - k * k), rel=1e-15)
        assert rep.rel_error < 1e-6


def test_l2_ricci_flat_and_k0():
    assert l2_ricci(FLAT).closed_form == 0.0
    assert l2_ricci(GEN).closed_form == 0.0


def test_l2_riemann_identity():
    for k in (0.0, 0.5, 0.9):
        p = InstantonParams(k=k)
        got = l2_riemann(p)
        assert got == pytest.approx(
            16.0 * math.pi ** 2 * (2.0 - k * k) / (1.0 - k * k), rel=1e-15)
        assert got - 4.0 * l2_ricci(p).closed_form == pytest.approx(
            32.0 * math.pi ** 2, rel=1e-15)


def test_l2_riemann_needs_generalized():
    with pytest.raises(WrongFamily):
        l2_riemann(EXC)


def test_exceptional_energy_growth():
    rep = l2_ricci(EXC)
    assert rep.closed_form == math.inf
    assert rep.growth_exponent == pytest.approx(2.0, abs=0.05)


def test_halfplane_energy_growth_linear():
    rep = l2_ricci(HP, growth_radii=(25.0, 50.0, 100.0, 200.0))
    assert rep.growth_exponent == pytest.approx(1.0, abs=1e-3)
    # E(strip of half-height R) = 32 pi^2 R exactly
    for R, val in rep.growth_samples:
        assert val == pytest.approx(32.0 * math.pi ** 2 * R, rel=1e-6)


# ------------------------------------------------------------------ 4-metric FD

@pytest.mark.parametrize("params", [GEN, GEN05, EXC, HP])
def test_scalar_flat_and_ricci_calibrated(params):
    for u, v in ((0.8, 1.1), (1.5, 0.6)):
        if params.family is Family.EXCEPTIONAL_HALF_PLANE:
            v -= 1.5
        sample = curvature4_fd(params, u, v)
        assert abs(sample.scalar) < 1e-3
        closed = ricci_norm(params, u, v)
        assert abs(sample.ricci_norm - closed) < 2e-4 * max(1.0, closed)


def test_k0_is_ricci_flat():
    for u, v in INTERIOR:
        assert curvature4_fd(GEN, u, v).ricci_norm < 1e-4


def test_calibration_table():
    assert RICCI_NORM_CALIBRATION[Family.GENERALIZED_TN] == 2.0
    assert RICCI_NORM_CALIBRATION[Family.EXCEPTIONAL_HALF_PLANE] \
        == pytest.approx(SQRT2)


def test_rm_norm_positive():
    s = curvature4_fd(GEN, 1.0, 1.0)
    assert s.rm_norm_sq > 0.0


# ------------------------------------------------------------------ decay fits

def test_decay_rates():
    radii = (60.0, 120.0, 240.0, 480.0)
    # k = 0: |K_sigma| ~ R^-3 along every geodesic
    for eta in (0.0, 0.7, math.pi / 2):
        rate = decay_rate_along_geodesic(GEN, eta, "K_sigma", radii)
        assert rate == pytest.approx(-3.0, abs=0.1)
    # k = 0.5 generic angle: ~ R^-2
    rate = decay_rate_along_geodesic(GEN05, 0.7, "K_sigma", radii)
    assert rate == pytest.approx(-2.0, abs=0.1)
    rate = decay_rate_along_geodesic(GEN05, 0.7, "Ric", radii)
    assert rate == pytest.approx(-2.0, abs=0.1)
    # the exceptional families have non-decaying directions
    rate = decay_rate_along_geodesic(EXC, math.pi / 2, "K_sigma", radii)
    assert abs(rate) < 0.05
    rate = decay_rate_along_geodesic(HP, math.pi / 2, "K_sigma", radii)
    assert abs(rate) < 0.05
