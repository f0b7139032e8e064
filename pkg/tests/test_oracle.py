import numpy as np
import pytest

from pshenv.errors import NotConverged
from pshenv.functional import parse_field
from pshenv.oracle import (
    field_on_grid,
    grid_domain,
    interp_bilinear,
    radial_envelope,
    subharmonic_minorant,
)


def closed_form_dip(r):
    # largest subharmonic minorant of -1_{|z|<1/4} on the unit disc
    return np.maximum(-1.0, np.log(np.maximum(r, 1e-300)) / np.log(4.0))


def test_grid_domain_validation():
    with pytest.raises(ValueError):
        grid_domain(17)
    with pytest.raises(ValueError):
        grid_domain(33, mask="hexagon")
    with pytest.raises(ValueError):
        grid_domain(33, mask="annulus", inner=0.0)
    dom = grid_domain(33, mask="disc")
    assert dom.mask.sum() < 33 * 33
    assert dom.interior().sum() < dom.mask.sum()


def test_field_on_grid_masks_inactive_nodes():
    dom = grid_domain(33, mask="disc")
    g = field_on_grid(parse_field("re(z1)"), dom)
    assert np.isnan(g[0, 0])  # the rect corner is off the disc
    center = 16
    assert g[center, center] == 0.0


def test_harmonic_obstacle_is_fixpoint():
    dom = grid_domain(65)
    u = field_on_grid(parse_field("re(z1)"), dom)
    v = subharmonic_minorant(u, dom)
    assert np.nanmax(np.abs(v - u)) < 1e-12


def test_subharmonic_obstacle_unchanged():
    dom = grid_domain(65, mask="disc")
    u = field_on_grid(parse_field("abs2(z1)"), dom)
    v = subharmonic_minorant(u, dom)
    m = dom.mask
    assert np.max(np.abs(v[m] - u[m])) < 1e-12


def test_indicator_obstacle_matches_closed_form():
    dom = grid_domain(129, mask="disc")
    u = field_on_grid(parse_field("-indicator(ball(0, 0; 0.25))"), dom)
    v = subharmonic_minorant(u, dom)
    for r in np.linspace(0.3, 0.9, 13):
        got = interp_bilinear(dom, v, complex(r, 0.0))
        assert abs(got - closed_form_dip(r)) < 0.04
    spot = interp_bilinear(dom, v, 0.5 + 0.0j)
    assert abs(spot - (-0.5)) < 0.05


def test_minorant_constraints_and_maximality():
    tol = 1e-10
    dom = grid_domain(65, mask="disc")
    u = field_on_grid(parse_field("-indicator(ball(0, 0; 0.25))"), dom)
    v = subharmonic_minorant(u, dom, tol=tol)
    iy, ix = np.nonzero(dom.interior())
    avg = 0.25 * (v[iy - 1, ix] + v[iy + 1, ix] + v[iy, ix - 1] + v[iy, ix + 1])
    assert np.all(v[iy, ix] <= u[iy, ix] + 1e-12)
    assert np.all(v[iy, ix] <= avg + 10 * tol)
    # raising any node by 2 tol breaks obstacle or submean
    rng = np.random.default_rng(4)
    for idx in rng.integers(0, iy.size, size=100):
        bumped = v[iy[idx], ix[idx]] + 2 * tol
        assert bumped > u[iy[idx], ix[idx]] or bumped > avg[idx]


def test_minorant_not_converged_attaches_iterate():
    dom = grid_domain(65, mask="disc")
    u = field_on_grid(parse_field("-indicator(ball(0, 0; 0.25))"), dom)
    with pytest.raises(NotConverged) as info:
        subharmonic_minorant(u, dom, tol=1e-10, max_iters=3)
    assert info.value.iterate is not None
    assert info.value.iterate.shape == u.shape


def test_interp_bilinear_errors():
    dom = grid_domain(33, mask="disc")
    g = field_on_grid(parse_field("0"), dom)
    with pytest.raises(ValueError):
        interp_bilinear(dom, g, 2.0 + 0j)  # off the rectangle
    with pytest.raises(ValueError):
        interp_bilinear(dom, g, 0.95 + 0.3j)  # touches masked nodes


def test_radial_envelope_identity():
    t = np.linspace(-3.0, 1.0, 41)
    env = radial_envelope(t, t)
    assert np.max(np.abs(env.value(t) - t)) < 1e-12
    assert env.value(-10.0) == -3.0  # flat left extension
    assert env.value(3.0) == pytest.approx(3.0, abs=1e-12)  # last-slope right


def test_radial_envelope_liouville_limit():
    # min(e^{2t} - 1, 0): on a wide log-radius range the minorant hugs -1
    t = np.linspace(-200.0, 200.0, 4001)
    env = radial_envelope(t, np.minimum(np.exp(2 * t) - 1.0, 0.0))
    assert env.value(0.0) < -0.97
    assert env.value(-50.0) < -0.99

    # independent check: pointwise sup of nonneg-slope lines under the samples
    def line_support(tstar, slopes):
        y = np.minimum(np.exp(2 * t) - 1.0, 0.0)
        return max(np.min(y - s * (t - tstar)) for s in slopes)

    slopes = np.linspace(0.0, 0.1, 2001)
    for tstar in (-50.0, -5.0, 0.0, 20.0):
        assert env.value(tstar) == pytest.approx(
            line_support(tstar, slopes), abs=1e-3
        )


def test_radial_envelope_parabola_flattens_left():
    t = np.linspace(-2.0, 2.0, 81)
    env = radial_envelope(t, t * t)
    assert env.value(-1.0) == 0.0
    assert env.value(0.0) == 0.0
    assert env.value(1.0) == pytest.approx(1.0, abs=0.01)
    assert env.value(2.0) == pytest.approx(4.0, abs=1e-12)


def test_radial_envelope_shape_invariants():
    rng = np.random.default_rng(9)
    t = np.sort(rng.uniform(-2, 2, size=60))
    t = np.unique(t)
    y = np.sin(3 * t) + 0.5 * t
    env = radial_envelope(t, y)
    slopes = np.diff(env.knots_y) / np.diff(env.knots_t)
    assert np.all(np.diff(slopes) >= -1e-12)  # convex
    assert np.all(slopes >= -1e-12)  # nondecreasing
    assert np.all(env.value(t) <= y + 1e-12)  # minorant


def test_radial_envelope_validation():
    with pytest.raises(ValueError):
        radial_envelope([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        radial_envelope([0.0, 1.0], [np.inf, 0.0])


def test_cross_oracle_agreement_on_annulus():
    # radial nondecreasing obstacle: the grid fixpoint and the log-radius
    # hull compute the same minorant up to grid resolution
    dom = grid_domain(129, mask="annulus", inner=0.2)
    u = field_on_grid(parse_field("min(4 * (abs(z1) - 0.3), 1)"), dom)
    v = subharmonic_minorant(u, dom)
    t = np.linspace(np.log(0.2), 0.0, 400)
    env = radial_envelope(t, np.minimum(4 * (np.exp(t) - 0.3), 1.0))
    for r in np.linspace(0.25, 0.95, 15):
        grid_val = interp_bilinear(dom, v, complex(r, 0.0))
        assert abs(grid_val - env.value(np.log(r))) < 0.03
