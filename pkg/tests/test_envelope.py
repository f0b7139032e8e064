import numpy as np
import pytest

from pshenv.disc import AnalyticDisc
from pshenv.envelope import (
    EnvelopeEstimate,
    SearchBudget,
    check_submean,
    child_budget,
    envelope_at,
    envelope_grid,
    upper_regularize,
)
from pshenv.errors import (
    EmptyShell,
    InterpolationOutOfRange,
    PointNotOnSpace,
    PointOutsideWindow,
)
from pshenv.functional import (
    QuadratureSpec,
    eval_field,
    parse_field,
    poisson_functional,
)
from pshenv.space import BranchMap, curve_space, euclidean_space

SMALL = SearchBudget(degree_schedule=(2,), restarts=2, descent_iters=5, seed=1)
Q64 = QuadratureSpec(M=64)


def two_axes_space():
    za = BranchMap("zaxis", ([0.0, 1.0], [0.0]))
    wa = BranchMap("waxis", ([0.0], [0.0, 1.0]))
    return curve_space((za, wa))


def lattice_estimate(values_fn):
    ticks = np.linspace(-0.5, 0.5, 5)
    pts, vals = [], []
    for a in ticks:
        for b in ticks:
            p = np.array([complex(a, b)])
            pts.append(p)
            vals.append(values_fn(p[0]))
    return EnvelopeEstimate(points=pts, values=vals, witnesses=[None] * len(pts),
                            diagnostics=[{}] * len(pts))


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(degree_schedule=())
    with pytest.raises(ValueError):
        SearchBudget(degree_schedule=(4, 2))
    with pytest.raises(ValueError):
        SearchBudget(k_schedule=(2, 2))
    with pytest.raises(ValueError):
        SearchBudget(n_phases=0)
    with pytest.raises(ValueError):
        SearchBudget(step_shrink=1.0)


def test_child_budget_shrinks():
    b = SearchBudget(degree_schedule=(4, 16), restarts=8, descent_iters=20,
                     rh_rounds=3, child_degree=3)
    c = child_budget(b)
    assert c.degree_schedule == (3,)
    assert c.restarts == 4
    assert c.rh_rounds == 0


def test_constant_disc_upper_bound():
    space = euclidean_space(1)
    for text, x in [("abs2(z1)", 0.7), ("re(z1)", -0.2), ("exp(re(z1))", 0.1)]:
        u = parse_field(text)
        v, wit, _ = envelope_at(u, space, [x], SMALL, Q64)
        assert v <= eval_field(u, [complex(x)]) + 1e-12
        assert wit.center()[0] == complex(x)


def test_psh_field_is_fixed_point():
    u = parse_field("abs2(z1)")
    v, _, _ = envelope_at(u, euclidean_space(1), [0.3], SMALL, Q64)
    assert abs(v - 0.09) < 1e-10


def test_pluriharmonic_value_is_exact():
    u = parse_field("re(z1 * z1)")
    x = 0.4 + 0.1j
    b = SearchBudget(degree_schedule=(4,), restarts=3, descent_iters=8, seed=2)
    v, wit, _ = envelope_at(u, euclidean_space(1), [x], b, Q64)
    assert abs(v - (x * x).real) < 1e-12
    assert wit.center()[0] == x


def test_value_matches_witness_functional():
    u = parse_field("max(re(z1), abs2(z1) - 1)")
    v, wit, _ = envelope_at(u, euclidean_space(1), [0.2], SMALL, Q64)
    assert v == pytest.approx(poisson_functional(u, wit, Q64), abs=1e-15)


def test_search_dips_below_indicator_obstacle():
    u = parse_field("-indicator(ball(0, 0; 0.25))")
    space = euclidean_space(1, radii=1.0)
    b = SearchBudget(degree_schedule=(8,), restarts=3, descent_iters=10, seed=5)
    v, _, _ = envelope_at(u, space, [0.5], b, QuadratureSpec(M=128))
    # exact value for this window is -1/2; a small budget lands nearby
    assert -1.0 - 1e-9 <= v < -0.35


def test_outside_window_raises():
    u = parse_field("0")
    space = euclidean_space(1, radii=0.5)
    with pytest.raises(PointOutsideWindow):
        envelope_at(u, space, [2.0], SMALL, Q64)


def test_wrong_point_shape_raises():
    with pytest.raises(ValueError):
        envelope_at(parse_field("0"), euclidean_space(2), [1.0], SMALL, Q64)


def test_point_off_curve_raises():
    with pytest.raises(PointNotOnSpace):
        envelope_at(parse_field("0"), two_axes_space(), [1.0, 1.0], SMALL, Q64)


def test_curve_diagnostics_track_branches():
    space = two_axes_space()
    u = parse_field("abs2(z1 - 1)")
    v, wit, diag = envelope_at(u, space, [0.0, 0.0], SMALL, Q64)
    assert sorted(diag["lifts"]) == ["waxis", "zaxis"]
    assert diag["branch"] == wit.branch.label
    v2, wit2, diag2 = envelope_at(u, space, [0.7, 0.0], SMALL, Q64)
    assert diag2["branch"] == "zaxis"
    assert wit2.center()[0] == 0.7 + 0j


def test_grid_of_one_matches_point_call():
    u = parse_field("-indicator(ball(0, 0; 0.25))")
    space = euclidean_space(1, radii=1.0)
    est = envelope_grid(u, space, [[0.4]], SMALL, Q64)
    v, wit, _ = envelope_at(u, space, [0.4], SMALL, Q64)
    assert est.values[0] == v
    assert np.array_equal(est.witnesses[0].coeffs, wit.coeffs)


def test_warm_sweep_never_hurts():
    u = parse_field("-indicator(ball(0, 0; 0.25))")
    space = euclidean_space(1, radii=1.0)
    xs = [[x] for x in np.linspace(0.3, 0.7, 5)]
    est = envelope_grid(u, space, xs, SMALL, Q64)
    for i, x in enumerate(xs):
        v, _, _ = envelope_at(u, space, x, SMALL, Q64, point_index=i)
        assert est.values[i] <= v + 1e-12


def test_rounds_start_at_field_value_and_decrease():
    u = parse_field("-indicator(ball(0, 0; 0.25))")
    space = euclidean_space(1, radii=1.0)
    v, _, diag = envelope_at(u, space, [0.5], SMALL, Q64)
    rounds = diag["rounds"]
    assert rounds[0] == pytest.approx(0.0, abs=1e-15)  # constant disc first
    assert all(b <= a + 1e-12 for a, b in zip(rounds, rounds[1:]))
    assert rounds[-1] == pytest.approx(v, abs=1e-15)


def test_check_submean_clean_on_constant_grid():
    est = lattice_estimate(lambda z: -2.0)
    trial = AnalyticDisc(np.array([[0.0 + 0j], [0.25 + 0j]]))
    assert check_submean(est, euclidean_space(1), [trial], Q64) == []


def test_check_submean_flags_planted_spike():
    est = lattice_estimate(lambda z: 1.0 if z == 0 else 0.0)
    trial = AnalyticDisc(np.array([[0.0 + 0j], [0.25 + 0j]]))
    reports = check_submean(est, euclidean_space(1), [trial], Q64)
    assert len(reports) == 1
    r = reports[0]
    assert r["disc_index"] == 0
    assert r["center_value"] == pytest.approx(1.0, abs=1e-12)
    assert r["excess"] > 0.5
    assert r["boundary_average"] < 0.5


def test_check_submean_requires_branch_on_curves():
    space = two_axes_space()
    ticks = np.linspace(-0.5, 0.5, 5)
    pts = [np.array([complex(t), 0j]) for t in ticks]
    est = EnvelopeEstimate(points=pts, values=[0.0] * len(pts),
                           witnesses=[None] * len(pts),
                           diagnostics=[{}] * len(pts))
    bare = AnalyticDisc(np.array([[0j, 0j]]))
    with pytest.raises(ValueError):
        check_submean(est, space, [bare], Q64)


def test_check_submean_rejects_offline_disc():
    # grid on the real axis, disc boundary wanders into the plane
    ticks = np.linspace(-1.0, 1.0, 9)
    pts = [np.array([complex(t)]) for t in ticks]
    est = EnvelopeEstimate(points=pts, values=[0.0] * 9,
                           witnesses=[None] * 9, diagnostics=[{}] * 9)
    trial = AnalyticDisc(np.array([[0.0 + 0j], [0.25 + 0j]]))
    with pytest.raises(InterpolationOutOfRange):
        check_submean(est, euclidean_space(1), [trial], Q64)


def test_upper_regularize_constant_grid():
    est = lattice_estimate(lambda z: 3.5)
    val, report = upper_regularize(est, euclidean_space(1), [0.0], [0.3, 0.6])
    assert val == 3.5
    assert set(report) == {0.3, 0.6}


def test_upper_regularize_excludes_the_point_itself():
    est = lattice_estimate(lambda z: 1.0 if z == 0 else 0.0)
    val, _ = upper_regularize(est, euclidean_space(1), [0.0], [0.3])
    assert val == 0.0


def test_upper_regularize_empty_shell():
    est = lattice_estimate(lambda z: 0.0)
    with pytest.raises(EmptyShell):
        upper_regularize(est, euclidean_space(1), [0.0], [1e-6])
