import numpy as np
import pytest

from mpinvert.errors import DegenerateInputError, DimensionError, GeometryError, PreconditionError
from mpinvert.functional import SmoothFunctional, least_squares, two_well
from mpinvert.mountain_pass import (
    COLLISION_CONSISTENT,
    NOT_A_COLLISION,
    MountainPassOptions,
    barrier_bound,
    deform,
    injectivity_audit,
    make_injectivity_functional,
    mountain_pass,
)
from mpinvert.operators import builtin

from oracles import bisect, scalar_critical_points

# psi for cube-minus-x with x1 = 0, x2 = 1 is (x^3 - x)^2 / 2
PSI_CUBE_MINUS_X = [0, 0, 0.5, 0, -1.0, 0, 0.5]


def test_injectivity_functional_examples():
    psi = make_injectivity_functional(builtin("quintic1d"), [-1.0], [1.0])
    assert psi.phi([0.0]) == 8.0
    psi = make_injectivity_functional(builtin("planar"), [0.3, -0.7], [0.3, -0.7])
    assert psi.phi([0.0, 0.0]) == 0.0
    psi = make_injectivity_functional(builtin("cube-minus-x"), [0.0], [1.0])
    assert psi.phi([0.0]) == 0.0 and psi.phi([1.0]) == 0.0


def test_injectivity_functional_dimension_mismatch():
    with pytest.raises(DimensionError):
        make_injectivity_functional(builtin("planar"), [0.0], [1.0, 1.0])


def test_barrier_bound_examples():
    op = builtin("quintic1d")
    assert barrier_bound(op, [0.0], 1.0, alpha_x1=1.0, branch="degenerate") == 0.125
    assert barrier_bound(op, [0.0], 1.0, alpha_x1=2.0, branch="regular") == 0.5
    assert barrier_bound(op, [0.0], 0.5, alpha_x1=1.0, branch="degenerate") == 0.125 * 0.5**6
    assert barrier_bound(op, [0.0], 0.5, alpha_x1=1.0, branch="regular") == 0.125 * 0.25


def test_barrier_bound_estimates_alpha():
    # |F'''(0)h^3| = 6 for unit h, degenerate branch
    assert barrier_bound(builtin("quintic1d"), [0.0], 1.0) == pytest.approx(0.125 * 36)
    # sigma_min(F'(1)) = 8, regular branch
    assert barrier_bound(builtin("quintic1d"), [1.0], 1.0) == pytest.approx(0.125 * 64)


@pytest.mark.parametrize("rho", [0.0, -1.0])
def test_barrier_bound_rejects_non_positive_rho(rho):
    with pytest.raises(PreconditionError):
        barrier_bound(builtin("quintic1d"), [0.0], rho, alpha_x1=1.0, branch="regular")


def test_barrier_bound_rejects_non_positive_alpha():
    with pytest.raises(PreconditionError):
        barrier_bound(builtin("quintic1d"), [0.0], 1.0, alpha_x1=0.0, branch="regular")


def test_barrier_bound_regular_branch_holds_near_x1():
    op = builtin("quintic1d")
    psi = make_injectivity_functional(op, [1.0], [1.0])
    for rho in (1e-3, 1e-2, 5e-2):
        assert min(psi.phi([rho]), psi.phi([-rho])) >= barrier_bound(op, [1.0], rho)


def test_barrier_bound_degenerate_branch_needs_taylor_constant():
    # psi = (x^3 + x^5)^2 / 2 ~ x^6 / 2: the bound holds with alpha = |F'''h^3| / 6
    # and overshoots by 36 with the raw third-derivative constant
    op = builtin("quintic1d")
    psi = make_injectivity_functional(op, [0.0], [0.0])
    for rho in (0.05, 0.2, 0.5):
        ring = min(psi.phi([rho]), psi.phi([-rho]))
        assert ring >= barrier_bound(op, [0.0], rho, alpha_x1=1.0, branch="degenerate")
    assert psi.phi([0.05]) < barrier_bound(op, [0.0], 0.05)


# -- mountain pass ------------------------------------------------------------


def test_two_well_1d():
    rep = mountain_pass(two_well(1), [1.0], start=[-1.0])
    assert abs(rep.critical_point[0]) <= 1e-6
    assert abs(rep.critical_value - 1.0) <= 1e-8
    assert rep.gradient_norm <= MountainPassOptions().tol_grad


def test_two_well_2d():
    rep = mountain_pass(two_well(2), [1.0, 0.0], start=[-1.0, 0.0])
    assert np.linalg.norm(rep.critical_point) <= 1e-6
    assert abs(rep.critical_value - 1.0) <= 1e-8


def test_two_well_2d_bent_start_path_relaxes():
    # anchors off the axis force genuine relaxation of the path
    f = SmoothFunctional(2, lambda x: (x[0] ** 2 - 1) ** 2 + 2 * x[1] ** 2, lambda x: np.array([4 * x[0] * (x[0] ** 2 - 1), 4 * x[1]]))
    rep = mountain_pass(f, [1.0, 0.0], MountainPassOptions(nodes=17), start=[-1.0, 0.0])
    assert np.linalg.norm(rep.critical_point) <= 1e-6


def test_cube_minus_x_saddle_matches_oracle():
    psi = make_injectivity_functional(builtin("cube-minus-x"), [0.0], [1.0])
    rep = mountain_pass(psi, [1.0])
    crit = [(x, v) for x, v in scalar_critical_points(PSI_CUBE_MINUS_X, 0.01, 0.99)]
    assert len(crit) == 1
    x_ref, v_ref = crit[0]
    assert x_ref == pytest.approx(1 / np.sqrt(3), abs=1e-12)
    assert v_ref == pytest.approx(2 / 27, abs=1e-15)
    assert rep.critical_point[0] == pytest.approx(x_ref, abs=1e-8)
    assert rep.critical_value == pytest.approx(v_ref, abs=1e-12)
    assert rep.critical_value >= max(rep.anchor_values) - 1e-12


def test_anchors_are_immutable_and_history_monotone():
    for f, a, e in (
        (two_well(1), [-1.0], [1.0]),
        (two_well(2), [-1.0, 0.0], [1.0, 0.0]),
        (make_injectivity_functional(builtin("cube-minus-x"), [0.0], [1.0]), None, [1.0]),
    ):
        rep = mountain_pass(f, e, start=a)
        start = np.zeros(f.dim) if a is None else np.asarray(a, float)
        assert np.array_equal(rep.path.nodes[0], start)
        assert np.array_equal(rep.path.nodes[-1], np.asarray(e, float))
        h = rep.path_history
        assert all(b <= a_ for a_, b in zip(h, h[1:]))
        assert rep.critical_value >= max(rep.anchor_values) - 1e-12
        np.testing.assert_array_equal(rep.path.values, [f.value(p) for p in rep.path.nodes])


def test_no_barrier_raises_geometry_error():
    bowl = SmoothFunctional(1, lambda x: float(x[0] ** 2), lambda x: 2 * x)
    with pytest.raises(GeometryError):
        mountain_pass(bowl, [1.0], start=[-1.0])
    with pytest.raises(GeometryError):
        mountain_pass(two_well(1), [1.0], start=[1.0])


def test_too_few_nodes():
    with pytest.raises(PreconditionError):
        mountain_pass(two_well(1), [1.0], MountainPassOptions(nodes=5), start=[-1.0])


# -- deformation -----------------------------------------------------------------


def _check_deformation(f, frozen, x, tr, critical):
    assert tr.times[0] == 0.0 and tr.times[-1] == 1.0
    assert np.array_equal(tr.points[0], x)
    np.testing.assert_array_equal(tr.values, [f.value(p) for p in tr.points])
    assert np.all(np.diff(tr.values) <= 0.0)
    if frozen(x) or critical:
        assert tr.frozen
        assert np.all(tr.points == x)
    else:
        assert not tr.frozen
        assert np.all(np.diff(tr.values) < 0.0)


def test_deform_randomized_suite():
    rng = np.random.default_rng(2024)
    quintic = builtin("quintic1d")
    cases = 0
    while cases < 50:
        kind = cases % 3
        if kind == 0:
            f, crit, n = two_well(1), np.array([[-1.0], [0.0], [1.0]]), 1
        elif kind == 1:
            f, crit, n = two_well(2), np.array([[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), 2
        else:
            y = rng.uniform(-5, 5)
            f, n = least_squares(quintic, y), 1
            crit = np.array([[bisect(lambda t: t**3 + t**5 - y, -3.0, 3.0)]])
        x = rng.uniform(-2.5, 2.5, n)
        # speed 0.5 over unit time moves at most 0.5: stay clear of critical points
        if np.min(np.linalg.norm(crit - x, axis=1)) <= 0.6:
            continue
        center, radius = rng.uniform(-2.5, 2.5, n), rng.uniform(0.0, 1.5)
        frozen = lambda p, c=center, r=radius: bool(np.linalg.norm(p - c) <= r)
        _check_deformation(f, frozen, x, deform(f, frozen, x), critical=False)
        cases += 1


def test_deform_frozen_point_is_constant():
    f = two_well(1)
    tr = deform(f, lambda p: True, np.array([0.5]), steps=10)
    assert tr.frozen
    assert np.all(tr.points == 0.5)
    assert np.all(tr.values == f.value([0.5]))


def test_deform_critical_point_is_constant():
    tr = deform(two_well(2), lambda p: False, np.array([0.0, 0.0]))
    assert tr.frozen and np.all(tr.points == 0.0)


def test_deform_two_well_strictly_decreases():
    f = two_well(1)
    tr = deform(f, lambda p: False, np.array([0.5]))
    assert tr.points[0][0] == 0.5
    assert np.all(np.diff(tr.values) < 0.0)
    assert tr.values[-1] < f.value([0.5])


def test_deform_needs_a_step():
    with pytest.raises(PreconditionError):
        deform(two_well(1), lambda p: False, np.array([0.5]), steps=0)


# -- audit ------------------------------------------------------------------------


def test_audit_quintic_not_a_collision():
    rep = injectivity_audit(builtin("quintic1d"), [-1.0], [1.0])
    assert rep.verdict == NOT_A_COLLISION
    assert rep.gap == 4.0


def test_audit_cube_minus_x_collision_is_consistent():
    rep = injectivity_audit(builtin("cube-minus-x"), [0.0], [1.0])
    assert rep.verdict == COLLISION_CONSISTENT
    assert rep.critical_point[0] == pytest.approx(1 / np.sqrt(3), abs=1e-8)
    assert rep.psi_value == pytest.approx(2 / 27, abs=1e-12)
    # F' vanishes at the saddle, F'' does not: hypothesis (a) fails there
    assert rep.classification.tag == "HypothesisViolated"
    assert rep.classification.sigma_min <= 1e-8


def test_audit_rejects_identical_points():
    with pytest.raises(DegenerateInputError):
        injectivity_audit(builtin("quintic1d"), [0.5], [0.5])
