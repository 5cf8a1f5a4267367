import numpy as np
import pytest

from lehardy.errors import GridMismatch, InvalidExponent, NoConvergence
from lehardy.grid import ScalarField, ShapeSpec, build_domain, solve_poisson
from lehardy.lane_emden import (
    comparison_check,
    exhaust_density,
    lambda_2q_from_density,
    lane_emden_energy,
    pde_residual,
    scale_solution,
    solve_lane_emden,
)

from oracles import interval_density_sup, minimize_energy

DISK = ShapeSpec.ball((0.0, 0.0), 1.0)
INTERVAL = ShapeSpec.interval(-1.0, 1.0)


@pytest.fixture(scope="module")
def disk6():
    return build_domain(DISK, 2 ** -6)


def test_q1_is_torsion(disk6):
    d = solve_lane_emden(disk6, 1.0)
    w = solve_poisson(ScalarField.constant(disk6, 1.0), tol=1e-12)
    assert d.iterations == 1
    np.testing.assert_allclose(d.values, w.values, atol=1e-9)
    assert d.residual <= 1e-8


@pytest.mark.parametrize("q", [1.0, 1.25, 1.5, 1.75])
def test_interval_sup_matches_first_integral(q):
    d = solve_lane_emden(build_domain(INTERVAL, 2 ** -9), q, tol=1e-9)
    assert d.sup_norm == pytest.approx(interval_density_sup(q), rel=1e-4)


def test_picard_matches_energy_minimizer():
    dom = build_domain(INTERVAL, 2 ** -5)
    d = solve_lane_emden(dom, 1.5, tol=1e-11)
    u = minimize_energy(dom.laplacian_matrix, dom.cell_volume, 1.5, np.full(dom.M, 0.1))
    np.testing.assert_allclose(d.values, u, atol=1e-7)


@pytest.mark.parametrize("q", [1.0, 1.5])
def test_energy_identity(disk6, q):
    # testing the equation with w gives int|grad w|^2 = int w^q
    d = solve_lane_emden(disk6, q, tol=1e-10)
    S = disk6.cell_volume * np.sum(d.values ** q)
    assert d.energy == pytest.approx((q - 2) / (2 * q) * S, rel=1e-8)
    assert d.energy == pytest.approx(lane_emden_energy(d.field, q))


def test_init_independence(disk6):
    tol = 1e-8
    a = solve_lane_emden(disk6, 1.5, tol)
    b = solve_lane_emden(disk6, 1.5, tol, init=ScalarField.constant(disk6, 0.0))
    c = solve_lane_emden(disk6, 1.5, tol, init=ScalarField.constant(disk6, 5.0))
    for other in (b, c):
        assert np.abs(other.values - a.values).max() <= 10 * tol * a.sup_norm


def test_residual_of_zero_field_is_infinite(disk6):
    assert pde_residual(ScalarField.constant(disk6, 0.0), 1.5) == float("inf")


def test_errors(disk6):
    with pytest.raises(InvalidExponent):
        solve_lane_emden(disk6, 2.0)
    with pytest.raises(InvalidExponent):
        solve_lane_emden(disk6, 0.5)
    with pytest.raises(NoConvergence) as info:
        solve_lane_emden(disk6, 1.75, tol=1e-9, max_iter=2)
    assert info.value.last_residual > 1e-9
    assert info.value.iterations == 2
    other = build_domain(DISK, 2 ** -5)
    with pytest.raises(GridMismatch):
        solve_lane_emden(disk6, 1.5, init=ScalarField.constant(other, 1.0))


def test_lambda_2q_of_torsion():
    # lambda_{2,1} = 1 / int w; on (-1, 1) that is 3/2
    d = solve_lane_emden(build_domain(INTERVAL, 2 ** -8), 1.0)
    assert lambda_2q_from_density(d) == pytest.approx(1.5, rel=1e-4)


def test_scaling(disk6):
    q, t = 1.5, 3.0
    d = solve_lane_emden(disk6, q, tol=1e-10)
    # u = t^(1/(2-q)) w solves -Delta u = t u^(q-1)
    u = d.field.with_values(t ** (1 / (2 - q)) * d.values)
    v = scale_solution(u, t, q)
    np.testing.assert_allclose(v.values, d.values, rtol=1e-12)
    with pytest.raises(ValueError):
        scale_solution(u, 0.0, q)


@pytest.mark.parametrize("q", [1.0, 1.5])
def test_comparison_principle(q):
    h = 2 ** -5
    small = solve_lane_emden(build_domain(ShapeSpec.ball((0.1, 0.0), 0.5), h), q)
    big = solve_lane_emden(build_domain(DISK, h), q)
    rep = comparison_check(small, big)
    assert rep.passed and rep.max_violation < 0
    with pytest.raises(GridMismatch):
        comparison_check(big, small)
    with pytest.raises(GridMismatch):
        comparison_check(small, solve_lane_emden(build_domain(DISK, 2 ** -4), q))


def test_exhaustion_is_monotone():
    run = exhaust_density(ShapeSpec.slab(1.0, 1.0), 1.0, [1.0, 2.0, 4.0], 2 ** -4)
    assert run.monotone
    assert run.center_values == sorted(run.center_values)
    assert run.increments[-1] < run.increments[0]
    assert run.center_values[-1] == pytest.approx(0.5, abs=5e-3)
    with pytest.raises(ValueError):
        exhaust_density(ShapeSpec.slab(1.0, 1.0), 1.0, [1.0, 2.0], 2 ** -4)
    with pytest.raises(ValueError):
        exhaust_density(DISK, 1.0, [1.0, 2.0, 3.0], 2 ** -4)
