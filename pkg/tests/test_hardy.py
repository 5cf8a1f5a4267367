import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lehardy import constants, hardy
from lehardy.closed_forms import ClosedForm, compare
from lehardy.corpus import random_smooth_fields, restrict_support
from lehardy.errors import BallNotContained, DomainMismatch, InvalidExponent
from lehardy.grid import ScalarField, ShapeSpec, build_domain, gradient_norm_squared_field
from lehardy.lane_emden import LaneEmdenDensity, solve_lane_emden
from lehardy.spectral import Potential, principal_eigenvalue, schrodinger_ground_state

DISK = ShapeSpec.ball((0.0, 0.0), 1.0)
SQUARE = ShapeSpec.rectangle([(0, 1), (0, 1)])


@pytest.fixture(scope="module")
def disk_torsion():
    return solve_lane_emden(build_domain(DISK, 2 ** -6), 1.0)


@pytest.fixture(scope="module")
def square_densities():
    dom = build_domain(SQUARE, 2 ** -5)
    return {q: solve_lane_emden(dom, q) for q in (1.0, 1.5)}


def test_weight_at_special_deltas(disk_torsion):
    d = disk_torsion
    floor = 0.25 * d.domain.h
    G = gradient_norm_squared_field(d.field, floor).values
    w1 = hardy.hardy_weight(d, 1.0)
    assert np.all(w1.grad_term.values == 0)
    np.testing.assert_allclose(w1.density_term.values, 1 / np.maximum(d.values, floor))
    w2 = hardy.hardy_weight(d, 2.0)
    np.testing.assert_allclose(w2.grad_term.values, 0.25 * G)
    np.testing.assert_allclose(w2.density_term.values, 0.5 / np.maximum(d.values, floor))
    wh = hardy.hardy_weight(d, 0.5)
    np.testing.assert_allclose(wh.grad_term.values, -2 * G)
    for w in (w1, w2, wh):
        assert np.all(w.density_term.values > 0)
    with pytest.raises(ValueError):
        hardy.hardy_weight(d, 0.0)
    with pytest.raises(ValueError):
        hardy.hardy_weight(d, 1.0, floor=-1.0)


def test_zero_test_field_passes(disk_torsion):
    (c,) = hardy.check_hardy(disk_torsion, 2.0, [ScalarField.constant(disk_torsion.domain, 0.0)])
    assert c.lhs == c.rhs == 0 and c.passed


def test_test_fields_must_be_compactly_supported(disk_torsion):
    dom = disk_torsion.domain
    with pytest.raises(ValueError):
        hardy.check_hardy(disk_torsion, 2.0, [ScalarField.constant(dom, 1.0)])
    other = build_domain(DISK, 2 ** -5)
    with pytest.raises(DomainMismatch):
        hardy.check_hardy(disk_torsion, 2.0, [ScalarField.constant(other, 0.0)])


def test_truncated_eigenfunction_has_positive_margin(disk_torsion):
    phi = restrict_support(principal_eigenvalue(disk_torsion.domain).eigenfunction)
    (c,) = hardy.check_hardy(disk_torsion, 2.0, [("eig", phi)])
    assert c.test_id == "eig" and c.margin > 0 and c.passed


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 2 ** 64 - 1), st.sampled_from([1.0, 1.5]))
def test_inequality_for_random_fields(square_densities, delta, seed, q):
    d = square_densities[q]
    checks = hardy.check_hardy(d, delta, random_smooth_fields(d.domain, 4, seed))
    assert all(c.passed for c in checks)


def test_delta_two_is_optimal():
    assert hardy.delta_argmin() == 2.0
    assert hardy.delta_argmin((0.5, 1.0, 3.0)) == 3.0


def test_limit_potential_matches_closed_form():
    d = solve_lane_emden(build_domain(DISK, 2 ** -7), 1.0)
    V = hardy.limit_potential(d)
    rep = compare(V.field, ClosedForm("ball_limit_potential", 2),
                  lambda x: np.linalg.norm(x, axis=1) <= 0.8)
    assert rep.max_rel <= 0.02


def test_limit_potential_on_slab_window():
    d = solve_lane_emden(build_domain(ShapeSpec.slab(1.0, 6.0), 2 ** -5), 1.0)
    V = hardy.limit_potential(d)
    rep = compare(V.field, ClosedForm("slab_limit_potential", 2),
                  lambda x: (np.abs(x[:, 1]) <= 1.0) & (np.abs(x[:, 0]) <= 0.8))
    assert rep.max_rel <= 0.02


def test_constant_field_gives_zero_potential(disk_torsion):
    const = LaneEmdenDensity(1.0, ScalarField.constant(disk_torsion.domain, 1.0), 1.0, 0, 0.0)
    assert np.all(hardy.limit_potential(const).values == 0)


def test_admissibility(disk_torsion):
    V = hardy.limit_potential(disk_torsion)
    assert hardy.check_admissible(V, disk_torsion).fraction == 1.0
    assert hardy.check_admissible(V.scaled(0.5), disk_torsion).admissible
    rep = hardy.check_admissible(V.scaled(2.0), disk_torsion)
    assert rep.fraction < 1 and rep.worst_violation > 0
    assert len(rep.worst_point) == 2
    with pytest.raises(DomainMismatch):
        hardy.check_admissible(Potential.zero(build_domain(DISK, 2 ** -5)), disk_torsion)


def test_theorem_bound_on_balls_and_interval():
    d1 = solve_lane_emden(build_domain(ShapeSpec.interval(-1, 1), 2 ** -6), 1.0)
    assert hardy.theorem_bound(d1) == pytest.approx(1.0, rel=1e-9)
    d3 = solve_lane_emden(build_domain(ShapeSpec.ball((0, 0, 0), 1.0), 2 ** -4), 1.0)
    assert hardy.theorem_bound(d3) == pytest.approx(3.0, rel=0.02)


def test_ground_state_representation(disk_torsion):
    r1 = hardy.ground_state_representation_check(disk_torsion, 1.0)
    assert r1.residual < 1e-6
    r2 = hardy.ground_state_representation_check(disk_torsion, 2.0)
    assert r2.passed and r2.residual <= 0.05


def test_ground_state_representation_interval_against_direct_stencil():
    h = 2 ** -8
    d = solve_lane_emden(build_domain(ShapeSpec.interval(-1, 1), h), 1.0, tol=1e-10)
    rep = hardy.ground_state_representation_check(d, 2.0)
    # same quantity evaluated on the exact torsion with a hand-written stencil
    x = np.arange(-1 + h, 1 - h / 2, h)
    w = (1 - x * x) / 2
    W = np.sqrt(w)
    Wp = np.concatenate([[0], W, [0]])
    lap = (2 * W - Wp[:-2] - Wp[2:]) / h ** 2
    rhs = W * (0.5 / w + 0.25 * (x / w) ** 2)
    keep = 1 - np.abs(x) >= 3 * h - 1e-12
    expected = np.linalg.norm((lap - rhs)[keep]) / np.linalg.norm(rhs[keep])
    assert rep.residual == pytest.approx(expected, rel=1e-5)
    assert rep.passed


def test_bilat(disk_torsion):
    lam = 1 / (disk_torsion.domain.cell_volume * disk_torsion.values.sum())
    r = hardy.check_bilat(disk_torsion, 1.0, lam)
    assert r.middle == pytest.approx(1.0, rel=1e-12) and r.upper == 1.0 and r.passed
    assert hardy.bilat_upper_constant(1.0, 1.5) == pytest.approx(4 / 3)
    assert hardy.bilat_upper_constant(1.25, 1.5) == pytest.approx(1.125)
    with pytest.raises(InvalidExponent):
        hardy.check_bilat(disk_torsion, 0.9, lam)
    with pytest.raises(InvalidExponent):
        hardy.check_bilat(disk_torsion, 2.0, lam)


def test_dorin(disk_torsion):
    lam = principal_eigenvalue(disk_torsion.domain).eigenvalue
    r = hardy.check_dorin(disk_torsion, lam)
    assert r.lower.value == pytest.approx(1 / lam)
    assert r.passed and r.looseness > 1e3


def test_linfty_estimate(disk_torsion):
    r2 = hardy.check_linfty_estimate(disk_torsion, (0.0, 0.0), 0.5, 2.0)
    r4 = hardy.check_linfty_estimate(disk_torsion, (0.0, 0.0), 0.5, 4.0)
    assert r2.passed and r4.passed and r4.rhs >= r2.rhs
    assert r2.constant == constants.moser_constant(2, 1.0)
    with pytest.raises(BallNotContained):
        hardy.check_linfty_estimate(disk_torsion, (0.5, 0.0), 0.6)
    with pytest.raises(ValueError):
        hardy.check_linfty_estimate(disk_torsion, (0.0, 0.0), 0.5, 1.0)


@pytest.fixture(scope="module")
def coarse_disk():
    return build_domain(DISK, 2 ** -5)


def test_certify_pass(coarse_disk):
    c = hardy.certify(coarse_disk, 1.0)
    assert c.verdict == "PASS" and c.positivity_claimed
    assert c.corollary_bound <= c.theorem_bound <= c.lambda1_V + c.slack
    assert c.admissibility == 1.0
    assert len(c.hardy_checks) == 4 * 24
    assert c.to_dict()["schema_version"] == "1"


def test_certify_rejects_inadmissible_potential(coarse_disk):
    c = hardy.certify(coarse_disk, 1.0, V=lambda d: hardy.limit_potential(d).scaled(3.0),
                      test_functions=[])
    assert c.verdict == "FAIL(ADMISSIBILITY)"
    assert not c.positivity_claimed


def test_certify_incomplete_keeps_partial_results(coarse_disk):
    wrong = Potential.zero(build_domain(DISK, 2 ** -4))
    c = hardy.certify(coarse_disk, 1.0, V=wrong)
    assert c.verdict == "INCOMPLETE"
    assert c.sup_norm is not None and c.lambda1 is not None
    assert c.lambda1_V is None and c.errors


def test_perturbation_margin_keeps_positivity(coarse_disk):
    d = solve_lane_emden(coarse_disk, 1.0)
    V = hardy.limit_potential(d)
    lam1 = principal_eigenvalue(coarse_disk).eigenvalue
    margin = constants.perturbation_margin(lam1, 2, 1.0)
    base = schrodinger_ground_state(coarse_disk, V).eigenvalue
    assert schrodinger_ground_state(coarse_disk, V.shifted_down(0.0)).eigenvalue == pytest.approx(base)
    shifted = schrodinger_ground_state(coarse_disk, V.shifted_down(0.9 * margin)).eigenvalue
    assert shifted > 0
