import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lehardy.errors import DomainMismatch, InvalidDimension, SpacingTooCoarse
from lehardy.grid import (
    ScalarField,
    ShapeSpec,
    apply_laplacian,
    build_domain,
    cg_solve,
    default_floor,
    dirichlet_energy,
    gradient_norm_squared_field,
    l2_inner,
    solve_poisson,
)

DISK = ShapeSpec.ball((0.0, 0.0), 1.0)


def test_interval_nodes():
    dom = build_domain(ShapeSpec.interval(0.0, 2.0), 0.25)
    assert dom.M == 7
    np.testing.assert_allclose(dom.coords[:, 0], np.arange(1, 8) * 0.25)


def test_disk_half_spacing_counts_corners():
    # (+-0.5, +-0.5) have |x|^2 = 0.5 < 1, so all nine nodes are inside
    dom = build_domain(DISK, 0.5, boundary="staircase")
    assert dom.M == 9


def test_spacing_checks():
    with pytest.raises(SpacingTooCoarse):
        build_domain(ShapeSpec.interval(0.0, 1.0), 0.5)
    with pytest.raises(ValueError):
        build_domain(DISK, 0.0)


def test_shape_validation():
    with pytest.raises(InvalidDimension):
        ShapeSpec.ball((0, 0, 0, 0), 1.0)
    with pytest.raises(InvalidDimension):
        ShapeSpec("slab", 1, half_width=1.0, extent=1.0)
    with pytest.raises(ValueError):
        ShapeSpec.interval(1.0, 0.0)
    with pytest.raises(ValueError):
        ShapeSpec.ball((0.0, 0.0), -1.0)


@pytest.mark.parametrize("spec", [
    ShapeSpec.interval(-1, 2),
    ShapeSpec.rectangle([(0, 1), (0, 2)]),
    DISK,
    ShapeSpec.union_of_balls([((0, 0), 0.5), ((0.6, 0), 0.4)]),
    ShapeSpec.slab(1.0, 3.0, 3),
    ShapeSpec.waveguide(DISK, 2.0),
])
def test_shape_dict_roundtrip(spec):
    assert ShapeSpec.from_dict(spec.to_dict()) == spec


def test_truncation_only_for_unbounded():
    assert ShapeSpec.slab(1, 2).truncated(5).extent == 5
    with pytest.raises(ValueError):
        DISK.truncated(2.0)


@pytest.mark.parametrize("boundary", ["linear", "staircase"])
def test_laplacian_is_symmetric_m_matrix(boundary):
    dom = build_domain(DISK, 2 ** -4, boundary)
    A = dom.laplacian_matrix
    assert abs(A - A.T).max() == 0
    off = A.tocoo()
    offdiag = off.data[off.row != off.col]
    assert np.all(offdiag <= 0)
    # weak diagonal dominance, strict on boundary-adjacent rows
    rowsum = np.asarray(A.sum(axis=1)).ravel()
    assert np.all(rowsum >= -1e-9)
    assert np.any(rowsum > 0)


def test_interior_rows_are_plain_stencil():
    dom = build_domain(ShapeSpec.rectangle([(0, 1), (0, 1)]), 0.125)
    A = dom.laplacian_matrix.toarray()
    centre = dom.index_of(np.array([[4, 4]]))[0]
    assert A[centre, centre] == pytest.approx(4 / 0.125 ** 2)
    assert np.sum(A[centre] != 0) == 5


def test_index_of_and_lattice():
    dom = build_domain(DISK, 0.25)
    assert dom.index_of(np.array([[0, 0]]))[0] >= 0
    assert dom.index_of(np.array([[4, 0]]))[0] == -1
    idx = dom.index_of(dom.lattice_index)
    np.testing.assert_array_equal(idx, np.arange(dom.M))


def test_boundary_fraction_on_disk():
    h = 0.25
    dom = build_domain(DISK, h)
    i = dom.index_of(np.array([[3, 0]]))[0]
    # node at x=0.75, boundary at x=1 along +x: exactly one spacing away
    assert dom.boundary_fraction[i, 0, 1] == pytest.approx(1.0, abs=1e-9)
    j = dom.index_of(np.array([[2, 3]]))[0]
    # node (0.5, 0.75): boundary at y = sqrt(0.75) along +y
    theta = (math.sqrt(0.75) - 0.75) / h
    assert dom.boundary_fraction[j, 1, 1] == pytest.approx(theta, abs=1e-9)


def test_scalar_field_immutable_and_finite():
    dom = build_domain(DISK, 0.25)
    u = ScalarField.constant(dom, 1.0)
    with pytest.raises(ValueError):
        u.values[0] = 2.0
    with pytest.raises(ValueError):
        ScalarField(dom, np.full(dom.M, np.nan))
    with pytest.raises(DomainMismatch):
        ScalarField(dom, np.ones(dom.M + 1))
    other = build_domain(DISK, 0.125)
    with pytest.raises(DomainMismatch):
        l2_inner(u, ScalarField.constant(other, 1.0))


def test_interval_torsion_is_exact():
    # the 3-point stencil is exact on quadratics and the ends are lattice nodes
    dom = build_domain(ShapeSpec.interval(-1, 1), 2 ** -5)
    w = solve_poisson(ScalarField.constant(dom, 1.0), tol=1e-13)
    x = dom.coords[:, 0]
    np.testing.assert_allclose(w.values, (1 - x * x) / 2, atol=1e-12)


def test_disk_torsion_second_order():
    errs = []
    hs = [2.0 ** -k for k in (4, 5, 6, 7)]
    for h in hs:
        dom = build_domain(DISK, h)
        w = solve_poisson(ScalarField.constant(dom, 1.0), tol=1e-11)
        exact = (1 - np.sum(dom.coords ** 2, axis=1)) / 4
        errs.append(np.abs(w.values - exact).max())
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.8
    assert errs[-1] < 1e-4


def test_staircase_is_much_less_accurate():
    errs = {}
    for mode in ("linear", "staircase"):
        dom = build_domain(DISK, 2 ** -6, mode)
        w = solve_poisson(ScalarField.constant(dom, 1.0), tol=1e-11)
        centre = dom.index_of(np.array([[0, 0]]))[0]
        errs[mode] = abs(w.values[centre] - 0.25)
    assert errs["staircase"] > 10 * errs["linear"]


def test_gradient_field_of_linear_function():
    dom = build_domain(ShapeSpec.rectangle([(0, 1), (0, 1)]), 0.1)
    u = ScalarField.from_function(dom, lambda x: 2 * x[:, 0] + 3 * x[:, 1] + 1)
    g = gradient_norm_squared_field(u, floor=1e-3)
    np.testing.assert_allclose(g.values, 13 / u.values ** 2, rtol=1e-12)
    assert default_floor(0.1) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        gradient_norm_squared_field(u, floor=0.0)


def test_gradient_field_is_zero_for_constant():
    dom = build_domain(DISK, 0.125)
    g = gradient_norm_squared_field(ScalarField.constant(dom, 2.0))
    assert np.all(g.values == 0)


def test_cg_zero_rhs_and_energy():
    dom = build_domain(DISK, 0.125)
    x, it = cg_solve(dom.laplacian_matrix, np.zeros(dom.M), 1e-10)
    assert it == 0 and not x.any()
    u = ScalarField.from_function(dom, lambda x: np.cos(x[:, 0]))
    assert dirichlet_energy(u) == pytest.approx(l2_inner(apply_laplacian(u), u), rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_summation_by_parts(seed):
    dom = build_domain(ShapeSpec.union_of_balls([((0, 0), 0.6), ((0.5, 0.2), 0.4)]), 2 ** -4)
    rng = np.random.default_rng(seed)
    u = ScalarField(dom, rng.standard_normal(dom.M))
    v = ScalarField(dom, rng.standard_normal(dom.M))
    a, b = l2_inner(apply_laplacian(u), v), l2_inner(u, apply_laplacian(v))
    assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))
    assert dirichlet_energy(u) > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 0.9), st.floats(-0.3, 0.3), st.integers(0, 2 ** 32 - 1))
def test_maximum_principle(r, c, seed):
    dom = build_domain(ShapeSpec.ball((c, -c), r), 2 ** -4)
    f = np.random.default_rng(seed).uniform(0, 1, dom.M)
    u = solve_poisson(ScalarField(dom, f), tol=1e-12)
    assert u.values.min() >= 0
