import numpy as np
import pytest

from spmhd.diagnostics import (InvariantRecord, PotentialRecoveryError, divergence_l2, drift, invariants,
                               l2_error, magnetic_helicity, recover_potential)
from spmhd.fem.forms import FormCache
from spmhd.fem.mesh import BoxSpec, build_box_mesh
from spmhd.fem.spaces import Field, interpolate
from spmhd.stepper import State


@pytest.fixture(scope="module")
def cube_cache():
    return FormCache(build_box_mesh(BoxSpec(subdivisions=2, dim=3)))


@pytest.fixture(scope="module")
def square_cache():
    return FormCache(build_box_mesh(BoxSpec(subdivisions=2, dim=2)))


def grad_bubble(points):
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    return np.stack([-2 * x * (1 - y ** 2) * (1 - z ** 2),
                     -2 * y * (1 - x ** 2) * (1 - z ** 2),
                     -2 * z * (1 - x ** 2) * (1 - y ** 2)], axis=1)


def zero_state(cache, rho=1.0):
    return State(0, 0.0, Field(cache.rt), Field(cache.rt),
                 Field(cache.dg, np.full(cache.dg.num_dofs, rho)), Field(cache.dg))


def test_zero_state_with_constant_density(cube_cache):
    record = invariants(zero_state(cube_cache, rho=2.0), cube_cache)
    assert record.mass == pytest.approx(16.0)
    assert record.rho2 == pytest.approx(32.0)
    assert record.energy == 0.0
    assert record.cross_helicity == 0.0
    assert record.magnetic_helicity == 0.0
    assert record.div_u_l2 == 0.0
    assert record.div_B_l2 == 0.0
    assert record.fp_iters == 0


def test_record_fields():
    assert InvariantRecord._fields == ('t', 'mass', 'rho2', 'energy', 'cross_helicity', 'magnetic_helicity',
                                       'div_u_l2', 'div_B_l2', 'fp_iters')


def test_cross_helicity_of_equal_fields(square_cache):
    u = Field(square_cache.rt, np.random.default_rng(1).standard_normal(square_cache.rt.num_dofs))
    state = State(0, 0.0, u, u.copy(), Field(square_cache.dg, np.ones(square_cache.dg.num_dofs)),
                  Field(square_cache.dg))
    record = invariants(state, square_cache)
    assert record.cross_helicity == pytest.approx(u.norm() ** 2)
    assert record.energy == pytest.approx(u.norm() ** 2)
    assert record.magnetic_helicity is None


def test_recovered_potential_has_the_right_curl(cube_cache):
    rng = np.random.default_rng(4)
    B = Field(cube_cache.rt, cube_cache.curl @ rng.standard_normal(cube_cache.ned.num_dofs))
    potential = recover_potential(B, cube_cache)
    np.testing.assert_allclose(cube_cache.curl @ potential.values, B.values, atol=1e-8 * np.abs(B.values).max())


def test_helicity_is_gauge_independent(cube_cache):
    """Adding a discrete gradient to the potential leaves the helicity unchanged."""
    rng = np.random.default_rng(8)
    B = Field(cube_cache.rt, cube_cache.curl @ rng.standard_normal(cube_cache.ned.num_dofs))
    potential = recover_potential(B, cube_cache)
    gauge = interpolate(cube_cache.ned, grad_bubble)
    np.testing.assert_allclose(cube_cache.curl @ gauge.values, 0.0, atol=1e-13)
    shifted = potential.values + gauge.values
    assert shifted @ (cube_cache.mixed_mass @ B.values) == pytest.approx(magnetic_helicity(B, cube_cache),
                                                                          abs=1e-10)


def test_no_potential_in_2d(square_cache):
    with pytest.raises(PotentialRecoveryError):
        recover_potential(Field(square_cache.rt), square_cache)


def test_zero_field_has_zero_potential(cube_cache):
    np.testing.assert_array_equal(recover_potential(Field(cube_cache.rt), cube_cache).values, 0.0)


def test_divergence_norm(square_cache):
    u = Field(square_cache.rt, np.zeros(square_cache.rt.num_dofs))
    u.values[0] = 1.0
    # a single facet flux leaves through one cell and enters the other
    volume = square_cache.mesh.cell_volume[0]
    assert divergence_l2(u, square_cache) == pytest.approx(np.sqrt(2.0 / volume))


def test_l2_error_against_zero_is_norm(square_cache):
    u = Field(square_cache.rt, np.random.default_rng(6).standard_normal(square_cache.rt.num_dofs))
    assert l2_error(u, None) == pytest.approx(u.norm(), rel=1e-12)


def test_l2_error_of_exact_field(square_cache):
    rho = Field(square_cache.dg, np.full(square_cache.dg.num_dofs, 3.0))
    assert l2_error(rho, lambda points, t: np.full(len(points), 3.0 + t), t=0.0) == pytest.approx(0.0, abs=1e-14)
    assert l2_error(rho, lambda points, t: np.full(len(points), 3.0 + t), t=1.0) == pytest.approx(2.0)


def make_record(t, mass, helicity=None):
    return InvariantRecord(t, mass, 1.0, 1.0, 0.0, helicity, 0.0, 0.0, 0)


def test_drift():
    records = [make_record(0.0, 2.0), make_record(0.1, 2.5), make_record(0.2, 1.0)]
    absolute, relative = drift(records, 'mass')
    assert absolute == pytest.approx([0.0, 0.5, 1.0])
    assert relative == pytest.approx([0.0, 0.25, 0.5])


def test_drift_of_missing_invariant():
    records = [make_record(0.0, 2.0), make_record(0.1, 2.0)]
    assert drift(records, 'magnetic_helicity') == ([None, None], [None, None])


def test_drift_of_vanishing_invariant():
    records = [make_record(0.0, 0.0), make_record(0.1, 1e-3)]
    absolute, relative = drift(records, 'mass')
    assert relative == absolute
