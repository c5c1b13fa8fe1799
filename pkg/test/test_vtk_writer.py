from pathlib import Path

import numpy as np
import pytest

from spmhd.fem.forms import FormCache
from spmhd.fem.mesh import BoxSpec, build_box_mesh
from spmhd.fem.spaces import Field
from spmhd.stepper import State
from spmhd.vtk_writer import VTK_TETRA, VTK_TRIANGLE, cell_averages, write_vtk


def read_sections(path: Path) -> dict:
    """Splits a legacy VTK file into its keyword sections."""
    lines = path.read_text().splitlines()
    sections = {'header': lines[:4]}
    name = None
    for line in lines[4:]:
        words = line.split()
        if words[0] in ('POINTS', 'CELLS', 'CELL_TYPES', 'CELL_DATA', 'LOOKUP_TABLE'):
            if words[0] != 'LOOKUP_TABLE':
                name = words[0]
                sections[name] = {'declaration': words, 'rows': []}
            continue
        if words[0] in ('SCALARS', 'VECTORS'):
            name = words[1]
            sections[name] = {'declaration': words, 'rows': []}
            continue
        sections[name]['rows'].append([float(w) for w in words])
    return sections


@pytest.fixture
def square_cache():
    return FormCache(build_box_mesh(BoxSpec(subdivisions=1, dim=2)))


def constant_state(cache, rho=2.0):
    return State(3, 0.25, Field(cache.rt), Field(cache.rt),
                 Field(cache.dg, np.full(cache.dg.num_dofs, rho)), Field(cache.dg))


def test_two_triangles(tmpdir, square_cache):
    path = write_vtk(constant_state(square_cache), square_cache, Path(str(tmpdir)) / 'nested' / 'state.vtk')
    assert path.is_file()
    sections = read_sections(path)

    assert sections['header'] == ["# vtk DataFile Version 2.0", "spmhd state k=3 t=0.25", "ASCII",
                                  "DATASET UNSTRUCTURED_GRID"]
    assert sections['POINTS']['declaration'] == ['POINTS', '4', 'double']
    assert len(sections['POINTS']['rows']) == 4
    assert sections['CELLS']['declaration'] == ['CELLS', '2', '8']
    assert [row[0] for row in sections['CELLS']['rows']] == [3, 3]
    assert sections['CELL_TYPES']['rows'] == [[VTK_TRIANGLE], [VTK_TRIANGLE]]
    assert sections['CELL_DATA']['declaration'] == ['CELL_DATA', '2']
    assert sections['rho']['rows'] == [[2.0], [2.0]]
    assert sections['rho']['declaration'] == ['SCALARS', 'rho', 'double', '1']
    assert sections['u']['rows'] == [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]


def test_rho_is_written_exactly(tmpdir, square_cache):
    path = write_vtk(constant_state(square_cache, rho=2.0), square_cache, Path(str(tmpdir)) / 'state.vtk')
    lines = path.read_text().splitlines()
    start = lines.index("SCALARS rho double 1")
    assert lines[start + 1] == "LOOKUP_TABLE default"
    assert lines[start + 2:start + 4] == ["2", "2"]


def test_points_and_connectivity_round_trip(tmpdir):
    cache = FormCache(build_box_mesh(BoxSpec(subdivisions=1, dim=3)))
    rng = np.random.default_rng(9)
    state = constant_state(cache)
    state.u = Field(cache.rt, rng.standard_normal(cache.rt.num_dofs))
    path = write_vtk(state, cache, Path(str(tmpdir)) / 'cube.vtk', title='cube')
    sections = read_sections(path)

    assert sections['header'][1] == 'cube'
    np.testing.assert_array_equal(np.array(sections['POINTS']['rows']), cache.mesh.vertices)
    np.testing.assert_array_equal(np.array(sections['CELLS']['rows'])[:, 1:], cache.mesh.cells)
    assert sections['CELL_TYPES']['rows'] == [[VTK_TETRA]] * 6
    np.testing.assert_array_equal(np.array(sections['u']['rows']), cell_averages(state.u))
    np.testing.assert_allclose(np.array(sections['div_u']['rows'])[:, 0],
                               cache.div @ state.u.values / cache.mesh.cell_volume)


def test_cell_averages_of_solenoidal_field(square_cache):
    u = Field(square_cache.rt, [1.0])
    averages = cell_averages(u)
    assert averages.shape == (2, 2)
    # flux leaves the first cell and enters the second
    normal = square_cache.mesh.facet_normal[square_cache.rt.dof_entity[0]]
    assert averages[0] @ normal > 0
    assert averages[1] @ normal > 0
