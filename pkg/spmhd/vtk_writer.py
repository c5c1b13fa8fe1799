"""
Legacy ASCII VTK snapshots of a discrete state.
"""
import logging
from pathlib import Path

import numpy as np

from spmhd.fem.forms import FormCache

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5
VTK_TETRA = 10


def _number(value) -> str:
    return format(float(value), '.17g')


def _row(values) -> str:
    return " ".join(_number(v) for v in values)


def _padded(vectors: np.ndarray) -> np.ndarray:
    """VTK wants three components per point and vector."""
    if vectors.shape[1] == 3:
        return vectors
    return np.hstack([vectors, np.zeros((vectors.shape[0], 3 - vectors.shape[1]))])


def cell_averages(field) -> np.ndarray:
    """Cell means of an RT0 field, i.e. its values at the cell centroids."""
    dim = field.space.mesh.dim
    centroid = np.full((1, dim + 1), 1.0 / (dim + 1))
    return field.space.values_at(field.values, centroid)[:, 0, :]


def write_vtk(state, cache: FormCache, path: Path, title: str = None) -> Path:
    """
    Writes ``state`` as an unstructured grid with the cell data ``rho``, ``p``,
    ``div_u``, ``div_B`` and the cell-averaged vectors ``u`` and ``B``.

    :param state: the state to write
    :param cache: form cache of the mesh the state lives on
    :param path: output file
    :param title: header line, the step and time by default
    :return: the written path
    """
    mesh = cache.mesh
    path = Path(path)
    volume = mesh.cell_volume
    cell_type = VTK_TRIANGLE if mesh.dim == 2 else VTK_TETRA
    num_cells, nodes = mesh.cells.shape
    if title is None:
        title = "spmhd state k={k} t={t}".format(k=state.k, t=_number(state.t))

    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             "POINTS {n} double".format(n=mesh.num_vertices)]
    lines.extend(_row(p) for p in _padded(mesh.vertices))
    lines.append("CELLS {n} {size}".format(n=num_cells, size=num_cells * (nodes + 1)))
    lines.extend("{n} ".format(n=nodes) + " ".join(str(int(v)) for v in cell) for cell in mesh.cells)
    lines.append("CELL_TYPES {n}".format(n=num_cells))
    lines.extend(str(cell_type) for _ in range(num_cells))

    lines.append("CELL_DATA {n}".format(n=num_cells))
    scalars = [('rho', state.rho.values),
               ('p', state.p.values),
               ('div_u', (cache.div @ state.u.values) / volume),
               ('div_B', (cache.div @ state.B.values) / volume)]
    for name, values in scalars:
        lines.append("SCALARS {name} double 1".format(name=name))
        lines.append("LOOKUP_TABLE default")
        lines.extend(_number(v) for v in values)
    for name, field in (('u', state.u), ('B', state.B)):
        lines.append("VECTORS {name} double".format(name=name))
        lines.extend(_row(v) for v in _padded(cell_averages(field)))

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(mode='w') as file:
        file.write("\n".join(lines) + "\n")
    logger.debug("Wrote snapshot %s", path)
    return path
