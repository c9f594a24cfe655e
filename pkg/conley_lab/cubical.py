"""Cubical complexes of sampled functions and their relative homology over Z2.

A lattice of N^m vertices carries (2N - 1)^m cells indexed on the doubled
lattice: an index is odd along the axes the cell extends in, so the
dimension of a cell is its number of odd indices. A cell takes the largest
value among its vertices (lower-star filtration).

    >>> import numpy as np
    >>> values = np.array([1.0, 0.0, 1.0])
    >>> relative_betti(values, 0.0, -0.5)
    [1, 0]
"""


import logging


import numpy as np


log = logging.getLogger(__name__)


def lower_star_values(vertex_values):
    """Cell values on the doubled lattice, each cell taking the max over its vertices."""
    values = np.asarray(vertex_values, dtype = float)
    for axis in range(values.ndim):
        count = values.shape[axis]
        shape = list(values.shape)
        shape[axis] = 2 * count - 1
        doubled = np.empty(shape)
        even = [slice(None)] * values.ndim
        odd = [slice(None)] * values.ndim
        even[axis] = slice(0, None, 2)
        odd[axis] = slice(1, None, 2)
        doubled[tuple(even)] = values
        doubled[tuple(odd)] = np.maximum(
            np.take(values, np.arange(count - 1), axis = axis),
            np.take(values, np.arange(1, count), axis = axis),
            )
        values = doubled
    return values


def cell_dimensions(shape):
    """Dimension of every cell of a doubled lattice of the given shape."""
    dimensions = np.zeros(shape, dtype = int)
    for axis, size in enumerate(shape):
        parity = (np.arange(size) % 2).reshape([-1 if i == axis else 1 for i in range(len(shape))])
        dimensions = dimensions + parity
    return dimensions


def boundary_columns(cells, shape):
    """Z2 boundary of each cell in ``cells`` restricted to faces also in ``cells``.

    ``cells`` is a boolean mask on the doubled lattice; columns are keyed by
    flat cell index and hold sets of flat face indices.
    """
    strides = np.array([int(np.prod(shape[axis + 1:])) for axis in range(len(shape))])
    flat_cells = np.flatnonzero(cells)
    members = set(flat_cells.tolist())
    coordinates = np.array(np.unravel_index(flat_cells, shape)).T if len(flat_cells) else np.zeros((0, len(shape)), dtype = int)
    columns = dict()
    for index, coordinate in zip(flat_cells.tolist(), coordinates):
        faces = set()
        for axis in np.flatnonzero(coordinate % 2):
            for face in (index - strides[axis], index + strides[axis]):
                if face in members:
                    faces.add(face)
        columns[index] = faces
    return columns


def reduce_columns(columns):
    """Column reduction over Z2 by lowest ones.

    Returns the lowest row of every nonzero reduced column mapped to that column.
    """
    pivots = dict()
    for index in sorted(columns):
        column = set(columns[index])
        while column:
            low = max(column)
            if low not in pivots:
                pivots[low] = index
                break
            column ^= columns[pivots[low]]
        columns[index] = column
    return pivots


def relative_betti(vertex_values, level, lower_level, tol = 1e-12):
    """Z2 Betti numbers of the pair ({f <= level}, {f <= lower_level}) of a sampled function.

    Returns a list indexed by degree 0..m.
    """
    vertex_values = np.asarray(vertex_values, dtype = float)
    assert lower_level < level, "Lower level must lie strictly below the level"
    m = vertex_values.ndim
    values = lower_star_values(vertex_values)
    slack = tol * float(np.max(np.abs(values - level)))
    relative = (values <= level + slack) & ~(values <= lower_level)
    dimensions = cell_dimensions(values.shape)
    columns = boundary_columns(relative, values.shape)
    flat_dimensions = dimensions.reshape(-1)
    counts = [int(np.sum(relative & (dimensions == k))) for k in range(m + 1)]
    pivots = reduce_columns(columns)
    ranks = [0] * (m + 2)
    for column in pivots.values():
        ranks[flat_dimensions[column]] += 1
    betti = [counts[k] - ranks[k] - ranks[k + 1] for k in range(m + 1)]
    log.debug("Relative cubical pair with {} cells: betti {}".format(sum(counts), betti))
    return betti
