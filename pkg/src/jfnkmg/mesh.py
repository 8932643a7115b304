"""Nested structured mesh hierarchies.

Two families are supported: triangulations of the unit square and hexahedral
grids of an axis-aligned box (the 10 x 1 x 1 beam). Nodes are numbered
lexicographically with x running fastest, so every level is fully described
by its cell counts and the transfer stencils can be built from grid indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "MeshLevel",
    "MeshHierarchy",
    "BoundarySpec",
    "build_unit_square_hierarchy",
    "build_beam_hierarchy",
    "refine",
    "dump_mesh",
]

# coords (n, d) -> (mask (n,), values (n, n_components))
BoundarySpec = Callable[[np.ndarray], tuple]

_COORD_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeshLevel:
    """One level of a structured mesh hierarchy.

    ``dirichlet_values`` holds one row per entry of ``dirichlet_nodes`` with
    ``n_components`` columns.
    """

    level_index: int
    cells: tuple
    lower: tuple
    upper: tuple
    node_coords: np.ndarray
    elements: np.ndarray
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray
    n_components: int = 1
    boundary: Optional[BoundarySpec] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def n_nodes(self) -> int:
        return self.node_coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.n_components

    @property
    def grid_shape(self) -> tuple:
        """Nodes per axis, ordered (x, y[, z])."""
        return tuple(c + 1 for c in self.cells)

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / np.asarray(self.cells)

    def boundary_mask(self) -> np.ndarray:
        x = self.node_coords
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.any((np.abs(x - lo) < _COORD_TOL) | (np.abs(x - hi) < _COORD_TOL), axis=1)

    def constrained_dofs(self) -> np.ndarray:
        """Dof indices (node-major, component-minor) fixed by Dirichlet data."""
        c = self.n_components
        return (self.dirichlet_nodes[:, None] * c + np.arange(c)).ravel()

    def constrained_values(self) -> np.ndarray:
        return self.dirichlet_values.ravel()


@dataclass(frozen=True, eq=False)
class MeshHierarchy:
    levels: tuple

    @property
    def dimension(self) -> int:
        return self.levels[0].dim

    @property
    def finest(self) -> MeshLevel:
        return self.levels[-1]

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, i: int) -> MeshLevel:
        return self.levels[i]


def _grid_nodes(cells, lower, upper) -> np.ndarray:
    axes = [np.linspace(lo, hi, n + 1) for n, lo, hi in zip(cells, lower, upper)]
    # meshgrid with reversed axes gives x-fastest lexicographic ordering
    mesh = np.meshgrid(*axes[::-1], indexing="ij")
    return np.stack([m.ravel() for m in mesh[::-1]], axis=1)


def _triangles(nx: int, ny: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n00 = (j * (nx + 1) + i).ravel()
    n10 = n00 + 1
    n01 = n00 + nx + 1
    n11 = n01 + 1
    # both halves share the (low-x, low-y) -> (high-x, high-y) diagonal
    lower_tri = np.stack([n00, n10, n11], axis=1)
    upper_tri = np.stack([n00, n11, n01], axis=1)
    return np.stack([lower_tri, upper_tri], axis=1).reshape(-1, 3)


def _hexahedra(nx: int, ny: int, nz: int) -> np.ndarray:
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    sx = 1
    sy = nx + 1
    sz = (nx + 1) * (ny + 1)
    base = (k * sz + j * sy + i * sx).ravel()
    offsets = np.array([0, sx, sx + sy, sy, sz, sz + sx, sz + sx + sy, sz + sy])
    return base[:, None] + offsets[None, :]


def _make_level(level_index, cells, lower, upper, boundary, n_components) -> MeshLevel:
    coords = _grid_nodes(cells, lower, upper)
    if len(cells) == 2:
        elements = _triangles(*cells)
    else:
        elements = _hexahedra(*cells)
    mask, values = boundary(coords)
    mask = np.asarray(mask, dtype=bool)
    values = np.asarray(values, dtype=float).reshape(coords.shape[0], n_components)
    nodes = np.flatnonzero(mask)
    return MeshLevel(
        level_index=level_index,
        cells=tuple(int(c) for c in cells),
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        node_coords=coords,
        elements=elements,
        dirichlet_nodes=nodes,
        dirichlet_values=values[nodes].copy(),
        n_components=n_components,
        boundary=boundary,
    )


def _whole_boundary(lower, upper, n_components):
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)

    def spec(coords):
        mask = np.any((np.abs(coords - lo) < _COORD_TOL) | (np.abs(coords - hi) < _COORD_TOL), axis=1)
        return mask, np.zeros((coords.shape[0], n_components))

    return spec


def _beam_ends(length, n_components):
    def spec(coords):
        x = coords[:, 0]
        mask = (np.abs(x) < _COORD_TOL) | (np.abs(x - length) < _COORD_TOL)
        return mask, np.zeros((coords.shape[0], n_components))

    return spec


def _check_counts(*counts):
    for c in counts:
        if int(c) != c or c < 1:
            raise ValueError(f"mesh counts must be positive integers, got {c!r}")


def refine(mesh: MeshLevel) -> MeshLevel:
    """Uniformly refine a level: every cell is split into 2**d children.

    On the structured triangulation used here, quadrisection by edge
    midpoints coincides with halving the grid spacing and keeping the
    diagonal orientation, so the refined level is rebuilt from its cell
    counts. Parent nodes reappear at the even grid indices.
    """
    boundary = mesh.boundary
    if boundary is None:
        boundary = _whole_boundary(mesh.lower, mesh.upper, mesh.n_components)
    cells = tuple(2 * c for c in mesh.cells)
    return _make_level(mesh.level_index + 1, cells, mesh.lower, mesh.upper, boundary, mesh.n_components)


def _hierarchy(level0: MeshLevel, n_levels: int) -> MeshHierarchy:
    levels = [level0]
    for _ in range(n_levels - 1):
        levels.append(refine(levels[-1]))
    return MeshHierarchy(tuple(levels))


def build_unit_square_hierarchy(
    n0: int,
    n_levels: int,
    boundary: Optional[BoundarySpec] = None,
    n_components: int = 1,
) -> MeshHierarchy:
    """Triangulated unit square with ``n0`` cells per side on level 0.

    ``boundary`` maps node coordinates to ``(mask, values)``; by default the
    whole boundary is tagged with homogeneous data.
    """
    _check_counts(n0, n_levels)
    lower, upper = (0.0, 0.0), (1.0, 1.0)
    if boundary is None:
        boundary = _whole_boundary(lower, upper, n_components)
    level0 = _make_level(0, (n0, n0), lower, upper, boundary, n_components)
    return _hierarchy(level0, n_levels)


def build_beam_hierarchy(
    nx: int,
    ny: int,
    nz: int,
    n_levels: int,
    boundary: Optional[BoundarySpec] = None,
    n_components: int = 3,
    length: float = 10.0,
) -> MeshHierarchy:
    """Hexahedral grid of (0, length) x (0, 1) x (0, 1).

    The default boundary tags the two end faces x = 0 and x = length with
    zero data; problems supply their own values through ``boundary``.
    """
    _check_counts(nx, ny, nz, n_levels)
    lower, upper = (0.0, 0.0, 0.0), (float(length), 1.0, 1.0)
    if boundary is None:
        boundary = _beam_ends(length, n_components)
    level0 = _make_level(0, (nx, ny, nz), lower, upper, boundary, n_components)
    return _hierarchy(level0, n_levels)


def dump_mesh(mesh: MeshLevel, path) -> None:
    """Write a plain-text dump: header, one node per line, one element per line."""
    with open(path, "w") as fh:
        fh.write(f"# level {mesh.level_index} dim {mesh.dim} nodes {mesh.n_nodes} elements {mesh.n_elements}\n")
        for p in mesh.node_coords:
            fh.write("v " + " ".join(repr(float(c)) for c in p) + "\n")
        for e in mesh.elements:
            fh.write("e " + " ".join(str(int(n)) for n in e) + "\n")
        for n in mesh.dirichlet_nodes:
            fh.write(f"d {int(n)}\n")
