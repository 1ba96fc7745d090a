"""Structured quadrilateral mesh of the truncated quarter domain [0,L]^2 \\ [0,hole)^2.

Vertical edges carry the global normal +x, horizontal edges +y. Each
element lists its four edges in the order bottom, right, top, left together
with the sign n_K . n_e of its outward normal against the edge normal.
"""

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TAGS = ("hole_dirichlet", "symmetry_x0", "symmetry_y0", "outer")
INTERIOR_SKELETON = "interior_skeleton"

# local edge order and the outward normal sign of each relative to +x / +y
LOCAL_EDGES = ("bottom", "right", "top", "left")
LOCAL_SIGNS = (-1, 1, 1, -1)


class MeshConfigError(ValueError):
    pass


@dataclass
class Edge:
    index: int
    v0: int
    v1: int
    vertical: bool
    owners: list = field(default_factory=list)  # [(element, local edge, sign)]
    tag: str = INTERIOR_SKELETON

    @property
    def is_boundary(self):
        return len(self.owners) == 1


@dataclass
class Element:
    index: int
    x0: float
    y0: float
    h: float
    region: str
    edges: tuple  # global edge index per local edge
    signs: tuple
    vertices: tuple  # lower-left, lower-right, upper-right, upper-left

    @property
    def center(self):
        return (self.x0 + 0.5 * self.h, self.y0 + 0.5 * self.h)


@dataclass
class StructuredMesh:
    n_int: int
    n_pml: int
    l: float
    L: float
    hole: float
    h: float
    vertices: np.ndarray
    elements: list
    edges: list

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_vertices(self):
        return len(self.vertices)

    def edge_points(self, e):
        edge = self.edges[e]
        return self.vertices[edge.v0], self.vertices[edge.v1]

    def locate(self, x, y):
        """Index of the element containing (x, y), or -1 inside the hole / outside."""
        if not hasattr(self, "_cells"):
            self._cells = {
                (int(round(el.x0 / self.h)), int(round(el.y0 / self.h))): el.index for el in self.elements
            }
        n = self.n_int + self.n_pml
        i = min(int(np.floor(x / self.h)), n - 1)
        j = min(int(np.floor(y / self.h)), n - 1)
        if x < 0 or y < 0 or x > self.L or y > self.L:
            return -1
        return self._cells.get((i, j), -1)

    def boundary_edges(self, tag=None):
        return [e.index for e in self.edges if e.is_boundary and (tag is None or e.tag == tag)]

    def summary(self):
        counts = {t: len(self.boundary_edges(t)) for t in BOUNDARY_TAGS}
        return {
            "n_int": self.n_int,
            "n_pml": self.n_pml,
            "l": self.l,
            "L": self.L,
            "hole": self.hole,
            "h": self.h,
            "elements": self.n_elements,
            "interior_elements": sum(el.region == "interior" for el in self.elements),
            "pml_elements": sum(el.region == "pml" for el in self.elements),
            "edges": self.n_edges,
            "vertices": self.n_vertices,
            "boundary_edges": counts,
        }


def _classify(p0, p1, mesh_hole, L, tol):
    """Boundary tag of a boundary edge from its endpoints."""
    (xa, ya), (xb, yb) = p0, p1
    vertical = abs(xa - xb) < tol
    if vertical:
        x = xa
        if abs(x - L) < tol:
            return "outer"
        if abs(x) < tol:
            return "symmetry_x0"
        if mesh_hole > 0 and abs(x - mesh_hole) < tol and max(ya, yb) <= mesh_hole + tol:
            return "hole_dirichlet"
    else:
        y = ya
        if abs(y - L) < tol:
            return "outer"
        if abs(y) < tol:
            return "symmetry_y0"
        if mesh_hole > 0 and abs(y - mesh_hole) < tol and max(xa, xb) <= mesh_hole + tol:
            return "hole_dirichlet"
    raise MeshConfigError(f"boundary edge {p0}-{p1} matches no boundary subset")


def build_lshape_mesh(n_int=8, n_pml=4, l=2.0, L=3.0, hole=1.0):
    """Uniform mesh with ``n_int`` cells across [0, l] and ``n_pml`` across [l, L].

    ``hole = 0`` gives the full square.
    """
    if n_int < 1 or n_pml < 1:
        raise MeshConfigError("n_int and n_pml must be >= 1")
    if not 0.0 < l < L:
        raise MeshConfigError("need 0 < l < L")
    h = l / n_int
    if abs((L - l) / n_pml - h) > 1e-12 * L:
        raise MeshConfigError(f"interior cell size {h} differs from PML cell size {(L - l) / n_pml}")
    n_hole = hole / h
    if hole < 0 or abs(n_hole - round(n_hole)) > 1e-9:
        raise MeshConfigError(f"hole size {hole} is not a multiple of the cell size {h}")
    n_hole = int(round(n_hole))
    if n_hole >= n_int + n_pml:
        raise MeshConfigError("hole covers the whole domain")
    n = n_int + n_pml
    tol = 1e-9 * L

    vid = -np.ones((n + 1, n + 1), dtype=int)
    coords = []

    def vertex(i, j):
        if vid[i, j] < 0:
            vid[i, j] = len(coords)
            coords.append((i * h, j * h))
        return vid[i, j]

    edge_index = {}
    edges = []

    def edge(a, b, vertical):
        key = (min(a, b), max(a, b))
        if key not in edge_index:
            edge_index[key] = len(edges)
            edges.append(Edge(len(edges), key[0], key[1], vertical))
        return edge_index[key]

    elements = []
    for j in range(n):
        for i in range(n):
            if i < n_hole and j < n_hole:
                continue
            v = (vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1))
            x0, y0 = i * h, j * h
            region = "pml" if (x0 + h > l + tol or y0 + h > l + tol) else "interior"
            local = (
                edge(v[0], v[1], False),  # bottom
                edge(v[1], v[2], True),  # right
                edge(v[3], v[2], False),  # top
                edge(v[0], v[3], True),  # left
            )
            el = Element(len(elements), x0, y0, h, region, local, LOCAL_SIGNS, v)
            for k, e in enumerate(local):
                edges[e].owners.append((el.index, k, LOCAL_SIGNS[k]))
            elements.append(el)

    vertices = np.array(coords, dtype=float)
    for e in edges:
        # endpoints ordered by increasing coordinate along the edge
        p0, p1 = vertices[e.v0], vertices[e.v1]
        if (p1[1] if e.vertical else p1[0]) < (p0[1] if e.vertical else p0[0]):
            e.v0, e.v1 = e.v1, e.v0
        if e.is_boundary:
            e.tag = _classify(vertices[e.v0], vertices[e.v1], hole, L, tol)

    mesh = StructuredMesh(n_int, n_pml, l, L, hole, h, vertices, elements, edges)
    _check_topology(mesh)
    return mesh


def _check_topology(mesh):
    V, E, F = mesh.n_vertices, mesh.n_edges, mesh.n_elements
    if V - E + F != 1:
        raise MeshConfigError(f"Euler characteristic {V - E + F} != 1")
    for e in mesh.edges:
        if len(e.owners) == 2 and sum(s for _, _, s in e.owners) != 0:
            raise MeshConfigError(f"interior edge {e.index} owners do not have opposite signs")
        if len(e.owners) not in (1, 2):
            raise MeshConfigError(f"edge {e.index} has {len(e.owners)} owners")


def classify_edge(mesh, e):
    """Boundary tag of edge ``e`` or ``'interior_skeleton'``."""
    return mesh.edges[e].tag


def find_edge(mesh, p0, p1):
    """Index of the edge with endpoints p0, p1 (either order)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for e in mesh.edges:
        a, b = mesh.vertices[e.v0], mesh.vertices[e.v1]
        if (np.allclose(a, p0) and np.allclose(b, p1)) or (np.allclose(a, p1) and np.allclose(b, p0)):
            return e.index
    raise KeyError(f"no edge between {tuple(p0)} and {tuple(p1)}")
