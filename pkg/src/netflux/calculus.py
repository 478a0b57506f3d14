"""Sampled functions, measures, and first-order calculus on metric networks.

Functions live on a per-edge uniform mesh whose nodes include both edge
endpoints.  The network measure restricts to edgewise Lebesgue measure, so
integrals are sums of per-edge composite trapezoid rules.  Smoothness at a
vertex is checked through paths that run across it: one-sided derivatives
must vanish where three or more edge ends meet and must match, with a sign
flip when orientations oppose, where exactly two meet.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .network import (
    EdgeInterior,
    Network,
    NetworkError,
    NetworkPoint,
    UnknownEdge,
    Vertex,
)


class MeshMismatch(NetworkError):
    """Operands are sampled on different meshes."""


class AtomOffNetwork(NetworkError):
    """A weighted atom refers to a point outside the network."""


@dataclass(frozen=True)
class Mesh:
    """Per-edge uniform meshes with nodes at both endpoints.

    Cell counts come from a target spacing h: n_e = max(1, round(w_e / h)),
    so each edge is meshed with spacing h_e = w_e / n_e and the endpoints
    land exactly on nodes.
    """

    net: Network
    cells: Mapping[Hashable, int]
    spacing: Mapping[Hashable, float]

    @classmethod
    def build(cls, net: Network, h: float) -> "Mesh":
        if not h > 0.0:
            raise ValueError(f"target spacing must be positive, got {h!r}")
        cells = {}
        spacing = {}
        for e in net.edges:
            n = max(1, round(e.length / h))
            cells[e.key] = n
            spacing[e.key] = e.length / n
        return cls(net=net, cells=cells, spacing=spacing)

    def nodes(self, key) -> np.ndarray:
        e = self.net.edge(key)
        return np.linspace(0.0, e.length, self.cells[key] + 1)

    def midpoints(self, key) -> np.ndarray:
        x = self.nodes(key)
        return 0.5 * (x[:-1] + x[1:])

    def compatible(self, other: "Mesh") -> bool:
        return (
            self.net is other.net
            and dict(self.cells) == dict(other.cells)
            and dict(self.spacing) == dict(other.spacing)
        )


def _require_same_mesh(a: "GridFunction", b: "GridFunction") -> None:
    if a.mesh is not b.mesh and not a.mesh.compatible(b.mesh):
        raise MeshMismatch("grid functions live on different meshes")


@dataclass(frozen=True)
class GridFunction:
    """Node samples of a scalar function, one array per edge."""

    mesh: Mesh
    values: Mapping[Hashable, np.ndarray]

    @classmethod
    def sample(cls, mesh: Mesh, fn: Callable) -> "GridFunction":
        """Sample fn(edge_key, node_coordinates) on every edge."""
        values = {}
        for e in mesh.net.edges:
            x = mesh.nodes(e.key)
            v = np.asarray(fn(e.key, x), dtype=float)
            if v.shape != x.shape:
                raise ValueError(
                    f"sampler returned shape {v.shape} on edge {e.key!r}, "
                    f"expected {x.shape}"
                )
            values[e.key] = v
        return cls(mesh=mesh, values=values)

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "GridFunction":
        return cls.sample(mesh, lambda key, x: np.full_like(x, float(value)))

    def edge_values(self, key) -> np.ndarray:
        try:
            return self.values[key]
        except KeyError:
            raise UnknownEdge(f"no edge with key {key!r}") from None

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.values.values())

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _require_same_mesh(self, other)
        return GridFunction(
            self.mesh,
            {k: self.values[k] + other.values[k] for k in self.values},
        )

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _require_same_mesh(self, other)
        return GridFunction(
            self.mesh,
            {k: self.values[k] - other.values[k] for k in self.values},
        )

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(
            self.mesh, {k: v * float(scalar) for k, v in self.values.items()}
        )

    __rmul__ = __mul__


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite list of weighted atoms sitting at network points."""

    atoms: tuple

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, w in self.atoms)


@dataclass(frozen=True)
class C1Report:
    """Vertexwise smoothness verdict for a sampled function.

    ``violations`` holds (vertex, edge_key, magnitude) records.  Where three
    or more edge ends meet, the magnitude is the one-sided derivative that
    should vanish; where exactly two meet, it is the mismatch of the two
    path-oriented derivatives.
    """

    continuous: bool
    worst_mismatch: float
    worst_vertex: object
    violations: tuple

    @property
    def passed(self) -> bool:
        return self.continuous and not self.violations


def total_measure(net: Network) -> float:
    """Total length of the network (its measure assigns each edge its length)."""
    return math.fsum(e.length for e in net.edges)


def integrate(net: Network, f: GridFunction) -> float:
    """Composite trapezoid integral over all edges (exact for affine data)."""
    if f.mesh.net is not net:
        raise MeshMismatch("grid function was sampled on a different network")
    total = []
    for e in net.edges:
        v = f.values[e.key]
        h = f.mesh.spacing[e.key]
        total.append(h * (0.5 * v[0] + float(v[1:-1].sum()) + 0.5 * v[-1]))
    return math.fsum(total)


def _edge_end_slopes(f: GridFunction, key) -> tuple:
    """Oriented one-sided derivative estimates (at tail, at head).

    Second order where the edge has at least three nodes, first order on a
    single-cell edge.
    """
    v = f.values[key]
    h = f.mesh.spacing[key]
    if v.shape[0] >= 3:
        at_tail = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        at_head = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    else:
        at_tail = at_head = (v[1] - v[0]) / h
    return float(at_tail), float(at_head)


def check_c1(net: Network, f: GridFunction, tol: float = 1e-8) -> C1Report:
    """Check continuity and path differentiability of f across vertices.

    Both checks use the relative threshold tol * (1 + max|f|).  At each
    vertex the outgoing slope of an edge end is the derivative of f along a
    path leaving the vertex into that edge; it equals the oriented edge
    derivative at a tail end and its negation at a head end.
    """
    if f.mesh.net is not net:
        raise MeshMismatch("grid function was sampled on a different network")
    scale = tol * (1.0 + f.max_abs())

    slopes = {key: _edge_end_slopes(f, key) for key in f.values}
    continuous = True
    worst = 0.0
    worst_vertex = None
    violations = []

    for v in net.vertices:
        ends = net.edge_ends(v)
        samples = []
        outgoing = []
        for key, end in ends:
            vals = f.values[key]
            at_tail, at_head = slopes[key]
            if end == "tail":
                samples.append(float(vals[0]))
                outgoing.append((key, at_tail))
            else:
                samples.append(float(vals[-1]))
                outgoing.append((key, -at_head))

        mismatch = max(samples) - min(samples)
        if mismatch > worst:
            worst = mismatch
            worst_vertex = v
        if mismatch > scale:
            continuous = False

        if len(ends) >= 3:
            for key, g in outgoing:
                if abs(g) > scale:
                    violations.append((v, key, abs(g)))
        elif len(ends) == 2:
            # A path runs straight through: the slope out of one end must be
            # the negative of the slope out of the other.
            (k1, g1), (k2, g2) = outgoing
            if abs(g1 + g2) > scale:
                violations.append((v, k2, abs(g1 + g2)))

    return C1Report(
        continuous=continuous,
        worst_mismatch=worst,
        worst_vertex=worst_vertex,
        violations=tuple(violations),
    )


def spatial_derivative(net: Network, f: GridFunction) -> GridFunction:
    """Edgewise derivative in the tail-to-head direction.

    Central differences at interior nodes, second-order one-sided stencils
    at the edge ends (first-order on single-cell edges).
    """
    if f.mesh.net is not net:
        raise MeshMismatch("grid function was sampled on a different network")
    out = {}
    for e in net.edges:
        v = f.values[e.key]
        h = f.mesh.spacing[e.key]
        d = np.empty_like(v)
        if v.shape[0] >= 3:
            d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
            d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        else:
            d[:] = (v[1] - v[0]) / h
        out[e.key] = d
    return GridFunction(mesh=f.mesh, values=out)


def edge_boundary_sum(net: Network, f: GridFunction, g: GridFunction) -> float:
    """Sum over edges of (f*g) at the head minus (f*g) at the tail."""
    _require_same_mesh(f, g)
    terms = []
    for e in net.edges:
        terms.append(float(f.values[e.key][-1]) * float(g.values[e.key][-1]))
        terms.append(-float(f.values[e.key][0]) * float(g.values[e.key][0]))
    return math.fsum(terms)


def vertex_boundary_sum(net: Network, f: GridFunction, g: GridFunction) -> float:
    """The same boundary total regrouped vertex by vertex.

    Each edge end belongs to exactly one vertex, so collecting incoming head
    values minus outgoing tail values at every vertex reproduces the
    edgewise sum term for term.
    """
    _require_same_mesh(f, g)
    terms = []
    for v in net.vertices:
        for key, end in net.edge_ends(v):
            if end == "head":
                terms.append(float(f.values[key][-1]) * float(g.values[key][-1]))
            else:
                terms.append(-float(f.values[key][0]) * float(g.values[key][0]))
    return math.fsum(terms)


def integration_by_parts_residual(
    net: Network, f: GridFunction, g: GridFunction
) -> float:
    """|integral of (Df*g + f*Dg) minus the edge boundary total|.

    Decays at second order in the mesh spacing for smooth admissible data.
    """
    _require_same_mesh(f, g)
    df = spatial_derivative(net, f)
    dg = spatial_derivative(net, g)
    integrand = GridFunction(
        f.mesh,
        {
            k: df.values[k] * g.values[k] + f.values[k] * dg.values[k]
            for k in f.values
        },
    )
    return abs(integrate(net, integrand) - edge_boundary_sum(net, f, g))


def bin_discrete_measure(net: Network, m: DiscreteMeasure, h: float) -> GridFunction:
    """Deposit atom weights into mesh cells and return the cell density.

    Cell values are (weight in cell) / h_e; the result is projected onto
    mesh nodes so that the trapezoid integral reproduces the total atom
    weight.  Atoms at a vertex are assigned to the adjacent cell of the
    smallest-key incident edge.
    """
    mesh = Mesh.build(net, h)
    masses = {e.key: np.zeros(mesh.cells[e.key]) for e in net.edges}

    for point, weight in m.atoms:
        w = float(weight)
        if not w > 0.0:
            raise ValueError(f"atom weight must be positive, got {weight!r}")
        if isinstance(point, Vertex):
            if not net.has_vertex(point.id):
                raise AtomOffNetwork(f"no vertex {point.id!r}")
            key, end = net.edge_ends(point.id)[0]
            idx = 0 if end == "tail" else mesh.cells[key] - 1
        elif isinstance(point, EdgeInterior):
            try:
                e = net.edge(point.edge)
            except UnknownEdge:
                raise AtomOffNetwork(f"no edge {point.edge!r}") from None
            if not 0.0 < point.x < e.length:
                raise AtomOffNetwork(
                    f"coordinate {point.x!r} outside edge {point.edge!r}"
                )
            key = point.edge
            idx = min(int(point.x / mesh.spacing[key]), mesh.cells[key] - 1)
        else:
            raise AtomOffNetwork(f"not a network point: {point!r}")
        masses[key][idx] += w

    values = {}
    for e in net.edges:
        c = masses[e.key] / mesh.spacing[e.key]
        n = mesh.cells[e.key]
        v = np.empty(n + 1)
        v[0] = c[0]
        v[-1] = c[-1]
        if n > 1:
            v[1:-1] = 0.5 * (c[:-1] + c[1:])
        values[e.key] = v
    return GridFunction(mesh=mesh, values=values)


def write_grid_function_csv(f: GridFunction, path) -> None:
    """Write node samples as rows of edge key, node coordinate, value."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["edge", "x", "value"])
        for e in f.mesh.net.edges:
            x = f.mesh.nodes(e.key)
            v = f.values[e.key]
            for xi, vi in zip(x, v):
                writer.writerow([e.key, repr(float(xi)), repr(float(vi))])


def read_discrete_measure_csv(net: Network, path) -> DiscreteMeasure:
    """Read weighted atoms from rows of edge key, coordinate, weight.

    Edge keys are matched against the network's keys by string form, so
    files written by hand address integer-keyed edges naturally.
    """
    by_name = {str(e.key): e.key for e in net.edges}
    atoms = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for row in reader:
            if not row:
                continue
            name, x_s, w_s = row[0], row[1], row[2]
            if name not in by_name:
                raise AtomOffNetwork(f"no edge {name!r}")
            key = by_name[name]
            e = net.edge(key)
            x = float(x_s)
            if not 0.0 <= x <= e.length:
                raise AtomOffNetwork(f"coordinate {x!r} outside edge {name!r}")
            if x == 0.0:
                point: NetworkPoint = Vertex(e.tail)
            elif x == e.length:
                point = Vertex(e.head)
            else:
                point = EdgeInterior(key, x)
            atoms.append((point, float(w_s)))
    return DiscreteMeasure(atoms=tuple(atoms))
