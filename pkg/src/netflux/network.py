"""Metric networks built from positively weighted directed graphs.

Every edge is a real interval [0, w] carrying its own coordinate, and
intervals are glued at shared graph vertices.  The glued space carries the
shortest-path metric: the distance between two points is the infimum of
lengths of finite edge chains joining them, walked in either direction.
Queries for points in edge interiors are answered by splicing temporary
nodes into the vertex graph and running Dijkstra with nonnegative weights.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping


class NetworkError(Exception):
    """Base class for graph and network construction or query failures."""


class NonPositiveWeight(NetworkError):
    """An edge weight is zero or negative."""


class DuplicateEdgeKey(NetworkError):
    """Two edges share the same key."""


class IsolatedVertex(NetworkError):
    """A declared vertex is not an endpoint of any edge."""


class UnknownVertex(NetworkError):
    """A vertex id does not occur in the network."""


class UnknownEdge(NetworkError):
    """An edge key does not occur in the network."""


class CoordinateOutOfRange(NetworkError):
    """An edge coordinate lies outside [0, edge length]."""


class Disconnected(NetworkError):
    """No finite-length chain joins the two query points."""


@dataclass(frozen=True)
class WeightedGraph:
    """Combinatorial input data: keyed directed edges with positive weights.

    ``edges`` is an ordered tuple of ``(key, tail, head)`` triples and
    ``weights`` maps each key to the edge length.  Self-loops and parallel
    edges are allowed.  Validation happens in :func:`build_network`.
    """

    vertices: frozenset
    edges: tuple
    weights: Mapping[Hashable, float]

    @classmethod
    def from_edge_list(cls, items: Iterable[tuple]) -> "WeightedGraph":
        """Build a graph from ``(key, tail, head, weight)`` tuples.

        The vertex set is the union of all endpoints.
        """
        edges = []
        weights = {}
        verts = set()
        for key, tail, head, w in items:
            edges.append((key, tail, head))
            weights[key] = float(w)
            verts.add(tail)
            verts.add(head)
        return cls(vertices=frozenset(verts), edges=tuple(edges), weights=weights)


@dataclass(frozen=True)
class Edge:
    """One glued interval: key, endpoints, and its length."""

    key: Hashable
    tail: Hashable
    head: Hashable
    length: float


@dataclass(frozen=True)
class Vertex:
    """A point sitting at a graph vertex."""

    id: Hashable


@dataclass(frozen=True)
class EdgeInterior:
    """A point strictly inside an edge, at coordinate 0 < x < length."""

    edge: Hashable
    x: float


# A network point is either a Vertex or an EdgeInterior.  Coordinates 0 and
# w canonicalize to the glued Vertex, so EdgeInterior always has 0 < x < w.
NetworkPoint = Vertex | EdgeInterior


@dataclass(frozen=True)
class NetworkPath:
    """A chain of edge traversals ``(key, entry, exit)`` in edge coordinates.

    ``entry`` and ``exit`` are coordinates on the named edge; a traversal
    against the edge orientation has entry > exit.  Consecutive segments meet
    at a glued vertex.
    """

    segments: tuple
    length: float

    @property
    def edge_keys(self) -> tuple:
        return tuple(seg[0] for seg in self.segments)


@dataclass(frozen=True)
class RegularityReport:
    """Summary of the structural checks a network must pass to be regular."""

    vertex_count: int
    edge_count: int
    max_degree: int
    min_edge_length: float
    connected: bool
    component_count: int
    regular: bool
    reasons: tuple


class Network:
    """Immutable glued metric space over a validated weighted graph.

    Construct through :func:`build_network`.  Holds the edge table and a
    prebuilt undirected adjacency index used by the shortest-path queries.
    """

    __slots__ = ("edges", "vertices", "min_edge_length", "_by_key", "_adj", "_ends")

    def __init__(self, edges, vertices, adjacency, ends):
        self.edges = edges
        self.vertices = vertices
        self.min_edge_length = min(e.length for e in edges)
        self._by_key = {e.key: e for e in edges}
        self._adj = adjacency
        self._ends = ends

    def edge(self, key) -> Edge:
        try:
            return self._by_key[key]
        except KeyError:
            raise UnknownEdge(f"no edge with key {key!r}") from None

    def has_vertex(self, v) -> bool:
        return v in self._adj

    def degree(self, v) -> int:
        """Number of edge ends meeting v; a self-loop contributes two."""
        try:
            return len(self._ends[v])
        except KeyError:
            raise UnknownVertex(f"no vertex {v!r}") from None

    def edge_ends(self, v) -> tuple:
        """Incident ``(edge_key, 'tail'|'head')`` pairs at v, key-sorted."""
        try:
            return self._ends[v]
        except KeyError:
            raise UnknownVertex(f"no vertex {v!r}") from None


def build_network(graph: WeightedGraph) -> Network:
    """Validate a weighted graph and assemble the glued metric network.

    Raises DuplicateEdgeKey, NonPositiveWeight, UnknownVertex for an edge
    endpoint missing from the vertex set, and IsolatedVertex for a vertex
    that no edge touches.
    """
    if not graph.edges:
        raise NetworkError("graph has no edges")

    seen = set()
    covered = set()
    edges = []
    for key, tail, head in graph.edges:
        if key in seen:
            raise DuplicateEdgeKey(f"edge key {key!r} occurs twice")
        seen.add(key)
        if tail not in graph.vertices:
            raise UnknownVertex(f"edge {key!r} tail {tail!r} not in vertex set")
        if head not in graph.vertices:
            raise UnknownVertex(f"edge {key!r} head {head!r} not in vertex set")
        w = float(graph.weights[key])
        if not w > 0.0 or math.isinf(w) or math.isnan(w):
            raise NonPositiveWeight(f"edge {key!r} has weight {w!r}, expected > 0")
        edges.append(Edge(key, tail, head, w))
        covered.add(tail)
        covered.add(head)

    for v in graph.vertices:
        if v not in covered:
            raise IsolatedVertex(f"vertex {v!r} is not an endpoint of any edge")

    adjacency = {v: [] for v in graph.vertices}
    ends = {v: [] for v in graph.vertices}
    for e in edges:
        # Links are (other_node, hop_length, edge_key, entry_x, exit_x).
        adjacency[e.tail].append((e.head, e.length, e.key, 0.0, e.length))
        adjacency[e.head].append((e.tail, e.length, e.key, e.length, 0.0))
        ends[e.tail].append((e.key, "tail"))
        ends[e.head].append((e.key, "head"))

    vertices = tuple(sorted(graph.vertices, key=repr))
    adjacency = {v: tuple(adjacency[v]) for v in vertices}
    ends = {v: tuple(sorted(ends[v])) for v in vertices}
    return Network(tuple(edges), vertices, adjacency, ends)


def validate_regularity(net: Network) -> RegularityReport:
    """Check local finiteness, the edge-length floor, and connectivity.

    Finite networks are locally finite by construction and their positive
    minimum edge length exists, so the verdict reduces to connectivity.
    Degree counts edge ends, so a self-loop adds two.
    """
    parent = {v: v for v in net.vertices}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in net.edges:
        ra, rb = find(e.tail), find(e.head)
        if ra != rb:
            parent[ra] = rb

    components = len({find(v) for v in net.vertices})
    connected = components == 1
    reasons = [] if connected else [f"{components} components, expected 1"]
    return RegularityReport(
        vertex_count=len(net.vertices),
        edge_count=len(net.edges),
        max_degree=max(net.degree(v) for v in net.vertices),
        min_edge_length=net.min_edge_length,
        connected=connected,
        component_count=components,
        regular=connected,
        reasons=tuple(reasons),
    )


def locate(net: Network, edge_key, x) -> NetworkPoint:
    """Canonical point at coordinate x on an edge.

    Coordinates 0 and w map to the glued endpoint vertices, so equality of
    canonical points coincides with equality in the glued space.
    """
    e = net.edge(edge_key)
    x = float(x)
    if not 0.0 <= x <= e.length:
        raise CoordinateOutOfRange(
            f"coordinate {x!r} outside [0, {e.length!r}] on edge {edge_key!r}"
        )
    if x == 0.0:
        return Vertex(e.tail)
    if x == e.length:
        return Vertex(e.head)
    return EdgeInterior(edge_key, x)


def canonicalize(net: Network, p: NetworkPoint) -> NetworkPoint:
    """Resolve a point to canonical form, validating it against the network."""
    if isinstance(p, Vertex):
        if not net.has_vertex(p.id):
            raise UnknownVertex(f"no vertex {p.id!r}")
        return p
    if isinstance(p, EdgeInterior):
        return locate(net, p.edge, p.x)
    raise TypeError(f"not a network point: {p!r}")


class _Splice:
    """Temporary node standing for an interior query point."""

    __slots__ = ()


def _point_sort_key(p: NetworkPoint):
    if isinstance(p, Vertex):
        return (0, repr(p.id), 0.0)
    return (1, repr(p.edge), p.x)


def _splice_points(net: Network, points):
    """Map canonical points to graph nodes, adding temporary interior nodes.

    Returns (nodes, extra) where extra is an adjacency overlay holding the
    links of the temporary nodes.  Full edges stay in the base adjacency:
    walking past a spliced point along its edge remains a valid chain.
    """
    extra = {}
    nodes = []
    interior = {}

    def add_link(a, b, w, key, ax, bx):
        extra.setdefault(a, []).append((b, w, key, ax, bx))
        extra.setdefault(b, []).append((a, w, key, bx, ax))

    for p in points:
        if isinstance(p, Vertex):
            nodes.append(p.id)
            continue
        pos = (p.edge, p.x)
        if pos in interior:
            nodes.append(interior[pos])
            continue
        e = net.edge(p.edge)
        node = _Splice()
        add_link(node, e.tail, p.x, e.key, p.x, 0.0)
        add_link(node, e.head, e.length - p.x, e.key, p.x, e.length)
        interior[pos] = node
        nodes.append(node)

    # Two interior points on one edge also connect directly along it.
    by_edge = {}
    for (key, x), node in interior.items():
        by_edge.setdefault(key, []).append((x, node))
    for key, placed in by_edge.items():
        if len(placed) == 2:
            (xa, na), (xb, nb) = placed
            add_link(na, nb, abs(xb - xa), key, xa, xb)

    return nodes, {k: tuple(v) for k, v in extra.items()}


def _dijkstra(net: Network, extra, source):
    """Distance map from source over the base adjacency plus the overlay."""
    dist = {source: 0.0}
    counter = itertools.count()
    heap = [(0.0, next(counter), source)]
    settled = set()
    base = net._adj
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        for link in itertools.chain(base.get(u, ()), extra.get(u, ())):
            v, w = link[0], link[1]
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, next(counter), v))
    return dist


def distance(net: Network, p: NetworkPoint, q: NetworkPoint) -> float:
    """Shortest-path distance between two points of the glued space.

    Symmetric by construction: the query is evaluated from a canonical
    ordering of its endpoints, so distance(p, q) and distance(q, p) return
    the identical float.  Raises Disconnected when no chain joins them.
    """
    p = canonicalize(net, p)
    q = canonicalize(net, q)
    if p == q:
        return 0.0
    if _point_sort_key(q) < _point_sort_key(p):
        p, q = q, p
    nodes, extra = _splice_points(net, (p, q))
    dist = _dijkstra(net, extra, nodes[0])
    try:
        return dist[nodes[1]]
    except KeyError:
        raise Disconnected(f"no path between {p!r} and {q!r}") from None


def vertex_distances(net: Network, p: NetworkPoint) -> dict:
    """Distances from one point to every vertex (one Dijkstra sweep)."""
    p = canonicalize(net, p)
    nodes, extra = _splice_points(net, (p,))
    dist = _dijkstra(net, extra, nodes[0])
    return {v: dist[v] for v in net.vertices if v in dist}


# Relative slack when recognizing tied shortest-path continuations; actual
# float noise along a path is a few ulp, far below this.
_TIE_TOL = 1e-12


def shortest_path(net: Network, p: NetworkPoint, q: NetworkPoint) -> NetworkPath:
    """One shortest path from p to q, deterministic under ties.

    Among all shortest paths the one with the lexicographically smallest
    edge-key sequence is returned, built by walking greedily from p along
    links that keep the remaining distance tight.
    """
    p = canonicalize(net, p)
    q = canonicalize(net, q)
    if p == q:
        return NetworkPath(segments=(), length=0.0)
    nodes, extra = _splice_points(net, (p, q))
    src, dst = nodes
    dist = _dijkstra(net, extra, dst)
    if src not in dist:
        raise Disconnected(f"no path between {p!r} and {q!r}")

    segments = []
    u = src
    hops = 0
    limit = len(net.edges) + 3
    while u != dst:
        du = dist[u]
        slack = _TIE_TOL * (1.0 + du)
        best = None
        for link in itertools.chain(net._adj.get(u, ()), extra.get(u, ())):
            v, w, key, ax, bx = link
            dv = dist.get(v)
            if dv is None or w + dv > du + slack:
                continue
            rank = (key, ax, bx)
            if best is None or rank < best[0]:
                best = (rank, v, key, ax, bx)
        if best is None:
            raise Disconnected(f"no path between {p!r} and {q!r}")
        _, u, key, ax, bx = best
        segments.append((key, ax, bx))
        hops += 1
        if hops > limit:
            raise NetworkError("shortest-path walk failed to terminate")

    length = math.fsum(abs(bx - ax) for _, ax, bx in segments)
    return NetworkPath(segments=tuple(segments), length=length)


def incidence(net: Network, v) -> tuple:
    """Key-sorted (incoming, outgoing) edge keys at a vertex.

    Incoming edges point their head at v, outgoing their tail; a self-loop
    appears in both lists.
    """
    if not net.has_vertex(v):
        raise UnknownVertex(f"no vertex {v!r}")
    ins = sorted(e.key for e in net.edges if e.head == v)
    outs = sorted(e.key for e in net.edges if e.tail == v)
    return tuple(ins), tuple(outs)
