"""Directed graphs, paths and Perron data.

Convention used throughout the package: for an edge e, s(e) is its ``src``
and r(e) its ``dst``. A path e_1 e_2 ... e_k composes when
dst(e_i) = src(e_{i+1}); length-0 paths are vertices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from pimsner.errors import GraphFormatError, NonConvergenceError, PathCapExceeded
from utils.app_constants import AppConstants
from utils.common_methods import CommonMethods
from utils.logger import Log

IntegerMatrix = sympy.ImmutableMatrix


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class DirectedGraph:
    """A finite directed graph; vertex and edge order is file order."""

    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        seen = set()
        for position, vertex in enumerate(self.vertices):
            if vertex in seen:
                raise GraphFormatError(f"duplicate vertex id {vertex!r}", f"vertices[{position}]")
            seen.add(vertex)
        edge_ids = set()
        for position, edge in enumerate(self.edges):
            if edge.id in edge_ids:
                raise GraphFormatError(f"duplicate edge id {edge.id!r}", f"edges[{position}].id")
            if edge.id in seen:
                raise GraphFormatError(f"edge id {edge.id!r} clashes with a vertex id", f"edges[{position}].id")
            edge_ids.add(edge.id)
            for end in ("src", "dst"):
                if getattr(edge, end) not in seen:
                    raise GraphFormatError(
                        f"unknown vertex {getattr(edge, end)!r}", f"edges[{position}].{end}"
                    )

    @cached_property
    def vertex_position(self) -> Dict[str, int]:
        return {vertex: position for position, vertex in enumerate(self.vertices)}

    @cached_property
    def edge_position(self) -> Dict[str, int]:
        return {edge.id: position for position, edge in enumerate(self.edges)}

    @cached_property
    def edge_by_id(self) -> Dict[str, Edge]:
        return {edge.id: edge for edge in self.edges}

    @cached_property
    def _out_edges(self) -> Dict[str, Tuple[Edge, ...]]:
        grouped: Dict[str, List[Edge]] = {vertex: [] for vertex in self.vertices}
        for edge in self.edges:
            grouped[edge.src].append(edge)
        return {vertex: tuple(edges) for vertex, edges in grouped.items()}

    def out_edges(self, vertex: str) -> Tuple[Edge, ...]:
        """Edges leaving `vertex`, in file order."""
        return self._out_edges[vertex]

    def out_degree(self, vertex: str) -> int:
        return len(self._out_edges[vertex])

    def in_degree(self, vertex: str) -> int:
        return sum(1 for edge in self.edges if edge.dst == vertex)

    def in_degrees(self) -> Tuple[int, ...]:
        return tuple(self.in_degree(vertex) for vertex in self.vertices)

    def __str__(self) -> str:
        label = self.name or "graph"
        return f"{label}(|G0|={len(self.vertices)}, |G1|={len(self.edges)})"


@dataclass(frozen=True)
class Path:
    """A finite path; `edges` is empty exactly for vertex paths, where src == dst."""

    edges: Tuple[str, ...]
    src: str
    dst: str

    @classmethod
    def vertex(cls, vertex: str) -> "Path":
        return cls((), vertex, vertex)

    @classmethod
    def of(cls, graph: DirectedGraph, edge_ids: Sequence[str]) -> "Path":
        """Build a path from edge ids, checking that consecutive edges compose."""
        if not edge_ids:
            raise ValueError("use Path.vertex for length-0 paths")
        edges = []
        for position, edge_id in enumerate(edge_ids):
            if edge_id not in graph.edge_by_id:
                raise GraphFormatError(f"unknown edge {edge_id!r}", f"path[{position}]")
            edge = graph.edge_by_id[edge_id]
            if edges and edges[-1].dst != edge.src:
                raise GraphFormatError(
                    f"edge {edge_id!r} does not start where {edges[-1].id!r} ends", f"path[{position}]"
                )
            edges.append(edge)
        return cls(tuple(edge_ids), edges[0].src, edges[-1].dst)

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def id(self) -> str:
        return AppConstants.PATH_SEPARATOR.join(self.edges) if self.edges else self.src

    def composes_with(self, other: "Path") -> bool:
        return self.dst == other.src

    def concat(self, other: "Path") -> "Path":
        """The path `self` followed by `other`."""
        if not self.composes_with(other):
            raise ValueError(f"cannot compose {self.id} (ends at {self.dst}) with {other.id} (starts at {other.src})")
        if not other.edges:
            return self
        if not self.edges:
            return other
        return Path(self.edges + other.edges, self.src, other.dst)

    def strip_prefix(self, prefix: "Path") -> Optional["Path"]:
        """The path γ with prefix·γ = self, or None when `prefix` is not a prefix."""
        if prefix.src != self.src or prefix.length > self.length:
            return None
        if self.edges[:prefix.length] != prefix.edges:
            return None
        if prefix.length == self.length:
            return Path.vertex(self.dst)
        return Path(self.edges[prefix.length:], prefix.dst, self.dst)

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class NonsingularityReport:
    no_sources: bool
    no_sinks: bool
    sources: Tuple[str, ...]
    sinks: Tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.no_sources and self.no_sinks

    @property
    def offending(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(self.sources + self.sinks))


@dataclass(frozen=True)
class PerronData:
    spectral_radius: float
    eigenvector: Tuple[float, ...]
    left_eigenvector: Tuple[float, ...]
    subdominant_modulus: float
    primitive: bool
    period: int
    residual: float

    @property
    def gap_ratio(self) -> float:
        """|λ₂|/λ, the geometric convergence rate of the Perron limits."""
        return self.subdominant_modulus / self.spectral_radius


def load_graph(text: str, name: str = "") -> DirectedGraph:
    """
    Parse and validate a graph file.

    Args:
        text: UTF-8 JSON of the form {"vertices": [...], "edges": [{"id", "src", "dst"}, ...]}
        name: Optional label used in logs and reports

    Returns:
        DirectedGraph: graph with file-order vertices and edges
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(e.msg, f"line {e.lineno} column {e.colno}") from e

    if not isinstance(data, dict):
        raise GraphFormatError("top level must be an object", "$")
    vertices = data.get("vertices")
    if not isinstance(vertices, list):
        raise GraphFormatError("missing or non-list field", "vertices")
    for position, vertex in enumerate(vertices):
        if not isinstance(vertex, str) or not vertex:
            raise GraphFormatError("vertex ids must be non-empty strings", f"vertices[{position}]")

    raw_edges = data.get("edges", [])
    if not isinstance(raw_edges, list):
        raise GraphFormatError("non-list field", "edges")
    edges = []
    for position, raw in enumerate(raw_edges):
        if not isinstance(raw, dict):
            raise GraphFormatError("edge must be an object", f"edges[{position}]")
        for end in ("src", "dst"):
            if not isinstance(raw.get(end), str):
                raise GraphFormatError("missing or non-string field", f"edges[{position}].{end}")
        edge_id = raw.get("id", f"e{position}")
        if not isinstance(edge_id, str) or not edge_id:
            raise GraphFormatError("edge ids must be non-empty strings", f"edges[{position}].id")
        edges.append(Edge(edge_id, raw["src"], raw["dst"]))

    graph = DirectedGraph(tuple(vertices), tuple(edges), name=name)
    Log.info(f"Loaded {graph}")
    return graph


def dump_graph(graph: DirectedGraph) -> dict:
    """Graph in the input file format."""
    return {
        "vertices": list(graph.vertices),
        "edges": [{"id": edge.id, "src": edge.src, "dst": edge.dst} for edge in graph.edges],
    }


def validate_nonsingular(graph: DirectedGraph) -> NonsingularityReport:
    """Report vertices without incoming edges (sources) and without outgoing edges (sinks)."""
    sources = tuple(v for v in graph.vertices if graph.in_degree(v) == 0)
    sinks = tuple(v for v in graph.vertices if graph.out_degree(v) == 0)
    return NonsingularityReport(not sources, not sinks, sources, sinks)


@lru_cache(maxsize=None)
def vertex_matrix(graph: DirectedGraph) -> IntegerMatrix:
    """V(i, j) = number of edges from vertex i to vertex j."""
    size = len(graph.vertices)
    counts = [[0] * size for _ in range(size)]
    for edge in graph.edges:
        counts[graph.vertex_position[edge.src]][graph.vertex_position[edge.dst]] += 1
    return IntegerMatrix(size, size, lambda i, j: counts[i][j])


@lru_cache(maxsize=None)
def _integer_rows(graph: DirectedGraph) -> Tuple[Tuple[int, ...], ...]:
    matrix = vertex_matrix(graph)
    return tuple(tuple(int(matrix[i, j]) for j in range(matrix.cols)) for i in range(matrix.rows))


def beta_vector(graph: DirectedGraph, k: int) -> Tuple[int, ...]:
    """V^k·1, the number of length-k paths leaving each vertex."""
    return beta_sequence(graph, k)[k]


@lru_cache(maxsize=None)
def beta_sequence(graph: DirectedGraph, n_max: int) -> Tuple[Tuple[int, ...], ...]:
    """(V^n·1) for n = 0..n_max as exact Python integers."""
    rows = _integer_rows(graph)
    current = tuple(1 for _ in graph.vertices)
    sequence = [current]
    for _ in range(n_max):
        current = tuple(sum(a * b for a, b in zip(row, current)) for row in rows)
        sequence.append(current)
    return tuple(sequence)


def left_beta_vector(graph: DirectedGraph, k: int) -> Tuple[int, ...]:
    """(V^T)^k·1, the number of length-k paths ending at each vertex."""
    rows = _integer_rows(graph)
    size = len(rows)
    current = tuple(1 for _ in range(size))
    for _ in range(k):
        current = tuple(sum(rows[i][j] * current[i] for i in range(size)) for j in range(size))
    return current


def path_count(graph: DirectedGraph, k: int) -> int:
    return sum(beta_vector(graph, k))


def enumerate_paths(graph: DirectedGraph, k: int, cap: Optional[int] = None) -> Tuple[Path, ...]:
    """
    All paths of length k in lexicographic order of file-order edge positions.

    Args:
        graph: The graph
        k: Path length, k ≥ 0 (k = 0 gives the vertices)
        cap: Path cap; defaults to PIMSNER_PATH_CAP or the built-in cap

    Returns:
        Tuple[Path, ...]: the paths
    """
    if k < 0:
        raise ValueError(f"path length must be non-negative, got {k}")
    limit = CommonMethods.path_cap(cap)
    count = path_count(graph, k)
    if count > limit:
        raise PathCapExceeded(count, limit)
    return _enumerate_paths(graph, k)


@lru_cache(maxsize=None)
def _enumerate_paths(graph: DirectedGraph, k: int) -> Tuple[Path, ...]:
    if k == 0:
        return tuple(Path.vertex(vertex) for vertex in graph.vertices)
    extended = []
    for path in _enumerate_paths(graph, k - 1):
        for edge in graph.out_edges(path.dst):
            if path.length == 0:
                extended.append(Path((edge.id,), edge.src, edge.dst))
            else:
                extended.append(Path(path.edges + (edge.id,), path.src, edge.dst))
    # extending an ordered level edge by edge keeps the lexicographic order
    return tuple(extended)


def paths_up_to(graph: DirectedGraph, k: int, cap: Optional[int] = None) -> Tuple[Path, ...]:
    """Paths of length 0..k, level-major."""
    limit = CommonMethods.path_cap(cap)
    total = sum(path_count(graph, j) for j in range(k + 1))
    if total > limit:
        raise PathCapExceeded(total, limit)
    return tuple(p for j in range(k + 1) for p in _enumerate_paths(graph, j))


def path_from_id(graph: DirectedGraph, path_id: str) -> Path:
    """Inverse of `Path.id`."""
    if path_id in graph.vertex_position:
        return Path.vertex(path_id)
    return Path.of(graph, path_id.split(AppConstants.PATH_SEPARATOR))


def path_from_edges(graph: DirectedGraph, edge_ids: Sequence[str], vertex: Optional[str] = None) -> Path:
    """Path from an edge list; an empty list needs the base vertex (or a single-vertex graph)."""
    if edge_ids:
        return Path.of(graph, list(edge_ids))
    if vertex is None:
        if len(graph.vertices) != 1:
            raise GraphFormatError("empty path needs a base vertex", "path")
        vertex = graph.vertices[0]
    if vertex not in graph.vertex_position:
        raise GraphFormatError(f"unknown vertex {vertex!r}", "path")
    return Path.vertex(vertex)


def is_primitive(graph: DirectedGraph) -> bool:
    """V^m entrywise positive for some m ≤ (n−1)²+1 (Wielandt bound), decided on 0/1 patterns."""
    size = len(graph.vertices)
    if size == 0:
        return False
    pattern = (np.array(_integer_rows(graph), dtype=np.int64) > 0).astype(np.int64)
    power = pattern.copy()
    for _ in range((size - 1) ** 2 + 1):
        if power.all():
            return True
        power = np.minimum(power @ pattern, 1)
    return bool(power.all())


def period(graph: DirectedGraph) -> int:
    """gcd of the lengths m ≤ n² of closed walks (0 when there are none)."""
    size = len(graph.vertices)
    pattern = (np.array(_integer_rows(graph), dtype=np.int64) > 0).astype(np.int64)
    power = pattern.copy()
    result = 0
    for m in range(1, size * size + 1):
        if np.trace(power) > 0:
            result = gcd(result, m)
        power = np.minimum(power @ pattern, 1)
    return result


def _power_iteration(matrix: np.ndarray, tol: float, max_iter: int) -> Tuple[float, np.ndarray, float]:
    """Perron pair of a nonnegative matrix by iterating the shifted matrix M + I."""
    size = matrix.shape[0]
    shifted = matrix + np.eye(size)
    vector = np.ones(size)
    residual = np.inf
    for _ in range(max_iter):
        image = shifted @ vector
        vector = image / image.max()
        value = float(vector @ (matrix @ vector) / (vector @ vector))
        residual = float(np.max(np.abs(matrix @ vector - value * vector)))
        if residual <= tol:
            return value, vector, residual
    raise NonConvergenceError(f"power iteration did not converge in {max_iter} steps", residual)


@lru_cache(maxsize=None)
def perron_data(graph: DirectedGraph, tol: float = AppConstants.PERRON_TOL,
                max_iter: int = AppConstants.MAX_POWER_ITERATIONS) -> PerronData:
    """
    Perron root, normalized Perron vectors, subdominant modulus and primitivity.

    λ and both Perron vectors come from power iteration. |λ₂| is the spectral
    radius of the deflated matrix V − λ x yᵀ/(yᵀx), read off numpy eigenvalues.

    Args:
        graph: A nonsingular graph
        tol: Bound on ‖Vx − λx‖∞
        max_iter: Iteration budget

    Returns:
        PerronData: with x normalized to max entry 1
    """
    matrix = np.array(_integer_rows(graph), dtype=float)
    value, right, residual = _power_iteration(matrix, tol, max_iter)
    _, left, _ = _power_iteration(matrix.T, tol, max_iter)

    if matrix.shape[0] > 1:
        deflated = matrix - value * np.outer(right, left) / float(left @ right)
        subdominant = float(np.max(np.abs(np.linalg.eigvals(deflated))))
    else:
        subdominant = 0.0

    primitive = is_primitive(graph)
    data = PerronData(
        spectral_radius=value,
        eigenvector=tuple(float(x) for x in right),
        left_eigenvector=tuple(float(y) for y in left),
        subdominant_modulus=min(subdominant, value),
        primitive=primitive,
        period=period(graph),
        residual=residual,
    )
    Log.info(f"Perron data for {graph}: λ={value:.12g}, |λ2|={data.subdominant_modulus:.6g}, "
             f"primitive={primitive}, period={data.period}")
    return data
