"""Builtin graphs and the builtin suite of partial isometry classes."""
from __future__ import annotations

import json
import string
from typing import Any, Callable, Dict, List, Mapping

from pimsner.algebra import AlgebraElement, MatrixOverAlgebra, PartialIsometryClass, matrix_from_json
from pimsner.errors import GraphFormatError, InvalidInputError, SinkError
from pimsner.graph_core import DirectedGraph, Edge, Path, validate_nonsingular
from pimsner.kktheory import w_class
from utils.logger import Log


def o_n(n: int) -> DirectedGraph:
    """One vertex with n loops (the Cuntz algebra O_n for n ≥ 2)."""
    if n < 1:
        raise InvalidInputError(f"O_n needs at least one loop, got {n}")
    letters = [c for c in string.ascii_lowercase if c != "v"]
    names = letters[:n] if n <= len(letters) else [f"e{i}" for i in range(n)]
    return DirectedGraph(("v",), tuple(Edge(name, "v", "v") for name in names), name=f"o{n}")


def cycle(m: int) -> DirectedGraph:
    """v0 → v1 → … → v{m−1} → v0."""
    if m < 1:
        raise InvalidInputError(f"cycle length must be positive, got {m}")
    vertices = tuple(f"v{i}" for i in range(m))
    edges = tuple(Edge(f"e{i}", vertices[i], vertices[(i + 1) % m]) for i in range(m))
    return DirectedGraph(vertices, edges, name=f"c{m}")


def single_loop() -> DirectedGraph:
    return DirectedGraph(("v",), (Edge("a", "v", "v"),), name="loop")


def fibonacci() -> DirectedGraph:
    """V = [[1, 1], [1, 0]]."""
    return DirectedGraph(("u", "v"), (Edge("e1", "u", "u"), Edge("e2", "u", "v"), Edge("e3", "v", "u")),
                         name="fib")


def two_loops() -> DirectedGraph:
    """Disjoint union of two single loops."""
    return DirectedGraph(("u", "v"), (Edge("a", "u", "u"), Edge("b", "v", "v")), name="two_loops")


BUILTIN_GRAPHS: Dict[str, Callable[[], DirectedGraph]] = {
    "o2": lambda: o_n(2),
    "o3": lambda: o_n(3),
    "loop": single_loop,
    "c2": lambda: cycle(2),
    "c3": lambda: cycle(3),
    "fib": fibonacci,
    "two_loops": two_loops,
}


def builtin_graph(name: str) -> DirectedGraph:
    try:
        return BUILTIN_GRAPHS[name]()
    except KeyError:
        raise GraphFormatError(f"unknown builtin graph {name!r}", "name") from None


def qualifying_edges(graph: DirectedGraph) -> List[Edge]:
    """Edges whose source emits only them, so S_eS_e* = p_{s(e)}."""
    return [edge for edge in graph.edges if graph.out_degree(edge.src) == 1]


def _single(graph: DirectedGraph, element: AlgebraElement, name: str) -> PartialIsometryClass:
    return PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(graph, [[element]]), name)


def builtin_isometry_suite(graph: DirectedGraph) -> List[PartialIsometryClass]:
    """
    Vertex projections, the units, qualifying edge isometries, w and block sums.

    Raises:
        SinkError: the graph has a vertex without outgoing edges
    """
    report = validate_nonsingular(graph)
    if report.sinks:
        raise SinkError(f"{graph} has sinks {list(report.sinks)}; the builtin suite needs a nonsingular graph")
    suite = [_single(graph, AlgebraElement.vertex(graph, v), f"p[{v}]") for v in graph.vertices]
    suite.append(_single(graph, AlgebraElement.one(graph), "1"))
    suite.append(_single(graph, AlgebraElement.unit_of_a(graph), "1_A"))
    edges = [_single(graph, AlgebraElement.generator(graph, Path.of(graph, [e.id])), f"S[{e.id}]")
             for e in qualifying_edges(graph)]
    suite.extend(edges)
    w = w_class(graph)
    suite.append(w)

    suite.append(suite[0].direct_sum(w))
    if edges:
        suite.append(edges[0].direct_sum(w))
        suite.append(suite[0].direct_sum(edges[-1]))
    Log.info(f"Builtin suite for {graph}: {len(suite)} classes")
    return suite


def class_from_json(graph: DirectedGraph, data: Mapping[str, Any]) -> PartialIsometryClass:
    """{"name": str, "size": k, "entries": [k·k elements, row-major]}."""
    return PartialIsometryClass.from_matrix(matrix_from_json(graph, data), str(data.get("name", "")))


def load_suite(graph: DirectedGraph, text: str) -> List[PartialIsometryClass]:
    """A single class or {"classes": [...]}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(e.msg, f"line {e.lineno} column {e.colno}") from e
    if isinstance(data, dict) and "classes" in data:
        return [class_from_json(graph, item) for item in data["classes"]]
    if isinstance(data, dict):
        return [class_from_json(graph, data)]
    raise GraphFormatError("expected an object", "$")
