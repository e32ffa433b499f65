"""Exact arithmetic in the graph algebra and its unitisation.

Elements are finite combinations of monomials S_μS_ν* (r(μ) = r(ν)) plus an
adjoined unit. Products use the Toeplitz law
S_ν*S_α = S_γ if α = νγ, S_γ'* if ν = αγ', 0 otherwise; vertex paths play
the role of the projections p_v. Equality is decided by Cuntz-Krieger
expansion S_μS_ν* = Σ_{s(e)=r(μ)} S_{μe}S_{νe}* to a common depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import sympy

from pimsner import scalars
from pimsner.bimodule import VertexFunction, limit_ratio
from pimsner.errors import InvalidClassError, SinkError
from pimsner.graph_core import DirectedGraph, Path, path_from_edges
from utils.app_constants import AppConstants
from utils.logger import Log

Monomial = Tuple[Path, Path]


def monomial_product(left: Monomial, right: Monomial) -> Optional[Monomial]:
    """(S_μS_ν*)(S_αS_β*) as a single monomial, or None when it vanishes."""
    mu, nu = left
    alpha, beta = right
    gamma = alpha.strip_prefix(nu)
    if gamma is not None:
        return mu.concat(gamma), beta
    gamma = nu.strip_prefix(alpha)
    if gamma is not None:
        return mu, beta.concat(gamma)
    return None


def monomial_degree(monomial: Monomial) -> int:
    return monomial[0].length - monomial[1].length


def _sort_key(graph: DirectedGraph, monomial: Monomial) -> tuple:
    def key(path: Path) -> tuple:
        if path.length == 0:
            return (0, graph.vertex_position[path.src])
        return (path.length,) + tuple(graph.edge_position[e] for e in path.edges)
    return key(monomial[0]), key(monomial[1])


@dataclass(frozen=True)
class AlgebraElement:
    """unit·1 + Σ coeff·S_μS_ν*, with exact sympy coefficients."""

    graph: DirectedGraph = field(repr=False, compare=False)
    terms: Mapping[Monomial, Any]
    unit: Any = sympy.Integer(0)

    def __post_init__(self):
        canonical: Dict[Monomial, Any] = {}
        for (mu, nu), coeff in self.terms.items():
            if mu.dst != nu.dst:
                continue
            canonical[(mu, nu)] = canonical.get((mu, nu), 0) + scalars.exact(coeff)
        canonical = {k: sympy.expand(v) for k, v in canonical.items()}
        canonical = {k: v for k, v in canonical.items() if v != 0}
        object.__setattr__(self, "terms", MappingProxyType(canonical))
        object.__setattr__(self, "unit", scalars.exact(self.unit))

    # constructors

    @classmethod
    def zero(cls, graph: DirectedGraph) -> "AlgebraElement":
        return cls(graph, {})

    @classmethod
    def one(cls, graph: DirectedGraph) -> "AlgebraElement":
        """The adjoined unit of the unitisation."""
        return cls(graph, {}, 1)

    @classmethod
    def scalar(cls, graph: DirectedGraph, value: Any) -> "AlgebraElement":
        return cls(graph, {}, value)

    @classmethod
    def vertex(cls, graph: DirectedGraph, vertex: str) -> "AlgebraElement":
        """p_v."""
        p = Path.vertex(vertex)
        return cls(graph, {(p, p): 1})

    @classmethod
    def unit_of_a(cls, graph: DirectedGraph) -> "AlgebraElement":
        """1_A = Σ_v p_v."""
        return cls(graph, {(Path.vertex(v), Path.vertex(v)): 1 for v in graph.vertices})

    @classmethod
    def generator(cls, graph: DirectedGraph, path: Path) -> "AlgebraElement":
        """S_μ (= p_v for a vertex path)."""
        return cls(graph, {(path, Path.vertex(path.dst)): 1})

    @classmethod
    def generator_adjoint(cls, graph: DirectedGraph, path: Path) -> "AlgebraElement":
        """S_μ*."""
        return cls(graph, {(Path.vertex(path.dst), path): 1})

    @classmethod
    def monomial(cls, graph: DirectedGraph, mu: Path, nu: Path, coeff: Any = 1) -> "AlgebraElement":
        return cls(graph, {(mu, nu): coeff})

    # arithmetic

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        merged = dict(self.terms)
        for key, coeff in other.terms.items():
            merged[key] = merged.get(key, 0) + coeff
        return AlgebraElement(self.graph, merged, self.unit + other.unit)

    def __neg__(self) -> "AlgebraElement":
        return self.scaled(-1)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def scaled(self, scalar: Any) -> "AlgebraElement":
        scalar = scalars.exact(scalar)
        return AlgebraElement(self.graph, {k: v * scalar for k, v in self.terms.items()}, self.unit * scalar)

    def __mul__(self, other: Any) -> "AlgebraElement":
        if not isinstance(other, AlgebraElement):
            return self.scaled(other)
        return multiply(self, other)

    def __rmul__(self, scalar: Any) -> "AlgebraElement":
        return self.scaled(scalar)

    def adjoint(self) -> "AlgebraElement":
        return adjoint(self)

    # structure

    def is_zero(self) -> bool:
        return not self.terms and self.unit == 0

    @property
    def max_length(self) -> int:
        return max((max(mu.length, nu.length) for mu, nu in self.terms), default=0)

    @property
    def degrees(self) -> Tuple[int, ...]:
        """Gauge degrees present (the unit counts as degree 0)."""
        found = {monomial_degree(m) for m in self.terms}
        if self.unit != 0:
            found.add(0)
        return tuple(sorted(found))

    def sorted_terms(self) -> List[Tuple[Monomial, Any]]:
        return sorted(self.terms.items(), key=lambda item: _sort_key(self.graph, item[0]))

    def __str__(self) -> str:
        parts = [f"{self.unit}·1"] if self.unit != 0 else []
        for (mu, nu), coeff in self.sorted_terms():
            parts.append(f"{coeff}·S[{mu.id}]S[{nu.id}]*")
        return " + ".join(parts) or "0"


def multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Bilinear extension of the monomial law; the unit multiplies as 1."""
    terms: Dict[Monomial, Any] = {}

    def add(key: Monomial, coeff: Any) -> None:
        terms[key] = terms.get(key, 0) + coeff

    for left, a in x.terms.items():
        for right, b in y.terms.items():
            product = monomial_product(left, right)
            if product is not None:
                add(product, a * b)
        if y.unit != 0:
            add(left, a * y.unit)
    if x.unit != 0:
        for right, b in y.terms.items():
            add(right, x.unit * b)
    return AlgebraElement(x.graph, terms, x.unit * y.unit)


def adjoint(x: AlgebraElement) -> AlgebraElement:
    """Swap (μ, ν) and conjugate every coefficient."""
    return AlgebraElement(x.graph, {(nu, mu): scalars.conj(c) for (mu, nu), c in x.terms.items()},
                          scalars.conj(x.unit))


# normal forms

@dataclass(frozen=True)
class NormalForm:
    depth: int
    unit: Any
    coefficients: Mapping[Monomial, Any]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalForm):
            return NotImplemented
        if self.depth != other.depth or sympy.expand(self.unit - other.unit) != 0:
            return False
        keys = set(self.coefficients) | set(other.coefficients)
        return all(sympy.expand(self.coefficients.get(k, 0) - other.coefficients.get(k, 0)) == 0 for k in keys)


def _expand(graph: DirectedGraph, monomial: Monomial, depth: int) -> Iterator[Monomial]:
    mu, nu = monomial
    if max(mu.length, nu.length) >= depth:
        yield monomial
        return
    edges = graph.out_edges(mu.dst)
    if not edges:
        raise SinkError(f"vertex {mu.dst!r} has no outgoing edges; Cuntz-Krieger expansion is undefined")
    for edge in edges:
        step = Path((edge.id,), edge.src, edge.dst)
        yield from _expand(graph, (mu.concat(step), nu.concat(step)), depth)


def normal_form(x: AlgebraElement, depth: Optional[int] = None) -> NormalForm:
    """
    Coefficients on {(μ, ν): max(|μ|,|ν|) = depth} after Cuntz-Krieger expansion.

    Args:
        x: Element
        depth: Target depth, at least x.max_length (default)

    Returns:
        NormalForm: the unit scalar is kept as its own coordinate
    """
    depth = x.max_length if depth is None else depth
    if depth < x.max_length:
        raise ValueError(f"depth {depth} is below the element's length {x.max_length}")
    coefficients: Dict[Monomial, Any] = {}
    for monomial, coeff in x.terms.items():
        for expanded in _expand(x.graph, monomial, depth):
            coefficients[expanded] = coefficients.get(expanded, 0) + coeff
    coefficients = {k: sympy.expand(v) for k, v in coefficients.items()}
    coefficients = {k: v for k, v in coefficients.items() if v != 0}
    return NormalForm(depth, x.unit, MappingProxyType(coefficients))


def equals(x: AlgebraElement, y: AlgebraElement) -> bool:
    """Equality in the unitised graph algebra."""
    depth = max(x.max_length, y.max_length)
    return normal_form(x, depth) == normal_form(y, depth)


def reduce_to_vertices(x: AlgebraElement) -> Tuple[Any, Dict[str, Any]]:
    """
    Write x = c·1 + Σ_v c_v p_v, or raise InvalidClassError.

    p_v expands at depth d to Σ_{|μ|=d, s(μ)=v} S_μS_μ*, so x reduces iff its
    depth-d normal form is diagonal with coefficients depending only on s(μ).
    """
    graph = x.graph
    depth = x.max_length
    form = normal_form(x, depth)
    by_vertex: Dict[str, Any] = {}
    for (mu, nu), coeff in form.coefficients.items():
        if mu != nu or mu.length != depth:
            raise InvalidClassError(f"{x} is not a combination of vertex projections")
        previous = by_vertex.setdefault(mu.src, coeff)
        if sympy.expand(previous - coeff) != 0:
            raise InvalidClassError(f"{x} weights paths from {mu.src} unequally")
    full = normal_form(AlgebraElement.unit_of_a(graph), depth).coefficients
    for (mu, _), _one in full.items():
        if mu.src in by_vertex and (mu, mu) not in form.coefficients:
            raise InvalidClassError(f"{x} misses the path {mu.id} from {mu.src}")
    return x.unit, {v: by_vertex.get(v, sympy.Integer(0)) for v in graph.vertices}


# gauge grading and expectations

def gauge_decompose(x: AlgebraElement) -> Dict[int, AlgebraElement]:
    """Gauge-homogeneous components; the unit goes to degree 0."""
    grouped: Dict[int, Dict[Monomial, Any]] = {}
    for monomial, coeff in x.terms.items():
        grouped.setdefault(monomial_degree(monomial), {})[monomial] = coeff
    components = {n: AlgebraElement(x.graph, terms) for n, terms in grouped.items()}
    if x.unit != 0:
        base = components.get(0, AlgebraElement.zero(x.graph))
        components[0] = AlgebraElement(x.graph, base.terms, x.unit)
    return dict(sorted(components.items()))


def core_expectation(x: AlgebraElement) -> AlgebraElement:
    """Average over the gauge circle: the degree-0 component."""
    return gauge_decompose(x).get(0, AlgebraElement.zero(x.graph))


def phi_infinity(x: AlgebraElement, mode: str = "auto", cutoff: int = AppConstants.CESARO_CUTOFF,
                 tol: float = 1e-6) -> VertexFunction:
    """
    Φ_∞(x) as a vertex function.

    Φ_∞(S_μS_ν*) vanishes unless μ = ν, Φ_∞(S_μS_μ*) = λ(μ) at s(μ), and the
    adjoined unit maps to 1 at every vertex.
    """
    graph = x.graph
    totals = {v: complex(x.unit) for v in graph.vertices}
    for (mu, nu), coeff in x.terms.items():
        if mu == nu:
            totals[mu.src] += complex(coeff) * limit_ratio(graph, mu, mode, cutoff, tol)
    values = tuple(totals[v] for v in graph.vertices)
    if all(abs(value.imag) == 0.0 for value in values):
        values = tuple(value.real for value in values)
    return VertexFunction(graph.vertices, values)


# matrices over the unitisation

@dataclass(frozen=True)
class MatrixOverAlgebra:
    graph: DirectedGraph = field(repr=False, compare=False)
    entries: Tuple[Tuple[AlgebraElement, ...], ...]

    def __post_init__(self):
        size = len(self.entries)
        if any(len(row) != size for row in self.entries):
            raise InvalidClassError("matrix over the algebra must be square")

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def from_rows(cls, graph: DirectedGraph, rows: Sequence[Sequence[AlgebraElement]]) -> "MatrixOverAlgebra":
        return cls(graph, tuple(tuple(row) for row in rows))

    @classmethod
    def diagonal(cls, graph: DirectedGraph, items: Sequence[AlgebraElement]) -> "MatrixOverAlgebra":
        zero = AlgebraElement.zero(graph)
        return cls.from_rows(graph, [[items[i] if i == j else zero for j in range(len(items))]
                                     for i in range(len(items))])

    def __getitem__(self, index: Tuple[int, int]) -> AlgebraElement:
        i, j = index
        return self.entries[i][j]

    def __matmul__(self, other: "MatrixOverAlgebra") -> "MatrixOverAlgebra":
        if self.size != other.size:
            raise InvalidClassError(f"sizes differ: {self.size} vs {other.size}")
        rows = []
        for i in range(self.size):
            row = []
            for j in range(self.size):
                total = AlgebraElement.zero(self.graph)
                for k in range(self.size):
                    if self[i, k].is_zero() or other[k, j].is_zero():
                        continue
                    total = total + multiply(self[i, k], other[k, j])
                row.append(total)
            rows.append(row)
        return MatrixOverAlgebra.from_rows(self.graph, rows)

    def adjoint(self) -> "MatrixOverAlgebra":
        return MatrixOverAlgebra.from_rows(
            self.graph, [[adjoint(self[j, i]) for j in range(self.size)] for i in range(self.size)]
        )

    def equals(self, other: "MatrixOverAlgebra") -> bool:
        return self.size == other.size and all(
            equals(self[i, j], other[i, j]) for i in range(self.size) for j in range(self.size)
        )

    def direct_sum(self, other: "MatrixOverAlgebra") -> "MatrixOverAlgebra":
        zero = AlgebraElement.zero(self.graph)
        size = self.size + other.size
        rows = []
        for i in range(size):
            row = []
            for j in range(size):
                if i < self.size and j < self.size:
                    row.append(self[i, j])
                elif i >= self.size and j >= self.size:
                    row.append(other[i - self.size, j - self.size])
                else:
                    row.append(zero)
            rows.append(row)
        return MatrixOverAlgebra.from_rows(self.graph, rows)

    def terms(self) -> Iterator[Tuple[Monomial, Any]]:
        for row in self.entries:
            for entry in row:
                yield from entry.terms.items()

    def max_length(self) -> int:
        return max((entry.max_length for row in self.entries for entry in row), default=0)

    def degree_band(self) -> Tuple[int, int]:
        degrees = [d for row in self.entries for entry in row for d in entry.degrees]
        return (min(degrees, default=0), max(degrees, default=0))

    def length_band(self) -> Tuple[int, int]:
        """(max |ν|, max |μ|) over all terms."""
        monomials = list(self.terms())
        return (max((nu.length for (_, nu), _c in monomials), default=0),
                max((mu.length for (mu, _), _c in monomials), default=0))


@dataclass(frozen=True)
class ProjectionData:
    """A projection over the unitisation written as scalar part plus vertex parts."""

    scalar: sympy.ImmutableMatrix
    vertex_parts: Mapping[str, sympy.ImmutableMatrix]

    def rank_at(self, vertex: Optional[str]) -> int:
        """Rank of the fibre at `vertex` (None is the adjoined point at infinity)."""
        if vertex is None:
            return self.scalar.rank()
        return (self.scalar + self.vertex_parts[vertex]).rank()


def _projection_data(matrix: MatrixOverAlgebra) -> ProjectionData:
    size = matrix.size
    scalar = [[sympy.Integer(0)] * size for _ in range(size)]
    parts = {v: [[sympy.Integer(0)] * size for _ in range(size)] for v in matrix.graph.vertices}
    for i in range(size):
        for j in range(size):
            unit, by_vertex = reduce_to_vertices(matrix[i, j])
            scalar[i][j] = unit
            for v, c in by_vertex.items():
                parts[v][i][j] = c
    return ProjectionData(sympy.ImmutableMatrix(scalar),
                          MappingProxyType({v: sympy.ImmutableMatrix(p) for v, p in parts.items()}))


@dataclass(frozen=True)
class PartialIsometryClass:
    """A partial isometry v with v*v and vv* projections over the unitisation of A."""

    matrix: MatrixOverAlgebra
    source: ProjectionData
    range: ProjectionData
    name: str = ""

    @classmethod
    def from_matrix(cls, matrix: MatrixOverAlgebra, name: str = "") -> "PartialIsometryClass":
        """
        Validate v·v*v = v and reduce v*v, vv* to vertex data.

        Raises:
            InvalidClassError: when v is not a partial isometry of the required kind
        """
        star = matrix.adjoint()
        source = star @ matrix
        range_ = matrix @ star
        if not (matrix @ source).equals(matrix):
            raise InvalidClassError(f"{name or 'matrix'} is not a partial isometry: v·v*v ≠ v")
        source_data = _projection_data(source)
        range_data = _projection_data(range_)
        if source_data.rank_at(None) != range_data.rank_at(None):
            raise InvalidClassError(
                f"{name or 'matrix'}: [v*v] − [vv*] is not defined over A (ranks at infinity differ)"
            )
        Log.debug(f"Validated partial isometry {name or '<unnamed>'} of size {matrix.size}")
        return cls(matrix, source_data, range_data, name)

    @property
    def graph(self) -> DirectedGraph:
        return self.matrix.graph

    def source_projection(self) -> MatrixOverAlgebra:
        return self.matrix.adjoint() @ self.matrix

    def range_projection(self) -> MatrixOverAlgebra:
        return self.matrix @ self.matrix.adjoint()

    def direct_sum(self, other: "PartialIsometryClass") -> "PartialIsometryClass":
        label = f"{self.name}⊕{other.name}" if self.name and other.name else ""
        return PartialIsometryClass.from_matrix(self.matrix.direct_sum(other.matrix), label)


# JSON

def element_from_json(graph: DirectedGraph, data: Mapping[str, Any]) -> AlgebraElement:
    """{"unit": [re, im], "terms": [{"mu": [...], "nu": [...], "coeff": [re, im], "vertex": v?}]}."""
    terms: Dict[Monomial, Any] = {}
    for position, term in enumerate(data.get("terms", [])):
        mu_edges, nu_edges = term.get("mu", []), term.get("nu", [])
        mu = path_from_edges(graph, mu_edges) if mu_edges else None
        nu = path_from_edges(graph, nu_edges) if nu_edges else None
        if mu is None and nu is None:
            mu = nu = path_from_edges(graph, [], term.get("vertex"))
        elif mu is None:
            mu = Path.vertex(nu.dst)
        elif nu is None:
            nu = Path.vertex(mu.dst)
        key = (mu, nu)
        terms[key] = terms.get(key, 0) + scalars.from_pair(term.get("coeff", [1, 0]))
    return AlgebraElement(graph, terms, scalars.from_pair(data.get("unit", [0, 0])))


def element_to_json(x: AlgebraElement) -> Dict[str, Any]:
    terms = []
    for (mu, nu), coeff in x.sorted_terms():
        term = {"mu": list(mu.edges), "nu": list(nu.edges), "coeff": scalars.to_pair(coeff)}
        if mu.length == 0 and nu.length == 0:
            term["vertex"] = mu.src
        terms.append(term)
    return {"unit": scalars.to_pair(x.unit), "terms": terms}


def matrix_from_json(graph: DirectedGraph, data: Mapping[str, Any]) -> MatrixOverAlgebra:
    size = int(data["size"])
    flat = data["entries"]
    if len(flat) != size * size:
        raise InvalidClassError(f"expected {size * size} entries, got {len(flat)}")
    elements = [element_from_json(graph, item) for item in flat]
    return MatrixOverAlgebra.from_rows(graph, [elements[i * size:(i + 1) * size] for i in range(size)])


def matrix_to_json(matrix: MatrixOverAlgebra) -> Dict[str, Any]:
    return {"size": matrix.size,
            "entries": [element_to_json(matrix[i, j]) for i in range(matrix.size) for j in range(matrix.size)]}
