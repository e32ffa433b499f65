"""Integer K-theory of graph algebras and the index pairing of partial isometries.

K₀ and K₁ of the graph algebra are the cokernel and kernel of 1 − Vᵀ on ℤ^{G⁰};
K-homology uses 1 − V. Classes in K₀(A) are integer vectors on the basis
[p_v A]. A partial isometry v over the unitisation pairs with the Fock
extension through Index(QvQ : v*vF^k → vv*F^k), computed fibrewise over the
range vertices of the Fock basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.polys.matrices import DomainMatrix

from pimsner.algebra import (
    AlgebraElement,
    MatrixOverAlgebra,
    PartialIsometryClass,
    ProjectionData,
)
from pimsner.bimodule import VertexFunction, left_inner, point_mass, right_inner
from pimsner.errors import (
    InternalCheckError,
    InvalidInputError,
    ModularConditionError,
    StabilizationError,
)
from pimsner.fock import TruncatedFock, build_fock, toeplitz
from pimsner.graph_core import DirectedGraph, IntegerMatrix, Path, vertex_matrix
from pimsner.xi import build_xi, homogeneous_decompose
from utils.app_constants import AppConstants
from utils.logger import Log


# Smith normal form

def _bezout(a: int, b: int) -> np.ndarray:
    """2×2 integer matrix M with det M = 1 and M·(a, b)ᵀ = (g, 0)ᵀ, g = ±gcd(a, b)."""
    state = np.array([[a, 1, 0], [b, 0, 1]], dtype=object)
    while state[1, 0] != 0:
        q = state[0, 0] // state[1, 0]
        state[0] = state[0] - q * state[1]
        state = state[::-1].copy()
    move = state[:, 1:].copy()
    if move[0, 0] * move[1, 1] - move[0, 1] * move[1, 0] == -1:
        move[1] = -move[1]
    return move


def _inverse_2x2(move: np.ndarray) -> np.ndarray:
    return np.array([[move[1, 1], -move[0, 1]], [-move[1, 0], move[0, 0]]], dtype=object)


class _Elimination:
    """Unimodular row and column operations on D, tracking U, U⁻¹ and W with U·M·W = D."""

    def __init__(self, matrix: np.ndarray):
        rows, cols = matrix.shape
        self.D = matrix.copy()
        self.U = np.eye(rows, dtype=int).astype(object)
        self.U_inverse = np.eye(rows, dtype=int).astype(object)
        self.W = np.eye(cols, dtype=int).astype(object)

    def rows(self, i: int, j: int, move: np.ndarray) -> None:
        self.D[[i, j]] = move @ self.D[[i, j]]
        self.U[[i, j]] = move @ self.U[[i, j]]
        self.U_inverse[:, [i, j]] = self.U_inverse[:, [i, j]] @ _inverse_2x2(move)

    def columns(self, i: int, j: int, move: np.ndarray) -> None:
        self.D[:, [i, j]] = self.D[:, [i, j]] @ move
        self.W[:, [i, j]] = self.W[:, [i, j]] @ move

    def swap(self, t: int, i: int, j: int) -> None:
        if i != t:
            self.D[[t, i]] = self.D[[i, t]]
            self.U[[t, i]] = self.U[[i, t]]
            self.U_inverse[:, [t, i]] = self.U_inverse[:, [i, t]]
        if j != t:
            self.D[:, [t, j]] = self.D[:, [j, t]]
            self.W[:, [t, j]] = self.W[:, [j, t]]

    def negate_row(self, i: int) -> None:
        self.D[i] = -self.D[i]
        self.U[i] = -self.U[i]
        self.U_inverse[:, i] = -self.U_inverse[:, i]

    def clear_column(self, t: int) -> bool:
        if all(self.D[i, t] == 0 for i in range(t + 1, self.D.shape[0])):
            return False
        for i in range(t + 1, self.D.shape[0]):
            if self.D[i, t] != 0:
                self.rows(t, i, _bezout(self.D[t, t], self.D[i, t]))
        return True

    def clear_row(self, t: int) -> bool:
        if all(self.D[t, j] == 0 for j in range(t + 1, self.D.shape[1])):
            return False
        for j in range(t + 1, self.D.shape[1]):
            if self.D[t, j] != 0:
                self.columns(t, j, _bezout(self.D[t, t], self.D[t, j]).T)
        return True


def _to_integer_matrix(array: np.ndarray) -> IntegerMatrix:
    rows, cols = array.shape
    return sympy.ImmutableMatrix(rows, cols, [int(x) for x in array.flatten()])


@dataclass(frozen=True)
class SmithDecomposition:
    """U·M·W = S with U, W unimodular and S = diag(d_1 | d_2 | …, zeros last)."""

    U: IntegerMatrix
    S: IntegerMatrix
    W: IntegerMatrix
    U_inverse: IntegerMatrix = field(repr=False)

    @property
    def diagonal(self) -> Tuple[int, ...]:
        return tuple(int(self.S[i, i]) for i in range(min(self.S.shape)))

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)

    def verify(self, matrix: IntegerMatrix) -> bool:
        diagonal = self.diagonal
        nonzero = [d for d in diagonal if d != 0]
        off_diagonal_zero = all(self.S[i, j] == 0 for i in range(self.S.rows) for j in range(self.S.cols) if i != j)
        return (
            self.U * sympy.Matrix(matrix) * self.W == self.S
            and abs(self.U.det()) == 1
            and abs(self.W.det()) == 1
            and off_diagonal_zero
            and all(d >= 0 for d in diagonal)
            and all(nonzero[i + 1] % nonzero[i] == 0 for i in range(len(nonzero) - 1))
            and list(diagonal[:len(nonzero)]) == nonzero
        )


def smith_normal_form(matrix: Any) -> SmithDecomposition:
    """
    Smith normal form over ℤ with transforms.

    Pivots on the smallest nonzero |entry| of the remaining block and clears its
    row and column with 2×2 Bézout moves, then enforces divisibility on the
    diagonal pairwise.

    Args:
        matrix: Integer matrix (sympy or nested lists)

    Returns:
        SmithDecomposition: exact U, S, W
    """
    source = sympy.Matrix(matrix)
    array = np.zeros(source.shape, dtype=object)
    for i in range(source.rows):
        for j in range(source.cols):
            value = source[i, j]
            if not value.is_integer:
                raise InvalidInputError(f"entry ({i}, {j}) = {value} is not an integer")
            array[i, j] = int(value)
    state = _Elimination(array)
    D = state.D

    for t in range(min(array.shape)):
        candidates = [(abs(D[i, j]), i, j) for i in range(t, D.shape[0]) for j in range(t, D.shape[1]) if D[i, j] != 0]
        if not candidates:
            break
        _, i, j = min(candidates)
        state.swap(t, i, j)
        state.clear_column(t)
        while state.clear_row(t) and state.clear_column(t):
            pass

    rank = sum(1 for t in range(min(array.shape)) if D[t, t] != 0)
    for i in range(rank):
        for j in range(i + 1, rank):
            a, b = D[i, i], D[j, j]
            if b % a == 0:
                continue
            s, u = _bezout(a, b)[0]
            g = s * a + u * b
            # diag(a, b) -> diag(g, ab/g)
            state.rows(i, j, np.array([[s, u], [-(b // g), a // g]], dtype=object))
            state.columns(i, j, np.array([[1, -(u * b // g)], [1, s * a // g]], dtype=object))
    for i in range(rank):
        if D[i, i] < 0:
            state.negate_row(i)

    return SmithDecomposition(_to_integer_matrix(state.U), _to_integer_matrix(D),
                              _to_integer_matrix(state.W), _to_integer_matrix(state.U_inverse))


# groups and classes

@dataclass(frozen=True)
class KGroup:
    """ℤ^rank ⊕ ⊕ ℤ/t; generators live in the ambient ℤ^{G⁰}."""

    rank: int
    torsion: Tuple[int, ...] = ()
    generators: Tuple[Tuple[int, ...], ...] = ()

    def is_zero(self) -> bool:
        return self.rank == 0 and not self.torsion

    def __str__(self) -> str:
        parts = []
        if self.rank:
            parts.append("ℤ" if self.rank == 1 else f"ℤ^{self.rank}")
        parts.extend(f"ℤ/{t}" for t in self.torsion)
        return " ⊕ ".join(parts) or "0"

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": str(self),
            "rank": self.rank,
            "torsion": [str(t) for t in self.torsion],
            "generators": [[str(x) for x in g] for g in self.generators],
        }


def _column(matrix: IntegerMatrix, j: int) -> Tuple[int, ...]:
    return tuple(int(matrix[i, j]) for i in range(matrix.rows))


def _cokernel(snf: SmithDecomposition, size: int) -> KGroup:
    diagonal = list(snf.diagonal) + [0] * (size - len(snf.diagonal))
    torsion = tuple(d for d in diagonal if d > 1)
    rank = sum(1 for d in diagonal if d == 0)
    # torsion factors precede the zeros on the diagonal
    generators = tuple(_column(snf.U_inverse, i) for i, d in enumerate(diagonal) if d != 1)
    return KGroup(rank, torsion, generators)


def _kernel(snf: SmithDecomposition) -> KGroup:
    columns = snf.W.cols
    basis = tuple(_column(snf.W, j) for j in range(snf.rank, columns))
    return KGroup(len(basis), (), basis)


def _one_minus(graph: DirectedGraph, transpose: bool) -> IntegerMatrix:
    v = vertex_matrix(graph)
    return sympy.ImmutableMatrix(sympy.eye(len(graph.vertices)) - (v.T if transpose else v))


def k_theory(graph: DirectedGraph) -> Tuple[KGroup, KGroup]:
    """(K₀, K₁) = (coker(1 − Vᵀ), ker(1 − Vᵀ))."""
    matrix = _one_minus(graph, transpose=True)
    snf = smith_normal_form(matrix)
    return _cokernel(snf, matrix.rows), _kernel(snf)


def k_homology(graph: DirectedGraph) -> Tuple[KGroup, KGroup]:
    """(K⁰, K¹) = (ker(1 − V), coker(1 − V))."""
    matrix = _one_minus(graph, transpose=False)
    snf = smith_normal_form(matrix)
    return _kernel(snf), _cokernel(snf, matrix.rows)


@dataclass(frozen=True)
class KClass:
    """Element of K₀(A) = ℤ^{G⁰} on the basis [p_v A]."""

    graph: DirectedGraph = field(repr=False, compare=False)
    values: Tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(x) for x in self.values)
        if len(values) != len(self.graph.vertices):
            raise InvalidInputError(f"class has {len(values)} entries for {len(self.graph.vertices)} vertices")
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, graph: DirectedGraph) -> "KClass":
        return cls(graph, (0,) * len(graph.vertices))

    @classmethod
    def ones(cls, graph: DirectedGraph) -> "KClass":
        """[A] = Σ_v [p_v A]."""
        return cls(graph, (1,) * len(graph.vertices))

    @classmethod
    def basis(cls, graph: DirectedGraph, vertex: str) -> "KClass":
        return cls(graph, tuple(1 if v == vertex else 0 for v in graph.vertices))

    @classmethod
    def from_mapping(cls, graph: DirectedGraph, values: Dict[str, int]) -> "KClass":
        return cls(graph, tuple(values.get(v, 0) for v in graph.vertices))

    def __getitem__(self, vertex: str) -> int:
        return self.values[self.graph.vertex_position[vertex]]

    def __add__(self, other: "KClass") -> "KClass":
        return KClass(self.graph, tuple(a + b for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "KClass":
        return KClass(self.graph, tuple(-a for a in self.values))

    def __sub__(self, other: "KClass") -> "KClass":
        return self + (-other)

    def to_json(self) -> Dict[str, str]:
        return {v: str(x) for v, x in zip(self.graph.vertices, self.values)}


def class_of_E(graph: DirectedGraph) -> IntegerMatrix:
    """[E] acting on column vectors of K₀(A): Vᵀ."""
    return sympy.ImmutableMatrix(vertex_matrix(graph).T)


def one_minus_E(x: KClass) -> KClass:
    """(1 − [E])·x = (1 − Vᵀ)x."""
    product = _one_minus(x.graph, transpose=True) * sympy.Matrix(x.values)
    return KClass(x.graph, tuple(int(v) for v in product))


def exact_sequence_report(graph: DirectedGraph) -> Dict[str, Any]:
    """
    K₀, K₁, K⁰, K¹ with generators, invariant factors and rank bookkeeping.

    Returns:
        dict: JSON-ready report with integer strings and a list of checks
    """
    size = len(graph.vertices)
    k0, k1 = k_theory(graph)
    kh0, kh1 = k_homology(graph)
    checks = []
    for label, transpose, kernel in (("1-V^T", True, k1), ("1-V", False, kh0)):
        image_rank = sympy.Matrix(_one_minus(graph, transpose)).rank()
        lhs = kernel.rank + image_rank
        checks.append({"name": f"rank(ker)+rank(im)=|G0| for {label}", "pass": lhs == size,
                       "lhs": str(lhs), "rhs": str(size)})
    checks.append({"name": "torsion(K0)=torsion(K^1)", "pass": k0.torsion == kh1.torsion,
                   "lhs": [str(t) for t in k0.torsion], "rhs": [str(t) for t in kh1.torsion]})
    checks.append({"name": "rank(K1)=rank(K^0)", "pass": k1.rank == kh0.rank,
                   "lhs": str(k1.rank), "rhs": str(kh0.rank)})
    report = {
        "graph": graph.name,
        "vertices": list(graph.vertices),
        "k0": k0.to_json(),
        "k1": k1.to_json(),
        "k_hom": {"k0": kh0.to_json(), "k1": kh1.to_json()},
        "matrices": {
            "one_minus_vt": _rows(_one_minus(graph, True)),
            "one_minus_v": _rows(_one_minus(graph, False)),
        },
        "checks": checks,
    }
    Log.info(f"K-theory of {graph}: K0 = {k0}, K1 = {k1}, K^0 = {kh0}, K^1 = {kh1}")
    return report


def _rows(matrix: IntegerMatrix) -> List[List[str]]:
    return [[str(matrix[i, j]) for j in range(matrix.cols)] for i in range(matrix.rows)]


def is_smeb(graph: DirectedGraph) -> bool:
    """True iff V is a permutation matrix."""
    v = vertex_matrix(graph)
    n = v.rows
    return (all(x in (0, 1) for x in v)
            and all(sum(v[i, j] for j in range(n)) == 1 for i in range(n))
            and all(sum(v[i, j] for i in range(n)) == 1 for j in range(n)))


def _act_left(function: VertexFunction, vector):
    return type(vector)(vector.graph, vector.degree,
                        {p: sympy.expand(function[p.src] * c) for p, c in vector.coefficients.items()})


def _act_right(vector, function: VertexFunction):
    return type(vector)(vector.graph, vector.degree,
                        {p: sympy.expand(c * function[p.dst]) for p, c in vector.coefficients.items()})


def smeb_compatibility(graph: DirectedGraph) -> Dict[str, Any]:
    """
    Check _A(ξ|η)·ζ = ξ·(η|ζ)_A on all triples of edge point masses.

    Returns:
        dict: {"holds", "witness"} with the first failing triple of edge ids
    """
    frame = [point_mass(graph, Path.of(graph, [edge.id])) for edge in graph.edges]
    for xi in frame:
        for eta in frame:
            left = left_inner(xi, eta)
            for zeta in frame:
                lhs = _act_left(left, zeta)
                rhs = _act_right(xi, right_inner(eta, zeta))
                if dict(lhs.coefficients) != dict(rhs.coefficients):
                    witness = [next(iter(v.coefficients)).id for v in (xi, eta, zeta)]
                    return {"holds": False, "witness": witness}
    return {"holds": True, "witness": None}


# index pairing

def ev_star(v: PartialIsometryClass) -> KClass:
    """[v*v] − [vv*] from the vertex ranks of the two projections."""
    graph = v.graph
    return KClass(graph, tuple(v.source.rank_at(w) - v.range.rank_at(w) for w in graph.vertices))


def _amplify(fock: TruncatedFock, matrix: MatrixOverAlgebra) -> Tuple[sympy.SparseMatrix, np.ndarray]:
    """Symbol action of a k×k matrix on F^k with its clean column mask."""
    n, k = fock.size, matrix.size
    entries: Dict[Tuple[int, int], Any] = {}
    clean = np.ones(k * n, dtype=bool)
    for i in range(k):
        for j in range(k):
            if matrix[i, j].is_zero():
                continue
            operator = toeplitz(fock, matrix[i, j])
            for (a, b), value in operator.entries.items():
                entries[(i * n + a, j * n + b)] = value
            lo, hi = operator.clean
            for b, path in enumerate(fock.basis):
                if not lo <= path.length <= hi:
                    clean[j * n + b] = False
    return sympy.SparseMatrix(k * n, k * n, entries), clean


def _projection(fock: TruncatedFock, data: ProjectionData, copies: int) -> sympy.SparseMatrix:
    """A projection over the unitisation acting on F^k through s(μ)."""
    n = fock.size
    entries = {}
    for i in range(copies):
        for j in range(copies):
            for b, path in enumerate(fock.basis):
                value = data.scalar[i, j] + data.vertex_parts[path.src][i, j]
                if value != 0:
                    entries[(i * n + b, j * n + b)] = value
    return sympy.SparseMatrix(copies * n, copies * n, entries)


def _rank(matrix: sympy.SparseMatrix) -> int:
    if matrix.rows == 0 or matrix.cols == 0:
        return 0
    return DomainMatrix.from_Matrix(sympy.Matrix(matrix)).to_field().rank()


def _kernel_class(fock: TruncatedFock, operator: sympy.SparseMatrix, clean: np.ndarray,
                  domain: sympy.SparseMatrix, copies: int) -> KClass:
    """Per range vertex, dim of {x on clean columns : operator·x = 0, x ∈ range(domain)}."""
    size = copies * fock.size
    fibre = [fock.range_vertex(b) for b in range(fock.size)] * copies
    complement = sympy.SparseMatrix(sympy.eye(size)) - domain
    counts = {}
    for w in fock.graph.vertices:
        rows = [i for i in range(size) if fibre[i] == w]
        cols = [i for i in rows if clean[i]]
        if not cols:
            counts[w] = 0
            continue
        stacked = operator.extract(rows, cols).col_join(complement.extract(rows, cols))
        counts[w] = len(cols) - _rank(stacked)
    return KClass.from_mapping(fock.graph, counts)


@dataclass(frozen=True)
class IndexLevel:
    level: int
    kernel: KClass
    cokernel: KClass

    @property
    def index(self) -> KClass:
        return self.kernel - self.cokernel

    def to_json(self) -> Dict[str, Any]:
        return {"level": self.level, "kernel": self.kernel.to_json(), "cokernel": self.cokernel.to_json(),
                "index": self.index.to_json()}


@dataclass(frozen=True)
class IndexComputation:
    """Index(QvQ) per truncation level; pairing = −index."""

    name: str
    levels: Tuple[IndexLevel, ...]
    stabilized: bool
    index: KClass

    @property
    def pairing(self) -> KClass:
        return -self.index

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "levels": [level.to_json() for level in self.levels],
            "stabilized": self.stabilized,
            "index": self.index.to_json(),
            "pairing": self.pairing.to_json(),
        }


def _index_at_level(v: PartialIsometryClass, level: int) -> IndexLevel:
    fock = build_fock(v.graph, level, "exact")
    copies = v.matrix.size
    domain = _projection(fock, v.source, copies)
    codomain = _projection(fock, v.range, copies)
    forward, forward_clean = _amplify(fock, v.matrix)
    backward, backward_clean = _amplify(fock, v.matrix.adjoint())
    kernel = _kernel_class(fock, codomain * forward, forward_clean, domain, copies)
    cokernel = _kernel_class(fock, domain * backward, backward_clean, codomain, copies)
    Log.debug(f"Index of {v.name or 'class'} at K={level}: ker {kernel.values}, coker {cokernel.values}")
    return IndexLevel(level, kernel, cokernel)


def check_modular(v: PartialIsometryClass, degree_window: int = AppConstants.DEFAULT_DEGREE_WINDOW,
                  rank_window: int = AppConstants.DEFAULT_RMAX, tol: float = 1e-8,
                  mode: str = "auto") -> Dict[str, Any]:
    """
    Homogeneous decomposition of v on a Ξ window with its modular defects.

    Raises:
        ModularConditionError: orthogonality, commutation or diagonal-component
            condition fails; the witness carries the offending numbers
    """
    xi = build_xi(v.graph, degree_window, rank_window, mode=mode)
    decomposition = homogeneous_decompose(v, xi, tol)
    chop = decomposition.chop_vee_defect()
    modular = decomposition.vee_modular_defect()
    missing = decomposition.homog_violations()
    if chop > tol or max(modular.values()) > tol or missing:
        raise ModularConditionError(
            f"{v.name or 'class'} violates the modular condition",
            witness={"chop_vee": chop, "vee_modular": modular, "homog": missing},
        )
    return decomposition.to_json()


def index_pairing(v: PartialIsometryClass, level: Optional[int] = None,
                  max_escalations: int = AppConstants.MAX_ESCALATIONS,
                  modular_window: Optional[Tuple[int, int]] = None) -> IndexComputation:
    """
    Index(QvQ : v*vF^k → vv*F^k) on clean windows, stabilized across K and K + 1.

    Args:
        v: Validated partial isometry
        level: Starting truncation K (default: max monomial length of v plus 2)
        max_escalations: How many times K may be raised before giving up
        modular_window: (N, Rmax) to run the Ξ modular check first

    Raises:
        StabilizationError: consecutive levels never agreed
        ModularConditionError: the modular check failed
    """
    if modular_window is not None:
        check_modular(v, *modular_window)
    start = v.matrix.max_length() + 2 if level is None else level
    if start < 0:
        raise InvalidInputError(f"truncation level must be non-negative, got {start}")
    computed: Dict[int, IndexLevel] = {}
    current = start
    for attempt in range(max_escalations + 1):
        for k in (current, current + 1):
            if k not in computed:
                computed[k] = _index_at_level(v, k)
        if computed[current].index == computed[current + 1].index:
            levels = tuple(computed[k] for k in sorted(computed))
            Log.info(f"Index of {v.name or 'class'} stabilized at K={current}: {computed[current].index.values}")
            return IndexComputation(v.name, levels, True, computed[current].index)
        Log.warn(f"Index of {v.name or 'class'} differs between K={current} and K={current + 1}; escalating")
        current += 1
    raise StabilizationError(
        f"index of {v.name or 'class'} did not stabilize from K={start} after {max_escalations} escalations",
        levels=[computed[k].to_json() for k in sorted(computed)],
    )


@dataclass(frozen=True)
class DiagramCheck:
    """(1 − [E])·Index(QvQ) against ev_*(v); the opposite sign is reported alongside."""

    name: str
    computation: IndexComputation
    lhs: KClass
    rhs: KClass
    alternative: KClass

    @property
    def passes(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passes,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "opposite_sign_lhs": self.alternative.to_json(),
            "opposite_sign_pass": self.alternative == self.rhs,
            "pairing": self.computation.pairing.to_json(),
        }


def diagram_check(v: PartialIsometryClass, level: Optional[int] = None,
                  max_escalations: int = AppConstants.MAX_ESCALATIONS,
                  modular_window: Optional[Tuple[int, int]] = None) -> DiagramCheck:
    computation = index_pairing(v, level, max_escalations, modular_window)
    lhs = one_minus_E(-computation.pairing)
    rhs = ev_star(v)
    check = DiagramCheck(v.name, computation, lhs, rhs, one_minus_E(computation.pairing))
    if not check.passes:
        Log.warn(f"Diagram check failed for {v.name or 'class'}: {lhs.values} vs {rhs.values}")
    return check


def w_class(graph: DirectedGraph) -> PartialIsometryClass:
    """
    w = (S_{e_1}*, …, S_{e_n}*)ᵀ in the first column of an n×n matrix.

    Raises:
        InternalCheckError: w*w ≠ 1_A ⊕ 0 or ww* ≠ ((δ_{e_i}|δ_{e_j})_A)
    """
    edges = graph.edges
    zero = AlgebraElement.zero(graph)
    paths = [Path.of(graph, [edge.id]) for edge in edges]
    rows = [[AlgebraElement.generator_adjoint(graph, path) if j == 0 else zero for j in range(len(edges))]
            for path in paths]
    v = PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(graph, rows), name="w")

    expected_source = MatrixOverAlgebra.diagonal(graph, [AlgebraElement.unit_of_a(graph)] + [zero] * (len(edges) - 1))
    expected_range = MatrixOverAlgebra.diagonal(graph, [AlgebraElement.vertex(graph, p.dst) for p in paths])
    if not v.source_projection().equals(expected_source):
        raise InternalCheckError(f"w*w is not 1_A ⊕ 0 on {graph}")
    if not v.range_projection().equals(expected_range):
        raise InternalCheckError(f"ww* is not the Gram matrix of the edge frame on {graph}")
    return v


def pairing_w(graph: DirectedGraph, level: Optional[int] = None,
              max_escalations: int = AppConstants.MAX_ESCALATIONS) -> KClass:
    """−Index(QwQ), expected to be −[A]."""
    return index_pairing(w_class(graph), level, max_escalations).pairing


@dataclass(frozen=True)
class DiagramSuiteReport:
    graph: DirectedGraph = field(repr=False)
    checks: Tuple[DiagramCheck, ...]

    @property
    def failures(self) -> Tuple[DiagramCheck, ...]:
        return tuple(check for check in self.checks if not check.passes)

    def to_json(self) -> Dict[str, Any]:
        return {
            "graph": self.graph.name,
            "cases": len(self.checks),
            "failures": len(self.failures),
            "checks": [check.to_json() for check in self.checks],
        }


def diagram_suite(graph: DirectedGraph, suite: Sequence[PartialIsometryClass], level: Optional[int] = None,
                  max_escalations: int = AppConstants.MAX_ESCALATIONS,
                  modular_window: Optional[Tuple[int, int]] = None) -> DiagramSuiteReport:
    checks = []
    for v in suite:
        if v.graph != graph:
            raise InvalidInputError(f"class {v.name!r} belongs to a different graph")
        checks.append(diagram_check(v, level, max_escalations, modular_window))
    report = DiagramSuiteReport(graph, tuple(checks))
    Log.info(f"Diagram suite on {graph}: {len(checks)} cases, {len(report.failures)} failures")
    return report
