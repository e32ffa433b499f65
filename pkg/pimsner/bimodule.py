"""The bimodule E^{⊗k} of a graph in the path basis.

E^{⊗k} is the space of functions on length-k paths with
(a·ξ)(μ) = a(s(μ))ξ(μ), (ξ·a)(μ) = ξ(μ)a(r(μ)),
(ξ|η)_A(v) = Σ_{r(μ)=v} conj(ξ(μ))η(μ) and _A(ξ|η)(v) = Σ_{s(μ)=v} ξ(μ)conj(η(μ)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from pimsner import scalars
from pimsner.errors import DegreeMismatchError, NonConvergenceError
from pimsner.graph_core import (
    DirectedGraph,
    Path,
    beta_sequence,
    beta_vector,
    enumerate_paths,
    left_beta_vector,
    path_from_id,
    perron_data,
    period,
)
from utils.app_constants import AppConstants
from utils.logger import Log

Matrix = Union[sympy.ImmutableMatrix, np.ndarray]


@dataclass(frozen=True)
class VertexFunction:
    """One scalar per vertex (an element of the commutative algebra A = C(G⁰))."""

    vertices: Tuple[str, ...]
    values: Tuple[Any, ...]

    def __post_init__(self):
        if len(self.values) != len(self.vertices):
            raise ValueError(f"expected {len(self.vertices)} values, got {len(self.values)}")

    @classmethod
    def constant(cls, graph: DirectedGraph, value: Any) -> "VertexFunction":
        return cls(graph.vertices, tuple(value for _ in graph.vertices))

    @classmethod
    def indicator(cls, graph: DirectedGraph, vertex: str) -> "VertexFunction":
        return cls(graph.vertices, tuple(sympy.Integer(int(v == vertex)) for v in graph.vertices))

    def __getitem__(self, vertex: str) -> Any:
        return self.values[self.vertices.index(vertex)]

    def as_dict(self) -> Dict[str, Any]:
        return dict(zip(self.vertices, self.values))

    def close_to(self, other: "VertexFunction", tol: float = 0.0) -> bool:
        return all(abs(complex(a) - complex(b)) <= tol for a, b in zip(self.values, other.values))

    def to_json(self) -> Dict[str, Any]:
        return {v: _encode_value(x) for v, x in zip(self.vertices, self.values)}


def _encode_value(value: Any) -> Any:
    if isinstance(value, sympy.Basic):
        if value.is_Integer:
            return int(value)
        if value.is_Rational:
            return f"{value.p}/{value.q}"
        return scalars.to_pair(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else value.numerator
    if isinstance(value, complex):
        return [value.real, value.imag] if value.imag else value.real
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


@dataclass(frozen=True)
class TensorElement:
    """An element of E^{⊗k}: coefficients on length-k paths."""

    graph: DirectedGraph = field(repr=False, compare=False)
    degree: int
    coefficients: Mapping[Path, Any]

    def __post_init__(self):
        cleaned = {}
        for path, coeff in self.coefficients.items():
            if path.length != self.degree:
                raise DegreeMismatchError(f"path {path.id} has length {path.length}, expected {self.degree}")
            if not scalars.is_zero(coeff):
                cleaned[path] = coeff
        object.__setattr__(self, "coefficients", MappingProxyType(cleaned))

    def __getitem__(self, path: Path) -> Any:
        return self.coefficients.get(path, 0)

    def __add__(self, other: "TensorElement") -> "TensorElement":
        _check_degrees(self, other)
        merged = dict(self.coefficients)
        for path, coeff in other.coefficients.items():
            merged[path] = merged.get(path, 0) + coeff
        return TensorElement(self.graph, self.degree, merged)

    def __mul__(self, scalar: Any) -> "TensorElement":
        return TensorElement(self.graph, self.degree, {p: c * scalar for p, c in self.coefficients.items()})

    __rmul__ = __mul__

    def to_json(self) -> Dict[str, Any]:
        return {
            "degree": self.degree,
            "coefficients": {p.id: scalars.to_pair(c) for p, c in self.coefficients.items()},
        }


def _check_degrees(xi: TensorElement, eta: TensorElement) -> None:
    if xi.degree != eta.degree:
        raise DegreeMismatchError(f"degrees differ: {xi.degree} vs {eta.degree}")


def tensor_from_json(graph: DirectedGraph, data: Mapping[str, Any]) -> TensorElement:
    coefficients = {path_from_id(graph, pid): scalars.from_pair(c) for pid, c in data["coefficients"].items()}
    return TensorElement(graph, int(data["degree"]), coefficients)


def point_mass(graph: DirectedGraph, path: Path) -> TensorElement:
    """δ_μ."""
    return TensorElement(graph, path.length, {path: sympy.Integer(1)})


@dataclass(frozen=True)
class EndoMatrix:
    """An adjointable endomorphism of E^{⊗k} as a matrix in the path basis."""

    graph: DirectedGraph = field(repr=False, compare=False)
    degree: int
    paths: Tuple[Path, ...]
    matrix: Matrix = field(compare=False)

    def __post_init__(self):
        rows, cols = self.matrix.shape
        if rows != len(self.paths) or cols != len(self.paths):
            raise DegreeMismatchError(
                f"matrix {rows}x{cols} does not match {len(self.paths)} paths of length {self.degree}"
            )

    @property
    def exact(self) -> bool:
        return isinstance(self.matrix, sympy.MatrixBase)

    def index(self, path: Path) -> int:
        return self.paths.index(path)

    def entry(self, mu: Path, nu: Path) -> Any:
        return self.matrix[self.index(mu), self.index(nu)]

    def to_numpy(self) -> np.ndarray:
        if self.exact:
            return np.array(self.matrix.evalf(), dtype=complex)
        return np.asarray(self.matrix)

    def _wrap(self, matrix: Matrix) -> "EndoMatrix":
        return EndoMatrix(self.graph, self.degree, self.paths, matrix)

    def __matmul__(self, other: "EndoMatrix") -> "EndoMatrix":
        if self.exact and other.exact:
            return self._wrap(sympy.ImmutableMatrix(self.matrix * other.matrix).applyfunc(sympy.expand))
        return self._wrap(self.to_numpy() @ other.to_numpy())

    def __add__(self, other: "EndoMatrix") -> "EndoMatrix":
        if self.exact and other.exact:
            return self._wrap(sympy.ImmutableMatrix(self.matrix + other.matrix))
        return self._wrap(self.to_numpy() + other.to_numpy())

    def __sub__(self, other: "EndoMatrix") -> "EndoMatrix":
        return self + other.scaled(-1)

    def scaled(self, scalar: Any) -> "EndoMatrix":
        if self.exact and not isinstance(scalar, (float, complex)):
            return self._wrap(sympy.ImmutableMatrix(self.matrix * scalars.exact(scalar)))
        return self._wrap(self.to_numpy() * scalar)

    def adjoint(self) -> "EndoMatrix":
        if self.exact:
            return self._wrap(sympy.ImmutableMatrix(self.matrix.H))
        return self._wrap(self.to_numpy().conj().T)

    def apply(self, xi: TensorElement) -> TensorElement:
        if xi.degree != self.degree:
            raise DegreeMismatchError(f"operator of degree {self.degree} applied to degree {xi.degree}")
        vector = [xi[p] for p in self.paths]
        image = {}
        for i, mu in enumerate(self.paths):
            image[mu] = sum((self.matrix[i, j] * c for j, c in enumerate(vector) if c != 0), 0)
        return TensorElement(self.graph, self.degree, image)

    def equals(self, other: "EndoMatrix", tol: float = 0.0) -> bool:
        if self.paths != other.paths:
            return False
        if self.exact and other.exact and tol == 0.0:
            return (self.matrix - other.matrix).applyfunc(sympy.expand).is_zero_matrix
        return bool(np.max(np.abs(self.to_numpy() - other.to_numpy()), initial=0.0) <= tol)

    def to_json(self) -> Dict[str, Any]:
        size = len(self.paths)
        return {
            "degree": self.degree,
            "paths": [p.id for p in self.paths],
            "entries": [[scalars.to_pair(self.matrix[i, j]) for j in range(size)] for i in range(size)],
        }


def endo_from_json(graph: DirectedGraph, data: Mapping[str, Any]) -> EndoMatrix:
    paths = tuple(path_from_id(graph, pid) for pid in data["paths"])
    rows = [[scalars.from_pair(c) for c in row] for row in data["entries"]]
    return EndoMatrix(graph, int(data["degree"]), paths, sympy.ImmutableMatrix(rows) if rows else sympy.ImmutableMatrix(0, 0, []))


def standard_frame(graph: DirectedGraph, k: int, cap: Optional[int] = None) -> List[TensorElement]:
    """Point masses δ_μ for |μ| = k, in enumeration order."""
    return [point_mass(graph, path) for path in enumerate_paths(graph, k, cap)]


def right_inner(xi: TensorElement, eta: TensorElement) -> VertexFunction:
    """(ξ|η)_A(v) = Σ_{r(μ)=v} conj(ξ(μ))η(μ)."""
    _check_degrees(xi, eta)
    totals = {v: sympy.Integer(0) for v in xi.graph.vertices}
    for path, coeff in xi.coefficients.items():
        if path in eta.coefficients:
            totals[path.dst] = totals[path.dst] + scalars.conj(coeff) * eta.coefficients[path]
    return VertexFunction(xi.graph.vertices, tuple(_simplify(totals[v]) for v in xi.graph.vertices))


def left_inner(xi: TensorElement, eta: TensorElement) -> VertexFunction:
    """_A(ξ|η)(v) = Σ_{s(μ)=v} ξ(μ)conj(η(μ))."""
    _check_degrees(xi, eta)
    totals = {v: sympy.Integer(0) for v in xi.graph.vertices}
    for path, coeff in xi.coefficients.items():
        if path in eta.coefficients:
            totals[path.src] = totals[path.src] + coeff * scalars.conj(eta.coefficients[path])
    return VertexFunction(xi.graph.vertices, tuple(_simplify(totals[v]) for v in xi.graph.vertices))


def _simplify(value: Any) -> Any:
    return sympy.expand(value) if isinstance(value, sympy.Basic) else value


def theta(x: TensorElement, y: TensorElement) -> EndoMatrix:
    """Rank-one operator Θ_{x,y} = x(y|·)_A; entry [μ][ν] = x(μ)conj(y(ν)) when r(μ) = r(ν)."""
    _check_degrees(x, y)
    paths = enumerate_paths(x.graph, x.degree)

    def entry(i: int, j: int) -> Any:
        mu, nu = paths[i], paths[j]
        if mu.dst != nu.dst:
            return 0
        return sympy.expand(scalars.exact(x[mu]) * scalars.conj(scalars.exact(y[nu])))

    return EndoMatrix(x.graph, x.degree, paths, sympy.ImmutableMatrix(len(paths), len(paths), entry))


def identity_endo(graph: DirectedGraph, k: int) -> EndoMatrix:
    paths = enumerate_paths(graph, k)
    return EndoMatrix(graph, k, paths, sympy.ImmutableMatrix(sympy.eye(len(paths))))


def frame_sum(graph: DirectedGraph, k: int) -> EndoMatrix:
    """Σ_μ Θ_{δ_μ,δ_μ} over the standard frame."""
    frame = standard_frame(graph, k)
    total = theta(frame[0], frame[0])
    for vector in frame[1:]:
        total = total + theta(vector, vector)
    return total


def watatani_index(graph: DirectedGraph, k: int) -> VertexFunction:
    """e^{β_k} = V^k·1 (exact)."""
    return VertexFunction(graph.vertices, tuple(sympy.Integer(x) for x in beta_vector(graph, k)))


def watatani_left(graph: DirectedGraph, k: int) -> VertexFunction:
    """ℓ_k = (V^T)^k·1 (exact)."""
    return VertexFunction(graph.vertices, tuple(sympy.Integer(x) for x in left_beta_vector(graph, k)))


def phi_k(operator: EndoMatrix, frame: Optional[Sequence[TensorElement]] = None) -> VertexFunction:
    """
    Localized trace Φ_k(T) = Σ_ρ _A(T e_ρ | e_ρ).

    Args:
        operator: T on E^{⊗k}
        frame: Any frame of E^{⊗k}; the standard frame when omitted

    Returns:
        VertexFunction: Φ_k(T)(v) = Σ_{s(μ)=v} T_μμ for the standard frame
    """
    graph = operator.graph
    if frame is None:
        totals = {v: 0 for v in graph.vertices}
        for i, path in enumerate(operator.paths):
            totals[path.src] = totals[path.src] + operator.matrix[i, i]
        return VertexFunction(graph.vertices, tuple(_simplify(totals[v]) for v in graph.vertices))

    totals = {v: 0 for v in graph.vertices}
    for vector in frame:
        contribution = left_inner(operator.apply(vector), vector)
        for v in graph.vertices:
            totals[v] = totals[v] + contribution[v]
    return VertexFunction(graph.vertices, tuple(_simplify(totals[v]) for v in graph.vertices))


# Assumption-1 limits

def ratio_terms(graph: DirectedGraph, path: Path, n_max: int) -> List[Fraction]:
    """e^{β_{n−k}}(r(μ)) / e^{β_n}(s(μ)) for n = k..n_max, exactly."""
    k = path.length
    betas = beta_sequence(graph, n_max)
    r = graph.vertex_position[path.dst]
    s = graph.vertex_position[path.src]
    return [Fraction(betas[n - k][r], betas[n][s]) for n in range(k, n_max + 1)]


def tail_mean(terms: Sequence[Fraction], period_length: int = 1) -> Fraction:
    """Mean over the second half of `terms`, trimmed to whole periods at the end."""
    window = list(terms[len(terms) // 2:])
    step = max(period_length, 1)
    usable = (len(window) // step) * step or len(window)
    window = window[-usable:]
    return sum(window, Fraction(0)) / len(window)


def resolve_mode(graph: DirectedGraph, mode: str) -> str:
    """'auto' becomes 'closed' for primitive graphs and 'cesaro' otherwise."""
    if mode == "auto":
        return "closed" if perron_data(graph).primitive else "cesaro"
    if mode not in ("closed", "cesaro"):
        raise ValueError(f"unknown limit mode {mode!r}")
    return mode


@lru_cache(maxsize=None)
def limit_ratio(graph: DirectedGraph, path: Path, mode: str = "auto",
                cutoff: int = AppConstants.CESARO_CUTOFF, tol: float = 1e-6) -> float:
    """
    λ(μ) = lim_n e^{β_{n−|μ|}}(r(μ)) / e^{β_n}(s(μ)).

    Closed form λ^{−|μ|}x(r(μ))/x(s(μ)) from Perron data, or a period-aligned
    tail mean of the exact sequence up to `cutoff` levels past |μ|.
    """
    mode = resolve_mode(graph, mode)
    if path.length == 0:
        return 1.0
    if mode == "closed":
        data = perron_data(graph)
        x = data.eigenvector
        return (data.spectral_radius ** -path.length
                * x[graph.vertex_position[path.dst]] / x[graph.vertex_position[path.src]])

    terms = ratio_terms(graph, path, path.length + cutoff)
    step = period(graph)
    full = tail_mean(terms, step)
    half = tail_mean(terms[: len(terms) // 2 + 1], step)
    if abs(full - half) > tol:
        raise NonConvergenceError(f"Cesàro limit for {path.id} not settled by cutoff {cutoff}",
                                  float(abs(full - half)))
    return float(full)


@dataclass(frozen=True)
class LambdaResult:
    """Λ_k with its convergence diagnostics."""

    degree: int
    matrix: EndoMatrix
    mode: str
    delta_hat: float
    geometric_rate: Optional[float]
    gap_ratio: Optional[float]
    residual: float

    def value(self, path: Path) -> float:
        i = self.matrix.index(path)
        return float(np.real(self.matrix.matrix[i, i]))

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.degree,
            "mode": self.mode,
            "lambda": {p.id: self.value(p) for p in self.matrix.paths},
            "delta_hat": "inf" if math.isinf(self.delta_hat) else self.delta_hat,
            "geometric_rate": self.geometric_rate,
            "gap_ratio": self.gap_ratio,
            "residual": self.residual,
        }


def lambda_operator(graph: DirectedGraph, k: int, tol: float = 1e-6, mode: str = "auto",
                    cutoff: int = AppConstants.CESARO_CUTOFF) -> LambdaResult:
    """
    The diagonal operator Λ_k with λ_k(μ) on the diagonal.

    Args:
        graph: A nonsingular graph
        k: Degree, k ≥ 1
        tol: Convergence tolerance for the Cesàro mode
        mode: 'auto', 'closed' or 'cesaro'
        cutoff: Number of levels used by the Cesàro mode

    Returns:
        LambdaResult: Λ_k plus δ̂ (inf for geometric convergence), the fitted geometric rate and |λ₂|/λ
    """
    mode = resolve_mode(graph, mode)
    paths = enumerate_paths(graph, k)
    values = np.array([limit_ratio(graph, p, mode, cutoff, tol) for p in paths])
    matrix = EndoMatrix(graph, k, paths, np.diag(values))

    if mode == "closed":
        reference_level = k + AppConstants.REFERENCE_LEVEL
        reference = [ratio_terms(graph, p, reference_level) for p in paths]
        residual = max((abs(float(seq[-1]) - v) for seq, v in zip(reference, values)), default=0.0)
        first, last = AppConstants.RATE_WINDOW
        error_first = max((abs(seq[first] - seq[-1]) for seq in reference), default=Fraction(0))
        error_last = max((abs(seq[last] - seq[-1]) for seq in reference), default=Fraction(0))
        if error_first == 0:
            rate = 0.0
        else:
            rate = float(error_last / error_first) ** (1.0 / (last - first))
        gap = perron_data(graph).gap_ratio
        result = LambdaResult(k, matrix, mode, math.inf, rate, gap, residual)
    else:
        Log.warn(f"{graph} is not primitive; Λ_{k} uses period-aligned tail means")
        sequences = [ratio_terms(graph, p, k + cutoff) for p in paths]
        limits = [Fraction(v).limit_denominator(10 ** 12) for v in values]
        first, last = max(cutoff // 4, 1), max(cutoff // 2, 2)
        error_first = max(float(abs(seq[first] - lim)) for seq, lim in zip(sequences, limits))
        error_last = max(float(abs(seq[last] - lim)) for seq, lim in zip(sequences, limits))
        if error_last <= tol:
            delta_hat = math.inf
        elif error_first <= 0.0:
            delta_hat = 0.0
        else:
            delta_hat = math.log(error_first / error_last) / math.log(last / first)
        result = LambdaResult(k, matrix, mode, delta_hat, None, None, error_last)
    Log.info(f"Λ_{k} on {graph}: mode={mode}, δ̂={result.delta_hat}, residual={result.residual:.3e}")
    return result


# Assumption 2

@dataclass(frozen=True)
class FactorizationResult:
    """Λ_k = L(c_k)·R_k, or two paths witnessing that no such factorization exists."""

    degree: int
    success: bool
    c: Optional[VertexFunction]
    projection: Optional[EndoMatrix]
    witness: Optional[Tuple[Path, Path]]

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"k": self.degree, "success": self.success}
        if self.success:
            data["c"] = self.c.to_json()
            data["support"] = [p.id for i, p in enumerate(self.projection.paths) if self.projection.matrix[i, i] == 1]
        else:
            data["witness"] = [p.id for p in self.witness]
        return data


def assumption2_factorize(lam: Union[LambdaResult, EndoMatrix], tol: float = 1e-9) -> FactorizationResult:
    """
    Factor Λ_k as c_k·R_k with R_k the support projection of Λ_k.

    Succeeds iff λ_k(μ) depends only on s(μ) on the support, within `tol`.
    """
    matrix = lam.matrix if isinstance(lam, LambdaResult) else lam
    graph = matrix.graph
    diagonal = np.real(np.diag(matrix.to_numpy()))
    support = [abs(x) > tol for x in diagonal]

    first_at: Dict[str, Tuple[Path, float]] = {}
    for path, value, kept in zip(matrix.paths, diagonal, support):
        if not kept:
            continue
        if path.src in first_at:
            other, other_value = first_at[path.src]
            if abs(other_value - value) > tol:
                Log.info(f"Assumption 2 fails at k={matrix.degree}: {other.id} vs {path.id}")
                return FactorizationResult(matrix.degree, False, None, None, (other, path))
        else:
            first_at[path.src] = (path, float(value))

    c = VertexFunction(graph.vertices, tuple(first_at[v][1] if v in first_at else 0.0 for v in graph.vertices))
    projection = EndoMatrix(graph, matrix.degree, matrix.paths,
                            sympy.ImmutableMatrix(sympy.diag(*[int(kept) for kept in support])))
    return FactorizationResult(matrix.degree, True, c, projection, None)


@dataclass(frozen=True)
class AssumptionReport:
    degree: int
    lam: LambdaResult
    factorization: FactorizationResult
    note: str = ("whether a different frame repairs a failed factorization is not decided here")

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.degree,
            "assumption1": self.lam.to_json(),
            "assumption2": self.factorization.to_json(),
            "note": self.note,
        }


def assumption_report(graph: DirectedGraph, k_max: int, tol: float = 1e-9, mode: str = "auto",
                      cutoff: int = AppConstants.CESARO_CUTOFF) -> List[AssumptionReport]:
    """One report per k = 1..k_max."""
    reports = []
    for k in range(1, k_max + 1):
        lam = lambda_operator(graph, k, tol=max(tol, 1e-6), mode=mode, cutoff=cutoff)
        reports.append(AssumptionReport(k, lam, assumption2_factorize(lam, max(tol, 1e-9))))
    return reports
