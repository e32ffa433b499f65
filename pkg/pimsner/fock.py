"""Truncated Fock module F^{≤K} and its operators.

Basis: all paths of length 0..K, level-major. δ_μ lies in the right fibre
r(μ); creation by δ_ν prepends ν, so T_ν δ_η = δ_{νη} when r(ν) = s(η).

Every FockOperator records the window of domain levels (`clean`) on which it
agrees with the untruncated operator, and the band of level shifts it can
produce.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse
import sympy

from pimsner import scalars
from pimsner.algebra import AlgebraElement
from pimsner.bimodule import (
    EndoMatrix,
    TensorElement,
    VertexFunction,
    frame_sum,
    identity_endo,
    point_mass,
    right_inner,
)
from pimsner.errors import DegreeMismatchError
from pimsner.graph_core import DirectedGraph, Path, enumerate_paths, paths_up_to
from utils.logger import Log

Entries = Mapping[Tuple[int, int], Any]


@dataclass(frozen=True)
class TruncatedFock:
    graph: DirectedGraph = field(repr=False)
    level: int
    mode: str = "exact"
    cap: Optional[int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"truncation level must be non-negative, got {self.level}")
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")

    @cached_property
    def basis(self) -> Tuple[Path, ...]:
        return paths_up_to(self.graph, self.level, self.cap)

    @cached_property
    def position(self) -> Dict[Path, int]:
        return {path: i for i, path in enumerate(self.basis)}

    @property
    def size(self) -> int:
        return len(self.basis)

    def levels(self, lo: int = 0, hi: Optional[int] = None) -> Tuple[int, ...]:
        """Basis positions with level in [lo, hi]."""
        top = self.level if hi is None else hi
        return tuple(i for i, p in enumerate(self.basis) if lo <= p.length <= top)

    def range_vertex(self, i: int) -> str:
        return self.basis[i].dst

    def one(self) -> Any:
        return sympy.Integer(1) if self.mode == "exact" else 1.0


def build_fock(graph: DirectedGraph, level: int, mode: str = "exact", cap: Optional[int] = None) -> TruncatedFock:
    """
    Truncated Fock module with all paths of length ≤ level.

    Args:
        graph: A nonsingular graph
        level: Truncation level K
        mode: 'exact' (sympy) or 'float' (scipy.sparse)
        cap: Path cap override

    Returns:
        TruncatedFock: the model
    """
    fock = TruncatedFock(graph, level, mode, cap)
    Log.debug(f"Fock module of {graph} up to level {level}: {fock.size} basis vectors")
    return fock


@dataclass(frozen=True)
class FockOperator:
    """Sparse operator on a TruncatedFock; `clean` is the exact domain-level window."""

    fock: TruncatedFock = field(repr=False)
    entries: Entries
    clean: Tuple[int, int]
    band: Tuple[int, int] = (0, 0)
    # entries equal the compression P_{≤K} T P_{≤K} (false after products)
    compressed: bool = True

    def __post_init__(self):
        cleaned = {key: value for key, value in self.entries.items() if not scalars.is_zero(value)}
        object.__setattr__(self, "entries", MappingProxyType(cleaned))

    # backends

    def matrix(self):
        """sympy.SparseMatrix in exact mode, scipy csr matrix in float mode."""
        return _to_backend(self.entries, self.fock.size, self.fock.mode)

    def dense(self) -> np.ndarray:
        result = np.zeros((self.fock.size, self.fock.size), dtype=complex)
        for (i, j), value in self.entries.items():
            result[i, j] = complex(value)
        return result

    def _new(self, entries: Entries, clean: Tuple[int, int], band: Tuple[int, int],
             compressed: Optional[bool] = None) -> "FockOperator":
        return FockOperator(self.fock, entries, clean, band,
                            self.compressed if compressed is None else compressed)

    # algebra

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        _check_same(self, other)
        product = _from_backend(self.matrix() * other.matrix() if self.fock.mode == "exact"
                                else self.matrix() @ other.matrix(), self.fock.mode)
        # other's clean columns land at most band[1] levels higher, where self must still be exact
        hi = min(other.clean[1], self.clean[1] - max(other.band[1], 0))
        clean = (other.clean[0], hi)
        band = (self.band[0] + other.band[0], self.band[1] + other.band[1])
        return self._new(product, clean, band, compressed=False)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _check_same(self, other)
        merged = dict(self.entries)
        for key, value in other.entries.items():
            merged[key] = _simplify(merged.get(key, 0) + value)
        clean = (max(self.clean[0], other.clean[0]), min(self.clean[1], other.clean[1]))
        band = (min(self.band[0], other.band[0]), max(self.band[1], other.band[1]))
        return self._new(merged, clean, band, compressed=self.compressed and other.compressed)

    def __neg__(self) -> "FockOperator":
        return self.scaled(-1)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + (-other)

    def scaled(self, scalar: Any) -> "FockOperator":
        if self.fock.mode == "exact":
            scalar = scalars.exact(scalar)
            return self._new({k: sympy.expand(v * scalar) for k, v in self.entries.items()}, self.clean, self.band)
        return self._new({k: complex(v) * complex(scalar) for k, v in self.entries.items()}, self.clean, self.band)

    def adjoint(self) -> "FockOperator":
        """Conjugate transpose. Certified only when the entries are an exact compression."""
        entries = {(j, i): scalars.conj(v) for (i, j), v in self.entries.items()}
        lo, hi = -self.band[1], -self.band[0]
        if self.compressed:
            # compression of T*, exact while the raised image stays within level K
            clean = (0, self.fock.level - max(hi, 0))
        else:
            clean = (0, -1)
        return self._new(entries, clean, (lo, hi))

    # queries

    def clean_positions(self) -> Tuple[int, ...]:
        return self.fock.levels(self.clean[0], self.clean[1])

    def column(self, j: int) -> Dict[int, Any]:
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def agrees_on_clean(self, other: "FockOperator", tol: float = 0.0) -> bool:
        """Columns on the common clean window coincide."""
        _check_same(self, other)
        lo = max(self.clean[0], other.clean[0])
        hi = min(self.clean[1], other.clean[1])
        columns = set(self.fock.levels(lo, hi))
        keys = {k for k in self.entries if k[1] in columns} | {k for k in other.entries if k[1] in columns}
        for key in keys:
            difference = self.entries.get(key, 0) - other.entries.get(key, 0)
            if tol == 0.0:
                if not scalars.is_zero(difference):
                    return False
            elif abs(complex(difference)) > tol:
                return False
        return True

    def is_zero(self) -> bool:
        return not self.entries


def _check_same(a: FockOperator, b: FockOperator) -> None:
    if a.fock != b.fock:
        raise DegreeMismatchError("operators live on different Fock truncations")


def _simplify(value: Any) -> Any:
    return sympy.expand(value) if isinstance(value, sympy.Basic) else value


def _to_backend(entries: Entries, size: int, mode: str):
    if mode == "exact":
        return sympy.SparseMatrix(size, size, dict(entries))
    if not entries:
        return scipy.sparse.csr_matrix((size, size), dtype=complex)
    rows, cols = zip(*entries.keys())
    data = [complex(v) for v in entries.values()]
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(size, size), dtype=complex)


def _from_backend(matrix, mode: str) -> Dict[Tuple[int, int], Any]:
    if mode == "exact":
        return {(int(i), int(j)): sympy.expand(v) for (i, j), v in matrix.todok().items()}
    coo = matrix.tocoo()
    return {(int(i), int(j)): complex(v) for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0}


def _coefficient(fock: TruncatedFock, value: Any) -> Any:
    return scalars.exact(value) if fock.mode == "exact" else complex(value)


# constructors

def identity(fock: TruncatedFock) -> FockOperator:
    return FockOperator(fock, {(i, i): fock.one() for i in range(fock.size)}, (0, fock.level))


def zero(fock: TruncatedFock) -> FockOperator:
    return FockOperator(fock, {}, (0, fock.level))


def monomial_operator(fock: TruncatedFock, mu: Path, nu: Path, coeff: Any = 1) -> FockOperator:
    """
    T_μT_ν*: δ_{νγ} ↦ coeff·δ_{μγ}, other basis vectors ↦ 0.

    Exact on domain levels k with k − |ν| + |μ| ≤ K.
    """
    if mu.dst != nu.dst:
        return zero(fock)
    value = _coefficient(fock, coeff)
    entries = {}
    for j, eta in enumerate(fock.basis):
        gamma = eta.strip_prefix(nu)
        if gamma is None:
            continue
        target = mu.concat(gamma)
        if target.length <= fock.level:
            entries[(fock.position[target], j)] = value
    shift = mu.length - nu.length
    clean_hi = min(fock.level, fock.level - shift)
    return FockOperator(fock, entries, (0, clean_hi), (shift, shift))


def creation(fock: TruncatedFock, nu: TensorElement) -> FockOperator:
    """T_ν = Σ_μ ν(μ)·T_{δ_μ}; clean on levels 0..K−|ν|."""
    if nu.degree > fock.level:
        raise DegreeMismatchError(f"creation degree {nu.degree} exceeds truncation level {fock.level}")
    result = FockOperator(fock, {}, (0, fock.level - nu.degree), (nu.degree, nu.degree))
    for path, coeff in nu.coefficients.items():
        result = result + monomial_operator(fock, path, Path.vertex(path.dst), coeff)
    return result


def annihilation(fock: TruncatedFock, nu: TensorElement) -> FockOperator:
    """T_ν* (adjoint of creation); kills levels below |ν| and is exact on every level."""
    if nu.degree > fock.level:
        raise DegreeMismatchError(f"annihilation degree {nu.degree} exceeds truncation level {fock.level}")
    result = FockOperator(fock, {}, (0, fock.level), (-nu.degree, -nu.degree))
    for path, coeff in nu.coefficients.items():
        result = result + monomial_operator(fock, Path.vertex(path.dst), path, scalars.conj(coeff))
    return result


def level_projection(fock: TruncatedFock, k: int) -> FockOperator:
    """P_k onto E^{⊗k}."""
    if not 0 <= k <= fock.level:
        raise DegreeMismatchError(f"level {k} outside 0..{fock.level}")
    return FockOperator(fock, {(i, i): fock.one() for i in fock.levels(k, k)}, (0, fock.level))


def fock_projection_Q(fock: TruncatedFock) -> FockOperator:
    """Q on the Fock module itself is the identity; its non-trivial model lives on Ξ."""
    return identity(fock)


def left_action(fock: TruncatedFock, function: VertexFunction) -> FockOperator:
    """Multiplication by a ∈ A through s(μ)."""
    entries = {(i, i): _coefficient(fock, function[p.src]) for i, p in enumerate(fock.basis)}
    return FockOperator(fock, entries, (0, fock.level))


def right_action(fock: TruncatedFock, function: VertexFunction) -> FockOperator:
    """Right multiplication by a ∈ A through r(μ)."""
    entries = {(i, i): _coefficient(fock, function[p.dst]) for i, p in enumerate(fock.basis)}
    return FockOperator(fock, entries, (0, fock.level))


def compress(operator: FockOperator, k: int) -> EndoMatrix:
    """The level-k diagonal block P_k T P_k as an EndoMatrix."""
    fock = operator.fock
    positions = fock.levels(k, k)
    local = {pos: i for i, pos in enumerate(positions)}
    size = len(positions)
    paths = tuple(fock.basis[pos] for pos in positions)
    if fock.mode == "exact":
        block = {(local[i], local[j]): v for (i, j), v in operator.entries.items() if i in local and j in local}
        return EndoMatrix(fock.graph, k, paths, sympy.ImmutableMatrix(sympy.SparseMatrix(size, size, block)))
    matrix = np.zeros((size, size), dtype=complex)
    for (i, j), v in operator.entries.items():
        if i in local and j in local:
            matrix[local[i], local[j]] = v
    return EndoMatrix(fock.graph, k, paths, matrix)


def commutes_with_right_action(operator: FockOperator) -> bool:
    """True iff every entry connects basis vectors in the same right fibre."""
    basis = operator.fock.basis
    return all(basis[i].dst == basis[j].dst for (i, j) in operator.entries)


def band_violations(operator: FockOperator) -> Iterable[Tuple[int, int]]:
    """Entries whose level shift lies outside the recorded band."""
    basis = operator.fock.basis
    lo, hi = operator.band
    return [(i, j) for (i, j) in operator.entries if not lo <= basis[i].length - basis[j].length <= hi]


def toeplitz(fock: TruncatedFock, x: AlgebraElement) -> FockOperator:
    """Symbol action of x: unit·Id + Σ coeff·T_μT_ν*."""
    result = identity(fock).scaled(x.unit) if x.unit != 0 else zero(fock)
    for (mu, nu), coeff in x.sorted_terms():
        result = result + monomial_operator(fock, mu, nu, coeff)
    return result


def fock_relations_report(graph: DirectedGraph, level: int, mode: str = "exact", max_degree: int = 2) -> Dict[str, Any]:
    """
    Frame identity Σ Θ_{δ_μ,δ_μ} = Id on each level and T_ξ*T_η = φ((ξ|η)_A) on clean windows.

    Args:
        graph: A nonsingular graph
        level: Truncation level K
        mode: 'exact' or 'float'
        max_degree: Largest |μ| used for the Toeplitz relation

    Returns:
        dict: {"graph", "level", "mode", "checks", "failures"}
    """
    fock = build_fock(graph, level, mode)
    tol = 0.0 if mode == "exact" else 1e-12
    checks = []
    for k in range(level + 1):
        ok = frame_sum(graph, k).equals(identity_endo(graph, k))
        checks.append({"name": f"frame identity at level {k}", "pass": bool(ok)})
    for degree in range(1, min(max_degree, level) + 1):
        frame = [point_mass(graph, path) for path in enumerate_paths(graph, degree)]
        for xi in frame:
            for eta in frame:
                lhs = annihilation(fock, xi) @ creation(fock, eta)
                rhs = left_action(fock, right_inner(xi, eta))
                ok = lhs.agrees_on_clean(rhs, tol)
                label = f"Toeplitz relation ({next(iter(xi.coefficients)).id}, {next(iter(eta.coefficients)).id})"
                checks.append({"name": label, "pass": bool(ok)})
    failures = sum(1 for check in checks if not check["pass"])
    Log.info(f"Fock relations on {graph} at K={level} ({mode}): {len(checks)} checks, {failures} failures")
    return {"graph": graph.name, "level": level, "mode": mode, "checks": checks, "failures": failures}
