"""Finite windows of the module Ξ, the bigrading P_{n,r}, D and Q.

Ξ is the completion of the graph algebra for ⟨X, Y⟩ = Φ_∞(X*Y), a right
module over A through the fibres X·p_w. A window keeps gauge degrees
|n| ≤ N and, in degree n, the monomials S_αS_β* with s(β) = w and
max(n, 0) ≤ |α| ≤ Rmax. The layer P_{n,r} is the span of the monomials with
|α| ≤ r minus the span with |α| ≤ r − 1, orthogonalized layer by layer.

Operators are represented in the orthonormal layer basis. A column is clean
when the image of its basis vector lies inside the window, and the clean
mask is coarsened to whole layers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from pimsner.algebra import (
    AlgebraElement,
    MatrixOverAlgebra,
    Monomial,
    PartialIsometryClass,
    adjoint,
    gauge_decompose,
    monomial_product,
    multiply,
)
from pimsner.bimodule import limit_ratio
from pimsner.errors import InvalidInputError, WindowTooSmallError
from pimsner.graph_core import DirectedGraph, Path, enumerate_paths
from utils.app_constants import AppConstants
from utils.logger import Log

Psi = Callable[[int, int], int]


def default_psi(n: int, r: int) -> int:
    """n on the bottom layer r = max(n, 0); −(r − max(n, 0)) − max(−n, 0) above it."""
    bottom = max(n, 0)
    if r == bottom:
        return n
    return -(r - bottom) - max(-n, 0)


@dataclass(frozen=True, eq=False)
class XiBlock:
    """Degree-n part of the fibre Ξ·p_w with its layered orthonormal basis."""

    degree: int
    fiber: str
    monomials: Tuple[Monomial, ...]
    gram: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)  # basis vector j = Σ_i coefficients[i, j]·X_i
    layers: Tuple[int, ...]
    offset: int

    @property
    def rank(self) -> int:
        return self.coefficients.shape[1]

    @property
    def positions(self) -> slice:
        return slice(self.offset, self.offset + self.rank)

    def coordinates(self) -> np.ndarray:
        """Coordinates of every family monomial in the layered basis (rank × len(monomials))."""
        return self.coefficients.conj().T @ self.gram


def _monomial_family(graph: DirectedGraph, n: int, fiber: str, rank_window: int) -> List[Monomial]:
    family = []
    for a in range(max(n, 0), rank_window + 1):
        b = a - n
        betas = [beta for beta in enumerate_paths(graph, b) if beta.src == fiber]
        for alpha in enumerate_paths(graph, a):
            for beta in betas:
                if alpha.dst == beta.dst:
                    family.append((alpha, beta))
    return family


class _Pairing:
    """Φ_∞(X*·y·Z) at a fibre for monomials X, Z and an algebra element y."""

    def __init__(self, graph: DirectedGraph, mode: str, cutoff: int):
        self.graph = graph
        self.mode = mode
        self.cutoff = cutoff
        self._lam: Dict[Path, float] = {}

    def lam(self, path: Path) -> float:
        if path not in self._lam:
            self._lam[path] = limit_ratio(self.graph, path, self.mode, self.cutoff)
        return self._lam[path]

    def matrix(self, left: Sequence[Monomial], right: Sequence[Monomial],
               middle: Optional[AlgebraElement], fiber: str) -> np.ndarray:
        """middle=None stands for the identity."""
        if middle is None:
            unit, middle_terms = 1.0, []
        else:
            unit = complex(middle.unit)
            middle_terms = [(m, complex(c)) for m, c in middle.terms.items()]

        result = np.zeros((len(left), len(right)), dtype=complex)
        for i, (mu, nu) in enumerate(left):
            star = (nu, mu)
            heads = [(star, unit)] if unit != 0 else []
            for term, coeff in middle_terms:
                head = monomial_product(star, term)
                if head is not None:
                    heads.append((head, coeff))
            for head, coeff in heads:
                for j, monomial in enumerate(right):
                    product = monomial_product(head, monomial)
                    if product is not None and product[0] == product[1] and product[0].src == fiber:
                        result[i, j] += coeff * self.lam(product[0])
        return result


def _layered_basis(gram: np.ndarray, lengths: Sequence[int], tol: float) -> Tuple[np.ndarray, List[int]]:
    """Coefficients of an orthonormal basis adapted to the |α|-filtration, with the layer of each vector."""
    evals, evecs = np.linalg.eigh((gram + gram.conj().T) / 2)
    keep = evals > tol * max(1.0, float(evals.max(initial=0.0)))
    if not keep.any():
        return np.zeros((len(lengths), 0), dtype=complex), []
    roots = np.sqrt(evals[keep])
    basis_u = evecs[:, keep]
    coordinates = roots[:, None] * basis_u.conj().T  # Y with YᴴY = gram

    lengths = np.asarray(lengths)
    collected = np.zeros((coordinates.shape[0], 0), dtype=complex)
    layers: List[int] = []
    for r in sorted(set(lengths.tolist())):
        columns = coordinates[:, lengths == r]
        if collected.shape[1]:
            columns = columns - collected @ (collected.conj().T @ columns)
        if columns.size == 0:
            continue
        left, singular, _ = scipy.linalg.svd(columns, full_matrices=False)
        fresh = left[:, singular > np.sqrt(tol)]
        collected = np.hstack([collected, fresh])
        layers.extend([r] * fresh.shape[1])
    coefficients = basis_u @ (collected / roots[:, None])
    return coefficients, layers


@dataclass(frozen=True, eq=False)
class XiTruncation:
    graph: DirectedGraph = field(repr=False)
    degree_window: int
    rank_window: int
    blocks: Tuple[XiBlock, ...] = field(repr=False)
    psi: Psi = field(repr=False)
    tol: float = AppConstants.DEFAULT_TOL
    pairing: _Pairing = field(default=None, repr=False, compare=False)

    @cached_property
    def dimension(self) -> int:
        return sum(block.rank for block in self.blocks)

    @cached_property
    def degree_labels(self) -> np.ndarray:
        return np.array([b.degree for b in self.blocks for _ in range(b.rank)], dtype=int)

    @cached_property
    def layer_labels(self) -> np.ndarray:
        return np.array([r for b in self.blocks for r in b.layers], dtype=int)

    @cached_property
    def block_labels(self) -> np.ndarray:
        return np.array([i for i, b in enumerate(self.blocks) for _ in range(b.rank)], dtype=int)

    def block(self, degree: int, fiber: str) -> Optional[XiBlock]:
        for candidate in self.blocks:
            if candidate.degree == degree and candidate.fiber == fiber:
                return candidate
        return None

    # bigrading

    def layer_mask(self, degree: int, layer: int) -> np.ndarray:
        return (self.degree_labels == degree) & (self.layer_labels == layer)

    def layer_projection(self, degree: int, layer: int) -> np.ndarray:
        """P_{n,r}."""
        return np.diag(self.layer_mask(degree, layer).astype(float))

    def layer_rank(self, degree: int, layer: int) -> int:
        return int(self.layer_mask(degree, layer).sum())

    def layers_of(self, degree: int) -> Tuple[int, ...]:
        return tuple(sorted(set(self.layer_labels[self.degree_labels == degree].tolist())))

    def dirac(self) -> np.ndarray:
        """D = Σ ψ(n, r)·P_{n,r}."""
        return np.diag([float(self.psi(n, r)) for n, r in zip(self.degree_labels, self.layer_labels)])

    def q_projection(self) -> np.ndarray:
        """Q = Σ_{n≥0} P_{n,n}."""
        mask = (self.degree_labels >= 0) & (self.layer_labels == self.degree_labels)
        return np.diag(mask.astype(float))

    def kernel_projection(self) -> np.ndarray:
        """Projection onto ker D."""
        return np.diag([1.0 if self.psi(n, r) == 0 else 0.0
                        for n, r in zip(self.degree_labels, self.layer_labels)])

    def fock_embedding_projection(self) -> np.ndarray:
        """Projection onto the closed span of the S_α, |α| = n ≥ 0."""
        projection = np.zeros((self.dimension, self.dimension), dtype=complex)
        for block in self.blocks:
            if block.degree < 0:
                continue
            chosen = [i for i, (_, beta) in enumerate(block.monomials) if beta.length == 0]
            if not chosen:
                continue
            span = scipy.linalg.orth(block.coordinates()[:, chosen], rcond=self.tol)
            projection[block.positions, block.positions] = span @ span.conj().T
        return projection

    # vectors and operators

    def embed(self, x: AlgebraElement) -> np.ndarray:
        """Coordinates of the orthogonal projection of x onto the window."""
        vector = np.zeros(self.dimension, dtype=complex)
        for block in self.blocks:
            anchor = [(Path.vertex(block.fiber), Path.vertex(block.fiber))]
            inner = self.pairing.matrix(block.monomials, anchor, x, block.fiber)[:, 0]
            vector[block.positions] = block.coefficients.conj().T @ inner
        return vector

    def action(self, x: AlgebraElement) -> Tuple[np.ndarray, np.ndarray]:
        """
        Left multiplication by x on the window.

        Returns:
            Tuple[np.ndarray, np.ndarray]: the matrix, and a per-column mask of
            columns whose image lies in the window
        """
        matrix = np.zeros((self.dimension, self.dimension), dtype=complex)
        clean = np.ones(self.dimension, dtype=bool)
        if x.is_zero():
            return matrix, clean
        components = gauge_decompose(x)
        for source in self.blocks:
            if source.rank == 0:
                continue
            full = np.zeros(source.rank)
            captured = np.zeros(source.rank)
            for shift, component in components.items():
                square = multiply(adjoint(component), component)
                norms = self.pairing.matrix(source.monomials, source.monomials, square, source.fiber)
                full += np.real(np.diag(source.coefficients.conj().T @ norms @ source.coefficients))
                target = self.block(source.degree + shift, source.fiber)
                if target is None or target.rank == 0:
                    continue
                inner = self.pairing.matrix(target.monomials, source.monomials, component, source.fiber)
                image = target.coefficients.conj().T @ inner @ source.coefficients
                matrix[target.positions, source.positions] += image
                captured += np.sum(np.abs(image) ** 2, axis=0)
            clean[source.positions] = np.abs(full - captured) <= 1e-7 * np.maximum(1.0, full)
        return matrix, clean

    def matrix_action(self, v: MatrixOverAlgebra) -> Tuple[np.ndarray, np.ndarray]:
        """Action of a k×k matrix on Ξ^k; the clean mask is coarsened to whole layers."""
        k, dim = v.size, self.dimension
        matrix = np.zeros((k * dim, k * dim), dtype=complex)
        clean = np.ones(k * dim, dtype=bool)
        cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        for i in range(k):
            for j in range(k):
                entry = v[i, j]
                if entry.is_zero():
                    continue
                key = id(entry)
                if key not in cache:
                    cache[key] = self.action(entry)
                block, mask = cache[key]
                matrix[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = block
                clean[j * dim:(j + 1) * dim] &= mask
        return matrix, self._coarsen(clean, k)

    def _coarsen(self, clean: np.ndarray, copies: int) -> np.ndarray:
        groups = np.tile(self.block_labels * (self.rank_window + 1) + self.layer_labels, copies)
        groups = groups + np.repeat(np.arange(copies), self.dimension) * (len(self.blocks) * (self.rank_window + 1))
        coarse = clean.copy()
        for group in np.unique(groups):
            members = groups == group
            coarse[members] = clean[members].all()
        return coarse

    def tiled_labels(self, copies: int) -> Tuple[np.ndarray, np.ndarray]:
        return np.tile(self.degree_labels, copies), np.tile(self.layer_labels, copies)

    def tiled(self, operator: np.ndarray, copies: int) -> np.ndarray:
        """operator ⊗ 1_k."""
        return np.kron(np.eye(copies), operator)


def build_xi(graph: DirectedGraph, degree_window: int = AppConstants.DEFAULT_DEGREE_WINDOW,
             rank_window: int = AppConstants.DEFAULT_RMAX, psi: Psi = default_psi,
             tol: float = AppConstants.DEFAULT_TOL, mode: str = "auto",
             cutoff: int = AppConstants.CESARO_CUTOFF) -> XiTruncation:
    """
    Build the window |n| ≤ N, |α| ≤ Rmax of Ξ with its layered bases.

    Args:
        graph: A nonsingular graph
        degree_window: N
        rank_window: Rmax (at least N so that every degree has a bottom layer)
        psi: ψ(n, r) defining D
        tol: Relative rank tolerance for Gram matrices
        mode: Limit mode for Φ_∞ ('auto', 'closed', 'cesaro')
        cutoff: Cesàro cutoff

    Returns:
        XiTruncation: the window
    """
    if degree_window < 0 or rank_window < degree_window:
        raise InvalidInputError(f"need 0 ≤ N ≤ Rmax, got N={degree_window}, Rmax={rank_window}")
    pairing = _Pairing(graph, mode, cutoff)
    blocks = []
    offset = 0
    for n in range(-degree_window, degree_window + 1):
        for fiber in graph.vertices:
            family = _monomial_family(graph, n, fiber, rank_window)
            if not family:
                continue
            gram = pairing.matrix(family, family, None, fiber)
            smallest = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2).min())
            if smallest < -tol * max(1.0, float(np.abs(gram).max())):
                Log.warn(f"Gram block (n={n}, w={fiber}) has eigenvalue {smallest:.3e}")
            coefficients, layers = _layered_basis(gram, [alpha.length for alpha, _ in family], tol)
            if len(layers) < len(family):
                Log.debug(f"Gram block (n={n}, w={fiber}) has rank {len(layers)} of {len(family)}")
            blocks.append(XiBlock(n, fiber, tuple(family), gram, coefficients, tuple(layers), offset))
            offset += len(layers)
    xi = XiTruncation(graph, degree_window, rank_window, tuple(blocks), psi, tol, pairing)
    Log.info(f"Ξ window for {graph}: N={degree_window}, Rmax={rank_window}, dimension {xi.dimension}")
    return xi


@dataclass(frozen=True, eq=False)
class HomogeneousDecomposition:
    """v = Σ v_{m,s} on the clean window, v_{m,s} shifting (n, r) to (n+m, r+s)."""

    xi: XiTruncation = field(repr=False)
    copies: int
    operator: np.ndarray = field(repr=False)
    clean: np.ndarray = field(repr=False)
    components: Dict[Tuple[int, int], np.ndarray] = field(repr=False)
    tol: float = 1e-8

    @property
    def keys(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(sorted(self.components))

    def reconstruction_defect(self) -> float:
        total = sum(self.components.values(), np.zeros_like(self.operator))
        return float(np.max(np.abs(total - self.operator), initial=0.0))

    def chop_vee_defect(self) -> float:
        """max ‖v_a*v_b‖, ‖v_a v_b*‖ over distinct components."""
        worst = 0.0
        keys = self.keys
        for a in keys:
            for b in keys:
                if a == b:
                    continue
                va, vb = self.components[a], self.components[b]
                worst = max(worst, float(np.abs(va.conj().T @ vb).max()), float(np.abs(va @ vb.conj().T).max()))
        return worst

    def vee_modular_defect(self) -> Dict[str, float]:
        """Commutators of vDv* and v*Dv with Q and with the kernel projection of D."""
        dirac = self.xi.tiled(self.xi.dirac(), self.copies)
        q = self.xi.tiled(self.xi.q_projection(), self.copies)
        kernel = self.xi.tiled(self.xi.kernel_projection(), self.copies)
        v = self.operator
        outer = v @ dirac @ v.conj().T
        inner = v.conj().T @ dirac @ v

        def norm(x: np.ndarray) -> float:
            return float(np.abs(x).max(initial=0.0))

        return {
            "vDv*,Q": norm(outer @ q - q @ outer),
            "vDv*,kerD": norm(outer @ kernel - kernel @ outer),
            "v*Dv,Q": norm(inner @ q - q @ inner),
            "v*Dv,kerD": norm(inner @ kernel - kernel @ inner),
        }

    def homog_violations(self) -> List[Tuple[int, int]]:
        """Components (m, s) present without the diagonal component (m, m)."""
        return [(m, s) for (m, s) in self.keys if (m, m) not in self.components]

    def to_json(self) -> dict:
        return {
            "components": [list(key) for key in self.keys],
            "clean_columns": int(self.clean.sum()),
            "columns": int(self.clean.size),
            "chop_vee_defect": self.chop_vee_defect(),
            "vee_modular_defect": self.vee_modular_defect(),
            "homog_violations": [list(key) for key in self.homog_violations()],
        }


def homogeneous_decompose(v: PartialIsometryClass, xi: XiTruncation, tol: float = 1e-8) -> HomogeneousDecomposition:
    """
    Split the action of v into components v_{m,s} = Σ P_{n+m,r+s}·v·P_{n,r}.

    Raises:
        WindowTooSmallError: no clean column, or a component outside the band
            allowed by v's monomials (m within the gauge band, −max|ν| ≤ s ≤ max|μ|)
    """
    if v.graph != xi.graph:
        raise InvalidInputError("class and window belong to different graphs")
    copies = v.matrix.size
    operator, clean = xi.matrix_action(v.matrix)
    if not clean.any():
        raise WindowTooSmallError(f"no clean column for {v.name or 'class'}; enlarge N or Rmax")
    operator = operator * clean[None, :]

    degrees, layers = xi.tiled_labels(copies)
    degree_shift = degrees[:, None] - degrees[None, :]
    layer_shift = layers[:, None] - layers[None, :]
    support = np.abs(operator) > tol
    keys = sorted(set(zip(degree_shift[support].tolist(), layer_shift[support].tolist())))
    components = {}
    for m, s in keys:
        component = np.where((degree_shift == m) & (layer_shift == s), operator, 0)
        if np.abs(component).max() > tol:
            components[(m, s)] = component

    low, high = v.matrix.degree_band()
    nu_max, mu_max = v.matrix.length_band()
    for m, s in components:
        if not (low <= m <= high and -nu_max <= s <= mu_max):
            raise WindowTooSmallError(
                f"component ({m}, {s}) outside the band m∈[{low},{high}], s∈[{-nu_max},{mu_max}]"
            )
    Log.info(f"Homogeneous components of {v.name or 'class'}: {sorted(components)}")
    return HomogeneousDecomposition(xi, copies, operator, clean, components, tol)


def commutator_report(xi: XiTruncation, path: Path) -> Dict[str, float]:
    """‖[D, S_μ]‖ on the clean columns of the window; numeric only, boundedness is not certified."""
    generator = AlgebraElement.generator(xi.graph, path)
    matrix, clean = xi.action(generator)
    matrix = matrix * clean[None, :]
    dirac = xi.dirac()
    commutator = dirac @ matrix - matrix @ dirac
    norm = float(np.linalg.norm(commutator, 2)) if commutator.size else 0.0
    return {"path": path.id, "norm": norm, "clean_columns": int(clean.sum())}


def bigrading_report(xi: XiTruncation) -> Dict[str, object]:
    """Layer ranks, ‖Q − Fock embedding projection‖ and the ranks above the bottom layers."""
    ranks = {}
    for n in range(-xi.degree_window, xi.degree_window + 1):
        for r in xi.layers_of(n):
            ranks[f"{n},{r}"] = xi.layer_rank(n, r)
    upper = sum(rank for key, rank in ranks.items()
                if int(key.split(",")[1]) > max(int(key.split(",")[0]), 0))
    defect = float(np.abs(xi.q_projection() - xi.fock_embedding_projection()).max(initial=0.0))
    return {
        "graph": xi.graph.name,
        "degree_window": xi.degree_window,
        "rank_window": xi.rank_window,
        "dimension": xi.dimension,
        "layer_ranks": ranks,
        "upper_layer_rank": upper,
        "q_embedding_defect": defect,
    }
