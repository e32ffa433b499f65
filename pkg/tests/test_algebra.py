"""Monomial arithmetic, Cuntz-Krieger normal forms and partial isometry classes."""
from utils.local_imports import *
from pimsner.algebra import (
    AlgebraElement,
    MatrixOverAlgebra,
    PartialIsometryClass,
    core_expectation,
    element_from_json,
    element_to_json,
    equals,
    gauge_decompose,
    normal_form,
    phi_infinity,
    reduce_to_vertices,
)
from pimsner.builtin import load_suite
from pimsner.errors import InvalidClassError, SinkError
from pimsner.graph_core import DirectedGraph, Edge, Path


def s(graph, *edges):
    return AlgebraElement.generator(graph, Path.of(graph, list(edges)))


def s_star(graph, *edges):
    return AlgebraElement.generator_adjoint(graph, Path.of(graph, list(edges)))


@pytest.mark.smoke
class TestRelations:
    """Toeplitz and Cuntz-Krieger relations."""

    def test_isometry_relation(self):
        allure.before("S_e*S_e = p_{r(e)}")
        assert equals(s_star(self.fib, "e2") * s(self.fib, "e2"), AlgebraElement.vertex(self.fib, "v"))
        assert equals(s_star(self.o2, "a") * s(self.o2, "a"), AlgebraElement.vertex(self.o2, "v"))

    def test_orthogonal_ranges(self):
        assert (s_star(self.o2, "a") * s(self.o2, "b")).is_zero()

    def test_cuntz_krieger_relation(self):
        allure.before("p_v = Σ_{s(e)=v} S_eS_e*")
        for graph in (self.o2, self.fib, self.c3):
            for v in graph.vertices:
                total = AlgebraElement.zero(graph)
                for edge in graph.out_edges(v):
                    total = total + s(graph, edge.id) * s_star(graph, edge.id)
                assert equals(total, AlgebraElement.vertex(graph, v))

    def test_products_follow_prefixes(self):
        product = s_star(self.o2, "a") * s(self.o2, "a", "b")
        assert equals(product, s(self.o2, "b"))
        product = s_star(self.o2, "a", "b") * s(self.o2, "a")
        assert equals(product, s_star(self.o2, "b"))

    def test_adjoined_unit_acts_as_one(self):
        one = AlgebraElement.one(self.o2)
        x = s(self.o2, "a") * 3
        assert equals(one * x, x)
        assert equals(x * one, x)
        assert not equals(one, AlgebraElement.unit_of_a(self.o2))

    def test_adjoint_conjugates(self):
        x = AlgebraElement.monomial(self.o2, Path.of(self.o2, ["a"]), Path.of(self.o2, ["b"]), sympy.I)
        y = x.adjoint()
        assert dict(y.terms) == {(Path.of(self.o2, ["b"]), Path.of(self.o2, ["a"])): -sympy.I}

    def test_sink_blocks_expansion(self):
        graph = DirectedGraph(("x", "y"), (Edge("a", "x", "y"),))
        with pytest.raises(SinkError):
            normal_form(AlgebraElement.vertex(graph, "y"), 1)


@pytest.mark.regression
class TestReductions:
    """Vertex reduction, gauge grading and Φ_∞."""

    def test_reduce_expanded_unit(self):
        x = s(self.o2, "a") * s_star(self.o2, "a") + s(self.o2, "b") * s_star(self.o2, "b")
        unit, parts = reduce_to_vertices(x + AlgebraElement.one(self.o2))
        assert unit == 1
        assert parts == {"v": 1}

    def test_reduce_rejects_partial_range(self):
        with pytest.raises(InvalidClassError):
            reduce_to_vertices(s(self.o2, "a") * s_star(self.o2, "a"))

    def test_reduce_rejects_off_diagonal(self):
        with pytest.raises(InvalidClassError):
            reduce_to_vertices(s(self.o2, "a"))

    def test_gauge_components(self):
        x = s(self.o2, "a") + s_star(self.o2, "b") + AlgebraElement.one(self.o2)
        components = gauge_decompose(x)
        assert sorted(components) == [-1, 0, 1]
        assert equals(core_expectation(x), AlgebraElement.one(self.o2))
        assert x.degrees == (-1, 0, 1)

    def test_phi_infinity_on_diagonal_monomials(self):
        allure.before("Φ_∞(S_μS_μ*) = λ(μ) at s(μ); off-diagonal terms vanish")
        x = s(self.o2, "a") * s_star(self.o2, "a") + s(self.o2, "a")
        assert phi_infinity(x)["v"] == pytest.approx(0.5)
        assert phi_infinity(AlgebraElement.one(self.fib)).as_dict() == {"u": 1.0, "v": 1.0}

    def test_phi_infinity_respects_fibres(self):
        x = s(self.fib, "e3") * s_star(self.fib, "e3")
        values = phi_infinity(x)
        assert values["u"] == 0.0
        assert values["v"] == pytest.approx(1.0)

    def test_json_round_trip_of_an_element(self):
        x = s(self.fib, "e2") * 2 + AlgebraElement.vertex(self.fib, "u")
        assert equals(element_from_json(self.fib, element_to_json(x)), x)


@pytest.mark.regression
class TestPartialIsometries:
    """Validation and the projection data of classes."""

    def test_edge_isometry_in_cycle(self):
        v = PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(self.c2, [[s(self.c2, "e0")]]), "S[e0]")
        assert v.source.rank_at("v1") == 1
        assert v.source.rank_at("v0") == 0
        assert v.range.rank_at("v0") == 1
        assert v.range.rank_at(None) == 0

    def test_non_partial_isometry_is_rejected(self):
        doubled = MatrixOverAlgebra.from_rows(self.o2, [[AlgebraElement.vertex(self.o2, "v") * 2]])
        with pytest.raises(InvalidClassError):
            PartialIsometryClass.from_matrix(doubled)

    def test_range_must_reduce_to_vertex_data(self):
        # x = (1 − p_v) + S_a: x*x = 1 but xx* = 1 − S_bS_b* is no vertex combination
        one = AlgebraElement.one(self.o2)
        x = one - AlgebraElement.vertex(self.o2, "v") + s(self.o2, "a")
        assert equals(x.adjoint() * x, one)
        with pytest.raises(InvalidClassError):
            PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(self.o2, [[x]]), "x")

    def test_unit_class_has_rank_one_at_infinity(self):
        v = PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(self.o2, [[AlgebraElement.one(self.o2)]]))
        assert v.source.rank_at(None) == v.range.rank_at(None) == 1
        assert v.source.rank_at("v") == 1

    def test_direct_sum_is_block_diagonal(self):
        p = PartialIsometryClass.from_matrix(
            MatrixOverAlgebra.from_rows(self.o2, [[AlgebraElement.vertex(self.o2, "v")]]), "p")
        total = p.direct_sum(p)
        assert total.matrix.size == 2
        assert total.name == "p⊕p"
        assert total.matrix[0, 1].is_zero()

    def test_load_suite_file(self):
        allure.before("Load p[v] and w from the sample class file")
        suite = load_suite(self.o2, CommonMethods.read_text("graphs/classes/o2_suite.json"))
        assert [v.name for v in suite] == ["p[v]", "w"]
        w = suite[1]
        assert w.source.rank_at("v") == 1
        assert w.range.rank_at("v") == 2
