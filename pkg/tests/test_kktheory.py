"""Smith normal form, K-groups, the index pairing and the diagram check."""
from utils.local_imports import *
from pimsner.algebra import AlgebraElement, MatrixOverAlgebra, PartialIsometryClass
from pimsner.builtin import builtin_isometry_suite
from pimsner.errors import InvalidInputError
from pimsner.graph_core import DirectedGraph, Edge, Path
from pimsner.kktheory import (
    KClass,
    KGroup,
    check_modular,
    class_of_E,
    diagram_check,
    diagram_suite,
    ev_star,
    exact_sequence_report,
    index_pairing,
    is_smeb,
    k_homology,
    k_theory,
    one_minus_E,
    pairing_w,
    smeb_compatibility,
    smith_normal_form,
    w_class,
)


@st.composite
def integer_matrices(draw, max_size: int = 4):
    rows = draw(st.integers(1, max_size))
    cols = draw(st.integers(1, max_size))
    entries = st.integers(-12, 12)
    return [[draw(entries) for _ in range(cols)] for _ in range(rows)]


@st.composite
def small_graphs(draw, max_vertices: int = 3, nonsingular: bool = False):
    """Up to 3 parallel edges per pair; `nonsingular` threads a cycle through every vertex."""
    size = draw(st.integers(1, max_vertices))
    vertices = tuple(f"n{i}" for i in range(size))
    edges = []
    for i in range(size):
        for j in range(size):
            backbone = 1 if nonsingular and j == (i + 1) % size else 0
            for _ in range(backbone + draw(st.integers(0, 2))):
                edges.append(Edge(f"x{len(edges)}", vertices[i], vertices[j]))
    return DirectedGraph(vertices, tuple(edges), name="random")


def single(graph, element, name) -> PartialIsometryClass:
    return PartialIsometryClass.from_matrix(MatrixOverAlgebra.from_rows(graph, [[element]]), name)


def edge_class(graph, edge):
    return single(graph, AlgebraElement.generator(graph, Path.of(graph, [edge])), f"S[{edge}]")


def vertex_class(graph, vertex):
    return single(graph, AlgebraElement.vertex(graph, vertex), f"p[{vertex}]")


@pytest.mark.smoke
class TestSmithNormalForm:
    """Exact SNF with unimodular transforms."""

    def test_one_minus_cycle_matrix(self):
        snf = smith_normal_form([[1, -1], [-1, 1]])
        assert snf.diagonal == (1, 0)
        assert snf.rank == 1
        assert snf.verify(sympy.Matrix([[1, -1], [-1, 1]]))

    def test_classic_example(self):
        matrix = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
        snf = smith_normal_form(matrix)
        assert snf.diagonal == (2, 6, 12)
        assert snf.verify(sympy.Matrix(matrix))

    def test_divisibility_is_enforced(self):
        assert smith_normal_form([[2, 0], [0, 3]]).diagonal == (1, 6)
        assert smith_normal_form([[0, 0], [0, -4]]).diagonal == (4, 0)

    def test_rectangular_and_zero(self):
        snf = smith_normal_form([[0, 0, 0]])
        assert snf.diagonal == (0,)
        assert snf.verify(sympy.Matrix([[0, 0, 0]]))

    def test_inverse_transform(self):
        snf = smith_normal_form([[4, 6], [2, 8]])
        assert snf.U * snf.U_inverse == sympy.eye(2)

    def test_non_integer_entries_are_rejected(self):
        with pytest.raises(InvalidInputError):
            smith_normal_form([[1.5, 0], [0, 1]])

    @settings(max_examples=60, deadline=None)
    @given(integer_matrices())
    def test_random_matrices_verify(self, matrix):
        snf = smith_normal_form(matrix)
        assert snf.verify(sympy.Matrix(matrix))
        assert snf.rank == sympy.Matrix(matrix).rank()

    @pytest.mark.slow
    @settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(integer_matrices(max_size=8))
    def test_random_matrices_up_to_eight_by_eight(self, matrix):
        snf = smith_normal_form(matrix)
        assert snf.verify(sympy.Matrix(matrix))
        factors = [d for d in snf.diagonal if d]
        assert all(b % a == 0 for a, b in zip(factors, factors[1:]))


@pytest.mark.regression
class TestKGroups:
    """K-theory and K-homology of graph algebras."""

    @pytest.mark.parametrize("name, k0, k1", [
        ("o2", "0", "0"),
        ("o3", "ℤ/2", "0"),
        ("loop", "ℤ", "ℤ"),
        ("c2", "ℤ", "ℤ"),
        ("c3", "ℤ", "ℤ"),
        ("fib", "0", "0"),
        ("two_loops", "ℤ^2", "ℤ^2"),
    ])
    def test_k_theory_table(self, name, k0, k1):
        group0, group1 = k_theory(self.graphs[name])
        assert str(group0) == k0
        assert str(group1) == k1

    def test_k_homology_of_o3(self):
        kh0, kh1 = k_homology(self.o3)
        assert kh0.is_zero()
        assert kh1.torsion == (2,)

    def test_cycle_generators(self):
        k0, k1 = k_theory(self.c2)
        assert len(k0.generators) == 1
        assert k1.generators in (((1, 1),), ((-1, -1),))

    def test_group_json_uses_strings(self):
        data = KGroup(1, (3,), ((1, 0),)).to_json()
        assert data == {"group": "ℤ ⊕ ℤ/3", "rank": 1, "torsion": ["3"], "generators": [["1", "0"]]}

    def test_exact_sequence_report(self):
        allure.before("Rank bookkeeping and duality checks for the Fibonacci graph")
        report = exact_sequence_report(self.fib)
        assert all(check["pass"] for check in report["checks"])
        assert report["matrices"]["one_minus_vt"] == [["0", "-1"], ["-1", "1"]]
        allure.report(report, name="fib K-theory")

    @settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(small_graphs())
    def test_duality_on_random_graphs(self, graph):
        report = exact_sequence_report(graph)
        failed = [check["name"] for check in report["checks"] if not check["pass"]]
        assert not failed, failed

    @pytest.mark.slow
    @settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(small_graphs(max_vertices=8, nonsingular=True))
    def test_duality_on_larger_nonsingular_graphs(self, graph):
        k0, k1 = k_theory(graph)
        kh0, kh1 = k_homology(graph)
        assert kh1.torsion == k0.torsion
        assert kh0.rank == k1.rank
        report = exact_sequence_report(graph)
        assert all(check["pass"] for check in report["checks"])


@pytest.mark.regression
class TestClasses:
    """K₀(A) classes, [E] and ev_*."""

    def test_one_minus_E(self):
        x = KClass.basis(self.c2, "v0")
        assert one_minus_E(x).values == (1, -1)
        assert one_minus_E(KClass.ones(self.fib)).values == (-1, 0)

    def test_class_of_E_is_transpose(self):
        assert class_of_E(self.fib) == sympy.Matrix([[1, 1], [1, 0]])
        graph = DirectedGraph(("x", "y"), (Edge("a", "x", "y"), Edge("b", "y", "y")))
        assert class_of_E(graph) == sympy.Matrix([[0, 0], [1, 1]])

    def test_kclass_arithmetic(self):
        x = KClass.from_mapping(self.fib, {"u": 2})
        assert (x - KClass.ones(self.fib)).values == (1, -1)
        assert (-x)["u"] == -2
        assert x.to_json() == {"u": "2", "v": "0"}
        with pytest.raises(InvalidInputError):
            KClass(self.fib, (1,))

    def test_ev_star(self):
        assert ev_star(edge_class(self.c2, "e0")).values == (-1, 1)
        assert ev_star(vertex_class(self.o2, "v")).values == (0,)
        assert ev_star(w_class(self.o2)).values == (-1,)
        assert ev_star(w_class(self.fib)).values == (-1, 0)

    def test_w_projections(self):
        w = w_class(self.o2)
        assert w.matrix.size == 2
        assert w.source.rank_at("v") == 1
        assert w.range.rank_at("v") == 2
        assert w.source.rank_at(None) == 0

    def test_smeb(self):
        assert is_smeb(self.c2)
        assert is_smeb(self.two_loops)
        assert not is_smeb(self.o2)
        assert not is_smeb(self.fib)
        assert smeb_compatibility(self.c3) == {"holds": True, "witness": None}
        assert smeb_compatibility(self.o2) == {"holds": False, "witness": ["a", "a", "b"]}


@pytest.mark.regression
class TestIndexPairing:
    """Index(QvQ) on clean windows and the diagram check."""

    def test_vertex_projection_has_index_zero(self):
        result = index_pairing(vertex_class(self.o2, "v"))
        assert result.stabilized
        assert result.index.values == (0,)

    def test_edge_isometry_on_cycle(self):
        """
        Kernel 0 and cokernel the vacuum at s(e), so index = −e_{s(e)} and pairing = +e_{s(e)}.

        The worked 2-cycle example for S_e states pairing = −e_{s(e)}; that sign does
        not satisfy one_minus_E(index) = ev_star(v), which this sign does.
        """
        allure.before("S_e on a cycle: kernel 0, cokernel the vacuum at s(e)")
        result = index_pairing(edge_class(self.c2, "e0"))
        assert [level.level for level in result.levels] == [3, 4]
        assert result.levels[0].kernel.values == (0, 0)
        assert result.levels[0].cokernel.values == (1, 0)
        assert result.index.values == (-1, 0)
        assert result.pairing.values == (1, 0)

    def test_w_on_cuntz(self):
        result = index_pairing(w_class(self.o2))
        assert result.levels[0].kernel.values == (1,)
        assert result.levels[0].cokernel.values == (0,)
        assert pairing_w(self.o2).values == (-1,)

    def test_additivity_over_direct_sums(self):
        p = vertex_class(self.c2, "v0")
        s = edge_class(self.c2, "e1")
        total = index_pairing(p.direct_sum(s)).index
        assert total == index_pairing(p).index + index_pairing(s).index
        assert total.values == (0, -1)

    def test_explicit_level(self):
        result = index_pairing(edge_class(self.c3, "e1"), level=2)
        assert result.levels[0].level == 2
        assert result.index.values == (0, -1, 0)

    def test_negative_level_is_rejected(self):
        with pytest.raises(InvalidInputError):
            index_pairing(vertex_class(self.o2, "v"), level=-1)

    def test_diagram_check_and_opposite_sign(self):
        check = diagram_check(edge_class(self.c2, "e0"))
        assert check.passes
        data = check.to_json()
        assert data["pass"] is True
        assert data["opposite_sign_pass"] is False
        assert data["lhs"] == {"v0": "-1", "v1": "1"}

    def test_modular_check_on_vertex_projection(self):
        data = check_modular(vertex_class(self.o2, "v"), 1, 2)
        assert data["components"] == [[0, 0]]
        assert data["homog_violations"] == []

    @pytest.mark.parametrize("name", ["o2", "c2", "loop"])
    def test_builtin_suite_commutes(self, name):
        graph = self.graphs[name]
        report = diagram_suite(graph, builtin_isometry_suite(graph))
        Log.info(f"{name}: {report.to_json()['cases']} cases")
        assert not report.failures, [check.to_json() for check in report.failures]

    @pytest.mark.slow
    def test_w_on_fibonacci(self):
        allure.before("pairing with w is −[A] on the Fibonacci graph")
        assert pairing_w(self.fib).values == (-1, -1)
        assert diagram_check(w_class(self.fib)).passes

    @pytest.mark.slow
    def test_builtin_suite_on_fibonacci(self):
        report = diagram_suite(self.fib, builtin_isometry_suite(self.fib))
        allure.report(report.to_json(), name="fib diagram suite")
        assert not report.failures
