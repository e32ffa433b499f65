"""End-to-end checks on the shipped graph files."""
from pathlib import Path as FilePath

from utils.local_imports import *
from pimsner.builtin import builtin_graph, builtin_isometry_suite, cycle, load_suite, o_n, qualifying_edges
from pimsner.cli import read_graph
from pimsner.errors import SinkError
from pimsner.graph_core import DirectedGraph, Edge, dump_graph, enumerate_paths
from pimsner.kktheory import KClass, diagram_suite, exact_sequence_report, index_pairing, k_theory, pairing_w

GRAPH_FILES = sorted(FilePath("graphs").glob("*.json"))


@pytest.mark.acceptance
class TestShippedGraphs:
    """Every graph file loads, agrees with its builtin twin and has consistent K-theory."""

    @pytest.mark.parametrize("path", GRAPH_FILES, ids=lambda p: p.stem)
    def test_file_matches_builtin(self, path):
        graph = read_graph(str(path))
        assert dump_graph(graph) == dump_graph(builtin_graph(path.stem))

    @pytest.mark.parametrize("path", GRAPH_FILES, ids=lambda p: p.stem)
    def test_exact_sequence_checks_pass(self, path):
        report = exact_sequence_report(read_graph(str(path)))
        assert all(check["pass"] for check in report["checks"])

    def test_fibonacci_path_count(self):
        graph = read_graph("graphs/fib.json")
        paths = enumerate_paths(graph, 4)
        assert (len(paths), sum(1 for p in paths if p.src == "u")) == (13, 8)


@pytest.mark.acceptance
class TestKTheoryTable:
    """Cuntz graphs and cycles."""

    @pytest.mark.parametrize("n", range(2, 7))
    def test_cuntz(self, n):
        k0, k1 = k_theory(o_n(n))
        assert k0.rank == 0
        assert k0.torsion == ((n - 1,) if n > 2 else ())
        assert k1.is_zero()

    @pytest.mark.parametrize("m", range(1, 7))
    def test_cycles(self, m):
        k0, k1 = k_theory(cycle(m))
        assert (str(k0), str(k1)) == ("ℤ", "ℤ")


@pytest.mark.acceptance
class TestDiagramAcceptance:
    """The boundary map sends the index pairing to ev_*."""

    def test_cycle_suite_covers_every_edge(self):
        suite = builtin_isometry_suite(self.c3)
        names = [v.name for v in suite]
        assert {"S[e0]", "S[e1]", "S[e2]", "w"} <= set(names)
        assert len(qualifying_edges(self.c3)) == 3

    def test_cuntz_has_no_qualifying_edges(self):
        names = [v.name for v in builtin_isometry_suite(self.o3)]
        assert not any(name.startswith("S[") for name in names)

    def test_suite_rejects_sinks(self):
        graph = DirectedGraph(("x", "y"), (Edge("a", "x", "y"),))
        with pytest.raises(SinkError):
            builtin_isometry_suite(graph)

    def test_sample_class_files(self):
        allure.before("Index of the sample classes shipped with the repository")
        o2 = read_graph("graphs/o2.json")
        suite = load_suite(o2, CommonMethods.read_text("graphs/classes/o2_suite.json"))
        report = diagram_suite(o2, suite)
        assert not report.failures
        assert report.checks[1].computation.pairing == -KClass.ones(o2)

    def test_three_cycle_suite(self):
        report = diagram_suite(self.c3, builtin_isometry_suite(self.c3))
        allure.report(report.to_json(), name="c3 diagram suite")
        assert not report.failures

    def test_pairing_with_w_is_minus_unit_class(self):
        for graph in (self.o2, self.o3, self.c2, self.two_loops):
            assert pairing_w(graph) == -KClass.ones(graph), graph.name

    def test_shift_on_cycle(self):
        graph = read_graph("graphs/c2.json")
        suite = load_suite(graph, CommonMethods.read_text("graphs/classes/c2_edge.json"))
        result = index_pairing(suite[0])
        assert result.stabilized
        assert result.pairing == KClass.basis(graph, "v0")
