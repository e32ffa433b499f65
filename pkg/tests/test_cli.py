"""Command-line front end: reports, exit codes and configuration layering."""
import argparse
import json
import os

from utils.local_imports import *
from pimsner import cli
from pimsner.cli import RunConfig, run
from pimsner.errors import InvalidInputError, NonConvergenceError
from pimsner.kktheory import KClass


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    """Pin the environment the configuration layer reads."""
    monkeypatch.setenv(AppConstants.ENV_PATH_CAP, str(AppConstants.PATH_CAP))
    monkeypatch.delenv(AppConstants.ENV_LOG_LEVEL, raising=False)


def run_report(tmp_path, *argv) -> Tuple[int, Dict[str, Any]]:
    out = tmp_path / "report.json"
    code = run([*argv, "--out", str(out)])
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else {}
    return code, report


def namespace(**flags) -> argparse.Namespace:
    defaults = dict(trunc=None, rmax=None, nwin=None, tol=None, cutoff=None, mode=None, out=None, path_cap=None)
    defaults.update(flags)
    return argparse.Namespace(**defaults)


@pytest.mark.smoke
class TestCommands:
    """Each subcommand on a small input."""

    def test_ktheory(self, tmp_path):
        code, report = run_report(tmp_path, "ktheory", "graphs/o3.json")
        assert code == AppConstants.EXIT_OK
        assert report["k0"]["group"] == "ℤ/2"
        assert report["k_hom"]["k1"]["torsion"] == ["2"]

    def test_ktheory_builtin_name(self, tmp_path):
        code, report = run_report(tmp_path, "ktheory", "c3")
        assert code == 0
        assert report["k1"]["rank"] == 1

    def test_snf_inline(self, tmp_path):
        code, report = run_report(tmp_path, "snf", "[[2, 0], [0, 3]]")
        assert code == 0
        assert report["invariant_factors"] == ["1", "6"]
        assert report["verified"] is True

    def test_verify_assumptions(self, tmp_path):
        code, report = run_report(tmp_path, "verify-assumptions", "fib", "--k", "2")
        assert code == 0
        assert [r["k"] for r in report["reports"]] == [1, 2]
        assert report["reports"][0]["assumption2"]["success"] is False

    def test_index_with_class_file(self, tmp_path):
        code, report = run_report(tmp_path, "index", "graphs/c2.json", "--isometry", "graphs/classes/c2_edge.json")
        assert code == 0
        entry = report["classes"][0]
        assert entry["name"] == "S[e0]"
        assert entry["pairing"] == {"v0": "1", "v1": "0"}
        assert entry["ev_star"] == {"v0": "-1", "v1": "1"}

    def test_diagram_builtin_suite(self, tmp_path):
        allure.before("diagram command on the 2-cycle")
        code, report = run_report(tmp_path, "diagram", "c2")
        assert code == 0
        assert report["failures"] == 0
        assert report["cases"] == len(report["checks"])

    def test_wclass(self, tmp_path):
        code, report = run_report(tmp_path, "wclass", "o2")
        assert code == 0
        assert all(check["pass"] for check in report["checks"])
        assert report["ev_star"] == {"v": "-1"}

    def test_smeb(self, tmp_path):
        code, report = run_report(tmp_path, "smeb", "c2")
        assert code == 0
        assert report["smeb"] is True
        assert report["compatibility"]["holds"] is True

    def test_relations(self, tmp_path):
        code, report = run_report(tmp_path, "relations", "o2", "--trunc", "2", "--mode", "float")
        assert code == 0
        assert report["mode"] == "float"
        assert report["failures"] == 0

    def test_bigrading(self, tmp_path):
        code, report = run_report(tmp_path, "bigrading", "c2", "--nwin", "1", "--rmax", "2")
        assert code == 0
        assert report["upper_layer_rank"] == 0
        assert report["smeb"] is True


@pytest.mark.regression
class TestExitCodes:
    """Errors map to exit codes 1, 2 and 3."""

    def test_unknown_graph(self, tmp_path):
        code, report = run_report(tmp_path, "ktheory", "no-such-graph")
        assert code == AppConstants.EXIT_INVALID_INPUT
        assert report == {}

    def test_malformed_graph_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"vertices": ["x"], "edges": [{"src": "x", "dst": "y"}]}', encoding="utf-8")
        assert run(["ktheory", str(path)]) == AppConstants.EXIT_INVALID_INPUT

    def test_sink_is_rejected(self, tmp_path):
        path = tmp_path / "sink.json"
        path.write_text('{"vertices": ["x", "y"], "edges": [{"id": "a", "src": "x", "dst": "y"}]}',
                        encoding="utf-8")
        assert run(["diagram", str(path)]) == AppConstants.EXIT_INVALID_INPUT

    def test_bad_snf_input(self):
        assert run(["snf", "[[1, 2], [3]]"]) == AppConstants.EXIT_INVALID_INPUT
        assert run(["snf", "not json"]) == AppConstants.EXIT_INVALID_INPUT

    def test_window_flags_are_validated(self):
        assert run(["bigrading", "o2", "--nwin", "3", "--rmax", "2"]) == AppConstants.EXIT_INVALID_INPUT

    def test_path_cap_flag(self):
        assert run(["relations", "o2", "--trunc", "3", "--path-cap", "3"]) == AppConstants.EXIT_INVALID_INPUT

    def test_path_cap_is_scoped_to_the_run(self, monkeypatch):
        monkeypatch.delenv(AppConstants.ENV_PATH_CAP)
        assert run(["relations", "o2", "--trunc", "3", "--path-cap", "3"]) == AppConstants.EXIT_INVALID_INPUT
        assert AppConstants.ENV_PATH_CAP not in os.environ
        assert CommonMethods.path_cap() == AppConstants.PATH_CAP
        assert run(["relations", "o2", "--trunc", "2"]) == AppConstants.EXIT_OK

    def test_non_convergence(self, monkeypatch):
        def diverge(graph):
            raise NonConvergenceError("did not settle", 1.0)

        monkeypatch.setattr(cli, "exact_sequence_report", diverge)
        assert run(["ktheory", "o2"]) == AppConstants.EXIT_NON_CONVERGENCE

    def test_falsified_diagram_writes_report(self, tmp_path, monkeypatch):
        allure.before("A failing diagram check exits with 3 and still writes the report")
        monkeypatch.setattr("pimsner.kktheory.ev_star", lambda v: KClass.ones(v.graph))
        code, report = run_report(tmp_path, "diagram", "loop")
        assert code == AppConstants.EXIT_INTERNAL_CHECK
        assert report["failures"] > 0


@pytest.mark.regression
class TestConfiguration:
    """Properties file, environment and flags."""

    def test_flags_override_properties(self):
        props = {"rmax": "4", "nwin": "2", "mode": "float"}
        config = RunConfig.resolve(namespace(rmax=3), props)
        assert config.rmax == 3
        assert config.degree_window == 2
        assert config.mode == "float"
        assert config.trunc is None

    def test_environment_path_cap_wins_over_properties(self, monkeypatch):
        monkeypatch.setenv(AppConstants.ENV_PATH_CAP, "77")
        config = RunConfig.resolve(namespace(), {"path.cap": "5"})
        assert config.path_cap == 77
        assert RunConfig.resolve(namespace(path_cap=9), {}).path_cap == 9

    def test_invalid_property(self):
        with pytest.raises(InvalidInputError):
            RunConfig.resolve(namespace(), {"tol": "small"})

    def test_defaults_from_repository_config(self):
        config = RunConfig.resolve(namespace(), CommonMethods.init_prop())
        assert config.rmax == 2
        assert config.degree_window == 1
        assert config.max_escalations == 3
        assert config.out is None

    @pytest.mark.parametrize("changes", [
        {"trunc": -1}, {"rmax": 0}, {"degree_window": 3}, {"mode": "symbolic"}, {"tol": 0.0},
    ])
    def test_invalid_settings(self, changes):
        with pytest.raises(InvalidInputError):
            RunConfig(**changes)

    def test_reports_are_deterministic(self, tmp_path):
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        assert run(["diagram", "c2", "--out", str(first)]) == 0
        assert run(["diagram", "c2", "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
