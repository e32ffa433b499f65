"""Command-line front end: `python -m pimsner <command> ...`."""
from __future__ import annotations

import argparse
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path as FilePath
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import sympy

from pimsner.bimodule import assumption_report
from pimsner.builtin import BUILTIN_GRAPHS, builtin_graph, builtin_isometry_suite, load_suite
from pimsner.errors import InternalCheckError, InvalidInputError, PimsnerError, SinkError
from pimsner.fock import fock_relations_report
from pimsner.graph_core import DirectedGraph, load_graph, validate_nonsingular
from pimsner.kktheory import (
    KClass,
    diagram_suite,
    ev_star,
    exact_sequence_report,
    index_pairing,
    is_smeb,
    smeb_compatibility,
    smith_normal_form,
    w_class,
)
from pimsner.xi import bigrading_report, build_xi
from utils.app_constants import AppConstants
from utils.common_methods import CommonMethods
from utils.logger import Log


@dataclass(frozen=True)
class RunConfig:
    """Resolved run settings: properties file, then environment, then flags."""

    trunc: Optional[int] = None
    rmax: int = AppConstants.DEFAULT_RMAX
    degree_window: int = AppConstants.DEFAULT_DEGREE_WINDOW
    tol: float = AppConstants.DEFAULT_TOL
    cutoff: int = AppConstants.CESARO_CUTOFF
    path_cap: int = AppConstants.PATH_CAP
    mode: str = "exact"
    out: Optional[str] = None
    max_escalations: int = AppConstants.MAX_ESCALATIONS
    log_level: Optional[str] = None

    def __post_init__(self):
        if self.trunc is not None and self.trunc < 0:
            raise InvalidInputError(f"--trunc must be non-negative, got {self.trunc}")
        for name in ("rmax", "cutoff", "path_cap"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")
        if self.degree_window < 0 or self.degree_window > self.rmax:
            raise InvalidInputError(f"need 0 ≤ nwin ≤ rmax, got nwin={self.degree_window}, rmax={self.rmax}")
        if self.max_escalations < 0:
            raise InvalidInputError(f"max_escalations must be non-negative, got {self.max_escalations}")
        if self.mode not in AppConstants.MODES:
            raise InvalidInputError(f"mode must be one of {AppConstants.MODES}, got {self.mode!r}")
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol}")

    @classmethod
    def resolve(cls, args: argparse.Namespace, props: Mapping[str, str]) -> "RunConfig":
        CommonMethods.load_env()

        def pick(flag: Any, key: str, cast: Callable[[str], Any], default: Any) -> Any:
            if flag is not None:
                return flag
            raw = props.get(key, "")
            if raw.strip():
                try:
                    return cast(raw.strip())
                except ValueError:
                    raise InvalidInputError(f"config key {key}={raw!r} is not valid") from None
            return default

        env_cap = os.getenv(AppConstants.ENV_PATH_CAP)
        cap_default = pick(None, "path.cap", int, AppConstants.PATH_CAP)
        if env_cap:
            try:
                cap_default = int(env_cap)
            except ValueError:
                raise InvalidInputError(f"{AppConstants.ENV_PATH_CAP}={env_cap!r} is not an integer") from None
        level = os.getenv(AppConstants.ENV_LOG_LEVEL) or pick(None, "log.level", str, None)

        return cls(
            trunc=pick(args.trunc, "trunc", int, None),
            rmax=pick(args.rmax, "rmax", int, AppConstants.DEFAULT_RMAX),
            degree_window=pick(args.nwin, "nwin", int, AppConstants.DEFAULT_DEGREE_WINDOW),
            tol=pick(args.tol, "tol", float, AppConstants.DEFAULT_TOL),
            cutoff=pick(args.cutoff, "cutoff", int, AppConstants.CESARO_CUTOFF),
            path_cap=args.path_cap if args.path_cap is not None else cap_default,
            mode=pick(args.mode, "mode", str, "exact"),
            out=pick(args.out, "out", str, None),
            max_escalations=pick(None, "max.escalations", int, AppConstants.MAX_ESCALATIONS),
            log_level=level,
        )


def read_graph(source: str) -> DirectedGraph:
    """A graph file, or the name of a builtin graph."""
    path = FilePath(source)
    if path.is_file():
        return load_graph(CommonMethods.read_text(source), name=path.stem)
    if source in BUILTIN_GRAPHS:
        return builtin_graph(source)
    raise InvalidInputError(f"no graph file or builtin graph named {source!r}")


class _Falsified(InternalCheckError):
    """Internal check failure that still carries its report."""

    def __init__(self, report: Dict[str, Any], names: List[str]):
        self.report = report
        super().__init__(f"checks failed: {names}")


def _nonsingular(graph: DirectedGraph) -> DirectedGraph:
    report = validate_nonsingular(graph)
    if report.sinks:
        raise SinkError(f"{graph} has sinks {list(report.sinks)}")
    if report.sources:
        Log.warn(f"{graph} has sources {list(report.sources)}")
    return graph


# commands

def cmd_ktheory(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    return exact_sequence_report(_nonsingular(read_graph(args.graph)))


def cmd_snf(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    text = CommonMethods.read_text(args.matrix) if FilePath(args.matrix).is_file() else args.matrix
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"matrix is not JSON: {e.msg}") from e
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise InvalidInputError("matrix must be a list of rows")
    if len({len(row) for row in rows}) > 1:
        raise InvalidInputError("matrix rows differ in length")
    snf = smith_normal_form(rows)

    def encode(matrix) -> List[List[str]]:
        return [[str(matrix[i, j]) for j in range(matrix.cols)] for i in range(matrix.rows)]

    return {"U": encode(snf.U), "S": encode(snf.S), "W": encode(snf.W),
            "invariant_factors": [str(d) for d in snf.diagonal], "rank": snf.rank,
            "verified": snf.verify(sympy.Matrix(rows) if rows else sympy.zeros(0, 0))}


def cmd_verify_assumptions(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    reports = assumption_report(graph, args.k, tol=config.tol, cutoff=config.cutoff)
    return {"graph": graph.name, "reports": [report.to_json() for report in reports]}


def cmd_index(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    classes = load_suite(graph, CommonMethods.read_text(args.isometry))
    window = (config.degree_window, config.rmax) if args.check_modular else None
    results = []
    for v in classes:
        computation = index_pairing(v, config.trunc, config.max_escalations, window)
        entry = computation.to_json()
        entry["ev_star"] = ev_star(v).to_json()
        results.append(entry)
    return {"graph": graph.name, "classes": results}


def cmd_diagram(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    if args.suite == "builtin":
        suite = builtin_isometry_suite(graph)
    else:
        suite = load_suite(graph, CommonMethods.read_text(args.suite))
    window = (config.degree_window, config.rmax) if args.check_modular else None
    report = diagram_suite(graph, suite, config.trunc, config.max_escalations, window)
    result = report.to_json()
    if report.failures:
        raise _Falsified(result, [check.name for check in report.failures])
    return result


def cmd_wclass(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    w = w_class(graph)
    computation = index_pairing(w, config.trunc, config.max_escalations)
    ev = ev_star(w)
    in_degrees = KClass(graph, graph.in_degrees())
    ones = KClass.ones(graph)
    checks = [
        {"name": "pairing_w = -[A]", "pass": computation.pairing == -ones,
         "lhs": computation.pairing.to_json(), "rhs": (-ones).to_json()},
        {"name": "ev_star(w) = [A] - [E]", "pass": ev == ones - in_degrees,
         "lhs": ev.to_json(), "rhs": (ones - in_degrees).to_json()},
    ]
    report = {"graph": graph.name, "index": computation.to_json(), "ev_star": ev.to_json(), "checks": checks}
    failed = [check["name"] for check in checks if not check["pass"]]
    if failed:
        raise _Falsified(report, failed)
    return report


def cmd_smeb(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = read_graph(args.graph)
    return {"graph": graph.name, "smeb": is_smeb(graph), "compatibility": smeb_compatibility(graph)}


def cmd_relations(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    level = AppConstants.DEFAULT_TRUNC if config.trunc is None else config.trunc
    return fock_relations_report(graph, level, config.mode)


def cmd_bigrading(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    graph = _nonsingular(read_graph(args.graph))
    xi = build_xi(graph, config.degree_window, config.rmax, tol=config.tol, cutoff=config.cutoff)
    report = bigrading_report(xi)
    report["smeb"] = is_smeb(graph)
    return report


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Dict[str, Any]]] = {
    "ktheory": cmd_ktheory,
    "snf": cmd_snf,
    "verify-assumptions": cmd_verify_assumptions,
    "index": cmd_index,
    "diagram": cmd_diagram,
    "wclass": cmd_wclass,
    "smeb": cmd_smeb,
    "relations": cmd_relations,
    "bigrading": cmd_bigrading,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trunc", type=int, help="Fock truncation level K")
    common.add_argument("--rmax", type=int, help="largest |α| kept in Ξ windows")
    common.add_argument("--nwin", type=int, help="gauge degree window N for Ξ")
    common.add_argument("--tol", type=float, help="numerical tolerance")
    common.add_argument("--cutoff", type=int, help="Cesàro cutoff")
    common.add_argument("--mode", choices=AppConstants.MODES, help="arithmetic for Fock operators")
    common.add_argument("--out", help="report path (stdout when omitted)")
    common.add_argument("--path-cap", dest="path_cap", type=int, help="maximum number of enumerated paths")
    common.add_argument("--config", default=AppConstants.CONFIG_PATH, help="properties file")

    parser = argparse.ArgumentParser(prog="pimsner", description="K-theory and index pairings for graph algebras")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("ktheory", "wclass", "smeb", "relations", "bigrading"):
        sub = commands.add_parser(name, parents=[common])
        sub.add_argument("graph")
    sub = commands.add_parser("snf", parents=[common])
    sub.add_argument("matrix", help="JSON list of rows, inline or as a file")
    sub = commands.add_parser("verify-assumptions", parents=[common])
    sub.add_argument("graph")
    sub.add_argument("--k", type=int, default=3, help="largest tensor power")
    sub = commands.add_parser("index", parents=[common])
    sub.add_argument("graph")
    sub.add_argument("--isometry", required=True, help="class file")
    sub.add_argument("--check-modular", dest="check_modular", action="store_true")
    sub = commands.add_parser("diagram", parents=[common])
    sub.add_argument("graph")
    sub.add_argument("--suite", default="builtin", help="'builtin' or a class file")
    sub.add_argument("--check-modular", dest="check_modular", action="store_true")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse, resolve the configuration, dispatch and write the report.

    Returns:
        int: 0 on success, otherwise the exit code of the raised error
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    config: Optional[RunConfig] = None
    try:
        config = RunConfig.resolve(args, CommonMethods.init_prop(args.config))
        if config.log_level:
            Log.set_level(config.log_level)
        Log.debug(f"Run config: {asdict(config)}")
        with CommonMethods.scoped_path_cap(config.path_cap):
            report = COMMANDS[args.command](args, config)
        CommonMethods.write_report(report, config.out)
        return AppConstants.EXIT_OK
    except _Falsified as e:
        Log.error(str(e))
        CommonMethods.write_report(e.report, config.out if config else None)
        return e.exit_code
    except PimsnerError as e:
        Log.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except FileNotFoundError as e:
        Log.error(f"File not found: {e.filename}")
        return AppConstants.EXIT_INVALID_INPUT


def main() -> None:
    raise SystemExit(run())
