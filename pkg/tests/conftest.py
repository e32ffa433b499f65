"""
Pytest configuration and fixtures.

Builtin graphs and the resolved config are injected into every test class,
so tests use self.o2, self.c2, self.config instead of passing fixtures.
"""
import os
# Disable Python bytecode generation to prevent caching issues
os.environ['PYTHONDONTWRITEBYTECODE'] = '1'

from typing import Dict

import pytest

from pimsner.builtin import cycle, fibonacci, o_n, single_loop, two_loops
from pimsner.graph_core import DirectedGraph
from utils.common_methods import AllureHelper, CommonMethods
from utils.logger import Log


@pytest.fixture(scope="class")
def config() -> Dict[str, str]:
    """Get configuration properties."""
    return CommonMethods.init_prop()


@pytest.fixture(scope="class")
def graphs() -> Dict[str, DirectedGraph]:
    """Builtin graphs keyed by their report names."""
    built = [o_n(2), o_n(3), single_loop(), cycle(2), cycle(3), fibonacci(), two_loops()]
    Log.info(f"Built test graphs: {[g.name for g in built]}")
    return {g.name: g for g in built}


@pytest.fixture(scope="class", autouse=True)
def setup_graphs(request, config, graphs):
    """
    Automatically inject the graphs and config into the test class instance.
    This allows tests to use self.o2 instead of passing fixtures.
    """
    if request.cls is not None:
        request.cls.config = config
        request.cls.graphs = graphs
        for name, graph in graphs.items():
            setattr(request.cls, name, graph)
    yield


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Log failures and attach the failure text to Allure."""
    outcome = yield
    rep = outcome.get_result()

    if rep.when == "call" and rep.failed:
        try:
            Log.error(f"FAILED {item.nodeid}")
            AllureHelper.before(rep.longreprtext, name="Failure")
        except Exception as e:
            Log.error(f"Error attaching failure to allure: {e}")
