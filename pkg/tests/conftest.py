import dataclasses
import time

import numpy as np
import pytest

from halokeep.controller import run_mission
from halokeep.halo import build_reference_orbit, load_initial_guess
from halokeep.linearize import discrete_jacobians
from halokeep.lqr import CostWeights, periodic_riccati
from halokeep.safety import verify_mission
from halokeep.scenario import builtin_path, load_scenario, resolve

IC_FILES = {"earth-moon": "earth_moon_l2_halo.ic", "saturn-enceladus": "saturn_enceladus_l2_halo.ic"}
# LQR weights per system, nondimensional
WEIGHTS = {"earth-moon": (1e-3, 1e3), "saturn-enceladus": (1e-6, 1e-3)}


def pytest_addoption(parser):
    parser.addoption("--quick", action="store_true", help="skip tests marked slow")


ACCEPTANCE = []   # (criterion, passed, detail), filled by test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--quick"):
        skip = pytest.mark.skip(reason="--quick")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def orbits():
    return {name: build_reference_orbit(load_initial_guess(builtin_path(f)))
            for name, f in IC_FILES.items()}


@pytest.fixture(scope="session")
def models(orbits):
    return {name: discrete_jacobians(o) for name, o in orbits.items()}


@pytest.fixture(scope="session")
def em_orbit(orbits):
    return orbits["earth-moon"]


@pytest.fixture(scope="session")
def se_orbit(orbits):
    return orbits["saturn-enceladus"]


@pytest.fixture(scope="session")
def em_model(models):
    return models["earth-moon"]


@pytest.fixture(scope="session")
def cost_to_go(models):
    return {name: periodic_riccati(m, CostWeights.scaled_identity(*WEIGHTS[name]))
            for name, m in models.items()}


class MissionCache:
    """Runs each packaged scenario at most once per session."""

    def __init__(self):
        self._runs = {}
        self._safety = {}
        self.runtime = {}

    def get(self, name, halfspace=True):
        key = (name, halfspace)
        if key not in self._runs:
            sc = load_scenario(builtin_path(name + ".yaml"))
            res = resolve(sc)
            if not halfspace:
                res.mission.constraints = dataclasses.replace(res.mission.constraints, halfspace=False)
            t0 = time.perf_counter()
            log = run_mission(res.mission)
            self.runtime[key] = time.perf_counter() - t0
            self._runs[key] = (sc, res, log)
        return self._runs[key]

    def safety(self, name, halfspace=True):
        """Safety report over the scenario's window, classifying every 4th state."""
        key = (name, halfspace)
        if key not in self._safety:
            sc, res, log = self.get(name, halfspace)
            cfg = dataclasses.replace(sc.safety(), sample_every=4)
            t0 = time.perf_counter()
            report = verify_mission(log, res.orbit, cfg)
            self._safety[key] = (report, time.perf_counter() - t0)
        return self._safety[key][0]

    def safety_runtime(self, name, halfspace=True):
        self.safety(name, halfspace)
        return self._safety[(name, halfspace)][1]


@pytest.fixture(scope="session")
def missions():
    return MissionCache()


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
