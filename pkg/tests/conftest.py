import cmath
import math

import numpy as np
import pytest

from windrelay.network import GridSource, LineSection, NetworkModel, default_network


def random_network(rng: np.random.Generator, n_buses: int, extra_edges: int = 1) -> NetworkModel:
    """Random connected network with a protected line A-B leaving the grid bus."""
    buses = ["A", "B"] + [f"N{k}" for k in range(n_buses - 2)]

    def line(i, a, b):
        z1 = cmath.rect(rng.uniform(0.05, 0.5), math.radians(rng.uniform(60, 88)))
        z0 = cmath.rect(rng.uniform(1.5, 3.5) * abs(z1), math.radians(rng.uniform(60, 85)))
        return LineSection(f"L{i}", a, b, float(rng.uniform(5, 120)), z1, z0)

    lines = [line(0, "A", "B")]
    for k, bus in enumerate(buses[2:], start=1):
        parent = buses[int(rng.integers(1, k + 1))]
        lines.append(line(k, parent, bus))
    for e in range(extra_edges):
        a, b = rng.choice(buses, size=2, replace=False)
        lines.append(line(len(lines), str(a), str(b)))
    grid = GridSource.from_rating(
        "A", float(rng.uniform(50, 500)), 132.0, float(rng.uniform(0.05, 0.2)), float(rng.uniform(5, 15)),
        float(rng.uniform(0.5, 3.0)),
    )
    infeed = str(rng.choice(buses[1:]))
    return NetworkModel(tuple(buses), tuple(lines), grid, infeed, protected_line="L0")


@pytest.fixture(scope="session")
def default_model() -> NetworkModel:
    return default_network()


@pytest.fixture(scope="session")
def default_dataset(default_model):
    from windrelay.adaptive import generate_dataset
    from windrelay.faultsolver import FaultScenario, FaultType
    from windrelay.windfarm import WindFarm

    speeds = [4.0 + 0.5 * k for k in range(43)]
    farm = WindFarm(connection_bus="C1")
    return generate_dataset(default_model, farm, FaultScenario(FaultType.SLG, "BC2", 16.0), speeds)


@pytest.fixture(scope="session")
def trained(default_dataset):
    from windrelay.adaptive import TrainingConfig, train

    return train(default_dataset.within(4.0, 25.0), TrainingConfig(seed=1))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
