import math
from pathlib import Path

import pytest

from overdet_lab.analysis import build_bundle
from overdet_lab.config import RunConfig
from overdet_lab.discretization import TensorGrid
from overdet_lab.geometry import BoundaryShape, build_domain
from overdet_lab.stability import stability_sweep

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "goldens"
SWEEP_EPSILONS = (0.04, 0.02, 0.01, 0.005)


@pytest.fixture(scope="session")
def disk_geom():
    return build_domain(BoundaryShape(0.0))


@pytest.fixture(scope="session")
def disk_grid(disk_geom):
    return TensorGrid(disk_geom, 16, 32)


@pytest.fixture(scope="session")
def disk_bundle(disk_geom, disk_grid):
    return build_bundle(disk_geom, disk_grid)


@pytest.fixture(scope="session")
def oval_geom():
    return build_domain(BoundaryShape.preset("cos2", 0.05))


@pytest.fixture(scope="session")
def oval_grid(oval_geom):
    return TensorGrid(oval_geom, 32, 64)


@pytest.fixture(scope="session")
def oval_bundle(oval_geom, oval_grid):
    return build_bundle(oval_geom, oval_grid)


@pytest.fixture(scope="session")
def triangle_bundle():
    geom = build_domain(BoundaryShape.preset("cos3", 0.02))
    return build_bundle(geom, TensorGrid(geom, 32, 64))


@pytest.fixture(scope="session")
def oval_sweep():
    return stability_sweep(BoundaryShape.preset("cos2", 1.0), SWEEP_EPSILONS,
                           (1.0, 2.0, 3.0, 10.0, math.inf), RunConfig(), threads=2, progress=False)


@pytest.fixture
def coarse_config():
    return RunConfig.model_validate({"resolution": {"n_r": 16, "n_theta": 32}})
