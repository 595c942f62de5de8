import os
from pathlib import Path

import numpy as np
import pytest

from coldbrew import GraphBundle, load_bundle, make_degree_splits, synth_power_law

FIXTURES = Path(os.environ.get("COLDBREW_FIXTURES",
                               Path(__file__).resolve().parent.parent / "fixtures"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def cora() -> GraphBundle:
    return load_bundle(FIXTURES / "cora")


@pytest.fixture(scope="session")
def cora_splits(cora):
    return make_degree_splits(cora, seed=0)


@pytest.fixture(scope="session")
def two_cluster_20() -> GraphBundle:
    return load_bundle(FIXTURES / "two_cluster_20")


@pytest.fixture(scope="session")
def two_cluster_200() -> GraphBundle:
    return load_bundle(FIXTURES / "two_cluster_200")


@pytest.fixture(scope="session")
def tc200_splits(two_cluster_200):
    return make_degree_splits(two_cluster_200, seed=1)


@pytest.fixture()
def path2() -> GraphBundle:
    return GraphBundle("path2", 2, 2, np.array([[0, 1]]),
                       np.zeros((2, 3), np.float32), np.array([0, 1]))


@pytest.fixture()
def star4() -> GraphBundle:
    edges = np.array([[0, 1], [0, 2], [0, 3]])
    return GraphBundle("star4", 4, 2, edges, np.zeros((4, 2), np.float32),
                       np.array([0, 1, 1, 1]))


@pytest.fixture()
def triangle_same() -> GraphBundle:
    edges = np.array([[0, 1], [0, 2], [1, 2]])
    return GraphBundle("tri", 3, 2, edges, np.zeros((3, 2), np.float32),
                       np.array([1, 1, 1]))


@pytest.fixture(scope="session")
def small_graph() -> GraphBundle:
    """6-node fixture used by the gradient checks."""
    return synth_power_law(6, exponent=2.5, inter_cluster_noise=0.3, num_clusters=2, seed=2)
