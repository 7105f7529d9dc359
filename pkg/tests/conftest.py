import numpy as np
import pytest

from treejacobi import (
    build_complete_bipartite,
    build_cycle,
    build_theta,
    dos_grid,
    from_edge_list,
)


@pytest.fixture(scope="session")
def theta3():
    return build_theta(3, 1.0, 0.0)


@pytest.fixture(scope="session")
def c2():
    return build_cycle(2, 1.0, [1.0, -1.0])


@pytest.fixture(scope="session")
def c3():
    return build_cycle(3, [1.0, 2.0, 3.0], 0.0)


@pytest.fixture(scope="session")
def k23():
    return build_complete_bipartite(2, 3, 1.0, 0.0)


@pytest.fixture(scope="session")
def loop1():
    # one vertex, one self-loop: covers the free Jacobi matrix on the line
    return from_edge_list(1, [(0, 0, 1.0)], np.array([0.0]))


@pytest.fixture(scope="session")
def all_graphs(theta3, c2, c3, k23):
    return {"theta3": theta3, "c2": c2, "c3": c3, "k23": k23}


# DOS grids are the expensive shared inputs; compute each once per run.

@pytest.fixture(scope="session")
def theta3_dos(theta3):
    return dos_grid(*theta3)


# cycle covers have inverse-square-root band edges; the default grid
# underweights them, so resolve finer to bring the mass near 1
@pytest.fixture(scope="session")
def c2_dos(c2):
    return dos_grid(*c2, n_points=4801)


@pytest.fixture(scope="session")
def c3_dos(c3):
    return dos_grid(*c3, n_points=4801)


@pytest.fixture(scope="session")
def k23_dos(k23):
    return dos_grid(*k23)


@pytest.fixture(scope="session")
def all_dos(theta3_dos, c2_dos, c3_dos, k23_dos):
    return {
        "theta3": theta3_dos,
        "c2": c2_dos,
        "c3": c3_dos,
        "k23": k23_dos,
    }
