import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from delab import measure as M
from delab.ensembles import load_ensemble, regular_ldpc

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def ldpc36():
    return regular_ldpc(3, 6)


@pytest.fixture(scope="session")
def ldgm_fig4():
    return load_ensemble(str(CONFIGS / "ldgm_fig4.json"))


@pytest.fixture(scope="session")
def grid_small():
    return M.GridSpec(128)


@pytest.fixture(scope="session")
def grid_mid():
    return M.GridSpec(1024)


@pytest.fixture(scope="session")
def grid_full():
    return M.GridSpec(4096)


def random_measure(grid: M.GridSpec, rng: np.random.Generator,
                   atom_scale: float = 0.2) -> M.HatMeasure:
    w = rng.random(grid.size)
    w[0] *= atom_scale
    w[-1] *= atom_scale
    return M.HatMeasure(grid, w / w.sum())


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # touch every kernel once on a small grid so compile time never lands
    # inside a timed assertion
    g = M.GridSpec(64)
    rng = np.random.default_rng(0)
    x = random_measure(g, rng)
    M.var_conv(x, x)
    M.var_conv(x, random_measure(g, rng))
    M.check_conv(x, x)
    M.check_conv(x, random_measure(g, rng))
    M.from_points(g, [0.3], [1.0])
