"""Shared fixtures: the expensive coefficient builds happen once per session."""

import pytest

from hiwlab import qseries as qs
from hiwlab import voronoi as vo
from hiwlab import windows as wl


@pytest.fixture(scope="session")
def window():
    return wl.standard_bump()


@pytest.fixture(scope="session")
def theta_delta_small():
    return qs.builtin_form("theta_delta", 2000)


@pytest.fixture(scope="session")
def theta_delta_1e4():
    return qs.builtin_form("theta_delta", 10 ** 4 + 1)


@pytest.fixture(scope="session")
def theta_delta_1e5():
    return qs.builtin_form("theta_delta", 10 ** 5 + 1)


@pytest.fixture(scope="session")
def theta_delta_1e6():
    return qs.builtin_form("theta_delta", 10 ** 6)


@pytest.fixture(scope="session")
def eta8_cubed_1e6():
    return qs.builtin_form("eta8_cubed", 10 ** 6)


@pytest.fixture(scope="session")
def fricke_pair(window):
    """Reference pair with the dual-sum kernel prebuilt and warm."""
    pair = vo.make_fricke_pair(10 ** 4 + 1, 42000)
    pair.kernel(window)
    return pair
