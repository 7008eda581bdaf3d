import pytest

from convexlab import mesh as meshmod


@pytest.fixture(scope="session")
def disc4():
    return meshmod.unit_ball(2, 4)


@pytest.fixture(scope="session")
def disc5():
    return meshmod.unit_ball(2, 5)


@pytest.fixture(scope="session")
def ball2():
    return meshmod.unit_ball(3, 2)


@pytest.fixture(scope="session")
def ball3():
    return meshmod.unit_ball(3, 3)


@pytest.fixture(scope="session")
def ball4():
    return meshmod.unit_ball(3, 4)


@pytest.fixture(scope="session")
def ell2():
    return meshmod.ellipsoid((0.9, 0.85, 0.82), 2)


@pytest.fixture(scope="session")
def torus1():
    return meshmod.solid_torus(5.0, 1)


@pytest.fixture(scope="session")
def cap2():
    return meshmod.spherical_cap(3, 1.0, 2)
