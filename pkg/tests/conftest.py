import numpy as np
import pytest

from corona_lab.analytic import AnalyticPoly, PolyRow
from corona_lab.quadrature import build_boundary_quadrature, build_disc_quadrature


@pytest.fixture(scope="session")
def q():
    return build_disc_quadrature(128, 256)


@pytest.fixture(scope="session")
def q_small():
    return build_disc_quadrature(48, 96)


@pytest.fixture(scope="session")
def b():
    return build_boundary_quadrature(512)


@pytest.fixture(scope="session")
def row_A():
    """[(z+2)/4, 1/4] and its matched f = (f1^2 + f2^2)^2."""
    F = PolyRow.from_coeffs([[0.5, 0.25], [0.25]])
    return F, F.square_sum() ** 2


def poly(*c):
    return AnalyticPoly(np.asarray(c, dtype=complex))
