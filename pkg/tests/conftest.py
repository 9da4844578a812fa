import mpmath
import pytest
from mpmath import mpf

from isingrect import critical_coupling_isotropic


@pytest.fixture(scope="session")
def Kc():
    with mpmath.mp.workdps(60):
        return critical_coupling_isotropic()[1]


def approx_zero(x, bound):
    assert abs(x) <= mpf(bound), f"|{mpmath.nstr(mpf(abs(x)), 8)}| > {bound}"
