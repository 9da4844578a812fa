import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from isingrect.numerics import (
    DomainError,
    bracketed_root,
    log_abs_det,
    set_precision,
    working_dps,
)


def _mat(rows):
    return mpmath.matrix(rows)


def test_log_abs_det_identity():
    with working_dps(40):
        ld, s = log_abs_det(mpmath.eye(3))
    assert ld == 0 and s == 1


def test_log_abs_det_diagonal():
    with working_dps(40):
        ld, s = log_abs_det(_mat([[2, 0], [0, 3]]))
        assert s == 1
        assert abs(ld - mpmath.log(6)) < mpf("1e-38")


def test_log_abs_det_antisymmetric_2x2():
    with working_dps(40):
        ld, s = log_abs_det(_mat([[0, 1], [-1, 0]]))
    assert s == 1 and abs(ld) < mpf("1e-38")


def test_log_abs_det_singular():
    with working_dps(40):
        ld, s = log_abs_det(_mat([[1, 2], [2, 4]]))
    assert s == 0 and ld == mpf("-inf")


def test_log_abs_det_requires_square():
    with pytest.raises(DomainError):
        log_abs_det(mpmath.zeros(2, 3))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10 ** 6))
def test_log_abs_det_product_rule(n, seed):
    # det(AB) = det(A) det(B) within the precision family
    import random

    rng = random.Random(seed)
    with working_dps(40):
        A = mpmath.matrix([[mpf(rng.randint(-9, 9)) / 4 for _ in range(n)] for _ in range(n)])
        B = mpmath.matrix([[mpf(rng.randint(-9, 9)) / 4 for _ in range(n)] for _ in range(n)])
        la, sa = log_abs_det(A)
        lb, sb = log_abs_det(B)
        lab, sab = log_abs_det(A * B)
        if sa == 0 or sb == 0:
            assert sab == 0
        else:
            assert sab == sa * sb
            assert abs(lab - la - lb) < mpf("1e-38") * (1 + abs(la) + abs(lb))


def test_bracketed_root_sqrt2():
    with working_dps(40):
        r = bracketed_root(lambda x: x * x - 2, mpf(1), mpf(2), mpf("1e-42"))
        assert abs(r - mpmath.sqrt(2)) < mpf("1e-40")


def test_bracketed_root_cos():
    with working_dps(40):
        r = bracketed_root(mpmath.cos, mpf(1), mpf(2), mpf("1e-42"))
        assert abs(r - mpmath.pi / 2) < mpf("1e-40")


def test_bracketed_root_invalid_bracket():
    with working_dps(40):
        with pytest.raises(DomainError):
            bracketed_root(lambda x: x * x + 1, mpf(0), mpf(1), mpf("1e-30"))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 60))
def test_bracketed_root_residual_small(k):
    # residual through f stays at the bracket-width scale
    with working_dps(40):
        c = mpf(k) / 61
        f = lambda x: mpmath.cos(x) - c
        r = bracketed_root(f, mpf(0), mpf(3), mpf("1e-42"))
        assert abs(f(r)) < mpf("1e-40")


def test_bracketed_root_on_mode_polynomial():
    # find one mode angle of the width-6 strip from a coarse bracket and
    # verify the residual through the polynomial itself
    from isingrect.spectral import char_poly

    with working_dps(40):
        z, t = mpf("0.4"), mpf("0.55")
        f = lambda phi: char_poly(phi, z, t, 6)
        lo, hi = mpf("0.3"), mpf("0.4")
        assert f(lo) * f(hi) < 0
        r = bracketed_root(f, lo, hi, mpf("1e-42"))
        assert abs(f(r)) < mpf("1e-38")


def test_set_precision_floor():
    assert set_precision(15) > 15
    assert set_precision(100) > 100
    with pytest.raises(DomainError):
        set_precision(10)


def test_working_dps_restores():
    before = mp.dps
    with working_dps(80):
        assert mp.dps >= 80
    assert mp.dps == before
