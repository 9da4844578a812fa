"""Configurable-precision arithmetic, dense determinants, and bracketed root finding.

All heavy computation in this package runs on mpmath reals at a per-call
precision of ``digits`` significant decimal digits (default 40, minimum 15).
A few guard digits are added internally so that results are honest at the
requested precision.  Partition functions are always accumulated in the log
domain.
"""

from __future__ import annotations

from contextlib import contextmanager

import mpmath
from mpmath import mp, mpf

DEFAULT_DIGITS = 40
MIN_DIGITS = 15

# internal guard digits on top of the user-visible precision; ten digits keep
# the soft-mode gap (a near-cancellation below criticality) honest at width 32
GUARD_DIGITS = 10


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class PrecisionError(ArithmeticError):
    """The requested precision is insufficient for a reliable result."""


class ConsistencyError(ArithmeticError):
    """An internal exact identity failed; indicates an assembly bug."""


def set_precision(digits):
    """Validate a precision request and return the working decimal digits.

    The returned value (digits + guard) is what the mpmath context is set to
    while computing; reported results are meaningful to ``digits`` digits.
    """
    digits = int(digits)
    if digits < MIN_DIGITS:
        raise DomainError(f"precision must be >= {MIN_DIGITS} digits, got {digits}")
    return digits + GUARD_DIGITS


@contextmanager
def working_dps(digits):
    """Context manager: run mpmath at digits + guard decimal digits."""
    wdps = set_precision(digits)
    with mp.workdps(wdps):
        yield wdps


def tol(k, digits):
    """Tolerance of the 10^(k - digits) family."""
    return mpf(10) ** (k - digits)


def to_mpf(x):
    """Convert a scalar (mpf, str, int, float) to mpf at current precision."""
    return mpf(x)


def eye(n):
    A = mpmath.matrix(n, n)
    for i in range(n):
        A[i, i] = 1
    return A


def log_abs_det(A):
    """log|det A| and sign(det A) by LU elimination with partial pivoting.

    Pivoting ties are broken by the lowest row index.  A singular matrix
    yields (-inf, 0).  The input matrix is not modified.
    """
    n = A.rows
    if A.cols != n:
        raise DomainError("log_abs_det requires a square matrix")
    U = A.copy()
    sign = 1
    logdet = mpf(0)
    for k in range(n):
        piv, pval = k, abs(U[k, k])
        for i in range(k + 1, n):
            v = abs(U[i, k])
            if v > pval:
                piv, pval = i, v
        if pval == 0:
            return mpf("-inf"), 0
        if piv != k:
            for j in range(k, n):
                U[k, j], U[piv, j] = U[piv, j], U[k, j]
            sign = -sign
        akk = U[k, k]
        if mpmath.im(akk) == 0 and mpmath.re(akk) < 0:
            sign = -sign
        logdet += mpmath.log(abs(akk))
        for i in range(k + 1, n):
            f = U[i, k] / akk
            if f:
                U[i, k] = 0
                for j in range(k + 1, n):
                    U[i, j] -= f * U[k, j]
    return logdet, sign


def log_det_one_plus(Y):
    """log det(1 + Y) for a square matrix with the identity added in place."""
    n = Y.rows
    Z = Y.copy()
    for i in range(n):
        Z[i, i] += 1
    ld, s = log_abs_det(Z)
    if s <= 0:
        raise ConsistencyError("det(1 + Y) is not positive")
    return ld


def bracketed_root(f, a, b, xtol, maxiter=None):
    """Root of f in [a, b] with f(a) f(b) < 0, to bracket width <= xtol.

    Illinois-damped regula falsi with a bisection fallback; the bracket is
    guaranteed to shrink, so convergence is unconditional.
    """
    a, b = mpf(a), mpf(b)
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if mpmath.sign(fa) == mpmath.sign(fb):
        raise DomainError("invalid bracket: f(a) and f(b) have the same sign")
    if maxiter is None:
        maxiter = 8 * mp.dps + 60
    side = 0
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        denom = fb - fa
        if denom != 0:
            c = b - fb * (b - a) / denom
        else:
            c = (a + b) / 2
        # keep the step safely interior, else bisect
        lo, hi = (a, b) if a < b else (b, a)
        if not (lo < c < hi):
            c = (a + b) / 2
        fc = f(c)
        if fc == 0:
            return c
        if mpmath.sign(fc) == mpmath.sign(fb):
            b, fb = c, fc
            if side == 1:
                fa /= 2  # Illinois damping keeps the stale end moving
            side = 1
        else:
            a, fa = b, fb
            b, fb = c, fc
            side = -1
    return (a + b) / 2


def signed_log(x):
    """(log|x|, sign) of a nonzero mpf; (−inf, 0) for zero."""
    if x == 0:
        return mpf("-inf"), 0
    return mpmath.log(abs(x)), (1 if x > 0 else -1)


def nstr(x, digits):
    """Deterministic decimal rendering at the requested precision."""
    return mpmath.nstr(x, digits, strip_zeros=True)
