"""Dimer/Pfaffian route: Z = sqrt(C0 det A) for an antisymmetric 4LM x 4LM A.

The matrix acts on four decoration nodes per site; its determinant is the
squared Pfaffian, so det A >= 0 for every physical coupling grid and the
square root is safe.  The vertical direction is the cylinder's home; open
vertical boundaries are realized by the zero wrap couplings already encoded
in the grid.

A block Schur reduction to an LM x LM block-tridiagonal complement provides
an internal factorization check (even M only).
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .lattice import ReducedCouplings, log_C0
from .numerics import ConsistencyError, DomainError, eye, log_abs_det, working_dps


def _shift_open(n):
    """n x n upper shift with zero corner."""
    H = mpmath.matrix(n, n)
    for i in range(n - 1):
        H[i, i + 1] = 1
    return H


def _shift_wrap(n):
    """n x n upper shift with -1 in the lower-left corner."""
    H = _shift_open(n)
    H[n - 1, 0] = -1
    return H


@dataclass
class KasteleynSystem:
    A: mpmath.matrix          # 4LM x 4LM, antisymmetric
    Zh: mpmath.matrix         # LM x LM horizontal coupling block
    Zv: mpmath.matrix         # LM x LM vertical coupling block
    digits: int


def _coupling_blocks(grid, red):
    L, M = grid.spec.L, grid.spec.M
    N = L * M
    Zh = mpmath.matrix(N, N)
    Zv = mpmath.matrix(N, N)
    for l in range(L):
        for m in range(M):
            i = l * M + m
            if l + 1 < L:
                Zh[i, (l + 1) * M + m] = red.z[l][m]
            if m + 1 < M:
                Zv[i, l * M + m + 1] = red.zv[l][m]
            else:
                Zv[i, l * M] = -red.zv[l][m]
    return Zh, Zv


def build_A(grid, digits=40):
    """Assemble the antisymmetric decoration matrix; antisymmetry is asserted."""
    with working_dps(digits):
        red = ReducedCouplings.from_grid(grid)
        N = grid.spec.nsites
        Zh, Zv = _coupling_blocks(grid, red)
        A = mpmath.matrix(4 * N, 4 * N)

        def put(bi, bj, mat, s=1):
            for i in range(N):
                for j in range(N):
                    v = mat[i, j]
                    if v:
                        A[bi * N + i, bj * N + j] += s * v

        one = eye(N)
        put(0, 1, one); put(0, 1, Zv)
        put(0, 2, one, -1); put(0, 3, one, -1)
        put(1, 0, one, -1); put(1, 0, Zv.T, -1)
        put(1, 2, one); put(1, 3, one, -1)
        put(2, 0, one); put(2, 1, one, -1)
        put(2, 3, one); put(2, 3, Zh)
        put(3, 0, one); put(3, 1, one)
        put(3, 2, one, -1); put(3, 2, Zh.T, -1)
        for i in range(4 * N):
            if A[i, i] != 0:
                raise ConsistencyError("decoration matrix has a nonzero diagonal")
            for j in range(i + 1, 4 * N):
                if A[i, j] != -A[j, i]:
                    raise ConsistencyError("decoration matrix is not antisymmetric")
        return KasteleynSystem(A=A, Zh=Zh, Zv=Zv, digits=digits)


def logZ_pfaffian(grid, digits=40):
    """log Z = (log C0 + log det A)/2; det A must come out positive."""
    sys = build_A(grid, digits)
    with working_dps(digits):
        ld, sign = log_abs_det(sys.A)
        if sign <= 0:
            raise ConsistencyError(
                "det A is not positive; the decoration assembly is inconsistent"
            )
        return (log_C0(grid) + ld) / 2


def _schur_blocks(grid, red):
    """Explicit diagonal/off-diagonal blocks of the LM x LM Schur complement."""
    L, M = grid.spec.L, grid.spec.M
    one = eye(M)
    Hm = _shift_wrap(M)
    A_plus, A_minus, D_blocks, B_blocks = [], [], [], []
    for l in range(L):
        Z = mpmath.matrix(M, M)
        for m in range(M):
            for mm in range(M):
                v = Hm[m, mm]
                if v:
                    Z[m, mm] = red.zv[l][m] * v
        ZT = Z.T
        for s, store in ((1, A_plus), (-1, A_minus)):
            diff = (one + s * ZT) ** -1 - (one + s * Z) ** -1
            try:
                store.append(s * (diff ** -1))
            except ZeroDivisionError:
                raise DomainError(
                    "Schur blocks need nonzero vertical couplings on rows m < M"
                ) from None
        D = (one - ZT) * ((one - Z * ZT) ** -1) - (one - Z) * ((one - ZT * Z) ** -1)
        D_blocks.append(D)
        zdiag = mpmath.matrix(M, M)
        for m in range(M):
            zdiag[m, m] = red.z[l][m]
        B_blocks.append(-(D ** -1) * zdiag)
    A_diag = [A_minus[0]]
    for l in range(1, L):
        zdiag = mpmath.matrix(M, M)
        for m in range(M):
            zdiag[m, m] = red.z[l - 1][m]
        A_diag.append(A_minus[l] + zdiag * A_plus[l - 1] * zdiag)
    return A_diag, B_blocks


def log_det_reduced(grid, red):
    """(log|.|, sign) of the minor left after dropping the fourth node row/col.

    Closed product form: prod_ell (prod_{m odd} zv + prod_{m even} zv)^2,
    with m counted 1-based.
    """
    L, M = grid.spec.L, grid.spec.M
    lg, sign = mpf(0), 1
    for l in range(L):
        podd, peven = mpf(1), mpf(1)
        for m in range(M):
            if m % 2 == 0:
                podd *= red.zv[l][m]
            else:
                peven *= red.zv[l][m]
        s = podd + peven
        if s == 0:
            return mpf("-inf"), 0
        lg += 2 * mpmath.log(abs(s))
    return lg, sign


def schur_check(grid, digits=40):
    """Relative defect of det A = det(reduced minor) * det(Schur complement).

    The complement is built from its explicit block formulas, the reduced
    minor from its closed product.  Requires even M and nonzero vertical
    couplings on rows m < M.
    """
    M = grid.spec.M
    if M % 2:
        raise DomainError("the Schur factorization check supports even M only")
    with working_dps(digits):
        red = ReducedCouplings.from_grid(grid)
        for l in range(grid.spec.L):
            for m in range(M - 1):
                if red.zv[l][m] == 0:
                    raise DomainError(
                        "Schur blocks need nonzero vertical couplings on rows m < M"
                    )
        sys = build_A(grid, digits)
        ldA, sA = log_abs_det(sys.A)
        lg_red, s_red = log_det_reduced(grid, red)
        if s_red == 0:
            raise DomainError("reduced minor vanishes; factorization undefined")
        A_diag, B_blocks = _schur_blocks(grid, red)
        L = grid.spec.L
        N = L * M
        C = mpmath.matrix(N, N)
        for l in range(L):
            for i in range(M):
                for j in range(M):
                    C[l * M + i, l * M + j] = A_diag[l][i, j]
            if l + 1 < L:
                B = B_blocks[l]
                for i in range(M):
                    for j in range(M):
                        C[l * M + i, (l + 1) * M + j] = B[i, j]
                        C[(l + 1) * M + i, l * M + j] = -B[j, i]
        ldC, sC = log_abs_det(C)
        if sA != s_red * sC:
            raise ConsistencyError("Schur factorization sign mismatch")
        return abs(mpmath.expm1(lg_red + ldC - ldA))
