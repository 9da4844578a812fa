"""Lattice geometry, reduced couplings, duality, and the global constants.

Conventions: the lattice has L columns and M rows; site (ell, m) with
ell = 1..L, m = 1..M.  Horizontal bonds couple (ell, m)-(ell+1, m) and carry
the reduced coupling Kh[ell][m] (in units of k_B T), with the open-boundary
column fixed to Kh[L][.] = 0.  Vertical bonds couple (ell, m)-(ell, m+1);
the lattice is a cylinder when bc_vertical == "periodic", and open when the
wrap couplings Kv[.][M] are zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf

from .numerics import ConsistencyError, DomainError, signed_log, to_mpf, working_dps

OPEN = "open"
PERIODIC = "periodic"


def pm(a):
    """The half-sum/half-difference pair a_pm = (a ± 1/a)/2, so a^(±1) = a+ ± a-."""
    a = to_mpf(a)
    if a == 0:
        raise DomainError("pm(a) requires a != 0")
    inv = 1 / a
    return (a + inv) / 2, (a - inv) / 2


def dual(z):
    """Dual coupling t = (1 - z)/(1 + z); an involution on (-1, 1]."""
    z = to_mpf(z)
    if z == -1:
        raise DomainError("dual(z) requires z != -1")
    return (1 - z) / (1 + z)


def critical_coupling_isotropic():
    """Self-dual point of the isotropic square lattice: z_c = sqrt(2) - 1.

    Returns (z_c, K_c) with K_c = atanh(z_c).
    """
    zc = mpmath.sqrt(mpf(2)) - 1
    return zc, mpmath.atanh(zc)


@dataclass(frozen=True)
class LatticeSpec:
    """L columns, M rows, and the vertical boundary condition."""

    L: int
    M: int
    bc_vertical: str = OPEN

    def __post_init__(self):
        if self.L < 1 or self.M < 1:
            raise DomainError(f"lattice must have L, M >= 1, got {self.L}x{self.M}")
        if self.bc_vertical not in (OPEN, PERIODIC):
            raise DomainError(f"bc_vertical must be 'open' or 'periodic', got {self.bc_vertical!r}")

    @property
    def nsites(self):
        return self.L * self.M


class CouplingGrid:
    """Per-bond reduced couplings on the lattice.

    Kh and Kv are L x M nested tuples of mpf, 0-indexed as Kh[ell-1][m-1].
    Boundary zeros (Kh at ell = L; Kv at m = M when open) are enforced at
    construction.
    """

    def __init__(self, spec, Kh, Kv, digits=40):
        L, M = spec.L, spec.M
        with working_dps(digits):
            # conversion re-rounds to the active precision, so set it first
            Kh = [[to_mpf(Kh[l][m]) for m in range(M)] for l in range(L)]
            Kv = [[to_mpf(Kv[l][m]) for m in range(M)] for l in range(L)]
        for m in range(M):
            if Kh[L - 1][m] != 0:
                raise DomainError(f"Kh must vanish on the last column, got Kh[{L},{m + 1}] != 0")
        if spec.bc_vertical == OPEN:
            for l in range(L):
                if Kv[l][M - 1] != 0:
                    raise DomainError(
                        f"open vertical boundary requires Kv[{l + 1},{M}] = 0"
                    )
        for row in Kh + Kv:
            for x in row:
                if not mpmath.isfinite(x):
                    raise DomainError("couplings must be finite")
        self.spec = spec
        self.digits = digits
        self.Kh = tuple(tuple(r) for r in Kh)
        self.Kv = tuple(tuple(r) for r in Kv)

    @classmethod
    def from_scalars(cls, spec, Kh, Kv, digits=40):
        """Homogeneous grid with the boundary zeros filled in."""
        L, M = spec.L, spec.M
        with working_dps(digits):
            Kh = to_mpf(Kh)
            Kv = to_mpf(Kv)
        kh = [[Kh if l < L - 1 else mpf(0) for m in range(M)] for l in range(L)]
        last_v = Kv if spec.bc_vertical == PERIODIC else mpf(0)
        kv = [[Kv if m < M - 1 else last_v for m in range(M)] for l in range(L)]
        return cls(spec, kh, kv, digits)

    @classmethod
    def from_csv(cls, path, bc_vertical=OPEN, digits=40):
        """Load a grid from CSV with header (ell, m, Kh, Kv), 1-based indices."""
        cells = {}
        with open(path, newline="") as fh, working_dps(digits):
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:4]] != ["ell", "m", "kh", "kv"]:
                raise DomainError("grid CSV requires the header 'ell,m,Kh,Kv'")
            for row in reader:
                if not row or not "".join(row).strip():
                    continue
                ell, m = int(row[0]), int(row[1])
                if (ell, m) in cells:
                    raise DomainError(f"duplicate grid cell ({ell},{m})")
                cells[(ell, m)] = (mpf(row[2].strip()), mpf(row[3].strip()))
        if not cells:
            raise DomainError("grid CSV contains no cells")
        L = max(e for e, _ in cells)
        M = max(m for _, m in cells)
        if len(cells) != L * M:
            raise DomainError(f"grid CSV must list every cell of the {L}x{M} lattice once")
        spec = LatticeSpec(L, M, bc_vertical)
        Kh = [[cells[(l + 1, m + 1)][0] for m in range(M)] for l in range(L)]
        Kv = [[cells[(l + 1, m + 1)][1] for m in range(M)] for l in range(L)]
        return cls(spec, Kh, Kv, digits)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ell", "m", "Kh", "Kv"])
            for l in range(self.spec.L):
                for m in range(self.spec.M):
                    w.writerow([l + 1, m + 1,
                                mpmath.nstr(self.Kh[l][m], self.digits),
                                mpmath.nstr(self.Kv[l][m], self.digits)])

    def bonds(self):
        """All nonzero bonds as (site_i, site_j, K) with site = (ell-1)*M + (m-1)."""
        L, M = self.spec.L, self.spec.M
        out = []
        for l in range(L):
            for m in range(M):
                i = l * M + m
                if l + 1 < L and self.Kh[l][m] != 0:
                    out.append((i, (l + 1) * M + m, self.Kh[l][m]))
                if m + 1 < M:
                    if self.Kv[l][m] != 0:
                        out.append((i, l * M + m + 1, self.Kv[l][m]))
                elif self.spec.bc_vertical == PERIODIC and self.Kv[l][m] != 0:
                    out.append((i, l * M, self.Kv[l][m]))
        return out


@dataclass(frozen=True)
class ReducedCouplings:
    """tanh-couplings z, zv and the dual t = (1 - zv)/(1 + zv), per bond."""

    z: tuple       # horizontal tanh couplings, z[l][m], z[L-1][.] = 0
    zv: tuple      # vertical tanh couplings
    t: tuple       # duals of zv; t = 1 where zv = 0

    @classmethod
    def from_grid(cls, grid):
        z = tuple(tuple(mpmath.tanh(K) for K in row) for row in grid.Kh)
        zv = tuple(tuple(mpmath.tanh(K) for K in row) for row in grid.Kv)
        t = tuple(tuple(dual(x) for x in row) for row in zv)
        return cls(z, zv, t)


@dataclass(frozen=True)
class HomogeneousCouplings:
    """Homogeneous anisotropic couplings for the open-open rectangle.

    z is the bulk horizontal tanh coupling (columns ell < L), t the dual of
    the bulk vertical tanh coupling (rows m < M).  The formal boundary values
    z = 1 on the last column and t = 1 on the last row are stored explicitly
    so the transfer-matrix formulas can be used verbatim.
    """

    z: mpf
    t: mpf
    z_boundary: mpf = mpf(1)
    t_boundary: mpf = mpf(1)

    def __post_init__(self):
        if not (0 < self.z < 1 and 0 < self.t < 1):
            raise DomainError("homogeneous couplings require 0 < z < 1 and 0 < t < 1")

    @classmethod
    def from_K(cls, Kh, Kv, digits=40):
        """Build from reduced couplings Kh, Kv > 0."""
        with working_dps(digits):
            z = mpmath.tanh(to_mpf(Kh))
            t = dual(mpmath.tanh(to_mpf(Kv)))
        return cls(z, t)


def log_C0(grid):
    """log of the Pfaffian prefactor 4^(LM) prod cosh^2 Kh prod cosh^2 Kv."""
    L, M = grid.spec.L, grid.spec.M
    total = L * M * mpmath.log(mpf(4))
    for l in range(L - 1):
        for m in range(M):
            total += 2 * mpmath.log(mpmath.cosh(grid.Kh[l][m]))
    for l in range(L):
        for m in range(M):
            total += 2 * mpmath.log(mpmath.cosh(grid.Kv[l][m]))
    return total


def log_C1(grid):
    """(log|C1|, sign): C1 = prod_{ell<L} z_h * prod (1 - zv^2)."""
    red = ReducedCouplings.from_grid(grid)
    L, M = grid.spec.L, grid.spec.M
    total, sign = mpf(0), 1
    for l in range(L - 1):
        for m in range(M):
            lg, s = signed_log(red.z[l][m])
            if s == 0:
                raise DomainError("C1 requires nonzero horizontal couplings for ell < L")
            total += lg
            sign *= s
    for l in range(L):
        for m in range(M):
            total += mpmath.log(1 - red.zv[l][m] ** 2)
    return total, sign


def log_C2_dagger(grid):
    """(log|C2t|, sign): C2t = C0 C1 = 2^((L+1)M) prod_{ell<L} 1/z_minus."""
    red = ReducedCouplings.from_grid(grid)
    L, M = grid.spec.L, grid.spec.M
    total = (L + 1) * M * mpmath.log(mpf(2))
    sign = 1
    for l in range(L - 1):
        for m in range(M):
            zminus = pm(red.z[l][m])[1] if red.z[l][m] != 0 else None
            if zminus is None or zminus == 0:
                raise DomainError(
                    "C2 requires 0 < |z| < 1 on every interior column (1/z_minus appears)"
                )
            total -= mpmath.log(abs(zminus))
            if zminus < 0:
                sign = -sign
    return total, sign


def log_C2(grid):
    """(log|C2|, sign) with C2 = z^M C2t for a homogeneous-z grid."""
    red = ReducedCouplings.from_grid(grid)
    L, M = grid.spec.L, grid.spec.M
    lg, s = log_C2_dagger(grid)
    for m in range(M):
        z = red.z[0][m] if L > 1 else mpf(1)
        zlg, zs = signed_log(z)
        lg += zlg
        s *= zs
    return lg, s


def log_C3(hom, L, M):
    """(log|C3|, sign) of C3 = z^M (2/z_minus)^(LM) (2/(t_minus z_minus))^(M^2/2).

    L may be real; the sign is only meaningful for integer L*M.
    """
    zp, zm = pm(hom.z)
    tp, tm = pm(hom.t)
    L = to_mpf(L)
    lg = M * mpmath.log(hom.z) + L * M * mpmath.log(abs(2 / zm)) \
        + (mpf(M) ** 2 / 2) * mpmath.log(2 / (tm * zm))
    sign = 1
    if zm < 0 and (L * M) % 2 == 1:
        sign = -1
    return lg, sign


def constants(grid, digits=40):
    """All global constants applicable to this grid, as log-values.

    Returns a dict with log_C0 always, log_C1/log_C2_dagger/log_C2 when the
    interior horizontal couplings are nonzero (they carry reciprocals), and
    log_C3 when the grid is homogeneous.  The identity C2t = C0 C1 is
    verified whenever both sides exist.
    """
    with working_dps(digits):
        out = {"log_C0": log_C0(grid), "digits": digits}
        try:
            lc1, s1 = log_C1(grid)
            lc2d, s2d = log_C2_dagger(grid)
        except DomainError:
            return out
        out.update(log_C1=lc1, sign_C1=s1, log_C2_dagger=lc2d, sign_C2_dagger=s2d)
        # C2t = C0*C1 must hold exactly up to rounding
        defect = abs(out["log_C0"] + lc1 - lc2d)
        if defect > mpf(10) ** (-mp.dps + 10) * (1 + abs(lc2d)) or s1 != s2d:
            raise ConsistencyError(f"constant identity C2t = C0 C1 violated by {defect}")
        lc2, s2 = log_C2(grid)
        out["log_C2"] = lc2
        out["sign_C2"] = s2
        hom = homogeneous_from_grid(grid, digits)
        if hom is not None:
            lc3, s3 = log_C3(hom, grid.spec.L, grid.spec.M)
            out["log_C3"] = lc3
            out["sign_C3"] = s3
        return out


def homogeneous_from_grid(grid, digits=40):
    """HomogeneousCouplings if the grid is open, homogeneous, and ferromagnetic."""
    L, M = grid.spec.L, grid.spec.M
    if grid.spec.bc_vertical != OPEN:
        return None
    khs = {grid.Kh[l][m] for l in range(L - 1) for m in range(M)}
    kvs = {grid.Kv[l][m] for l in range(L) for m in range(M - 1)}
    if len(khs) != 1 or len(kvs) != 1:
        return None
    Kh, Kv = khs.pop(), kvs.pop()
    if Kh <= 0 or Kv <= 0:
        return None
    return HomogeneousCouplings.from_K(Kh, Kv, digits)
