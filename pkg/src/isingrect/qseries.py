"""Periodic infinite products Pi(C|q) and the free-energy pieces they build.

A coefficient matrix C with rows C[j][r] (j = 0..order, r = 0..period-1)
defines exponents c_k = sum_j C[j][k mod p] k^j and the product

    Pi(C|q) = prod_{k>=1} (1 - q^k)^(c_k),

convergent for 0 <= q < 1.  For the isotropic square lattice the natural
low-temperature variable q is fixed by t = sqrt(q) Pi(C_t|q) with t = exp(-2K)
in the ordered phase; by duality the same product gives z = tanh(K) in the
paramagnetic phase.  The bulk, surface, and corner free energies then have
closed product expressions on either side of the critical point.

Assembly conventions (verified against exact finite-lattice computations to
better than 1e-10):

* below T_c the bulk product q^(-1/2) Pi is the complete bulk free energy;
  no separate regular factor enters;
* the surface term is per column/row of the lattice and covers both of its
  boundary faces, so its regular part is -1/2 log(1 - z^2), twice the
  per-face value;
* the corner products carry the two-phase degeneracy constant -log 2 in the
  ordered phase; with apply_errata=True (default) that constant is removed,
  making f_c -> 0 at T -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .lattice import critical_coupling_isotropic
from .numerics import DomainError, to_mpf, working_dps

Q_CUTOFF = mpf("0.9")


@dataclass(frozen=True)
class PeriodicCoeffMatrix:
    """Exponent table: rows[j][r] multiplies k^j for k = r (mod period)."""

    rows: tuple

    def __post_init__(self):
        p = len(self.rows[0])
        if any(len(r) != p for r in self.rows):
            raise DomainError("all coefficient rows must share one period")

    @property
    def period(self):
        return len(self.rows[0])

    @property
    def order(self):
        return len(self.rows) - 1

    def exponent(self, k):
        """c_k as an exact Fraction."""
        r = k % self.period
        return sum(Fraction(row[r]) * k ** j for j, row in enumerate(self.rows))

    def exponent_bound(self, k):
        bound = Fraction(0)
        for j, row in enumerate(self.rows):
            bound += max(abs(Fraction(x)) for x in row) * k ** j
        return bound


def _cm(*rows):
    return PeriodicCoeffMatrix(tuple(tuple(Fraction(x) for x in row) for row in rows))


F = Fraction

# q <-> coupling relation (period 8); the same row serves t below and z above
COUPLING_VARIABLE = _cm([0, 1, 0, -1, 0, -1, 0, 1])

# ordered phase
BULK_BELOW = _cm([0, 0, -1, 0, 2, 0, -1, 0],
                 [0, -1, 0, 1, 0, -1, 0, 1])
SURFACE_BELOW_MAIN = _cm([0, F(3, 4), -1, F(-3, 4), 2, F(-3, 4), -1, F(3, 4)],
                         [0, F(1, 4), 0, F(1, 4), 0, F(-1, 4), 0, F(-1, 4)])
SURFACE_BELOW_HALFQ = _cm([0, F(-1, 2), 0, F(1, 2), 0, F(1, 2), 0, F(-1, 2)],
                          [0, F(-1, 2), 0, F(-1, 2), 0, F(1, 2), 0, F(1, 2)])
CORNER_BELOW = _cm([0, -2, 3, -2, -1, -2, 3, -2],
                   [0, -2, F(1, 2), 2, 0, -2, F(-1, 2), 2])

# paramagnetic phase; the bulk and corner tables have equivalent period-4 /
# squared-argument rewrites kept for cross-checks
BULK_ABOVE = _cm([0, 2, -4, 2, 0, 2, -4, 2],
                 [0, -1, 0, 1, 0, -1, 0, 1])
BULK_ABOVE_P4 = _cm([0, 2, -4, 2],
                    [0, -1, 0, 1])
SURFACE_ABOVE = _cm([0, F(1, 4), 1, F(-1, 4), -2, F(-1, 4), 1, F(1, 4)],
                    [0, F(-1, 4), 0, F(-1, 4), 0, F(1, 4), 0, F(1, 4)])
CORNER_ABOVE = _cm([0, 0, 0, 0, -3, 0, 0, 0],
                   [0, 0, F(-1, 2), 0, 0, 0, F(1, 2), 0])
CORNER_ABOVE_QSQ = _cm([0, 0, -3, 0],
                       [0, -1, 0, 1])


def _frac_to_mpf(fr):
    return mpf(fr.numerator) / mpf(fr.denominator)


def pi_product(C, q, digits=40):
    """(log Pi(C|q), truncation index).

    Terms are summed until the exponent-magnitude majorant times q^k drops
    below 10^(-digits-5); at least one full period is always evaluated.
    """
    with working_dps(digits):
        q = to_mpf(q)
        if q < 0 or q >= 1:
            raise DomainError("pi_product requires 0 <= q < 1")
        if q == 0:
            return mpf(0), 0
        cutoff = mpf(10) ** (-(digits + 5))
        total = mpf(0)
        k = 0
        qk = mpf(1)
        while True:
            k += 1
            qk *= q
            ck = C.exponent(k)
            if ck:
                total += _frac_to_mpf(ck) * mpmath.log(1 - qk)
            if k >= C.period and _frac_to_mpf(C.exponent_bound(k)) * qk < cutoff:
                return total, k


def t_of_q(q, digits=40):
    """Low-temperature variable map t(q) = sqrt(q) Pi(C_t|q); also z(q) above."""
    with working_dps(digits):
        q = to_mpf(q)
        if q == 0:
            return mpf(0)
        lg, _ = pi_product(COUPLING_VARIABLE, q, digits)
        return mpmath.sqrt(q) * mpmath.exp(lg)


def q_of_t(t, digits=40):
    """Invert t_of_q by bisection on [0, Q_CUTOFF]; monotone on that range."""
    with working_dps(digits):
        t = to_mpf(t)
        if t <= 0:
            raise DomainError("q_of_t requires t > 0")
        tmax = t_of_q(Q_CUTOFF, digits)
        if t >= tmax:
            raise DomainError(
                f"t = {mpmath.nstr(t, 8)} is outside the invertible range "
                f"(needs t < {mpmath.nstr(tmax, 8)}, i.e. a coupling away from critical)"
            )
        a, b = mpf(0), Q_CUTOFF
        fa = -t
        for _ in range(int(3.4 * mp.dps) + 20):
            c = (a + b) / 2
            fc = t_of_q(c, digits) - t
            if fc == 0:
                return c
            if fa * fc < 0:
                b = c
            else:
                a, fa = c, fc
        return (a + b) / 2


@dataclass(frozen=True)
class FreeEnergyPieces:
    """Bulk, surface (per row/column, both faces), and corner free energies."""

    side: str          # "below" or "above" the critical temperature
    K: mpf
    q: mpf
    f_b: mpf
    f_s: mpf
    f_c: mpf
    f_b_sing: mpf
    f_s_sing: mpf
    f_c_sing: mpf
    f_b_reg: mpf
    f_s_reg: mpf
    errata_applied: bool
    digits: int


def free_energy_pieces(K, digits=40, apply_errata=True):
    """Free-energy pieces of the isotropic lattice at reduced coupling K.

    K must be bounded away from the critical coupling so that q stays inside
    the convergent range.  With apply_errata=False the ordered-phase corner
    term keeps its original -log 2 constant (the value a naive finite-size
    extraction of -log Z yields); the default removes it.
    """
    with working_dps(digits):
        K = to_mpf(K)
        if K <= 0:
            raise DomainError("free_energy_pieces requires K > 0")
        z = mpmath.tanh(K)
        _, Kc = critical_coupling_isotropic()
        log2 = mpmath.log(mpf(2))
        if K > Kc:
            side = "below"
            tvar = mpmath.exp(-2 * K)   # dual of z
            q = q_of_t(tvar, digits)
            lg_b, _ = pi_product(BULK_BELOW, q, digits)
            lg_sA, _ = pi_product(SURFACE_BELOW_MAIN, q, digits)
            lg_sB, _ = pi_product(SURFACE_BELOW_HALFQ, mpmath.sqrt(q), digits)
            lg_c, _ = pi_product(CORNER_BELOW, q, digits)
            f_b_sing = mpmath.log(q) / 2 - lg_b
            f_b_reg = mpf(0)            # the ordered-phase product is complete
            f_s_sing = log2 - lg_sA - lg_sB
            f_s_reg = -mpmath.log(1 - z ** 2) / 2
            f_c_sing = -lg_c - (mpf(0) if apply_errata else log2)
        else:
            side = "above"
            q = q_of_t(z, digits)
            lg_b, _ = pi_product(BULK_ABOVE, q, digits)
            lg_s, _ = pi_product(SURFACE_ABOVE, q, digits)
            lg_c, _ = pi_product(CORNER_ABOVE, q, digits)
            f_b_sing = -lg_b
            f_b_reg = -mpmath.log(2 * (1 + z ** 2) / (1 - z ** 2))
            f_s_sing = -lg_s
            f_s_reg = -mpmath.log(1 - z ** 2) / 2
            f_c_sing = -lg_c
        return FreeEnergyPieces(
            side=side, K=K, q=q,
            f_b=f_b_reg + f_b_sing,
            f_s=f_s_reg + f_s_sing,
            f_c=f_c_sing,
            f_b_sing=f_b_sing, f_s_sing=f_s_sing, f_c_sing=f_c_sing,
            f_b_reg=f_b_reg, f_s_reg=f_s_reg,
            errata_applied=apply_errata, digits=digits)
