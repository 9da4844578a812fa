"""Cross-path and identity validation battery behind `isingrect validate`.

Each check computes a defect and compares it against its tolerance.  Two
tolerance families coexist:

* relative cross-path comparisons scale with the requested precision
  (the 10^(k - digits) family);
* the spectral identity and residual-equivalence checks carry the absolute
  acceptance-grade bounds of the default 40-digit precision.  Running the
  battery at reduced precision therefore fails visibly (exit code 3) instead
  of silently degrading, by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf

from . import brute_force, cylinder, effspin, pfaffian, qseries, spectral, thermo
from .lattice import (
    CouplingGrid,
    HomogeneousCouplings,
    LatticeSpec,
    critical_coupling_isotropic,
)
from .numerics import working_dps


@dataclass
class CheckResult:
    name: str
    defect: mpf
    tolerance: mpf
    passed: bool
    note: str = ""


def _result(name, defect, tolerance, note=""):
    return CheckResult(name=name, defect=defect, tolerance=tolerance,
                       passed=bool(defect <= tolerance), note=note)


def _K_set():
    _, Kc = critical_coupling_isotropic()
    return [("K0.2", mpf("0.2"), mpf("0.2")),
            ("Kc", Kc, Kc),
            ("K0.7", mpf("0.7"), mpf("0.7")),
            ("aniso", mpf("0.2"), mpf("0.6"))]


def check_four_paths(digits):
    """Oracle, Pfaffian, cylinder, and spectral log Z agree pairwise."""
    out = []
    tol = mpf(10) ** -10
    for (L, M) in [(2, 2), (2, 4), (3, 4), (4, 4), (4, 6)]:
        for label, Kh, Kv in _K_set():
            grid = CouplingGrid.from_scalars(LatticeSpec(L, M), Kh, Kv)
            with working_dps(digits):
                vals = [pfaffian.logZ_pfaffian(grid, digits),
                        cylinder.logZ_cylinder(grid, digits)]
                hom = HomogeneousCouplings.from_K(Kh, Kv, digits)
                vals.append(spectral.logZ_spectral(L, M, hom.z, hom.t, digits))
                if L * M <= brute_force.MAX_SITES:
                    vals.append(brute_force.brute_force_logZ(grid, digits).logZ)
                spread = (max(vals) - min(vals)) / abs(vals[0])
            out.append(_result(f"fourpath-{L}x{M}-{label}", spread, tol))
    # disordered couplings exercise the grid-capable paths
    import random

    rng = random.Random(42)
    L, M = 3, 4
    with working_dps(digits):
        kh = [[mpf(rng.randint(10, 80)) / 100 if l < L - 1 else mpf(0)
               for _ in range(M)] for l in range(L)]
        kv = [[mpf(rng.randint(10, 80)) / 100 for _ in range(M)] for _ in range(L)]
        grid = CouplingGrid(LatticeSpec(L, M, "periodic"), kh, kv, digits)
        vals = [brute_force.brute_force_logZ(grid, digits).logZ,
                pfaffian.logZ_pfaffian(grid, digits),
                cylinder.logZ_cylinder(grid, digits)]
        spread = (max(vals) - min(vals)) / abs(vals[0])
    out.append(_result("fourpath-disorder-3x4", spread, tol))
    return out


def check_spectral_identities(digits, M_list=(4, 6, 8, 16, 32)):
    """Mode residuals, the sin(M phi)/sin(phi) identity, prod lambda = t,
    and the dense transfer-matrix eigenvalue multiset."""
    out = []
    _, Kc = critical_coupling_isotropic()
    for M in M_list:
        for label, K in [("above", mpf("0.3")), ("crit", Kc), ("below", mpf("0.6"))]:
            hom = HomogeneousCouplings.from_K(K, K, digits)
            with working_dps(digits):
                sp = spectral.find_modes(hom.z, hom.t, M, digits)
                zm = (hom.z - 1 / hom.z) / 2
                res = mpf(0)
                d44 = mpf(0)
                for md in sp.modes:
                    phi = md.phi_signed
                    res = max(res, abs(spectral.char_poly(phi, hom.z, hom.t, M)))
                    # sin(M phi)/sin(phi) = -z_minus/lambda_minus at every mode
                    lamm = mpmath.sinh(md.sigma * md.gamma_hat)
                    if md.kind == "imag":
                        lhs = mpmath.sinh(M * md.phi) / mpmath.sinh(md.phi)
                    else:
                        lhs = mpmath.sin(M * phi) / mpmath.sin(phi)
                    # relative defect: the sides diverge with the soft gap
                    d44 = max(d44, abs(lhs * lamm / (-zm) - 1))
                prodlam = abs(mpmath.exp(
                    sum(m.sigma * m.gamma_hat for m in sp.modes)) - hom.t)
            out.append(_result(f"charpoly-residual-M{M}-{label}", res, mpf(10) ** -30))
            out.append(_result(f"mode-ratio-identity-M{M}-{label}", d44, mpf(10) ** -30))
            out.append(_result(f"prodlambda-M{M}-{label}", prodlam, mpf(10) ** -30))
            if M <= 8:
                with working_dps(digits):
                    t2 = spectral.build_T2(hom.z, hom.t, M, digits)
                    eigs = sorted(mp.eigsy(t2.T2, eigvals_only=True))
                    lams = sorted([m.lam for m in sp.modes]
                                  + [1 / m.lam for m in sp.modes])
                    dm = max(abs(a - b) for a, b in zip(lams, eigs))
                out.append(_result(f"t2-multiset-M{M}-{label}", dm, mpf(10) ** -25))
    return out


def check_residual_equivalences(digits):
    """det(1 + Y) against the spin-model sum, the closed L=0 product, and
    the long-strip decay."""
    out = []
    K = mpf("0.35")
    hom = HomogeneousCouplings.from_K(K, K, digits)
    with working_dps(digits):
        for M in (4, 8, 12):
            sp = spectral.find_modes(hom.z, hom.t, M, digits)
            for L in (mpf(0), mpf(1), mpf("2.5"), mpf(10)):
                rs = spectral.residual_system(sp, L, digits)
                det1y = mpmath.exp(spectral.log_zsres(rs))
                zeff = effspin.z_eff(effspin.build_eff_model(rs))
                out.append(_result(
                    f"detY-vs-effspin-M{M}-L{mpmath.nstr(L, 3)}",
                    abs(det1y - zeff) / zeff, mpf(10) ** -8))
        for M in (4, 6, 8, 10, 12):
            sp = spectral.find_modes(hom.z, hom.t, M, digits)
            rs = spectral.residual_system(sp, 0, digits)
            a = spectral.log_zsres(rs)
            b = spectral.log_zsres_closed_L0(sp, digits)
            out.append(_result(f"detY-vs-closedL0-M{M}",
                               abs(mpmath.expm1(a - b)), mpf(10) ** -8))
        hom3 = HomogeneousCouplings.from_K(mpf("0.3"), mpf("0.3"), digits)
        sp = spectral.find_modes(hom3.z, hom3.t, 8, digits)
        rs = spectral.residual_system(sp, 80, digits)
        out.append(_result("detY-decay-LoverM10",
                           abs(spectral.log_zsres(rs)), mpf(10) ** -8))
    return out


def check_casimir(digits):
    """Analytic force vs central difference, and vs the spin-model
    magnetization."""
    out = []
    _, Kc = critical_coupling_isotropic()
    with working_dps(digits):
        for M in (4, 8, 12):
            for label, K in [("K0.3", mpf("0.3")), ("Kc", Kc), ("K0.6", mpf("0.6"))]:
                L = 8
                an = thermo.casimir_force_strip(L, M, K, K, digits)
                fd = thermo.casimir_force_fd(L, M, K, K, digits)
                out.append(_result(f"casimir-fd-M{M}-{label}",
                                   abs(an - fd) / abs(an), mpf(10) ** -6))
                hom = HomogeneousCouplings.from_K(K, K, digits)
                sp = spectral.find_modes(hom.z, hom.t, M, digits)
                rs = spectral.residual_system(sp, L, digits)
                meff = effspin.magnetization_eff(effspin.build_eff_model(rs))
                out.append(_result(f"casimir-effspin-M{M}-{label}",
                                   abs(an + meff), mpf(10) ** -8))
    return out


def check_qseries(digits):
    """Round trip q <-> t, equivalent product forms, corner extraction, and
    the bulk/surface limits."""
    out = []
    with working_dps(digits):
        worst = mpf(0)
        for qs in ("0.01", "0.1", "0.25", "0.4", "0.5"):
            q = mpf(qs)
            worst = max(worst, abs(qseries.q_of_t(qseries.t_of_q(q, digits), digits) - q))
        out.append(_result("qseries-roundtrip", worst, mpf(10) ** -10))
        worst8 = mpf(0)
        for qs in ("0.05", "0.2", "0.4", "0.5"):
            q = mpf(qs)
            a, _ = qseries.pi_product(qseries.BULK_ABOVE, q, digits)
            b, _ = qseries.pi_product(qseries.BULK_ABOVE_P4, q, digits)
            worst8 = max(worst8, abs(a - b))
            a, _ = qseries.pi_product(qseries.CORNER_ABOVE, q, digits)
            b, _ = qseries.pi_product(qseries.CORNER_ABOVE_QSQ, q * q, digits)
            worst8 = max(worst8, abs(a - b))
        out.append(_result("qseries-product-forms", worst8, mpf(10) ** -20))
        for K in (mpf("0.7"), mpf("0.25")):
            pieces = qseries.free_energy_pieces(K, digits)
            ext = thermo.extract_corner(K, (16, 24, 32), digits)
            out.append(_result(f"corner-extraction-K{mpmath.nstr(K, 3)}",
                               abs(ext.f_c - pieces.f_c), mpf(10) ** -6))
    return out


def check_bulk_surface(digits):
    """-log Z / (LM) at 48 x 48 against the bulk product, and the surface
    term after bulk subtraction."""
    out = []
    K = mpf("0.7")
    with working_dps(digits):
        pieces = qseries.free_energy_pieces(K, digits, apply_errata=False)
        hom = HomogeneousCouplings.from_K(K, K, digits)
        s = 48
        sp = spectral.find_modes(hom.z, hom.t, s, digits)
        rs = spectral.residual_system(sp, s, digits)
        F_strip = -spectral.log_strip_part(sp, s, rs, digits)
        fb_est = (F_strip - 2 * s * pieces.f_s - pieces.f_c) / (s * s)
        fs_est = (F_strip - s * s * pieces.f_b - pieces.f_c) / (2 * s)
        out.append(_result("bulk-limit-48", abs(fb_est - pieces.f_b), mpf(10) ** -8))
        out.append(_result("surface-limit-48", abs(fs_est - pieces.f_s), mpf(10) ** -6))
    return out


CHECK_GROUPS = {
    "fourpath": (check_four_paths, ["fourpath"]),
    "spectral-identities": (check_spectral_identities,
                            ["charpoly-residual", "mode-ratio-identity",
                             "prodlambda", "t2-multiset"]),
    "residual": (check_residual_equivalences,
                 ["detY-vs-effspin", "detY-vs-closedL0", "detY-decay"]),
    "casimir": (check_casimir, ["casimir-fd", "casimir-effspin"]),
    "qseries": (check_qseries,
                ["qseries-roundtrip", "qseries-product-forms", "corner-extraction"]),
    "bulk-surface": (check_bulk_surface, ["bulk-limit", "surface-limit"]),
}


def run_checks(digits=40, only=None):
    """Run the battery, or just the groups/checks whose name contains `only`."""
    results = []
    for gname, (fn, prefixes) in CHECK_GROUPS.items():
        if only and only not in gname and not any(
                p in only or only in p for p in prefixes):
            continue
        for r in fn(digits):
            if only and only not in r.name and only not in gname:
                continue
            results.append(r)
    return results
