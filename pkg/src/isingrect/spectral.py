"""Spectral solution of the homogeneous open-open rectangle.

The column-to-column transfer matrix of the open strip of even width M has
2M eigenvalues in reciprocal pairs (lambda, 1/lambda).  Writing
lambda_plus = cosh(gamma) = t+ z+ - t- z- cos(phi), the admissible angles phi
are the zeroes of the degree-M polynomial (in cos phi)

    P_M(phi) = cos(M phi) + (t+ cos(phi) - t- z+/z-) sin(M phi)/sin(phi),

real in (0, pi) except for at most one root on the imaginary axis in the
ordered phase.  Modes are ordered by lambda_plus; the parity
sigma_mu = (-1)^(mu-1) selects the dominant branch alternately, and
prod_mu lambda_mu = t.

The partition function factorizes into an infinite-strip part (a closed
per-mode product) times det(1 + Y), where Y is an (M/2) x (M/2) matrix built
from Cauchy data over the mode constants c_mu = lambda_{mu,+}; Y carries
every finite-aspect-ratio correction and vanishes for long strips.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .lattice import CouplingGrid, HomogeneousCouplings, LatticeSpec, dual, log_C2, log_C3, pm
from .numerics import (
    ConsistencyError,
    DomainError,
    PrecisionError,
    bracketed_root,
    log_abs_det,
    log_det_one_plus,
    signed_log,
    to_mpf,
    working_dps,
)


@dataclass(frozen=True)
class Mode:
    """One transfer-matrix mode.

    phi is |phi| for real angles and the positive imaginary part psi for the
    below-critical mode (kind == "imag").  gamma_hat = |log lambda| > 0,
    lam_hat = exp(gamma_hat) > 1, and lam = lam_hat^sigma is the signed
    eigenvalue.
    """

    kind: str
    phi: mpf
    c: mpf
    gamma_hat: mpf
    sigma: int
    lam_hat: mpf
    lam: mpf

    @property
    def phi_signed(self):
        """Signed angle (mpc on the imaginary axis)."""
        if self.kind == "imag":
            return mpc(0, self.sigma * self.phi)
        return self.sigma * self.phi


@dataclass(frozen=True)
class Spectrum:
    M: int
    z: mpf
    t: mpf
    modes: tuple
    digits: int

    @property
    def c(self):
        return [m.c for m in self.modes]

    @property
    def gamma_hat(self):
        return [m.gamma_hat for m in self.modes]

    @property
    def sigma(self):
        return [m.sigma for m in self.modes]


def char_poly(phi, z, t, M):
    """The mode polynomial at real phi, or at phi = i psi passed as mpc.

    The removable singularity at sin(phi) = 0 is evaluated through the limit
    sin(M phi)/sin(phi) -> M cos(M phi)/cos(phi).
    """
    z, t = to_mpf(z), to_mpf(t)
    tp, tm = pm(t)
    zp, zm = pm(z)
    B = tm * zp / zm
    if isinstance(phi, mpc):
        if phi.real != 0:
            raise DomainError("phi must be real or purely imaginary")
        psi = phi.imag
        s = mpmath.sinh(psi)
        if s == 0:
            return (1 + (tp - B) * M) * mpf(1)
        return mpmath.cosh(M * psi) + (tp * mpmath.cosh(psi) - B) * mpmath.sinh(M * psi) / s
    phi = to_mpf(phi)
    s = mpmath.sin(phi)
    if abs(s) < mpf(10) ** (-mp.dps + 8):
        return mpmath.cos(M * phi) * (1 + (tp * mpmath.cos(phi) - B) * M / mpmath.cos(phi))
    return mpmath.cos(M * phi) + (tp * mpmath.cos(phi) - B) * mpmath.sin(M * phi) / s


def _real_roots(z, t, M, npoints):
    """Sign-change roots of the mode polynomial on (0, pi)."""
    f = lambda phi: char_poly(phi, z, t, M)
    xtol = mpf(10) ** (-(mp.dps - 3))
    pts = [mpmath.pi * k / npoints for k in range(1, npoints + 1)]
    # geometric refinement toward 0 resolves the soft mode near criticality
    pts = [mpmath.pi / npoints / mpf(2) ** k for k in range(int(3.4 * mp.dps), 0, -1)] + pts
    tp, tm = pm(t)
    zp, zm = pm(z)
    fprev = 1 + (tp - tm * zp / zm) * M  # phi -> 0+ limit
    xprev = mpf(0)
    roots = []
    for x in pts:
        fx = f(x)
        if fx == 0:
            roots.append(x)
        elif fprev * fx < 0:
            roots.append(bracketed_root(f, xprev, x, xtol))
        xprev, fprev = x, fx
    return roots


def _imag_root(z, t, M):
    """The below-critical mode on the imaginary axis, phi = i psi, psi > 0."""
    g = lambda psi: char_poly(mpc(0, psi), z, t, M)
    xtol = mpf(10) ** (-(mp.dps - 3))
    psimax = 2 * mpmath.atanh(max(z, t))
    tp, tm = pm(t)
    zp, zm = pm(z)
    # the mode keeps lambda_plus > 1, which bounds cosh(psi)
    bound = (tp * zp - 1) / (tm * zm)
    if bound > 1:
        psimax = min(psimax, mpmath.acosh(bound))
    n = 8 * M
    fprev = 1 + (tp - tm * zp / zm) * M
    xprev = mpf(0)
    for k in range(1, n + 1):
        x = psimax * k / n
        fx = g(x)
        if fx == 0:
            return x
        if fprev * fx < 0:
            return bracketed_root(g, xprev, x, xtol)
        xprev, fprev = x, fx
    return None


def find_modes(z, t, M, digits=40):
    """All M modes, ordered by lambda_plus ascending (the soft mode first)."""
    if M < 2 or M % 2:
        raise DomainError("the spectral route requires even M >= 2")
    z, t = to_mpf(z), to_mpf(t)
    if not (0 < z < 1 and 0 < t < 1):
        raise DomainError("find_modes requires 0 < z < 1 and 0 < t < 1")
    with working_dps(digits):
        tp, tm = pm(t)
        zp, zm = pm(z)
        phis = None
        for mult in (8, 16, 32, 64):
            roots = _real_roots(z, t, M, mult * M)
            if len(roots) == M:
                phis = [(r, "real") for r in roots]
                break
            if len(roots) == M - 1:
                psi = _imag_root(z, t, M)
                if psi is not None:
                    phis = [(r, "real") for r in roots] + [(psi, "imag")]
                    break
        if phis is None:
            raise PrecisionError(
                f"found {len(roots)} of {M} modes; increase the precision "
                "or the bracketing grid"
            )
        modes = []
        for phi, kind in phis:
            ch = mpmath.cosh(phi) if kind == "imag" else mpmath.cos(phi)
            c = tp * zp - tm * zm * ch
            if c < 1:
                raise PrecisionError("mode with lambda_plus < 1; precision too low")
            modes.append((c, phi, kind))
        modes.sort(key=lambda rec: rec[0])
        out = []
        for i, (c, phi, kind) in enumerate(modes):
            gh = mpmath.acosh(c)
            sg = 1 if i % 2 == 0 else -1
            out.append(Mode(kind=kind, phi=phi, c=c, gamma_hat=gh, sigma=sg,
                            lam_hat=mpmath.exp(gh), lam=mpmath.exp(sg * gh)))
        for a, b in zip(out, out[1:]):
            if abs(a.c - b.c) < mpf(10) ** (-mpf(digits) / 2):
                raise PrecisionError(
                    "nearly degenerate modes; increase the working precision"
                )
        # alternating sum of gamma_hat telescopes to log t; a miss here means
        # a root was dropped or duplicated
        defect = abs(sum(m.sigma * m.gamma_hat for m in out) - mpmath.log(t))
        if defect > mpf(10) ** (-mpf(digits) / 2):
            raise PrecisionError(f"mode-product identity violated by {defect}")
        return Spectrum(M=M, z=z, t=t, modes=tuple(out), digits=digits)


def build_T2(z, t, M, digits=40):
    """Symmetric 2M x 2M block transfer matrix and its two M x M blocks."""
    with working_dps(digits):
        z, t = to_mpf(z), to_mpf(t)
        zp, zm = pm(z)
        tp, tm = pm(t)
        a = tp * zp
        b = -tp * zm
        a0p = tp * zp + (1 - tp) * (zp + 1) / 2
        a0m = tp * zp + (1 - tp) * (zp - 1) / 2
        b0 = -(1 + tp) * zm / 2
        c = -tm * zm / 2
        d_plus = tm * (1 + zp) / 2
        d_minus = -tm * (1 - zp) / 2
        Tplus = mpmath.matrix(M, M)
        for i in range(M):
            Tplus[i, i] = a
            if i + 1 < M:
                Tplus[i, i + 1] = c
                Tplus[i + 1, i] = c
        Tplus[0, 0] = a0p
        Tplus[M - 1, M - 1] = a0m
        Tminus = mpmath.matrix(M, M)
        for i in range(M):
            Tminus[i, M - 1 - i] = b          # anti-diagonal
            if 0 <= M - 2 - i < M:
                Tminus[i, M - 2 - i] = d_minus
            if 0 <= M - i < M:
                Tminus[i, M - i] = d_plus
        Tminus[0, M - 1] = b0
        Tminus[M - 1, 0] = b0
        T2 = mpmath.matrix(2 * M, 2 * M)
        for i in range(M):
            for j in range(M):
                T2[i, j] = Tplus[i, j]
                T2[M + i, M + j] = Tplus[i, j]
                T2[i, M + j] = Tminus[i, j]
                T2[M + i, j] = Tminus[i, j]
        return T2System(T2=T2, T_plus=Tplus, T_minus=Tminus, digits=digits)


@dataclass
class T2System:
    T2: mpmath.matrix
    T_plus: mpmath.matrix
    T_minus: mpmath.matrix
    digits: int


def eigvec_matrix(spectrum, digits=None):
    """Orthonormal M x M eigenvector matrix x; rows are modes, columns the
    odd positions m = -M+1, -M+3, ..., M-1.

    The below-critical mode is evaluated on the imaginary axis; its row comes
    out real because the normalization radicand changes sign along with the
    squared trigonometric factors.
    """
    digits = digits or spectrum.digits
    M, z, t = spectrum.M, spectrum.z, spectrum.t
    with working_dps(digits):
        zp, zm = pm(z)
        tp, tm = pm(t)
        X = mpmath.matrix(M, M)
        imag_tol = mpf(10) ** (-mp.dps + 10)
        for mu, md in enumerate(spectrum.modes):
            gam = md.sigma * md.gamma_hat
            lamp = mpmath.cosh(gam)
            lamm = mpmath.sinh(gam)
            phi = md.phi_signed
            rad = M * lamm ** 2 + zp * lamp - tp
            if rad == 0 or lamp == 1:
                raise PrecisionError("degenerate eigenvector normalization")
            pref = mpmath.sqrt(4 * t * z) * tm * zm * lamm / (
                mpmath.sqrt(mpc(rad)) * mpmath.sqrt(mpc(lamp - 1)))
            for j in range(M):
                m = 2 * j - M + 1
                val = pref * (mpmath.sin((M + 1 + m) * phi / 2) / ((1 - t) * (1 + z))
                              - mpmath.sin((M - 1 + m) * phi / 2) / ((1 + t) * (1 - z)))
                val = mpc(val)
                if abs(val.imag) > imag_tol * (1 + abs(val.real)):
                    raise ConsistencyError("eigenvector entry has a nonreal part")
                X[mu, j] = val.real
        return X


def logZ_via_detM(L, M, z, t, digits=40):
    """Validation route: Z = sqrt(C2) |det Mx| from the eigenvector matrix.

    The matrix mixes lambda^(L/2) with lambda^(-L/2), so the usable range is
    limited by cancellation: requires L * max(gamma_hat) <= digits*ln(10)/2.
    """
    with working_dps(digits) as wdps:
        z, t = to_mpf(z), to_mpf(t)
        spectrum = find_modes(z, t, M, digits)
        Lm = to_mpf(L)
        guard = mpf(digits) * mpmath.log(mpf(10)) / 2
        worst = Lm * max(spectrum.gamma_hat)
        if worst > guard:
            raise PrecisionError(
                f"L*max(gamma_hat) = {mpmath.nstr(worst, 6)} exceeds the "
                f"cancellation guard {mpmath.nstr(guard, 6)}; "
                "use the factorized spectral route instead"
            )
        X = eigvec_matrix(spectrum, digits)
        Mx = mpmath.matrix(M, M)
        for mu, md in enumerate(spectrum.modes):
            gam = md.sigma * md.gamma_hat
            lp = mpmath.exp(gam * Lm / 2)
            lm = 1 / lp
            for j in range(M):
                Mx[mu, j] = (lp + lm) / 2 * X[mu, j] + (lp - lm) / 2 * X[mu, M - 1 - j]
        ld, s = log_abs_det(Mx)
        if s == 0:
            raise ConsistencyError("det Mx vanished")
        if Lm != int(Lm) or int(Lm) < 1:
            raise DomainError("the det-Mx route needs integer L >= 1")
        # homogeneous open grid on the fly for the constant C2
        grid = CouplingGrid.from_scalars(
            LatticeSpec(int(Lm), M), mpmath.atanh(z), mpmath.atanh(dual(t)))
        lc2, s2 = log_C2(grid)
        if s2 <= 0:
            raise ConsistencyError("C2 came out nonpositive")
        return lc2 / 2 + ld


@dataclass
class ResidualSystem:
    """Cauchy data of the finite-length correction determinant.

    Y = -Lh_e^(-L) V_e T_eo Lh_o^(-L) V_o T_oe over the even/odd mode split,
    where (T)_{mu nu} = 1/(c_mu - c_nu), v_mu = p_mu (t z^-sigma - lam) /
    (t z^sigma - lam), and p_mu is the regularized alternating Cauchy product.
    A and B are the two factors with the lam_hat^(-L) decay folded in, kept
    for the analytic L-derivative.
    """

    M: int
    L: mpf
    c: list
    sigma: list
    gamma_hat: list
    log_p: list
    sign_p: list
    v: list
    log_g: list
    sign_g: list
    log_f: list
    sign_f: list
    log_d_oe: mpf
    log_q_o: mpf
    log_q_e: mpf
    Y: mpmath.matrix
    A: mpmath.matrix
    B: mpmath.matrix
    odd: list
    even: list
    digits: int


def residual_system(spectrum, L, digits=None):
    """Assemble the residual Cauchy system at (real) strip length L >= 0."""
    digits = digits or spectrum.digits
    M, z, t = spectrum.M, spectrum.z, spectrum.t
    with working_dps(digits):
        L = to_mpf(L)
        if L < 0:
            raise DomainError("residual system requires L >= 0")
        cs = spectrum.c
        sig = spectrum.sigma
        gh = spectrum.gamma_hat
        lam = [m.lam for m in spectrum.modes]
        deg_tol = mpf(10) ** (-mpf(digits) / 2)
        log_p, sign_p = [], []
        for mu in range(M):
            lg, sn = mpf(0), 1
            for nu in range(M):
                if nu == mu:
                    continue
                d = cs[mu] - cs[nu]
                if abs(d) < deg_tol:
                    raise PrecisionError("coincident mode constants c_mu")
                e = -sig[mu] * sig[nu]
                lg += e * mpmath.log(abs(d))
                if d < 0:
                    sn = -sn
            log_p.append(lg)
            sign_p.append(sn)
        v = []
        log_g, sign_g, log_f, sign_f = [], [], [], []
        for mu in range(M):
            s = sig[mu]
            num = t * z ** (-s) - lam[mu]
            den = t * z ** s - lam[mu]
            if den == 0:
                raise DomainError("v_mu denominator vanished")
            v.append(sign_p[mu] * mpmath.exp(log_p[mu]) * num / den)
            lgg, sg = signed_log(t * z - lam[mu])
            log_g.append(s * gh[mu] * L / 2 + lgg)     # g = -lam^(L/2) (tz - lam)
            sign_g.append(-sg)
            lgf, sf = signed_log(t / z - lam[mu])
            log_f.append(-s * gh[mu] * L / 2 + lgf)    # f = lam^(-L/2) (t/z - lam)
            sign_f.append(sf)
        odd = list(range(0, M, 2))
        even = list(range(1, M, 2))
        h = M // 2
        A = mpmath.matrix(h, h)
        B = mpmath.matrix(h, h)
        for a, e in enumerate(even):
            we = mpmath.exp(-L * gh[e]) * v[e]
            for k, o in enumerate(odd):
                A[a, k] = we / (cs[e] - cs[o])
        for k, o in enumerate(odd):
            wo = mpmath.exp(-L * gh[o]) * v[o]
            for b, e in enumerate(even):
                B[k, b] = wo / (cs[o] - cs[e])
        Y = -(A * B)
        log_d_oe = mpf(0)
        for o in odd:
            for e in even:
                log_d_oe += mpmath.log(abs(cs[o] - cs[e]))
        log_q_o = sum(mpmath.log(abs(cs[odd[i]] - cs[odd[j]]))
                      for i in range(h) for j in range(i + 1, h))
        log_q_e = sum(mpmath.log(abs(cs[even[i]] - cs[even[j]]))
                      for i in range(h) for j in range(i + 1, h))
        return ResidualSystem(
            M=M, L=L, c=cs, sigma=sig, gamma_hat=gh,
            log_p=log_p, sign_p=sign_p, v=v,
            log_g=log_g, sign_g=sign_g, log_f=log_f, sign_f=sign_f,
            log_d_oe=log_d_oe, log_q_o=log_q_o, log_q_e=log_q_e,
            Y=Y, A=A, B=B, odd=odd, even=even, digits=digits)


def log_zsres(rs):
    """log det(1 + Y): the strip residual part of log Z."""
    with working_dps(rs.digits):
        return log_det_one_plus(rs.Y)


def log_zsres_closed_L0(spectrum, digits=None):
    """Closed product for det(1 + Y) at L = 0; the overall sign is fixed
    positive (it depends only on index bookkeeping)."""
    digits = digits or spectrum.digits
    M, z, t = spectrum.M, spectrum.z, spectrum.t
    with working_dps(digits):
        lam = [m.lam for m in spectrum.modes]
        sig = spectrum.sigma
        zm = pm(z)[1]
        odd = list(range(0, M, 2))
        even = list(range(1, M, 2))
        lg = (M // 2) * mpmath.log(abs(2 * t * zm))
        for o in odd:
            for e in even:
                lg += mpmath.log(abs(lam[o] - lam[e]))
        for mu in range(M):
            lg -= mpmath.log(abs(t * z ** sig[mu] - lam[mu]))
        for group in (odd, even):
            for i in range(len(group)):
                for j in range(i + 1, len(group)):
                    lg -= mpmath.log(abs(1 - lam[group[i]] * lam[group[j]]))
        return lg


def log_strip_part(spectrum, L, rs=None, digits=None):
    """log of the infinite-strip factor [C3 d_oe^2 prod_mu N_mu]^(1/2).

    The per-mode factor is
        N_mu = ((t+ z+ - c)^2 - t-^2 z-^2)/(M lamm_hat^2 + z+ c - t+)
               * lamm_hat / v_mu * lam_hat^L.
    Signs are tracked and the bracket is required to be positive for
    integer L (positivity of Z^2 / det(1+Y)^2).
    """
    digits = digits or spectrum.digits
    M, z, t = spectrum.M, spectrum.z, spectrum.t
    with working_dps(digits):
        L = to_mpf(L)
        if rs is None:
            rs = residual_system(spectrum, L, digits)
        zp, zm = pm(z)
        tp, tm = pm(t)
        hom = HomogeneousCouplings(z=z, t=t)
        lc3, s3 = log_C3(hom, L, M)
        lg = lc3 + 2 * rs.log_d_oe
        sign = s3
        for mu, md in enumerate(spectrum.modes):
            lamm_hat = mpmath.sinh(md.gamma_hat)
            num = (tp * zp - md.c) ** 2 - (tm * zm) ** 2
            den = M * lamm_hat ** 2 + zp * md.c - tp
            term = num / den * lamm_hat / rs.v[mu]
            tl, ts = signed_log(term)
            lg += tl + L * md.gamma_hat
            sign *= ts
        if L == int(L) and sign <= 0:
            raise ConsistencyError("squared strip factor came out negative")
        return lg / 2


def logZ_spectral(L, M, z, t, digits=40):
    """log Z of the homogeneous open rectangle from the factorized form."""
    with working_dps(digits):
        z, t = to_mpf(z), to_mpf(t)
        spectrum = find_modes(z, t, M, digits)
        rs = residual_system(spectrum, L, digits)
        return log_strip_part(spectrum, L, rs, digits) + log_zsres(rs)
