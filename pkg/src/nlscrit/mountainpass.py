"""Mountain-pass level estimates and vanishing-infimum sequences.

Three pieces of machinery:

* an upper estimate of the least energy over the positive-energy part of
  the Pohozaev set, obtained by projecting a soliton-plus-truncated-bubble
  trial family onto that set (the projection of u is its fiber maximum
  u_{tau_minus});

* at the mass-critical exponent, on the borderline mass curve, cutoff
  truncations of the Gagliardo-Nirenberg maximizer whose projected
  energies decrease to zero — computed through tail integrals of the
  cutoff complement, because at large cutoff radii the relevant excess
  (||grad u_n||^2 - mu gamma_q ||u_n||_q^q) sits tens of orders of
  magnitude below the individual norms;

* above the borderline curve, profiles with a prescribed value of the
  Gagliardo-Nirenberg quotient renormalized to unit L^q norm, whose
  excess equals the prescribed offset A_n exactly by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import constants as cst
from . import functionals as fnl
from . import minimize as minmod
from . import profiles
from .grid import Profile, RadialGrid, grad_l2_sq, lq_norm_pow, mass, rescale


# ---------------------------------------------------------------------------
# projection onto the positive-energy Pohozaev set

def project_to_pohozaev_minus(params: cst.ProblemParams, grid: RadialGrid,
                              u: Profile,
                              thresholds: cst.Thresholds | None = None,
                              p_rtol: float = 1e-6) -> Profile:
    """Return u at its fiber maximum, renormalized to mass a, with the
    Pohozaev value of the *resampled* profile re-zeroed by a local root
    find (dilation resampling perturbs P away from the norm-algebra root).
    """
    rep = fnl.fiber_critical_points(params, grid, u, thresholds=thresholds)
    if rep.tau_minus is None:
        raise fnl.RegimeError(
            "no admissible projection: the fiber map is strictly decreasing")
    a = params.a

    def renorm(p: Profile) -> Profile:
        return Profile(grid, p.values * math.sqrt(a / mass(grid, p)))

    def p_of(tau: float) -> float:
        return fnl.pohozaev(params, grid, renorm(rescale(u, tau)))

    t0 = rep.tau_minus
    lo, hi = 0.97 * t0, 1.03 * t0
    plo, phi_ = p_of(lo), p_of(hi)
    k = 0
    while plo * phi_ > 0.0 and k < 12:
        lo *= 0.9
        hi *= 1.1
        plo, phi_ = p_of(lo), p_of(hi)
        k += 1
    if plo * phi_ > 0.0:
        raise RuntimeError("could not re-bracket the Pohozaev root after resampling")
    tau = brentq(p_of, lo, hi, xtol=1e-300, rtol=8.9e-16)
    w = renorm(rescale(u, tau))
    pw = fnl.pohozaev(params, grid, w)
    g2 = grad_l2_sq(grid, w)
    if abs(pw) > p_rtol * g2:
        raise RuntimeError(f"projection quality |P| = {abs(pw):.2e} exceeds "
                           f"{p_rtol:.0e} * ||grad||^2 = {p_rtol * g2:.2e}")
    if fnl.energy(params, grid, w) <= 0.0:
        raise RuntimeError("projected profile has nonpositive energy; "
                           "it does not belong to the positive branch")
    return w


# ---------------------------------------------------------------------------
# mountain-pass level upper estimate

@dataclass(frozen=True)
class MPFamilySpec:
    """Soliton-plus-truncated-bubble superpositions w = u_min + s * bubble_b;
    s = 0 (the bare minimizer's own fiber maximum) is always a member."""

    bubble_widths: tuple = (0.125, 0.25, 0.5, 1.0)
    amplitudes: tuple = (0.0,) + tuple(np.geomspace(0.01, 4.0, 63).tolist())
    cutoff_radius: float = 5.0


@dataclass
class LevelEstimate:
    level: float
    witness: Profile
    m_a: float
    upper_bound: float            # m_a + S^(N/2)/N
    family_trace: list = field(repr=False)   # ((b, s), projected energy)
    accepted: bool = True


def estimate_mp_level(params: cst.ProblemParams, grid: RadialGrid,
                      family: MPFamilySpec | None = None,
                      minimizer: minmod.SolveReport | None = None,
                      thresholds: cst.Thresholds | None = None) -> LevelEstimate:
    """Best projected energy over the trial family; an upper bound for the
    least energy on the positive Pohozaev branch, checked against the
    strict window (0, m_a + S^(N/2)/N)."""
    if thresholds is None:
        thresholds = cst.thresholds(params)
    if thresholds.regime not in (cst.Regime.OMEGA1, cst.Regime.OMEGA2):
        raise fnl.RegimeError("the level estimate requires regime Omega1 or Omega2")
    family = family or MPFamilySpec()
    if 2.0 * family.cutoff_radius > grid.r_max:
        raise ValueError("bubble cutoff support exceeds the grid")
    if minimizer is None:
        minimizer = minmod.minimize_local(params, grid, thresholds=thresholds)
        if not minimizer.converged:
            raise RuntimeError("background minimization did not converge")
    m_a = minimizer.energy
    N = params.dim
    upper = m_a + thresholds.S ** (N / 2.0) / N
    a = params.a
    W = grid.full_weights
    umin = minimizer.final.values

    trace = []
    best = (math.inf, None, None)
    failures = []
    for b in family.bubble_widths:
        bub = profiles.cutoff_profile(
            profiles.aubin_talenti(N, b, grid), family.cutoff_radius)
        for s in family.amplitudes:
            vals = umin + s * bub.values
            vals = vals * math.sqrt(a / float(np.dot(W, vals * vals)))
            w = Profile(grid, vals)
            try:
                rep = fnl.fiber_critical_points(params, grid, w, thresholds=thresholds)
            except (fnl.RegimeError, fnl.StructuralAnomalyError) as exc:
                failures.append((b, s, str(exc)))
                continue
            lev = rep.e_at_tau_minus
            trace.append(((b, s), lev))
            if lev < best[0]:
                best = (lev, b, s)
    if best[1] is None:
        raise RuntimeError(f"family produced no admissible projection: {failures[:4]}")
    level, b_star, s_star = best
    bub = profiles.cutoff_profile(
        profiles.aubin_talenti(N, b_star, grid), family.cutoff_radius)
    vals = umin + s_star * bub.values
    vals = vals * math.sqrt(a / float(np.dot(W, vals * vals)))
    witness = project_to_pohozaev_minus(params, grid, Profile(grid, vals),
                                        thresholds=thresholds)
    accepted = bool(0.0 < level < upper)
    return LevelEstimate(level=level, witness=witness, m_a=m_a,
                         upper_bound=upper, family_trace=trace, accepted=accepted)


# ---------------------------------------------------------------------------
# vanishing-infimum sequences at the mass-critical exponent

@dataclass
class CpoSequenceReport:
    case: int
    parameters: list                  # cutoff radii (case 1) or offsets A_n (case 2)
    ratios: list                      # excess / ||u_n||_{ts}^2, one per item
    projected_energies: list          # (1/N) * ratio^(N/2)
    mass_used: float
    monotone_decreasing: bool
    details: dict = field(default_factory=dict, repr=False)


def _require_critical(params: cst.ProblemParams) -> cst.Exponents:
    ex = cst.exponents(params)
    if ex.q_class != "critical":
        raise fnl.RegimeError("the vanishing-infimum constructions require q = 2 + 4/N")
    return ex


def _one_minus_pow(s: np.ndarray, p: float) -> np.ndarray:
    """1 - (1 - s)^p computed stably for s in [0, 1]."""
    out = np.empty_like(s)
    small = s < 1.0
    out[small] = -np.expm1(p * np.log1p(-s[small]))
    out[~small] = 1.0
    return out


def cpo_sequence_case1(params: cst.ProblemParams, grid: RadialGrid,
                       n_values) -> CpoSequenceReport:
    """Cutoff truncations of the Gagliardo-Nirenberg maximizer on the
    borderline mass curve.

    The mass is constructed from mu so that the *discrete* maximizer sits
    exactly on the curve (mu gamma_q C^q a^((q-2)/2) = 1 with C measured
    from the sampled profile); the excess of each truncation is then a pure
    tail quantity and is evaluated from integrals of the cutoff complement
    only.  Evaluating it as a difference of the full norms instead would
    hit rounding noise already at moderate cutoff radii, since the excess
    decays like exp(-2 kappa n).
    """
    ex = _require_critical(params)
    n_values = sorted(float(v) for v in n_values)
    if not n_values:
        raise ValueError("need at least one cutoff radius")
    if 2.0 * max(n_values) > grid.r_max:
        raise ValueError(f"cutoff support 2*{max(n_values)} exceeds r_max = {grid.r_max}")
    N, q, mu = params.dim, params.q, params.mu
    ts, gam = ex.two_star, ex.gamma_q

    Q = profiles.weinstein_ground_state(N, q, grid)
    mQ = mass(grid, Q)
    g2Q = grad_l2_sq(grid, Q)
    hQ = lq_norm_pow(grid, Q, q)
    # discrete sharp constant of this sampled maximizer
    Cq_disc = hQ / (g2Q ** (q * gam / 2.0) * mQ ** (q * (1.0 - gam) / 2.0))
    # borderline mass: mu gamma C^q a^((q-2)/2) = 1
    a_used = (1.0 / (mu * gam * Cq_disc)) ** (2.0 / (q - 2.0))

    t = math.sqrt(a_used / mQ)
    u = t * Q.values
    g2u = t * t * g2Q
    hu = t ** q * hQ
    su = t ** ts * lq_norm_pow(grid, Q, ts)
    baseline = g2u - mu * gam * hu          # ~1e-15 * g2u by construction

    W = grid.full_weights
    k_int = grid.interval_stiffness
    r = grid.nodes
    uext = np.concatenate([u, [0.0]])

    ratios, energies, checks = [], [], []
    for ncut in n_values:
        phi, sm = profiles.cutoff_factors(r, ncut)
        # tail integrals of the cutoff complement
        dm = float(np.dot(W, sm * (2.0 - sm) * u * u))          # 1 - phi^2
        dh = float(np.dot(W, _one_minus_pow(sm, q) * np.abs(u) ** q))
        ds = float(np.dot(W, _one_minus_pow(sm, ts) * np.abs(u) ** ts))
        # gradient tail: g(u) - g(phi u) via the compact-difference form
        vext = np.concatenate([phi * u, [0.0]])
        wext = np.concatenate([sm * u, [0.0]])                  # (1 - phi) u
        du = np.diff(uext)
        dv = np.diff(vext)
        dwd = np.diff(wext)
        dg = float(np.dot(k_int, dwd * (du + dv)))
        hv = hu - dh
        e2 = dm / (a_used - dm)                                 # c^2 - 1
        c2 = 1.0 + e2
        cq2m1 = math.expm1((q - 2.0) / 2.0 * math.log1p(e2))    # c^(q-2) - 1
        excess = c2 * (mu * gam * dh - dg - mu * gam * hv * cq2m1)
        denom = c2 * (su - ds) ** (2.0 / ts)
        ratio = excess / denom
        ratios.append(ratio)
        energies.append(ratio ** (N / 2.0) / N if ratio > 0.0 else -math.inf)
        checks.append(excess > 0.0)
    monotone = all(b > c for b, c in zip(ratios, ratios[1:])) and all(x > 0 for x in ratios)
    return CpoSequenceReport(case=1, parameters=n_values, ratios=ratios,
                             projected_energies=energies, mass_used=a_used,
                             monotone_decreasing=monotone,
                             details={"baseline_residual": baseline,
                                      "excess_positive": checks,
                                      "C_Nq_pow_q_discrete": Cq_disc})


def _mollifier_bump(r: np.ndarray, center: float = 1.5, half_width: float = 0.5) -> np.ndarray:
    """Smooth compactly supported bump on [center - hw, center + hw]."""
    x = (np.asarray(r) - center) / half_width
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    with np.errstate(over="ignore", under="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def cpo_sequence_case2(params: cst.ProblemParams, grid: RadialGrid,
                       A_values) -> CpoSequenceReport:
    """Profiles with prescribed Gagliardo-Nirenberg quotient above the
    borderline curve.

    For each offset A_n > 0, a profile with quotient
    M_n = (mu gamma_q + A_n) a^((q-2)/2) is found on the one-parameter
    family Q + s * bump by bracketed root finding, then renormalized (in
    exact norm algebra) to mass a and unit L^q norm, after which the
    kinetic excess equals A_n identically.
    """
    ex = _require_critical(params)
    A_values = [float(x) for x in A_values]
    if any(x <= 0.0 for x in A_values) or not A_values:
        raise ValueError("offsets A_n must be positive")
    N, q, mu, a = params.dim, params.q, params.mu, params.a
    ts, gam = ex.two_star, ex.gamma_q

    Q = profiles.weinstein_ground_state(N, q, grid).values
    bump = _mollifier_bump(grid.nodes)
    W = grid.full_weights

    def gn_quotient(vals: np.ndarray) -> float:
        g2 = grad_l2_sq(grid, Profile(grid, vals))
        m2 = float(np.dot(W, vals * vals))
        hq = float(np.dot(W, np.abs(vals) ** q))
        return g2 * m2 ** ((q - 2.0) / 2.0) / hq      # q*gamma_q = 2

    f0 = gn_quotient(Q)                               # = 1 / C^q at the maximizer
    # strict inequality regime required: M_n must exceed the minimum f0
    mass_comb = mu * a ** ((q - 2.0) / 2.0)
    abar_disc = q / 2.0 * f0
    if mass_comb <= abar_disc * (1.0 + 1e-10):
        raise fnl.RegimeError(
            f"case 2 requires mu a^((q-2)/2) strictly above abar "
            f"({mass_comb:.6g} vs {abar_disc:.6g})")

    ratios, energies, identities, l2star = [], [], [], []
    theta = (0.5 - 1.0 / q) / (0.5 - 1.0 / ts)
    lower_2star = a ** (-(1.0 - theta) / (2.0 * theta))
    for A_n in A_values:
        M_n = (mu * gam + A_n) * a ** ((q - 2.0) / 2.0)
        if M_n <= f0:
            raise fnl.RegimeError(f"target quotient {M_n:.6g} is below the minimum {f0:.6g}")

        def objective(s: float) -> float:
            return gn_quotient(Q + s * bump) - M_n

        s_hi = 1.0
        val = objective(s_hi)
        grew = 0
        while val < 0.0 and grew < 60:
            s_hi *= 2.0
            val = objective(s_hi)
            grew += 1
        if val < 0.0:
            reached = gn_quotient(Q + s_hi * bump)
            raise RuntimeError(
                f"could not bracket quotient {M_n:.6g}; family reaches only {reached:.6g}")
        s_root = brentq(objective, 0.0, s_hi, xtol=1e-300, rtol=8.9e-16)
        vals = Q + s_root * bump
        g2 = grad_l2_sq(grid, Profile(grid, vals))
        m2 = float(np.dot(W, vals * vals))
        hq = float(np.dot(W, np.abs(vals) ** q))
        sq = float(np.dot(W, np.abs(vals) ** ts))
        # exact norm algebra of v(x) = alpha u(beta x)
        x = math.sqrt(m2) / (math.sqrt(a) * hq ** (1.0 / q))
        alpha = x ** (N / 2.0) / hq ** (1.0 / q)
        beta = x ** (q / 2.0)
        g2_n = alpha ** 2 * beta ** (2.0 - N) * g2
        hq_n = alpha ** q * beta ** (-N) * hq
        sq_n = alpha ** ts * beta ** (-N) * sq
        excess = g2_n - mu * gam * hq_n
        denom = sq_n ** (2.0 / ts)
        ratio = excess / denom
        ratios.append(ratio)
        energies.append(ratio ** (N / 2.0) / N if ratio > 0.0 else -math.inf)
        identities.append(excess)
        l2star.append(math.sqrt(denom))
    monotone = all(b > c for b, c in zip(ratios, ratios[1:])) and all(x > 0 for x in ratios)
    return CpoSequenceReport(case=2, parameters=A_values, ratios=ratios,
                             projected_energies=energies, mass_used=a,
                             monotone_decreasing=monotone,
                             details={"kinetic_excess": identities,
                                      "l2star_norms": l2star,
                                      "l2star_lower_bound": lower_2star,
                                      "theta": theta,
                                      "gn_quotient_minimum": f0})


# ---------------------------------------------------------------------------
# borderline positivity probe

@dataclass
class PositivityProbeReport:
    min_level: float
    levels: np.ndarray
    low_diagnostics: list   # dicts for the lowest-level witnesses


def omega2_positivity_probe(params: cst.ProblemParams, grid: RadialGrid,
                            trials: int, seed: int = 0,
                            thresholds: cst.Thresholds | None = None
                            ) -> PositivityProbeReport:
    """Random search for low projected energies on the positive Pohozaev
    branch.  Cannot prove positivity of the infimum; it reports the
    smallest level found and, for the lowest witnesses, how close their
    kinetic norm is to rho0 and how close they are to Gagliardo-Nirenberg
    optimality (the mechanism that forces levels near zero)."""
    if thresholds is None:
        thresholds = cst.thresholds(params)
    if thresholds.regime not in (cst.Regime.OMEGA1, cst.Regime.OMEGA2):
        raise fnl.RegimeError("the probe requires regime Omega1 or Omega2")
    rng = np.random.default_rng(seed)
    rho0 = thresholds.rho0
    gam = cst.exponents(params).gamma_q
    levels = np.empty(trials)
    diags = []
    for i in range(trials):
        trial = profiles.random_trial(rng)
        p = trial.profile(grid, params.a)
        rep = fnl.fiber_critical_points(params, grid, p, thresholds=thresholds)
        levels[i] = rep.e_at_tau_minus
        diags.append((rep.e_at_tau_minus, rep.tau_minus, p))
    diags.sort(key=lambda t: t[0])
    low = []
    for lev, tau, p in diags[:5]:
        w = Profile(grid, p.values)
        w = rescale(w, tau)
        w = Profile(grid, w.values * math.sqrt(params.a / mass(grid, w)))
        g2 = grad_l2_sq(grid, w)
        hq = lq_norm_pow(grid, w, params.q)
        gn_ratio = hq ** (1.0 / params.q) / (
            thresholds.C_Nq * g2 ** (gam / 2.0) * params.a ** ((1.0 - gam) / 2.0))
        low.append({"level": lev, "grad_l2_sq": g2,
                    "dist_rho0": abs(g2 - rho0),
                    "gn_optimality": gn_ratio})
    return PositivityProbeReport(min_level=float(levels.min()), levels=levels,
                                 low_diagnostics=low)
