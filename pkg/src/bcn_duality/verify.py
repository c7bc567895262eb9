"""Self-verification suites: every module's invariants as named, runnable checks.

Each check draws its own deterministic sample of couplings and phase points,
evaluates one invariant, and reports the worst observed value against the
declared tolerance.  The registry is grouped into suites (core, lax, duality,
dynamics, scattering); "all" runs everything.  A mutation hook lets the test
suite confirm that deliberately corrupted inputs are caught rather than
silently absorbed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import core, duality, dynamics, laxops, scattering
from .core import Couplings, PhasePointR, PhasePointS
from .matengine import DEFAULT_PRECISION

SUITES = ("core", "lax", "duality", "dynamics", "scattering")


@dataclass
class CheckContext:
    rng: np.random.Generator
    n_max: int
    mutations: frozenset
    prec: object


@dataclass
class CheckOutcome:
    check_id: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


_REGISTRY: list[tuple[str, str]] = []
_FUNCS = {}


def _check(check_id: str, suite: str):
    def deco(fn):
        _REGISTRY.append((check_id, suite))
        _FUNCS[check_id] = fn
        return fn
    return deco


# ---------------------------------------------------------------------------
# deterministic samplers
# ---------------------------------------------------------------------------

def sample_chamber(rng, n, gap_lo=0.4, gap_hi=1.2, floor=0.5):
    gaps = rng.uniform(gap_lo, gap_hi, n)
    x = floor + np.cumsum(gaps)
    return x[::-1].copy()


def sample_couplings(rng) -> Couplings:
    mu = rng.uniform(-1.5, -0.6)
    nu = rng.uniform(0.6, 1.5)
    kappa = rng.choice([0.0, rng.uniform(0.3, 1.0), nu])
    return Couplings(mu=mu, nu=nu, kappa=float(kappa))


def sample_point_S(rng, n) -> PhasePointS:
    return PhasePointS(q=sample_chamber(rng, n), p=rng.uniform(-1.5, 1.5, n))


def sample_point_R(rng, n) -> PhasePointR:
    return PhasePointR(lam=sample_chamber(rng, n), theta=rng.uniform(-1.5, 1.5, n))


def _worst(check_id, tol, pairs, detail=""):
    value = max(pairs) if pairs else 0.0
    return CheckOutcome(check_id=check_id, passed=bool(value <= tol),
                        value=float(value), tolerance=tol, detail=detail)


# ---------------------------------------------------------------------------
# core suite
# ---------------------------------------------------------------------------

@_check("core.alpha_beta_identities", "core")
def _chk_alpha_beta(ctx):
    worst = []
    for _ in range(200):
        x = float(ctx.rng.uniform(0.05, 10.0))
        kap = float(ctx.rng.uniform(0.0, 3.0))
        al, be = core.alpha_beta(x, kap)
        worst.append(abs(al ** 2 + be ** 2 - 1))
        worst.append(abs(al ** 2 - be ** 2 - np.sqrt(1 + kap ** 2 / x ** 2)))
        worst.append(abs(2 * al * be - 1j * kap / x))
    return _worst("core.alpha_beta_identities", 1e-13, worst)


@_check("core.h_inverse_square", "core")
def _chk_h_closed_form(ctx):
    worst = []
    for n in range(1, min(ctx.n_max, 8) + 1):
        c = sample_couplings(ctx.rng)
        lam = sample_chamber(ctx.rng, n)
        h = core.build_h(lam, c)
        hinv2 = np.linalg.matrix_power(np.linalg.inv(h), 2)
        closed = core.h_inv_sq_closed_form(lam, c)
        worst.append(np.linalg.norm(hinv2 - closed, 2) / np.linalg.norm(closed, 2))
    return _worst("core.h_inverse_square", 1e-12, worst)


@_check("core.xi_anti_hermitian", "core")
def _chk_xi(ctx):
    worst = []
    for _ in range(25):
        n = int(ctx.rng.integers(1, ctx.n_max + 1))
        c = sample_couplings(ctx.rng)
        V = ctx.rng.normal(size=2 * n) + 1j * ctx.rng.normal(size=2 * n)
        xi = core.build_xi(V, c)
        worst.append(np.linalg.norm(xi + xi.conj().T, 2) / max(1.0, np.linalg.norm(xi, 2)))
    return _worst("core.xi_anti_hermitian", 1e-13, worst)


@_check("core.delta_pair_structure", "core")
def _chk_delta_pairs(ctx):
    # the antisymmetric (lam_a - lam_b) log terms cancel in sum_a Delta_a
    worst = []
    for n in range(2, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        lam = sample_chamber(ctx.rng, n)
        total = np.sum(core.delta_phase(lam, c))
        one, _, pair_sum = core.delta_decomposition(lam, c)
        reduced = float(np.sum(one) + 0.5 * np.sum(pair_sum))
        worst.append(abs(total - reduced) / max(1.0, abs(total)))
    return _worst("core.delta_pair_structure", 1e-12, worst)


@_check("core.chamber_rules", "core")
def _chk_chamber(ctx):
    ok = (core.validate_chamber([3.0, 2.0, 1.0])
          and not core.validate_chamber([1.0, 2.0])
          and not core.validate_chamber([2.0, 2.0])
          and not core.validate_chamber([2.0, 1.0, -0.5]))
    return CheckOutcome("core.chamber_rules", ok, 0.0 if ok else 1.0, 0.5)


# ---------------------------------------------------------------------------
# lax suite
# ---------------------------------------------------------------------------

@_check("lax.energy_pullback_sutherland", "lax")
def _chk_pullback_S(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        for _ in range(6):
            c = sample_couplings(ctx.rng)
            pt = sample_point_S(ctx.rng, n)
            L = laxops.build_lax_S(pt, c).L
            H = laxops.hamiltonian_S(pt, c)
            worst.append(abs(0.25 * np.trace(L @ L).real - H) / max(1.0, abs(H)))
    return _worst("lax.energy_pullback_sutherland", 1e-10, worst)


@_check("lax.energy_pullback_rsvd", "lax")
def _chk_pullback_R(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        for _ in range(6):
            c = sample_couplings(ctx.rng)
            pt = sample_point_R(ctx.rng, n)
            acal = laxops.build_lax_R(pt, c).acal
            hinv2 = core.h_inv_sq_closed_form(pt.lam, c)
            H = laxops.hamiltonian_R(pt, c)
            worst.append(abs(0.5 * np.trace(acal @ hinv2).real - H) / max(1.0, abs(H)))
    return _worst("lax.energy_pullback_rsvd", 1e-10, worst)


@_check("lax.momentum_map_sutherland", "lax")
def _chk_momentum_S(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        worst.append(laxops.momentum_residual_S(sample_point_S(ctx.rng, n), c))
    return _worst("lax.momentum_map_sutherland", 1e-9, worst)


@_check("lax.momentum_map_rsvd", "lax")
def _chk_momentum_R(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        worst.append(laxops.momentum_residual_R(sample_point_R(ctx.rng, n), c))
    return _worst("lax.momentum_map_rsvd", 1e-9, worst)


@_check("lax.minor_identity", "lax")
def _chk_minor_identity(ctx):
    delta_fn = None
    if "delta-sign" in ctx.mutations:
        delta_fn = lambda lam, c: -core.delta_phase(lam, c)
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_R(ctx.rng, n)
        worst.append(np.max(np.abs(laxops.cauchy_minor_check(pt, c, delta_fn=delta_fn))))
    return _worst("lax.minor_identity", 1e-10, worst,
                  detail="ln m_a + 2 theta_a - Delta_a")


@_check("lax.cauchy_determinant", "lax")
def _chk_cauchy_det(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_R(ctx.rng, n)
        worst.append(np.max(laxops.cauchy_determinant_error(pt, c)))
    return _worst("lax.cauchy_determinant", 1e-10, worst)


@_check("lax.abc_inversion_spectrum", "lax")
def _chk_abc_spectrum(ctx):
    # sigma(A_BC) is closed under x -> 1/x: paired log singular values of the
    # dressed factor sum to 0.  Extended precision: double cannot resolve the
    # smallest eigenvalues to 1e-10 relative once the dual positions spread
    # beyond a few units.
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_R(ctx.rng, n)
        logs, _ = duality.dressed_log_svd_mp(pt.lam, pt.theta, c)
        worst.append(np.max(np.abs(np.expm1(2 * (logs + logs[::-1])))))
    return _worst("lax.abc_inversion_spectrum", 1e-10, worst)


# ---------------------------------------------------------------------------
# duality suite
# ---------------------------------------------------------------------------

@_check("duality.roundtrip_r_s_r", "duality")
def _chk_roundtrip_rsr(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        for _ in range(4):
            c = sample_couplings(ctx.rng)
            pt = sample_point_R(ctx.rng, n)
            back = duality.dualize_R_to_S(pt, c, ctx.prec)
            fwd = duality.dualize_S_to_R(back.point, c, ctx.prec)
            worst.append(max(np.max(np.abs(fwd.point.lam - pt.lam)),
                             np.max(np.abs(fwd.point.theta - pt.theta))))
    return _worst("duality.roundtrip_r_s_r", 1e-8, worst)


@_check("duality.roundtrip_s_r_s", "duality")
def _chk_roundtrip_srs(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        for _ in range(4):
            c = sample_couplings(ctx.rng)
            pt = sample_point_S(ctx.rng, n)
            fwd = duality.dualize_S_to_R(pt, c, ctx.prec)
            back = duality.dualize_R_to_S(fwd.point, c, ctx.prec)
            worst.append(max(np.max(np.abs(back.point.q - pt.q)),
                             np.max(np.abs(back.point.p - pt.p))))
    return _worst("duality.roundtrip_s_r_s", 1e-8, worst)


@_check("duality.energy_in_actions", "duality")
def _chk_energy_actions(ctx):
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_S(ctx.rng, n)
        lam = duality.dualize_S_to_R(pt, c, ctx.prec).point.lam
        H = laxops.hamiltonian_S(pt, c)
        worst.append(abs(H - 0.5 * np.sum(lam ** 2)) / max(1.0, abs(H)))
    return _worst("duality.energy_in_actions", 1e-10, worst)


@_check("duality.spectrum_consistency", "duality")
def _chk_spectrum_consistency(ctx):
    # the dressed Lax spectrum at S(q, p) must be {e^(+-2 q_a)}; compared as
    # logs from the extended-precision dressed factor, so the check measures
    # the duality map rather than double-SVD limits on the small half
    worst = []
    for n in range(1, ctx.n_max + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_S(ctx.rng, n)
        fwd = duality.dualize_S_to_R(pt, c, ctx.prec)
        logs, _ = duality.dressed_log_svd_mp(fwd.point.lam, fwd.point.theta, c)
        expect = np.sort(np.concatenate([pt.q, -pt.q]))[::-1]
        worst.append(np.max(np.abs(np.expm1(2 * (logs - expect)))))
    return _worst("duality.spectrum_consistency", 1e-10, worst)


@_check("duality.symplectic_forward", "duality")
def _chk_symplectic_fwd(ctx):
    worst = []
    for n in range(1, min(3, ctx.n_max) + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_S(ctx.rng, n)
        cert = duality.symplecticity_certificate(
            duality.forward_map_packed(c, ctx.prec), duality.pack_S(pt))
        worst.append(cert)
    return _worst("duality.symplectic_forward", 1e-5, worst)


@_check("duality.symplectic_backward", "duality")
def _chk_symplectic_bwd(ctx):
    worst = []
    for n in range(1, min(3, ctx.n_max) + 1):
        c = sample_couplings(ctx.rng)
        pt = sample_point_R(ctx.rng, n)
        cert = duality.symplecticity_certificate(
            duality.backward_map_packed(c, ctx.prec), duality.pack_R(pt))
        worst.append(cert)
    return _worst("duality.symplectic_backward", 1e-5, worst)


# ---------------------------------------------------------------------------
# dynamics suite
# ---------------------------------------------------------------------------

@_check("dynamics.method_agreement_sutherland", "dynamics")
def _chk_agree_S(ctx):
    n = min(2, ctx.n_max)
    c = sample_couplings(ctx.rng)
    pt = sample_point_S(ctx.rng, n)
    grid = dynamics.TimeGrid.linspace(-5.0, 5.0, 21)
    td = dynamics.solve_sutherland(pt, grid, c, method="duality", prec=ctx.prec)
    to = dynamics.solve_sutherland(pt, grid, c, method="ode", prec=ctx.prec)
    sup = max(np.max(np.abs(td.positions - to.positions)),
              np.max(np.abs(td.momenta - to.momenta)))
    return _worst("dynamics.method_agreement_sutherland", 1e-6, [sup])


@_check("dynamics.method_agreement_rsvd", "dynamics")
def _chk_agree_R(ctx):
    n = min(2, ctx.n_max)
    c = sample_couplings(ctx.rng)
    pt = sample_point_R(ctx.rng, n)
    grid = dynamics.TimeGrid.linspace(-3.0, 3.0, 13)
    td = dynamics.solve_rsvd(pt, grid, c, method="duality", prec=ctx.prec)
    to = dynamics.solve_rsvd(pt, grid, c, method="ode", prec=ctx.prec)
    sup = max(np.max(np.abs(td.positions - to.positions)),
              np.max(np.abs(td.momenta - to.momenta)))
    return _worst("dynamics.method_agreement_rsvd", 1e-6, [sup])


@_check("dynamics.energy_conservation", "dynamics")
def _chk_energy(ctx):
    n = min(3, ctx.n_max)
    c = sample_couplings(ctx.rng)
    grid = dynamics.TimeGrid.linspace(-10.0, 10.0, 21)
    worst = []
    tS = dynamics.solve_sutherland(sample_point_S(ctx.rng, n), grid, c,
                                   method="ode", prec=ctx.prec)
    worst.append(tS.diagnostics["energy_drift"] / max(1.0, abs(tS.energies[0])))
    tR = dynamics.solve_rsvd(sample_point_R(ctx.rng, n), grid, c,
                             method="ode", prec=ctx.prec)
    worst.append(tR.diagnostics["energy_drift"] / max(1.0, abs(tR.energies[0])))
    return _worst("dynamics.energy_conservation", 1e-8, worst)


@_check("dynamics.actions_conserved", "dynamics")
def _chk_actions(ctx):
    n = min(2, ctx.n_max)
    c = sample_couplings(ctx.rng)
    grid = dynamics.TimeGrid.linspace(-5.0, 5.0, 11)
    worst = []
    tS = dynamics.solve_sutherland(sample_point_S(ctx.rng, n), grid, c,
                                   method="ode", prec=ctx.prec)
    acts = dynamics.conserved_actions(tS, c, ctx.prec)
    worst.append(np.max(np.abs(acts - acts[len(grid) // 2])))
    tR = dynamics.solve_rsvd(sample_point_R(ctx.rng, n), grid, c,
                             method="ode", prec=ctx.prec)
    acts = dynamics.conserved_actions(tR, c, ctx.prec)
    worst.append(np.max(np.abs(acts - acts[len(grid) // 2])))
    return _worst("dynamics.actions_conserved", 1e-8, worst)


@_check("dynamics.eigenflow_sutherland", "dynamics")
def _chk_eigenflow_S(ctx):
    # positions flow vs the dressed linear matrix flow, spectrum-level
    n = min(3, ctx.n_max)
    c = sample_couplings(ctx.rng)
    pt = sample_point_S(ctx.rng, n)
    fwd = duality.dualize_S_to_R(pt, c, ctx.prec)
    lam, th = fwd.point.lam, fwd.point.theta
    d = laxops.theta_scaling(th)
    acal = d[:, None] * laxops.rsvd_kernel(lam, c) * d[None, :]
    dfull = np.concatenate([lam, -lam])
    sq = np.diag(np.sqrt(1 + c.kappa ** 2 / dfull ** 2))
    X = 1j * c.kappa * acal @ core.build_C(n) @ np.diag(1.0 / dfull)
    worst = []
    # the lower spectrum half is reciprocal-paired with the top, so the top n
    # eigenvalues carry all independent content; comparing them keeps the
    # check inside the general eigensolver's accuracy envelope
    for t in (-2.0, -0.7, 0.7, 2.0):
        q_t, _, _, _ = duality._r_to_s_arrays(lam, th - t * lam, c, ctx.prec)
        lhs = np.sort(np.exp(2 * q_t))[::-1]
        flow = acal @ sq @ np.diag(np.exp(2 * t * dfull)) + X
        rhs = np.sort(np.linalg.eigvals(flow).real)[::-1][:n]
        worst.append(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    return _worst("dynamics.eigenflow_sutherland", 1e-8, worst)


@_check("dynamics.eigenflow_rsvd", "dynamics")
def _chk_eigenflow_R(ctx):
    n = min(3, ctx.n_max)
    c = sample_couplings(ctx.rng)
    pt = sample_point_R(ctx.rng, n)
    lax = laxops.build_lax_R(pt, c)
    h = core.build_h(pt.lam, c)
    hlh = h @ core.build_Lambda(pt.lam) @ np.linalg.inv(h)
    back = duality.dualize_R_to_S(pt, c, ctx.prec)
    q, p = back.point.q, back.point.p
    worst = []
    for t in (-2.0, 1.0, 2.0):
        pt_s = PhasePointS(q=q, p=p - 2 * t * np.sinh(2 * q))
        L = laxops.build_lax_S(pt_s, c).L
        lhs = np.sort(np.linalg.eigvals(L).real)
        flow = hlh - t * (lax.abc - np.linalg.inv(lax.abc))
        rhs = np.sort(np.linalg.eigvals(flow).real)
        worst.append(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)))
    return _worst("dynamics.eigenflow_rsvd", 1e-8, worst)


# ---------------------------------------------------------------------------
# scattering suite
# ---------------------------------------------------------------------------

def _scatter_fixture(ctx, n):
    c = Couplings(mu=-1.0, nu=1.3, kappa=0.5)
    lam = np.array([3.4, 2.2, 1.0][:n]) if n <= 3 else sample_chamber(ctx.rng, n, 1.0, 1.2)
    th = np.array([0.3, -0.5, 0.6][:n])
    return c, PhasePointR(lam=lam, theta=th)


@_check("scattering.pure_soliton_momenta", "scattering")
def _chk_pure_soliton(ctx):
    # fitted asymptotic momenta equal +lambda at +inf and -lambda at -inf
    n = min(2, ctx.n_max)
    c, ptR = _scatter_fixture(ctx, n)
    pt = duality.dualize_R_to_S(ptR, c, ctx.prec).point
    fwd = duality.dualize_S_to_R(pt, c, ctx.prec)
    T = 8.0 / min(float(np.min(-np.diff(fwd.point.lam))) if n > 1 else np.inf,
                  2 * float(fwd.point.lam[-1]))
    grid = dynamics.TimeGrid(np.concatenate([np.linspace(-2 * T, -T, 17),
                                             np.linspace(T, 2 * T, 17)]))
    traj = dynamics.solve_sutherland(pt, grid, c, method="duality", prec=ctx.prec)
    worst = []
    for side, sgn in (("+", +1), ("-", -1)):
        fit = scattering.fit_linear_asymptote(traj, side=side)
        worst.append(np.max(np.abs(fit.slope - sgn * fwd.point.lam)))
    return _worst("scattering.pure_soliton_momenta", 1e-6, worst)


@_check("scattering.wave_vs_fit", "scattering")
def _chk_wave_vs_fit(ctx):
    n = min(2, ctx.n_max)
    c, ptR = _scatter_fixture(ctx, n)
    pt = duality.dualize_R_to_S(ptR, c, ctx.prec).point
    lam = duality.dualize_S_to_R(pt, c, ctx.prec).point.lam
    T = 8.0 / min(float(np.min(-np.diff(lam))) if n > 1 else np.inf, 2 * float(lam[-1]))
    grid = dynamics.TimeGrid(np.concatenate([np.linspace(-2 * T, -T, 17),
                                             np.linspace(T, 2 * T, 17)]))
    traj = dynamics.solve_sutherland(pt, grid, c, method="duality", prec=ctx.prec)
    worst = []
    for side in ("+", "-"):
        fit = scattering.fit_linear_asymptote(traj, side=side)
        wave = scattering.wave_map_S(pt, c, side=side, prec=ctx.prec)
        worst.append(np.max(np.abs(fit.intercept - wave.x)))
        worst.append(np.max(np.abs(fit.slope - wave.y)))
    return _worst("scattering.wave_vs_fit", 1e-6, worst)


@_check("scattering.smap_composition", "scattering")
def _chk_smap_composition(ctx):
    worst = []
    for n in range(1, min(3, ctx.n_max) + 1):
        c = sample_couplings(ctx.rng)
        ptS = sample_point_S(ctx.rng, n)
        w_minus = scattering.wave_map_S(ptS, c, side="-", prec=ctx.prec)
        w_plus = scattering.wave_map_S(ptS, c, side="+", prec=ctx.prec)
        out = scattering.scattering_map_S(w_minus, c)
        worst.append(max(np.max(np.abs(out.x - w_plus.x)),
                         np.max(np.abs(out.y - w_plus.y))))
        ptR = sample_point_R(ctx.rng, n)
        w_minus = scattering.wave_map_R(ptR, c, side="-", prec=ctx.prec)
        w_plus = scattering.wave_map_R(ptR, c, side="+", prec=ctx.prec)
        out = scattering.scattering_map_R(w_minus)
        worst.append(max(np.max(np.abs(out.x - w_plus.x)),
                         np.max(np.abs(out.y - w_plus.y))))
    return _worst("scattering.smap_composition", 1e-10, worst)


@_check("scattering.factorized_phase_shift", "scattering")
def _chk_factorized(ctx):
    # q^+ + q^- recovers Delta_a(lambda), which splits into one- and two-body terms
    n = min(2, ctx.n_max)
    c, ptR = _scatter_fixture(ctx, n)
    pt = duality.dualize_R_to_S(ptR, c, ctx.prec).point
    fwd = duality.dualize_S_to_R(pt, c, ctx.prec)
    lam = fwd.point.lam
    T = 8.0 / min(float(np.min(-np.diff(lam))) if n > 1 else np.inf, 2 * float(lam[-1]))
    grid = dynamics.TimeGrid(np.concatenate([np.linspace(-2 * T, -T, 17),
                                             np.linspace(T, 2 * T, 17)]))
    traj = dynamics.solve_sutherland(pt, grid, c, method="duality", prec=ctx.prec)
    fit_p = scattering.fit_linear_asymptote(traj, side="+")
    fit_m = scattering.fit_linear_asymptote(traj, side="-")
    total_shift = fit_p.intercept + fit_m.intercept
    one, pair_diff, pair_sum = core.delta_decomposition(lam, c)
    rebuilt = one.copy()
    for a in range(n):
        for b in range(n):
            if b != a:
                rebuilt[a] += (0.5 if b > a else -0.5) * pair_diff[a, b] \
                    + 0.5 * pair_sum[a, b]
    worst = [np.max(np.abs(total_shift - rebuilt))]
    return _worst("scattering.factorized_phase_shift", 1e-6, worst)


@_check("scattering.decay_rates", "scattering")
def _chk_decay(ctx):
    n = min(2, ctx.n_max)
    c, ptR = _scatter_fixture(ctx, n)
    ptS = duality.dualize_R_to_S(ptR, c, ctx.prec).point
    repS = scattering.verify_decay_rates(ptS, c, "sutherland", prec=ctx.prec)
    repR = scattering.verify_decay_rates(ptR, c, "rsvd", prec=ctx.prec)
    ok = repS.passed and repR.passed
    return CheckOutcome("scattering.decay_rates", ok, 0.0 if ok else 1.0, 0.5,
                        detail=f"sutherland={repS.passed} rsvd={repR.passed}")


@_check("scattering.smap_symplectic", "scattering")
def _chk_smap_symplectic(ctx):
    worst = []
    for n in range(1, min(3, ctx.n_max) + 1):
        c = sample_couplings(ctx.rng)
        lam = sample_chamber(ctx.rng, n)
        state = np.concatenate([ctx.rng.uniform(-1, 1, n), -lam])  # incoming ordering
        worst.append(duality.symplecticity_certificate(
            scattering.scattering_map_S_packed(c), state))
        worst.append(duality.symplecticity_certificate(
            scattering.scattering_map_R_packed(), state))
    return _worst("scattering.smap_symplectic", 1e-5, worst)


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

def run_suite(suite: str = "all", n_max: int = 6, seed: int = 2024,
              mutations=(), prec=DEFAULT_PRECISION) -> dict:
    """Run one suite (or all) and return a JSON-serializable report."""
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    t0 = time.perf_counter()
    outcomes = []
    for check_id, check_suite in _REGISTRY:
        if suite != "all" and check_suite != suite:
            continue
        ctx = CheckContext(rng=np.random.default_rng(seed),
                           n_max=n_max, mutations=frozenset(mutations), prec=prec)
        try:
            outcomes.append(_FUNCS[check_id](ctx))
        except Exception as exc:  # a crashed check is a failed check
            outcomes.append(CheckOutcome(check_id=check_id, passed=False,
                                         value=float("nan"), tolerance=0.0,
                                         detail=f"{type(exc).__name__}: {exc}"))
    elapsed = time.perf_counter() - t0
    return {
        "suite": suite,
        "n_max": n_max,
        "seed": seed,
        "passed": all(o.passed for o in outcomes),
        "failed_ids": [o.check_id for o in outcomes if not o.passed],
        "elapsed_seconds": elapsed,
        "checks": [{"id": o.check_id, "passed": o.passed, "value": o.value,
                    "tolerance": o.tolerance, "detail": o.detail}
                   for o in outcomes],
    }
