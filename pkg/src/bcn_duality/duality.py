"""The action-angle duality map S: (q, p) <-> (lambda, theta) and its certifier.

Both directions reduce to diagonalization.  Backward (R -> S): the dressed Lax
matrix A_BC factorizes as G G* with G = h^-1 D_theta K(lambda)^(1/2), so the
singular values of G are e^(q_a) and the left singular vectors recover p_a
through the quadratic form with h Lambda h^-1.  Forward (S -> R): lambda is
the positive half of the spectrum of L(q, p); theta has no closed form and is
seeded from the temporal asymptotics of the free flow e^Q e^(tL), then
polished by Newton iteration on the backward map.

The seeding balances two error sources: the asymptotic tail decays like
e^(-2 t gap_a) while double-precision SVD noise on the a-th singular value
grows like eps * e^(t (lam_1 - lam_a)).  Each coordinate therefore gets its
own evaluation time t_a = B / (2 gap_a + lam_1 - lam_a) with B ~ -ln(eps),
instead of one global time; a global choice makes the seed unusable once the
spectral spread exceeds a couple of gaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from . import core, laxops
from .core import ChamberError, Couplings, PhasePointR, PhasePointS
from .matengine import (DEFAULT_PRECISION, PrecisionConfig,
                        eig_general_real_spectrum, finite_diff_jacobian,
                        sqrt_posdef)

#: target total exponent budget for the theta seed (about -ln of double eps)
SEED_EXPONENT_BUDGET = 36.0

#: above this seed residual (in position units) the seed is considered failed
SEED_ERROR_LIMIT = 0.5

#: seeds worse than this (position units) may sit outside the Newton basin of
#: the correct branch: q(lambda, .) has 2^n discrete solutions related by
#: theta sign flips (the p -> -p reflections), and only one matches p
SEED_BASIN_LIMIT = 0.05

NEWTON_TOL = 1e-10
NEWTON_TARGET = 1e-12
NEWTON_MAX_ITERS = 25

#: pairs of singular values smaller than this fraction of the largest carry
#: too much rounding noise for the inversion-pairing check to be meaningful
PAIR_CHECK_FLOOR = 1e-8


class DualityError(RuntimeError):
    pass


class SeedError(DualityError):
    """The asymptotic theta seed could not be brought inside the Newton basin."""


class NewtonError(DualityError):
    """Newton polish failed to reach the roundtrip tolerance."""


@dataclass(frozen=True)
class DualityDiagnostics:
    spectrum_imag_max: float
    newton_iters: int
    seed_error: float


@dataclass(frozen=True)
class DualityResult:
    point: PhasePointS | PhasePointR
    diagnostics: DualityDiagnostics


# ---------------------------------------------------------------------------
# backward map (R -> S)
# ---------------------------------------------------------------------------

def dressed_factor(lam: np.ndarray, theta: np.ndarray, c: Couplings,
                   prec: PrecisionConfig = DEFAULT_PRECISION,
                   shift: float = 0.0) -> np.ndarray:
    """G = h^-1 D_theta K^(1/2) with the exponents of D reduced by shift.

    The dressed Lax matrix is G G*, so sigma(G) = {e^(+-q_a - shift)}.
    """
    K = laxops.rsvd_kernel(lam, c)
    Ksq = sqrt_posdef(K, prec)
    hinv = np.linalg.inv(core.build_h(lam, c))
    d = np.exp(np.concatenate([-theta, theta]) - shift)
    return hinv @ (d[:, None] * Ksq)


def _mp_kernel(lam, c: Couplings):
    """theta = 0 Lax matrix rebuilt entirely at working precision.

    Must run inside an mpmath.workprec context.  Rebuilding from (lam, c) is
    essential: upcasting the double-precision kernel (or its square root)
    carries the double rounding of its small eigendirections along, and the
    condition number of the kernel makes those the accuracy bottleneck.
    """
    n = len(lam)
    I = mpmath.mpc(0, 1)
    lam_v = [mpmath.mpf(float(x)) for x in lam]
    mu, nu = mpmath.mpf(c.mu), mpmath.mpf(c.nu)
    z = []
    for a in range(n):
        val = -(1 + I * nu / lam_v[a])
        for b in range(n):
            if b != a:
                val *= (1 + 2 * I * mu / (lam_v[a] - lam_v[b])) \
                    * (1 + 2 * I * mu / (lam_v[a] + lam_v[b]))
        z.append(val)
    az = [abs(zz) for zz in z]
    tiu = 2 * I * mu
    K = mpmath.matrix(2 * n, 2 * n)
    for a in range(n):
        for b in range(n):
            K[a, b] = mpmath.sqrt(az[a] * az[b]) * tiu / (tiu + lam_v[a] - lam_v[b])
            K[n + a, n + b] = (mpmath.conj(z[a]) * z[b] / mpmath.sqrt(az[a] * az[b])) \
                * tiu / (tiu - lam_v[a] + lam_v[b])
            K[a, n + b] = z[b] * mpmath.sqrt(az[a] / az[b]) \
                * tiu / (tiu + lam_v[a] + lam_v[b])
            if a == b:
                K[a, n + b] += I * (mu - nu) / (I * mu + lam_v[a])
            K[n + b, a] = mpmath.conj(K[a, n + b])
    return K, lam_v


def dressed_log_svd_mp(lam: np.ndarray, theta: np.ndarray, c: Couplings,
                       bits: int = 128, want_vectors: bool = False):
    """Extended-precision singular data of the dressed Lax factor
    G = h^-1 D_theta K^(1/2).

    Everything (kernel, square root, dressing, product, SVD) is evaluated at
    the requested precision, treating (lam, theta) as exact.  h^-1 = C h C
    because h is Hermitian and group-valued, so no inversion is needed.
    Returns (ln sigma sorted descending, U or None) with U in complex128.
    """
    from .matengine import _np_from_mp
    n = lam.size
    kappa = mpmath.mpf(c.kappa)
    with mpmath.workprec(bits):
        K, lam_v = _mp_kernel(lam, c)
        E, Q = mpmath.eighe(K)
        if min(E[k] for k in range(2 * n)) <= 0:
            raise DualityError("kernel matrix lost positive definiteness")
        root = [mpmath.sqrt(E[k]) for k in range(2 * n)]
        Ksq = Q * mpmath.diag(root) * Q.H
        al, be = [], []
        for a in range(n):
            s = mpmath.sqrt(lam_v[a] + mpmath.sqrt(lam_v[a] ** 2 + kappa ** 2))
            r = mpmath.sqrt(2 * lam_v[a])
            al.append(s / r)
            be.append(mpmath.mpc(0, 1) * kappa / (r * s))
        G = mpmath.matrix(2 * n, 2 * n)
        expo = [mpmath.exp(-mpmath.mpf(float(t))) for t in theta] \
            + [mpmath.exp(mpmath.mpf(float(t))) for t in theta]
        for j in range(2 * n):
            for a in range(n):
                # h^-1 = C h C swaps the off-diagonal block signs
                G[a, j] = al[a] * expo[a] * Ksq[a, j] - be[a] * expo[n + a] * Ksq[n + a, j]
                G[n + a, j] = be[a] * expo[a] * Ksq[a, j] + al[a] * expo[n + a] * Ksq[n + a, j]
        if want_vectors:
            U, S, _ = mpmath.svd_c(G)
            logs = np.array([float(mpmath.log(S[k])) for k in range(2 * n)])
            return logs, _np_from_mp(U, (2 * n, 2 * n))
        S = mpmath.svd_c(G, compute_uv=False)
        logs = np.array([float(mpmath.log(S[k])) for k in range(2 * n)])
    return logs, None


def _r_to_s_arrays(lam: np.ndarray, theta: np.ndarray, c: Couplings,
                   prec: PrecisionConfig = DEFAULT_PRECISION):
    """Raw backward map on arrays; returns (q, p, imag_max, pair_residual)."""
    n = lam.size
    if prec.mode == "extended":
        logs, U = dressed_log_svd_mp(lam, theta, c, prec.bits, want_vectors=True)
        q = logs[:n].copy()
        pair_res = float(np.max(np.abs(logs + logs[::-1])))
        if pair_res > 1e-6:
            raise DualityError(
                f"spectrum is not inversion-symmetric (log-pairing residual {pair_res:.3e})")
    else:
        # exponent shift keeps e^(+-theta) representable for trajectory times
        shift = max(0.0, float(np.max(np.abs(theta))) - 300.0)
        G = dressed_factor(lam, theta, c, prec, shift=shift)
        U, sv, _ = np.linalg.svd(G)
        if sv[n - 1] <= 0.0:
            raise DualityError("dressed Lax factor is numerically rank deficient")
        q = np.log(sv[:n]) + shift
        # spectrum of A_BC is closed under inversion; verify on the pairs whose
        # smaller member is still accurately representable
        pair_res = 0.0
        for a in range(n):
            lo = sv[2 * n - 1 - a]
            if lo >= PAIR_CHECK_FLOOR * sv[0]:
                pair_res = max(pair_res, abs(np.log(sv[a]) + np.log(lo) + 2 * shift))
        if pair_res > 1e-6:
            raise DualityError(
                f"spectrum is not inversion-symmetric (log-pairing residual {pair_res:.3e})")
    h = core.build_h(lam, c)
    HLH = h @ core.build_Lambda(lam) @ np.linalg.inv(h)
    forms = np.array([U[:, a].conj() @ HLH @ U[:, a] for a in range(n)])
    imag_max = float(np.max(np.abs(forms.imag)))
    if imag_max > 1e-9 * max(1.0, float(lam[0])):
        raise DualityError(
            f"momentum extraction left imaginary residue {imag_max:.3e}"
        )
    return q, forms.real.copy(), imag_max, pair_res


def dualize_R_to_S(pt: PhasePointR, c: Couplings,
                   prec: PrecisionConfig = DEFAULT_PRECISION) -> DualityResult:
    """The inverse duality map: (lambda, theta) -> (q, p).

    q_a comes from the top-half singular spectrum of the dressed Lax factor,
    p_a from the eigenvector quadratic form with h Lambda h^-1 (the eigenvector
    phase ambiguity cancels there).
    """
    q, p, imag_max, _ = _r_to_s_arrays(pt.lam, pt.theta, c, prec)
    try:
        point = PhasePointS(q=q, p=p)
    except ChamberError as exc:
        raise ChamberError(f"dual positions left the chamber: {exc}") from exc
    return DualityResult(point=point,
                         diagnostics=DualityDiagnostics(imag_max, 0, 0.0))


# ---------------------------------------------------------------------------
# forward map (S -> R)
# ---------------------------------------------------------------------------

def _free_flow_log_positions(eq: np.ndarray, V: np.ndarray, Vinv: np.ndarray,
                             ev: np.ndarray, t: float, a: int,
                             prec: PrecisionConfig = DEFAULT_PRECISION) -> float:
    """ln of the a-th largest singular value of e^Q V e^(t D) V^-1, computed
    with the top eigenvalue scaled out."""
    expo = t * (ev - ev[0])
    if prec.mode == "extended":
        with mpmath.workprec(prec.bits):
            N = eq.size
            S = mpmath.matrix(N, N)
            left = [[mpmath.mpc(eq[i] * V[i, k]) for k in range(N)] for i in range(N)]
            for i in range(N):
                for j in range(N):
                    acc = mpmath.mpc(0)
                    for k in range(N):
                        acc += left[i][k] * mpmath.exp(mpmath.mpf(expo[k])) * mpmath.mpc(Vinv[k, j])
                    S[i, j] = acc
            svals = mpmath.svd_c(S, compute_uv=False)
            return float(t * ev[0] + mpmath.log(svals[a]))
    S = (eq[:, None] * V) @ (np.exp(expo)[:, None] * Vinv)
    sv = np.linalg.svd(S, compute_uv=False)
    return float(t * ev[0] + np.log(sv[a]))


def _seed_gaps(lam: np.ndarray) -> np.ndarray:
    """Per-coordinate decay gap: nearest neighbor in the full +- spectrum."""
    n = lam.size
    g = np.empty(n)
    for a in range(n):
        gaps = [lam[a] - lam[a + 1] if a + 1 < n else 2 * lam[n - 1]]
        if a > 0:
            gaps.append(lam[a - 1] - lam[a])
        g[a] = min(gaps)
    return g


def _theta_seed(q: np.ndarray, p: np.ndarray, lam: np.ndarray,
                ev: np.ndarray, V: np.ndarray, c: Couplings,
                time_scale: float = 1.0,
                prec: PrecisionConfig = DEFAULT_PRECISION,
                times: np.ndarray | None = None) -> np.ndarray:
    """Asymptotic theta estimate: theta_a ~ t lam_a + Delta_a/2 - q_a(t)."""
    n = lam.size
    Vinv = np.linalg.inv(V)
    delta = core.delta_phase(lam, c)
    eq = np.exp(np.concatenate([q, -q]))
    g = _seed_gaps(lam)
    seed = np.empty(n)
    for a in range(n):
        if times is not None:
            t = float(times[a])
        else:
            t = time_scale * SEED_EXPONENT_BUDGET / (2 * g[a] + (lam[0] - lam[a]))
        qa_t = _free_flow_log_positions(eq, V, Vinv, ev, t, a, prec)
        seed[a] = t * lam[a] + 0.5 * delta[a] - qa_t
    return seed


def _adaptive_seed_plan(lam: np.ndarray, target_exponent: float = 16.0,
                        max_bits: int = 8192):
    """Evaluation times and mantissa width for a seed of accuracy
    ~ e^(-target_exponent).

    The a-th tail error is e^(-2 t g_a) while rounding noise on the a-th
    singular value grows like eps * e^(t (lam_1 - lam_a)), so the precision
    has to scale with the spread-to-gap ratio; no fixed width covers all
    chamber geometries.
    """
    g = _seed_gaps(lam)
    times = target_exponent / (2 * g)
    spread = lam[0] - lam
    need = (target_exponent * (1.0 + spread / (2 * g))) / np.log(2.0)
    bits = int(min(max_bits, np.max(need) + 64))
    return times, bits


def dualize_S_to_R(pt: PhasePointS, c: Couplings,
                   prec: PrecisionConfig = DEFAULT_PRECISION,
                   theta_hint: np.ndarray | None = None) -> DualityResult:
    """The duality map: (q, p) -> (lambda, theta).

    lambda is fixed by the spectrum of L alone; theta is seeded from the
    free-flow asymptotics and polished by Newton iteration on the q-component
    of the backward map (Jacobian by finite differences, reused across steps)
    until the full roundtrip residual in q and p is below 1e-10.

    theta_hint skips the seeding stage (continuation along a trajectory).
    """
    L = laxops.build_lax_S(pt, c).L
    eres = eig_general_real_spectrum(L, prec, check_pairing=True)
    lam = eres.values[:pt.n].copy()
    if not core.validate_chamber(lam):
        raise ChamberError(f"dual actions {lam} collide or are not positive")
    V = eres.vectors
    spectrum_imag_max = eres.imag_max

    if theta_hint is not None:
        theta, iters, seed_err = _newton_polish(lam, np.asarray(theta_hint, float),
                                                pt.q, pt.p, c, prec, strict=False)
        if theta is not None:
            return DualityResult(
                point=PhasePointR(lam=lam, theta=theta),
                diagnostics=DualityDiagnostics(spectrum_imag_max, iters, seed_err))
        # fall through to cold start

    # seed ladder: the balanced double-precision seed first; the fallback
    # recomputes at longer times with enough mantissa bits for the point's
    # spread-to-gap ratio (in double, stretching the time only trades tail
    # error for rounding error)
    def _ext_seed():
        times, bits = _adaptive_seed_plan(lam)
        ext = PrecisionConfig(mode="extended", bits=bits,
                              tol_imag=prec.tol_imag,
                              tol_residual=prec.tol_residual)
        return _theta_seed(pt.q, pt.p, lam, eres.values, V, c,
                           prec=ext, times=times)

    seed_plans = [lambda: _theta_seed(pt.q, pt.p, lam, eres.values, V, c,
                                      time_scale=1.0, prec=prec)]
    seed_plans.append(_ext_seed)
    gate = np.inf
    for rung, plan in enumerate(seed_plans):
        seed = plan()
        q0, _, _, _ = _r_to_s_arrays(lam, seed, c, prec)
        gate = float(np.max(np.abs(q0 - pt.q)))
        final = rung == len(seed_plans) - 1
        if gate > (SEED_ERROR_LIMIT if final else SEED_BASIN_LIMIT):
            continue
        theta, iters, _ = _newton_polish(lam, seed, pt.q, pt.p, c, prec,
                                         strict=final)
        if theta is not None:
            seed_err = float(np.max(np.abs(theta - seed)))
            return DualityResult(
                point=PhasePointR(lam=lam, theta=theta),
                diagnostics=DualityDiagnostics(spectrum_imag_max, iters, seed_err))
    raise SeedError(
        f"theta seed residual {gate:.3e} exceeds {SEED_ERROR_LIMIT}")


def _newton_polish(lam, theta0, q_target, p_target, c, prec, strict=True):
    """Newton iteration on theta -> q(lambda, theta) - q_target.

    Runs down to NEWTON_TARGET or until the full roundtrip residual (q and p)
    stalls at its rounding floor; the result is accepted if the best residual
    is below NEWTON_TOL.  The finite-difference Jacobian is recomputed only
    when an iteration fails to shrink the residual by 10x.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    # the rounding floor of the backward map scales with the data, so the
    # acceptance threshold is relative to the point's magnitude
    scale = max(1.0, float(np.max(np.abs(q_target))), float(np.max(np.abs(p_target))))
    accept = NEWTON_TOL * scale
    J = None
    res_prev = np.inf
    best_res, best_theta, best_it = np.inf, theta, 0
    for it in range(NEWTON_MAX_ITERS + 1):
        try:
            q, p, _, _ = _r_to_s_arrays(lam, theta, c, prec)
        except (DualityError, np.linalg.LinAlgError):
            if strict and best_res > accept:
                raise
            break
        qres = float(np.max(np.abs(q - q_target)))
        res = max(qres, float(np.max(np.abs(p - p_target))))
        if res < best_res:
            best_res, best_theta, best_it = res, theta.copy(), it
        if res <= NEWTON_TARGET or it == NEWTON_MAX_ITERS:
            break
        if qres <= 1e-11 * scale and res > 1e5 * max(qres, 1e-13):
            # converged onto a sign-flipped branch: q matches but p cannot,
            # and no theta motion fixes p without first breaking q
            break
        if J is None or res > 0.1 * res_prev:
            J = _q_jacobian(lam, theta, c, prec)
        try:
            step = np.linalg.solve(J, q - q_target)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, q - q_target, rcond=None)
        # backtrack when the flat directions of an ill-conditioned Jacobian
        # push the full step outside the linear regime
        alpha = 1.0
        for _ in range(5):
            try:
                q_trial = _r_to_s_arrays(lam, theta - alpha * step, c, prec)[0]
            except (DualityError, np.linalg.LinAlgError):
                alpha *= 0.5
                continue
            if float(np.max(np.abs(q_trial - q_target))) < qres:
                break
            alpha *= 0.5
        theta = theta - alpha * step
        res_prev = res
    if best_res <= accept:
        return best_theta, best_it, best_res
    if strict:
        raise NewtonError(
            f"Newton polish did not reach {accept:g} within "
            f"{NEWTON_MAX_ITERS} iterations (best residual {best_res:.3e})")
    return None, NEWTON_MAX_ITERS, best_res


def _q_jacobian(lam, theta, c, prec, step=1e-6):
    n = lam.size
    J = np.empty((n, n))
    for b in range(n):
        tp = theta.copy(); tp[b] += step
        tm = theta.copy(); tm[b] -= step
        qp = _r_to_s_arrays(lam, tp, c, prec)[0]
        qm = _r_to_s_arrays(lam, tm, c, prec)[0]
        J[:, b] = (qp - qm) / (2 * step)
    return J


def extended_seed_check(pt: PhasePointS, c: Couplings, bits: int = 128,
                        time_scale: float = 2.0, tol: float = 1e-8) -> float:
    """Off-by-default verification path: recompute the theta seed at twice the
    evaluation time with extended-precision arithmetic and compare against the
    polished double-precision theta.  Returns the max deviation; raises on
    disagreement beyond tol."""
    result = dualize_S_to_R(pt, c)
    L = laxops.build_lax_S(pt, c).L
    eres = eig_general_real_spectrum(L, check_pairing=True)
    lam = eres.values[:pt.n]
    ext = PrecisionConfig(mode="extended", bits=bits)
    seed = _theta_seed(pt.q, pt.p, lam, eres.values, eres.vectors, c,
                       time_scale=time_scale, prec=ext)
    dev = float(np.max(np.abs(seed - result.point.theta)))
    if dev > tol:
        raise DualityError(
            f"extended-precision seed deviates from polished theta by {dev:.3e}")
    return dev


# ---------------------------------------------------------------------------
# symplecticity certificate
# ---------------------------------------------------------------------------

def canonical_omega(n: int) -> np.ndarray:
    """Canonical symplectic matrix for coordinate order (x_1..x_n, y_1..y_n)."""
    Om = np.zeros((2 * n, 2 * n))
    Om[:n, n:] = np.eye(n)
    Om[n:, :n] = -np.eye(n)
    return Om


def symplecticity_certificate(map_fn, x, step: float = 1e-5) -> float:
    """|| J^T Omega J - Omega ||_2 with J the central-difference Jacobian of a
    phase-space map on packed coordinates (x_1..x_n, y_1..y_n).

    Zero (up to O(step^2) and map noise) iff the map is symplectic.
    """
    x = np.asarray(x, dtype=float)
    if x.size % 2 != 0:
        raise ValueError("packed phase-space point must have even length")
    J = finite_diff_jacobian(map_fn, x, step=step)
    Om = canonical_omega(x.size // 2)
    return float(np.linalg.norm(J.T @ Om @ J - Om, 2))


def pack_S(pt: PhasePointS) -> np.ndarray:
    return np.concatenate([pt.q, pt.p])


def pack_R(pt: PhasePointR) -> np.ndarray:
    return np.concatenate([pt.lam, pt.theta])


def forward_map_packed(c: Couplings, prec: PrecisionConfig = DEFAULT_PRECISION):
    """S as a plain vector map for the finite-difference certifier.

    Successive calls warm-start the Newton polish from the previous theta,
    which is what makes central-difference Jacobians of S affordable.
    """
    last = {"theta": None}

    def fmap(x):
        n = x.size // 2
        res = dualize_S_to_R(PhasePointS(q=x[:n], p=x[n:]), c, prec,
                             theta_hint=last["theta"])
        last["theta"] = res.point.theta
        return pack_R(res.point)
    return fmap


def backward_map_packed(c: Couplings, prec: PrecisionConfig = DEFAULT_PRECISION):
    """S^-1 as a plain vector map for the finite-difference certifier."""
    def fmap(x):
        n = x.size // 2
        res = dualize_R_to_S(PhasePointR(lam=x[:n], theta=x[n:]), c, prec)
        return pack_S(res.point)
    return fmap
