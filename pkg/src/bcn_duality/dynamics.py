"""Trajectory engines for both flows: algebraic (duality-based) and ODE.

The duality route solves each flow exactly up to algebra: the dual variables
move linearly (theta - t lambda for the Sutherland flow, p - 2t sinh(2q) for
the RSvD flow), so every grid point is an independent diagonalization.  The
ODE route integrates Hamilton's equations with a high-order adaptive scheme
and serves as the independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import core, duality, laxops
from .core import EPS_CHAMBER, Couplings, PhasePointR, PhasePointS
from .matengine import DEFAULT_PRECISION, PrecisionConfig, eig_general_real_spectrum

ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_good_time: float):
        super().__init__(f"{message} (last good time t={last_good_time:g})")
        self.last_good_time = last_good_time


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing, finite evaluation times."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("time grid must be a non-empty 1-d array")
        if not np.isfinite(t).all():
            raise ValueError("time grid must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def linspace(cls, tmin: float, tmax: float, steps: int) -> "TimeGrid":
        if steps < 2:
            raise ValueError("steps must be >= 2")
        if not tmin < tmax:
            raise ValueError("tmin must be < tmax")
        return cls(times=np.linspace(tmin, tmax, steps))

    def __len__(self):
        return self.times.size


@dataclass
class Trajectory:
    """Solved flow on a grid: positions[i] (and momenta[i]) at grid.times[i].

    model is "sutherland" (positions q, momenta p) or "rsvd" (positions
    lambda, momenta theta); momenta is None for spectrum-only RSvD solves.
    diagnostics carries per-run data such as the energy drift.
    """

    model: str
    method: str
    grid: TimeGrid
    positions: np.ndarray
    momenta: np.ndarray | None
    energies: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.grid)
        if self.positions.shape[0] != m:
            raise ValueError("positions rows must match the grid")
        for i in range(m):
            core.require_chamber(self.positions[i], what=f"state at t={self.grid.times[i]:g}")

    def point_at(self, i: int):
        if self.momenta is None:
            raise ValueError("trajectory carries no momentum-type coordinates")
        if self.model == "sutherland":
            return PhasePointS(q=self.positions[i], p=self.momenta[i])
        return PhasePointR(lam=self.positions[i], theta=self.momenta[i])


# ---------------------------------------------------------------------------
# Hamiltonian vector fields
# ---------------------------------------------------------------------------

def ode_rhs_S(pt: PhasePointS, c: Couplings):
    """(dq, dp) for the Sutherland flow: dq = p, dp = -grad_q H."""
    return _rhs_S_arrays(pt.q, pt.p, c)


def _rhs_S_arrays(q, p, c: Couplings):
    # no chamber validation and no divide warnings: adaptive integrators probe
    # trial states outside the domain and must see finite/NaN values there,
    # not exceptions, so they can reject the step
    n = q.size
    with np.errstate(all="ignore"):
        wp = lambda x: -2.0 * np.cosh(x) / np.sinh(x) ** 3
        grad = c.g1_sq * wp(q) + 2.0 * c.g2_sq * wp(2 * q)
        for a in range(n):
            for b in range(n):
                if b != a:
                    grad[a] += c.g_sq * (wp(q[a] - q[b]) + wp(q[a] + q[b]))
    return p.copy(), -grad


def ode_rhs_R(pt: PhasePointR, c: Couplings):
    """(dlambda, dtheta) for the RSvD flow.

    dlambda_a = 2 sinh(2 theta_a) v_a(lambda); dtheta = -grad_lambda H^R with
    the gradient taken analytically through d ln v_a (the product rule on the
    interaction weights), which is what keeps the ODE oracle stable.
    """
    return _rhs_R_arrays(pt.lam, pt.theta, c)


def _dlog_one_plus(x: float, ssq: float) -> float:
    # d/dx ln(1 + ssq / x^2)
    return -2.0 * ssq / (x * (x * x + ssq))


def _raw_v_weights(lam, c: Couplings):
    # v_weights without the chamber guard, for integrator trial states
    n = lam.size
    lnv = 0.5 * (np.log1p(c.nu ** 2 / lam ** 2) + np.log1p(c.kappa ** 2 / lam ** 2))
    for a in range(n):
        for b in range(n):
            if b != a:
                lnv[a] += 0.5 * (np.log1p(4 * c.mu ** 2 / (lam[a] - lam[b]) ** 2)
                                 + np.log1p(4 * c.mu ** 2 / (lam[a] + lam[b]) ** 2))
    return 1.0 + np.expm1(lnv)


def _rhs_R_arrays(lam, th, c: Couplings):
    n = lam.size
    with np.errstate(all="ignore"):
        v = _raw_v_weights(lam, c)
        dlam = 2.0 * np.sinh(2 * th) * v
        mu4 = 4.0 * c.mu ** 2
        cosh2t = np.cosh(2 * th)
        dth = np.zeros(n)
        for a in range(n):
            grad = 0.0
            for b in range(n):
                if b == a:
                    dlnv = 0.5 * (_dlog_one_plus(lam[a], c.nu ** 2)
                                  + _dlog_one_plus(lam[a], c.kappa ** 2))
                    for k in range(n):
                        if k != a:
                            dlnv += 0.5 * (_dlog_one_plus(lam[a] - lam[k], mu4)
                                           + _dlog_one_plus(lam[a] + lam[k], mu4))
                else:
                    dlnv = 0.5 * (-_dlog_one_plus(lam[b] - lam[a], mu4)
                                  + _dlog_one_plus(lam[b] + lam[a], mu4))
                grad += cosh2t[b] * v[b] * dlnv
            prod = np.prod(1.0 + mu4 / lam ** 2)
            grad += c.nu * c.kappa / (4 * c.mu ** 2) * prod * _dlog_one_plus(lam[a], mu4)
            dth[a] = -grad
    return dlam, dth


# ---------------------------------------------------------------------------
# ODE oracle
# ---------------------------------------------------------------------------

def _integrate(rhs, y0, times, margin):
    """DOP853 on a possibly two-sided grid, aborting on chamber exit."""
    n = y0.size // 2

    def wall_distance(t, y):
        x = y[:n]
        gap = np.min(-np.diff(x)) if n > 1 else np.inf
        return min(gap, x[n - 1]) - margin

    wall_distance.terminal = True

    out = np.empty((times.size, y0.size))
    for sign in (-1, +1):
        mask = times < 0 if sign < 0 else times >= 0
        if not mask.any():
            continue
        t_eval = times[mask]
        if sign < 0:
            t_eval = t_eval[::-1]
        if t_eval[-1] == 0.0:
            out[mask] = y0
            continue
        sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), y0, t_eval=t_eval,
                        method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL,
                        events=wall_distance)
        if sol.status == 1:
            raise IntegrationError("trajectory reached the chamber margin",
                                   float(sol.t_events[0][0]))
        if sol.status != 0:
            raise IntegrationError(f"integrator failure: {sol.message}",
                                   float(sol.t[-1]) if sol.t.size else 0.0)
        block = sol.y.T
        out[mask] = block[::-1] if sign < 0 else block
    return out


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def solve_sutherland(pt0: PhasePointS, grid: TimeGrid, c: Couplings,
                     method: str = "duality",
                     prec: PrecisionConfig = DEFAULT_PRECISION) -> Trajectory:
    """Sutherland flow through pt0 at t = 0.

    duality: (lambda, theta) = S(q, p) once, then each grid point is
    S^-1(lambda, theta - t lambda).  ode: Hamilton's equations with DOP853.
    """
    n, times = pt0.n, grid.times
    if method == "duality":
        fwd = duality.dualize_S_to_R(pt0, c, prec)
        lam, theta = fwd.point.lam, fwd.point.theta
        qs = np.empty((times.size, n))
        ps = np.empty((times.size, n))
        for i, t in enumerate(times):
            q, p, _, _ = duality._r_to_s_arrays(lam, theta - t * lam, c, prec)
            qs[i], ps[i] = q, p
        diag = {"newton_iters": fwd.diagnostics.newton_iters,
                "seed_error": fwd.diagnostics.seed_error}
    elif method == "ode":
        rhs = lambda t, y: np.concatenate(_rhs_S_arrays(y[:n], y[n:], c))
        sol = _integrate(rhs, np.concatenate([pt0.q, pt0.p]), times, EPS_CHAMBER)
        qs, ps = sol[:, :n], sol[:, n:]
        diag = {}
    else:
        raise ValueError(f"unknown method {method!r}")
    energies = np.array([laxops.hamiltonian_S(PhasePointS(q=qs[i], p=ps[i]), c)
                         for i in range(times.size)])
    H0 = laxops.hamiltonian_S(pt0, c)
    diag["energy_drift"] = float(np.max(np.abs(energies - H0)))
    return Trajectory(model="sutherland", method=method, grid=grid,
                      positions=qs, momenta=ps, energies=energies,
                      diagnostics=diag)


def solve_rsvd(pt0: PhasePointR, grid: TimeGrid, c: Couplings,
               method: str = "duality", observables: str = "full",
               prec: PrecisionConfig = DEFAULT_PRECISION) -> Trajectory:
    """RSvD flow through pt0 at t = 0.

    duality: (q, p) = S^-1(lambda, theta) once; the dual momentum shifts
    linearly, p(t) = p - 2t sinh(2q).  observables="full" recovers
    (lambda(t), theta(t)) = S(q, p(t)) with the Newton polish warm-started
    from the neighboring grid point; observables="lambda_only" reads just the
    positive spectrum of L(q, p(t)) and skips the angle extraction.
    """
    if observables not in ("full", "lambda_only"):
        raise ValueError(f"unknown observables mode {observables!r}")
    n, times = pt0.n, grid.times
    if method == "duality":
        back = duality.dualize_R_to_S(pt0, c, prec)
        q, p = back.point.q, back.point.p
        slope = 2.0 * np.sinh(2 * q)
        lams = np.empty((times.size, n))
        if observables == "lambda_only":
            for i, t in enumerate(times):
                pt_s = PhasePointS(q=q, p=p - t * slope)
                L = laxops.build_lax_S(pt_s, c).L
                lams[i] = eig_general_real_spectrum(L, prec, check_pairing=True).values[:n]
            thetas = None
            diag = {}
        else:
            thetas = np.empty((times.size, n))
            order = np.argsort(np.abs(times), kind="stable")
            i0 = int(order[0])
            newton_total = 0

            def euler_hint(t_ref, state_ref, t):
                # the dual angles obey the flow equations, so a first-order
                # extrapolation of the previous state is an excellent hint
                _, dth = _rhs_R_arrays(state_ref[0], state_ref[1], c)
                return state_ref[1] + (t - t_ref) * dth

            def solve_at(t, t_ref, state_ref, depth=0):
                nonlocal newton_total
                pt_s = PhasePointS(q=q, p=p - t * slope)
                hint = euler_hint(t_ref, state_ref, t) if state_ref is not None else None
                try:
                    res = duality.dualize_S_to_R(pt_s, c, prec, theta_hint=hint)
                except duality.DualityError:
                    if depth >= 8 or state_ref is None:
                        raise
                    # bisect toward t until the extrapolated hint lands in
                    # the Newton basin (the angles move fast near t = 0)
                    mid = 0.5 * (t_ref + t)
                    state_mid = solve_at(mid, t_ref, state_ref, depth + 1)
                    return solve_at(t, mid, state_mid, depth + 1)
                newton_total += res.diagnostics.newton_iters
                return res.point.lam, res.point.theta

            right = [i for i in range(i0, times.size)]
            left = [i for i in range(i0 - 1, -1, -1)]
            for sweep in (right, left):
                t_ref, state_ref = 0.0, (pt0.lam, pt0.theta)
                for i in sweep:
                    lams[i], thetas[i] = solve_at(times[i], t_ref, state_ref)
                    t_ref, state_ref = times[i], (lams[i], thetas[i])
            diag = {"newton_iters_total": newton_total}
    elif method == "ode":
        rhs = lambda t, y: np.concatenate(_rhs_R_arrays(y[:n], y[n:], c))
        sol = _integrate(rhs, np.concatenate([pt0.lam, pt0.theta]), times, EPS_CHAMBER)
        lams, thetas = sol[:, :n], sol[:, n:]
        diag = {}
    else:
        raise ValueError(f"unknown method {method!r}")
    energies = None
    if thetas is not None:
        energies = np.array([laxops.hamiltonian_R(PhasePointR(lam=lams[i], theta=thetas[i]), c)
                             for i in range(times.size)])
        H0 = laxops.hamiltonian_R(pt0, c)
        diag["energy_drift"] = float(np.max(np.abs(energies - H0)))
    return Trajectory(model="rsvd", method=method, grid=grid,
                      positions=lams, momenta=thetas, energies=energies,
                      diagnostics=diag)


def conserved_actions(traj: Trajectory, c: Couplings,
                      prec: PrecisionConfig = DEFAULT_PRECISION) -> np.ndarray:
    """Action variables along a trajectory, one row per grid time.

    Sutherland: the positive spectrum of L(q(t), p(t)) (constant in t).
    RSvD: the dual positions, i.e. the q-component of S^-1 at each state.
    """
    m = len(traj.grid)
    out = np.empty((m, traj.positions.shape[1]))
    if traj.model == "sutherland":
        for i in range(m):
            L = laxops.build_lax_S(traj.point_at(i), c).L
            out[i] = eig_general_real_spectrum(L, prec, check_pairing=True).values[:out.shape[1]]
    elif traj.model == "rsvd":
        for i in range(m):
            res = duality.dualize_R_to_S(traj.point_at(i), c, prec)
            out[i] = res.point.q
    else:
        raise ValueError(f"unknown model {traj.model!r}")
    return out
