"""Asymptotic analysis: wave maps, scattering maps, and decay-rate checks.

Both models are pure soliton systems: asymptotic momenta are conserved up to
sign, and the n-body scattering map factorizes.  For the Sutherland flow the
outgoing phases pick up the factorized shift Delta_a; for the rational RSvD
flow the scattering map is the plain sign flip (x, y) -> (-x, -y).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core, duality, laxops
from .core import AsymptoticState, Couplings, PhasePointR, PhasePointS
from .dynamics import TimeGrid, Trajectory, solve_rsvd, solve_sutherland
from .matengine import DEFAULT_PRECISION, PrecisionConfig

#: residuals below this are considered rounding-noise floor and are excluded
#: from monotonicity and rate fits
NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares linear asymptote per position coordinate.

    slope/intercept come from the outer half of the fit window (the data are
    convergent, so the latest samples pin the asymptote); residuals are the
    deviations from that line over the whole window.  decay_rate_estimate is
    the decay exponent of the residual norm: against t for exponentially
    convergent (Sutherland-type) data, against ln|t| for algebraically
    convergent (RSvD-type) data, positive when the residuals decay.
    """

    slope: np.ndarray
    intercept: np.ndarray
    decay_rate_estimate: float
    residuals: np.ndarray
    times: np.ndarray


def fit_linear_asymptote(traj: Trajectory, side: str = "+",
                         t_fit: float | None = None) -> AsymptoticFit:
    """Fit x_a(t) ~ slope_a * t + intercept_a on one temporal side.

    Uses samples with |t| >= t_fit (default: half the largest |t| available on
    the requested side); needs at least 8 of them.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    t = traj.grid.times
    mask = t > 0 if side == "+" else t < 0
    if not mask.any():
        raise ValueError(f"trajectory has no samples on side {side}")
    horizon = float(np.max(np.abs(t[mask])))
    if t_fit is None:
        t_fit = 0.5 * horizon
    mask &= np.abs(t) >= t_fit
    if mask.sum() < 8:
        raise ValueError(f"need >= 8 samples with |t| >= {t_fit:g} on side {side}, "
                         f"got {int(mask.sum())}")
    tw = t[mask]
    xw = traj.positions[mask]
    # asymptote from the outer half of the window
    outer = np.abs(tw) >= 0.5 * (np.min(np.abs(tw)) + np.max(np.abs(tw)))
    A = np.stack([tw[outer], np.ones(outer.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(A, xw[outer], rcond=None)
    slope, intercept = coef[0], coef[1]
    residuals = xw - (np.outer(tw, slope) + intercept[None, :])
    rnorm = np.max(np.abs(residuals), axis=1)
    # rate fit on the inner samples, above the noise floor
    inner = ~outer & (rnorm > NOISE_FLOOR)
    if inner.sum() >= 3:
        logs = np.log(rnorm[inner])
        axis = np.abs(tw[inner]) if traj.model == "sutherland" else np.log(np.abs(tw[inner]))
        B = np.stack([axis, np.ones(inner.sum())], axis=1)
        (rate_slope, _), *_ = np.linalg.lstsq(B, logs, rcond=None)
        rate = -float(rate_slope)
    else:
        rate = np.inf  # residuals already at the floor everywhere
    return AsymptoticFit(slope=slope, intercept=intercept,
                         decay_rate_estimate=rate, residuals=residuals,
                         times=tw)


# ---------------------------------------------------------------------------
# wave and scattering maps
# ---------------------------------------------------------------------------

def wave_map_S(pt: PhasePointS, c: Couplings, side: str = "+",
               prec: PrecisionConfig = DEFAULT_PRECISION) -> AsymptoticState:
    """Asymptotic datum of the Sutherland flow through pt:

    x_a = -+ theta_a + Delta_a(lambda)/2,  y_a = +- lambda_a,
    with (lambda, theta) = S(q, p).
    """
    sgn = +1 if side == "+" else -1
    res = duality.dualize_S_to_R(pt, c, prec)
    lam, theta = res.point.lam, res.point.theta
    x = -sgn * theta + 0.5 * core.delta_phase(lam, c)
    return AsymptoticState(x=x, y=sgn * lam, sign=sgn)


def scattering_map_S(state: AsymptoticState, c: Couplings) -> AsymptoticState:
    """Factorized Sutherland scattering map (x, y) -> (-x + Delta(-y), -y)."""
    if state.sign != -1:
        raise ValueError("the scattering map consumes incoming (sign -) states")
    return AsymptoticState(x=-state.x + core.delta_phase(-state.y, c),
                           y=-state.y, sign=+1)


def wave_map_R(pt: PhasePointR, c: Couplings, side: str = "+",
               prec: PrecisionConfig = DEFAULT_PRECISION) -> AsymptoticState:
    """Asymptotic datum of the RSvD flow through pt:

    x_a = -+ p_a (the lambda-intercept), y_a = +- q_a (the theta limit),
    with (q, p) = S^-1(lambda, theta).
    """
    sgn = +1 if side == "+" else -1
    res = duality.dualize_R_to_S(pt, c, prec)
    return AsymptoticState(x=-sgn * res.point.p, y=sgn * res.point.q, sign=sgn)


def scattering_map_R(state: AsymptoticState) -> AsymptoticState:
    """Trivial-phase RSvD scattering map (x, y) -> (-x, -y)."""
    if state.sign != -1:
        raise ValueError("the scattering map consumes incoming (sign -) states")
    return AsymptoticState(x=-state.x, y=-state.y, sign=+1)


def scattering_map_S_packed(c: Couplings):
    """S^S on packed (x_1..x_n, y_1..y_n) vectors, for the symplecticity test."""
    def fmap(v):
        n = v.size // 2
        return np.concatenate([-v[:n] + core.delta_phase(-v[n:], c), -v[n:]])
    return fmap


def scattering_map_R_packed():
    def fmap(v):
        return -v
    return fmap


# ---------------------------------------------------------------------------
# decay-rate verification
# ---------------------------------------------------------------------------

@dataclass
class DecayReport:
    """Outcome of the temporal decay checks for one trajectory."""

    model: str
    horizon: float
    passed: bool
    details: dict = field(default_factory=dict)


def _sutherland_residuals(lam, theta, delta, c, times, prec):
    """max-abs deviations from the two-sided linear asymptotes."""
    res = np.empty(times.size)
    for i, t in enumerate(times):
        q, p, _, _ = duality._r_to_s_arrays(lam, theta - t * lam, c, prec)
        if t > 0:
            rq = q - (t * lam - theta + 0.5 * delta)
            rp = p - lam
        else:
            rq = q - (-t * lam + theta + 0.5 * delta)
            rp = p + lam
        res[i] = max(np.max(np.abs(rq)), np.max(np.abs(rp)))
    return res


def verify_decay_rates(pt, c: Couplings, model: str,
                       horizon: float | None = None,
                       prec: PrecisionConfig = DEFAULT_PRECISION) -> DecayReport:
    """Check the temporal decay of the asymptote residuals.

    Sutherland: |q_a(t) - (t lam_a - theta_a + Delta_a/2)| and |p_a(t) - lam_a|
    must decrease monotonically past the horizon with a positive fitted
    exponential rate, on both temporal sides.

    RSvD: sup_t of t * |lambda-residual| and t^2 * |theta-residual| over
    [T, 4T] must be finite and stable (within a factor 2) under T -> 2T, and
    v_a(lambda(t)) - 1 must be O(1/t^2) in the same windowed sense.
    """
    if model == "sutherland":
        fwd = duality.dualize_S_to_R(pt, c, prec)
        lam, theta = fwd.point.lam, fwd.point.theta
        delta = core.delta_phase(lam, c)
        gaps = np.concatenate([-np.diff(lam), [2 * lam[-1]]])
        T = horizon if horizon is not None else 8.0 / float(np.min(gaps))
        details = {"T": T}
        passed = True
        for side, sgn in (("plus", +1), ("minus", -1)):
            times = sgn * np.linspace(T, 2 * T, 17)
            r = _sutherland_residuals(lam, theta, delta, c, np.sort(times), prec)
            if sgn < 0:
                r = r[::-1]  # order by increasing |t|
            live = r > NOISE_FLOOR
            monotone = bool(np.all(np.diff(r[live]) < 0))
            if live.sum() >= 3:
                x = np.linspace(T, 2 * T, 17)[live]
                coef = np.polyfit(x, np.log(r[live]), 1)
                rate = -float(coef[0])
            else:
                rate = np.inf
            details[f"rate_{side}"] = rate
            details[f"monotone_{side}"] = monotone
            details[f"first_residual_{side}"] = float(r[0])
            details[f"last_residual_{side}"] = float(r[-1])
            passed &= monotone and rate > 0
        return DecayReport(model=model, horizon=T, passed=passed, details=details)

    if model == "rsvd":
        back = duality.dualize_R_to_S(pt, c, prec)
        q, p = back.point.q, back.point.p
        slope = 2.0 * np.sinh(2 * q)
        gaps = np.concatenate([-np.diff(slope), [slope[-1]]]) if q.size > 1 else [slope[-1]]
        T = horizon if horizon is not None else 20.0 / float(np.min(gaps))
        details = {"T": T}

        def window_sups(T0):
            times = np.linspace(T0, 4 * T0, 13)
            s_lam = s_th = s_v = 0.0
            hint = None
            for t in times:
                pt_s = PhasePointS(q=q, p=p - t * slope)
                res = duality.dualize_S_to_R(pt_s, c, prec, theta_hint=hint)
                lam_t, th_t = res.point.lam, res.point.theta
                hint = th_t
                s_lam = max(s_lam, t * np.max(np.abs(lam_t - (t * slope - p))))
                s_th = max(s_th, t * t * np.max(np.abs(th_t - q)))
                s_v = max(s_v, t * t * np.max(laxops.v_weights(lam_t, c) - 1.0))
            return s_lam, s_th, s_v

        w1 = window_sups(T)
        w2 = window_sups(2 * T)
        names = ("t_lambda_residual", "t2_theta_residual", "t2_v_minus_1")
        passed = True
        for k, name in enumerate(names):
            details[f"sup_{name}_T"] = w1[k]
            details[f"sup_{name}_2T"] = w2[k]
            ok = np.isfinite(w1[k]) and np.isfinite(w2[k]) \
                and (w2[k] <= 2 * w1[k] or w2[k] < NOISE_FLOOR)
            details[f"stable_{name}"] = bool(ok)
            passed &= ok
        return DecayReport(model=model, horizon=T, passed=passed, details=details)

    raise ValueError(f"unknown model {model!r}")
