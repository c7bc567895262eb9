"""Command-line entry point: simulate, dualize, scatter, verify.

Configuration is flat JSON (see RunConfig); trajectories land in CSV with the
header ``t,q1..qn,p1..pn`` (Sutherland) or ``t,lambda1..lambdan,theta1..thetan``
(RSvD) and a JSON diagnostics sidecar next to them.  Exit codes: 0 success,
1 verification failure, 2 usage/config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import core, dynamics, scattering, verify
from .core import (ChamberError, Couplings, CouplingError, PhasePointR,
                   PhasePointS)
from .duality import (DualityError, dualize_R_to_S, dualize_S_to_R)
from .dynamics import IntegrationError, TimeGrid
from .matengine import EigenError, PrecisionConfig

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = (EigenError, DualityError, IntegrationError, ChamberError,
                  np.linalg.LinAlgError, FloatingPointError, OverflowError)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int
    mu: float
    nu: float
    kappa: float
    model: str = "sutherland"
    q: list | None = None
    p: list | None = None
    lam: list | None = None
    theta: list | None = None
    tmin: float = -5.0
    tmax: float = 5.0
    steps: int = 101
    method: str = "duality"
    observables: str = "full"
    precision: str = "double"
    out: str | None = None
    timestamp: bool = True
    crosscheck: bool = False

    _KEYS = {"n", "mu", "nu", "kappa", "model", "q", "p", "lambda", "theta",
             "tmin", "tmax", "steps", "method", "observables", "precision",
             "out", "timestamp", "crosscheck"}

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(raw)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        for key in ("n", "mu", "nu", "kappa"):
            if key not in data:
                raise ConfigError(f"config key {key!r} is required")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if self.model not in ("sutherland", "rsvd"):
            raise ConfigError(f"model must be 'sutherland' or 'rsvd', got {self.model!r}")
        if self.method not in ("duality", "ode"):
            raise ConfigError(f"method must be 'duality' or 'ode', got {self.method!r}")
        if self.observables not in ("full", "lambda_only"):
            raise ConfigError(f"observables must be 'full' or 'lambda_only'")
        if int(self.steps) < 2:
            raise ConfigError("steps must be >= 2")
        if not self.tmin < self.tmax:
            raise ConfigError("tmin must be < tmax")
        try:
            self.couplings()
            PrecisionConfig.parse(self.precision)
        except (CouplingError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        pos, mom = (self.q, self.p) if self.model == "sutherland" else (self.lam, self.theta)
        names = ("q", "p") if self.model == "sutherland" else ("lambda", "theta")
        if pos is None or mom is None:
            raise ConfigError(f"model {self.model!r} needs point fields "
                              f"{names[0]!r} and {names[1]!r}")
        if len(pos) != self.n or len(mom) != self.n:
            raise ConfigError(f"point fields {names[0]!r}/{names[1]!r} must have length n={self.n}")
        try:
            self.point()
        except (ChamberError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def couplings(self) -> Couplings:
        return Couplings(mu=float(self.mu), nu=float(self.nu), kappa=float(self.kappa))

    def point(self):
        if self.model == "sutherland":
            return PhasePointS(q=np.asarray(self.q, float), p=np.asarray(self.p, float))
        return PhasePointR(lam=np.asarray(self.lam, float), theta=np.asarray(self.theta, float))

    def grid(self) -> TimeGrid:
        return TimeGrid.linspace(float(self.tmin), float(self.tmax), int(self.steps))

    def prec(self) -> PrecisionConfig:
        return PrecisionConfig.parse(self.precision)


def load_config(path: str, overrides: dict) -> RunConfig:
    try:
        if path == "-":
            raw = json.load(sys.stdin)
        else:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _csv_header(model: str, n: int) -> str:
    if model == "sutherland":
        cols = [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    else:
        cols = [f"lambda{i}" for i in range(1, n + 1)] + [f"theta{i}" for i in range(1, n + 1)]
    return ",".join(["t"] + cols)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(path: str, traj: dynamics.Trajectory):
    """Write atomically: the .partial file is renamed only on success."""
    n = traj.positions.shape[1]
    partial = path + ".partial"
    with open(partial, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_csv_header(traj.model, n) + "\n")
        for i, t in enumerate(traj.grid.times):
            row = [t] + list(traj.positions[i])
            row += list(traj.momenta[i]) if traj.momenta is not None else []
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    os.replace(partial, path)


def _json_dump(obj, path: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
    if path:
        partial = path + ".partial"
        with open(partial, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        os.replace(partial, path)
    else:
        print(text)


def _maybe_timestamp(cfg: RunConfig) -> dict:
    if not cfg.timestamp:
        return {}
    return {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    c = cfg.couplings()
    pt = cfg.point()
    grid = cfg.grid()
    prec = cfg.prec()
    if cfg.model == "sutherland":
        traj = dynamics.solve_sutherland(pt, grid, c, method=cfg.method, prec=prec)
    else:
        traj = dynamics.solve_rsvd(pt, grid, c, method=cfg.method,
                                   observables=cfg.observables, prec=prec)
    out = cfg.out or "trajectory.csv"
    write_trajectory_csv(out, traj)
    actions = dynamics.conserved_actions(traj, c, prec) if traj.momenta is not None else None
    sidecar = {
        "model": cfg.model,
        "method": cfg.method,
        "n": cfg.n,
        "couplings": {"mu": cfg.mu, "nu": cfg.nu, "kappa": cfg.kappa},
        "grid": {"tmin": cfg.tmin, "tmax": cfg.tmax, "steps": cfg.steps},
        "energy_drift": traj.diagnostics.get("energy_drift"),
        "action_drift": (float(np.max(np.abs(actions - actions[len(grid) // 2])))
                         if actions is not None else None),
        "csv": out,
    }
    if cfg.crosscheck:
        other = "ode" if cfg.method == "duality" else "duality"
        if cfg.model == "sutherland":
            tother = dynamics.solve_sutherland(pt, grid, c, method=other, prec=prec)
        else:
            tother = dynamics.solve_rsvd(pt, grid, c, method=other,
                                         observables=cfg.observables, prec=prec)
        sup = float(np.max(np.abs(traj.positions - tother.positions)))
        if traj.momenta is not None and tother.momenta is not None:
            sup = max(sup, float(np.max(np.abs(traj.momenta - tother.momenta))))
        sidecar["crosscheck_method"] = other
        sidecar["crosscheck_supnorm"] = sup
    sidecar.update(_maybe_timestamp(cfg))
    _json_dump(sidecar, out + ".meta.json")
    return EXIT_OK


def cmd_dualize(cfg: RunConfig, direction: str) -> int:
    c = cfg.couplings()
    prec = cfg.prec()
    if direction == "s2r":
        if cfg.model != "sutherland":
            raise ConfigError("direction s2r needs a sutherland config (q, p)")
        res = dualize_S_to_R(cfg.point(), c, prec)
        back = dualize_R_to_S(res.point, c, prec)
        roundtrip = max(float(np.max(np.abs(back.point.q - cfg.point().q))),
                        float(np.max(np.abs(back.point.p - cfg.point().p))))
        output = {"lambda": list(res.point.lam), "theta": list(res.point.theta)}
    elif direction == "r2s":
        if cfg.model != "rsvd":
            raise ConfigError("direction r2s needs an rsvd config (lambda, theta)")
        res = dualize_R_to_S(cfg.point(), c, prec)
        fwd = dualize_S_to_R(res.point, c, prec)
        roundtrip = max(float(np.max(np.abs(fwd.point.lam - cfg.point().lam))),
                        float(np.max(np.abs(fwd.point.theta - cfg.point().theta))))
        output = {"q": list(res.point.q), "p": list(res.point.p)}
    else:
        raise ConfigError(f"direction must be 's2r' or 'r2s', got {direction!r}")
    report = {
        "direction": direction,
        "n": cfg.n,
        "couplings": {"mu": cfg.mu, "nu": cfg.nu, "kappa": cfg.kappa},
        "input": {"model": cfg.model,
                  **({"q": cfg.q, "p": cfg.p} if cfg.model == "sutherland"
                     else {"lambda": cfg.lam, "theta": cfg.theta})},
        "output": output,
        "diagnostics": {
            "roundtrip_residual": roundtrip,
            "newton_iters": res.diagnostics.newton_iters,
            "seed_error": res.diagnostics.seed_error,
            "spectrum_imag_max": res.diagnostics.spectrum_imag_max,
        },
    }
    report.update(_maybe_timestamp(cfg))
    _json_dump(report, cfg.out)
    return EXIT_OK


#: |t| beyond this is outside the double-precision working envelope; points
#: whose chamber gaps push the fit horizon past it are rejected
MAX_FIT_HORIZON = 1e3


def _scatter_sutherland(cfg: RunConfig, c, pt, prec) -> dict:
    fwd = dualize_S_to_R(pt, c, prec)
    lam = fwd.point.lam
    gaps = np.concatenate([-np.diff(lam), [2 * lam[-1]]])
    T = 8.0 / float(np.min(gaps))
    tmax = 2.0 * T
    if tmax > MAX_FIT_HORIZON:
        raise IntegrationError(
            f"fit horizon |t| >= {tmax:g} is unreachable (actions too close)", 0.0)
    grid = dynamics.TimeGrid(np.concatenate([np.linspace(-tmax, -T, 24),
                                             np.linspace(T, tmax, 24)]))
    traj = dynamics.solve_sutherland(pt, grid, c, method="duality", prec=prec)
    sides = {}
    worst_dev = 0.0
    for side_name, side in (("plus", "+"), ("minus", "-")):
        fit = scattering.fit_linear_asymptote(traj, side=side)
        wave = scattering.wave_map_S(pt, c, side=side, prec=prec)
        dev_x = float(np.max(np.abs(fit.intercept - wave.x)))
        dev_y = float(np.max(np.abs(fit.slope - wave.y)))
        worst_dev = max(worst_dev, dev_x, dev_y)
        sides[side_name] = {
            "fitted_slope": list(fit.slope),
            "fitted_intercept": list(fit.intercept),
            "theory_slope": list(wave.y),
            "theory_intercept": list(wave.x),
            "max_intercept_deviation": dev_x,
            "max_slope_deviation": dev_y,
            "decay_rate_estimate": fit.decay_rate_estimate,
        }
    w_minus = scattering.wave_map_S(pt, c, side="-", prec=prec)
    w_plus = scattering.wave_map_S(pt, c, side="+", prec=prec)
    mapped = scattering.scattering_map_S(w_minus, c)
    comp = max(float(np.max(np.abs(mapped.x - w_plus.x))),
               float(np.max(np.abs(mapped.y - w_plus.y))))
    one, pair_diff, pair_sum = core.delta_decomposition(lam, c)
    decay = scattering.verify_decay_rates(pt, c, "sutherland", prec=prec)
    passed = worst_dev <= 1e-6 and comp <= 1e-8 and decay.passed
    return {
        "sides": sides,
        "scattering_map": {
            "incoming_x": list(w_minus.x), "incoming_y": list(w_minus.y),
            "outgoing_x": list(mapped.x), "outgoing_y": list(mapped.y),
            "composition_residual": comp,
        },
        "delta_decomposition": {
            "one_body": list(one),
            "pair_diff": [[a + 1, b + 1, pair_diff[a, b]]
                          for a in range(pt.n) for b in range(pt.n) if a != b],
            "pair_sum": [[a + 1, b + 1, pair_sum[a, b]]
                         for a in range(pt.n) for b in range(pt.n) if a != b],
            "total": list(core.delta_phase(lam, c)),
        },
        "decay": {"passed": decay.passed, "horizon": decay.horizon,
                  **{k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                     for k, v in decay.details.items()}},
        "verdict": "pass" if passed else "fail",
    }


def _scatter_rsvd(cfg: RunConfig, c, pt, prec) -> dict:
    back = dualize_R_to_S(pt, c, prec)
    q, p = back.point.q, back.point.p
    w_minus = scattering.wave_map_R(pt, c, side="-", prec=prec)
    w_plus = scattering.wave_map_R(pt, c, side="+", prec=prec)
    mapped = scattering.scattering_map_R(w_minus)
    comp = max(float(np.max(np.abs(mapped.x - w_plus.x))),
               float(np.max(np.abs(mapped.y - w_plus.y))))
    decay = scattering.verify_decay_rates(pt, c, "rsvd", prec=prec)
    passed = comp <= 1e-8 and decay.passed
    sides = {}
    for side_name, wave in (("plus", w_plus), ("minus", w_minus)):
        sides[side_name] = {
            "theory_slope": list(2.0 * np.sinh(2.0 * wave.y)),
            "theory_intercept": list(wave.x),
            "theta_limit": list(wave.y),
        }
    return {
        "sides": sides,
        "scattering_map": {
            "incoming_x": list(w_minus.x), "incoming_y": list(w_minus.y),
            "outgoing_x": list(mapped.x), "outgoing_y": list(mapped.y),
            "composition_residual": comp,
        },
        "delta_decomposition": {"one_body": [], "pair_diff": [], "pair_sum": [],
                                "total": [0.0] * pt.n},
        "decay": {"passed": decay.passed, "horizon": decay.horizon,
                  **{k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                     for k, v in decay.details.items()}},
        "verdict": "pass" if passed else "fail",
    }


def cmd_scatter(cfg: RunConfig) -> int:
    c = cfg.couplings()
    pt = cfg.point()
    prec = cfg.prec()
    if cfg.model == "sutherland":
        body = _scatter_sutherland(cfg, c, pt, prec)
    else:
        body = _scatter_rsvd(cfg, c, pt, prec)
    report = {
        "model": cfg.model,
        "n": cfg.n,
        "couplings": {"mu": cfg.mu, "nu": cfg.nu, "kappa": cfg.kappa},
        **body,
    }
    report.update(_maybe_timestamp(cfg))
    _json_dump(report, cfg.out)
    return EXIT_OK if report["verdict"] == "pass" else EXIT_VERIFY_FAILED


def cmd_verify(suite: str, n_max: int, seed: int, mutations, precision: str,
               out: str | None) -> int:
    prec = PrecisionConfig.parse(precision)
    report = verify.run_suite(suite=suite, n_max=n_max, seed=seed,
                              mutations=mutations, prec=prec)
    _json_dump(report, out)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bcn-duality",
        description="Dual BC_n many-particle systems: simulation, duality maps, "
                    "scattering reports, self-verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, need_config=True):
        p.add_argument("--config", required=need_config,
                       help="JSON config file ('-' reads stdin)")
        p.add_argument("--model", choices=["sutherland", "rsvd"])
        p.add_argument("--method", choices=["duality", "ode"])
        p.add_argument("--tmin", type=float)
        p.add_argument("--tmax", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--precision", help="double | extended:<bits>")
        p.add_argument("--out", help="output path")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp field from JSON outputs")

    ps = sub.add_parser("simulate", help="solve a trajectory and write CSV + sidecar")
    add_common(ps)

    pd = sub.add_parser("dualize", help="apply the duality map to a single point")
    add_common(pd)
    pd.add_argument("--direction", choices=["s2r", "r2s"], required=True)

    pc = sub.add_parser("scatter", help="wave/scattering analysis report")
    add_common(pc)

    pv = sub.add_parser("verify", help="run the invariant self-verification suites")
    pv.add_argument("--suite", default="all",
                    choices=list(verify.SUITES) + ["all"])
    pv.add_argument("--n-max", type=int, default=6)
    pv.add_argument("--seed", type=int, default=2024)
    pv.add_argument("--precision", default="double")
    pv.add_argument("--out")
    pv.add_argument("--mutate", action="append", default=[],
                    help="inject a named defect (self-test hook), e.g. delta-sign")
    return ap


def _overrides(args) -> dict:
    out = {"model": args.model, "method": args.method, "tmin": args.tmin,
           "tmax": args.tmax, "steps": args.steps, "precision": args.precision,
           "out": args.out}
    if args.no_timestamp:
        out["timestamp"] = False
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite, args.n_max, args.seed,
                              tuple(args.mutate), args.precision, args.out)
        cfg = load_config(args.config, _overrides(args))
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "dualize":
            return cmd_dualize(cfg, args.direction)
        if args.command == "scatter":
            return cmd_scatter(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CouplingError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
