"""Command-line front end.

    bec-dimer <spectrum|evolve|fixed-points|portrait|husimi|sweep|params>
              [--config file.json] [--set key=value ...] [--out dir]

Parameters come from a JSON config file; ``--set`` overrides individual keys
(values are parsed as JSON when possible, dotted keys reach into ``trap``).
Every command writes CSV/JSON into ``--out`` (default: current directory).
Time columns are the dimensionless Omega*t.

Exit codes: 0 ok, 2 invalid or inadmissible parameters, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import classical, model, numerics, quantum

logger = logging.getLogger("bec_dimer")

EXIT_OK = 0
EXIT_PARAMS = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

COMMANDS = ("spectrum", "evolve", "fixed-points", "portrait", "husimi", "sweep", "params")

DEFAULTS = {
    "validation": "strict",
    "ratio_min": model.DEFAULT_RATIO_MIN,
    "theta0": math.pi / 2,
    "phi0": 0.0,
    "t_end": 50.0,
    "n_times": 1001,
    "step": classical.DEFAULT_STEP,
    "mode": "both",
    "n_theta": 201,
    "n_phi": 201,
    "times": [0, 5, 10, 20, 30, 63],
    "seeds": None,
    "portrait_t_end": None,
    "portrait_step": classical.PORTRAIT_STEP,
    "sample_every": 10,
    "doublet_tol": 0.1,
    "sweep_var": "kappa",
    "range": None,
    "steps": 11,
}


class ConfigError(ValueError):
    pass


class RegimeError(ValueError):
    pass


@dataclass
class RunConfig:
    params: model.ModelParams
    lambda_mode: str
    options: dict
    trap: Optional[model.TrapGeometry] = None
    violations: list = field(default_factory=list)

    @property
    def time_scale(self) -> float:
        """Multiply raw time by this to get the reported time."""
        return abs(self.params.Omega) if self.params.Omega != 0 else 1.0

    def echo(self) -> dict:
        out = {
            "N": self.params.N,
            "Omega": self.params.Omega,
            "kappa": self.params.kappa,
            "eta": self.params.eta,
            "Lambda": self.params.Lambda,
            "lambda_mode": self.lambda_mode,
            "OmegaPrime": self.params.OmegaPrime,
        }
        if self.trap is not None:
            out["trap"] = self.trap.to_dict()
        if self.violations:
            out["regime_violations"] = list(self.violations)
        return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, pairs) -> dict:
    raw = json.loads(json.dumps(raw))
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        target = raw
        parts = key.strip().split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"cannot set {key!r}: {part!r} is not an object")
        target[parts[-1]] = _parse_value(value)
    return raw


def resolve_config(raw: dict, require_admissible: bool = True) -> RunConfig:
    """Turn a raw config mapping into a :class:`RunConfig`."""
    options = dict(DEFAULTS)
    options.update({k: v for k, v in raw.items() if k not in ("trap",)})
    has_trap = raw.get("trap") is not None
    has_direct = any(raw.get(k) is not None for k in ("Omega", "kappa"))
    if has_trap and has_direct:
        raise ConfigError("give either Omega/kappa/eta/Lambda or trap, not both")
    if "N" not in raw:
        raise ConfigError("config needs N")

    trap = None
    try:
        if has_trap:
            t = raw["trap"]
            trap = model.TrapGeometry(t["mass"], t["omega_trap"], t["q0"], t["a_scatter"])
            params = model.from_trap(trap, raw["N"])
            lambda_mode = "derived"
        else:
            if raw.get("Omega") is None or raw.get("kappa") is None:
                raise ConfigError("config needs Omega and kappa (or a trap block)")
            lam = raw.get("Lambda")
            lambda_mode = "derived" if lam is None else "explicit"
            params = model.resolve_lambda(
                raw["N"], raw["Omega"], raw["kappa"], raw.get("eta", 0.0) or 0.0, lam
            )
    except KeyError as exc:
        raise ConfigError(f"missing trap field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    if options["validation"] not in ("strict", "warn"):
        raise ConfigError("validation must be 'strict' or 'warn'")
    violations = model.validate_regime(params, float(options["ratio_min"]))
    cfg = RunConfig(params, lambda_mode, options, trap, violations)
    if violations:
        msg = "; ".join(violations)
        if options["validation"] == "strict" and require_admissible:
            raise RegimeError(f"inadmissible parameters: {msg}")
        logger.warning("regime violations: %s", msg)
    if params.Omega == 0:
        logger.warning("Omega = 0: time columns hold raw t, not Omega*t")
    return cfg


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- commands


def cmd_spectrum(cfg: RunConfig, out: Path):
    params = cfg.params
    E = numerics.eigh(quantum.build_hamiltonian(params)).values
    analysis = quantum.analyze_spectrum(E, float(cfg.options["doublet_tol"]))
    write_csv(out / "spectrum.csv", ["n", "E_n"], [(i + 1, e) for i, e in enumerate(E)])
    write_json(
        out / "spectrum_analysis.json",
        {
            "parameters": cfg.echo(),
            "doublet_tol": cfg.options["doublet_tol"],
            "inflection_index": analysis.inflection_index,
            "doublet_count": analysis.doublet_count,
            "doublet_flags": [bool(f) for f in analysis.doublet_flags],
        },
    )
    return analysis


def _time_grid(cfg: RunConfig):
    n = int(cfg.options["n_times"])
    if n < 2:
        raise ConfigError("n_times must be >= 2")
    t_end = float(cfg.options["t_end"])
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    return np.linspace(0.0, t_end, n)


def _initial_angles(cfg: RunConfig):
    theta, phi = float(cfg.options["theta0"]), float(cfg.options["phi0"])
    if not 0 <= theta < math.pi:
        raise ConfigError("theta0 must lie in [0, pi)")
    return theta, phi


def classical_on_grid(cfg: RunConfig, omega_t: np.ndarray):
    """Classical orbit sampled exactly on the reported time grid."""
    params = cfg.params
    scale = cfg.time_scale
    theta, phi = _initial_angles(cfg)
    interval = (omega_t[1] - omega_t[0]) / scale
    target = float(cfg.options["step"]) / scale
    per_sample = max(1, math.ceil(interval / target - 1e-9))
    qp = classical.angles_to_qp(theta, phi, params.N / 2)
    orbit = classical.integrate_orbit(
        qp, params, omega_t[-1] / scale, step=interval / per_sample, sample_every=per_sample
    )
    if orbit.t.size != omega_t.size:
        raise numerics.NonFiniteError("classical samples do not match the time grid")
    return orbit


def cmd_evolve(cfg: RunConfig, out: Path, mode: Optional[str] = None):
    mode = mode or cfg.options["mode"]
    if mode not in ("quantum", "classical", "both"):
        raise ConfigError("mode must be quantum, classical or both")
    omega_t = _time_grid(cfg)
    n = omega_t.size
    empty = [None] * n
    jx_c, jx_q, jz_q, fid, norm = empty, empty, empty, empty, empty
    if mode in ("classical", "both"):
        jx_c = classical_on_grid(cfg, omega_t).X
    if mode in ("quantum", "both"):
        theta, phi = _initial_angles(cfg)
        basis = quantum.SpinBasis(cfg.params.N)
        psi0 = quantum.coherent_state(theta, phi, basis)
        ev = quantum.evolve(psi0, quantum.build_hamiltonian(cfg.params, basis), omega_t / cfg.time_scale)
        jx_q, jz_q, fid, norm = ev.jx, ev.jz, ev.fidelity, ev.norm
    header = [
        "Omega_t",
        "Jx_over_J_classical",
        "Jx_over_J_quantum",
        "Jz_over_J_quantum",
        "fidelity",
        "norm",
    ]
    write_csv(out / "evolve.csv", header, zip(omega_t, jx_c, jx_q, jz_q, fid, norm))
    return {"Omega_t": omega_t, "classical": jx_c, "quantum": jx_q, "fidelity": fid}


def fixed_point_summary(cfg: RunConfig) -> dict:
    p = cfg.params
    reports = classical.fixed_points(p)
    rows = []
    for fp in reports:
        d = fp.to_dict()
        d["residual"] = classical.fixed_point_residual(fp, p) if fp.exists else None
        rows.append(d)
    sides = model.bifurcation_sides(p)
    return {
        "parameters": cfg.echo(),
        "bifurcation": {"lhs": sides.lhs, "rhs": sides.rhs, "bifurcated": sides.bifurcated},
        "critical_kappa": model.critical_kappa(p.N, p.Omega, p.eta, p.Lambda),
        "fixed_points": rows,
    }


def cmd_fixed_points(cfg: RunConfig, out: Path):
    summary = fixed_point_summary(cfg)
    write_json(out / "fixed_points.json", summary)
    return summary


def _seeds(cfg: RunConfig):
    seeds = cfg.options.get("seeds")
    if seeds is None:
        return classical.default_seeds()
    try:
        return [(float(t), float(p)) for t, p in seeds]
    except (TypeError, ValueError) as exc:
        raise ConfigError("seeds must be a list of [theta, phi] pairs") from exc


def run_portrait(cfg: RunConfig, seeds=None):
    scale = cfg.time_scale
    t_end = cfg.options.get("portrait_t_end")
    return classical.portrait(
        cfg.params,
        seeds if seeds is not None else _seeds(cfg),
        t_end=None if t_end is None else float(t_end) / scale,
        step=float(cfg.options["portrait_step"]) / scale,
        sample_every=int(cfg.options["sample_every"]),
    )


def cmd_portrait(cfg: RunConfig, out: Path):
    result = run_portrait(cfg)
    rows = []
    if result.orbits is not None:
        o = result.orbits
        omega_t = o.t * cfg.time_scale
        for col, seed_id in enumerate(result.columns):
            if np.all(np.isnan(o.X[:, col])):
                continue
            for i in range(omega_t.size):
                rows.append((seed_id, omega_t[i], o.X[i, col], o.Y[i, col], o.Z[i, col], o.H[i, col]))
    write_csv(out / "portrait.csv", ["seed_id", "Omega_t", "X", "Y", "Z", "H"], rows)
    classes = {
        str(i): (c if c is not None else "error") for i, c in enumerate(result.classes)
    }
    write_json(
        out / "classes.json",
        {
            "parameters": cfg.echo(),
            "seeds": [list(s) for s in result.seeds],
            "classes": classes,
            "errors": {str(k): v for k, v in sorted(result.errors.items())},
            "mst_seed_fraction": result.mst_fraction,
        },
    )
    if result.seeds and all(c is None for c in result.classes):
        raise numerics.NonFiniteError("every portrait seed failed")
    return result


def husimi_filename(omega_t: float) -> str:
    return f"husimi_t{omega_t:.2f}.csv"


def cmd_husimi(cfg: RunConfig, out: Path, times=None):
    times = cfg.options["times"] if times is None else times
    times = [float(t) for t in (times if isinstance(times, (list, tuple)) else [times])]
    theta, phi = _initial_angles(cfg)
    n_theta, n_phi = int(cfg.options["n_theta"]), int(cfg.options["n_phi"])
    basis = quantum.SpinBasis(cfg.params.N)
    psi0 = quantum.coherent_state(theta, phi, basis)
    prop = quantum.Propagator(quantum.build_hamiltonian(cfg.params, basis), basis)
    grids = {}
    for omega_t in times:
        state = prop.state(psi0, omega_t / cfg.time_scale)
        grid = quantum.husimi_grid(state, n_theta, n_phi)
        th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
        write_csv(
            out / husimi_filename(omega_t),
            ["theta", "phi", "Q"],
            zip(th.ravel(), ph.ravel(), grid.Q.ravel()),
        )
        grids[omega_t] = grid
    return grids


def _sweep_params(cfg: RunConfig, var: str, value: float) -> model.ModelParams:
    p = cfg.params
    kappa = value if var == "kappa" else p.kappa
    eta = value if var == "eta" else p.eta
    if cfg.lambda_mode == "explicit":
        return model.ModelParams(p.N, p.Omega, kappa, eta, p.Lambda)
    return model.ModelParams.with_overlap_lambda(p.N, p.Omega, kappa, eta)


def cmd_sweep(cfg: RunConfig, out: Path):
    var = cfg.options["sweep_var"]
    if var not in ("kappa", "eta"):
        raise ConfigError("sweep_var must be kappa or eta")
    rng = cfg.options["range"]
    if rng is None or len(rng) != 2:
        raise ConfigError("sweep needs range = [start, stop]")
    lo, hi = float(rng[0]), float(rng[1])
    steps = int(cfg.options["steps"])
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    if steps > 1 and hi < lo:
        raise ConfigError("range must be increasing")
    values = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    rows = []
    for value in values:
        try:
            p = _sweep_params(cfg, var, float(value))
        except ValueError as exc:
            raise ConfigError(f"{var}={value!r}: {exc}") from exc
        violations = model.validate_regime(p, float(cfg.options["ratio_min"]))
        if violations:
            if cfg.options["validation"] == "strict":
                raise RegimeError(f"{var}={value!r}: " + "; ".join(violations))
            logger.warning("%s=%g: %s", var, value, "; ".join(violations))
        sides = model.bifurcation_sides(p)
        b = [fp for fp in classical.fixed_points(p) if fp.family == "b" and fp.phi == 0.0][0]
        sub = RunConfig(p, cfg.lambda_mode, cfg.options)
        frac = run_portrait(sub, classical.default_seeds()).mst_fraction
        E = numerics.eigh(quantum.build_hamiltonian(p)).values
        doublets = quantum.analyze_spectrum(E, float(cfg.options["doublet_tol"])).doublet_count
        rows.append((value, sides.bifurcated, b.theta if b.exists else None, frac, doublets))
    write_csv(
        out / "sweep.csv",
        ["value", "bifurcated", "theta_b", "mst_seed_fraction", "doublet_count"],
        rows,
    )
    return rows


def cmd_params(cfg: RunConfig, out: Optional[Path] = None):
    p = cfg.params
    d = model.derive(p)
    payload = {
        "parameters": cfg.echo(),
        "derived": d._asdict(),
        "critical_kappa": model.critical_kappa(p.N, p.Omega, p.eta, p.Lambda),
        "bifurcated": model.bifurcation_sides(p).bifurcated,
    }
    if cfg.trap is not None:
        payload["overlap_epsilon"] = cfg.trap.epsilon
    print(json.dumps(_clean(payload), indent=2))
    return payload


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bec-dimer",
        description="Two-mode double-well condensate: quantum and mean-field dynamics.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--mode", choices=("quantum", "classical", "both"), help="evolve mode")
    parser.add_argument(
        "--from-trap", action="store_true", help="params: derive parameters from the trap block"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        raw = {}
        if args.config is not None:
            with open(args.config) as fh:
                raw = json.load(fh)
        raw = apply_overrides(raw, args.set)
        if args.command == "params" and args.from_trap and raw.get("trap") is None:
            raise ConfigError("--from-trap needs a trap block")
        cfg = resolve_config(raw, require_admissible=args.command != "params")
        if args.command != "params":
            args.out.mkdir(parents=True, exist_ok=True)
        dispatch = {
            "spectrum": lambda: cmd_spectrum(cfg, args.out),
            "evolve": lambda: cmd_evolve(cfg, args.out, args.mode),
            "fixed-points": lambda: cmd_fixed_points(cfg, args.out),
            "portrait": lambda: cmd_portrait(cfg, args.out),
            "husimi": lambda: cmd_husimi(cfg, args.out),
            "sweep": lambda: cmd_sweep(cfg, args.out),
            "params": lambda: cmd_params(cfg),
        }
        dispatch[args.command]()
    except (
        numerics.ConvergenceError,
        FloatingPointError,
        classical.ChartError,
        classical.ClassifierDisagreement,
    ) as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except json.JSONDecodeError as exc:
        logger.error("config is not valid JSON: %s", exc)
        return EXIT_PARAMS
    except (ValueError, TypeError, KeyError) as exc:
        logger.error("%s", exc)
        return EXIT_PARAMS
    except OSError as exc:
        logger.error("I/O failure: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
