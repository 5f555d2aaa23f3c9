"""Command-line driver: ``geomech run <config>`` and ``geomech systems``.

Config files are line oriented ``key = value`` with ``#`` comments::

    system = pendulum
    mode = simulate              # simulate | bvp | euler-top
    integrator = verlet
    h = 0.01
    t_final = 10
    param.m = 1
    param.l = 1
    param.g = 9.81
    initial.q0 = 0.1
    initial.p0 = 0               # or initial.v0, converted through M(q)
    output = pendulum.csv
    format = csv                 # csv | json
    tolerance.H = 1e-3

Boundary-value runs add ``final.q<i>`` and ``segments`` (number of path
intervals).  Euler-top runs read the body angular momentum from
``initial.p0..p2`` and the inertia from ``param.i1..i3``.

Exit status: 0 when every conservation check passes, 2 when a check fails,
1 on any error (bad config, solver failure).
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import hamiltonian as ham
from . import lagrangian as lag
from . import manifold as mf
from . import symmetry as sym
from .errors import ConfigParseError, GeomechError
from .systems import CATALOG, REDUCED_CATALOG, SystemConfig, build_system, validate_parameters

MODES = ("simulate", "bvp", "euler-top")
FORMATS = ("csv", "json")
DEFAULT_TOLERANCE = 1e-3
DEFAULT_TOLERANCES = {"stationarity": 1e-8}
# Loading the compiled kernels costs about half a second per process, more
# than a short constant-mass run takes on the numpy path.
SHORT_RUN_STEPS = 2000

_SCALAR_KEYS = {"system", "mode", "integrator", "h", "t_final", "segments", "output", "format"}
_INDEXED = re.compile(r"^(initial\.[qpv]|final\.q)(\d+)$")
_PARAM = re.compile(r"^param\.([A-Za-z_][A-Za-z0-9_]*)$")
_TOLERANCE = re.compile(
    r"^tolerance\.(H|momentum_[xyz]|angular_momentum|phase_momentum_\d+|casimir|energy|stationarity)$")


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    mode: str = "simulate"
    integrator: str = "implicit-midpoint"
    h: Optional[float] = None
    t_final: Optional[float] = None
    initial: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)
    segments: Optional[int] = None
    output_path: str = "trajectory.csv"
    output_format: str = "csv"
    tolerances: dict = field(default_factory=dict)


@dataclass(frozen=True)
class QuantityCheck:
    name: str
    initial: object
    max_abs_drift: float
    relative_drift: float
    tolerance: float

    @property
    def passed(self):
        return self.relative_drift <= self.tolerance

    def to_dict(self):
        return {
            "name": self.name,
            "initial": self.initial,
            "max_abs_drift": self.max_abs_drift,
            "relative_drift": self.relative_drift,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ConservationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"pass": self.passed, "quantities": [c.to_dict() for c in self.checks]}


# --------------------------------------------------------------------------
# parsing

def _float(value, key, line):
    try:
        x = float(value)
    except ValueError:
        raise ConfigParseError(f"{key} expects a number, got {value!r}", line, key) from None
    if not np.isfinite(x):
        raise ConfigParseError(f"{key} must be finite", line, key)
    return x


def _read_lines(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigParseError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ConfigParseError(f"empty key or value in {body!r}", lineno)
        if key in entries:
            raise ConfigParseError(
                f"duplicate key {key!r} (first on line {entries[key][1]})", lineno, key)
        entries[key] = (value, lineno)
    return entries


def parse_config(text, overrides=()):
    """Parse config text into a :class:`RunConfig`.

    ``overrides`` are ``key=value`` strings applied after the file (they
    replace file values).  Errors carry the offending line number.
    """
    entries = _read_lines(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r} is not key=value", key=item)
        key, value = (part.strip() for part in item.split("=", 1))
        entries[key] = (value, None)

    scalars, params, initial, final, tolerances = {}, {}, {}, {}, {}
    velocity_line = None
    for key, (value, line) in entries.items():
        if key in _SCALAR_KEYS:
            scalars[key] = (value, line)
        elif m := _PARAM.match(key):
            params[m.group(1)] = _float(value, key, line)
        elif m := _INDEXED.match(key):
            prefix, idx = m.group(1), int(m.group(2))
            x = _float(value, key, line)
            if prefix == "final.q":
                final[f"q{idx}"] = x
            else:
                initial[prefix[-1] + str(idx)] = x
                if prefix[-1] == "v" and velocity_line is None:
                    velocity_line = line
        elif m := _TOLERANCE.match(key):
            tol = _float(value, key, line)
            if tol <= 0:
                raise ConfigParseError(f"{key} must be positive", line, key)
            tolerances[m.group(1)] = tol
        else:
            raise ConfigParseError(f"unknown key {key!r}", line, key)

    def get(key, default=None):
        return scalars.get(key, (default, None))

    numbers = {}
    for key in ("h", "t_final"):
        if key in scalars:
            value, line = scalars[key]
            x = _float(value, key, line)
            if x <= 0:
                raise ConfigParseError(f"{key} must be positive, got {value}", line, key)
            numbers[key] = x
    segments = None
    if "segments" in scalars:
        value, line = scalars["segments"]
        try:
            segments = int(value)
        except ValueError:
            raise ConfigParseError(f"segments expects an integer, got {value!r}", line, "segments") from None
        if segments < 2:
            raise ConfigParseError("segments must be at least 2", line, "segments")

    if "system" not in scalars:
        raise ConfigParseError("missing required key 'system'", key="system")
    name = scalars["system"][0]
    mode, mode_line = get("mode", "simulate")
    if mode not in MODES:
        raise ConfigParseError(f"mode must be one of {', '.join(MODES)}", mode_line, "mode")
    integrator, int_line = get("integrator", "implicit-midpoint")
    if integrator not in ham.METHODS:
        raise ConfigParseError(
            f"integrator must be one of {', '.join(ham.METHODS)}", int_line, "integrator")
    fmt, fmt_line = get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigParseError("format must be csv or json", fmt_line, "format")

    required = {"simulate": ("h", "t_final"), "bvp": ("t_final",), "euler-top": ("h", "t_final")}
    for key in required[mode]:
        if key not in numbers:
            raise ConfigParseError(f"mode {mode} needs key {key!r}", key=key)
    if mode == "bvp" and segments is None:
        raise ConfigParseError("mode bvp needs key 'segments'", key="segments")
    if any(k.startswith("p") for k in initial) and velocity_line is not None:
        raise ConfigParseError("give either initial.p<i> or initial.v<i>, not both", velocity_line)

    if (mode == "euler-top") != (name in REDUCED_CATALOG):
        raise ConfigParseError(
            f"system {name!r} cannot run in mode {mode}", scalars["system"][1], "system")
    system_config = SystemConfig(name, params)
    if velocity_line is not None:
        initial = _velocities_to_momenta(system_config, initial, velocity_line)

    output = get("output", f"{name}.{fmt}")[0]
    return RunConfig(
        system=system_config, mode=mode, integrator=integrator,
        h=numbers.get("h"), t_final=numbers.get("t_final"),
        initial=initial, final=final, segments=segments,
        output_path=output, output_format=fmt, tolerances=tolerances)


def _velocities_to_momenta(system_config, initial, line):
    try:
        system = build_system(system_config)
    except GeomechError as exc:
        raise ConfigParseError(f"cannot convert velocities: {exc}", line) from None
    man = system.manifold
    q = _vector(initial, "q", man.ncoords)
    v = _vector(initial, "v", man.dim)
    qp = mf.point(man, q)
    s = ham.legendre(system, qp, mf.TangentValue(qp, v))
    out = {k: x for k, x in initial.items() if k[0] == "q"}
    out.update({f"p{i}": float(x) for i, x in enumerate(s.p.components)})
    return out


def _vector(values, prefix, length):
    out = np.zeros(length)
    for key, x in values.items():
        if key[0] == prefix:
            idx = int(key[1:])
            if idx >= length:
                raise ConfigParseError(f"{prefix}{idx} is out of range for length {length}")
            out[idx] = x
    return out


def render_config(config):
    """Config text in the grammar accepted by :func:`parse_config`."""
    lines = [f"system = {config.system.name}", f"mode = {config.mode}",
             f"integrator = {config.integrator}"]
    if config.h is not None:
        lines.append(f"h = {config.h!r}")
    if config.t_final is not None:
        lines.append(f"t_final = {config.t_final!r}")
    if config.segments is not None:
        lines.append(f"segments = {config.segments}")
    lines += [f"param.{k} = {v!r}" for k, v in config.system.parameters.items()]
    lines += [f"initial.{k} = {v!r}" for k, v in config.initial.items()]
    lines += [f"final.{k} = {v!r}" for k, v in config.final.items()]
    lines += [f"tolerance.{k} = {v!r}" for k, v in config.tolerances.items()]
    lines += [f"output = {config.output_path}", f"format = {config.output_format}"]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# running

def _check(name, initial, series, config):
    """Drift of a (possibly vector) quantity sampled as rows of ``series``."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    drift = float(np.max(np.abs(series - series[0])))
    scale = float(np.max(np.abs(series[0])))
    relative = drift / scale if scale > 1e-12 else drift
    tol = config.tolerances.get(name, DEFAULT_TOLERANCES.get(name, DEFAULT_TOLERANCE))
    return QuantityCheck(name, initial, drift, relative, tol)


def _noether_actions(system):
    man = system.manifold
    actions = []
    if man == mf.euclidean(3):
        for axis, label in zip(np.eye(3), "xyz"):
            act = sym.translation(axis)
            if sym.is_invariant(system, act):
                actions.append((f"momentum_{label}", act))
        if all(sym.is_invariant(system, sym.rotation(axis)) for axis in np.eye(3)):
            actions.append(("angular_momentum", sym.rotation([0.0, 0.0, 1.0])))
    for kind, _, _, t0, _ in man._leaves:
        if kind == mf.CIRCLE:
            act = sym.phase_rotation(t0)
            if sym.is_invariant(system, act):
                actions.append((f"phase_momentum_{t0}", act))
    return actions


def _simulate(config):
    system = build_system(config.system)
    man = system.manifold
    q = _vector(config.initial, "q", man.ncoords)
    p = _vector(config.initial, "p", man.dim)
    s0 = ham.PhaseState.from_arrays(man, q, p)
    n_steps = max(1, int(round(config.t_final / config.h)))
    short = system.constant_mass and n_steps <= SHORT_RUN_STEPS
    backend = "python" if short else "auto"
    traj = ham.integrate(system, s0, config.h, n_steps, config.integrator, backend)
    energy = ham.trajectory_energy(system, traj, backend)
    checks = [_check("H", float(energy[0]), energy, config)]
    for name, act in _noether_actions(system):
        mu = sym._charge(act, traj.qs, traj.ps)
        checks.append(_check(name, mu[0].tolist(), mu, config))

    columns = (["t"] + [f"q{i}" for i in range(traj.qs.shape[1])]
               + [f"p{i}" for i in range(traj.ps.shape[1])] + ["H"])
    meta = {"system": system.name, "method": traj.method, "h": traj.step}
    if config.output_format == "csv":
        ham.write_trajectory_csv(system, traj, config.output_path, energy)
    else:
        rows = np.column_stack([traj.times, traj.qs, traj.ps, energy])
        _write_json(config.output_path, meta, columns, rows)
    return ConservationReport(tuple(checks))


def _bvp(config):
    system = build_system(config.system)
    man = system.manifold
    qa = mf.point(man, _vector(config.initial, "q", man.ncoords))
    qb = mf.point(man, _vector(config.final, "q", man.ncoords))
    path = lag.solve_bvp(system, qa, qb, config.t_final, config.segments)
    grad = np.array(lag.action_gradient(system, path))
    check = _check("stationarity", 0.0, np.vstack([np.zeros((1, man.dim)), grad]), config)
    if config.output_format == "csv":
        lag.write_path_csv(path, config.output_path)
    else:
        columns = ["t"] + [f"q{i}" for i in range(path.coords.shape[1])]
        meta = {"system": system.name, "mode": "bvp", "segments": path.N}
        _write_json(config.output_path, meta, columns, np.column_stack([path.times, path.coords]))
    return ConservationReport((check,))


def _euler_top(config):
    prm = validate_parameters(config.system)
    inertia = np.array([prm["i1"], prm["i2"], prm["i3"]])
    pi0 = _vector(config.initial, "p", 3)
    n_steps = max(1, int(round(config.t_final / config.h)))
    path = sym.integrate_euler_top(sym.BodyAngularMomentum(pi0, inertia), config.h, n_steps)
    cas = sym.casimir_series(path)
    en = sym.energy_series(path, inertia)
    checks = (_check("casimir", float(cas[0]), cas, config),
              _check("energy", float(en[0]), en, config))
    if config.output_format == "csv":
        sym.write_reduced_csv(path, inertia, config.h, config.output_path)
    else:
        times = config.h * np.arange(path.shape[0])
        columns = ["t", "Pi1", "Pi2", "Pi3", "casimir", "energy"]
        meta = {"system": "euler-top", "method": "implicit-midpoint", "h": config.h}
        _write_json(config.output_path, meta, columns, np.column_stack([times, path, cas, en]))
    return ConservationReport(checks)


def _write_json(path, meta, columns, rows):
    doc = {"meta": meta, "columns": columns, "rows": np.asarray(rows).tolist()}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def execute(config):
    """Run ``config``, write the output and report files, return the report."""
    runner = {"simulate": _simulate, "bvp": _bvp, "euler-top": _euler_top}[config.mode]
    report = runner(config)
    with open(f"{config.output_path}.report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def run(config):
    """Run ``config`` and return the process exit status (0, 1 or 2)."""
    try:
        report = execute(config)
    except (GeomechError, OSError, np.linalg.LinAlgError) as exc:
        print(f"geomech: error: {exc}", file=sys.stderr)
        return 1
    for c in report.checks:
        if not c.passed:
            print(f"geomech: {c.name} drift {c.relative_drift:.3e} exceeds {c.tolerance:.3e}",
                  file=sys.stderr)
    return 0 if report.passed else 2


def _list_systems():
    for name, params in {**CATALOG, **REDUCED_CATALOG}.items():
        print(f"{name}: {' '.join(params)}")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="geomech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a configuration file")
    run_p.add_argument("config", nargs="?", help="config file (optional with --set)")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override or add a config key")
    sub.add_parser("systems", help="list catalog systems and their parameters")
    args = parser.parse_args(argv)

    if args.command == "systems":
        _list_systems()
        return 0
    try:
        text = ""
        if args.config is not None:
            with open(args.config) as fh:
                text = fh.read()
        config = parse_config(text, args.overrides)
    except (ConfigParseError, OSError) as exc:
        print(f"geomech: error: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
