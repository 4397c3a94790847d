"""Batch front door: config-driven runs that write CSV/JSON artifacts.

Subcommands mirror the pipeline stages: `eigs` (spectrum), `simulate`
(controlled waves plus support and oracle reports), `model` (gauge and
model-coefficient tables), `verify` (the full check suite), `recover`
(potential branches from model coefficients).

Config is INI-style with sections [problem], [numerics], [gauge],
[controls], [tolerances]; every key has a default, so a missing file or
empty section still yields a runnable configuration.  Outputs are
deterministic byte-for-byte for a fixed config and seed: floats print as
%.17g in CSV and round-trip repr in JSON, keys are sorted, and no
timestamps are embedded.

Exit codes: 0 all good, 2 configuration problems, 3 numerical failures
(inadmissible potential or gauge, instability), 4 verification failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analytic import parse_expression
from .control import (ControlSignal, control_to_kernel, fdtd_oracle,
                      smooth_wave, support_report, wavefield_write_csv,
                      WaveField)
from .errors import (ConfigurationError, ContractError, NumericalError,
                     SlwaveError, VerificationFailure)
from .grid import GridFunction, build_grid, quad, write_csv
from .model import default_gauge
from .operator import ModelCoefficients, assemble_coefficients, recover_potential
from .sturm import check_lower_bound, dirichlet_eigensystem, kernel_basis, potential
from .verify import Workspace, run_all

_EPS_FLOOR = 100.0 * np.finfo(float).eps


@dataclass
class RunConfig:
    """Resolved run parameters; every field validated on construction."""

    l: float = 1.0
    potential_expr: str = "const(0)"
    grid_n: int = 2000
    modes: int = 200
    horizon: float = 0.5
    cfl: float = 0.5
    shoot_tol: float = 1e-10
    gauge_e: Optional[tuple] = None
    gauge_e1: Optional[tuple] = None
    gauge_e2: Optional[tuple] = None
    f0_expr: str = "bump(0.06, 0.1, 1.0, 6)"
    fl_expr: str = "const(0)"
    times: tuple = ()
    run_fdtd: bool = True
    coefficients_path: Optional[str] = None
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    t_perturbation: float = 0.0
    out_dir: Path = Path(".")
    fmt: str = "csv"

    def __post_init__(self):
        for name in ("l", "horizon", "cfl", "shoot_tol"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"{name} must be positive")
        if self.grid_n <= 0 or self.modes <= 0:
            raise ConfigurationError("grid_n and modes must be positive")
        if any(t <= 0.0 for t in self.times):
            raise ConfigurationError("snapshot times must be positive")
        for key, val in self.tolerances.items():
            if not val >= _EPS_FLOOR:
                raise ConfigurationError(
                    f"tolerance {key}={val:g} is below 100x machine precision")
        parse_expression(self.potential_expr)   # fail early if unresolvable
        if self.fmt not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format {self.fmt!r}")

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


def _parse_pair(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ConfigurationError(
            "gauge element needs four numbers: re(c0), im(c0), re(cl), im(cl)")
    try:
        v = [float(p) for p in parts]
    except ValueError:
        raise ConfigurationError(f"bad gauge coefficients {text!r}") from None
    return (complex(v[0], v[1]), complex(v[2], v[3]))


def load_config(path: Optional[str], out_dir: str = ".", fmt: str = "csv",
                seed: Optional[int] = None,
                t_perturbation: float = 0.0) -> RunConfig:
    cp = configparser.ConfigParser()
    if path is not None:
        read = cp.read(path)
        if not read:
            raise ConfigurationError(f"cannot read config file {path}")

    def get(section, key, default, cast):
        try:
            raw = cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            return default
        try:
            return cast(raw)
        except (ValueError, TypeError):
            raise ConfigurationError(
                f"bad value for [{section}] {key}: {raw!r}") from None

    def as_bool(raw):
        return raw.strip().lower() in ("1", "true", "yes", "on")

    def as_times(raw):
        return tuple(float(p) for p in raw.split(",") if p.strip())

    gauge_kind = get("gauge", "gauge", "default", str).strip().lower()
    ge = ge1 = ge2 = None
    if gauge_kind not in ("default", "custom"):
        raise ConfigurationError(f"unknown gauge kind {gauge_kind!r}")
    if gauge_kind == "custom" or cp.has_option("gauge", "e"):
        ge = get("gauge", "e", None, _parse_pair)
        ge1 = get("gauge", "e1", None, _parse_pair)
        ge2 = get("gauge", "e2", None, _parse_pair)

    tolerances = {}
    if cp.has_section("tolerances"):
        for key in cp.options("tolerances"):
            tolerances[key] = get("tolerances", key, 0.0, float)

    cfg_seed = get("numerics", "seed", 0, int)
    cfg = RunConfig(
        l=get("problem", "l", 1.0, float),
        potential_expr=get("problem", "potential", "const(0)", str),
        grid_n=get("numerics", "grid_n", 2000, int),
        modes=get("numerics", "modes", 200, int),
        horizon=get("numerics", "horizon", 0.5, float),
        cfl=get("numerics", "cfl", 0.5, float),
        shoot_tol=get("numerics", "shoot_tol", 1e-10, float),
        gauge_e=ge, gauge_e1=ge1, gauge_e2=ge2,
        f0_expr=get("controls", "f0", "bump(0.06, 0.1, 1.0, 6)", str),
        fl_expr=get("controls", "fl", "const(0)", str),
        times=get("controls", "times", (), as_times),
        run_fdtd=get("numerics", "fdtd", True, as_bool),
        coefficients_path=get("problem", "coefficients", None, str),
        tolerances=tolerances,
        seed=cfg_seed if seed is None else int(seed),
        t_perturbation=float(t_perturbation),
        out_dir=Path(out_dir),
        fmt=fmt,
    )
    return cfg


def _fmt_float(x: float) -> str:
    return "%.17g" % float(x)


def _write_table(cfg: RunConfig, name: str, header: list, rows) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "json":
        path = cfg.out_dir / f"{name}.json"
        payload = {"columns": header,
                   "rows": [[float(v) for v in row] for row in rows]}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path
    path = cfg.out_dir / f"{name}.csv"
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_float(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_json(cfg: RunConfig, name: str, payload: dict) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _problem(cfg: RunConfig):
    grid = build_grid(cfg.l, cfg.grid_n)
    q = potential(grid, parse_expression(cfg.potential_expr))
    return grid, q


def _control(cfg: RunConfig) -> ControlSignal:
    return ControlSignal(parse_expression(cfg.f0_expr),
                         parse_expression(cfg.fl_expr))


def run_eigs(cfg: RunConfig) -> list:
    """Spectrum artifacts: eigenvalue table, kappa summary, eigenfunctions."""
    _, q = _problem(cfg)
    es = dirichlet_eigensystem(q, cfg.modes, rel_tol=cfg.shoot_tol)
    kappa = check_lower_bound(es)
    files = [_write_table(cfg, "eigenvalues", ["n", "lambda"],
                          [(k + 1, es.lam[k]) for k in range(es.count)])]
    files.append(_write_json(cfg, "eigs_summary",
                             {"kappa": kappa, "count": es.count,
                              "l": cfg.l, "grid_n": cfg.grid_n}))
    for k in range(es.count):
        f = es.eigenfunction(k)
        if cfg.fmt == "json":
            files.append(_write_table(cfg, f"eigenfunction_{k + 1:04d}",
                                      ["x", "re", "im"],
                                      zip(f.grid.x, f.values.real, f.values.imag)))
        else:
            path = cfg.out_dir / f"eigenfunction_{k + 1:04d}.csv"
            write_csv(f, path)
            files.append(path)
    return files


def run_simulate(cfg: RunConfig) -> list:
    """Controlled waves at the requested times, support report, FDTD check."""
    grid, q = _problem(cfg)
    es = dirichlet_eigensystem(q, cfg.modes, rel_tol=cfg.shoot_tol)
    check_lower_bound(es)
    kb = kernel_basis(q)
    c = _control(cfg)
    kc = control_to_kernel(c, kb)
    times = cfg.times if cfg.times else (cfg.horizon,)
    snaps = [smooth_wave(kc, t, es) for t in times]
    wf = WaveField(grid, np.asarray(times, dtype=float),
                   np.stack([s.values for s in snaps]))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "json":
        wf_path = _write_table(cfg, "wavefield", ["t", "x", "re", "im"],
                               [(ti, xv, val.real, val.imag)
                                for ti, row in zip(wf.times, wf.values)
                                for xv, val in zip(grid.x, row)])
    else:
        wf_path = cfg.out_dir / "wavefield.csv"
        wavefield_write_csv(wf, wf_path)
    support = []
    for t, s in zip(times, snaps):
        rep = support_report(s, t, tol=cfg.tol("support", 1e-6))
        support.append({"t": t, "ratio": rep.ratio, "outside_mass": rep.outside_mass,
                        "total_mass": rep.total_mass, "passed": rep.passed})
    payload = {"times": list(times), "support": support, "fdtd_l2": None}
    if cfg.run_fdtd:
        horizon = max(times)
        oracle = fdtd_oracle(c, q, horizon=horizon, cfl=cfg.cfl,
                             store_every=1 << 30)
        diff = snaps[int(np.argmax(times))].values - oracle.values[-1]
        l2 = float(np.sqrt(quad(GridFunction(grid, np.abs(diff) ** 2 + 0j)).real))
        payload["fdtd_l2"] = l2
        payload["fdtd_tol"] = cfg.tol("fdtd", 1e-3)
        payload["fdtd_passed"] = l2 <= cfg.tol("fdtd", 1e-3)
    files = [wf_path, _write_json(cfg, "simulate_report", payload)]
    return files


def _gauge_of(cfg: RunConfig):
    _, q = _problem(cfg)
    kb = kernel_basis(q)
    return q, default_gauge(kb, e=cfg.gauge_e, e1=cfg.gauge_e1, e2=cfg.gauge_e2)


def run_model(cfg: RunConfig) -> list:
    """Gauge table on the half grid plus model coefficients off the band."""
    _, gd = _gauge_of(cfg)
    mc = assemble_coefficients(gd)
    gauge_header = ["x"]
    for nm in ("T11", "T12", "T21", "T22", "G11", "G12", "G21", "G22"):
        gauge_header += [f"re({nm})", f"im({nm})"]
    gauge_header.append("rho")
    rows = []
    for j in range(gd.half + 1):
        row = [float(gd.half_x[j])]
        for M in (gd.T, gd.G):
            for a in range(2):
                for b in range(2):
                    row += [float(M[j, a, b].real), float(M[j, a, b].imag)]
        row.append(float(gd.rho[j]))
        rows.append(row)
    files = [_write_table(cfg, "gauge", gauge_header, rows)]

    model_header = ["x"]
    for nm in ("P11", "P12", "P21", "P22", "Q11", "Q12", "Q21", "Q22"):
        model_header += [f"re({nm})", f"im({nm})"]
    mrows = []
    for j in np.flatnonzero(mc.admissible):
        row = [float(mc.half_x[j])]
        for M in (mc.Phat, mc.Qhat):
            for a in range(2):
                for b in range(2):
                    row += [float(M[j, a, b].real), float(M[j, a, b].imag)]
        mrows.append(row)
    files.append(_write_table(cfg, "model", model_header, mrows))
    return files


def _coefficients_from_csv(path: str, l: float) -> ModelCoefficients:
    """Rebuild sampled coefficients from a model table; the analytic P^'
    is unavailable, so downstream recovery must use the observer path."""
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("x,"):
        raise ConfigurationError(f"{path} is not a model coefficient table")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    if data.ndim != 2 or data.shape[1] != 17:
        raise ConfigurationError(f"{path} has the wrong column count")
    xs = data[:, 0]
    h = float(xs[1] - xs[0]) if xs.size > 1 else l / 4.0
    m = int(round(0.5 * l / h))
    half_x = np.arange(m + 1, dtype=float) * h
    js = np.rint(xs / h).astype(int)
    if np.any(js < 0) or np.any(js > m):
        raise ConfigurationError(f"{path} rows fall outside [0, l/2]")
    admissible = np.zeros(m + 1, dtype=bool)
    admissible[js] = True
    Phat = np.zeros((m + 1, 2, 2), dtype=complex)
    Qhat = np.zeros_like(Phat)
    for row, j in enumerate(js):
        vals = data[row, 1:]
        Phat[j] = (vals[0:8:2] + 1j * vals[1:8:2]).reshape(2, 2)
        Qhat[j] = (vals[8:16:2] + 1j * vals[9:16:2]).reshape(2, 2)
    return ModelCoefficients(half_x, admissible, Phat, np.zeros_like(Phat),
                             Qhat, np.zeros((m + 1, 2)),
                             np.zeros(m + 1, dtype=complex), h, 0.0)


def run_recover(cfg: RunConfig) -> list:
    """Potential branches from model coefficients; reflection note attached."""
    if cfg.coefficients_path is not None:
        mc = _coefficients_from_csv(cfg.coefficients_path, cfg.l)
        rr = recover_potential(mc, sampled_derivatives=True)
        compare = None
    else:
        _, gd = _gauge_of(cfg)
        mc = assemble_coefficients(gd)
        rr = recover_potential(mc)
        qf = parse_expression(cfg.potential_expr)
        qx = qf.deriv(rr.x, 0)
        qr = qf.deriv(cfg.l - rr.x, 0)
        direct = np.maximum(np.abs(rr.q1 - qx), np.abs(rr.q2 - qr))
        flipped = np.maximum(np.abs(rr.q1 - qr), np.abs(rr.q2 - qx))
        compare = float(np.max(np.minimum(direct, flipped)))
    files = [_write_table(cfg, "recovery", ["x", "q1", "q2", "collision"],
                          [(rr.x[i], rr.q1[i], rr.q2[i], float(rr.collision[i]))
                           for i in range(rr.x.size)])]
    payload = {"branches": [[float(v) for v in rr.q1],
                            [float(v) for v in rr.q2]],
               "collision_flags": [bool(b) for b in rr.collision],
               "reflection_note": rr.note,
               "max_imaginary_part": rr.max_imag}
    if compare is not None:
        payload["truth_error"] = compare
    files.append(_write_json(cfg, "recovery_report", payload))
    return files


def run_verify(cfg: RunConfig) -> list:
    """Full check suite; report written even when checks fail.

    The check tolerances are calibrated at a fixed workspace size, so the
    [numerics] grid/mode settings are ignored here; only the seed and the
    fault-injection knob flow through.
    """
    ws = Workspace(seed=cfg.seed, t_perturbation=cfg.t_perturbation)
    report = run_all(ws)
    path = _write_json(cfg, "verification_report",
                       json.loads(report.to_json()))
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark} {c.name}: measured {c.measured:.3e} {c.sense} {c.tolerance:.3e}")
    if not report.all_passed:
        raise VerificationFailure(
            "verification checks failed: "
            + ", ".join(c.name for c in report.checks if not c.passed))
    return [path]


_COMMANDS = {"eigs": run_eigs, "simulate": run_simulate, "model": run_model,
             "verify": run_verify, "recover": run_recover}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="slwave",
        description="Wave-model pipeline: spectra, controlled waves, gauge "
                    "and model coefficient tables, verification, recovery.")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", default="csv", choices=("csv", "json"),
                   dest="fmt", help="table output format")
    p.add_argument("--seed", default=None, type=int,
                   help="seed override for randomized probes")
    p.add_argument("--inject-t-perturbation", default=0.0, type=float,
                   dest="t_perturbation", help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, out_dir=args.out, fmt=args.fmt,
                          seed=args.seed, t_perturbation=args.t_perturbation)
        files = _COMMANDS[args.command](cfg)
    except (ConfigurationError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SlwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
