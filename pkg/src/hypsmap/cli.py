"""Batch runner: ``hypsmap <command> --config <path> [--set section.key=value]...``.

Every command produces a :class:`Report`, written as CSV preceded by a
``# key: value`` manifest. Nothing time- or host-dependent enters the output,
so an identical configuration reproduces the file byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (a
diagnostic file is written next to the output).
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import COMMANDS, ConfigError, RunConfig, apply_override, load_config
from .evolve import EvolutionError, EvolveConfig, run
from .gauge import FrameError, GaugeFields, energy_identity_gap, gauge_transform
from .grid import build_grid, interior_mask, l2_norm, radial_l2_norm
from .kernel import KernelQuadratureError, decay_fit, free_kernel, kernel_sup
from .maps import MapError, bump_map, energy, q_lambda, schroedinger_rhs, soliton_energy, tension
from .probes import bump_with_norm, forward_lipschitz, inverse_lipschitz
from .reconstruct import ReconstructionError, reconstruct_map

__all__ = ["Report", "NumericalFailure", "main", "run_command", "format_report"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (
    ArithmeticError,
    FrameError,
    ReconstructionError,
    EvolutionError,
    KernelQuadratureError,
    MapError,
)


class NumericalFailure(RuntimeError):
    """A run that produced output but did not finish; carries the partial report."""

    def __init__(self, message: str, report: "Report"):
        super().__init__(message)
        self.report = report


@dataclass
class Report:
    command: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    results: list[tuple[str, object]] = field(default_factory=list)
    extra_files: list[tuple[str, "Report"]] = field(default_factory=list)


# ------------------------------------------------------------------ output


def _fmt(x, digits: int) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{digits}e}"
    return str(x)


def _manifest(cfg: RunConfig, command: str) -> list[tuple[str, str]]:
    g = cfg.grid
    out = [
        ("command", command),
        ("hypsmap", __version__),
        ("python", platform.python_version()),
        ("numpy", np.__version__),
        ("scipy", scipy.__version__),
        ("grid.h", _fmt(g.r_max / g.n_points, 17)),
    ]
    out += list(cfg.items())
    return out


def format_report(rep: Report, cfg: RunConfig) -> str:
    d = cfg.output.digits
    buf = io.StringIO()
    for k, v in _manifest(cfg, rep.command):
        buf.write(f"# {k}: {v}\n")
    for k, v in rep.results:
        buf.write(f"# result.{k}: {_fmt(v, d)}\n")
    buf.write(",".join(rep.columns) + "\n")
    for row in rep.rows:
        buf.write(",".join(_fmt(x, d) for x in row) + "\n")
    return buf.getvalue()


def _write(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _diagnostic_path(cfg: RunConfig) -> str:
    if cfg.output.diagnostic:
        return cfg.output.diagnostic
    return "hypsmap.diag" if cfg.output.path == "-" else cfg.output.path + ".diag"


# ---------------------------------------------------------------- commands


def _map_from(cfg: RunConfig, g):
    m = cfg.map
    if m.kind == "q_lambda":
        return q_lambda(m.lam, g)
    if m.kind == "bump":
        return bump_map(g, m.amplitude, m.twist)
    return bump_map(g, 0.0, 0.0)


def cmd_soliton_check(cfg: RunConfig) -> Report:
    """Energy, stationarity and gauge identity for each ``Q_lambda``."""
    g = build_grid(cfg.grid.n_points, cfg.grid.r_max)
    mask = interior_mask(g)
    rep = Report(
        "soliton-check",
        [
            "lambda",
            "energy",
            "exact",
            "rel_error",
            "rhs_sup",
            "tension_sup",
            "pi_norm_plus",
            "pi_norm_minus",
            "u3_inf",
            "gap_plus",
            "gap_minus",
        ],
    )
    for lam in cfg.soliton.lambdas:
        u = q_lambda(lam, g)
        e = energy(u)
        exact = soliton_energy(lam)
        _, gf = gauge_transform(u)
        gap = energy_identity_gap(u, gf)
        rel = abs(e - exact) / exact if exact > 0 else abs(e)
        rep.rows.append(
            (
                lam,
                e,
                exact,
                rel,
                schroedinger_rhs(u).sup(mask),
                tension(u).sup(mask),
                gap["pi_norm_plus"],
                gap["pi_norm_minus"],
                float(u.u[-1, 2]),
                gap["gap_plus"],
                gap["gap_minus"],
            )
        )
    return rep


def cmd_roundtrip(cfg: RunConfig) -> Report:
    """Forward and inverse gauge transform of one map, plus Lipschitz probes."""
    g = build_grid(cfg.grid.n_points, cfg.grid.r_max)
    u = _map_from(cfg, g)
    _, gf = gauge_transform(u)
    u3_inf = float(u.u[-1, 2])
    rec = reconstruct_map(gf.psi_plus, g, u3_inf)
    diff = rec.map.u - u.u
    rep = Report("roundtrip", ["kind", "index", "input_distance", "output_distance", "constant"])
    rep.results = [
        ("psi_plus_norm", radial_l2_norm(gf.psi_plus, g)),
        ("sup_error", float(np.max(np.abs(diff)))),
        ("l2_error", l2_norm(np.linalg.norm(diff, axis=1), g)),
        ("a2_error", float(np.max(np.abs(rec.a2 - u.u[:, 2])))),
    ]
    rc = cfg.roundtrip
    if rc.probes:
        rng = np.random.default_rng(rc.seed)
        probes = forward_lipschitz(u, rng, rc.probes, rc.probe_size)
        probes += inverse_lipschitz(gf.psi_plus, g, rng, rc.probes, rc.probe_size, u3_inf)
        for p in probes:
            rep.rows.append((p.kind, p.index, p.input_distance, p.output_distance, p.constant))
        for kind in ("forward", "inverse"):
            c = [p.constant for p in probes if p.kind == kind]
            rep.results.append((f"{kind}_spread", max(c) / min(c)))
    return rep


def _initial_fields(cfg: RunConfig, g) -> GaugeFields:
    ev = cfg.evolve
    if ev.initial == "map":
        return gauge_transform(_map_from(cfg, g))[1]
    if ev.initial == "small":
        return gauge_transform(bump_with_norm(g, ev.norm, cfg.map.twist))[1]
    if ev.initial == "gaussian":
        f = ev.amplitude * np.exp(-(g.r / ev.width) ** 2) + 0j
        return GaugeFields.from_psi(f, f.copy(), g)
    z = np.zeros(g.n_points, dtype=complex)
    return GaugeFields.from_psi(z, z.copy(), g)


def _dump_state(gf: GaugeFields) -> Report:
    rep = Report("evolve.final_state", ["r", "re_psi_plus", "im_psi_plus", "re_psi_minus", "im_psi_minus", "a2", "a0"])
    rep.rows = list(
        zip(
            gf.grid.r,
            gf.psi_plus.real,
            gf.psi_plus.imag,
            gf.psi_minus.real,
            gf.psi_minus.imag,
            gf.a2,
            gf.a0,
        )
    )
    return rep


def cmd_evolve(cfg: RunConfig) -> Report:
    """Split-step run with one ledger row per snapshot."""
    g = build_grid(cfg.grid.n_points, cfg.grid.r_max)
    ev = cfg.evolve
    ecfg = EvolveConfig(ev.dt, ev.t_end, g.n_points, g.r_max, ev.every, ev.potentials)
    traj = run(ecfg, _initial_fields(cfg, g))
    first = traj.snapshots[0]
    m0p, m0m = first.ledger.mass_plus, first.ledger.mass_minus
    a_plus, a_minus = np.abs(first.gf.psi_plus), np.abs(first.gf.psi_minus)
    rep = Report(
        "evolve",
        [
            "step",
            "t",
            "mass_plus",
            "mass_minus",
            "mass_drift",
            "compat_residual",
            "l4_accumulator",
            "mod_dev_plus",
            "mod_dev_minus",
            "guard_max",
        ],
    )

    def drift(m, m0):
        return abs(m - m0) / m0 if m0 > 0 else abs(m)

    for s in traj.snapshots:
        led = s.ledger
        rep.rows.append(
            (
                led.steps,
                s.t,
                led.mass_plus,
                led.mass_minus,
                max(drift(led.mass_plus, m0p), drift(led.mass_minus, m0m)),
                led.compat_residual,
                led.l4_accumulator,
                float(np.max(np.abs(np.abs(s.gf.psi_plus) - a_plus))),
                float(np.max(np.abs(np.abs(s.gf.psi_minus) - a_minus))),
                led.guard_max,
            )
        )
    rep.results = [("steps", ecfg.n_steps), ("step_size", ecfg.step_size), ("completed", traj.completed)]
    if cfg.output.final_state:
        rep.extra_files.append((cfg.output.final_state, _dump_state(traj.final.gf)))
    if not traj.completed:
        raise NumericalFailure(traj.message, rep)
    return rep


def cmd_kernel_decay(cfg: RunConfig) -> Report:
    """Large-time slope at a fixed distance and small-time slope of the sup proxy."""
    k = cfg.kernel
    rep = Report("kernel-decay", ["kind", "rho", "t_min", "t_max", "n", "slope", "half_width"])
    mags = [abs(free_kernel(t, k.rho_large, k.tol).value) for t in k.t_large]
    fit = decay_fit(k.t_large, mags)
    rep.rows.append(("fixed_rho", k.rho_large, min(k.t_large), max(k.t_large), len(k.t_large), fit.slope, fit.half_width))
    rhos = np.linspace(0.0, k.rho_small_max, k.n_rho)
    sups = [kernel_sup(t, rhos, k.tol) for t in k.t_small]
    fit = decay_fit(k.t_small, sups)
    rep.rows.append(("sup_rho", k.rho_small_max, min(k.t_small), max(k.t_small), len(k.t_small), fit.slope, fit.half_width))
    return rep


COMMAND_TABLE = {
    "soliton-check": cmd_soliton_check,
    "roundtrip": cmd_roundtrip,
    "evolve": cmd_evolve,
    "kernel-decay": cmd_kernel_decay,
}


def _threads(n_jobs: int) -> int:
    raw = os.environ.get("HYPSMAP_THREADS", "")
    if not raw:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"HYPSMAP_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError("HYPSMAP_THREADS must be >= 1")
    return max(1, min(cap, n_jobs))


def cmd_sweep(cfg: RunConfig) -> Report:
    """Run one command per value of ``sweep.parameter``; rows are concatenated in order."""
    sw = cfg.sweep
    if not sw.values:
        raise ConfigError("sweep.values is empty")
    variants = []
    for v in sw.values:
        c = apply_override(cfg, f"{sw.parameter}={v}")
        variants.append(dataclasses.replace(c, output=dataclasses.replace(c.output, final_state="")))
    fn = COMMAND_TABLE[sw.command]

    def job(c):
        try:
            return fn(c), None
        except NumericalFailure as exc:
            return exc.report, str(exc)
        except NUMERICAL_ERRORS as exc:
            return None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=_threads(len(variants))) as pool:
        outcomes = list(pool.map(job, variants))
    columns = None
    rep = Report("sweep", [])
    failures = []
    for i, (v, (sub, err)) in enumerate(zip(sw.values, outcomes)):
        if err is not None:
            failures.append(f"{sw.parameter}={v}: {err}")
        if sub is None:
            continue
        columns = columns or ["sweep_value"] + sub.columns
        rep.rows += [(v,) + tuple(row) for row in sub.rows]
        rep.results += [(f"run{i}.{k}", x) for k, x in sub.results]
    rep.columns = columns or ["sweep_value"]
    if failures:
        raise NumericalFailure("; ".join(failures), rep)
    return rep


COMMAND_TABLE["sweep"] = cmd_sweep


def run_command(command: str, cfg: RunConfig) -> Report:
    return COMMAND_TABLE[command](cfg)


# --------------------------------------------------------------------- main


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypsmap", description="Equivariant Schroedinger maps on the hyperbolic plane.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI file with [section] key = value entries")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config entry; may be repeated",
    )
    return p


def _emit(rep: Report, cfg: RunConfig):
    _write(format_report(rep, cfg), cfg.output.path)
    for path, sub in rep.extra_files:
        _write(format_report(sub, cfg), path)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.overrides)
        rep = run_command(args.command, cfg)
    except ConfigError as exc:
        print(f"hypsmap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, *NUMERICAL_ERRORS) as exc:
        diag = _diagnostic_path(cfg)
        text = f"command: {args.command}\nerror: {type(exc).__name__}\nmessage: {exc}\n"
        text += "".join(f"config.{k}: {v}\n" for k, v in cfg.items())
        Path(diag).write_text(text, encoding="utf-8", newline="\n")
        if isinstance(exc, NumericalFailure):
            _emit(exc.report, cfg)
        print(f"hypsmap: numerical failure: {exc} (details in {diag})", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:  # argument-range checks inside the numerics
        print(f"hypsmap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(rep, cfg)
    return EXIT_OK


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
