"""Command-line entry point.

Subcommands ``simulate``, ``verify-envelope``, ``convergence-study`` and
``kernel-table`` all write CSV/JSON files (each embedding the resolved
configuration) plus PNG figures into ``--out``.

Exit codes: 0 success/PASS, 2 configuration error, 3 numerical-resolution
error, 4 certificate FAIL (including envelope construction failures).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .config import RunConfig, load_config
from .envelopes import (SUBADDITIVITY_TOL, GevreyEnvelope, PsiFunction, build_envelope,
                        certify_propagation, check_subadditivity, minimal_R0)
from .errors import (ConfigError, DomainError, EnvelopeError, NormalizationError,
                     ResolutionError, WildGevreyError)
from .initial_data import DatumSpec, fit_decay, realize
from .kernels import KernelSpec, build_cutoff, kernel_table
from .moments import conservation_report
from .modes import Mode
from .spectral import SpectralGrid, SpectralState, make_grid, write_states_csv
from .wild import (consecutive_differences, ode_trajectory, stable_dt, sup_difference,
                   wild_trajectory)

EXIT_OK, EXIT_CONFIG, EXIT_RESOLUTION, EXIT_FAIL = 0, 2, 3, 4
log = logging.getLogger("wildgevrey")


def kernel_spec(cfg: RunConfig) -> KernelSpec:
    if cfg.kernel == "kac_power":
        return KernelSpec.kac_power(cfg.gamma, cfg.kernel_scale)
    if cfg.kernel == "maxwell":
        return KernelSpec.maxwell()
    return KernelSpec.constant(cfg.kernel_scale, cfg.mode)


def datum_spec(cfg: RunConfig) -> DatumSpec:
    if cfg.datum == "gaussian":
        return DatumSpec.gaussian(cfg.mode)
    if cfg.datum == "mixture":
        return DatumSpec.mixture(cfg.mixture_weights, cfg.mixture_variances, cfg.mode)
    if cfg.mode != Mode.KAC.value:
        raise ConfigError("the bump datum is available in kac1d mode only")
    return DatumSpec.bump(cfg.bump_radius, cfg.bump_nu)


def grid_of(cfg: RunConfig, refine: int = 1) -> SpectralGrid:
    return make_grid(cfg.mode, cfg.rmax, refine * (cfg.grid_points - 1) + 1, cfg.spacing)


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.to_dict(), **extra}


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def _run_wild(cfg: RunConfig, f0, kernel):
    return wild_trajectory(f0, kernel, cfg.times, cfg.accuracy, cfg.max_order, cfg.max_stage_tau)


def _single_level(cfg: RunConfig) -> float:
    if len(cfg.cutoff_levels) != 1:
        raise ConfigError("this command takes a single cut-off level")
    return cfg.cutoff_levels[0]


def _simulation(cfg: RunConfig, out: Path, tag: str = ""):
    grid = grid_of(cfg)
    f0 = realize(datum_spec(cfg), grid)
    kernel = build_cutoff(kernel_spec(cfg), _single_level(cfg), cfg.kernel_nodes)
    run = _run_wild(cfg, f0, kernel)
    diag = {"kernel": kernel.to_dict(), "wild": run.diagnostics,
            "moments": conservation_report(run.states) if len(run.states) > 1 else None}
    if cfg.cross_check:
        ode = ode_trajectory(f0, kernel, cfg.times, stable_dt(kernel, cfg.ode_dtau))
        diag["cross_check"] = {
            "dt": stable_dt(kernel, cfg.ode_dtau),
            "sup_difference": [{"t": a.time_label, "value": sup_difference(a, b)}
                               for a, b in zip(run.states, ode)],
            "ode_moments": conservation_report(ode) if len(ode) > 1 else None,
        }
        write_states_csv(out / f"{tag}ode_snapshots.csv", ode, _meta(cfg, solver="ode"))
    write_states_csv(out / f"{tag}snapshots.csv", run.states, _meta(cfg, solver="wild"))
    return f0, kernel, run, diag


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    f0, kernel, run, diag = _simulation(cfg, out)
    _write_json(out / "diagnostics.json", _clean(_meta(cfg, **diag)))
    plotting.plot_snapshots(run.states, out / "snapshots.png", _meta(cfg))
    log.info("simulate: %d snapshots written to %s", len(run.states), out)
    return EXIT_OK


def _envelope_inputs(cfg: RunConfig, f0):
    """``(K1, K2, psi, fit)`` from numbers in the config or a decay fit."""
    wants_fit = "fit" in (cfg.k1, cfg.k2, cfg.s)
    fit = None
    if wants_fit:
        if cfg.psi != "power":
            raise ConfigError("decay fitting is available for psi = power only")
        if cfg.datum == "bump":
            rmax = 1.6 * 10 ** cfg.bump_nu if cfg.fit_rmax == "auto" else cfg.fit_rmax
            fit_state = realize(datum_spec(cfg), make_grid(cfg.mode, rmax, cfg.fit_points))
        elif cfg.fit_rmax == "auto":
            fit_state = f0
        else:
            fit_state = realize(datum_spec(cfg), make_grid(cfg.mode, cfg.fit_rmax, cfg.fit_points))
        s_grid = None if cfg.s == "fit" else [cfg.s]
        fit = fit_decay(fit_state, **({} if s_grid is None else {"s_grid": s_grid})).lifted(f0)
    K1 = fit.K1 if cfg.k1 == "fit" else cfg.k1
    K2 = fit.K2 if cfg.k2 == "fit" else cfg.k2
    if cfg.psi == "sqrtlog":
        psi = PsiFunction.sqrtlog()
    else:
        psi = PsiFunction.power(fit.s if cfg.s == "fit" else cfg.s)
    return float(K1), float(K2), psi, fit


def cmd_verify_envelope(cfg: RunConfig, out: Path) -> int:
    grid = grid_of(cfg)
    f0 = realize(datum_spec(cfg), grid)
    K1, K2, psi, fit = _envelope_inputs(cfg, f0)
    cert = {"inputs": {"K1": K1, "K2": K2, "psi": psi.to_dict(),
                       "fit": None if fit is None else fit.to_dict()}}
    env, error = None, None
    try:
        R0 = None if cfg.r0 == "auto" else cfg.r0
        env = build_envelope(f0, K1, K2, psi, R0)
    except EnvelopeError as exc:
        error = str(exc)
    # the sign of the sub-additivity defect does not depend on K
    if env is not None:
        probe = env
    else:
        try:
            r0 = minimal_R0(K1, K2, psi) if cfg.r0 == "auto" else cfg.r0
        except EnvelopeError:
            r0 = 1.0
        probe = GevreyEnvelope(1.0, r0, psi)
    violation = check_subadditivity(probe, 1000, 1000, cfg.mode)
    cert["subadditivity"] = {"max_violation": violation, "tolerance": SUBADDITIVITY_TOL,
                             "R0": probe.R0, "K": probe.K,
                             "status": "PASS" if violation <= SUBADDITIVITY_TOL else "FAIL"}
    if error is not None or violation > SUBADDITIVITY_TOL:
        cert["status"] = "FAIL"
        cert["stage"] = "envelope"
        cert["error"] = error or "sub-additivity violated"
        _write_json(out / "certificate.json", _clean(_meta(cfg, **cert)))
        log.error("verify-envelope: %s", cert["error"])
        return EXIT_FAIL
    f0_, kernel, run, diag = _simulation(cfg, out)
    report = certify_propagation(run.states, env)
    cert.update(report.to_dict())
    cert["stage"] = "propagation"
    cert["simulation"] = diag
    _write_json(out / "certificate.json", _clean(_meta(cfg, **cert)))
    plotting.plot_certificate(run.states, env, out / "certificate.png", _meta(cfg))
    log.info("verify-envelope: %s (max weighted sup %.12g)", report.status, max(report.sups))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_convergence_study(cfg: RunConfig, out: Path) -> int:
    levels = list(cfg.cutoff_levels)
    if len(levels) < 2:
        raise ConfigError("convergence-study needs at least two cut-off levels")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ConfigError("cut-off levels must be nondecreasing")
    spec, grid = kernel_spec(cfg), grid_of(cfg)
    f0 = realize(datum_spec(cfg), grid)
    t = cfg.t_final
    states = []
    for level in levels:
        k = build_cutoff(spec, level, cfg.kernel_nodes)
        states.append(wild_trajectory(f0, k, [t], cfg.accuracy, cfg.max_order,
                                      cfg.max_stage_tau).states[0])
    diffs = consecutive_differences(states, cfg.window)
    with (out / "convergence.csv").open("w", newline="") as fh:
        fh.write("# " + json.dumps(_meta(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "next_level", "sup_difference"])
        for a, b, d in zip(levels, levels[1:], diffs):
            w.writerow([f"{a:.17g}", f"{b:.17g}", f"{d:.17g}"])
    write_states_csv(out / "sweep_states.csv",
                     [SpectralState(st.grid, st.values, lvl) for st, lvl in zip(states, levels)],
                     _meta(cfg, time_label_means="cut-off level", t=t))
    report = {"t": t, "window": cfg.window, "levels": levels, "differences": diffs,
              "nonincreasing": all(b <= a for a, b in zip(diffs, diffs[1:]))}
    if cfg.refine:
        report["refinement"] = _refinement(cfg, f0, spec, levels[0])
    _write_json(out / "convergence.json", _clean(_meta(cfg, **report)))
    plotting.plot_convergence(levels, diffs, out / "convergence.png", _meta(cfg))
    return EXIT_OK


def _refinement(cfg: RunConfig, f0, spec, level) -> dict:
    """Same run with the grid and the angular rule doubled."""
    out = {}
    for name, refine in (("base", 1), ("doubled", 2)):
        grid = grid_of(cfg, refine)
        d0 = realize(datum_spec(cfg), grid)
        k = build_cutoff(spec, level, refine * cfg.kernel_nodes)
        run = wild_trajectory(d0, k, cfg.times, cfg.accuracy, cfg.max_order, cfg.max_stage_tau)
        rep = conservation_report(run.states) if len(run.states) > 1 else None
        out[name] = {"grid_points": grid.size, "kernel_nodes": k.n_nodes,
                     "second_moment_drift": rep and rep["second_moment_drift"],
                     "mass_drift": rep and rep["mass_drift"], "final": run.states[-1]}
    base, fine = out["base"].pop("final"), out["doubled"].pop("final")
    out["sup_difference_on_base_nodes"] = float(np.max(np.abs(base.values - fine.values[::2])))
    return out


def cmd_kernel_table(cfg: RunConfig, out: Path) -> int:
    rows = kernel_table(kernel_spec(cfg), cfg.cutoff_levels, cfg.kernel_nodes)
    cols = ["level", "bstar", "reference_bstar", "residual", "cut_angle", "n_nodes"]
    with (out / "kernel_table.csv").open("w", newline="") as fh:
        fh.write("# " + json.dumps(_meta(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([row[c] if c == "n_nodes" else f"{row[c]:.17g}" for c in cols])
    _write_json(out / "kernel_table.json", _clean(_meta(cfg, rows=rows)))
    plotting.plot_kernel_table(rows, out / "kernel_table.png", _meta(cfg))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-envelope": cmd_verify_envelope,
    "convergence-study": cmd_convergence_study,
    "kernel-table": cmd_kernel_table,
}

_FLAGS = [
    ("--mode", {}), ("--kernel", {}), ("--gamma", {}),
    ("--cutoff-level", {"dest": "cutoff_levels"}), ("--cutoff-levels", {"dest": "cutoff_levels"}),
    ("--rmax", {}), ("--grid-points", {}), ("--datum", {}), ("--t-final", {}),
    ("--snapshots", {}), ("--k1", {}), ("--k2", {}), ("--psi", {}), ("--s", {}), ("--r0", {}),
    ("--accuracy", {}), ("--out", {}),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wildgevrey", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        for flag, kw in _FLAGS:
            p.add_argument(flag, default=None, **kw)
        p.add_argument("--cross-check", action="store_const", const=True, default=None)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key")
    return parser


def resolve_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for flag, kw in _FLAGS:
        dest = kw.get("dest", flag[2:].replace("-", "_"))
        value = getattr(args, dest)
        if value is not None:
            overrides[dest] = value
    if args.cross_check is not None:
        overrides["cross_check"] = True
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.to_text())
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnvelopeError as exc:
        print(f"envelope error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ResolutionError, NormalizationError, DomainError) as exc:
        print(f"numerical resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except WildGevreyError as exc:  # pragma: no cover - all subclasses handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
