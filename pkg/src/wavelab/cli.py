"""Batch command-line interface.

Subcommands: ``p0``, ``kdv-check``, ``solve``, ``branch``, ``dcurve``,
``evolve``, ``stability``.  Every run writes a machine-readable report JSON
(code version, fully resolved configuration, tolerances, check outcomes) so
results are auditable from artifacts alone; numeric outputs are CSV/.dat
files, never plots.

Exit codes: 0 success, 2 validation/configuration failure, 3 solver
non-convergence, 4 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dcurve, io, kdv, stability
from .evolution import (BlowupError, EvolutionConfig, conservation_check,
                        evolve, small_data_bound)
from .model import (LEVEL_EXISTENCE, LEVEL_STABILITY, REFERENCE_PARAMS,
                    ModelParams, omega_window, validate)
from .solver import (SolverError, continuation_branch, default_grid,
                     solve_wave)
from .spectral import make_grid
from .stability import StabilityExperiment, stability_experiment

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


_DEFAULTS = {
    "params": {"a": REFERENCE_PARAMS.a, "b": REFERENCE_PARAMS.b,
               "c": REFERENCE_PARAMS.c, "p": REFERENCE_PARAMS.p},
    "grid": {"L": "auto", "N": "auto"},
    "solver": {"tol": 1e-12, "max_iter": 400, "dealias": True},
    "evolution": {"dt": "auto", "T": 50.0, "cfl_safety": 0.5,
                  "dealias": True, "monitor_stride": 10},
    "experiment": {"kind": "bump", "amplitude": 0.01, "seed": 0,
                   "T": 200.0, "threshold_factor": 10.0},
    "kdv_check": {"p_values": [1.0, 2.0, 3.0, 5.0], "m_values": [1.0 / 6.0, 1.0 / 3.0]},
    "output_dir": "out",
    "emit_dat": False,
}


def _merge_strict(defaults, overrides, path="config"):
    if overrides is None:
        return json.loads(json.dumps(defaults))
    if not isinstance(overrides, dict):
        raise ConfigError(f"{path}: expected an object")
    merged = {}
    for key, dval in defaults.items():
        if key in overrides:
            oval = overrides[key]
            if isinstance(dval, dict):
                merged[key] = _merge_strict(dval, oval, f"{path}.{key}")
            else:
                merged[key] = oval
        else:
            merged[key] = json.loads(json.dumps(dval)) if isinstance(dval, dict) else dval
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    return merged


def load_config(config_path: str | None) -> dict:
    if config_path is None:
        return _merge_strict(_DEFAULTS, {})
    try:
        raw = json.loads(Path(config_path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {config_path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config_path}: line {exc.lineno}: {exc.msg}")
    return _merge_strict(_DEFAULTS, raw)


def config_reference() -> str:
    """The documented default configuration, as JSON."""
    return json.dumps(_DEFAULTS, indent=2, sort_keys=True)


def _params_from_config(cfg: dict) -> ModelParams:
    p = cfg["params"]
    return ModelParams(a=float(p["a"]), b=float(p["b"]), c=float(p["c"]), p=float(p["p"]))


def _grid_from_config(cfg: dict, params: ModelParams, omega: float):
    g = cfg["grid"]
    L = None if g["L"] == "auto" else float(g["L"])
    N = None if g["N"] == "auto" else int(g["N"])
    return default_grid(params, omega, L=L, N=N)


def _evolution_config(cfg: dict, T: float | None = None) -> EvolutionConfig:
    e = cfg["evolution"]
    return EvolutionConfig(
        T=float(T if T is not None else e["T"]),
        dt=None if e["dt"] == "auto" else float(e["dt"]),
        cfl_safety=float(e["cfl_safety"]),
        dealias=bool(e["dealias"]),
        monitor_stride=int(e["monitor_stride"]),
    )


def _out_dir(cfg: dict, override: str | None) -> Path:
    out = Path(override if override is not None else cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_report(command: str, cfg: dict) -> dict:
    return {
        "tool": "wavelab",
        "version": __version__,
        "command": command,
        "config": cfg,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "checks": [],
        "outputs": [],
    }


def _check(report: dict, name: str, passed: bool, **detail) -> bool:
    report["checks"].append({"name": name, "passed": bool(passed), **detail})
    return bool(passed)


def _validate_or_fail(report, params, level=LEVEL_EXISTENCE):
    vrep = validate(params, level)
    report["validation"] = vrep.as_dict()
    if not vrep.passed:
        raise ConfigError(f"parameters fail {level} validation: {vrep.failed_names()}")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_p0(args, cfg: dict, report: dict) -> int:
    p0 = kdv.critical_p0(tol=1e-12)
    report["p0"] = p0
    report["reference_value"] = kdv.P0_REPORTED
    table = []
    for p in (1.0, 2.0, 3.0, 4.0, 4.1, 4.2280673976, 4.3, 5.0):
        table.append({
            "p": p,
            "paper_chain_value": kdv.critical_fn(p),
            "paper_chain_sign": int(np.sign(kdv.critical_fn(p))),
            "derived_chain_value": (4.0 - p) / p,
            "derived_chain_sign": int(np.sign(4.0 - p)),
        })
    report["sign_chains"] = table
    _check(report, "p0_matches_reference", abs(p0 - kdv.P0_REPORTED) < 1e-8, value=p0)
    print(f"critical exponent p0 = {p0:.10f}")
    print(f"{'p':>10} {'beta-root chain':>18} {'quadrature chain':>18}")
    for row in table:
        print(f"{row['p']:>10.6g} {row['paper_chain_value']:>+18.6e} {row['derived_chain_value']:>+18.6e}")
    return EXIT_OK


def _cmd_kdv_check(args, cfg: dict, report: dict) -> int:
    grid = make_grid(80.0, 4096)
    rows = []
    worst_res, worst_rel = 0.0, 0.0
    any_flag = True
    for p in cfg["kdv_check"]["p_values"]:
        for m in cfg["kdv_check"]["m_values"]:
            res = kdv.kdv_residual(p, m, grid)
            w0 = kdv.kdv_profile(p, m, grid)
            from .spectral import deriv, inner_l2
            w0x = deriv(w0, 1)
            quad_j0 = inner_l2(w0, w0) + m * inner_l2(w0x, w0x)
            closed = kdv.j0_closed(p, m)
            rel = abs(quad_j0 - closed) / closed
            l2 = kdv.w0_l2(p, m, grid)
            rows.append({"p": p, "m": m, "profile_residual": res,
                         "j0_closed": closed, "j0_quadrature": quad_j0, "j0_rel_err": rel,
                         "w0_l2": l2.as_dict()})
            worst_res = max(worst_res, res)
            worst_rel = max(worst_rel, rel)
            any_flag = any_flag and l2.discrepancy_flag
            print(f"p={p:<4g} m={m:<8.5g} residual={res:.2e} J0 rel err={rel:.2e} "
                  f"w0_l2: paper={l2.paper_value:.6f} derived={l2.derived_value:.6f} "
                  f"quad={l2.quadrature_value:.6f} flag={l2.discrepancy_flag}")
    report["cases"] = rows
    ok = _check(report, "profile_residual_below_1e-10", worst_res <= 1e-10, worst=worst_res)
    ok &= _check(report, "j0_quadrature_matches_1e-8", worst_rel <= 1e-8, worst=worst_rel)
    ok &= _check(report, "printed_l2_formula_flagged", any_flag)
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_solve(args, cfg: dict, report: dict, out: Path) -> int:
    params = _params_from_config(cfg)
    _validate_or_fail(report, params)
    omega = float(args.omega)
    lo, hi = omega_window(params)
    if not lo < omega < hi:
        raise ConfigError(f"omega = {omega} outside admissible window (0, {hi:.6g})")
    grid = _grid_from_config(cfg, params, omega)
    tol = float(cfg["solver"]["tol"])
    wave = solve_wave(params, omega, grid=grid, tol=tol,
                      max_iter=int(cfg["solver"]["max_iter"]),
                      dealias=bool(cfg["solver"]["dealias"]))
    state_path = out / f"wave_omega{omega:.6g}.csv"
    io.write_state(state_path, wave.profile, params, omega=omega, extra={
        "eps": wave.eps, "residual_norm": wave.residual_norm,
        "iw_min": wave.iw_min, "d_value": wave.d_value, "tail": wave.tail,
        "functionals": wave.functionals.as_dict(),
    })
    report["outputs"].append(str(state_path))
    report["wave"] = {
        "omega": omega, "eps": wave.eps, "residual_norm": wave.residual_norm,
        "iw_min": wave.iw_min, "d_value": wave.d_value, "tail": wave.tail,
        "iterations": wave.iterations, "functionals": wave.functionals.as_dict(),
    }
    f = wave.functionals
    p = params.p

    def rel(x, y):
        return abs(x - y) / max(abs(x), abs(y), 1e-300)

    _check(report, "residual_below_tol", wave.residual_norm <= max(tol, 1e-10), value=wave.residual_norm)
    _check(report, "identity_Jw_eq_p_over_p2_Iw", rel(f.Jw, p / (p + 2.0) * f.Iw) <= 1e-8)
    _check(report, "identity_Jw_eq_minus_p_over_2_G", rel(f.Jw, -p / 2.0 * f.G) <= 1e-8)
    _check(report, "identity_Iw_eq_minus_p2_over_2_G", rel(f.Iw, -(p + 2.0) / 2.0 * f.G) <= 1e-8)
    _check(report, "identity_Kw_zero", abs(f.Kw) <= 1e-8 * max(1.0, abs(f.Iw)))
    _check(report, "tail_below_1e-10", wave.tail <= 1e-10, value=wave.tail)
    if cfg["emit_dat"]:
        dat = out / f"wave_omega{omega:.6g}.dat"
        io.write_dat(dat, {"x": grid.x, "eta": wave.profile.first.values,
                           "u": wave.profile.second.values})
        report["outputs"].append(str(dat))
    print(f"solved omega={omega}: residual={wave.residual_norm:.3e} "
          f"Iw_min={wave.iw_min:.8g} d={wave.d_value:.8g} -> {state_path}")
    return EXIT_OK


def _cmd_branch(args, cfg: dict, report: dict, out: Path) -> int:
    params = _params_from_config(cfg)
    _validate_or_fail(report, params)
    omegas = [float(w) for w in args.omegas.split(",") if w.strip()]
    if not omegas:
        raise ConfigError("--omegas must list at least one speed")
    branch = continuation_branch(params, omegas, tol=float(cfg["solver"]["tol"]),
                                 dealias=bool(cfg["solver"]["dealias"]))
    path = out / "branch.csv"
    io.write_branch(path, branch)
    report["outputs"].append(str(path))
    report["branch"] = {"n_points": len(branch), "failed_omegas": list(branch.failed_omegas),
                        "omega_range": [float(branch.omega.min()), float(branch.omega.max())],
                        "max_residual": float(branch.residual.max())}
    ok = _check(report, "all_requested_points_converged", not branch.failed_omegas,
                failed=list(branch.failed_omegas))
    if cfg["emit_dat"]:
        dat = out / "branch.dat"
        io.write_dat(dat, branch.table())
        report["outputs"].append(str(dat))
    print(f"branch: {len(branch)} points, residual max {branch.residual.max():.2e} -> {path}")
    return EXIT_OK if ok else EXIT_SOLVER


def _cmd_dcurve(args, cfg: dict, report: dict, out: Path) -> int:
    branch = io.read_branch(args.branch)
    table = branch.table()
    rows = []
    for i in range(len(branch)):
        row = {c: float(table[c][i]) for c in table}
        if 0 < i < len(branch) - 1:
            dp = dcurve.dprime(branch, i)
            row["dprime_via_I2"] = dp.via_i2
            row["dsecond_via_deri2"] = dcurve.dsecond_via_deri2(branch, i)
        rows.append(row)
    report["table"] = rows
    conv = dcurve.convexity_report(branch.params.p, branch)
    report["convexity"] = conv.as_dict()
    path = out / "dcurve.csv"
    cols = list(table)
    with path.open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(branch)):
            fh.write(",".join(io.FLOAT_FMT.format(float(table[c][i])) for c in cols) + "\n")
    report["outputs"].append(str(path))
    _check(report, "d_positive", bool(np.all(branch.d > 0)))
    _check(report, "d_strictly_decreasing", bool(np.all(np.diff(branch.d) > 0)))  # omega descending
    print(f"d-curve over {len(branch)} points; d'' signs near 1^-: {conv.numeric_signs} "
          f"(beta-root chain {conv.paper_chain_sign:+d}, quadrature chain {conv.derived_chain_sign:+d})")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_evolve(args, cfg: dict, report: dict, out: Path) -> int:
    U0, meta, warns = io.read_state(args.init)
    for w in warns:
        print(f"warning: {w}", file=sys.stderr)
    report["load_warnings"] = warns
    pm = meta.get("params") or cfg["params"]
    params = ModelParams(a=pm["a"], b=pm["b"], c=pm["c"], p=pm.get("p", 1.0))
    _validate_or_fail(report, params)
    econf = _evolution_config(cfg, T=args.T)
    UT, trace = evolve(U0, params, econf)
    cons = conservation_check(trace, tol=1e-8)
    lhs, rhs_val, sdb = small_data_bound(UT, params)
    trace_path = out / "trace.csv"
    io.write_trace(trace_path, trace)
    final_path = out / "final_state.csv"
    io.write_state(final_path, UT, params, omega=meta.get("omega"))
    report["outputs"] += [str(trace_path), str(final_path)]
    report["evolution"] = {"T": econf.T, "dt": econf.resolve_dt(U0.grid, params),
                           "h_drift": cons.h_drift, "q_drift": cons.q_drift,
                           "small_data_bound": {"lhs": lhs, "H": rhs_val, "satisfied": sdb}}
    _check(report, "conservation", cons.passed, h_drift=cons.h_drift, q_drift=cons.q_drift)
    print(f"evolved to T={econf.T}: drift(H)={cons.h_drift:.2e} drift(Q)={cons.q_drift:.2e} -> {trace_path}")
    return EXIT_OK


def _cmd_stability(args, cfg: dict, report: dict, out: Path) -> int:
    params = _params_from_config(cfg)
    _validate_or_fail(report, params, LEVEL_STABILITY)
    exp_cfg = cfg["experiment"]
    kind = args.perturb if args.perturb else exp_cfg["kind"]
    amplitude = float(args.amplitude if args.amplitude is not None else exp_cfg["amplitude"])
    T = float(args.T if args.T is not None else exp_cfg["T"])

    if args.wave:
        U, meta, warns = io.read_state(args.wave)
        report["load_warnings"] = warns
        omega = meta.get("omega")
        if omega is None:
            raise ConfigError(f"{args.wave}: sidecar carries no omega")
        grid = U.grid
        wave = solve_wave(params, float(omega), grid=grid, seed=U,
                          tol=float(cfg["solver"]["tol"]))
    else:
        omega = float(args.omega) if args.omega else 0.95
        grid = _grid_from_config(cfg, params, omega)
        wave = solve_wave(params, omega, grid=grid, tol=float(cfg["solver"]["tol"]))

    exp = StabilityExperiment(wave=wave, kind=kind, amplitude=amplitude,
                              seed=int(exp_cfg["seed"]), T=T,
                              threshold_factor=float(exp_cfg["threshold_factor"]))
    rep = stability_experiment(exp, _evolution_config(cfg, T=T))
    report["experiment"] = rep.as_dict()
    dist_path = out / "orbit_distances.csv"
    io.write_trace(dist_path, rep.trace)
    report["outputs"].append(str(dist_path))

    if args.branch:
        branch = io.read_branch(args.branch)
        U0 = stability.perturb(wave, kind, amplitude, int(exp_cfg["seed"]))
        sh = stability.shatah_inequality(U0, wave, branch)
        report["shatah"] = sh.as_dict()
        _check(report, "shatah_inequality", sh.satisfied, lhs=sh.lhs, rhs=sh.rhs)

    _check(report, "verdict_stable", rep.verdict == "stable-run", verdict=rep.verdict,
           ratio=rep.ratio)
    print(f"stability[{kind}, {amplitude:g}]: verdict={rep.verdict} ratio={rep.ratio:.3g} "
          f"drift(H)={rep.h_drift:.2e} -> {dist_path}")
    if rep.verdict == "diverged":
        return EXIT_BLOWUP
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavelab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="JSON configuration file (strict keys)")
    ap.add_argument("--out", help="output directory (default: config output_dir)")
    ap.add_argument("--print-config-reference", action="store_true",
                    help="print the documented default configuration and exit")
    sub = ap.add_subparsers(dest="command")

    sub.add_parser("p0", help="critical exponent and both sign-chain tables")
    sub.add_parser("kdv-check", help="limit-profile residual and closed-form checks")

    sp = sub.add_parser("solve", help="one solitary wave")
    sp.add_argument("--omega", required=True, type=float)

    bp = sub.add_parser("branch", help="continuation over a speed list")
    bp.add_argument("--omegas", required=True, help="comma-separated speeds")

    dp = sub.add_parser("dcurve", help="d, d', d'' tables and convexity verdict")
    dp.add_argument("--branch", required=True, help="branch CSV from `wavelab branch`")

    ep = sub.add_parser("evolve", help="time evolution from a state snapshot")
    ep.add_argument("--init", required=True, help="state CSV (with sidecar)")
    ep.add_argument("--T", required=True, type=float)

    st = sub.add_parser("stability", help="perturb-evolve-measure experiment")
    st.add_argument("--wave", help="state CSV of the reference wave")
    st.add_argument("--omega", help="solve the wave at this speed instead")
    st.add_argument("--perturb", choices=stability.PERTURBATION_KINDS)
    st.add_argument("--amplitude", type=float)
    st.add_argument("--T", type=float)
    st.add_argument("--branch", help="branch CSV for the quadratic lower-bound check")
    return ap


_HANDLERS = {
    "p0": _cmd_p0,
    "kdv-check": _cmd_kdv_check,
    "solve": _cmd_solve,
    "branch": _cmd_branch,
    "dcurve": _cmd_dcurve,
    "evolve": _cmd_evolve,
    "stability": _cmd_stability,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_config_reference:
        print(config_reference())
        return EXIT_OK
    if not args.command:
        ap.print_help()
        return EXIT_VALIDATION

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    report = _base_report(args.command, cfg)
    out = _out_dir(cfg, args.out)
    code = EXIT_OK
    try:
        handler = _HANDLERS[args.command]
        if args.command in ("p0", "kdv-check"):
            code = handler(args, cfg, report)
        else:
            code = handler(args, cfg, report, out)
    except (ConfigError, io.StateFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = EXIT_SOLVER
    except BlowupError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = EXIT_BLOWUP

    report["exit_code"] = code
    report_path = out / f"{args.command.replace('-', '_')}_report.json"
    io.write_report(report_path, report)
    return code


if __name__ == "__main__":
    sys.exit(main())
