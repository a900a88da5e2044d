"""Command line entry point: ``fracwell <subcommand> --config <path> [--out <dir>] [--deterministic]``.

Exit codes: 0 ok, 2 invalid config, 3 I/O failure, 4 invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import analyze as an
from .config import ConfigInvalid, initial_field, load_config, read_snapshot, write_snapshot
from .evolve import Stepper, energy_monitor, integrate, read_trace_csv, write_trace_csv
from .functionals import classify, energy_report, invariance_audit, well_constants
from .grid import Field
from .verify import format_table, run_suite

log = logging.getLogger("fracwell")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4
SUBCOMMANDS = ("simulate", "wells", "groundstate", "analyze", "verify")


class InvariantBreach(RuntimeError):
    pass


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return "none"
    return str(v)


def write_report(path: Path, items: dict) -> None:
    path.write_text("".join(f"{k}={_fmt(v)}\n" for k, v in items.items()), encoding="utf-8")


def read_report(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            k, v = line.split("=", 1)
            out[k] = v
    return out


def _wells(cfg, table):
    rng = np.random.default_rng(cfg.seed)
    wc = well_constants(
        cfg.problem, table,
        trials=cfg["wells.trials"], rng=rng,
        cstar_trials=cfg["wells.cstar_trials"],
        curve_candidates=cfg["wells.curve_candidates"],
    )
    if not wc.d_est >= wc.M_const:
        raise InvariantBreach(f"d_est={wc.d_est!r} below M={wc.M_const!r}")
    return wc


def _wells_items(wc):
    return {f"wells.{k}": v for k, v in wc.summary().items()}


def cmd_wells(cfg, out: Path, args) -> int:
    table = cfg.problem.kernel()
    wc = _wells(cfg, table)
    items = {"command": "wells", **_wells_items(wc), "wells.b_root_found": wc.b_root is not None}
    write_report(out / "wells.txt", items)
    with (out / "d_curve.csv").open("w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("delta", "d_of_delta"))
        for dl, dv in zip(wc.delta_grid, wc.d_curve):
            wr.writerow((repr(float(dl)), repr(float(dv))))
    print(f"C*={wc.C_star:.6g} h(1)={float(wc.h(1.0)):.6g} M={wc.M_const:.6g} d_est={wc.d_est:.6g}")
    return EXIT_OK


def cmd_simulate(cfg, out: Path, args) -> int:
    P = cfg.problem
    table = P.kernel()
    wc = _wells(cfg, table)
    u0 = initial_field(cfg)
    rep0 = energy_report(u0, P, table)
    label = classify(u0, wc, rep0)
    st = Stepper(P, table, cfg["evolve.dt"], scheme=cfg["evolve.scheme"],
                 picard_tol=cfg["evolve.picard_tol"], picard_max_iters=cfg["evolve.picard_max_iters"])
    snap_every = cfg["evolve.snapshot_every"] or None
    res = integrate(u0, st, cfg["evolve.t_end"], record_every=cfg["evolve.record_every"],
                    snapshot_every=snap_every, blowup_l2h=cfg["evolve.blowup_threshold"])
    an.fill_blowup_functional(res.trace, T0=cfg["evolve.t_end"])
    drift = energy_monitor(res.trace)
    if not math.isfinite(drift):
        raise InvariantBreach("energy drift is not finite")
    diss = np.array([r.diss for r in res.trace])
    if np.any(np.diff(diss) < 0):
        raise InvariantBreach("dissipation integral decreased")
    write_trace_csv(out / "trace.csv", res.trace)
    write_snapshot(out / "u_final.txt", res.u_final)
    items = {
        "command": "simulate",
        "status": res.status,
        "status_message": res.message,
        "classification": label,
        "J0": rep0.J,
        "I0": rep0.I,
        "l2h0": rep0.l2h,
        **_wells_items(wc),
        "records": len(res.trace),
        "t_final": res.trace[-1].t,
        "drift": drift,
        "deterministic": bool(args.deterministic),
    }
    items.update(_verdict_items(res.trace, wc, P, overflow=res.status == "blowup-detected"))
    write_report(out / "report.txt", items)
    print(f"status={res.status} classification={label} drift={drift:.3e}")
    return EXIT_OK


def _verdict_items(trace, wc, P, overflow):
    items = {}
    dv = an.verify_decay(trace, wc)
    items.update({
        "decay.applicable": dv.applicable,
        "decay.monotone": dv.monotone,
        "decay.fit_rate": dv.fit_rate,
        "decay.fit_r2": dv.fit_r2,
        "decay.bracket_ok": dv.bracket_ok,
        "decay.comparable_C": dv.comparable_C,
    })
    bv = an.detect_blowup(trace, P, overflow=overflow)
    items.update({
        "blowup.detected": bv.detected,
        "blowup.inconclusive": bv.inconclusive,
        "blowup.t_est": bv.t_blow_est,
        "blowup.theta": bv.theta,
        "blowup.xi_min": bv.xi_min,
        "blowup.I_always_negative": bv.I_always_negative,
    })
    audit = invariance_audit(trace, wc, wc.delta_grid)
    if audit["skipped"]:
        items["audit"] = "skipped"
    else:
        signs = set(audit["signs"].values())
        items["audit.window_lo"], items["audit.window_hi"] = audit["window"]
        items["audit.n_delta"] = len(audit["signs"])
        items["audit.invariant"] = 0 not in signs
    return items


def cmd_groundstate(cfg, out: Path, args) -> int:
    P = cfg.problem
    table = P.kernel()
    seed = initial_field(cfg)
    gs = an.ground_state_solve(P, table, seed, iters=cfg["groundstate.iters"], tol=cfg["groundstate.tol"])
    write_snapshot(out / "u_star.txt", gs.u_star)
    write_report(out / "groundstate.txt", {
        "command": "groundstate",
        "J_star": gs.J_star,
        "dual_residual": gs.dual_residual,
        "dual_residual_kind": "grid-l2-surrogate",
        "nehari_residual": gs.nehari_residual,
        "iterations": gs.iterations,
        "stagnated": gs.stagnated,
    })
    print(f"J*={gs.J_star:.10g} dual_residual={gs.dual_residual:.3e}")
    return EXIT_OK


def cmd_analyze(cfg, out: Path, args) -> int:
    P = cfg.problem
    table = P.kernel()
    trace_path = Path(cfg.get("analyze.trace") or out / "trace.csv")
    if not trace_path.is_absolute() and cfg.get("analyze.trace"):
        trace_path = cfg.base_dir / trace_path
    trace = read_trace_csv(trace_path)
    wc = _wells(cfg, table)
    sim = out / "report.txt"
    overflow = sim.exists() and read_report(sim).get("status") == "blowup-detected"
    items = {"command": "analyze", "trace": str(trace_path), **_wells_items(wc)}
    u0 = initial_field(cfg)
    items["classification"] = classify(u0, wc, energy_report(u0, P, table))
    items.update(_verdict_items(trace, wc, P, overflow=overflow))
    items["drift"] = energy_monitor(trace)
    ustar = out / "u_star.txt"
    final = out / "u_final.txt"
    if ustar.exists() and final.exists():
        gs_field = read_snapshot(ustar, P.domain)
        uf = read_snapshot(final, P.domain)
        om = an.omega_limit_check([(trace[-1].t, uf.values)],
                                  an.GroundState(gs_field, float("nan"), float("nan"), float("nan")), P, table)
        items["omega.dist_zero"] = float(om.dist_zero[-1])
        items["omega.dist_star"] = float(om.dist_star[-1])
        items["omega.selected"] = om.selected
    write_report(out / "verdict.txt", items)
    print(f"classification={items['classification']} decay.monotone={items['decay.monotone']} "
          f"blowup.detected={items['blowup.detected']}")
    return EXIT_OK


def cmd_verify(cfg, out: Path, args) -> int:
    results = run_suite(cfg.problem, initial_field(cfg), seed=cfg.seed)
    table = format_table(results)
    print(table)
    (out / "verify.txt").write_text(table + "\n", encoding="utf-8")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


COMMANDS = {
    "simulate": cmd_simulate,
    "wells": cmd_wells,
    "groundstate": cmd_groundstate,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracwell", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="flat key=value configuration file")
    ap.add_argument("--out", default=None, help="output directory (default: output.dir from config)")
    ap.add_argument("--deterministic", action="store_true",
                    help="fixed-order sequential reductions (always on in this build)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    for w in cfg.warnings:
        log.warning(w)
    out = Path(args.out) if args.out else Path(cfg["output.dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.subcommand](cfg, out, args)
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
