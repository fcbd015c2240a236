"""
Command-line front end.

Every subcommand reads one scenario file and writes CSV/JSON artifacts into
an output directory (``--out``, else ``output.directory`` of the scenario)::

    halokeep gen-orbit --scenario em.yaml --out runs/em
    halokeep simulate  --scenario em.yaml --out runs/em
    halokeep verify    --scenario em.yaml --out runs/em --ab
    halokeep report    --scenario em.yaml --out runs/em

``--scenario`` also accepts ``builtin:NAME`` for the packaged examples.
Exit codes: 0 success, 2 input error, 3 solver or mission failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .controller import MissionLog, format_number, read_log_csv, run_mission, write_summary
from .dynamics import PropagationError, SingularityError, collinear_point, jacobi_constant, propagate
from .halo import CorrectionError, InitialConditionError, InitialGuess, manifold_trajectories, write_initial_guess
from .lqr import RiccatiError
from .safety import VERDICTS, classify_exit, verify_mission
from .scenario import (Scenario, ScenarioError, check_scenario, build_orbit, builtin_path, dump_resolved,
                       load_scenario, resolve)
from .stationkeeping import AssemblyError

log = logging.getLogger("halokeep")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_NUMERICAL = 0, 2, 3, 4
BURN_THRESHOLD = 1e-9
SECONDS_PER_YEAR = 365.25 * 86400.0


class MissionFailed(RuntimeError):
    """A mission aborted on a non-optimal solve; artifacts are still written."""


# ---------------------------------------------------------------------------
# helpers


def _scenario(args) -> Scenario:
    ref = args.scenario
    if ref is None:
        raise ScenarioError("--scenario is required")
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        path = builtin_path(name if name.endswith((".yaml", ".yml")) else name + ".yaml")
    else:
        path = Path(ref)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    return load_scenario(path)


def _out_dir(args, sc: Scenario) -> Path:
    out = Path(args.out) if args.out else sc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _years_per_time_unit(params) -> float:
    return params.time_unit_s / SECONDS_PER_YEAR


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, doc):
    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        return str(obj)

    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=default)


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# gen-orbit


def orbit_report(orbit) -> dict:
    p = orbit.params
    eig = orbit.eigenvalues if orbit.eigenvalues is not None else np.linalg.eigvals(orbit.monodromy)
    C = [jacobi_constant(x, p) for x in orbit.knots]
    return {
        "system": p.name,
        "libration_point": orbit.libration_point,
        "libration_position": collinear_point(p, orbit.libration_point).tolist(),
        "x0": orbit.x0.tolist(),
        "period_nd": orbit.period,
        "period_days": float(p.nd_to_days(orbit.period)),
        "period_hours": float(p.nd_to_hours(orbit.period)),
        "knots": orbit.n_knots,
        "dt_nd": orbit.dt,
        "dt_hours": float(p.nd_to_hours(orbit.dt)),
        "jacobi_constant": float(np.mean(C)),
        "jacobi_spread": float(np.ptp(C)),
        "max_amplitude_nd": orbit.max_amplitude(),
        "max_amplitude_km": orbit.max_amplitude() * p.length_unit_km,
        "unstable_eigenvalue": orbit.unstable_eigenvalue,
        "unstable_direction": orbit.unstable_direction.tolist(),
        "monodromy_eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in eig],
        "monodromy_det": float(np.linalg.det(orbit.monodromy)),
    }


def _orbit_text(rep: dict) -> str:
    lines = [
        f"{rep['system']} {rep['libration_point']} halo orbit",
        f"  period      {rep['period_nd']:.12f} nd = {rep['period_days']:.4f} d = {rep['period_hours']:.4f} h",
        f"  knots       {rep['knots']} (dt = {rep['dt_hours']:.4f} h)",
        f"  Jacobi C    {rep['jacobi_constant']:.12f} (spread {rep['jacobi_spread']:.2e})",
        f"  amplitude   {rep['max_amplitude_km']:.1f} km from {rep['libration_point']}",
        f"  lambda_u    {rep['unstable_eigenvalue']:.6f}",
        f"  det M       {rep['monodromy_det']:.12f}",
        "  eigenvalues of M:",
    ]
    for z in rep["monodromy_eigenvalues"]:
        lines.append(f"    {z['re']: .10e} {z['im']:+.10e}j")
    return "\n".join(lines) + "\n"


def cmd_gen_orbit(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    orbit = build_orbit(sc)
    rep = orbit_report(orbit)
    _write_json(out / "orbit.json", {**rep, "scenario": dump_resolved(sc)})
    (out / "orbit_report.txt").write_text(_orbit_text(rep))
    _write_rows(out / "knots.csv", ("k", "t", "qx", "qy", "qz", "vx", "vy", "vz"),
                [(k, format_number(t), *map(format_number, x)) for k, (t, x) in enumerate(zip(orbit.times, orbit.knots))])
    write_initial_guess(out / "orbit.ic", InitialGuess(orbit.x0, orbit.period, orbit.params.name,
                                                       orbit.n_knots, ("corrected periodic orbit",)))
    print(_orbit_text(rep), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# manifolds


def cmd_manifolds(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    orbit = build_orbit(sc)
    signs = (+1, -1) if args.sign == "both" else ((+1,) if args.sign == "+" else (-1,))
    tau = args.tau_periods * orbit.period
    L = orbit.libration_position()
    radius = orbit.escape_radius()
    rows, summary = [], []
    for sign in signs:
        fams = manifold_trajectories(orbit, args.epsilon, sign, tau, args.stride, n_samples=args.samples)
        sides = []
        for m in fams:
            if m.trajectory is None:
                log.warning("manifold from knot %d (%+d) failed: %s", m.departure_knot, sign, m.error)
                continue
            for t, x in zip(m.trajectory.times, m.trajectory.states):
                rows.append((m.departure_knot, sign, format_number(t), *map(format_number, x)))
            # side of the first exit from the escape sphere, else of the last point
            r = np.linalg.norm(m.trajectory.states[:, :3] - L, axis=1)
            i = int(np.argmax(r > radius)) if np.any(r > radius) else -1
            sides.append(float(np.sign(m.trajectory.states[i, 0] - L[0])))
        summary.append({"sign": sign, "trajectories": len(fams),
                        "right_of_libration_point": int(sum(s > 0 for s in sides)),
                        "left_of_libration_point": int(sum(s < 0 for s in sides))})
        print(f"sign {sign:+d}: {len(fams)} trajectories, exit side right/left = "
              f"{summary[-1]['right_of_libration_point']}/{summary[-1]['left_of_libration_point']}")
    _write_rows(out / "manifolds.csv", ("knot", "sign", "t", "qx", "qy", "qz", "vx", "vy", "vz"), rows)
    _write_json(out / "manifolds.json", {"epsilon": args.epsilon, "tau_nd": tau, "stride": args.stride,
                                         "families": summary, "scenario": dump_resolved(sc)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _progress(verbose):
    if not verbose:
        return None
    t0 = time.time()

    def report(cycle, mlog: MissionLog):
        if cycle % 10 == 0:
            log.info("cycle %d, step %d, total dv %.6f m/s, %.1f s", cycle, mlog.n_steps,
                     mlog.total_dv_mps, time.time() - t0)
    return report


def simulate(sc: Scenario, out: Path, verbose=False, halfspace=None, prefix="mission"):
    """Run a scenario's mission and write ``<prefix>.csv``, ``<prefix>_cycles.csv``, ``<prefix>_summary.json``."""
    res = resolve(sc)
    if halfspace is not None:
        res.mission.constraints = dataclasses.replace(res.mission.constraints, halfspace=halfspace)
    t0 = time.time()
    mlog = run_mission(res.mission, progress=_progress(verbose))
    summary = mlog.summary(_years_per_time_unit(res.params))
    summary["runtime_s"] = time.time() - t0
    summary["solves"] = len(mlog.cycles)
    mlog.write_csv(out / f"{prefix}.csv")
    keys = ("cycle", "step", "phase", "status", "iterations", "objective", "primal_residual",
            "dual_residual", "gap")
    _write_rows(out / f"{prefix}_cycles.csv", keys, [[c[k] for k in keys] for c in mlog.cycles])
    config = dump_resolved(sc)
    config["constraint_nd"]["halfspace"] = res.mission.constraints.halfspace
    write_summary(out / f"{prefix}_summary.json", summary, config)
    return res, mlog, summary


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    _, mlog, s = simulate(sc, out, args.verbose)
    print(f"steps {s['steps']}  solves {s['solves']}  total dv {s['total_dv_mps']:.6f} m/s  "
          f"revs 2+ {s['dv_after_first_rev_mps']:.6f} m/s")
    if s.get("dv_per_year_mps") is not None:
        print(f"duration {s['duration_years']:.4f} yr  dv per year {s['dv_per_year_mps']:.6f} m/s/yr")
    if not mlog.success:
        raise MissionFailed(f"mission aborted in cycle {mlog.failure['cycle']} (step "
                            f"{mlog.failure['step']}): solver status {mlog.failure['status']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _load_or_run(sc, out, verbose, prefix="mission", halfspace=None):
    path = out / f"{prefix}.csv"
    summary_path = out / f"{prefix}_summary.json"
    if path.is_file() and summary_path.is_file():
        orbit = build_orbit(sc)
        mlog = read_log_csv(path, orbit.dt, orbit.n_segments, orbit.params.velocity_unit_mps)
        log.info("using logged mission %s", path)
        return orbit, mlog
    log.info("no %s in %s, simulating", path.name, out)
    res, mlog, _ = simulate(sc, out, verbose, halfspace=halfspace, prefix=prefix)
    return res.orbit, mlog


def _safety_summary(report, mlog):
    return {"success_rate": _finite(report.success_rate), "window": list(report.window),
            "classified": int(len(report.steps)), "in_window": int(report.window_mask.sum()),
            "counts_in_window": report.counts(), "counts_all": report.counts(in_window=False),
            "mission_complete": mlog.success}


def _exit_polylines(path, states, steps, orbit, cfg, samples=150):
    rows = []
    radius = cfg.boundary_radius or orbit.escape_radius(cfg.boundary_factor)
    for k, x in zip(steps, states):
        c = classify_exit(x, orbit, horizon_periods=cfg.horizon_periods, boundary_radius=radius,
                          impact_radius=cfg.impact_radius, safe_side=cfg.safe_side)
        t_end = c.escape_time if math.isfinite(c.escape_time) else cfg.horizon_periods * orbit.period
        try:
            traj = propagate(x, (0.0, t_end), orbit.params, cfg.rtol, cfg.atol,
                             t_eval=np.linspace(0.0, t_end, samples))
        except (PropagationError, SingularityError):
            continue
        for t, y in zip(traj.times, traj.states):
            rows.append((int(k), c.verdict, format_number(t), *map(format_number, y)))
    _write_rows(path, ("step", "verdict", "t", "qx", "qy", "qz", "vx", "vy", "vz"), rows)


def cmd_verify(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    cfg = sc.safety()
    if args.sample_every:
        cfg = dataclasses.replace(cfg, sample_every=args.sample_every)
    if args.workers:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    orbit, mlog = _load_or_run(sc, out, args.verbose)
    t0 = time.time()
    report = verify_mission(mlog, orbit, cfg)
    report.write_csv(out / "safety.csv")
    doc = _safety_summary(report, mlog)
    doc["runtime_s"] = time.time() - t0
    doc["sample_every"] = cfg.sample_every
    print(f"safe-exit rate {doc['success_rate']:.4f} over revs {report.window[0]}-"
          f"{report.window[1] or 'end'} ({doc['in_window']} states, every {cfg.sample_every}th)")
    print("  " + ", ".join(f"{v}: {doc['counts_in_window'][v]}" for v in VERDICTS))
    if args.ab:
        ab_orbit, ab_log = _load_or_run(sc, out, args.verbose, prefix="mission_no_halfspace",
                                        halfspace=False)
        ab = verify_mission(ab_log, ab_orbit, cfg)
        ab.write_csv(out / "safety_no_halfspace.csv")
        doc["no_halfspace"] = _safety_summary(ab, ab_log)
        print(f"without half-space: safe-exit rate {ab.success_rate:.4f}")
    if args.exits:
        idx = np.linspace(0, len(report.steps) - 1, min(args.exits, len(report.steps))).astype(int)
        steps = report.steps[idx]
        states = np.asarray(mlog.states).reshape(-1, 6)[steps]
        _exit_polylines(out / "exits.csv", states, steps, orbit, cfg)
    doc["scenario"] = dump_resolved(sc)
    _write_json(out / "safety.json", doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def burn_table(mlog: MissionLog, threshold=BURN_THRESHOLD):
    """Rows ``(step, rev, phase, time, qx, qy, qz, ux, uy, uz, u_l1, dv_mps)`` with ``|u|_1 > threshold``."""
    a = mlog.arrays()
    u1 = np.abs(a["controls"]).sum(axis=1)
    rows = []
    for k in np.flatnonzero(u1 > threshold):
        rows.append((int(k), int(k // mlog.n_segments + 1), int(a["phases"][k]), float(a["times"][k]),
                     *a["states"][k, :3], *a["controls"][k], float(u1[k]), float(a["dv_mps"][k])))
    return rows


def burn_symmetry(rows) -> dict:
    """How x-dominant burns split across the orbit's x-z symmetry plane."""
    xs = [r for r in rows if abs(r[7]) >= max(abs(r[8]), abs(r[9]))]
    y = np.array([r[5] for r in xs])
    if len(y) == 0:
        return {"x_burns": 0}
    return {"x_burns": int(len(y)), "y_positive": int(np.sum(y > 0)), "y_negative": int(np.sum(y < 0)),
            "mean_y_over_max_abs_y": float(np.mean(y) / max(np.max(np.abs(y)), 1e-300))}


def cmd_report(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    path = out / "mission.csv"
    if not path.is_file():
        raise FileNotFoundError(f"no mission log in {out}; run 'simulate' first")
    orbit = build_orbit(sc)
    mlog = read_log_csv(path, orbit.dt, orbit.n_segments, orbit.params.velocity_unit_mps)
    rows = burn_table(mlog, args.threshold)
    header = ("step", "rev", "phase", "time", "qx", "qy", "qz", "ux", "uy", "uz", "u_l1", "dv_mps")
    _write_rows(out / "burns.csv", header, [[format_number(v) if isinstance(v, float) else v for v in r] for r in rows])

    per_rev = mlog.revolution_dv()
    sm = np.asarray(mlog.state_margin)
    hm = np.asarray(mlog.halfspace_margin)
    rev_of = np.arange(mlog.n_steps) // mlog.n_segments
    burning = np.abs(mlog.arrays()["controls"]).sum(axis=1) > args.threshold
    rev_rows = []
    for r in range(len(per_rev)):
        m = rev_of == r
        rev_rows.append((r + 1, format_number(per_rev[r]), int(burning[m].sum()),
                         format_number(sm[m].max()), format_number(hm[m].min())))
    _write_rows(out / "per_rev.csv", ("rev", "dv_mps", "burns", "max_state_margin", "min_halfspace_margin"),
                rev_rows)

    total = mlog.total_dv_mps
    sym = burn_symmetry(rows)
    years = mlog.n_steps * orbit.dt * _years_per_time_unit(orbit.params)
    doc = {
        "steps": mlog.n_steps, "revolutions": int(len(per_rev)), "burns": len(rows),
        "burn_threshold": args.threshold, "total_dv_mps": total,
        "per_rev_sum_mps": float(per_rev.sum()),
        "dv_after_first_rev_mps": float(per_rev[1:].sum()),
        "dv_per_year_mps": total / years if years > 0 else None,
        "impulsive_fraction_after_rev2": mlog.impulsive_fraction(3, args.threshold),
        "max_state_margin": float(sm.max()) if len(sm) else None,
        "max_state_margin_after_rev1": float(sm[mlog.n_segments:].max()) if len(sm) > mlog.n_segments else None,
        "min_halfspace_margin": float(hm.min()) if len(hm) else None,
        "x_burn_symmetry": sym,
        "scenario": dump_resolved(sc),
    }
    _write_json(out / "report.json", doc)
    lines = [f"# Stationkeeping report: {orbit.params.name}, {sc.raw['constraint']['variant']}", "",
             f"- steps: {mlog.n_steps} ({len(per_rev)} revolutions)",
             f"- total delta-v: {total:.6f} m/s ({doc['dv_per_year_mps'] or float('nan'):.6f} m/s per year)",
             f"- revolutions 2+: {doc['dv_after_first_rev_mps']:.6f} m/s",
             f"- burns above {args.threshold:g}: {len(rows)}; impulsive fraction after rev 2: "
             f"{doc['impulsive_fraction_after_rev2']:.3f}",
             f"- largest state-constraint usage after rev 1: {doc['max_state_margin_after_rev1']}",
             f"- smallest half-space margin: {doc['min_halfspace_margin']}",
             f"- x-burns: {sym}", "", "| rev | dv [m/s] | burns |", "|---:|---:|---:|"]
    lines += [f"| {r[0]} | {float(r[1]):.6e} | {r[2]} |" for r in rev_rows]
    (out / "report.md").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[:8]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _set_dotted(raw: dict, key: str, value):
    node = raw
    parts = key.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ScenarioError(f"sweep: {key!r} does not name a scenario field")
        node = node[p]
    node[parts[-1]] = value


def _sweep_one(task):
    raw, path, key, value, out = task
    sc = Scenario(raw, path)
    _set_dotted(sc.raw, key, value)
    try:
        check_scenario(sc)
        res = resolve(sc)
        mlog = run_mission(res.mission)
    except Exception as exc:        # one bad point must not sink the sweep
        return {"value": value, "status": f"error: {exc}"}
    if out is not None:
        mlog.write_csv(out / f"mission_{key}_{value}.csv")
    per_rev = mlog.revolution_dv()
    return {"value": value, "status": "ok" if mlog.success else f"failed: {mlog.failure['status']}",
            "failure_cycle": None if mlog.success else mlog.failure["cycle"],
            "steps": mlog.n_steps, "total_dv_mps": mlog.total_dv_mps,
            "dv_after_first_rev_mps": float(per_rev[1:].sum()) if len(per_rev) else 0.0,
            "impulsive_fraction_after_rev2": _finite(mlog.impulsive_fraction(3))
            if mlog.n_steps > 2 * mlog.n_segments else None}


def _sweep_value(text: str):
    text = text.strip()
    try:
        return float(text)          # YAML would read "7e-5" as a string
    except ValueError:
        return yaml.safe_load(text)


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    values = [_sweep_value(v) for v in args.values.split(",")]
    raw = copy.deepcopy(sc.raw)
    _set_dotted(copy.deepcopy(raw), args.param, values[0])     # reject unknown keys up front
    if args.revolutions:
        raw["mission"]["revolutions"] = args.revolutions
    tasks = [(raw, sc.path, args.param, v, out if args.keep_logs else None) for v in values]
    if args.workers and args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    keys = ("value", "status", "failure_cycle", "steps", "total_dv_mps", "dv_after_first_rev_mps",
            "impulsive_fraction_after_rev2")
    _write_rows(out / "sweep.csv", keys, [[r.get(k) for k in keys] for r in results])
    _write_json(out / "sweep.json", {"param": args.param, "results": results, "scenario": dump_resolved(sc)})
    for r in results:
        print(f"{args.param}={r['value']}: {r['status']}"
              + (f", total {r['total_dv_mps']:.6f} m/s" if "total_dv_mps" in r else ""))
    return EXIT_OK if all(r["status"] == "ok" for r in results) else EXIT_SOLVER


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario YAML file or builtin:NAME")
    common.add_argument("--out", metavar="DIR", help="output directory (default: the scenario's)")
    common.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="halokeep", description=__doc__.strip().splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-orbit", parents=[common], help="correct and discretize the reference orbit")
    p.set_defaults(func=cmd_gen_orbit)

    p = sub.add_parser("manifolds", parents=[common], help="unstable-manifold trajectories")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--sign", choices=("+", "-", "both"), default="both")
    p.add_argument("--tau-periods", type=float, default=3.0, help="propagation time in periods")
    p.add_argument("--stride", type=int, default=1, help="seed every STRIDE-th knot")
    p.add_argument("--samples", type=int, default=200, help="points per trajectory")
    p.set_defaults(func=cmd_manifolds)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop stationkeeping mission")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="uncontrolled-exit verification of a mission")
    p.add_argument("--ab", action="store_true", help="also verify a mission without the half-space")
    p.add_argument("--sample-every", type=int, help="classify every k-th state")
    p.add_argument("--workers", type=int, help="worker processes for classification")
    p.add_argument("--exits", type=int, default=0, help="write N sampled exit polylines")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common], help="burn table, per-rev delta-v and margins")
    p.add_argument("--threshold", type=float, default=BURN_THRESHOLD, help="burn threshold on |u|_1")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", parents=[common], help="repeat a mission over values of one field")
    p.add_argument("--param", required=True, help="dotted scenario key, e.g. constraint.c")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--revolutions", type=int, help="override mission.revolutions")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-logs", action="store_true", help="write each mission CSV")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ScenarioError, InitialConditionError, AssemblyError, FileNotFoundError,
            yaml.YAMLError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MissionFailed, CorrectionError, RiccatiError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (PropagationError, SingularityError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
