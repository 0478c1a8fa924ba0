"""Command-line front end: ``ropesim {bound,simulate,optimize,convexify,sweep}``.

Every verb reads a JSON scenario file (positional, or ``--config``), prints a
JSON result on stdout and exits 0, or prints one error line on stderr and
exits 1. Usage errors exit 2.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (
    bound_for,
    ideal_acceleration,
    ideal_arrest_time,
    initial_velocity,
    make_report,
)
from .constitutive import EnergyDensity, HysteresisLaw, check_properties, convexify
from .design import optimality_certificate, optimize_law
from .dynamics import IntegratorConfig, simulate_carabiner_fall, simulate_fall
from .errors import ConfigError, ElongationExceeded, RopeSimError
from .fileio import (
    dump_json,
    load_document,
    load_scenario_file,
    parse_document,
    read_micro_energy_csv,
    write_curve_csv,
    write_envelope_csv,
)
from .scenario import CarabinerScenario
from .svg import Panel, write_svg

log = logging.getLogger("ropesim")

CARABINER_KEYS = ("l1", "l2", "alpha_rad", "k", "mu")
SCENARIO_KEYS = ("m", "g", "L", "delta_l", "h0")
HYSTERESIS_MAX_TIME = 60.0


def _scenario_path(args) -> Path:
    path = getattr(args, "file", None) or args.config
    if path is None:
        raise ConfigError("no scenario file given (positional argument or --config)")
    return Path(path)


# --------------------------------------------------------------------------
# bound
# --------------------------------------------------------------------------

def bound_constants(s) -> dict:
    if isinstance(s, CarabinerScenario):
        out = {"mu": s.mu}
        s = s.lower_segment_scenario()
    else:
        out = {}
    return {"b0": bound_for(s), "a0": ideal_acceleration(s), "v0": initial_velocity(s),
            "T": ideal_arrest_time(s), **out}


def cmd_bound(args) -> int:
    sf = load_scenario_file(_scenario_path(args))
    print(dump_json(bound_constants(sf.scenario)))
    return 0


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def simulation_config(sf) -> IntegratorConfig:
    if isinstance(sf.law, HysteresisLaw):
        return sf.config(max_time=HYSTERESIS_MAX_TIME)
    # one full oscillation: stretch, retract, go slack
    return sf.config(cycles=1)


def run_simulation(sf):
    cfg = simulation_config(sf)
    law = sf.law.fresh() if isinstance(sf.law, HysteresisLaw) else sf.law
    if sf.is_carabiner:
        return simulate_carabiner_fall(sf.scenario, law, cfg)
    return simulate_fall(sf.scenario, law, cfg)


def trajectory_panels(traj, s) -> list[Panel]:
    taut = s.taut_length
    p1 = Panel("Climber position", "t [s]", "y [m]").add("y(t)", traj.t, traj.y)
    p1.add("taut length", [traj.t[0], traj.t[-1]], [taut, taut], dashed=True)
    p2 = Panel("Tension vs strain", "strain", "tension [N]").add("b(strain)", traj.strain, traj.tension)
    b0 = bound_for(s)
    lo, hi = float(np.min(traj.strain)), float(np.max(traj.strain))
    p2.add("bound b0", [lo, hi], [b0, b0], dashed=True)
    return [p1, p2]


def cmd_simulate(args) -> int:
    sf = load_scenario_file(_scenario_path(args))
    try:
        traj = run_simulation(sf)
    except ElongationExceeded as exc:
        if args.out and exc.trajectory is not None:
            exc.trajectory.to_csv(args.out)
            log.info("wrote partial trajectory to %s", args.out)
        raise
    if args.out:
        traj.to_csv(args.out)
        log.info("wrote %d samples to %s", len(traj), args.out)
    if args.plot:
        write_svg(trajectory_panels(traj, sf.scenario), args.plot)
        log.info("wrote plot to %s", args.plot)
    print(dump_json(make_report(traj, sf.scenario).to_dict()))
    return 0


# --------------------------------------------------------------------------
# optimize
# --------------------------------------------------------------------------

def cmd_optimize(args) -> int:
    sf = load_scenario_file(_scenario_path(args))
    if sf.is_carabiner:
        raise ConfigError("optimize works on single-rope scenarios; remove the 'carabiner' object")
    s = sf.scenario
    res = optimize_law(s, n_knots=args.knots, budget=args.budget, seed=args.seed)
    gap, deviation = optimality_certificate(res.best_law, s)
    out = Path(args.out)
    write_curve_csv(res.best_law, out)
    cert = {
        "gap": gap,
        "plateau_deviation": deviation,
        "peak_tension": res.peak_tension,
        "bound_b0": bound_for(s),
        "max_elongation": res.max_elongation,
        "iterations": res.iterations,
        "evaluations": res.evaluations,
        "knots": args.knots,
        "budget": args.budget,
        "seed": args.seed,
        "law_csv": str(out),
    }
    dump_json(cert, out.with_suffix(".json"))
    log.info("wrote %s and %s", out, out.with_suffix(".json"))
    print(dump_json(cert))
    return 0


# --------------------------------------------------------------------------
# convexify
# --------------------------------------------------------------------------

def cmd_convexify(args) -> int:
    samples = read_micro_energy_csv(args.curve)
    env = convexify(samples)
    out = Path(args.out) if args.out else Path(args.curve).with_name(Path(args.curve).stem + "_envelope.csv")
    write_envelope_csv(samples, env, out)
    w_env = env(samples.strains)
    if args.plot:
        p = Panel("Energy density", "strain", "W [J/m]")
        p.add("sampled W", samples.strains, samples.values)
        p.add("convex envelope", samples.strains, w_env, dashed=True)
        write_svg([p], args.plot)
    props = check_properties(EnergyDensity.from_samples(samples.strains, samples.values))
    summary = {
        "samples": len(samples.strains),
        "lowered_samples": int(np.sum(w_env < samples.values)),
        "input_properties": props._asdict(),
        "envelope_properties": check_properties(env)._asdict(),
        "out": str(out),
    }
    print(dump_json(summary))
    return 0


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def parse_vary(text: str):
    try:
        key, rng = text.split("=", 1)
        lo, hi, n = rng.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected key=lo:hi:n, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("n must be >= 1")
    return key.strip(), lo, hi, n


def _apply(doc: dict, key: str, value: float) -> dict:
    doc = copy.deepcopy(doc)
    section, _, name = key.rpartition(".")
    if not section:
        if name in CARABINER_KEYS:
            section = "carabiner"
        elif name in SCENARIO_KEYS:
            section = "scenario"
        else:
            raise ConfigError(f"cannot vary unknown key {key!r}")
    if section not in ("scenario", "carabiner", "integrator"):
        raise ConfigError(f"cannot vary key {key!r}")
    if section == "carabiner" and "carabiner" not in doc:
        raise ConfigError(f"cannot vary {key!r}: the scenario has no 'carabiner' object")
    doc.setdefault(section, {})[name] = value
    return doc


def sweep_point(doc: dict, base_dir: str, key: str, value: float, index: int, out_dir: str) -> dict:
    row = {"index": index, key: value}
    try:
        sf = parse_document(_apply(doc, key, value), base_dir)
        row.update(bound_constants(sf.scenario))
        report = make_report(run_simulation(sf), sf.scenario).to_dict()
        row.update(report)
        row["status"] = "ok"
    except RopeSimError as exc:
        report = None
        row["status"] = f"error: {exc}"
    dump_json({"index": index, "parameter": {key: value}, "report": report, "status": row["status"]},
              Path(out_dir) / f"point_{index:04d}.json")
    return row


def sweep_workers(n_points: int) -> int:
    env = os.environ.get("ROPE_SIM_THREADS")
    if env is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"ROPE_SIM_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError(f"ROPE_SIM_THREADS must be a positive integer, got {env!r}")
    return max(1, min(cap, n_points))


SUMMARY_COLUMNS = ("index", "b0", "mu", "peak_tension", "optimality_gap", "max_elongation", "arrest_time_t",
                   "rest_position", "energy_dissipated", "upper_segment_max_strain", "status")


def cmd_sweep(args) -> int:
    path = _scenario_path(args)
    doc = load_document(path)
    key, lo, hi, n = args.vary
    parse_document(_apply(doc, key, lo), path.parent)  # fail fast on a bad file or key
    values = [float(v) for v in np.linspace(lo, hi, n)]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(doc, str(path.parent), key, v, i, str(out_dir)) for i, v in enumerate(values)]
    workers = sweep_workers(n)
    if workers == 1:
        rows = [sweep_point(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_point, *zip(*jobs)))
    columns = ["index", key] + [c for c in SUMMARY_COLUMNS[1:] if any(c in r for r in rows)]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                        for c in columns])
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log.error("point %d (%s=%r): %s", r["index"], key, r[key], r["status"])
    print(dump_json({"points": n, "failed": len(failed), "workers": workers,
                           "summary": str(out_dir / "summary.csv")}))
    return 1 if failed else 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _budget(text: str) -> int:
    v = int(text)
    if v < 100:
        raise argparse.ArgumentTypeError(f"budget must be >= 100 evaluations, got {v}")
    return v


def _knots(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 knots, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ropesim", description="Climbing-rope fall simulator and rope-law design tools.")
    parser.add_argument("--config", help="scenario JSON file (alternative to the positional argument)")
    parser.add_argument("--quiet", action="store_true", help="only print results and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="print the peak-force bound and ideal-rope constants")
    p.add_argument("file", nargs="?")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="simulate a fall and print its report")
    p.add_argument("file", nargs="?")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--plot", help="SVG plot path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="search for the law with the smallest peak force")
    p.add_argument("file", nargs="?")
    p.add_argument("--knots", type=_knots, default=8)
    p.add_argument("--budget", type=_budget, default=5000, help="simulation evaluations (>= 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="optimized_law.csv", help="law CSV path; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("convexify", help="lower convex envelope of sampled energies (strain,energy_n CSV)")
    p.add_argument("curve")
    p.add_argument("--out", help="envelope CSV path")
    p.add_argument("--plot", help="SVG plot path")
    p.set_defaults(func=cmd_convexify)

    p = sub.add_parser("sweep", help="simulate over a range of one scenario parameter")
    p.add_argument("file", nargs="?")
    p.add_argument("--vary", type=parse_vary, required=True, metavar="KEY=LO:HI:N")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (RopeSimError, ValueError, OSError) as exc:
        print(f"ropesim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
