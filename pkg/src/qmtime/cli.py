"""Command-line front end.

Subcommands map one-to-one onto the library layers: ``estimate`` onto the
SI estimators, ``qsl`` onto speed-limit times for a Hamiltonian file,
``measure-sim`` onto the ancilla readout protocol, ``lightcone`` onto chain
scans, ``bound-check`` and ``emit-plot`` onto the experiment dataset.

Numbers are printed in SI units with suffixes; CSV outputs carry raw
floats. Usage errors exit 2, domain errors (bad files, invalid physics
inputs) exit 1, and ``bound-check`` exits 1 when any record violates the
bound.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from qmtime.bench import builtin_dataset, check_bound, emit_plot_data, load_dataset
from qmtime.evolve import TimeGrid
from qmtime.lightcone import (
    DEFAULT_THRESHOLD,
    arrival_times,
    arrivals_to_csv,
    cone_scan,
    fit_velocity,
    scan_to_csv,
)
from qmtime.measure import ProjectiveMeasurement, run_ancilla_protocol
from qmtime.models import IsingParams, load_hamiltonian
from qmtime.opcore import HilbertGeometry, StateVector
from qmtime.speedlimit import (
    CONSTANTS,
    CONVENTION_VELOCITY,
    energetic_velocity,
    min_measurement_time,
    qsl_time,
)

__all__ = ["cli_dispatch", "main"]


def _parse_charge(text: str) -> float:
    """Charge in coulombs; 'e' suffixed values are in elementary charges."""
    text = text.strip()
    if text.endswith("e") or text.endswith("E"):
        head = text[:-1]
        factor = 1.0 if head == "" else float(head)
        return factor * CONSTANTS.elementary_charge
    return float(text)


def _run_estimate(args: argparse.Namespace) -> int:
    q1 = _parse_charge(args.charge_s)
    q2 = _parse_charge(args.charge_a)
    v_pair = energetic_velocity(q1, q2)
    d = args.diameter
    t_pair = min_measurement_time(d, v_pair)
    t_convention = min_measurement_time(d, CONVENTION_VELOCITY)
    print(f"pair velocity k q1 q2 / (hbar pi): {v_pair:.6g} m/s")
    print(f"convention velocity: {CONVENTION_VELOCITY:.6g} m/s")
    print(f"t_min(d={d:.6g} m) at pair velocity: {t_pair:.6g} s")
    print(f"t_min(d={d:.6g} m) at convention velocity: {t_convention:.6g} s")
    print(f"t_min band: {min(t_pair, t_convention):.6g} s to {max(t_pair, t_convention):.6g} s")
    if args.velocity is not None:
        print(f"t_min(d={d:.6g} m) at {args.velocity:.6g} m/s: {min_measurement_time(d, args.velocity):.6g} s")
    if args.light:
        t_light = min_measurement_time(d, CONSTANTS.light_speed)
        print(f"t_min(d={d:.6g} m) at light speed: {t_light:.6g} s")
    return 0


def _parse_state(text: str, n_sites: int) -> StateVector:
    geometry = HilbertGeometry(n_sites)
    text = text.strip()
    if set(text) <= {"0", "1"} and len(text) == n_sites:
        return StateVector.basis(geometry, text)
    amplitudes = np.array([complex(part) for part in text.split(",")])
    return StateVector(geometry, amplitudes)


def _run_qsl(args: argparse.Namespace) -> int:
    h = load_hamiltonian(args.hamiltonian)
    psi = _parse_state(args.state, h.geometry.n_sites)
    result = qsl_time(h, psi)
    for name, value in (("tau_mt", result.tau_mt), ("tau_ml", result.tau_ml), ("tau_qsl", result.tau_qsl)):
        print(f"{name}: {value:.12g}" + ("" if np.isfinite(value) else " (no finite bound)"))
    print(f"unreachable: {result.unreachable}")
    return 0


def _run_measure_sim(args: argparse.Namespace) -> int:
    psi = StateVector(HilbertGeometry(1), np.array([args.alpha, args.beta], dtype=complex))
    m = ProjectiveMeasurement.binary_z()
    if args.mode == "exact":
        result = run_ancilla_protocol(psi, m, mode="exact")
    else:
        result = run_ancilla_protocol(psi, m, mode="eq7", g=args.g, duration=args.t)
    for label, p in result.readout:
        print(f"p({label}) = {p:.12g}")
    if result.duration is not None:
        print(f"coupling duration: {result.duration:.6g} (protocol time pi/g = {np.pi / args.g:.6g})")
    print(f"dephasing distance: {result.dephasing_distance:.6g}")
    return 0


def _run_lightcone(args: argparse.Namespace) -> int:
    params = IsingParams(n=args.n, h=args.h, g=args.g)
    grid = TimeGrid(t_end=args.tmax, dt=args.dt)
    scan = cone_scan(params, args.source, grid, probe=args.probe)
    table = arrival_times(scan, args.eps)
    print(f"scan: n={args.n} h={args.h} g={args.g} source={args.source} probe={scan.probe} method={scan.method}")
    for site, dist, t in zip(table.sites, table.distances, table.arrivals):
        when = "never" if t is None else f"{t:.6g}"
        print(f"site {site}: distance {dist}, arrival {when}")
    if table.monotonicity_violations:
        print(f"monotonicity violations at sites: {list(table.monotonicity_violations)}")
    fit = fit_velocity(table, lattice_spacing=args.lattice_spacing)
    print(f"information velocity: {fit.velocity:.6g} sites/time (relative residual {fit.relative_residual:.3g})")
    if fit.velocity_si is not None:
        print(f"information velocity: {fit.velocity_si:.6g} m/s at spacing {args.lattice_spacing:.6g} m")
    if args.out:
        scan_to_csv(scan, args.out)
        print(f"scan written to {args.out}")
    if args.arrival_out:
        arrivals_to_csv(table, args.arrival_out)
        print(f"arrivals written to {args.arrival_out}")
    return 0


def _load_records(args: argparse.Namespace):
    return load_dataset(args.dataset) if args.dataset else builtin_dataset()


def _run_bound_check(args: argparse.Namespace) -> int:
    report = check_bound(_load_records(args), args.velocity)
    for e in report.entries:
        verdict = "PASS" if e.passed else "FAIL"
        print(
            f"{verdict} {e.record.id}: measured {e.record.time_s:.6g} s, "
            f"bound {e.bound_time_s:.6g} s, ratio {e.ratio:.6g}"
        )
    passed = sum(e.passed for e in report.entries)
    print(f"{passed}/{len(report.entries)} records satisfy t >= d/v at v = {report.velocity:.6g} m/s")
    return 0 if report.all_pass else 1


def _run_emit_plot(args: argparse.Namespace) -> int:
    main_path, bound_path = emit_plot_data(_load_records(args), args.velocity, args.out)
    print(f"points written to {main_path}")
    print(f"bound line written to {bound_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmtime",
        description="Measurement-time bounds: speed limits, ancilla readout, light cones.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="SI minimum-time estimates from charges and size")
    est.add_argument("--diameter", type=float, required=True, help="system size in metres")
    est.add_argument("--charge-s", default="e", help="system charge; floats are coulombs, 'e' or '2e' are elementary charges")
    est.add_argument("--charge-a", default="e", help="apparatus charge, same syntax")
    est.add_argument("--velocity", type=float, default=None, help="extra velocity (m/s) to evaluate the bound at")
    est.add_argument("--light", action="store_true", help="also evaluate the bound at the speed of light")
    est.set_defaults(handler=_run_estimate)

    qsl = sub.add_parser("qsl", help="speed-limit times for a Hamiltonian file and state")
    qsl.add_argument("--hamiltonian", required=True, help="JSON Hamiltonian description")
    qsl.add_argument("--state", required=True, help="basis label like 10, or comma-separated amplitudes")
    qsl.set_defaults(handler=_run_qsl)

    sim = sub.add_parser("measure-sim", help="run the ancilla readout protocol on a qubit")
    sim.add_argument("--alpha", type=float, required=True, help="amplitude on |0>")
    sim.add_argument("--beta", type=float, required=True, help="amplitude on |1>")
    sim.add_argument("--g", type=float, default=1.0, help="coupling rate")
    sim.add_argument("--t", type=float, default=None, help="coupling duration (default pi/g)")
    sim.add_argument("--mode", choices=("eq7", "exact"), default="eq7")
    sim.set_defaults(handler=_run_measure_sim)

    cone = sub.add_parser("lightcone", help="commutator-norm scan of a transverse-field chain")
    cone.add_argument("--n", type=int, required=True, help="chain length (max 12)")
    cone.add_argument("--h", type=float, default=1.0, help="on-site field")
    cone.add_argument("--g", type=float, default=1.0, help="nearest-neighbour coupling")
    cone.add_argument("--tmax", type=float, default=10.0)
    cone.add_argument("--dt", type=float, default=0.05)
    cone.add_argument("--eps", type=float, default=DEFAULT_THRESHOLD, help="arrival threshold")
    cone.add_argument("--source", type=int, default=0)
    cone.add_argument("--probe", default="Z", choices=("X", "Y", "Z"))
    cone.add_argument("--lattice-spacing", type=float, default=None, help="metres per site, enables m/s output")
    cone.add_argument("--out", default=None, help="write the scan grid CSV here")
    cone.add_argument("--arrival-out", default=None, help="write the arrival table CSV here")
    cone.set_defaults(handler=_run_lightcone)

    bc = sub.add_parser("bound-check", help="check dataset records against t >= d/v")
    bc.add_argument("--dataset", default=None, help="CSV path (default: built-in records)")
    bc.add_argument("--velocity", type=float, default=CONVENTION_VELOCITY)
    bc.set_defaults(handler=_run_bound_check)

    plot = sub.add_parser("emit-plot", help="write log-log plot data for the dataset")
    plot.add_argument("--dataset", default=None, help="CSV path (default: built-in records)")
    plot.add_argument("--velocity", type=float, default=CONVENTION_VELOCITY)
    plot.add_argument("--out", default="bound_points.csv")
    plot.set_defaults(handler=_run_emit_plot)

    return parser


def cli_dispatch(argv: list[str] | None = None) -> int:
    """Parse and run one command, returning the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed usage or help
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.handler(args)
    except (ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())
