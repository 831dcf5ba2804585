"""radscf command line: energy, analyze, screen, optimize, scan."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .analysis import BondOrderTable, analysis_report, analyze
from .basis import BasisError, assign_basis, get_basis
from .geomopt import (GradientError, OptimizerConfig, StalledOptimizationError, bond_scan,
                      optimize, trajectory_xyz)
from .integrals import build_integral_tables
from .molsys import MoleculeError, XYZParseError, parse_xyz, perceive_bonds
from .scf import LinearDependenceError, SCFConfig, scf_uhf
from .screener import ScreeningThresholds, screen

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SCF = 3
EXIT_INVARIANT = 4

INVARIANT_TOL = 1e-6


class InputError(Exception):
    pass


class SCFFailure(Exception):
    pass


class InvariantViolation(Exception):
    pass


def _fmt(x):
    x = float(x)
    return float(f"{x:.10g}") if x != 0 else 0.0


def _fmt_list(values):
    return [_fmt(v) for v in values]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--geometry", required=True, help="XYZ file (angstrom)")
    common.add_argument("--basis", default="sto-3g")
    common.add_argument("--charge", type=int, default=None)
    common.add_argument("--mult", type=int, default=None, help="spin multiplicity 2S+1")
    common.add_argument("--method", choices=("rhf", "uhf"), default=None,
                        help="default: rhf for singlets, uhf otherwise")
    common.add_argument("--max-iter", type=int, default=128)
    common.add_argument("--energy-tol", type=float, default=1e-9)
    common.add_argument("--density-tol", type=float, default=1e-8)
    common.add_argument("--diis-depth", type=int, default=8)
    common.add_argument("--level-shift", type=float, default=0.0)
    common.add_argument("--mirror-occupation", default=None, metavar="NA,NB",
                        help="electrons per spin in orbitals odd under the molecular plane")
    common.add_argument("--mirror-axis", choices=("x", "y", "z"), default="z")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--json", dest="format", action="store_const", const="json")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--scf-log", default=None, help="JSON-lines SCF iteration log")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="radscf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("energy", parents=[common], help="SCF energy and orbital energies")
    p = sub.add_parser("analyze", parents=[common], help="Mulliken populations and bond orders")
    p.add_argument("--pair", action="append", default=[], metavar="A,B",
                   help="extra atom pair (1-based) for an overlap population")
    p = sub.add_parser("screen", parents=[common], help="four-criterion suitability report")
    p.add_argument("--top-k", type=int, default=2)
    p.add_argument("--fraction", type=float, default=0.7)
    p.add_argument("--bond-min", type=float, default=0.3)
    p.add_argument("--min-chain", type=int, default=8)
    p.add_argument("--spins", default=None,
                   help="JSON {atom (1-based): spin} replacing computed spin densities")
    p.add_argument("--bond-orders", default=None,
                   help='JSON {"A-B" (1-based): overlap population} replacing computed values')
    p = sub.add_parser("optimize", parents=[common], help="finite-difference relaxation")
    p.add_argument("--fd-step", type=float, default=5e-3)
    p.add_argument("--grad-tol", type=float, default=3e-4)
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--optimizer", choices=("quasi_newton", "steepest_descent_with_backtracking"),
                   default="quasi_newton")
    p.add_argument("--trajectory", default=None, help="multi-frame XYZ output")
    p = sub.add_parser("scan", parents=[common], help="1D bond-length scan")
    p.add_argument("--coord", required=True, metavar="A,B", help="atom pair, 1-based")
    p.add_argument("--from", dest="start", type=float, required=True, help="bohr")
    p.add_argument("--to", dest="stop", type=float, required=True, help="bohr")
    p.add_argument("--steps", type=int, required=True)
    return parser


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"expected 'A,B' atom pair, got {text!r}") from None
    return a - 1, b - 1


def _load_molecule(args):
    path = Path(args.geometry)
    if not path.is_file():
        raise InputError(f"geometry file not found: {path}")
    mol = parse_xyz(path.read_text(), args.charge, args.mult)
    return mol.validate()


def _scf_config(args) -> SCFConfig:
    mirror = None
    if args.mirror_occupation:
        try:
            mirror = tuple(int(v) for v in args.mirror_occupation.split(","))
        except ValueError:
            raise InputError("--mirror-occupation expects NA,NB") from None
        if len(mirror) != 2:
            raise InputError("--mirror-occupation expects NA,NB")
    try:
        return SCFConfig(max_iterations=args.max_iter, energy_tol=args.energy_tol,
                         density_rms_tol=args.density_tol, diis_depth=args.diis_depth,
                         level_shift=args.level_shift, mirror_occupation=mirror,
                         mirror_axis=args.mirror_axis)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _method(args, mol) -> str:
    return args.method or ("rhf" if mol.multiplicity == 1 else "uhf")


def _run_scf(args, mol):
    basis = get_basis(args.basis)
    functions = assign_basis(mol, basis)
    tables = build_integral_tables(functions, mol, threads=args.threads)
    cfg = _scf_config(args)
    log_fh = open(args.scf_log, "w") if args.scf_log else None
    try:
        result = scf_uhf(mol, functions, tables, cfg, method=_method(args, mol),
                         iteration_log=log_fh)
    finally:
        if log_fh:
            log_fh.close()
    _check_invariants(result, tables)
    return functions, tables, result


def _check_invariants(result, tables):
    S = tables.S
    for label, P, n in (("alpha", result.P_alpha, result.n_alpha),
                        ("beta", result.P_beta, result.n_beta)):
        tr = float(np.trace(P @ S))
        if abs(tr - n) > INVARIANT_TOL:
            raise InvariantViolation(f"tr(P_{label} S) = {tr:.10f}, expected {n}")
    if abs(result.E_total - result.E_electronic - result.E_nuclear) > 1e-10:
        raise InvariantViolation("E_total != E_electronic + E_nuclear")


def _molecule_block(mol):
    return {"formula": mol.formula, "n_atoms": len(mol), "charge": mol.charge,
            "multiplicity": mol.multiplicity, "n_electrons": mol.n_electrons}


def _energy_block(args, mol, result):
    return {
        "molecule": _molecule_block(mol),
        "basis": args.basis.lower(),
        "method": result.method,
        "converged": result.converged,
        "iterations": result.iterations,
        "energy": {"total": _fmt(result.E_total), "electronic": _fmt(result.E_electronic),
                   "nuclear_repulsion": _fmt(result.E_nuclear)},
        "orbital_energies": {"alpha": _fmt_list(result.eps_alpha),
                             "beta": _fmt_list(result.eps_beta)},
        "s_squared": _fmt(result.s_squared),
    }


def _require_converged(result):
    if not result.converged:
        raise SCFFailure(f"SCF did not converge in {result.iterations} iterations")


def cmd_energy(args):
    mol = _load_molecule(args)
    _, _, result = _run_scf(args, mol)
    report = {"command": "energy", **_energy_block(args, mol, result)}
    # the report is still written; exit status flags non-convergence
    return report, not result.converged


def cmd_analyze(args):
    mol = _load_molecule(args)
    functions, tables, result = _run_scf(args, mol)
    _require_converged(result)
    pairs = [_pair(p) for p in args.pair]
    pops, bonds = analyze(result, tables, mol, functions, pairs)
    _check_sum_rules(mol, pops)
    report = {"command": "analyze", **_energy_block(args, mol, result),
              **analysis_report(mol, pops, bonds)}
    return report, False


def _check_sum_rules(mol, pops):
    if abs(pops.population.sum() - mol.n_electrons) > INVARIANT_TOL:
        raise InvariantViolation("Mulliken populations do not sum to the electron count")
    if abs(pops.spin.sum() - (mol.multiplicity - 1)) > INVARIANT_TOL:
        raise InvariantViolation("spin densities do not sum to multiplicity - 1")


def _read_json_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def cmd_screen(args):
    mol = _load_molecule(args)
    try:
        th = ScreeningThresholds(args.top_k, args.fraction, args.bond_min, args.min_chain)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    graph = perceive_bonds(mol)
    report = {"command": "screen", "molecule": _molecule_block(mol),
              "basis": args.basis.lower()}
    if bool(args.spins) != bool(args.bond_orders):
        raise InputError("--spins and --bond-orders must be given together")
    if args.spins:
        spins = np.zeros(len(mol))
        for k, v in _read_json_file(args.spins).items():
            spins[int(k) - 1] = float(v)
        bonds = BondOrderTable()
        for k, v in _read_json_file(args.bond_orders).items():
            a, b = _pair(k.replace("-", ","))
            bonds[a, b] = float(v)
        suit = screen(mol, spins, bonds, th, graph)
        report["source"] = "supplied"
    else:
        functions, tables, result = _run_scf(args, mol)
        report.update({k: v for k, v in _energy_block(args, mol, result).items()
                       if k != "molecule"})
        if result.converged:
            pops, bonds = analyze(result, tables, mol, functions)
            _check_sum_rules(mol, pops)
            report.update(analysis_report(mol, pops, bonds))
            suit = screen(mol, pops.spin, bonds, th, graph)
        else:
            suit = screen(mol, thresholds=th, graph=graph, scf_converged=False)
        report["source"] = "scf"
    report["suitability"] = suit.to_dict()
    report["_text"] = suit.to_text()
    return report, False


def _opt_config(args):
    return OptimizerConfig(fd_step=args.fd_step, grad_tol=args.grad_tol,
                           max_steps=args.max_steps, method=args.optimizer,
                           scf=_scf_config(args))


def cmd_optimize(args):
    mol = _load_molecule(args)
    cfg = _opt_config(args)
    cfg.scf_method = _method(args, mol)
    result = optimize(mol, get_basis(args.basis), cfg)
    if args.trajectory:
        _atomic_write(args.trajectory, trajectory_xyz(result.frames, result.energies))
    final = result.molecule
    report = {
        "command": "optimize",
        "molecule": _molecule_block(final),
        "basis": args.basis.lower(),
        "converged": result.converged,
        "steps": result.steps,
        "energies": _fmt_list(result.energies),
        "max_gradient": _fmt(np.abs(result.gradient).max()),
        "geometry_angstrom": [
            {"element": a.element, "xyz": _fmt_list(a.position / 1.8897259886)}
            for a in final.atoms
        ],
    }
    return report, False


def cmd_scan(args):
    mol = _load_molecule(args)
    a, b = _pair(args.coord)
    if not (0 <= a < len(mol) and 0 <= b < len(mol)) or a == b:
        raise InputError(f"--coord {args.coord} does not name two distinct atoms")
    if args.steps < 2:
        raise InputError("--steps must be >= 2")
    cfg = OptimizerConfig(scf=_scf_config(args))
    cfg.scf_method = _method(args, mol)
    grid = np.linspace(args.start, args.stop, args.steps)
    points = bond_scan(mol, get_basis(args.basis), (a, b), grid, cfg)
    return {"command": "scan", "molecule": _molecule_block(mol), "basis": args.basis.lower(),
            "atoms": [a + 1, b + 1], "unit": "bohr",
            "points": [{"r": _fmt(r), "energy": _fmt(e)} for r, e in points]}, False


COMMANDS = {"energy": cmd_energy, "analyze": cmd_analyze, "screen": cmd_screen,
            "optimize": cmd_optimize, "scan": cmd_scan}


def render_text(report: dict) -> str:
    cmd = report["command"]
    lines = []
    mol = report["molecule"]
    lines.append(f"{mol['formula']}  charge {mol['charge']}  multiplicity {mol['multiplicity']}")
    if "energy" in report:
        state = "converged" if report["converged"] else "NOT converged"
        lines.append(f"{report['method'].upper()}/{report['basis']}  {state} "
                     f"in {report['iterations']} iterations")
        lines.append(f"E_total      = {report['energy']['total']:.10f} hartree")
        lines.append(f"E_nuclear    = {report['energy']['nuclear_repulsion']:.10f} hartree")
        lines.append(f"<S^2>        = {report['s_squared']:.6f}")
        for spin in ("alpha", "beta"):
            eps = " ".join(f"{e:.6f}" for e in report["orbital_energies"][spin])
            lines.append(f"eps_{spin:<5} = {eps}")
    if "atoms" in report:
        lines.append("atom  el   population    charge      spin")
        for at in report["atoms"]:
            lines.append(f"{at['index'] + 1:>4}  {at['element']:<2} {at['population']:>12.6f}"
                         f" {at['charge']:>9.6f} {at['spin']:>9.6f}")
        lines.append("bond         overlap_pop   distance/A")
        for bd in report["bonds"]:
            lines.append(f"{bd['a'] + 1:>4}-{bd['b'] + 1:<4}  {bd['overlap_population']:>12.6f}"
                         f"   {bd['distance_angstrom']:.4f}")
    if cmd == "screen":
        lines.append(report["_text"].rstrip())
    if cmd == "optimize":
        lines.append(f"optimization {'converged' if report['converged'] else 'NOT converged'}"
                     f" after {report['steps']} steps, max|g| = {report['max_gradient']:.2e}")
        for e in report["energies"]:
            lines.append(f"  E = {e:.10f}")
    if cmd == "scan":
        for p in report["points"]:
            lines.append(f"{p['r']:12.6f} {p['energy']:18.10f}")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        clean = {k: v for k, v in report.items() if not k.startswith("_")}
        return json.dumps(clean, indent=2, sort_keys=True) + "\n"
    return render_text(report)


def _atomic_write(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_error(kind: str, message: str, code: int):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report, unconverged = COMMANDS[args.command](args)
    except (InputError, XYZParseError, MoleculeError, BasisError, LinearDependenceError,
            OSError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_INPUT)
    except (SCFFailure, GradientError, StalledOptimizationError) as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_SCF)
    except InvariantViolation as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_INVARIANT)
    except ValueError as exc:
        return _emit_error(type(exc).__name__, str(exc), EXIT_INPUT)
    text = render(report, args.format)
    if args.output:
        _atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    if unconverged:
        return _emit_error("SCFFailure", "SCF did not converge", EXIT_SCF)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
