"""Mulliken condensation: atomic populations, spin densities, overlap populations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisFunction, basis_owner
from .integrals import IntegralTables
from .molsys import BOHR_TO_ANGSTROM, Molecule, distance_matrix, perceive_bonds
from .scf import SCFResult


class UnconvergedSCFError(RuntimeError):
    pass


@dataclass
class AtomicPopulations:
    elements: list[str]
    population: np.ndarray
    charge: np.ndarray
    spin: np.ndarray

    def __len__(self):
        return len(self.elements)


@dataclass
class BondOrderTable:
    """Overlap populations keyed by sorted atom-index pairs."""

    values: dict[tuple[int, int], float] = field(default_factory=dict)

    def __setitem__(self, pair, value):
        a, b = pair
        if a == b:
            raise ValueError("self-pair has no overlap population")
        self.values[(min(a, b), max(a, b))] = float(value)

    def __getitem__(self, pair) -> float:
        a, b = pair
        return self.values[(min(a, b), max(a, b))]

    def __contains__(self, pair) -> bool:
        a, b = pair
        return (min(a, b), max(a, b)) in self.values

    def __len__(self):
        return len(self.values)

    def items(self):
        return sorted(self.values.items())

    def incident(self, atom: int) -> dict[tuple[int, int], float]:
        return {k: v for k, v in self.values.items() if atom in k}


def _condense(M: np.ndarray, owner: np.ndarray, n_atoms: int | None = None) -> np.ndarray:
    n_atoms = int(owner.max()) + 1 if n_atoms is None else n_atoms
    return np.bincount(owner, weights=np.diag(M), minlength=n_atoms)


def mulliken_populations(P_total, S, owner, n_atoms=None) -> np.ndarray:
    """Gross atomic populations q_A = sum over A's functions of (PS)_mu,mu."""
    return _condense(np.asarray(P_total) @ np.asarray(S), np.asarray(owner), n_atoms)


def atomic_spin_densities(P_alpha, P_beta, S, owner, n_atoms=None) -> np.ndarray:
    """Mulliken-condensed alpha-minus-beta density per atom."""
    return _condense((np.asarray(P_alpha) - np.asarray(P_beta)) @ np.asarray(S),
                     np.asarray(owner), n_atoms)


def overlap_population(P_total, S, owner, pair) -> float:
    """Bond order between two atoms: 2 * sum_{i on A, j on B} P_ij S_ij."""
    a, b = pair
    if a == b:
        raise ValueError("overlap population needs two distinct atoms")
    owner = np.asarray(owner)
    ia = owner == a
    ib = owner == b
    block = (np.asarray(P_total) * np.asarray(S))[np.ix_(ia, ib)]
    return float(2.0 * block.sum())


def analyze(result: SCFResult, tables: IntegralTables, mol: Molecule,
            basis: list[BasisFunction], extra_pairs=()):
    """Populations for every atom and bond orders for perceived bonds plus ``extra_pairs``."""
    if not result.converged:
        raise UnconvergedSCFError("refusing to analyze an unconverged SCF result")
    owner = basis_owner(basis)
    n_atoms = len(mol)
    pop = mulliken_populations(result.P_total, tables.S, owner, n_atoms)
    spin = atomic_spin_densities(result.P_alpha, result.P_beta, tables.S, owner, n_atoms)
    pops = AtomicPopulations(mol.symbols, pop, mol.atomic_numbers - pop, spin)
    bonds = BondOrderTable()
    pairs = list(perceive_bonds(mol).edges) + [tuple(p) for p in extra_pairs]
    for a, b in pairs:
        bonds[a, b] = overlap_population(result.P_total, tables.S, owner, (a, b))
    return pops, bonds


def _fmt(x: float) -> float:
    # fixed 10 significant digits keeps serialized reports byte-stable
    return float(f"{x:.10g}") if x != 0 else 0.0


def analysis_report(mol: Molecule, pops: AtomicPopulations, bonds: BondOrderTable) -> dict:
    dist = distance_matrix(mol) * BOHR_TO_ANGSTROM
    return {
        "atoms": [
            {"index": i, "element": el, "population": _fmt(pops.population[i]),
             "charge": _fmt(pops.charge[i]), "spin": _fmt(pops.spin[i])}
            for i, el in enumerate(pops.elements)
        ],
        "bonds": [
            {"a": a, "b": b, "overlap_population": _fmt(v),
             "distance_angstrom": _fmt(dist[a, b])}
            for (a, b), v in bonds.items()
        ],
    }


def analysis_json(mol, pops, bonds) -> str:
    return json.dumps(analysis_report(mol, pops, bonds), indent=2, sort_keys=True)
