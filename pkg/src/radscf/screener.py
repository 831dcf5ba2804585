"""Qubit-suitability screening of neutral radicals.

Four criteria are checked: an ordering chain (-(CH2)n-), a substrate
anchor (carboxyl), a spatially localized unpaired spin, and strong bonds at
the spin-bearing atoms. The first two are pattern checks on the bond graph;
the last two read Mulliken spin densities and overlap populations, which
may come from an SCF run or be supplied directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .analysis import BondOrderTable
from .molsys import BOHR_TO_ANGSTROM, BondGraph, Molecule, perceive_bonds

ANTIFERRO_THRESHOLD = 0.1
NET_SPIN_EPS = 1e-8


class NotARadicalError(ValueError):
    pass


class IsolatedSpinError(ValueError):
    pass


@dataclass
class ScreeningThresholds:
    localization_top_k: int = 2
    localization_fraction: float = 0.7
    bond_order_min: float = 0.3
    min_chain_length: int = 8
    anchor_patterns: tuple[str, ...] = ("carboxyl",)

    def __post_init__(self):
        if not 0 < self.localization_fraction <= 1:
            raise ValueError("localization_fraction must lie in (0, 1]")
        if self.localization_top_k < 1:
            raise ValueError("localization_top_k must be >= 1")
        unknown = set(self.anchor_patterns) - set(ANCHOR_PATTERNS)
        if unknown:
            raise ValueError(f"unknown anchor patterns {sorted(unknown)}")
        self.anchor_patterns = tuple(self.anchor_patterns)


@dataclass
class CriterionResult:
    passed: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"pass": bool(self.passed), "evidence": _jsonable(self.evidence)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.10g}") if x != 0 else 0.0
    return obj


def _is_ch2(mol: Molecule, graph: BondGraph, i: int) -> bool:
    if mol.symbols[i] != "C":
        return False
    nbrs = graph.neighbors(i)
    n_h = sum(mol.symbols[j] == "H" for j in nbrs)
    return len(nbrs) == 4 and n_h == 2


def detect_ordering_group(mol: Molecule, graph: BondGraph | None = None,
                          min_len: int = 8) -> CriterionResult:
    """Longest run of bonded CH2 carbons; passes when it reaches ``min_len``."""
    graph = graph or perceive_bonds(mol)
    ch2 = {i for i in range(len(mol)) if _is_ch2(mol, graph, i)}
    best: list[int] = []
    seen: set[int] = set()
    # each CH2 has two heavy neighbours, so components are simple paths or rings
    for start in sorted(ch2):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in graph.neighbors(i):
                if j in ch2 and j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(comp) > len(best):
            best = sorted(comp)
    return CriterionResult(len(best) >= min_len,
                           {"chain_length": len(best), "atoms": best, "min_length": min_len})


def find_carboxyl(mol: Molecule, graph: BondGraph) -> list[dict]:
    """C(=O)O-H groups whose carbon also carries exactly one carbon."""
    sym = mol.symbols
    matches = []
    for c in range(len(mol)):
        if sym[c] != "C":
            continue
        nbrs = graph.neighbors(c)
        oxy = [j for j in nbrs if sym[j] == "O"]
        carb = [j for j in nbrs if sym[j] == "C"]
        if len(nbrs) != 3 or len(oxy) != 2 or len(carb) != 1:
            continue
        hydroxyl = carbonyl = None
        for o in oxy:
            others = [j for j in graph.neighbors(o) if j != c]
            if len(others) == 1 and sym[others[0]] == "H":
                hydroxyl = (o, others[0])
            elif not others:
                carbonyl = o
        if hydroxyl and carbonyl is not None:
            matches.append({"carbon": c, "carbonyl_oxygen": carbonyl,
                            "hydroxyl_oxygen": hydroxyl[0], "hydrogen": hydroxyl[1]})
    return matches


ANCHOR_PATTERNS = {"carboxyl": find_carboxyl}


def detect_anchor_group(mol: Molecule, graph: BondGraph | None = None,
                        patterns=("carboxyl",)) -> CriterionResult:
    graph = graph or perceive_bonds(mol)
    found = []
    for name in patterns:
        for match in ANCHOR_PATTERNS[name](mol, graph):
            found.append({"pattern": name, **match})
    return CriterionResult(bool(found), {"matches": found})


def assess_spin_localization(spins, k: int = 2, fraction: float = 0.7, coords=None,
                             net_spin: float | None = None, labels=None) -> CriterionResult:
    """Do the k largest |spin| atoms carry at least ``fraction`` of the net spin?

    ``net_spin`` defaults to the sum of ``spins``. ``coords`` (bohr) adds the
    pairwise separations of the top-k atoms to the evidence.
    """
    spins = np.asarray(spins, dtype=float)
    net = float(spins.sum()) if net_spin is None else float(net_spin)
    if abs(net) < NET_SPIN_EPS:
        raise NotARadicalError("net spin is zero; not a radical")
    k = min(k, len(spins))
    order = np.argsort(-np.abs(spins), kind="stable")[:k]
    top = spins[order]
    same_sign = bool(np.all(top * np.sign(net) >= 0))
    share = float(top.sum() / net)
    passed = same_sign and share >= fraction
    labels = list(labels) if labels is not None else [int(i) for i in range(len(spins))]
    opposite = [(labels[i], float(spins[i])) for i in range(len(spins))
                if np.sign(spins[i]) == -np.sign(net) and abs(spins[i]) > ANTIFERRO_THRESHOLD]
    evidence = {
        "top_atoms": [labels[i] for i in order],
        "top_spins": [float(s) for s in top],
        "spin_fractions": [float(s / net) for s in top],
        "top_k_share": share,
        "net_spin": net,
        "same_sign_as_net": same_sign,
        "threshold": fraction,
        "antiferromagnetic_structure": bool(opposite),
        "opposite_sign_sites": opposite,
    }
    if coords is not None:
        xyz = np.asarray(coords, dtype=float)
        evidence["separations_bohr"] = {
            f"{labels[a]}-{labels[b]}": float(np.linalg.norm(xyz[a] - xyz[b]))
            for a, b in combinations(order, 2)
        }
    return CriterionResult(passed, evidence)


def assess_bond_stability(bond_orders: BondOrderTable | dict, spin_atoms,
                          threshold: float = 0.3) -> CriterionResult:
    """Minimum overlap population over bonds touching any spin-bearing atom."""
    if not isinstance(bond_orders, BondOrderTable):
        table = BondOrderTable()
        for pair, v in dict(bond_orders).items():
            table[pair] = v
        bond_orders = table
    spin_atoms = [int(a) for a in spin_atoms]
    if not spin_atoms:
        raise ValueError("no spin-bearing atoms given")
    collected: dict[tuple[int, int], float] = {}
    for atom in spin_atoms:
        bonds = bond_orders.incident(atom)
        if not bonds:
            raise IsolatedSpinError(f"spin-bearing atom {atom} has no perceived bonds")
        collected.update(bonds)
    weakest = min(collected, key=lambda p: (collected[p], p))
    minimum = collected[weakest]
    return CriterionResult(minimum >= threshold, {
        "min_overlap_population": minimum,
        "weakest_bond": list(weakest),
        "bonds": {f"{a}-{b}": v for (a, b), v in sorted(collected.items())},
        "threshold": threshold,
    })


@dataclass
class SuitabilityReport:
    criterion_1_ordering: CriterionResult
    criterion_2_anchor: CriterionResult
    criterion_3_localization: CriterionResult
    criterion_4_stability: CriterionResult
    reason: str | None = None

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.criteria.values())

    @property
    def criteria(self) -> dict[str, CriterionResult]:
        return {
            "criterion_1_ordering": self.criterion_1_ordering,
            "criterion_2_anchor": self.criterion_2_anchor,
            "criterion_3_localization": self.criterion_3_localization,
            "criterion_4_stability": self.criterion_4_stability,
        }

    def to_dict(self) -> dict:
        out = {name: c.to_dict() for name, c in self.criteria.items()}
        out["overall"] = {"pass": self.overall, "reason": self.reason}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        names = {
            "criterion_1_ordering": "1 ordering group",
            "criterion_2_anchor": "2 anchor group",
            "criterion_3_localization": "3 localized spin",
            "criterion_4_stability": "4 bond stability",
        }
        lines = []
        for key, c in self.criteria.items():
            ev = c.evidence
            if key == "criterion_1_ordering":
                detail = f"CH2 chain length {ev.get('chain_length', 0)}"
            elif key == "criterion_2_anchor":
                detail = f"{len(ev.get('matches', []))} anchor match(es)"
            elif key == "criterion_3_localization":
                detail = (f"top atoms {ev.get('top_atoms')} share {ev.get('top_k_share', 0):.3f}"
                          if "top_atoms" in ev else ev.get("reason", ""))
                if ev.get("antiferromagnetic_structure"):
                    detail += " (antiferromagnetic structure)"
            else:
                detail = (f"min overlap population {ev['min_overlap_population']:.3f}"
                          if "min_overlap_population" in ev else ev.get("reason", ""))
            lines.append(f"criterion {names[key]:<18} {'PASS' if c.passed else 'FAIL'}  {detail}")
        verdict = "PASS" if self.overall else "FAIL"
        if self.reason:
            verdict += f" ({self.reason})"
        lines.append(f"overall {verdict}")
        return "\n".join(lines) + "\n"


def screen(mol: Molecule, spins=None, bond_orders: BondOrderTable | dict | None = None,
           thresholds: ScreeningThresholds | None = None, graph: BondGraph | None = None,
           scf_converged: bool = True) -> SuitabilityReport:
    """Apply all four criteria; overall passes only if each one does."""
    th = thresholds or ScreeningThresholds()
    graph = graph or perceive_bonds(mol)
    c1 = detect_ordering_group(mol, graph, th.min_chain_length)
    c2 = detect_anchor_group(mol, graph, th.anchor_patterns)
    if not scf_converged or spins is None or bond_orders is None:
        reason = "scf-unconverged" if not scf_converged else "no-electronic-structure"
        skipped = CriterionResult(False, {"reason": reason})
        return SuitabilityReport(c1, c2, skipped, CriterionResult(False, {"reason": reason}),
                                 reason=reason)
    net = mol.multiplicity - 1 if mol.multiplicity > 1 else None
    c3 = assess_spin_localization(spins, th.localization_top_k, th.localization_fraction,
                                  coords=mol.coords, net_spin=net)
    c3.evidence["separations_angstrom"] = {
        k: v * BOHR_TO_ANGSTROM for k, v in c3.evidence.get("separations_bohr", {}).items()}
    c4 = assess_bond_stability(bond_orders, c3.evidence["top_atoms"], th.bond_order_min)
    return SuitabilityReport(c1, c2, c3, c4)
