"""Molecular geometry: atoms, XYZ I/O, electron counting, nuclear repulsion, bonds."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

ANGSTROM_TO_BOHR = 1.8897259886
BOHR_TO_ANGSTROM = 1.0 / ANGSTROM_TO_BOHR

ELEMENTS = (
    "H", "He",
    "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar",
)
ATOMIC_NUMBERS = {sym: z for z, sym in enumerate(ELEMENTS, start=1)}

# Covalent radii in angstrom (Cordero et al. 2008, sp3 carbon).
COVALENT_RADII = {
    "H": 0.31, "He": 0.28,
    "Li": 1.28, "Be": 0.96, "B": 0.84, "C": 0.76, "N": 0.71, "O": 0.66, "F": 0.57, "Ne": 0.58,
    "Na": 1.66, "Mg": 1.41, "Al": 1.21, "Si": 1.11, "P": 1.07, "S": 1.05, "Cl": 1.02, "Ar": 1.06,
}

BOND_SCALE = 1.2
COINCIDENT_TOL = 1e-6


class MoleculeError(ValueError):
    """Raised when a molecule violates a structural invariant."""


class XYZParseError(ValueError):
    """Raised for malformed XYZ input; carries the offending line number."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CountLineError(XYZParseError):
    pass


class UnknownElementError(XYZParseError):
    pass


class CoordinateError(XYZParseError):
    pass


def normalize_symbol(symbol: str) -> str:
    return symbol[:1].upper() + symbol[1:].lower()


@dataclass(frozen=True)
class Atom:
    element: str
    position: np.ndarray  # bohr

    def __post_init__(self):
        sym = normalize_symbol(self.element)
        if sym not in ATOMIC_NUMBERS:
            raise MoleculeError(f"unknown element {self.element!r}")
        pos = np.asarray(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(pos)):
            raise MoleculeError(f"non-finite position for {sym}")
        object.__setattr__(self, "element", sym)
        object.__setattr__(self, "position", pos)

    @property
    def atomic_number(self) -> int:
        return ATOMIC_NUMBERS[self.element]


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    charge: int = 0
    multiplicity: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.multiplicity is None:
            nel = sum(a.atomic_number for a in self.atoms) - self.charge
            object.__setattr__(self, "multiplicity", 1 if nel % 2 == 0 else 2)

    @classmethod
    def from_arrays(cls, symbols, coords, charge=0, multiplicity=None, unit="bohr"):
        """Build a molecule from symbols and an (n, 3) coordinate array."""
        coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        if unit == "angstrom":
            coords = coords * ANGSTROM_TO_BOHR
        elif unit != "bohr":
            raise ValueError(f"unknown unit {unit!r}")
        atoms = tuple(Atom(s, c) for s, c in zip(symbols, coords))
        return cls(atoms, charge, multiplicity)

    def __len__(self):
        return len(self.atoms)

    @property
    def symbols(self) -> list[str]:
        return [a.element for a in self.atoms]

    @property
    def atomic_numbers(self) -> np.ndarray:
        return np.array([a.atomic_number for a in self.atoms], dtype=float)

    @property
    def coords(self) -> np.ndarray:
        """(n, 3) positions in bohr."""
        if not self.atoms:
            return np.zeros((0, 3))
        return np.array([a.position for a in self.atoms])

    @property
    def n_electrons(self) -> int:
        return int(sum(a.atomic_number for a in self.atoms)) - self.charge

    @property
    def formula(self) -> str:
        """Hill-order formula, e.g. ``C9H18NO``."""
        counts: dict[str, int] = {}
        for s in self.symbols:
            counts[s] = counts.get(s, 0) + 1
        order = []
        if "C" in counts:
            order = ["C"] + (["H"] if "H" in counts else [])
        order += sorted(s for s in counts if s not in order)
        return "".join(s + (str(counts[s]) if counts[s] > 1 else "") for s in order)

    def with_coords(self, coords) -> "Molecule":
        coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        atoms = tuple(Atom(a.element, c) for a, c in zip(self.atoms, coords))
        return Molecule(atoms, self.charge, self.multiplicity)

    def validate(self) -> "Molecule":
        """Check electron count and spin parity; return self."""
        if not self.atoms:
            raise MoleculeError("molecule has no atoms")
        nel = self.n_electrons
        if nel < 1:
            raise MoleculeError(f"electron count {nel} < 1")
        if self.multiplicity < 1:
            raise MoleculeError(f"multiplicity must be positive, got {self.multiplicity}")
        if (nel - (self.multiplicity - 1)) % 2:
            raise MoleculeError(
                f"{nel} electrons incompatible with multiplicity {self.multiplicity}"
            )
        if self.multiplicity - 1 > nel:
            raise MoleculeError(
                f"multiplicity {self.multiplicity} needs more than {nel} electrons"
            )
        return self


def electron_counts(mol: Molecule) -> tuple[int, int]:
    mol.validate()
    nel = mol.n_electrons
    n_alpha = (nel + mol.multiplicity - 1) // 2
    return n_alpha, nel - n_alpha


def distance_matrix(mol: Molecule) -> np.ndarray:
    xyz = mol.coords
    return np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)


def nuclear_repulsion(mol: Molecule) -> float:
    """Sum of Z_A Z_B / R_AB over atom pairs, in hartree."""
    z = mol.atomic_numbers
    r = distance_matrix(mol)
    energy = 0.0
    for a, b in combinations(range(len(mol)), 2):
        if r[a, b] < COINCIDENT_TOL:
            raise MoleculeError(f"atoms {a} and {b} coincide (R = {r[a, b]:.2e} bohr)")
        energy += z[a] * z[b] / r[a, b]
    return float(energy)


@dataclass
class BondGraph:
    n_atoms: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def add(self, a: int, b: int, distance: float):
        if a == b:
            raise ValueError("self-edge")
        if not (0 <= a < self.n_atoms and 0 <= b < self.n_atoms):
            raise IndexError(f"edge ({a}, {b}) out of range")
        self.edges[(min(a, b), max(a, b))] = float(distance)

    def __contains__(self, pair) -> bool:
        a, b = pair
        return (min(a, b), max(a, b)) in self.edges

    def __len__(self):
        return len(self.edges)

    def neighbors(self, a: int) -> list[int]:
        out = []
        for i, j in self.edges:
            if i == a:
                out.append(j)
            elif j == a:
                out.append(i)
        return sorted(out)

    def distance(self, a: int, b: int) -> float:
        return self.edges[(min(a, b), max(a, b))]


def perceive_bonds(mol: Molecule, scale: float = BOND_SCALE) -> BondGraph:
    """Connect atoms closer than ``scale`` times the sum of covalent radii."""
    graph = BondGraph(len(mol))
    r = distance_matrix(mol)
    radii = np.array([COVALENT_RADII[s] for s in mol.symbols]) * ANGSTROM_TO_BOHR
    for a, b in combinations(range(len(mol)), 2):
        if r[a, b] <= scale * (radii[a] + radii[b]):
            graph.add(a, b, r[a, b])
    return graph


_META_RE = re.compile(r"\b(charge|mult)\s*=\s*([+-]?\d+)")


def parse_xyz(text: str, charge: int | None = None, multiplicity: int | None = None) -> Molecule:
    """Parse one XYZ frame (angstrom) into a Molecule in bohr.

    Charge and multiplicity come from ``charge=<int> mult=<int>`` on the
    comment line unless given explicitly. The returned molecule is not
    validated; call :meth:`Molecule.validate` for the electron-parity check.
    """
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise CountLineError("empty input, expected atom count", 1)
    try:
        natoms = int(lines[0].split()[0]) if lines[0].split() else None
    except ValueError:
        natoms = None
    if natoms is None or len(lines[0].split()) != 1 or natoms < 0:
        raise CountLineError(f"malformed atom count {lines[0]!r}", 1)

    comment = lines[1] if len(lines) > 1 else ""
    meta = {k: int(v) for k, v in _META_RE.findall(comment)}
    if charge is None:
        charge = meta.get("charge", 0)
    if multiplicity is None:
        multiplicity = meta.get("mult")

    body = lines[2:2 + natoms]
    if len(body) < natoms:
        raise CountLineError(f"expected {natoms} atom lines, found {len(body)}", 1)
    symbols, coords = [], []
    for offset, line in enumerate(body):
        lineno = offset + 3
        fields = line.split()
        if len(fields) < 4:
            raise CoordinateError(f"expected '<symbol> <x> <y> <z>', got {line!r}", lineno)
        sym = normalize_symbol(fields[0])
        if sym not in ATOMIC_NUMBERS:
            raise UnknownElementError(f"unknown element symbol {fields[0]!r}", lineno)
        try:
            xyz = [float(v) for v in fields[1:4]]
        except ValueError:
            raise CoordinateError(f"non-numeric coordinate in {line!r}", lineno) from None
        if not all(np.isfinite(xyz)):
            raise CoordinateError(f"non-finite coordinate in {line!r}", lineno)
        symbols.append(sym)
        coords.append(xyz)
    return Molecule.from_arrays(symbols, np.reshape(coords, (-1, 3)), charge,
                                multiplicity, unit="angstrom")


def serialize_xyz(mol: Molecule, comment: str = "") -> str:
    header = f"charge={mol.charge} mult={mol.multiplicity}"
    if comment:
        header = f"{header} {comment}"
    out = [str(len(mol)), header]
    for atom in mol.atoms:
        x, y, z = atom.position * BOHR_TO_ANGSTROM
        out.append(f"{atom.element:<2} {x:20.12f} {y:20.12f} {z:20.12f}")
    return "\n".join(out) + "\n"


def read_xyz(path, charge=None, multiplicity=None) -> Molecule:
    with open(path) as fh:
        return parse_xyz(fh.read(), charge, multiplicity)


def read_xyz_frames(text: str) -> list[Molecule]:
    """Split a multi-frame XYZ trajectory into molecules."""
    lines = text.splitlines()
    frames, i = [], 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        n = int(lines[i].split()[0])
        frames.append(parse_xyz("\n".join(lines[i:i + n + 2])))
        i += n + 2
    return frames
