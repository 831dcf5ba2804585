"""Contracted Cartesian Gaussian basis sets."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from math import pi, sqrt
from pathlib import Path

import numpy as np

from .molsys import Molecule, normalize_symbol

ANGULAR_LETTERS = "SPD"
L_MAX = 2

# Cartesian component order within a shell.
CARTESIAN_POWERS = {
    0: ((0, 0, 0),),
    1: ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    2: ((2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)),
}

BASIS_PATH_ENV = "RADSCF_BASIS_PATH"


class BasisError(ValueError):
    pass


class BasisCoverageError(BasisError):
    pass


@dataclass(frozen=True)
class Primitive:
    exponent: float
    coefficient: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise BasisError(f"non-positive exponent {self.exponent}")


@dataclass(frozen=True)
class Shell:
    element: str
    angular_momentum: int
    primitives: tuple[Primitive, ...]

    def __post_init__(self):
        if not 0 <= self.angular_momentum <= L_MAX:
            raise BasisError(f"angular momentum {self.angular_momentum} not supported")
        if not self.primitives:
            raise BasisError("shell has no primitives")

    @property
    def exponents(self) -> np.ndarray:
        return np.array([p.exponent for p in self.primitives])

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([p.coefficient for p in self.primitives])


@dataclass
class BasisSet:
    name: str
    shells: dict[str, list[Shell]] = field(default_factory=dict)

    def __contains__(self, element):
        return normalize_symbol(element) in self.shells

    def for_element(self, element: str) -> list[Shell]:
        return self.shells[normalize_symbol(element)]


@dataclass(frozen=True, eq=False)
class BasisFunction:
    """One contracted Cartesian Gaussian, normalized to unit self-overlap.

    ``coefficients`` already include primitive normalization.
    """

    center: np.ndarray
    powers: tuple[int, int, int]
    exponents: np.ndarray
    coefficients: np.ndarray
    atom_index: int
    shell_index: int = 0

    @property
    def l(self) -> int:
        return sum(self.powers)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (m, 3) array of points in bohr."""
        d = np.asarray(points, dtype=float) - self.center
        r2 = np.einsum("ij,ij->i", d, d)
        ang = d[:, 0] ** self.powers[0] * d[:, 1] ** self.powers[1] * d[:, 2] ** self.powers[2]
        radial = np.exp(-np.outer(r2, self.exponents)) @ self.coefficients
        return ang * radial


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def normalization_constant(exponent: float, powers) -> float:
    """Norm of the primitive x^lx y^ly z^lz exp(-a r^2)."""
    lx, ly, lz = powers
    l = lx + ly + lz
    n2 = (2 * exponent / pi) ** 1.5 * (4 * exponent) ** l / (
        double_factorial(2 * lx - 1) * double_factorial(2 * ly - 1) * double_factorial(2 * lz - 1)
    )
    return sqrt(n2)


def _primitive_overlap_1d(a: float, b: float, l: int) -> float:
    # integral of x^(2l) exp(-(a+b) x^2) over the real line
    p = a + b
    return double_factorial(2 * l - 1) / (2 * p) ** l * sqrt(pi / p)


def contracted_coefficients(exponents, coefficients, powers) -> np.ndarray:
    """Fold primitive norms and overall contraction norm into the weights."""
    exps = np.asarray(exponents, dtype=float)
    coefs = np.asarray(coefficients, dtype=float)
    folded = coefs * np.array([normalization_constant(a, powers) for a in exps])
    self_overlap = 0.0
    for i, a in enumerate(exps):
        for j, b in enumerate(exps):
            s = 1.0
            for l in powers:
                s *= _primitive_overlap_1d(a, b, l)
            self_overlap += folded[i] * folded[j] * s
    return folded / sqrt(self_overlap)


def load_basis(text: str, name: str = "custom") -> BasisSet:
    """Parse the plain-text basis format (``element`` / ``L nprim`` blocks)."""
    basis = BasisSet(name)
    element = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))

    i = 0
    while i < len(rows):
        lineno, fields = rows[i]
        head = fields[0].lower()
        if head == "element":
            if len(fields) != 2:
                raise BasisError(f"line {lineno}: expected 'element <symbol>'")
            element = normalize_symbol(fields[1])
            basis.shells.setdefault(element, [])
            i += 1
            continue
        if element is None:
            raise BasisError(f"line {lineno}: shell before any 'element' line")
        letter = fields[0].upper()
        if len(fields) != 2 or letter not in ANGULAR_LETTERS or len(letter) != 1:
            raise BasisError(f"line {lineno}: unknown angular momentum {fields[0]!r}")
        try:
            nprim = int(fields[1])
        except ValueError:
            raise BasisError(f"line {lineno}: bad primitive count {fields[1]!r}") from None
        prims = []
        for k in range(1, nprim + 1):
            if i + k >= len(rows) or len(rows[i + k][1]) != 2:
                raise BasisError(
                    f"line {lineno}: shell declares {nprim} primitives, found {k - 1}"
                )
            plineno, (e, c) = rows[i + k]
            try:
                prims.append(Primitive(float(e), float(c)))
            except ValueError as exc:
                raise BasisError(f"line {plineno}: {exc}") from None
        # a trailing numeric pair means the count was too small
        nxt = i + nprim + 1
        if nxt < len(rows) and len(rows[nxt][1]) == 2 and _is_number(rows[nxt][1][0]):
            raise BasisError(f"line {lineno}: shell declares {nprim} primitives, found more")
        basis.shells[element].append(Shell(element, ANGULAR_LETTERS.index(letter), tuple(prims)))
        i = nxt

    if not any(basis.shells.values()):
        raise BasisError("no shells")
    return basis


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def serialize_basis(basis: BasisSet) -> str:
    out = [f"# {basis.name}"]
    for element, shells in basis.shells.items():
        out.append(f"element {element}")
        for sh in shells:
            out.append(f"{ANGULAR_LETTERS[sh.angular_momentum]} {len(sh.primitives)}")
            for p in sh.primitives:
                out.append(f"  {p.exponent!r}  {p.coefficient!r}")
    return "\n".join(out) + "\n"


def _search_dirs() -> list[Path]:
    dirs = [Path(p) for p in os.environ.get(BASIS_PATH_ENV, "").split(os.pathsep) if p]
    return dirs


def available_basis_sets() -> list[str]:
    names = {p.name for p in resources.files("radscf.data.basis").iterdir()
             if p.is_file() and not p.name.startswith(("_", "."))}
    for d in _search_dirs():
        if d.is_dir():
            names.update(p.name for p in d.iterdir() if p.is_file())
    return sorted(names)


def get_basis(name: str) -> BasisSet:
    """Load a named basis set; ``RADSCF_BASIS_PATH`` directories win over built-ins."""
    fname = name.lower()
    for d in _search_dirs():
        path = d / fname
        if path.is_file():
            return load_basis(path.read_text(), fname)
    res = resources.files("radscf.data.basis") / fname
    if not res.is_file():
        raise BasisError(f"unknown basis set {name!r}; available: {available_basis_sets()}")
    return load_basis(res.read_text(), fname)


def assign_basis(mol: Molecule, basis: BasisSet | str) -> list[BasisFunction]:
    """Place normalized basis functions on every atom, in atom then shell order."""
    if isinstance(basis, str):
        basis = get_basis(basis)
    missing = sorted({s for s in mol.symbols if s not in basis})
    if missing:
        raise BasisCoverageError(f"basis {basis.name!r} has no shells for {', '.join(missing)}")
    functions = []
    shell_index = 0
    for ia, atom in enumerate(mol.atoms):
        for shell in basis.for_element(atom.element):
            exps = shell.exponents
            for powers in CARTESIAN_POWERS[shell.angular_momentum]:
                coefs = contracted_coefficients(exps, shell.coefficients, powers)
                functions.append(
                    BasisFunction(atom.position.copy(), powers, exps.copy(), coefs, ia, shell_index)
                )
            shell_index += 1
    return functions


def basis_owner(functions: list[BasisFunction]) -> np.ndarray:
    """Atom index of every basis function."""
    return np.array([f.atom_index for f in functions], dtype=int)
