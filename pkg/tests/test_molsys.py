import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from radscf.molsys import (ANGSTROM_TO_BOHR, Atom, CoordinateError, CountLineError, Molecule,
                           MoleculeError, UnknownElementError, electron_counts, nuclear_repulsion,
                           parse_xyz, perceive_bonds, read_xyz, read_xyz_frames, serialize_xyz)

from conftest import geometry


def test_h2_unit_conversion():
    mol = parse_xyz("2\ncharge=0 mult=1\nH 0 0 0\nH 0 0 0.74")
    assert len(mol) == 2
    assert mol.charge == 0 and mol.multiplicity == 1
    assert np.linalg.norm(mol.coords[1] - mol.coords[0]) == pytest.approx(0.74 * 1.8897259886,
                                                                          abs=1e-12)
    assert ANGSTROM_TO_BOHR == 1.8897259886


def test_odd_electron_default_is_doublet():
    mol = parse_xyz("1\n\nH 0 0 0")
    assert mol.multiplicity == 2
    assert electron_counts(mol) == (1, 0)


def test_explicit_singlet_hydrogen_fails_parity():
    mol = parse_xyz("1\nmult=1\nH 0 0 0")
    with pytest.raises(MoleculeError, match="incompatible"):
        mol.validate()


def test_flags_override_comment_metadata():
    mol = parse_xyz("2\ncharge=0 mult=3\nO 0 0 0\nH 0 0 0.97", charge=0, multiplicity=2)
    assert mol.multiplicity == 2


@pytest.mark.parametrize("text, exc, lineno", [
    ("x\n\nH 0 0 0", CountLineError, 1),
    ("2\n\nH 0 0 0", CountLineError, 1),
    ("1\n\nXx 0 0 0", UnknownElementError, 3),
    ("2\n\nH 0 0 0\nH 0 zero 0", CoordinateError, 4),
    ("1\n\nH 0 0", CoordinateError, 3),
    ("1\n\nH 0 0 nan", CoordinateError, 3),
])
def test_parse_errors_name_line(text, exc, lineno):
    with pytest.raises(exc) as info:
        parse_xyz(text)
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)


def test_parse_errors_are_distinct():
    assert len({CountLineError, UnknownElementError, CoordinateError}) == 3
    assert not issubclass(CountLineError, UnknownElementError)


def test_tempo_fixture_formula():
    mol = read_xyz(geometry("tempo"))
    assert mol.formula == "C9H18NO"
    assert len(mol) == 29
    assert mol.multiplicity == 2


@pytest.mark.parametrize("name, counts", [("h2", (1, 1)), ("oh", (5, 4)), ("tempo", (44, 43))])
def test_electron_counts(name, counts):
    mol = read_xyz(geometry(name))
    n_a, n_b = electron_counts(mol)
    assert (n_a, n_b) == counts
    assert n_a - n_b == mol.multiplicity - 1
    assert n_a + n_b == mol.n_electrons


def test_nuclear_repulsion_examples():
    h2 = Molecule.from_arrays(["H", "H"], [[0, 0, 0], [0, 0, 1.4]])
    assert nuclear_repulsion(h2) == pytest.approx(1 / 1.4, abs=1e-12)
    assert nuclear_repulsion(Molecule.from_arrays(["He"], [[0, 0, 0]])) == 0.0
    heh = Molecule.from_arrays(["He", "H"], [[0, 0, 0], [0, 0, 1.4632]], charge=1)
    assert nuclear_repulsion(heh) == pytest.approx(1.36686, abs=1e-5)


def test_coincident_nuclei_rejected():
    mol = Molecule.from_arrays(["H", "H"], [[0, 0, 0], [0, 0, 1e-8]])
    with pytest.raises(MoleculeError, match="coincid"):
        nuclear_repulsion(mol)


def test_invariants_enforced():
    with pytest.raises(MoleculeError):
        Molecule.from_arrays(["H"], [[0, 0, 0]], charge=1).validate()
    with pytest.raises(MoleculeError):
        Atom("H", np.array([0.0, np.inf, 0.0]))
    with pytest.raises(MoleculeError):
        Molecule.from_arrays(["H", "H"], [[0, 0, 0], [0, 0, 1.4]], multiplicity=0).validate()


def test_bond_perception_examples():
    h2 = parse_xyz("2\n\nH 0 0 0\nH 0 0 0.74")
    assert list(perceive_bonds(h2).edges) == [(0, 1)]
    he2 = parse_xyz("2\n\nHe 0 0 0\nHe 0 0 5")
    assert len(perceive_bonds(he2)) == 0


def test_tempo_connectivity():
    mol = read_xyz(geometry("tempo"))
    g = perceive_bonds(mol)
    sym = mol.symbols
    n = sym.index("N")
    no_edges = [e for e in g.edges if {sym[e[0]], sym[e[1]]} == {"N", "O"}]
    assert len(no_edges) == 1
    # six-membered ring: N plus five carbons, found by walking heavy atoms
    heavy = {i for i, s in enumerate(sym) if s != "H"}
    ring_c = [j for j in g.neighbors(n) if sym[j] == "C"]
    assert len(ring_c) == 2
    start, goal = ring_c
    paths = [[start]]
    ring = None
    while paths and ring is None:
        path = paths.pop(0)
        for j in g.neighbors(path[-1]):
            if j == goal and len(path) >= 2:
                ring = path + [j]
            elif j in heavy and j not in path and j != n and sym[j] == "C":
                paths.append(path + [j])
    assert ring is not None and len(ring) == 5


def test_multi_frame_reader():
    text = serialize_xyz(read_xyz(geometry("h2o"))) + serialize_xyz(read_xyz(geometry("h2")))
    frames = read_xyz_frames(text)
    assert [len(f) for f in frames] == [3, 2]


coords = st.lists(st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3), min_size=2, max_size=6)


def _spread(points):
    # keep atoms apart so the geometry stays valid
    return np.array(points) + np.arange(len(points))[:, None] * 2.5


@given(coords, st.sampled_from(["H", "C", "N", "O"]))
def test_xyz_round_trip(points, element):
    xyz = _spread(points)
    mol = Molecule.from_arrays([element] * len(xyz), xyz, multiplicity=None)
    back = parse_xyz(serialize_xyz(mol))
    assert np.abs(back.coords - mol.coords).max() < 1e-10
    assert back.symbols == mol.symbols
    assert (back.charge, back.multiplicity) == (mol.charge, mol.multiplicity)


@given(coords, st.integers(0, 2**32 - 1), st.tuples(*[st.floats(-10, 10)] * 3))
def test_nuclear_repulsion_rigid_invariance(points, seed, shift):
    xyz = _spread(points)
    mol = Molecule.from_arrays(["C"] * len(xyz), xyz)
    rot = Rotation.random(random_state=seed).as_matrix()
    moved = mol.with_coords(xyz @ rot.T + np.array(shift))
    assert abs(nuclear_repulsion(moved) - nuclear_repulsion(mol)) < 1e-12 * max(
        1.0, nuclear_repulsion(mol))


@given(st.permutations(list(range(8))))
def test_bond_perception_permutation(perm):
    mol = read_xyz(geometry("propanedial_radical"))
    shuffled = Molecule.from_arrays([mol.symbols[i] for i in perm], mol.coords[list(perm)],
                                    mol.charge, mol.multiplicity)
    relabel = {new: old for new, old in enumerate(perm)}
    edges = {tuple(sorted((relabel[a], relabel[b]))) for a, b in perceive_bonds(shuffled).edges}
    assert edges == set(perceive_bonds(mol).edges)
