import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from radscf.basis import (BASIS_PATH_ENV, BasisCoverageError, BasisError, assign_basis,
                          get_basis, load_basis, normalization_constant, serialize_basis)
from radscf.integrals import overlap
from radscf.molsys import Molecule, read_xyz

from conftest import FIXTURES, geometry

STO3G_H = """
element H
S 3
  3.42525091  0.15432897
  0.62391373  0.53532814
  0.16885540  0.44463454
"""


def test_sto3g_hydrogen_block():
    b = load_basis(STO3G_H)
    (shell,) = b.for_element("H")
    assert shell.angular_momentum == 0
    assert np.allclose(shell.exponents, [3.42525091, 0.62391373, 0.16885540])
    assert np.allclose(shell.coefficients, [0.15432897, 0.53532814, 0.44463454])


def test_shipped_sto3g_matches_transcription():
    shipped = get_basis("sto-3g").for_element("H")[0]
    ref = load_basis(STO3G_H).for_element("H")[0]
    assert np.allclose(shipped.exponents, ref.exponents, rtol=1e-7)
    assert np.allclose(shipped.coefficients, ref.coefficients, rtol=1e-7)


@pytest.mark.parametrize("text, match", [
    ("", "no shells"),
    ("# only a comment\n", "no shells"),
    ("element C\nP 2\n1.0 0.5\n0.5 0.5\n0.2 0.1\n", "primitives"),
    ("element C\nP 3\n1.0 0.5\n0.5 0.5\n", "primitives"),
    ("element H\nS 1\n-1.0 1.0\n", "non-positive"),
    ("element H\nS 1\n0.0 1.0\n", "non-positive"),
    ("element H\nF 1\n1.0 1.0\n", "angular momentum"),
    ("S 1\n1.0 1.0\n", "before any"),
])
def test_load_errors(text, match):
    with pytest.raises(BasisError, match=match):
        load_basis(text)


@pytest.mark.parametrize("name, basis, count", [
    ("h2", "sto-3g", 2), ("h2o", "sto-3g", 7), ("ch4", "3-21g", 17), ("tempo", "sto-3g", 73),
])
def test_function_counts(name, basis, count):
    assert len(assign_basis(read_xyz(geometry(name)), basis)) == count


def test_assignment_order():
    fns = assign_basis(read_xyz(geometry("h2o")), "sto-3g")
    assert [f.atom_index for f in fns] == [0, 0, 0, 0, 0, 1, 2]
    assert [f.powers for f in fns[2:5]] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_d_shell_component_order():
    text = STO3G_H + "element O\nD 1\n0.8 1.0\n"
    mol = Molecule.from_arrays(["O"], [[0, 0, 0]], multiplicity=3)
    fns = assign_basis(mol, load_basis(text))
    assert [f.powers for f in fns] == [(2, 0, 0), (0, 2, 0), (0, 0, 2),
                                       (1, 1, 0), (1, 0, 1), (0, 1, 1)]


def test_coverage_error():
    mol = Molecule.from_arrays(["O", "H"], [[0, 0, 0], [0, 0, 1.8]], multiplicity=2)
    with pytest.raises(BasisCoverageError, match="O"):
        assign_basis(mol, load_basis(STO3G_H))


def test_unknown_basis_name():
    with pytest.raises(BasisError, match="unknown basis"):
        get_basis("6-311g**")


def test_normalization_constant_s():
    assert normalization_constant(1.0, (0, 0, 0)) == pytest.approx((2 / math.pi) ** 0.75,
                                                                   abs=1e-15)
    assert normalization_constant(1.0, (0, 0, 0)) == pytest.approx(0.712705, abs=1e-6)


def _self_overlap_quadrature(alpha, powers):
    # the integrand factorizes, so the 3D integral is a product of 1D ones
    n = normalization_constant(alpha, powers)
    total = n * n
    for l in powers:
        val, _ = quad(lambda x: x ** (2 * l) * math.exp(-2 * alpha * x * x), -np.inf, np.inf,
                      epsabs=0, epsrel=1e-13, limit=200)
        total *= val
    return total


@pytest.mark.parametrize("alpha, powers", [(1.0, (1, 0, 0)), (0.5, (1, 1, 0)),
                                           (0.5, (2, 0, 0)), (2.3, (0, 0, 1))])
def test_normalization_by_quadrature(alpha, powers):
    assert _self_overlap_quadrature(alpha, powers) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", FIXTURES)
def test_assigned_functions_unit_self_overlap(name):
    for f in assign_basis(read_xyz(geometry(name)), "sto-3g"):
        assert overlap(f, f) == pytest.approx(1.0, abs=1e-10)


def test_basis_function_evaluation_matches_quadrature():
    f = assign_basis(read_xyz(geometry("h2o")), "3-21g")[3]
    # sample on a grid; the discrete norm approximates the self-overlap
    g = np.linspace(-8, 8, 81)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3) + f.center
    h = g[1] - g[0]
    assert np.sum(f(pts) ** 2) * h ** 3 == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("name", ["sto-3g", "3-21g"])
def test_serialize_round_trip(name):
    b = get_basis(name)
    back = load_basis(serialize_basis(b), name)
    assert back.shells == b.shells


@given(st.lists(st.tuples(st.sampled_from("SPD"),
                          st.lists(st.tuples(st.floats(1e-3, 1e4), st.floats(-5, 5)),
                                   min_size=1, max_size=4)),
                min_size=1, max_size=5))
def test_serialize_round_trip_random(shells):
    lines = ["element C"]
    for letter, prims in shells:
        lines.append(f"{letter} {len(prims)}")
        lines.extend(f"{e!r} {c!r}" for e, c in prims)
    b = load_basis("\n".join(lines))
    assert load_basis(serialize_basis(b)).shells == b.shells


def test_basis_path_override(tmp_path, monkeypatch):
    (tmp_path / "mini").write_text(STO3G_H)
    monkeypatch.setenv(BASIS_PATH_ENV, str(tmp_path))
    b = get_basis("MINI")
    assert "H" in b and "C" not in b
