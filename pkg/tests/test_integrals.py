import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import erf, gammainc, gamma

from radscf.basis import BasisFunction, assign_basis, get_basis, load_basis, serialize_basis
from radscf.integrals import (boys, build_integral_tables, dump_tables, eri, kinetic,
                              load_tables, nuclear_attraction, overlap)
from radscf.integrals.tables import DUMP_MAGIC
from radscf.molsys import Molecule, read_xyz

from conftest import geometry


def tables_for(name, basis="sto-3g"):
    mol = read_xyz(geometry(name))
    fns = assign_basis(mol, basis)
    return mol, fns, build_integral_tables(fns, mol)


def primitive(alpha, center=(0.0, 0.0, 0.0), powers=(0, 0, 0)):
    from radscf.basis import contracted_coefficients
    return BasisFunction(np.array(center, float), powers, np.array([alpha]),
                         contracted_coefficients([alpha], [1.0], powers), 0)


# --- Boys function -------------------------------------------------------

@pytest.mark.parametrize("n", range(11))
def test_boys_at_zero(n):
    assert boys(n, 0.0) == pytest.approx(1 / (2 * n + 1), abs=1e-14)


def test_boys_closed_form():
    assert boys(0, 10.0) == pytest.approx(0.5 * math.sqrt(math.pi / 10) * erf(math.sqrt(10)),
                                          abs=1e-14)
    assert boys(0, 10.0) == pytest.approx(0.2802474, abs=1e-7)
    assert boys(2, 0.0) == 0.2


def _boys_reference(n, x):
    if x < 1e-10:
        return 1 / (2 * n + 1) - x / (2 * n + 3)
    # F_n(x) = gamma(n+1/2) P(n+1/2, x) / (2 x^(n+1/2))
    return gamma(n + 0.5) * gammainc(n + 0.5, x) / (2 * x ** (n + 0.5))


@given(st.integers(0, 10), st.floats(0, 120))
def test_boys_against_incomplete_gamma(n, x):
    assert abs(boys(n, x) - _boys_reference(n, x)) < 1e-12


@given(st.integers(0, 10), st.floats(0, 60))
def test_boys_against_quadrature(n, x):
    val, _ = quad(lambda t: t ** (2 * n) * math.exp(-x * t * t), 0, 1, epsabs=1e-14)
    assert abs(boys(n, x) - val) < 1e-12


def test_boys_rejects_negative():
    with pytest.raises(ValueError):
        boys(0, -1.0)


# --- closed forms and the H2 oracle -------------------------------------

def test_single_primitive_closed_forms():
    s = primitive(1.0)
    assert overlap(s, s) == pytest.approx(1.0, abs=1e-14)
    assert kinetic(s, s) == pytest.approx(1.5, abs=1e-12)
    # (ss|ss) = 2 sqrt(alpha / pi) for one normalized s Gaussian
    assert eri(s, s, s, s) == pytest.approx(2 / math.sqrt(math.pi), abs=1e-10)
    wide = primitive(0.25)
    assert eri(wide, wide, wide, wide) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    hydrogen = Molecule.from_arrays(["H"], [[0, 0, 0]])
    # <s|-1/r|s> = -2 sqrt(2 alpha / pi)
    assert nuclear_attraction(s, s, hydrogen) == pytest.approx(-2 * math.sqrt(2 / math.pi),
                                                               abs=1e-12)


def test_h2_against_oracle(oracle):
    ref = oracle["h2_sto3g"]
    _, _, t = tables_for("h2")
    assert t.S[0, 1] == pytest.approx(ref["S12"], abs=1e-10)
    assert t.S[0, 1] == pytest.approx(0.6593, abs=2e-4)
    assert t.T[0, 0] == pytest.approx(ref["T11"], abs=1e-10)
    assert t.T[0, 0] == pytest.approx(0.7600, abs=2e-4)
    assert t.V[0, 0] == pytest.approx(ref["V11"], abs=1e-10)
    assert t.V[0, 0] == pytest.approx(-1.8804, abs=5e-4)
    assert t.eri_value(0, 0, 0, 0) == pytest.approx(ref["eri_1111"], abs=1e-10)
    assert t.eri_value(0, 0, 0, 0) == pytest.approx(0.7746, abs=5e-4)


def test_h2_six_unique_eris():
    _, _, t = tables_for("h2")
    assert t.S.shape == (2, 2)
    assert t.eri_canonical.shape == (6,)


def test_hydrogen_atom_tables(oracle):
    _, _, t = tables_for("h")
    assert t.S == pytest.approx(np.ones((1, 1)), abs=1e-12)
    assert t.T[0, 0] == pytest.approx(oracle["h_atom_sto3g"]["T11"], abs=1e-10)


def test_h2o_overlap_spectrum(oracle):
    _, _, t = tables_for("h2o")
    assert t.S.shape == (7, 7)
    w = np.linalg.eigvalsh(t.S)
    assert w.min() > 0
    assert np.allclose(w, oracle["h2o_sto3g"]["overlap_eigenvalues"], atol=1e-10)
    assert t.overlap_condition() == pytest.approx(w[-1] / w[0])


def test_far_apart_s_functions():
    a, b = primitive(1.0), primitive(1.0, (0, 0, 50.0))
    assert abs(overlap(a, b)) < 1e-15


def test_d_shell_against_oracle(oracle):
    ref = oracle["h2o_321g_d"]
    base = get_basis("3-21g")
    extra = serialize_basis(base) + f"element O\nD 1\n{ref['d_exponent']} 1.0\n"
    basis = load_basis(extra)
    mol = read_xyz(geometry("h2o"))
    fns = assign_basis(mol, basis)
    assert len(fns) == ref["nbasis"]
    t = build_integral_tables(fns, mol)
    for name in "STV":
        assert np.abs(getattr(t, name) - np.array(ref[name])).max() < 1e-10
    got = [t.eri_value(*q) for q in ref["eri_index"]]
    assert np.abs(np.array(got) - ref["eri_value"]).max() < 1e-10


# --- structural invariants ------------------------------------------------

@pytest.mark.parametrize("name, basis", [("h2o", "sto-3g"), ("oh", "3-21g"),
                                         ("propanedial_radical", "sto-3g")])
def test_matrix_symmetry_and_bounds(name, basis):
    _, _, t = tables_for(name, basis)
    for m in (t.S, t.T, t.V):
        assert np.abs(m - m.T).max() < 1e-12
    assert np.allclose(np.diag(t.S), 1.0, atol=1e-10)
    assert np.abs(t.S).max() <= 1 + 1e-12
    assert np.linalg.eigvalsh(t.S).min() > 0


def test_eri_eightfold_symmetry():
    _, fns, t = tables_for("h2o")
    g = t.eri_tensor()
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]:
        assert np.abs(g - g.transpose(perm)).max() < 1e-10
    # the standalone kernel agrees with the table
    rng = np.random.default_rng(3)
    for i, j, k, l in rng.integers(0, len(fns), size=(20, 4)):
        assert eri(fns[i], fns[j], fns[k], fns[l]) == pytest.approx(g[i, j, k, l], abs=1e-12)


def test_h2_permutation_check():
    _, fns, _ = tables_for("h2")
    a, b = fns
    ref = eri(a, b, a, b)
    for v in (eri(b, a, a, b), eri(a, b, b, a), eri(b, a, b, a)):
        assert v == pytest.approx(ref, abs=1e-12)


def test_dense_tensor_refused_when_large():
    from radscf.integrals import IntegralTables
    t = IntegralTables(np.eye(101), np.eye(101), np.eye(101), np.zeros(1))
    with pytest.raises(MemoryError):
        t.eri_tensor()


def test_jk_matches_dense_contraction():
    _, fns, t = tables_for("h2o", "3-21g")
    rng = np.random.default_rng(0)
    P = rng.normal(size=(t.nbasis,) * 2)
    P = P + P.T
    Q = rng.normal(size=P.shape)
    Q = Q + Q.T
    g = t.eri_tensor()
    J, K1, K2 = t.jk(P, P, Q)
    assert np.allclose(J, np.einsum("ijkl,kl->ij", g, P), atol=1e-11)
    assert np.allclose(K1, np.einsum("ikjl,kl->ij", g, P), atol=1e-11)
    assert np.allclose(K2, np.einsum("ikjl,kl->ij", g, Q), atol=1e-11)


@given(st.tuples(*[st.floats(-20, 20)] * 3))
def test_translation_invariance(shift):
    mol = read_xyz(geometry("h2o"))
    moved = mol.with_coords(mol.coords + np.array(shift))
    t0 = build_integral_tables(assign_basis(mol, "sto-3g"), mol)
    t1 = build_integral_tables(assign_basis(moved, "sto-3g"), moved)
    for name in "STV":
        assert np.abs(getattr(t0, name) - getattr(t1, name)).max() < 1e-10
    assert np.abs(t0.eri_canonical - t1.eri_canonical).max() < 1e-10


def test_diagonal_nuclear_attraction_negative():
    _, _, t = tables_for("ch4", "3-21g")
    assert (np.diag(t.V) < 0).all()


def test_threads_do_not_change_values():
    mol, fns, t = tables_for("h2o", "3-21g")
    t1 = build_integral_tables(fns, mol, threads=1)
    assert np.array_equal(t.eri_canonical, t1.eri_canonical)


# --- quadrature oracle ------------------------------------------------------

def _poly_gauss(x, c, l, a):
    d = x - c
    return d ** l * math.exp(-a * d * d)


def _d2_poly_gauss(x, c, l, a):
    d = x - c
    val = 4 * a * a * d ** (l + 2) - 2 * a * (2 * l + 1) * d ** l
    if l >= 2:
        val += l * (l - 1) * d ** (l - 2)
    return val * math.exp(-a * d * d)


def _integral_1d(fa, fb, ca, cb, width):
    lo, hi = min(ca, cb) - width, max(ca, cb) + width
    val, _ = quad(lambda x: fa(x) * fb(x), lo, hi, points=sorted({ca, cb}), limit=400,
                  epsabs=1e-12, epsrel=1e-10)
    return val


def quadrature_overlap_kinetic(f: BasisFunction, g: BasisFunction):
    """Contract 1D quadratures over primitive pairs; the integrands separate by axis."""
    s_total = t_total = 0.0
    for a, ca in zip(f.exponents, f.coefficients):
        for b, cb in zip(g.exponents, g.coefficients):
            width = 12 / math.sqrt(min(a, b))
            s1, d1 = [], []
            for k in range(3):
                A, B, la, lb = f.center[k], g.center[k], f.powers[k], g.powers[k]
                s1.append(_integral_1d(lambda x: _poly_gauss(x, A, la, a),
                                       lambda x: _poly_gauss(x, B, lb, b), A, B, width))
                d1.append(_integral_1d(lambda x: _poly_gauss(x, A, la, a),
                                       lambda x: _d2_poly_gauss(x, B, lb, b), A, B, width))
            s_total += ca * cb * s1[0] * s1[1] * s1[2]
            t_total += -0.5 * ca * cb * (d1[0] * s1[1] * s1[2] + s1[0] * d1[1] * s1[2]
                                         + s1[0] * s1[1] * d1[2])
    return s_total, t_total


def _d_basis():
    return load_basis(serialize_basis(get_basis("3-21g")) + "element O\nD 1\n0.8 1.0\n")


@pytest.mark.parametrize("name, basis", [("h2o", "3-21g"), ("ch4", "3-21g"),
                                         ("propanedial_radical", "sto-3g"), ("h2o", "d")])
def test_random_pairs_against_quadrature(name, basis):
    mol = read_xyz(geometry(name))
    fns = assign_basis(mol, _d_basis() if basis == "d" else basis)
    rng = np.random.default_rng(50)
    pairs = rng.integers(0, len(fns), size=(50, 2))
    for i, j in pairs:
        s_ref, t_ref = quadrature_overlap_kinetic(fns[i], fns[j])
        assert overlap(fns[i], fns[j]) == pytest.approx(s_ref, abs=1e-6)
        assert kinetic(fns[i], fns[j]) == pytest.approx(t_ref, abs=1e-6)
        assert kinetic(fns[i], fns[j]) == pytest.approx(kinetic(fns[j], fns[i]), abs=1e-12)


def test_h2_overlap_kinetic_by_quadrature():
    _, fns, _ = tables_for("h2")
    s12, _ = quadrature_overlap_kinetic(fns[0], fns[1])
    _, t11 = quadrature_overlap_kinetic(fns[0], fns[0])
    assert s12 == pytest.approx(0.6593, abs=2e-4)
    assert t11 == pytest.approx(0.7600, abs=2e-4)


# --- binary dump --------------------------------------------------------------

def test_dump_round_trip(tmp_path):
    _, _, t = tables_for("h2o")
    blob = dump_tables(t)
    assert blob.startswith(DUMP_MAGIC)
    n = t.nbasis
    npair = n * (n + 1) // 2
    assert len(blob) == len(DUMP_MAGIC) + 8 + 8 * (3 * n * n + npair * (npair + 1) // 2)
    back = load_tables(blob)
    for name in ("S", "T", "V", "eri_canonical"):
        assert np.array_equal(getattr(back, name), getattr(t, name))


def test_dump_rejects_garbage():
    with pytest.raises(ValueError):
        load_tables(b"not a dump")
    _, _, t = tables_for("h2")
    with pytest.raises(ValueError, match="trailing"):
        load_tables(dump_tables(t) + b"\0" * 8)
