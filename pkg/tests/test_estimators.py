import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from radscf.estimators import (HartreeFock, MullikenAnalysis, RadicalScreener, check_molecule,
                               check_molecules)
from radscf.molsys import MoleculeError, read_xyz

from conftest import fitted, geometry


def test_check_molecule_accepts_path_text_and_object():
    path = geometry("h2")
    a = check_molecule(path)
    b = check_molecule(str(path))
    c = check_molecule(path.read_text())
    d = check_molecule(a)
    for m in (b, c, d):
        assert np.array_equal(m.coords, a.coords)
    assert check_molecule(a, multiplicity=3).multiplicity == 3


def test_check_molecule_rejects_bad_input():
    with pytest.raises(TypeError):
        check_molecule(3.0)
    with pytest.raises(MoleculeError):
        check_molecule(geometry("h"), multiplicity=1)


def test_check_molecules_wraps_single():
    assert len(check_molecules(geometry("h2"))) == 1
    assert len(check_molecules([geometry("h2"), geometry("h")])) == 2


def test_params_and_clone():
    hf = HartreeFock(basis="3-21g", method="rhf", level_shift=0.1)
    params = hf.get_params()
    assert params["basis"] == "3-21g" and params["level_shift"] == 0.1
    twin = clone(hf)
    assert twin.get_params() == params
    assert not hasattr(twin, "result_")
    hf.set_params(diis_depth=4)
    assert hf.diis_depth == 4


def test_fit_sets_trailing_attributes(oracle):
    hf = HartreeFock(method="rhf").fit(geometry("h2"))
    assert hf.converged_ and hf.n_iter_ > 0
    assert hf.energy_ == pytest.approx(oracle["h2_sto3g"]["E_total"], abs=1e-9)


def test_predict_batch(oracle):
    e = HartreeFock().predict([geometry("h2"), geometry("h")])
    assert e == pytest.approx([oracle["h2_sto3g"]["E_total"],
                               oracle["h_atom_sto3g"]["E_total"]], abs=1e-8)


def test_invalid_settings_raise_on_fit():
    with pytest.raises(ValueError):
        HartreeFock(energy_tol=-1).fit(geometry("h2"))
    with pytest.raises(ValueError):
        HartreeFock(method="rohf").fit(geometry("h2"))


def test_mulliken_transform():
    hf = fitted("oh", method="uhf")
    (spin,) = MullikenAnalysis().fit().transform(hf)
    assert spin.sum() == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(NotFittedError):
        MullikenAnalysis().transform([HartreeFock()])


def test_screener_predict_on_fitted_and_supplied():
    hf = fitted("propanedial_radical")
    mol = read_xyz(geometry("propanedial_radical"))
    spins = np.zeros(len(mol))
    spins[3] = spins[4] = 0.5
    supplied = (mol, spins, {(0, 3): 0.6, (2, 4): 0.6})
    screener = RadicalScreener()
    # the bare head group has no chain or anchor, so the overall verdict fails
    assert list(screener.fit().predict([hf, supplied])) == [False, False]
    for rep in screener.decision_reports([hf, supplied]):
        assert rep.criterion_3_localization.passed and rep.criterion_4_stability.passed
    strict = clone(screener).set_params(bond_order_min=0.9)
    for rep in strict.decision_reports([hf, supplied]):
        assert not rep.criterion_4_stability.passed


def test_screener_flags_unconverged():
    hf = HartreeFock(max_iterations=2).fit(geometry("oh"))
    (rep,) = RadicalScreener().decision_reports(hf)
    assert rep.reason == "scf-unconverged" and not rep.overall
