"""scikit-learn style wrappers around the SCF, analysis and screening functions.

Hyperparameters live in ``__init__`` so ``get_params``/``set_params``,
``clone`` and grid searches work; fitted state carries a trailing underscore.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import BondOrderTable, analyze
from .basis import assign_basis, get_basis
from .integrals import build_integral_tables
from .molsys import Molecule, parse_xyz, perceive_bonds
from .scf import SCFConfig, scf_uhf
from .screener import ScreeningThresholds, screen


def check_molecule(X, charge=None, multiplicity=None) -> Molecule:
    """Accept a Molecule, XYZ text or an XYZ file path; return a validated Molecule."""
    if isinstance(X, Molecule):
        mol = X
        if charge is not None or multiplicity is not None:
            mol = Molecule(mol.atoms,
                           mol.charge if charge is None else charge,
                           mol.multiplicity if multiplicity is None else multiplicity)
    elif isinstance(X, (str, os.PathLike)):
        text = str(X)
        if "\n" not in text and Path(text).is_file():
            text = Path(text).read_text()
        mol = parse_xyz(text, charge, multiplicity)
    else:
        raise TypeError(f"expected Molecule, XYZ text or path, got {type(X).__name__}")
    return mol.validate()


def check_molecules(X) -> list[Molecule]:
    if isinstance(X, (Molecule, str, os.PathLike)):
        X = [X]
    return [check_molecule(x) for x in X]


class HartreeFock(BaseEstimator):
    """Hartree-Fock SCF as an estimator: ``fit`` one molecule, ``predict`` energies."""

    def __init__(self, basis="sto-3g", method="uhf", max_iterations=128, energy_tol=1e-9,
                 density_rms_tol=1e-8, diis_depth=8, level_shift=0.0, guess_mix_degrees=30.0,
                 mirror_occupation=None, mirror_axis="z", threads=None):
        self.basis = basis
        self.method = method
        self.max_iterations = max_iterations
        self.energy_tol = energy_tol
        self.density_rms_tol = density_rms_tol
        self.diis_depth = diis_depth
        self.level_shift = level_shift
        self.guess_mix_degrees = guess_mix_degrees
        self.mirror_occupation = mirror_occupation
        self.mirror_axis = mirror_axis
        self.threads = threads

    def _config(self) -> SCFConfig:
        return SCFConfig(max_iterations=self.max_iterations, energy_tol=self.energy_tol,
                         density_rms_tol=self.density_rms_tol, diis_depth=self.diis_depth,
                         level_shift=self.level_shift, guess_mix_degrees=self.guess_mix_degrees,
                         mirror_occupation=self.mirror_occupation, mirror_axis=self.mirror_axis)

    def fit(self, X, y=None, guess_density=None):
        mol = check_molecule(X)
        basis = get_basis(self.basis) if isinstance(self.basis, str) else self.basis
        self.molecule_ = mol
        self.basis_functions_ = assign_basis(mol, basis)
        self.tables_ = build_integral_tables(self.basis_functions_, mol, threads=self.threads)
        self.result_ = scf_uhf(mol, self.basis_functions_, self.tables_, self._config(),
                               method=self.method, guess_density=guess_density)
        self.energy_ = self.result_.E_total
        self.converged_ = self.result_.converged
        self.n_iter_ = self.result_.iterations
        return self

    def predict(self, X) -> np.ndarray:
        """Total energies (hartree) of each molecule under the current settings."""
        from sklearn.base import clone
        return np.array([clone(self).fit(m).energy_ for m in check_molecules(X)])


class MullikenAnalysis(TransformerMixin, BaseEstimator):
    """Turns fitted :class:`HartreeFock` estimators into per-atom spin densities."""

    def __init__(self, extra_pairs=()):
        self.extra_pairs = extra_pairs

    def fit(self, X=None, y=None):
        return self

    def analyze_one(self, hf: HartreeFock):
        check_is_fitted(hf, "result_")
        return analyze(hf.result_, hf.tables_, hf.molecule_, hf.basis_functions_,
                       self.extra_pairs)

    def transform(self, X):
        """List of per-atom spin-density arrays, one per fitted estimator."""
        if isinstance(X, HartreeFock):
            X = [X]
        return [self.analyze_one(hf)[0].spin for hf in X]


class RadicalScreener(BaseEstimator):
    """Four-criterion suitability screen; ``predict`` returns overall verdicts.

    Each sample is either a fitted :class:`HartreeFock` or a tuple
    ``(molecule, spins, bond_orders)`` with externally supplied values.
    """

    def __init__(self, localization_top_k=2, localization_fraction=0.7, bond_order_min=0.3,
                 min_chain_length=8, anchor_patterns=("carboxyl",)):
        self.localization_top_k = localization_top_k
        self.localization_fraction = localization_fraction
        self.bond_order_min = bond_order_min
        self.min_chain_length = min_chain_length
        self.anchor_patterns = anchor_patterns

    @property
    def thresholds(self) -> ScreeningThresholds:
        return ScreeningThresholds(self.localization_top_k, self.localization_fraction,
                                   self.bond_order_min, self.min_chain_length,
                                   tuple(self.anchor_patterns))

    def fit(self, X=None, y=None):
        self.thresholds_ = self.thresholds
        return self

    def screen_one(self, sample):
        th = self.thresholds
        if isinstance(sample, HartreeFock):
            check_is_fitted(sample, "result_")
            mol = sample.molecule_
            if not sample.converged_:
                return screen(mol, thresholds=th, scf_converged=False)
            pops, bonds = analyze(sample.result_, sample.tables_, mol, sample.basis_functions_)
            return screen(mol, pops.spin, bonds, th, perceive_bonds(mol))
        mol, spins, bonds = sample
        mol = check_molecule(mol)
        if not isinstance(bonds, BondOrderTable):
            table = BondOrderTable()
            for pair, v in dict(bonds).items():
                table[pair] = v
            bonds = table
        return screen(mol, spins, bonds, th)

    def decision_reports(self, X):
        if isinstance(X, (HartreeFock, tuple)):
            X = [X]
        return [self.screen_one(s) for s in X]

    def predict(self, X) -> np.ndarray:
        return np.array([r.overall for r in self.decision_reports(X)])
