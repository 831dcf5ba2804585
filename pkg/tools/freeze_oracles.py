"""Freeze reference values from PySCF into tests/data/oracle_values.json.

PySCF is used only here, as an independent implementation; the test suite
reads the frozen JSON and never imports it. All runs use Cartesian basis
functions (cart=True). Mulliken quantities are condensed with plain numpy
from PySCF's overlap and density matrices.

    python3 tools/freeze_oracles.py            # everything except TEMPO
    python3 tools/freeze_oracles.py --tempo    # also the 29-atom TEMPO run
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
from pyscf import gto, scf

from radscf.molsys import perceive_bonds, read_xyz

ROOT = Path(__file__).resolve().parents[1]
GEOM = ROOT / "src" / "radscf" / "data" / "geometries"
OUT = ROOT / "tests" / "data" / "oracle_values.json"

# d basis for the l = 2 check: 3-21G on H, 3-21G plus one d shell on O
D_EXPONENT = 0.8


def pyscf_mol(name, basis="sto-3g", **kw):
    mol = read_xyz(GEOM / f"{name}.xyz")
    pm = gto.M(atom=list(zip(mol.symbols, mol.coords)), unit="bohr", basis=basis, cart=True,
               charge=mol.charge, spin=mol.multiplicity - 1, verbose=0, **kw)
    return mol, pm


def converge(mf):
    mf.conv_tol = 1e-12
    mf.conv_tol_grad = 1e-8
    mf.max_cycle = 200
    mf.kernel()
    assert mf.converged, mf
    return mf


def condensed(pm, mf):
    S = pm.intor("int1e_ovlp")
    dm = mf.make_rdm1()
    if dm.ndim == 2:
        dm = np.array([dm / 2, dm / 2])
    owner = np.array([int(lbl.split()[0]) for lbl in pm.ao_labels()])
    P = dm[0] + dm[1]
    pop = np.bincount(owner, weights=np.einsum("ij,ji->i", P, S), minlength=pm.natm)
    spin = np.bincount(owner, weights=np.einsum("ij,ji->i", dm[0] - dm[1], S),
                       minlength=pm.natm)

    def overlap_pop(a, b):
        return float(2 * np.sum((P * S)[np.ix_(owner == a, owner == b)]))

    return pop, spin, overlap_pop


def small_systems(out):
    mol, pm = pyscf_mol("h2")
    mf = converge(scf.RHF(pm))
    S, T, V = pm.intor("int1e_ovlp"), pm.intor("int1e_kin"), pm.intor("int1e_nuc")
    eri = pm.intor("int2e")
    _, _, ov = condensed(pm, mf)
    out["h2_sto3g"] = {
        "E_total": mf.e_tot, "S12": S[0, 1], "T11": T[0, 0], "V11": V[0, 0],
        "eri_1111": eri[0, 0, 0, 0], "eps": mf.mo_energy.tolist(),
        "P_alpha_11": mf.make_rdm1()[0, 0] / 2, "overlap_population": ov(0, 1),
    }
    mol, pm = pyscf_mol("h")
    mf = converge(scf.UHF(pm))
    out["h_atom_sto3g"] = {"E_total": mf.e_tot, "T11": pm.intor("int1e_kin")[0, 0]}

    mol, pm = pyscf_mol("heh+")
    out["heh+_sto3g"] = {"E_total": converge(scf.RHF(pm)).e_tot}

    mol, pm = pyscf_mol("h2o")
    mf = converge(scf.RHF(pm))
    pop, _, _ = condensed(pm, mf)
    out["h2o_sto3g"] = {"E_total": mf.e_tot, "E_uhf": converge(scf.UHF(pm)).e_tot,
                        "mulliken_population": pop.tolist(),
                        "overlap_eigenvalues": np.linalg.eigvalsh(pm.intor("int1e_ovlp")).tolist()}
    mol, pm = pyscf_mol("h2o", "3-21g")
    out["h2o_321g"] = {"E_total": converge(scf.RHF(pm)).e_tot}

    mol, pm = pyscf_mol("oh")
    mf = converge(scf.UHF(pm))
    _, spin, _ = condensed(pm, mf)
    out["oh_sto3g"] = {"E_total": mf.e_tot, "s_squared": mf.spin_square()[0],
                       "spin": spin.tolist()}

    mol, pm = pyscf_mol("ch4", "3-21g")
    out["ch4_321g"] = {"E_total": converge(scf.RHF(pm)).e_tot, "nbasis": pm.nao}

    mol, pm = pyscf_mol("acetic_acid")
    out["acetic_acid_sto3g"] = {"E_total": converge(scf.RHF(pm)).e_tot}


def diketone(out):
    # Cs symmetry with 3+3 electrons in a'' selects the oxygen-centred state
    mol, pm = pyscf_mol("propanedial_radical", symmetry="Cs")
    sigma = scf.UHF(pm)
    sigma.irrep_nelec = {'A"': (3, 3)}
    converge(sigma)
    pi = scf.UHF(pm)
    pi.irrep_nelec = {'A"': (3, 2)}
    converge(pi)
    plain = converge(scf.UHF(pyscf_mol("propanedial_radical")[1]))
    _, spin, ov = condensed(pm, sigma)
    _, spin_pi, _ = condensed(pm, pi)
    out["propanedial_radical_sto3g"] = {
        "E_sigma": sigma.e_tot, "E_pi": pi.e_tot, "E_unconstrained_pyscf": plain.e_tot,
        "s_squared_sigma": sigma.spin_square()[0], "spin_sigma": spin.tolist(),
        "spin_pi": spin_pi.tolist(), "overlap_CO": [ov(0, 3), ov(2, 4)],
    }


def tempo(out):
    mol, pm = pyscf_mol("tempo")
    mf = converge(scf.UHF(pm))
    _, spin, ov = condensed(pm, mf)
    n = mol.symbols.index("N")
    graph = perceive_bonds(mol)
    out["tempo_sto3g"] = {
        "E_total": mf.e_tot, "s_squared": mf.spin_square()[0], "spin": spin.tolist(),
        "N": n, "O": mol.symbols.index("O"),
        "overlap_N": {str(j): ov(n, j) for j in graph.neighbors(n)},
    }


def d_shell(out):
    mol = read_xyz(GEOM / "h2o.xyz")
    basis = {"H": "3-21g", "O": gto.basis.load("3-21g", "O") + [[2, [D_EXPONENT, 1.0]]]}
    pm = gto.M(atom=list(zip(mol.symbols, mol.coords)), unit="bohr", basis=basis, cart=True,
               verbose=0)
    # PySCF orders d as xx,xy,xz,yy,yz,zz and normalizes only the radial part;
    # reorder to xx,yy,zz,xy,xz,yz and rescale to unit self-overlap
    n = pm.nao
    order = list(range(n))
    labels = pm.ao_labels()
    d_idx = [i for i, lbl in enumerate(labels) if "d" in lbl.split()[2]]
    order[d_idx[0]:d_idx[0] + 6] = [d_idx[k] for k in (0, 3, 5, 1, 2, 4)]
    S = pm.intor("int1e_ovlp")
    scale = 1 / np.sqrt(np.diag(S))
    def fix(M):
        return (M * np.outer(scale, scale))[np.ix_(order, order)]
    eri = pm.intor("int2e") * np.einsum("i,j,k,l->ijkl", scale, scale, scale, scale)
    eri = eri[np.ix_(order, order, order, order)]
    rng = np.random.default_rng(11)
    idx = rng.integers(0, n, size=(60, 4))
    idx[:10, :] = d_idx[0] + rng.integers(0, 6, size=(10, 4))
    mf = converge(scf.RHF(pm))
    out["h2o_321g_d"] = {
        "d_exponent": D_EXPONENT, "nbasis": n,
        "S": fix(S).tolist(), "T": fix(pm.intor("int1e_kin")).tolist(),
        "V": fix(pm.intor("int1e_nuc")).tolist(),
        "eri_index": idx.tolist(), "eri_value": [float(eri[tuple(q)]) for q in idx],
        "E_total": mf.e_tot,
    }


def h2_scan(out):
    mol, _ = pyscf_mol("h2")
    grid = np.round(np.arange(1.0, 2.0005, 0.001), 3)
    energies = []
    dm = None
    for r in grid:
        pm = gto.M(atom=[("H", (0, 0, 0)), ("H", (0, 0, r))], unit="bohr", basis="sto-3g",
                   cart=True, verbose=0)
        mf = scf.RHF(pm)
        mf.conv_tol = 1e-12
        mf.kernel(dm0=dm)
        dm = mf.make_rdm1()
        energies.append(mf.e_tot)
    k = int(np.argmin(energies))
    out["h2_scan_sto3g"] = {"r_min": float(grid[k]), "E_min": energies[k],
                            "resolution": 0.001, "range": [1.0, 2.0]}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tempo", action="store_true")
    args = parser.parse_args()
    out = json.loads(OUT.read_text()) if OUT.exists() else {}
    small_systems(out)
    diketone(out)
    d_shell(out)
    h2_scan(out)
    if args.tempo:
        tempo(out)
    out = json.loads(json.dumps(out, default=float))
    OUT.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT.relative_to(ROOT)}: {sorted(out)}")


if __name__ == "__main__":
    main()
