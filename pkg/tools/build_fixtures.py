"""Regenerate the shipped geometry fixtures.

Offline helper, not part of the package. Needs RDKit for 3D embedding and
PySCF for the TEMPO relaxation (analytic UHF gradients; finite differences
over 87 coordinates would take hours). The diketone head group is built
from standard bond lengths and angles; the small molecules use fixed
coordinates.

    python3 tools/build_fixtures.py [--only NAME ...]

"tempo" (about 20 min) and "diketone-relax" run only when named.
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from radscf.geomopt import OptimizerConfig, optimize
from radscf.molsys import ANGSTROM_TO_BOHR, BOHR_TO_ANGSTROM, Molecule

ROOT = Path(__file__).resolve().parents[1]
PKG = ROOT / "src" / "radscf" / "data" / "geometries"
TESTDATA = ROOT / "tests" / "data"


def write_xyz(path: Path, symbols, coords_angstrom, comment: str):
    lines = [str(len(symbols)), comment]
    for s, (x, y, z) in zip(symbols, coords_angstrom):
        lines.append(f"{s:<2} {x:14.8f} {y:14.8f} {z:14.8f}")
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path.relative_to(ROOT)} ({len(symbols)} atoms)")


def small_fixtures():
    r_h2 = 1.4 * BOHR_TO_ANGSTROM
    r_heh = 1.4632 * BOHR_TO_ANGSTROM
    data = {
        "h.xyz": (["H"], [[0, 0, 0]], "charge=0 mult=2 hydrogen atom"),
        "h2.xyz": (["H", "H"], [[0, 0, 0], [0, 0, r_h2]], "charge=0 mult=1 H2 at 1.4 bohr"),
        "heh+.xyz": (["He", "H"], [[0, 0, 0], [0, 0, r_heh]],
                     "charge=1 mult=1 HeH+ at 1.4632 bohr"),
        "h2o.xyz": (["O", "H", "H"],
                    [[0, 0, 0.1173], [0, 0.7572, -0.4692], [0, -0.7572, -0.4692]],
                    "charge=0 mult=1 water"),
        "oh.xyz": (["O", "H"], [[0, 0, 0], [0, 0, 0.97]], "charge=0 mult=2 hydroxyl radical"),
    }
    a = 1.087 / math.sqrt(3)
    data["ch4.xyz"] = (["C", "H", "H", "H", "H"],
                       [[0, 0, 0], [a, a, a], [-a, -a, a], [-a, a, -a], [a, -a, -a]],
                       "charge=0 mult=1 methane")
    for name, (sym, xyz, comment) in data.items():
        write_xyz(PKG / name, sym, np.array(xyz, dtype=float), comment)


def _diketone_start(cc=1.40, co=1.26, ccc=120.0, cco=124.0, ch=1.08):
    """Planar U-shaped OHC-CH-CHO in the xy plane, oxygens on the same side."""
    half = math.radians(ccc / 2)
    c2 = np.zeros(3)
    c1 = np.array([-cc * math.sin(half), -cc * math.cos(half), 0.0])
    c3 = np.array([cc * math.sin(half), -cc * math.cos(half), 0.0])

    def branch(a, b, length, angle, sign):
        v = (b - a) / np.linalg.norm(b - a)
        t = math.radians(angle)
        rot = np.array([[math.cos(t), -sign * math.sin(t), 0],
                        [sign * math.sin(t), math.cos(t), 0], [0, 0, 1]])
        return a + length * rot @ v

    o1, o3 = branch(c1, c2, co, cco, -1), branch(c3, c2, co, cco, 1)
    h1, h3 = branch(c1, c2, ch, -118, -1), branch(c3, c2, ch, -118, 1)
    return (["C", "C", "C", "O", "O", "H", "H", "H"],
            np.array([c1, c2, c3, o1, o3, h1, [0, ch, 0], h3]))


def diketone_head():
    # Not relaxed: in the oxygen-centred (sigma) state the minimal basis pulls
    # the oxygens to 1.8 A. CCO = 115 deg gives the 2.2 A O...O separation of
    # the full beta-diketone radical.
    symbols, xyz = _diketone_start(cco=115.0)
    write_xyz(PKG / "propanedial_radical.xyz", symbols, xyz,
              "charge=0 mult=2 propane-1,3-dial radical head group, planar (xy)")


def relax_diketone_head():
    """UHF/STO-3G relaxation of the head group (reference only, not shipped)."""
    symbols, xyz = _diketone_start(cco=115.0)
    mol = Molecule.from_arrays(symbols, xyz, charge=0, multiplicity=2, unit="angstrom")
    res = optimize(mol, "sto-3g", OptimizerConfig(grad_tol=2e-4))
    print(f"  E={res.energy:.8f} steps={res.steps} converged={res.converged}")
    d = np.linalg.norm(res.molecule.coords[3] - res.molecule.coords[4]) * BOHR_TO_ANGSTROM
    print(f"  O...O = {d:.3f} A")


def _embed(smiles: str, seed: int = 7):
    from rdkit import Chem
    from rdkit.Chem import AllChem

    mol = Chem.AddHs(Chem.MolFromSmiles(smiles))
    AllChem.EmbedMolecule(mol, randomSeed=seed)
    AllChem.MMFFOptimizeMolecule(mol, maxIters=5000)
    conf = mol.GetConformer()
    symbols = [a.GetSymbol() for a in mol.GetAtoms()]
    xyz = np.array([list(conf.GetAtomPosition(i)) for i in range(mol.GetNumAtoms())])
    hydrogens = {a.GetIdx(): [n.GetIdx() for n in a.GetNeighbors() if n.GetSymbol() == "H"]
                 for a in mol.GetAtoms()}
    return symbols, xyz, hydrogens


def _reorder(symbols, xyz, first, drop=()):
    order = list(first) + [i for i in range(len(symbols)) if i not in first and i not in drop]
    return [symbols[i] for i in order], xyz[order]


def acetic_acid():
    symbols, xyz, _ = _embed("CC(=O)O")
    write_xyz(PKG / "acetic_acid.xyz", symbols, xyz, "charge=0 mult=1 acetic acid (MMFF)")


def tempo(max_iter: int = 300):
    from pyscf import gto, scf
    from scipy.optimize import minimize

    symbols, xyz, hyd = _embed("CC1(C)CCCC(C)(C)N1O")
    o_idx = symbols.index("O")
    symbols, xyz = _reorder(symbols, xyz, [], drop=set(hyd[o_idx]))
    x0 = xyz.ravel() * ANGSTROM_TO_BOHR
    state = {"dm": None}

    def energy_grad(x):
        m = gto.M(atom=list(zip(symbols, x.reshape(-1, 3))), unit="bohr", basis="sto-3g",
                  spin=1, cart=True, verbose=0)
        mf = scf.UHF(m)
        mf.conv_tol = 1e-10
        mf.kernel(dm0=state["dm"])
        state["dm"] = mf.make_rdm1()
        g = mf.nuc_grad_method().kernel()
        print(f"  tempo E={mf.e_tot:.8f} max|g|={np.abs(g).max():.2e}", flush=True)
        return mf.e_tot, g.ravel()

    res = minimize(energy_grad, x0, jac=True, method="BFGS",
                   options={"gtol": 3e-4, "maxiter": max_iter})
    xyz = set_nitroxide(symbols, res.x.reshape(-1, 3) * BOHR_TO_ANGSTROM)
    write_xyz(PKG / "tempo.xyz", symbols, xyz,
              "charge=0 mult=2 TEMPO, UHF/STO-3G ring with N-O 1.28 A, 20 deg out of plane")


def set_nitroxide(symbols, xyz, r_no=1.28, out_of_plane=20.0):
    """Place O at the measured nitroxide geometry relative to the C-N-C plane.

    UHF/STO-3G overstretches N-O (about 1.38 A) and over-pyramidalizes N
    (about 47 deg); both push nearly all spin onto O.
    """
    xyz = np.array(xyz, dtype=float)
    n, o = symbols.index("N"), symbols.index("O")
    cs = [i for i, s in enumerate(symbols)
          if s == "C" and np.linalg.norm(xyz[i] - xyz[n]) < 1.7]
    a, b = xyz[cs[0]] - xyz[n], xyz[cs[1]] - xyz[n]
    normal = np.cross(a, b)
    normal /= np.linalg.norm(normal)
    if normal @ (xyz[o] - xyz[n]) < 0:
        normal = -normal
    bis = -(a / np.linalg.norm(a) + b / np.linalg.norm(b))
    bis -= (bis @ normal) * normal
    bis /= np.linalg.norm(bis)
    t = math.radians(out_of_plane)
    xyz[o] = xyz[n] + r_no * (math.cos(t) * bis + math.sin(t) * normal)
    return xyz


def diketone_standin():
    # enol parent; dropping the enol H leaves the beta-diketone radical.
    # Leading atoms follow the numbering of the literature spin listing.
    smiles = "CC(=O)C=C(O)CCCCCCCCCCCCC(=O)O"
    # seed 11 gives the U-shaped (syn) head group with O...O near 2.6 A
    symbols, xyz, hyd = _embed(smiles, seed=11)
    first = [1, 2, 3, 0, *hyd[0], 4, *hyd[3], 6, 5, 7]
    symbols, xyz = _reorder(symbols, xyz, first, drop=set(hyd[5]))
    write_xyz(TESTDATA / "diketone_radical_c17.xyz", symbols, xyz,
              "charge=0 mult=2 beta-diketone radical with C12 linker and carboxyl (MMFF)")


def phenoxyl_standin():
    smiles = "Oc1c(C(=O)OC)cc(CCCCCCCCCCCC)cc1C(=O)OC"
    symbols, xyz, hyd = _embed(smiles)
    first = [2, 7, 8, 21, 22, 1, 9, 5, *range(10, 21), 6, 4, 3, 0, 25, 23, 24, 26]
    symbols, xyz = _reorder(symbols, xyz, first, drop=set(hyd[0]))
    write_xyz(TESTDATA / "phenoxyl_diester.xyz", symbols, xyz,
              "charge=0 mult=2 phenoxyl radical with two methyl esters and a C12 chain (MMFF)")


def myristic_acid():
    symbols, xyz, _ = _embed("CCCCCCCCCCCCCC(=O)O")
    write_xyz(TESTDATA / "tetradecanoic_acid.xyz", symbols, xyz,
              "charge=0 mult=1 tetradecanoic acid (MMFF)")


BUILDERS = {
    "small": small_fixtures,
    "diketone": diketone_head,
    "diketone-relax": relax_diketone_head,
    "acetic": acetic_acid,
    "tempo": tempo,
    "diketone-c17": diketone_standin,
    "phenoxyl": phenoxyl_standin,
    "myristic": myristic_acid,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--only", nargs="+", choices=sorted(BUILDERS))
    args = parser.parse_args()
    TESTDATA.mkdir(parents=True, exist_ok=True)
    for name in args.only or [b for b in BUILDERS if b not in ("diketone-relax", "tempo")]:
        BUILDERS[name]()


if __name__ == "__main__":
    main()
