"""Geometry relaxation with central-difference gradients of the SCF energy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisSet, assign_basis, get_basis
from .integrals import build_integral_tables
from .molsys import BOHR_TO_ANGSTROM, Molecule
from .scf import SCFConfig, SCFResult, scf_uhf

log = logging.getLogger(__name__)

METHODS = ("steepest_descent_with_backtracking", "quasi_newton")
MAX_BACKTRACKS = 20


class GradientError(RuntimeError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class StalledOptimizationError(RuntimeError):
    def __init__(self, message, molecule: Molecule, trace):
        super().__init__(message)
        self.molecule = molecule
        self.trace = trace


@dataclass
class OptimizerConfig:
    fd_step: float = 5e-3
    grad_tol: float = 3e-4
    max_steps: int = 100
    method: str = "quasi_newton"
    max_displacement: float = 0.3
    scf: SCFConfig = field(default_factory=lambda: SCFConfig(energy_tol=1e-11,
                                                             density_rms_tol=1e-9))
    scf_method: str = "uhf"

    def __post_init__(self):
        if not (self.fd_step > 0 and self.grad_tol > 0):
            raise ValueError("fd_step and grad_tol must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass
class OptimizationResult:
    molecule: Molecule
    energies: list[float]
    gradient: np.ndarray
    converged: bool
    steps: int
    frames: list[Molecule] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.energies[-1]


def _resolve_basis(basis) -> BasisSet:
    return get_basis(basis) if isinstance(basis, str) else basis


def scf_energy(mol: Molecule, basis, cfg: OptimizerConfig,
               guess=None) -> SCFResult:
    functions = assign_basis(mol, _resolve_basis(basis))
    tables = build_integral_tables(functions, mol)
    scf_cfg = cfg.scf
    if guess is not None:
        scf_cfg = replace(scf_cfg, initial_guess="provided_density")
    return scf_uhf(mol, functions, tables, scf_cfg, method=cfg.scf_method, guess_density=guess)


def rigid_body_basis(coords: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning rigid translations and rotations of ``coords``."""
    n = len(coords)
    vecs = []
    for k in range(3):
        t = np.zeros((n, 3))
        t[:, k] = 1.0
        vecs.append(t.ravel())
    center = coords - coords.mean(axis=0)
    for k in range(3):
        axis = np.zeros(3)
        axis[k] = 1.0
        vecs.append(np.cross(axis, center).ravel())
    U, s, _ = np.linalg.svd(np.array(vecs).T, full_matrices=False)
    rank = int(np.sum(s > 1e-8 * s[0]))
    return U[:, :rank].T


def project_rigid(grad: np.ndarray, coords: np.ndarray) -> np.ndarray:
    g = np.asarray(grad, dtype=float).ravel()
    basis = rigid_body_basis(np.asarray(coords, dtype=float))
    g = g - basis.T @ (basis @ g)
    return g.reshape(-1, 3)


def numerical_gradient(mol: Molecule, basis, cfg: OptimizerConfig | None = None,
                       base: SCFResult | None = None) -> np.ndarray:
    """Central-difference gradient (n, 3) in hartree/bohr, rigid motions removed."""
    cfg = cfg or OptimizerConfig()
    if base is None:
        base = scf_energy(mol, basis, cfg)
    if not base.converged:
        raise GradientError("SCF did not converge at the base geometry")
    guess = (base.P_alpha, base.P_beta)
    x0 = mol.coords
    grad = np.zeros_like(x0)
    h = cfg.fd_step
    for a in range(len(mol)):
        for k in range(3):
            e = []
            for sign in (1.0, -1.0):
                x = x0.copy()
                x[a, k] += sign * h
                r = scf_energy(mol.with_coords(x), basis, cfg, guess)
                if not r.converged:
                    raise GradientError(f"SCF failed at displaced coordinate atom {a} "
                                        f"axis {'xyz'[k]}", (a, k))
                e.append(r.E_total)
            grad[a, k] = (e[0] - e[1]) / (2 * h)
    return project_rigid(grad, x0)


def optimize(mol: Molecule, basis, cfg: OptimizerConfig | None = None) -> OptimizationResult:
    """Relax ``mol`` until max |gradient| < grad_tol or max_steps is reached."""
    cfg = cfg or OptimizerConfig()
    x = mol.coords.ravel().copy()
    current = scf_energy(mol, basis, cfg)
    if not current.converged:
        raise GradientError("initial SCF did not converge")
    energies = [current.E_total]
    frames = [mol]
    g = numerical_gradient(mol, basis, cfg, current).ravel()
    H = np.eye(len(x)) * 2.0
    steps = 0
    while np.abs(g).max() >= cfg.grad_tol and steps < cfg.max_steps:
        if cfg.method == "quasi_newton":
            direction = -H @ g
            if direction @ g >= 0:
                H = np.eye(len(x)) * 2.0
                direction = -H @ g
        else:
            direction = -2.0 * g
        biggest = np.linalg.norm(direction.reshape(-1, 3), axis=1).max()
        if biggest > cfg.max_displacement:
            direction *= cfg.max_displacement / biggest
        alpha = 1.0
        for _ in range(MAX_BACKTRACKS):
            trial_mol = mol.with_coords((x + alpha * direction).reshape(-1, 3))
            trial = scf_energy(trial_mol, basis, cfg, (current.P_alpha, current.P_beta))
            if trial.converged and trial.E_total <= energies[-1] + 1e-4 * alpha * (g @ direction):
                break
            alpha *= 0.5
        else:
            raise StalledOptimizationError(
                f"line search failed after {MAX_BACKTRACKS} backtracks",
                mol.with_coords(x.reshape(-1, 3)), energies)
        s = alpha * direction
        x = x + s
        current = trial
        energies.append(trial.E_total)
        frames.append(trial_mol)
        g_new = numerical_gradient(trial_mol, basis, cfg, trial).ravel()
        y = g_new - g
        sy = s @ y
        if cfg.method == "quasi_newton" and sy > 1e-12:
            rho = 1.0 / sy
            I = np.eye(len(x))
            H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) + rho * np.outer(s, s)
        g = g_new
        steps += 1
        log.info("opt step %d  E=%.10f  max|g|=%.2e", steps, energies[-1], np.abs(g).max())
    final = mol.with_coords(x.reshape(-1, 3))
    return OptimizationResult(final, energies, g.reshape(-1, 3),
                              bool(np.abs(g).max() < cfg.grad_tol), steps, frames)


def multistart(mol: Molecule, basis, cfg: OptimizerConfig | None = None, n_starts: int = 3,
               noise: float = 0.05, seed: int = 0) -> OptimizationResult:
    """Lowest of the relaxations started from ``mol`` and ``n_starts`` perturbed copies."""
    rng = np.random.default_rng(seed)
    starts = [mol] + [mol.with_coords(mol.coords + rng.normal(0.0, noise, mol.coords.shape))
                      for _ in range(n_starts)]
    results = [optimize(m, basis, cfg) for m in starts]
    return min(results, key=lambda r: r.energy)


def bond_scan(mol: Molecule, basis, atoms: tuple[int, int], distances,
              cfg: OptimizerConfig | None = None) -> list[tuple[float, float]]:
    """Energies with atom ``atoms[1]`` moved along the bond axis to each distance (bohr)."""
    cfg = cfg or OptimizerConfig()
    a, b = atoms
    x0 = mol.coords
    axis = x0[b] - x0[a]
    norm = np.linalg.norm(axis)
    if norm < 1e-8:
        raise ValueError("scan atoms coincide")
    axis /= norm
    out = []
    guess = None
    for r in distances:
        x = x0.copy()
        x[b] = x0[a] + float(r) * axis
        res = scf_energy(mol.with_coords(x), basis, cfg, guess)
        if not res.converged:
            raise GradientError(f"SCF failed at scan distance {r}")
        guess = (res.P_alpha, res.P_beta)
        out.append((float(r), res.E_total))
    return out


def trajectory_xyz(frames, energies) -> str:
    """Concatenated XYZ frames, energy in each comment line."""
    chunks = []
    for mol, e in zip(frames, energies):
        lines = [str(len(mol)), f"charge={mol.charge} mult={mol.multiplicity} E={e:.10f}"]
        for atom in mol.atoms:
            x, y, z = atom.position * BOHR_TO_ANGSTROM
            lines.append(f"{atom.element:<2} {x:20.12f} {y:20.12f} {z:20.12f}")
        chunks.append("\n".join(lines))
    return "\n".join(chunks) + "\n"
