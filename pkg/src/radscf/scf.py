"""Restricted and unrestricted Hartree-Fock SCF over precomputed integral tables."""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import BasisFunction
from .integrals import IntegralTables
from .molsys import Molecule, electron_counts, nuclear_repulsion

log = logging.getLogger(__name__)

LINEAR_DEPENDENCE_RATIO = 1e-10
DIIS_MAX_CONDITION = 1e12


class LinearDependenceError(np.linalg.LinAlgError):
    def __init__(self, eigenvalue: float, largest: float):
        super().__init__(
            f"overlap matrix numerically singular: eigenvalue {eigenvalue:.3e} "
            f"vs largest {largest:.3e}"
        )
        self.eigenvalue = eigenvalue


class SCFConvergenceError(RuntimeError):
    pass


@dataclass
class SCFConfig:
    max_iterations: int = 128
    energy_tol: float = 1e-9
    density_rms_tol: float = 1e-8
    diis_depth: int = 8
    initial_guess: str = "core_hamiltonian"
    level_shift: float = 0.0
    guess_mix_degrees: float = 30.0
    # (n_alpha, n_beta) electrons in orbitals odd under reflection through
    # the plane normal to ``mirror_axis``; None disables the constraint
    mirror_occupation: tuple[int, int] | None = None
    mirror_axis: str = "z"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.energy_tol > 0 and self.density_rms_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.diis_depth == 1 or self.diis_depth < 0:
            raise ValueError("diis_depth must be 0 (disabled) or >= 2")
        if self.initial_guess not in ("core_hamiltonian", "provided_density"):
            raise ValueError(f"unknown initial_guess {self.initial_guess!r}")
        if self.mirror_axis not in ("x", "y", "z"):
            raise ValueError(f"mirror_axis must be x, y or z, got {self.mirror_axis!r}")
        if self.mirror_occupation is not None:
            self.mirror_occupation = tuple(int(v) for v in self.mirror_occupation)

    @property
    def diis_enabled(self) -> bool:
        return self.diis_depth >= 2


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    delta_energy: float
    density_rms: float
    diis_error: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=True)


@dataclass(eq=False)
class SCFResult:
    C_alpha: np.ndarray
    C_beta: np.ndarray
    eps_alpha: np.ndarray
    eps_beta: np.ndarray
    P_alpha: np.ndarray
    P_beta: np.ndarray
    F_alpha: np.ndarray
    F_beta: np.ndarray
    E_total: float
    E_electronic: float
    E_nuclear: float
    iterations: int
    converged: bool
    s_squared: float
    n_alpha: int
    n_beta: int
    method: str = "uhf"
    history: list[IterationRecord] = field(default_factory=list)

    @property
    def P_total(self) -> np.ndarray:
        return self.P_alpha + self.P_beta

    @property
    def P_spin(self) -> np.ndarray:
        return self.P_alpha - self.P_beta

    def commutator_norm(self, S: np.ndarray) -> float:
        """max |FPS - SPF| over both spin channels."""
        out = 0.0
        for F, P in ((self.F_alpha, self.P_alpha), (self.F_beta, self.P_beta)):
            out = max(out, float(np.abs(F @ P @ S - S @ P @ F).max()))
        return out


def core_hamiltonian(tables: IntegralTables) -> np.ndarray:
    return tables.T + tables.V


def orthogonalizer(S: np.ndarray) -> np.ndarray:
    """Symmetric (Lowdin) orthogonalizer S^(-1/2)."""
    w, U = np.linalg.eigh(S)
    if w[0] < LINEAR_DEPENDENCE_RATIO * w[-1]:
        raise LinearDependenceError(float(w[0]), float(w[-1]))
    return (U / np.sqrt(w)) @ U.T


def solve_roothaan(F: np.ndarray, S: np.ndarray, X: np.ndarray | None = None):
    """Solve FC = SCE; returns (C, eps) with ascending eps and C^T S C = I."""
    if X is None:
        X = orthogonalizer(S)
    Fp = X.T @ F @ X
    eps, Cp = np.linalg.eigh(0.5 * (Fp + Fp.T))
    return X @ Cp, eps


def density_matrix(C: np.ndarray, n_occ: int) -> np.ndarray:
    """Sum of outer products of the first ``n_occ`` columns of C."""
    if not 0 <= n_occ <= C.shape[1]:
        raise ValueError(f"n_occ = {n_occ} outside [0, {C.shape[1]}]")
    occ = C[:, :n_occ]
    return occ @ occ.T


def build_fock_uhf(P_alpha, P_beta, h, tables: IntegralTables):
    """Alpha and beta Fock matrices from the two spin densities."""
    J, Ka, Kb = tables.jk(P_alpha + P_beta, P_alpha, P_beta)
    Fa = h + J - Ka
    Fb = h + J - Kb
    return 0.5 * (Fa + Fa.T), 0.5 * (Fb + Fb.T)


def total_energy(P_alpha, P_beta, h, F_alpha, F_beta, E_nn: float = 0.0) -> float:
    e = np.sum((P_alpha + P_beta) * h) + np.sum(P_alpha * F_alpha) + np.sum(P_beta * F_beta)
    return float(0.5 * e + E_nn)


def spin_contamination(C_alpha, C_beta, S, n_alpha, n_beta) -> float:
    """<S^2> of the UHF determinant."""
    sz = 0.5 * (n_alpha - n_beta)
    ov = C_alpha[:, :n_alpha].T @ S @ C_beta[:, :n_beta]
    return float(sz * (sz + 1) + n_beta - np.sum(ov * ov))


def diis_extrapolate(history, max_condition: float = DIIS_MAX_CONDITION):
    """Pulay extrapolation over a list of (F, error_vector) pairs.

    Returns (F_extrapolated, coefficients). ``F`` may be any array shape;
    the coefficients are shared by all of its components. An ill-conditioned
    B matrix drops the oldest entry until the system is usable.
    """
    entries = list(history)
    if not entries:
        raise ValueError("empty DIIS history")
    while len(entries) > 1:
        m = len(entries)
        errs = [np.ravel(e) for _, e in entries]
        B = np.empty((m + 1, m + 1))
        for i in range(m):
            for j in range(i + 1):
                B[i, j] = B[j, i] = float(errs[i] @ errs[j])
        scale = np.max(np.diag(B)[:m])
        if scale > 0:
            B[:m, :m] /= scale
        B[m, :] = -1.0
        B[:, m] = -1.0
        B[m, m] = 0.0
        if np.linalg.cond(B) > max_condition:
            entries.pop(0)
            continue
        rhs = np.zeros(m + 1)
        rhs[m] = -1.0
        c = np.linalg.solve(B, rhs)[:m]
        F = sum(ci * Fi for ci, (Fi, _) in zip(c, entries))
        return F, c
    return entries[-1][0], np.ones(1)


class DIIS:
    def __init__(self, depth: int = 8):
        self.history: deque = deque(maxlen=depth)

    def update(self, F, err):
        self.history.append((np.array(F, copy=True), np.ravel(err).copy()))
        if len(self.history) < 2:
            return F
        F_new, _ = diis_extrapolate(self.history)
        return F_new


def _mirror_parity(basis: list[BasisFunction], mol: Molecule, axis: str) -> np.ndarray:
    """True for basis functions odd under reflection through the molecular plane."""
    k = "xyz".index(axis)
    z = mol.coords[:, k]
    if np.ptp(z) > 1e-8:
        raise ValueError(f"mirror occupation needs a molecule planar in the {axis}-normal plane")
    return np.array([f.powers[k] % 2 == 1 for f in basis])


class _Solver:
    """Roothaan solver, optionally blocked by reflection parity."""

    def __init__(self, S, odd=None, occupation=None):
        self.S = S
        self.n = S.shape[0]
        self.odd = odd
        self.occupation = occupation
        if odd is None:
            self.X = orthogonalizer(S)
        else:
            self.blocks = [np.flatnonzero(~odd), np.flatnonzero(odd)]
            self.Xb = [orthogonalizer(S[np.ix_(b, b)]) if len(b) else None for b in self.blocks]
            # full-space orthogonalizer for DIIS errors
            self.X = orthogonalizer(S)

    def solve(self, F, spin: int, n_occ: int):
        """Return (C, eps) with the occupied orbitals in the first n_occ columns."""
        if self.odd is None:
            return solve_roothaan(F, self.S, self.X)
        n_odd = self.occupation[spin]
        n_even = n_occ - n_odd
        cols, eps_all, parity = [], [], []
        for label, (idx, X) in enumerate(zip(self.blocks, self.Xb)):
            if X is None:
                continue
            c, e = solve_roothaan(F[np.ix_(idx, idx)], self.S[np.ix_(idx, idx)], X)
            full = np.zeros((self.n, len(idx)))
            full[idx] = c
            cols.append(full)
            eps_all.append(e)
            parity.append(np.full(len(idx), label))
        C = np.hstack(cols)
        eps = np.concatenate(eps_all)
        par = np.concatenate(parity)
        n_avail = (int(np.sum(par == 0)), int(np.sum(par == 1)))
        if n_odd > n_avail[1] or n_even > n_avail[0] or n_even < 0:
            raise ValueError(f"mirror occupation {self.occupation} impossible for this basis")
        even_idx = np.flatnonzero(par == 0)
        odd_idx = np.flatnonzero(par == 1)
        occ = np.concatenate([even_idx[:n_even], odd_idx[:n_odd]])
        occ = occ[np.argsort(eps[occ], kind="stable")]
        virt = np.setdiff1d(np.arange(self.n), occ)
        virt = virt[np.argsort(eps[virt], kind="stable")]
        order = np.concatenate([occ, virt])
        return C[:, order], eps[order]


def _rotate_homo_lumo(C: np.ndarray, n_occ: int, degrees: float) -> np.ndarray:
    if n_occ < 1 or n_occ >= C.shape[1] or degrees == 0:
        return C
    t = math.radians(degrees)
    C = C.copy()
    homo, lumo = C[:, n_occ - 1].copy(), C[:, n_occ].copy()
    C[:, n_occ - 1] = math.cos(t) * homo + math.sin(t) * lumo
    C[:, n_occ] = -math.sin(t) * homo + math.cos(t) * lumo
    return C


def scf_uhf(mol: Molecule, basis: list[BasisFunction], tables: IntegralTables,
            cfg: SCFConfig | None = None, method: str = "uhf",
            guess_density: tuple[np.ndarray, np.ndarray] | None = None,
            iteration_log=None) -> SCFResult:
    """Run the SCF loop to self-consistency.

    ``method="rhf"`` enforces P_alpha = P_beta with a single Fock build.
    Non-convergence is reported through ``SCFResult.converged``. When
    ``iteration_log`` is a writable stream, one JSON record per iteration
    is written to it.
    """
    cfg = cfg or SCFConfig()
    method = method.lower()
    if method not in ("rhf", "uhf"):
        raise ValueError(f"unknown method {method!r}")
    n_alpha, n_beta = electron_counts(mol)
    n = tables.nbasis
    if max(n_alpha, n_beta) > n:
        raise ValueError(f"{n_alpha} alpha electrons exceed {n} basis functions")
    restricted = method == "rhf"
    if restricted and n_alpha != n_beta:
        raise ValueError("RHF requires a closed-shell molecule")

    S = tables.S
    h = core_hamiltonian(tables)
    E_nn = nuclear_repulsion(mol)
    odd = None
    if cfg.mirror_occupation is not None:
        odd = _mirror_parity(basis, mol, cfg.mirror_axis)
        if restricted and cfg.mirror_occupation[0] != cfg.mirror_occupation[1]:
            raise ValueError("RHF mirror occupation must be equal for both spins")
    solver = _Solver(S, odd, cfg.mirror_occupation)
    X = solver.X

    if cfg.initial_guess == "provided_density" or guess_density is not None:
        if guess_density is None:
            raise ValueError("initial_guess='provided_density' needs guess_density")
        Pa, Pb = (np.array(p, dtype=float) for p in guess_density)
        if restricted:
            Pa = Pb = 0.5 * (Pa + Pb)
        Ca = Cb = np.zeros((n, n))
        ea = eb = np.zeros(n)
    else:
        Ca, ea = solver.solve(h, 0, n_alpha)
        Cb, eb = Ca, ea
        if not restricted and odd is None:
            Ca = _rotate_homo_lumo(Ca, n_alpha, cfg.guess_mix_degrees)
        else:
            Cb, eb = solver.solve(h, 1, n_beta)
        Pa = density_matrix(Ca, n_alpha)
        Pb = density_matrix(Cb, n_beta)

    diis = DIIS(cfg.diis_depth) if cfg.diis_enabled else None
    history: list[IterationRecord] = []
    E_prev = None
    drms = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        Fa, Fb = build_fock_uhf(Pa, Pb, h, tables)
        E = total_energy(Pa, Pb, h, Fa, Fb, E_nn)
        ea_err = X.T @ (Fa @ Pa @ S - S @ Pa @ Fa) @ X
        eb_err = X.T @ (Fb @ Pb @ S - S @ Pb @ Fb) @ X
        err_norm = float(max(np.abs(ea_err).max(), np.abs(eb_err).max()))
        dE = math.nan if E_prev is None else E - E_prev
        rec = IterationRecord(it, E, dE, drms, err_norm)
        history.append(rec)
        if iteration_log is not None:
            iteration_log.write(rec.to_json() + "\n")
        log.debug("scf %3d  E=%.12f  dE=%.3e  drms=%.3e  err=%.3e", it, E, dE, drms, err_norm)
        if E_prev is not None and abs(dE) < cfg.energy_tol and drms < cfg.density_rms_tol:
            converged = True
            break

        if restricted:
            F_use = diis.update(Fa, ea_err) if diis else Fa
            Fa_use = Fb_use = F_use
        else:
            if diis:
                stacked = diis.update(np.stack([Fa, Fb]), np.concatenate([ea_err.ravel(),
                                                                          eb_err.ravel()]))
                Fa_use, Fb_use = stacked[0], stacked[1]
            else:
                Fa_use, Fb_use = Fa, Fb
        if cfg.level_shift:
            Fa_use = Fa_use + cfg.level_shift * (S - S @ Pa @ S)
            Fb_use = Fb_use + cfg.level_shift * (S - S @ Pb @ S)

        Ca, ea = solver.solve(Fa_use, 0, n_alpha)
        Pa_new = density_matrix(Ca, n_alpha)
        if restricted:
            Cb, eb, Pb_new = Ca, ea, Pa_new
        else:
            Cb, eb = solver.solve(Fb_use, 1, n_beta)
            Pb_new = density_matrix(Cb, n_beta)
        drms = float(math.sqrt(0.5 * (np.mean((Pa_new - Pa) ** 2) + np.mean((Pb_new - Pb) ** 2))))
        Pa, Pb = Pa_new, Pb_new
        E_prev = E

    if not converged:
        log.warning("SCF not converged after %d iterations", it)
    s2 = spin_contamination(Ca, Cb, S, n_alpha, n_beta) if np.any(Ca) else math.nan
    return SCFResult(
        C_alpha=Ca, C_beta=Cb, eps_alpha=ea, eps_beta=eb, P_alpha=Pa, P_beta=Pb,
        F_alpha=Fa, F_beta=Fb, E_total=E, E_electronic=E - E_nn, E_nuclear=E_nn,
        iterations=it, converged=converged, s_squared=s2, n_alpha=n_alpha, n_beta=n_beta,
        method=method, history=history,
    )
