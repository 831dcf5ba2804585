from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numba
import numpy as np

from ..basis import BasisFunction
from ..molsys import Molecule
from . import _kernels as K

MAX_BOYS_ORDER = 4 * 2 + 2
DENSE_ERI_LIMIT = 100
DUMP_MAGIC = b"RADSCF-INT v1"


def boys(n: int, x: float) -> float:
    """Boys function F_n(x) = int_0^1 t^(2n) exp(-x t^2) dt."""
    if n < 0 or x < 0:
        raise ValueError("boys requires n >= 0 and x >= 0")
    out = np.empty(n + 1)
    K.boys_array(int(n), float(x), out)
    return float(out[n])


def _fn_args(f: BasisFunction):
    return (np.asarray(f.center, dtype=float), np.asarray(f.powers, dtype=np.int64),
            np.asarray(f.exponents, dtype=float), np.asarray(f.coefficients, dtype=float))


def overlap(a: BasisFunction, b: BasisFunction) -> float:
    return float(K.overlap_kinetic_pair(*_fn_args(a), *_fn_args(b))[0])


def kinetic(a: BasisFunction, b: BasisFunction) -> float:
    return float(K.overlap_kinetic_pair(*_fn_args(a), *_fn_args(b))[1])


def nuclear_attraction(a: BasisFunction, b: BasisFunction, mol: Molecule) -> float:
    return float(K.nuclear_pair(*_fn_args(a), *_fn_args(b), mol.atomic_numbers, mol.coords))


def eri(a: BasisFunction, b: BasisFunction, c: BasisFunction, d: BasisFunction) -> float:
    """(ab|cd) in chemists' notation."""
    return float(K.eri_quartet(*_fn_args(a), *_fn_args(b), *_fn_args(c), *_fn_args(d)))


def pair_index(i, j):
    i, j = max(i, j), min(i, j)
    return i * (i + 1) // 2 + j


@dataclass
class IntegralTables:
    """S, T, V and the canonical two-electron list for one basis/geometry.

    ``eri_canonical[pair(pair(i, j), pair(k, l))]`` holds (ij|kl); use
    :meth:`eri_tensor` for the dense n^4 array on small systems.
    """

    S: np.ndarray
    T: np.ndarray
    V: np.ndarray
    eri_canonical: np.ndarray
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def nbasis(self) -> int:
        return self.S.shape[0]

    @property
    def H_core(self) -> np.ndarray:
        return self.T + self.V

    def eri_value(self, i, j, k, l) -> float:
        return float(self.eri_canonical[pair_index(pair_index(i, j), pair_index(k, l))])

    def eri_tensor(self) -> np.ndarray:
        if self._dense is None:
            if self.nbasis > DENSE_ERI_LIMIT:
                raise MemoryError(
                    f"dense ERI tensor refused for n = {self.nbasis} > {DENSE_ERI_LIMIT}"
                )
            self._dense = K.unpack_canonical(self.eri_canonical, self.nbasis)
        return self._dense

    def jk(self, P_coulomb, *P_exchange):
        """Coulomb matrix of ``P_coulomb`` and exchange matrices of up to two densities."""
        n = self.nbasis
        pk1 = P_exchange[0] if P_exchange else np.zeros((n, n))
        pk2 = P_exchange[1] if len(P_exchange) > 1 else np.zeros((n, n))
        J, K1, K2 = K.jk_from_canonical(self.eri_canonical, n,
                                         np.ascontiguousarray(P_coulomb, dtype=float),
                                         np.ascontiguousarray(pk1, dtype=float),
                                         np.ascontiguousarray(pk2, dtype=float))
        return J, K1, K2

    def overlap_condition(self) -> float:
        w = np.linalg.eigvalsh(self.S)
        return float(w[-1] / w[0])


def _pack_functions(basis: list[BasisFunction]):
    n = len(basis)
    maxp = max(len(f.exponents) for f in basis)
    centers = np.array([f.center for f in basis], dtype=float)
    powers = np.array([f.powers for f in basis], dtype=np.int64)
    nprim = np.array([len(f.exponents) for f in basis], dtype=np.int64)
    exps = np.zeros((n, maxp))
    weights = np.zeros((n, maxp))
    for i, f in enumerate(basis):
        exps[i, :nprim[i]] = f.exponents
        weights[i, :nprim[i]] = f.coefficients
    return centers, powers, exps, weights, nprim


def _pack_shells(basis: list[BasisFunction]):
    """Group consecutive functions sharing ``shell_index`` into shells."""
    starts = [0]
    for i in range(1, len(basis)):
        if basis[i].shell_index != basis[i - 1].shell_index:
            starts.append(i)
    ns = len(starts)
    maxp = max(len(f.exponents) for f in basis)
    sh_center = np.zeros((ns, 3))
    sh_l = np.zeros(ns, dtype=np.int64)
    sh_f0 = np.array(starts, dtype=np.int64)
    sh_np = np.zeros(ns, dtype=np.int64)
    sh_exp = np.zeros((ns, maxp))
    for s, f0 in enumerate(starts):
        f = basis[f0]
        sh_center[s] = f.center
        sh_l[s] = f.l
        sh_np[s] = len(f.exponents)
        sh_exp[s, :sh_np[s]] = f.exponents
        ncomp = (f.l + 1) * (f.l + 2) // 2
        members = basis[f0:f0 + ncomp]
        if len(members) != ncomp or any(m.shell_index != f.shell_index for m in members):
            raise ValueError(f"incomplete Cartesian shell starting at function {f0}")
    return sh_center, sh_l, sh_f0, sh_np, sh_exp


def build_integral_tables(basis: list[BasisFunction], mol: Molecule,
                          threads: int | None = None) -> IntegralTables:
    """Assemble S, T, V and every canonical (ij|kl) for ``basis`` on ``mol``."""
    if not basis:
        raise ValueError("empty basis")
    if any(f.l > 2 for f in basis):
        raise ValueError("angular momentum above d is not supported")
    centers, powers, exps, weights, nprim = _pack_functions(basis)
    S, T, V = K.one_electron_tables(centers, powers, exps, weights, nprim,
                                    mol.atomic_numbers, mol.coords)
    n = len(basis)
    npair = n * (n + 1) // 2
    out = np.zeros(npair * (npair + 1) // 2)
    sh_center, sh_l, sh_f0, sh_np, sh_exp = _pack_shells(basis)
    previous = numba.get_num_threads()
    if threads:
        numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))
    try:
        K.eri_shell_quartets(sh_center, sh_l, sh_f0, sh_np, sh_exp, powers, weights, out)
    finally:
        numba.set_num_threads(previous)
    return IntegralTables(S, T, V, out)


def dump_tables(tables: IntegralTables) -> bytes:
    """Binary dump: magic header, n, then S, T, V row-major and the canonical ERI list."""
    n = tables.nbasis
    parts = [DUMP_MAGIC, struct.pack("<q", n)]
    for m in (tables.S, tables.T, tables.V, tables.eri_canonical):
        parts.append(np.ascontiguousarray(m, dtype="<f8").tobytes())
    return b"".join(parts)


def load_tables(data: bytes) -> IntegralTables:
    if not data.startswith(DUMP_MAGIC):
        raise ValueError("not a RADSCF-INT v1 dump")
    off = len(DUMP_MAGIC)
    (n,) = struct.unpack_from("<q", data, off)
    off += 8
    npair = n * (n + 1) // 2
    sizes = [n * n] * 3 + [npair * (npair + 1) // 2]
    arrays = []
    for size in sizes:
        arrays.append(np.frombuffer(data, dtype="<f8", count=size, offset=off).astype(float))
        off += 8 * size
    if off != len(data):
        raise ValueError(f"dump length mismatch: {len(data) - off} trailing bytes")
    S, T, V = (a.reshape(n, n) for a in arrays[:3])
    return IntegralTables(S, T, V, arrays[3])
