"""Numba kernels: Boys function and McMurchie-Davidson Hermite integrals."""

import math

import numba as nb
import numpy as np

# skip the TBB probe: old system TBB builds only produce a warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

BOYS_ASYMPTOTIC_X = 35.0
_SERIES_EPS = 1e-17
TWO_PI_5_2 = 2.0 * math.pi ** 2.5

jit = nb.njit(cache=True, fastmath=False)


@jit
def boys_array(nmax, x, out):
    """Fill out[0..nmax] with F_n(x)."""
    if x < 1e-15:
        for n in range(nmax + 1):
            out[n] = 1.0 / (2 * n + 1)
        return
    if x > BOYS_ASYMPTOTIC_X:
        ex = math.exp(-x)
        out[0] = 0.5 * math.sqrt(math.pi / x) * math.erf(math.sqrt(x))
        for n in range(nmax):
            out[n + 1] = ((2 * n + 1) * out[n] - ex) / (2.0 * x)
        return
    # series for the highest order, then downward recursion
    ex = math.exp(-x)
    term = 1.0 / (2 * nmax + 1)
    total = term
    k = 1
    while True:
        term *= 2.0 * x / (2 * nmax + 2 * k + 1)
        total += term
        if term < _SERIES_EPS * total:
            break
        k += 1
    out[nmax] = ex * total
    for n in range(nmax, 0, -1):
        out[n - 1] = (2.0 * x * out[n] + ex) / (2 * n - 1)


@jit
def hermite_e(imax, jmax, a, b, qx, out):
    """Hermite expansion coefficients E[i, j, t] for one Cartesian direction.

    qx = A_x - B_x. ``out`` has shape (>= imax+1, >= jmax+1, >= imax+jmax+1).
    """
    p = a + b
    mu = a * b / p
    xpa = -b * qx / p
    xpb = a * qx / p
    oo2p = 0.5 / p
    tmax = imax + jmax
    for i in range(imax + 1):
        for j in range(jmax + 1):
            for t in range(tmax + 1):
                out[i, j, t] = 0.0
    out[0, 0, 0] = math.exp(-mu * qx * qx)
    for i in range(imax + 1):
        for j in range(jmax + 1):
            if i == 0 and j == 0:
                continue
            if i > 0:
                # raise i from (i-1, j)
                for t in range(i + j + 1):
                    v = xpa * out[i - 1, j, t]
                    if t > 0:
                        v += oo2p * out[i - 1, j, t - 1]
                    if t + 1 <= i - 1 + j:
                        v += (t + 1) * out[i - 1, j, t + 1]
                    out[i, j, t] = v
            else:
                for t in range(i + j + 1):
                    v = xpb * out[i, j - 1, t]
                    if t > 0:
                        v += oo2p * out[i, j - 1, t - 1]
                    if t + 1 <= i + j - 1:
                        v += (t + 1) * out[i, j - 1, t + 1]
                    out[i, j, t] = v


@jit
def hermite_r(lmax, alpha, x, y, z, fbuf, rn, out):
    """Hermite Coulomb integrals R[t, u, v] = R^0_tuv for t+u+v <= lmax.

    ``rn`` is scratch of shape (lmax+1, lmax+1, lmax+1, lmax+1).
    """
    boys_array(lmax, alpha * (x * x + y * y + z * z), fbuf)
    fac = 1.0
    for n in range(lmax + 1):
        rn[n, 0, 0, 0] = fac * fbuf[n]
        fac *= -2.0 * alpha
    for n in range(lmax - 1, -1, -1):
        top = lmax - n
        for t in range(top + 1):
            for u in range(top + 1 - t):
                for v in range(top + 1 - t - u):
                    if t == 0 and u == 0 and v == 0:
                        continue
                    if t > 0:
                        val = x * rn[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * rn[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = y * rn[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * rn[n + 1, t, u - 2, v]
                    else:
                        val = z * rn[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * rn[n + 1, t, u, v - 2]
                    rn[n, t, u, v] = val
    for t in range(lmax + 1):
        for u in range(lmax + 1 - t):
            for v in range(lmax + 1 - t - u):
                out[t, u, v] = rn[0, t, u, v]


# ---------------------------------------------------------------------------
# contracted one-electron integrals between two basis functions

@jit
def overlap_kinetic_pair(ca, pa, ea, wa, cb, pb, eb, wb):
    """Return (overlap, kinetic) between two contracted functions."""
    ex = np.empty((3, 5, 7))
    ey = np.empty((3, 5, 7))
    ez = np.empty((3, 5, 7))
    s_tot = 0.0
    t_tot = 0.0
    s1 = np.empty(3)
    t1 = np.empty(3)
    for i in range(ea.shape[0]):
        a = ea[i]
        for j in range(eb.shape[0]):
            b = eb[j]
            p = a + b
            root = math.sqrt(math.pi / p)
            hermite_e(pa[0], pb[0] + 2, a, b, ca[0] - cb[0], ex)
            hermite_e(pa[1], pb[1] + 2, a, b, ca[1] - cb[1], ey)
            hermite_e(pa[2], pb[2] + 2, a, b, ca[2] - cb[2], ez)
            for d in range(3):
                if d == 0:
                    e = ex
                elif d == 1:
                    e = ey
                else:
                    e = ez
                li = pa[d]
                lj = pb[d]
                s = e[li, lj, 0] * root
                t = -2.0 * b * b * e[li, lj + 2, 0] * root + b * (2 * lj + 1) * s
                if lj >= 2:
                    t -= 0.5 * lj * (lj - 1) * e[li, lj - 2, 0] * root
                s1[d] = s
                t1[d] = t
            w = wa[i] * wb[j]
            s_tot += w * s1[0] * s1[1] * s1[2]
            t_tot += w * (t1[0] * s1[1] * s1[2] + s1[0] * t1[1] * s1[2] + s1[0] * s1[1] * t1[2])
    return s_tot, t_tot


@jit
def nuclear_pair(ca, pa, ea, wa, cb, pb, eb, wb, charges, centers):
    """Nuclear attraction sum_C -Z_C <a|1/|r-C||b>."""
    lsum = pa[0] + pa[1] + pa[2] + pb[0] + pb[1] + pb[2]
    ex = np.empty((3, 3, 5))
    ey = np.empty((3, 3, 5))
    ez = np.empty((3, 3, 5))
    fbuf = np.empty(lsum + 1)
    rn = np.empty((lsum + 1, lsum + 1, lsum + 1, lsum + 1))
    rr = np.empty((lsum + 1, lsum + 1, lsum + 1))
    total = 0.0
    for i in range(ea.shape[0]):
        a = ea[i]
        for j in range(eb.shape[0]):
            b = eb[j]
            p = a + b
            px = (a * ca[0] + b * cb[0]) / p
            py = (a * ca[1] + b * cb[1]) / p
            pz = (a * ca[2] + b * cb[2]) / p
            hermite_e(pa[0], pb[0], a, b, ca[0] - cb[0], ex)
            hermite_e(pa[1], pb[1], a, b, ca[1] - cb[1], ey)
            hermite_e(pa[2], pb[2], a, b, ca[2] - cb[2], ez)
            acc = 0.0
            for c in range(charges.shape[0]):
                z = charges[c]
                if z == 0.0:
                    continue
                hermite_r(lsum, p, px - centers[c, 0], py - centers[c, 1], pz - centers[c, 2],
                          fbuf, rn, rr)
                val = 0.0
                for t in range(pa[0] + pb[0] + 1):
                    for u in range(pa[1] + pb[1] + 1):
                        for v in range(pa[2] + pb[2] + 1):
                            val += ex[pa[0], pb[0], t] * ey[pa[1], pb[1], u] * \
                                ez[pa[2], pb[2], v] * rr[t, u, v]
                acc -= z * val
            total += wa[i] * wb[j] * 2.0 * math.pi / p * acc
    return total


@jit
def eri_quartet(ca, pa, ea, wa, cb, pb, eb, wb, cc, pc, ec, wc, cd, pd, ed, wd):
    """Contracted (ab|cd) for four single basis functions."""
    lab = pa[0] + pa[1] + pa[2] + pb[0] + pb[1] + pb[2]
    lcd = pc[0] + pc[1] + pc[2] + pd[0] + pd[1] + pd[2]
    ltot = lab + lcd
    eab = np.empty((3, 3, 3, 5))
    ecd = np.empty((3, 3, 3, 5))
    fbuf = np.empty(ltot + 1)
    rn = np.empty((ltot + 1, ltot + 1, ltot + 1, ltot + 1))
    rr = np.empty((ltot + 1, ltot + 1, ltot + 1))
    total = 0.0
    for i in range(ea.shape[0]):
        for j in range(eb.shape[0]):
            a = ea[i]
            b = eb[j]
            p = a + b
            wab = wa[i] * wb[j]
            pxyz0 = (a * ca[0] + b * cb[0]) / p
            pxyz1 = (a * ca[1] + b * cb[1]) / p
            pxyz2 = (a * ca[2] + b * cb[2]) / p
            for d in range(3):
                hermite_e(pa[d], pb[d], a, b, ca[d] - cb[d], eab[d])
            for k in range(ec.shape[0]):
                for m in range(ed.shape[0]):
                    c = ec[k]
                    dd = ed[m]
                    q = c + dd
                    qxyz0 = (c * cc[0] + dd * cd[0]) / q
                    qxyz1 = (c * cc[1] + dd * cd[1]) / q
                    qxyz2 = (c * cc[2] + dd * cd[2]) / q
                    for d in range(3):
                        hermite_e(pc[d], pd[d], c, dd, cc[d] - cd[d], ecd[d])
                    alpha = p * q / (p + q)
                    hermite_r(ltot, alpha, pxyz0 - qxyz0, pxyz1 - qxyz1, pxyz2 - qxyz2,
                              fbuf, rn, rr)
                    val = 0.0
                    for t in range(pa[0] + pb[0] + 1):
                        for u in range(pa[1] + pb[1] + 1):
                            for v in range(pa[2] + pb[2] + 1):
                                e1 = eab[0, pa[0], pb[0], t] * eab[1, pa[1], pb[1], u] * \
                                    eab[2, pa[2], pb[2], v]
                                inner = 0.0
                                for tau in range(pc[0] + pd[0] + 1):
                                    for nu in range(pc[1] + pd[1] + 1):
                                        for phi in range(pc[2] + pd[2] + 1):
                                            e2 = ecd[0, pc[0], pd[0], tau] * \
                                                ecd[1, pc[1], pd[1], nu] * \
                                                ecd[2, pc[2], pd[2], phi]
                                            if (tau + nu + phi) % 2:
                                                e2 = -e2
                                            inner += e2 * rr[t + tau, u + nu, v + phi]
                                val += e1 * inner
                    total += wab * wc[k] * wd[m] * TWO_PI_5_2 / (p * q * math.sqrt(p + q)) * val
    return total


# ---------------------------------------------------------------------------
# table builders over the whole basis

@jit
def one_electron_tables(centers, powers, exps, weights, nprim, charges, atom_xyz):
    n = centers.shape[0]
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        ea = exps[i, :nprim[i]]
        wa = weights[i, :nprim[i]]
        for j in range(i + 1):
            eb = exps[j, :nprim[j]]
            wb = weights[j, :nprim[j]]
            s, t = overlap_kinetic_pair(centers[i], powers[i], ea, wa,
                                        centers[j], powers[j], eb, wb)
            v = nuclear_pair(centers[i], powers[i], ea, wa, centers[j], powers[j], eb, wb,
                             charges, atom_xyz)
            S[i, j] = s
            S[j, i] = s
            T[i, j] = t
            T[j, i] = t
            V[i, j] = v
            V[j, i] = v
    return S, T, V


@jit
def _pair_index(i, j):
    if i < j:
        i, j = j, i
    return i * (i + 1) // 2 + j


@nb.njit(cache=True, parallel=True)
def eri_shell_quartets(sh_center, sh_l, sh_f0, sh_np, sh_exp, f_pow, f_w, out):
    """Canonical ERI list over all shell quartets.

    ``out`` is indexed by pair(pair(i, j), pair(k, l)); every canonical
    function quartet is written from exactly one shell quartet.
    """
    ns = sh_l.shape[0]
    npair_sh = ns * (ns + 1) // 2
    for abi in nb.prange(npair_sh):
        # unrank shell pair (A >= B)
        A = int((math.sqrt(8.0 * abi + 1.0) - 1.0) / 2.0)
        while A * (A + 1) // 2 > abi:
            A -= 1
        while (A + 1) * (A + 2) // 2 <= abi:
            A += 1
        B = abi - A * (A + 1) // 2
        _eri_bra(A, B, abi, sh_center, sh_l, sh_f0, sh_np, sh_exp, f_pow, f_w, out)


@jit
def _eri_bra(A, B, abi, sh_center, sh_l, sh_f0, sh_np, sh_exp, f_pow, f_w, out):
    lmax = 2
    ltot_max = 4 * lmax
    eab = np.empty((3, lmax + 1, lmax + 1, 2 * lmax + 1))
    ecd = np.empty((3, lmax + 1, lmax + 1, 2 * lmax + 1))
    fbuf = np.empty(ltot_max + 1)
    rn = np.empty((ltot_max + 1, ltot_max + 1, ltot_max + 1, ltot_max + 1))
    rr = np.empty((ltot_max + 1, ltot_max + 1, ltot_max + 1))
    buf = np.empty((6, 6, 6, 6))
    ket = np.empty((6, 6, 2 * lmax + 1, 2 * lmax + 1, 2 * lmax + 1))
    la = sh_l[A]
    lb = sh_l[B]
    na = (la + 1) * (la + 2) // 2
    nbf = (lb + 1) * (lb + 2) // 2
    ca = sh_center[A]
    cb = sh_center[B]
    lab = la + lb
    for C in range(A + 1):
        dmax = C if C < A else B
        for D in range(dmax + 1):
            lc = sh_l[C]
            ld = sh_l[D]
            nc = (lc + 1) * (lc + 2) // 2
            nd = (ld + 1) * (ld + 2) // 2
            cc = sh_center[C]
            cd = sh_center[D]
            ltot = la + lb + lc + ld
            for x0 in range(na):
                for x1 in range(nbf):
                    for x2 in range(nc):
                        for x3 in range(nd):
                            buf[x0, x1, x2, x3] = 0.0
            for i in range(sh_np[A]):
                a = sh_exp[A, i]
                for j in range(sh_np[B]):
                    b = sh_exp[B, j]
                    p = a + b
                    px = (a * ca[0] + b * cb[0]) / p
                    py = (a * ca[1] + b * cb[1]) / p
                    pz = (a * ca[2] + b * cb[2]) / p
                    for d in range(3):
                        hermite_e(la, lb, a, b, ca[d] - cb[d], eab[d])
                    for k in range(sh_np[C]):
                        c = sh_exp[C, k]
                        for m in range(sh_np[D]):
                            dd = sh_exp[D, m]
                            q = c + dd
                            qx = (c * cc[0] + dd * cd[0]) / q
                            qy = (c * cc[1] + dd * cd[1]) / q
                            qz = (c * cc[2] + dd * cd[2]) / q
                            for d in range(3):
                                hermite_e(lc, ld, c, dd, cc[d] - cd[d], ecd[d])
                            alpha = p * q / (p + q)
                            hermite_r(ltot, alpha, px - qx, py - qy, pz - qz, fbuf, rn, rr)
                            pref = TWO_PI_5_2 / (p * q * math.sqrt(p + q))
                            # ket half contracted once per primitive quartet
                            for x2 in range(nc):
                                fc = sh_f0[C] + x2
                                c0 = f_pow[fc, 0]
                                c1 = f_pow[fc, 1]
                                c2 = f_pow[fc, 2]
                                for x3 in range(nd):
                                    fd = sh_f0[D] + x3
                                    d0 = f_pow[fd, 0]
                                    d1 = f_pow[fd, 1]
                                    d2 = f_pow[fd, 2]
                                    for t in range(lab + 1):
                                        for u in range(lab + 1 - t):
                                            for v in range(lab + 1 - t - u):
                                                inner = 0.0
                                                for tau in range(c0 + d0 + 1):
                                                    for nu in range(c1 + d1 + 1):
                                                        for phi in range(c2 + d2 + 1):
                                                            e2 = ecd[0, c0, d0, tau] * \
                                                                ecd[1, c1, d1, nu] * \
                                                                ecd[2, c2, d2, phi]
                                                            if (tau + nu + phi) % 2:
                                                                e2 = -e2
                                                            inner += e2 * rr[t + tau, u + nu,
                                                                             v + phi]
                                                ket[x2, x3, t, u, v] = inner
                            for x0 in range(na):
                                fa = sh_f0[A] + x0
                                a0 = f_pow[fa, 0]
                                a1 = f_pow[fa, 1]
                                a2 = f_pow[fa, 2]
                                for x1 in range(nbf):
                                    fb = sh_f0[B] + x1
                                    b0 = f_pow[fb, 0]
                                    b1 = f_pow[fb, 1]
                                    b2 = f_pow[fb, 2]
                                    wab = f_w[fa, i] * f_w[fb, j] * pref
                                    for x2 in range(nc):
                                        fc = sh_f0[C] + x2
                                        for x3 in range(nd):
                                            fd = sh_f0[D] + x3
                                            val = 0.0
                                            for t in range(a0 + b0 + 1):
                                                for u in range(a1 + b1 + 1):
                                                    for v in range(a2 + b2 + 1):
                                                        val += eab[0, a0, b0, t] * \
                                                            eab[1, a1, b1, u] * \
                                                            eab[2, a2, b2, v] * \
                                                            ket[x2, x3, t, u, v]
                                            buf[x0, x1, x2, x3] += \
                                                wab * f_w[fc, k] * f_w[fd, m] * val
            for x0 in range(na):
                fa = sh_f0[A] + x0
                for x1 in range(nbf):
                    fb = sh_f0[B] + x1
                    ij = _pair_index(fa, fb)
                    for x2 in range(nc):
                        fc = sh_f0[C] + x2
                        for x3 in range(nd):
                            fd = sh_f0[D] + x3
                            kl = _pair_index(fc, fd)
                            out[_pair_index(ij, kl)] = buf[x0, x1, x2, x3]


@jit
def jk_from_canonical(eri, n, pj, pk1, pk2):
    """Coulomb J[P_j] and exchange K[P_k1], K[P_k2] from the canonical ERI list."""
    J = np.zeros((n, n))
    K1 = np.zeros((n, n))
    K2 = np.zeros((n, n))
    idx = np.empty((8, 4), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    kl = k * (k + 1) // 2 + l
                    v = eri[ij * (ij + 1) // 2 + kl]
                    s = v
                    if i == j:
                        s *= 0.5
                    if k == l:
                        s *= 0.5
                    if ij == kl:
                        s *= 0.5
                    idx[0, 0] = i; idx[0, 1] = j; idx[0, 2] = k; idx[0, 3] = l
                    idx[1, 0] = j; idx[1, 1] = i; idx[1, 2] = k; idx[1, 3] = l
                    idx[2, 0] = i; idx[2, 1] = j; idx[2, 2] = l; idx[2, 3] = k
                    idx[3, 0] = j; idx[3, 1] = i; idx[3, 2] = l; idx[3, 3] = k
                    idx[4, 0] = k; idx[4, 1] = l; idx[4, 2] = i; idx[4, 3] = j
                    idx[5, 0] = l; idx[5, 1] = k; idx[5, 2] = i; idx[5, 3] = j
                    idx[6, 0] = k; idx[6, 1] = l; idx[6, 2] = j; idx[6, 3] = i
                    idx[7, 0] = l; idx[7, 1] = k; idx[7, 2] = j; idx[7, 3] = i
                    for r in range(8):
                        a = idx[r, 0]
                        b = idx[r, 1]
                        c = idx[r, 2]
                        d = idx[r, 3]
                        J[a, b] += s * pj[c, d]
                        K1[a, c] += s * pk1[b, d]
                        K2[a, c] += s * pk2[b, d]
    return J, K1, K2


@jit
def unpack_canonical(eri, n):
    out = np.empty((n, n, n, n))
    for i in range(n):
        for j in range(n):
            ij = _pair_index(i, j)
            for k in range(n):
                for l in range(n):
                    out[i, j, k, l] = eri[_pair_index(ij, _pair_index(k, l))]
    return out
