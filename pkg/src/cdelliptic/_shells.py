"""Compiled lattice traversals.

The integer coefficient box [-R, R]^n is walked in a fixed order and every
term is added, with Kahan compensation, to an accumulator indexed by
(chunk, shell, point) for zeta and wp_tau, or (chunk, shell, group) for wp_n.  The shell of c is max|c_h|; a chunk is a fixed slice
of the first coefficient, so the per-chunk partial sums do not depend on how
many threads ran them.  The caller reduces chunks and shells in order.

With pairing, only one representative of each pair {c, -c} is visited and the
two terms are grouped (q(z + w) + q(z - w) - 2 q(w) and the like).  The
origin is never visited; the caller adds the w = 0 term.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, fastmath=True, error_model="numpy")
def _ipow(N, m):
    r = 1.0
    for _ in range(m):
        r *= N
    return r


@njit(cache=True, fastmath=True, error_model="numpy")
def _q0(x, m, out):
    n = x.shape[0]
    N = 0.0
    for j in range(n):
        N += x[j] * x[j]
    a = 1.0 / _ipow(N, m)
    out[0] = x[0] * a
    for j in range(1, n):
        out[j] = -x[j] * a
    return N


@njit(cache=True, fastmath=True, error_model="numpy")
def _qtau_all(x, m, out):
    """out[i-1, :] = d q0 / d x_i (x) for i = 1..n-1."""
    n = x.shape[0]
    N = 0.0
    for j in range(n):
        N += x[j] * x[j]
    a = 1.0 / _ipow(N, m)
    b = -2.0 * m * a / N
    for i in range(1, n):
        bi = b * x[i]
        out[i - 1, 0] = bi * x[0]
        for c in range(1, n):
            out[i - 1, c] = -bi * x[c]
        out[i - 1, i] -= a
    return N


@njit(cache=True, fastmath=True, error_model="numpy")
def _qn(x, m, tvars, tcomp, tcoef, out):
    n = x.shape[0]
    N = 0.0
    for j in range(n):
        N += x[j] * x[j]
        out[j] = 0.0
    for t in range(tcomp.shape[0]):
        p = tcoef[t]
        for d in range(tvars.shape[1]):
            v = tvars[t, d]
            if v >= 0:
                p *= x[v]
        out[tcomp[t]] += p
    s = 1.0 / _ipow(N, m)
    for j in range(n):
        out[j] *= s
    return N


@njit(cache=True)
def _decode(t, c0, R, base, c):
    """Fill c with the box vector for chunk c0 and flat index t; returns the shell."""
    n = c.shape[0]
    c[0] = c0
    shell = abs(c0)
    rem = t
    for h in range(n - 1, 0, -1):
        d = rem % base - R
        rem //= base
        c[h] = d
        if abs(d) > shell:
            shell = abs(d)
    return shell


@njit(cache=True)
def _omega(c, W, w):
    n = W.shape[0]
    for j in range(n):
        s = 0.0
        for h in range(n):
            if c[h] != 0:
                s += c[h] * W[h, j]
        w[j] = s


@njit(cache=True)
def _kahan_vec(a, k, v):
    """a += v elementwise with compensation k (a, k, v of equal length)."""
    for p in range(v.shape[0]):
        y = v[p] - k[p]
        t = a[p] + y
        k[p] = (t - a[p]) - y
        a[p] = t


@njit(cache=True)
def _kahan_flat(a, k, v):
    _kahan_vec(a.reshape(-1), k.reshape(-1), v.reshape(-1))


@njit(cache=True, fastmath=True)
def _shifted(ptsT, w, sgn, x, N, s, m):
    """x = z + sgn w for every point (columns), N = |x|^2, s = N^-m."""
    n, P = ptsT.shape
    for p in range(P):
        N[p] = 0.0
    for l in range(n):
        wl = sgn * w[l]
        for p in range(P):
            v = ptsT[l, p] + wl
            x[l, p] = v
            N[p] += v * v
    for p in range(P):
        s[p] = 1.0
    for _ in range(m):
        for p in range(P):
            s[p] *= N[p]
    for p in range(P):
        s[p] = 1.0 / s[p]


@njit(cache=True)
def _next_prefix(c, R):
    """Odometer step over c[1..n-2] in lexicographic order."""
    h = c.shape[0] - 2
    while h >= 1:
        if c[h] < R:
            c[h] += 1
            return
        c[h] = -R
        h -= 1


@njit(cache=True)
def _prefix_state(c, W, wpre):
    """Partial sum over h < n-1 of c_h W[h], in the same order as a full sum."""
    n = W.shape[0]
    shell = 0
    for j in range(n):
        wpre[j] = 0.0
    for h in range(n - 1):
        if abs(c[h]) > shell:
            shell = abs(c[h])
        if c[h] != 0:
            for j in range(n):
                wpre[j] += c[h] * W[h, j]
    return shell


# Each traversal walks the box run by run: a run fixes c_0..c_{n-2} and lets
# the last coefficient d go from -R to R.  Terms are first added plainly into a
# per-shell buffer and the buffer is added with Kahan compensation at the end
# of the run, so the order of operations for a shell does not depend on R.


# no fastmath: contracting the +w and -w terms into one fma would break the
# exact oddness of the paired sum
@njit(cache=True)
def _zeta_terms(ptsT, w, pairing, m, x, N, s, v):
    """v = q0(z + w) (+ q0(z - w)) per point; returns min N."""
    n, P = ptsT.shape
    _shifted(ptsT, w, 1.0, x, N, s, m)
    lo = 1e300
    for p in range(P):
        lo = min(lo, N[p])
        v[0, p] = x[0, p] * s[p]
    for l in range(1, n):
        for p in range(P):
            v[l, p] = -x[l, p] * s[p]
    if pairing:
        _shifted(ptsT, w, -1.0, x, N, s, m)
        for p in range(P):
            lo = min(lo, N[p])
            v[0, p] += x[0, p] * s[p]
        for l in range(1, n):
            for p in range(P):
                v[l, p] -= x[l, p] * s[p]
    return lo


@njit(cache=True, parallel=True, error_model="numpy")
def zeta_shells(W, ptsT, R, pairing, m, shared):
    """Shell sums for zeta, split into a per-point part and a shared part.

    Per point (acc): sum of q0(z + w) (+ q0(z - w) with pairing).
    Shared (sacc, only if `shared`): rows 0..n-2 sum q_j(w), row n-1 sums
    q0(w) (without pairing).  The caller adds the correction terms.
    """
    n, P = ptsT.shape
    base = 2 * R + 1
    c0_lo = 0 if pairing else -R
    nch = R - c0_lo + 1
    npre = base ** (n - 2)
    acc = np.zeros((nch, R + 1, n, P))
    cmp = np.zeros((nch, R + 1, n, P))
    sacc = np.zeros((nch, R + 1, n, n))
    scmp = np.zeros((nch, R + 1, n, n))
    minN = np.full(nch, np.inf)
    for ch in prange(nch):
        c0 = c0_lo + ch
        c = np.full(n, -R, dtype=np.int64)
        c[0] = c0
        wpre = np.empty(n)
        w = np.empty(n)
        qs = np.zeros((n, n))
        x = np.empty((n, P))
        N = np.empty(P)
        s = np.empty(P)
        v = np.empty((n, P))
        buf = np.zeros((R + 1, n, P))
        sbuf = np.zeros((R + 1, n, n))
        lo = 1e300
        for pre in range(npre):
            if pre > 0:
                _next_prefix(c, R)
            srest = _prefix_state(c, W, wpre)
            # with c_0 = 0 and pairing, only the lexicographically positive half is visited
            lead = 0
            if c0 == 0:
                for h in range(1, n - 1):
                    if c[h] != 0:
                        lead = 1 if c[h] > 0 else -1
                        break
            if pairing and lead < 0:
                continue
            for sh in range(srest, R + 1):
                buf[sh, :, :] = 0.0
                sbuf[sh, :, :] = 0.0
            for d in range(-R, R + 1):
                if c0 == 0 and lead == 0 and (d == 0 or (pairing and d < 0)):
                    continue
                shell = max(srest, abs(d))
                for j in range(n):
                    w[j] = wpre[j] + d * W[n - 1, j]
                lo = min(lo, _zeta_terms(ptsT, w, pairing, m, x, N, s, v))
                b = buf[shell]
                for l in range(n):
                    for p in range(P):
                        b[l, p] += v[l, p]
                if shared:
                    _qtau_all(w, m, qs[: n - 1])
                    if not pairing:
                        _q0(w, m, qs[n - 1])
                    sb = sbuf[shell]
                    for r in range(n):
                        for l in range(n):
                            sb[r, l] += qs[r, l]
            for sh in range(srest, R + 1):
                _kahan_flat(acc[ch, sh], cmp[ch, sh], buf[sh])
                if shared:
                    _kahan_flat(sacc[ch, sh], scmp[ch, sh], sbuf[sh])
        minN[ch] = lo
    return acc, cmp, sacc, scmp, minN


@njit(cache=True, fastmath=True)
def _wp_terms(ptsT, w, pairing, m, I, J, x, y, x2, y2, N, s, v):
    """Compact wp terms per point: v[e] = b x_I x_J summed over z +- w, v[-1] = a."""
    n, P = ptsT.shape
    E = I.shape[0] + 1
    _shifted(ptsT, w, 1.0, x, N, s, m)
    lo = 1e300
    for p in range(P):
        lo = min(lo, N[p])
        v[E - 1, p] = s[p]
        s[p] = -2.0 * m * s[p] / N[p]
    for l in range(n):
        for p in range(P):
            y[l, p] = s[p] * x[l, p]
    if pairing:
        _shifted(ptsT, w, -1.0, x2, N, s, m)
        for p in range(P):
            lo = min(lo, N[p])
            v[E - 1, p] += s[p]
            s[p] = -2.0 * m * s[p] / N[p]
        for l in range(n):
            for p in range(P):
                y2[l, p] = s[p] * x2[l, p]
        for e in range(E - 1):
            a_, b_ = I[e], J[e]
            for p in range(P):
                v[e, p] = y[a_, p] * x[b_, p] + y2[a_, p] * x2[b_, p]
    else:
        for e in range(E - 1):
            a_, b_ = I[e], J[e]
            for p in range(P):
                v[e, p] = y[a_, p] * x[b_, p]
    return lo


@njit(cache=True, parallel=True, error_model="numpy")
def wp_tau_shells(W, ptsT, R, pairing, m, I, J, shared):
    """Shell sums for all wp_i at once in the compact form q_i = b x_i conj(x) - a e_i.

    Per point (acc): rows e < len(I) sum b x_I x_J over z + w (and z - w),
    the last row sums a = N^-m.  Shared (sacc, only if `shared`): the same
    quantities at w.
    """
    n, P = ptsT.shape
    E = I.shape[0] + 1
    base = 2 * R + 1
    c0_lo = 0 if pairing else -R
    nch = R - c0_lo + 1
    npre = base ** (n - 2)
    acc = np.zeros((nch, R + 1, E, P))
    cmp = np.zeros((nch, R + 1, E, P))
    sacc = np.zeros((nch, R + 1, E))
    scmp = np.zeros((nch, R + 1, E))
    minN = np.full(nch, np.inf)
    for ch in prange(nch):
        c0 = c0_lo + ch
        c = np.full(n, -R, dtype=np.int64)
        c[0] = c0
        wpre = np.empty(n)
        w = np.empty(n)
        x = np.empty((n, P))
        y = np.empty((n, P))
        x2 = np.empty((n, P))
        y2 = np.empty((n, P))
        N = np.empty(P)
        s = np.empty(P)
        v = np.empty((E, P))
        buf = np.zeros((R + 1, E, P))
        sbuf = np.zeros((R + 1, E))
        lo = 1e300
        for pre in range(npre):
            if pre > 0:
                _next_prefix(c, R)
            srest = _prefix_state(c, W, wpre)
            lead = 0
            if c0 == 0:
                for h in range(1, n - 1):
                    if c[h] != 0:
                        lead = 1 if c[h] > 0 else -1
                        break
            if pairing and lead < 0:
                continue
            for sh in range(srest, R + 1):
                buf[sh, :, :] = 0.0
                sbuf[sh, :] = 0.0
            for d in range(-R, R + 1):
                if c0 == 0 and lead == 0 and (d == 0 or (pairing and d < 0)):
                    continue
                shell = max(srest, abs(d))
                for j in range(n):
                    w[j] = wpre[j] + d * W[n - 1, j]
                lo = min(lo, _wp_terms(ptsT, w, pairing, m, I, J, x, y, x2, y2, N, s, v))
                b = buf[shell]
                for e in range(E):
                    for p in range(P):
                        b[e, p] += v[e, p]
                if shared:
                    Nw = 0.0
                    for l in range(n):
                        Nw += w[l] * w[l]
                    aw = 1.0 / _ipow(Nw, m)
                    bw = -2.0 * m * aw / Nw
                    sb = sbuf[shell]
                    for e in range(E - 1):
                        sb[e] += bw * w[I[e]] * w[J[e]]
                    sb[E - 1] += aw
            for sh in range(srest, R + 1):
                _kahan_flat(acc[ch, sh], cmp[ch, sh], buf[sh])
                if shared:
                    _kahan_vec(sacc[ch, sh], scmp[ch, sh], sbuf[sh])
        minN[ch] = lo
    return acc, cmp, sacc, scmp, minN


@njit(cache=True, parallel=True, error_model="numpy")
def wp_n_shells(W, pts, groups, ngroups, R, pairing, m, tvars, tcomp, tcoef):
    """Shell sums of q_n(z+w) over w != 0 for one symbolic kernel q_n."""
    n = W.shape[0]
    P = pts.shape[0]
    base = 2 * R + 1
    c0_lo = 0 if pairing else -R
    nch = R - c0_lo + 1
    rest = base ** (n - 1)
    center = (rest - 1) // 2
    acc = np.zeros((nch, R + 1, ngroups, n))
    cmp = np.zeros((nch, R + 1, ngroups, n))
    minN = np.full(nch, np.inf)
    for ch in prange(nch):
        c0 = c0_lo + ch
        c = np.zeros(n, dtype=np.int64)
        w = np.empty(n)
        x = np.empty(n)
        qa = np.empty(n)
        qb = np.empty(n)
        tmp = np.empty((ngroups, n))
        a = acc[ch]
        k = cmp[ch]
        lo = 1e300
        for t in range(rest):
            if c0 == 0:
                if t == center or (pairing and t < center):
                    continue
            shell = _decode(t, c0, R, base, c)
            _omega(c, W, w)
            tmp[:, :] = 0.0
            for p in range(P):
                g = groups[p]
                for l in range(n):
                    x[l] = pts[p, l] + w[l]
                Na = _qn(x, m, tvars, tcomp, tcoef, qa)
                if Na < lo:
                    lo = Na
                if pairing:
                    for l in range(n):
                        x[l] = pts[p, l] - w[l]
                    Nb = _qn(x, m, tvars, tcomp, tcoef, qb)
                    if Nb < lo:
                        lo = Nb
                    for l in range(n):
                        tmp[g, l] += qa[l] + qb[l]
                else:
                    for l in range(n):
                        tmp[g, l] += qa[l]
            for g in range(ngroups):
                for l in range(n):
                    vy = tmp[g, l] - k[shell, g, l]
                    vt = a[shell, g, l] + vy
                    k[shell, g, l] = (vt - a[shell, g, l]) - vy
                    a[shell, g, l] = vt
        minN[ch] = lo
    return acc, cmp, minN
