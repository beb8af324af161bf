"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with numba (``*_nb``) and a
vectorised numpy version (``*_np``). The public name is bound to one of them
at import time according to :mod:`mamcast._accel`. Both variants are always
importable so that tests and the benchmark can compare them directly.
"""
from itertools import combinations
from math import comb

import numpy as np

from mamcast._accel import njit, pick

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# field-response gain table
# ---------------------------------------------------------------------------


@njit(cache=True)
def gain_table_nb(points, gains, rho, wavelength):
    m_pts = points.shape[0]
    n_users, n_paths = gains.shape
    out = np.zeros((m_pts, n_users), dtype=np.complex128)
    k0 = TWO_PI / wavelength
    for m in range(m_pts):
        x = points[m, 0]
        y = points[m, 1]
        for k in range(n_users):
            acc = 0.0 + 0.0j
            for ell in range(n_paths):
                phase = k0 * (x * rho[k, ell, 0] + y * rho[k, ell, 1])
                acc += gains[k, ell] * (np.cos(phase) + 1j * np.sin(phase))
            out[m, k] = acc
    return out


def gain_table_np(points, gains, rho, wavelength):
    # (M, K, L) phase array
    phase = (TWO_PI / wavelength) * np.einsum("md,kld->mkl", points, rho)
    return np.einsum("kl,mkl->mk", gains, np.exp(1j * phase))


# ---------------------------------------------------------------------------
# max-min of affine functions over a Euclidean ball
# ---------------------------------------------------------------------------
#
# maximise  min_k (A[k] @ x - b[k])  s.t.  ||x||^2 <= power
#
# At the optimum x lies on the sphere and in the cone of the active rows, so
# x = A_S^T nu with G_S nu = b_S + r 1. Enumerating linearly independent
# active sets S and keeping the best primal-feasible candidate is exact.


@njit(cache=True)
def maxmin_ball_nb(A, b, power):
    n_rows, dim = A.shape
    gram = A @ A.T
    bscale = 0.0
    for k in range(n_rows):
        bscale = max(bscale, abs(b[k]))
    best_r = -np.inf
    best_x = np.zeros(dim)
    best_nu = np.zeros(n_rows)
    found = False
    idx = np.empty(n_rows, dtype=np.int64)
    for mask in range(1, 1 << n_rows):
        s = 0
        for k in range(n_rows):
            if (mask >> k) & 1:
                idx[s] = k
                s += 1
        if s > dim:
            continue
        g = np.empty((s, s))
        bs = np.empty(s)
        for i in range(s):
            bs[i] = b[idx[i]]
            for j in range(s):
                g[i, j] = gram[idx[i], idx[j]]
        evals, evecs = np.linalg.eigh(g)
        if evals[0] <= 1e-12 * evals[s - 1]:
            continue
        u = evecs @ ((evecs.T @ np.ones(s)) / evals)
        v = evecs @ ((evecs.T @ bs) / evals)
        qa = u.sum()
        qb = v.sum()
        qc = bs @ v - power
        disc = qb * qb - qa * qc
        if disc < 0.0:
            continue
        r = (-qb + np.sqrt(disc)) / qa
        if r <= best_r:
            continue
        nu = v + r * u
        x = np.zeros(dim)
        for i in range(s):
            x += nu[i] * A[idx[i]]
        vals = A @ x - b
        tol = 1e-10 * (abs(r) + bscale)
        if vals.min() < r - tol:
            continue
        best_r = r
        best_x = x
        best_nu[:] = 0.0
        for i in range(s):
            best_nu[idx[i]] = nu[i]
        found = True
    return best_x, best_nu, found


def maxmin_ball_np(A, b, power):
    n_rows, dim = A.shape
    gram = A @ A.T
    bscale = np.abs(b).max() if n_rows else 0.0
    best_r, best_x, best_nu, found = -np.inf, np.zeros(dim), np.zeros(n_rows), False
    for s in range(1, min(n_rows, dim) + 1):
        subsets = np.array(list(combinations(range(n_rows), s)))
        g = gram[subsets[:, :, None], subsets[:, None, :]]
        bs = b[subsets]
        evals = np.linalg.eigvalsh(g)
        ok = evals[:, 0] > 1e-12 * evals[:, -1]
        if not ok.any():
            continue
        subsets, g, bs = subsets[ok], g[ok], bs[ok]
        rhs = np.stack([np.ones_like(bs), bs], axis=-1)
        sol = np.linalg.solve(g, rhs)
        u, v = sol[..., 0], sol[..., 1]
        qa, qb = u.sum(1), v.sum(1)
        qc = np.einsum("ps,ps->p", bs, v) - power
        disc = qb * qb - qa * qc
        with np.errstate(invalid="ignore"):
            r = (-qb + np.sqrt(disc)) / qa
        nu = v + r[:, None] * u
        x = np.einsum("ps,psd->pd", nu, A[subsets])
        vals = x @ A.T - b
        tol = 1e-10 * (np.abs(r) + bscale)
        feas = (disc >= 0.0) & (vals.min(1) >= r - tol)
        if not feas.any():
            continue
        # first maximiser keeps the enumeration order deterministic
        cand = np.where(feas, r, -np.inf)
        p = int(np.argmax(cand))
        if cand[p] > best_r:
            best_r = cand[p]
            best_x = x[p]
            best_nu = np.zeros(n_rows)
            best_nu[subsets[p]] = nu[p]
            found = True
    return best_x, best_nu, found


# ---------------------------------------------------------------------------
# single-antenna position scan
# ---------------------------------------------------------------------------


@njit(cache=True)
def position_scan_nb(table, placement, w, n):
    """Return (best index, best min-SNR, min-SNR at the current position)."""
    m_pts, n_users = table.shape
    base = np.zeros(n_users, dtype=np.complex128)
    occupied = np.zeros(m_pts, dtype=np.bool_)
    for i in range(placement.shape[0]):
        if i == n:
            continue
        occupied[placement[i]] = True
        for k in range(n_users):
            base[k] += np.conj(table[placement[i], k]) * w[i]
    best_m = -1
    best_val = -np.inf
    current = 0.0
    for m in range(m_pts):
        if occupied[m]:
            continue
        val = np.inf
        for k in range(n_users):
            z = base[k] + np.conj(table[m, k]) * w[n]
            val = min(val, z.real * z.real + z.imag * z.imag)
        if m == placement[n]:
            current = val
        if val > best_val:
            best_val = val
            best_m = m
    return best_m, best_val, current


def position_scan_np(table, placement, w, n):
    keep = np.arange(placement.shape[0]) != n
    others = placement[keep]
    base = np.conj(table[others]).T @ w[keep] if others.size else np.zeros(table.shape[1], complex)
    z = base[None, :] + np.conj(table) * w[n]
    vals = (z.real * z.real + z.imag * z.imag).min(axis=1)
    vals[others] = -np.inf
    best = int(np.argmax(vals))
    return best, float(vals[best]), float(vals[placement[n]])


# ---------------------------------------------------------------------------
# two-user closed-form rate and greedy selection
# ---------------------------------------------------------------------------


@njit(cache=True)
def two_user_snr(a1, a2, c):
    """Optimal two-user min-SNR from alpha1, alpha2 and |alpha12|."""
    slack = 1e-12 * max(a1, a2)
    if a1 <= c + slack:
        return a1
    if a2 <= c + slack:
        return a2
    return (a1 * a2 - c * c) / (a1 + a2 - 2.0 * c)


GREEDY_TIE = 1e-12


@njit(cache=True)
def greedy_two_user_nb(h1, h2, n_select):
    """Greedy order; ties within GREEDY_TIE (relative) go to the lowest index."""
    m_pts = h1.shape[0]
    chosen = np.zeros(m_pts, dtype=np.bool_)
    order = np.empty(n_select, dtype=np.int64)
    snr = np.empty(m_pts)
    a1 = 0.0
    a2 = 0.0
    a12 = 0.0 + 0.0j
    evaluated = 0
    for step in range(n_select):
        top = -np.inf
        for j in range(m_pts):
            if chosen[j]:
                snr[j] = -np.inf
                continue
            evaluated += 1
            b12 = a12 + np.conj(h1[j]) * h2[j]
            snr[j] = two_user_snr(a1 + abs(h1[j]) ** 2, a2 + abs(h2[j]) ** 2, abs(b12))
            if snr[j] > top:
                top = snr[j]
        best_j = -1
        for j in range(m_pts):
            if not chosen[j] and snr[j] >= top - GREEDY_TIE * abs(top):
                best_j = j
                break
        chosen[best_j] = True
        order[step] = best_j
        a1 += abs(h1[best_j]) ** 2
        a2 += abs(h2[best_j]) ** 2
        a12 += np.conj(h1[best_j]) * h2[best_j]
    return order, evaluated


def _two_user_snr_vec(a1, a2, c):
    slack = 1e-12 * np.maximum(a1, a2)
    denom = a1 + a2 - 2.0 * c
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (a1 * a2 - c * c) / denom
    return np.where(a1 <= c + slack, a1, np.where(a2 <= c + slack, a2, interior))


def greedy_two_user_np(h1, h2, n_select):
    m_pts = h1.shape[0]
    chosen = np.zeros(m_pts, dtype=bool)
    order = np.empty(n_select, dtype=np.int64)
    e1, e2, x12 = np.abs(h1) ** 2, np.abs(h2) ** 2, np.conj(h1) * h2
    a1 = a2 = 0.0
    a12 = 0j
    evaluated = 0
    for step in range(n_select):
        snr = _two_user_snr_vec(a1 + e1, a2 + e2, np.abs(a12 + x12))
        snr[chosen] = -np.inf
        evaluated += m_pts - step
        top = snr.max()
        j = int(np.flatnonzero(snr >= top - GREEDY_TIE * abs(top))[0])
        chosen[j] = True
        order[step] = j
        a1, a2, a12 = a1 + e1[j], a2 + e2[j], a12 + x12[j]
    return order, evaluated


# ---------------------------------------------------------------------------
# LoS branch-and-bound over the combination tree
# ---------------------------------------------------------------------------


@njit(cache=True)
def _top_sum(values, start, count):
    if count <= 0:
        return 0.0
    tail = np.sort(values[start:])
    total = 0.0
    for i in range(count):
        total += tail[tail.shape[0] - 1 - i]
    return total


@njit(cache=True)
def bab_nb(Q, n_select, X, Y, Z, use_bound, best0):
    """Best-first depth-first search; returns (selection, best shifted score, visited)."""
    m_pts = Q.shape[0]
    depth_cap = n_select
    kids = np.zeros((depth_cap, m_pts), dtype=np.int64)
    scores = np.zeros((depth_cap, m_pts))
    count = np.zeros(depth_cap, dtype=np.int64)
    ptr = np.zeros(depth_cap, dtype=np.int64)
    qa = np.zeros((depth_cap + 1, m_pts))
    fbar = np.zeros(depth_cap + 1)
    sel = np.zeros(depth_cap, dtype=np.int64)
    best_sel = np.full(depth_cap, -1, dtype=np.int64)
    best = best0
    visited = 0

    n = 0
    last = -1
    expand = True
    while True:
        if expand:
            expand = False
            lo = last + 1
            hi = m_pts - n_select + n
            cnt = hi - lo + 1
            c = np.empty(cnt)
            for i in range(cnt):
                k = lo + i
                c[i] = fbar[n] + 2.0 * qa[n, k] - 2.0 * X + Q[k, k] - Y
            visited += cnt
            if n == n_select - 1:
                i_best = 0
                for i in range(1, cnt):
                    if c[i] > c[i_best]:
                        i_best = i
                if c[i_best] > best:
                    best = c[i_best]
                    for d in range(n):
                        best_sel[d] = sel[d]
                    best_sel[n] = lo + i_best
                # leaf level done: backtrack
                n -= 1
            else:
                order = np.argsort(-c, kind="mergesort")
                for i in range(cnt):
                    kids[n, i] = lo + order[i]
                    scores[n, i] = c[order[i]]
                count[n] = cnt
                ptr[n] = 0
        if n < 0:
            break
        i = ptr[n]
        if i >= count[n] or not scores[n, i] > best:
            n -= 1
            if n < 0:
                break
            continue
        ptr[n] = i + 1
        k = kids[n, i]
        for j in range(m_pts):
            qa[n + 1, j] = qa[n, j] + Q[k, j]
        if use_bound:
            rest = n_select - n - 1
            ub = (scores[n, i] + 2.0 * _top_sum(qa[n + 1], k + 1, rest)
                  + rest * (rest - 1) * Z - 2.0 * rest * X)
            if not ub > best:
                continue
        sel[n] = k
        fbar[n + 1] = scores[n, i]
        last = k
        n += 1
        expand = True
    return best_sel, best, visited


def bab_np(Q, n_select, X, Y, Z, use_bound, best0):
    m_pts = Q.shape[0]
    diag = np.diag(Q).copy()
    state = {"best": best0, "sel": [-1] * n_select, "visited": 0}

    def visit(n, fbar, last, qa, sel):
        ks = np.arange(last + 1, m_pts - n_select + n + 1)
        c = fbar + 2.0 * qa[ks] - 2.0 * X + diag[ks] - Y
        state["visited"] += ks.size
        if n == n_select - 1:
            i = int(np.argmax(c))
            if c[i] > state["best"]:
                state["best"] = float(c[i])
                state["sel"] = sel + [int(ks[i])]
            return
        for i in np.argsort(-c, kind="mergesort"):
            if not c[i] > state["best"]:
                break
            k = int(ks[i])
            qa_next = qa + Q[k]
            if use_bound:
                rest = n_select - n - 1
                top = np.sort(qa_next[k + 1:])[::-1][:rest].sum()
                ub = c[i] + 2.0 * top + rest * (rest - 1) * Z - 2.0 * rest * X
                if not ub > state["best"]:
                    continue
            visit(n + 1, float(c[i]), k, qa_next, sel + [k])

    visit(0, 0.0, -1, np.zeros(m_pts), [])
    return np.array(state["sel"], dtype=np.int64), state["best"], state["visited"]


# ---------------------------------------------------------------------------
# exhaustive enumeration of |sum_{m in S} g_m|^2
# ---------------------------------------------------------------------------


@njit(cache=True)
def exhaustive_nb(g, n_select):
    m_pts = g.shape[0]
    idx = np.arange(n_select)
    best = -np.inf
    best_idx = idx.copy()
    evaluated = 0
    while True:
        acc = 0.0 + 0.0j
        for i in range(n_select):
            acc += g[idx[i]]
        val = acc.real * acc.real + acc.imag * acc.imag
        evaluated += 1
        if val > best:
            best = val
            best_idx[:] = idx
        # next combination in lexicographic order
        i = n_select - 1
        while i >= 0 and idx[i] == m_pts - n_select + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, n_select):
            idx[j] = idx[j - 1] + 1
    return best_idx, best, evaluated


def exhaustive_np(g, n_select, chunk=65536):
    it = combinations(range(g.shape[0]), n_select)
    best, best_idx, evaluated = -np.inf, None, 0
    while True:
        block = np.fromiter(
            (i for c in _take(it, chunk) for i in c), dtype=np.int64
        ).reshape(-1, n_select)
        if block.size == 0:
            break
        s = g[block].sum(axis=1)
        vals = s.real * s.real + s.imag * s.imag
        p = int(np.argmax(vals))
        evaluated += block.shape[0]
        if vals[p] > best:
            best, best_idx = float(vals[p]), block[p].copy()
    return best_idx, best, evaluated


def _take(it, n):
    for _, item in zip(range(n), it):
        yield item


def full_tree_nodes(m_pts, n_select):
    """Node count of the combination tree explored without any pruning."""
    return sum(comb(m_pts - n_select + n, n) for n in range(1, n_select + 1))


gain_table = pick(gain_table_nb, gain_table_np)
maxmin_ball = pick(maxmin_ball_nb, maxmin_ball_np)
position_scan = pick(position_scan_nb, position_scan_np)
greedy_two_user = pick(greedy_two_user_nb, greedy_two_user_np)
bab = pick(bab_nb, bab_np)
exhaustive = pick(exhaustive_nb, exhaustive_np)
