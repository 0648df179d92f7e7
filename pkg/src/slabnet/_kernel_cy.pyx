# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Gibbs chain kernel.

Mirrors _kernel_py draw for draw on the same bit-generator stream; see
that module for the stream contract.
"""

import numpy as np

from libc.math cimport exp, log, sqrt
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_gamma,
    random_standard_normal,
    random_standard_uniform,
)

from slabnet._kernel_py import SamplerError


cdef int _cholesky(double[:, ::1] M, double[:, ::1] L, Py_ssize_t q) noexcept:
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(q):
        s = M[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0:
            return -1
        L[j, j] = sqrt(s)
        for i in range(j + 1, q):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return 0


cdef void _solve_lower(double[:, ::1] L, double[::1] b, double[::1] x,
                       Py_ssize_t q) noexcept:
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(q):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]


cdef void _solve_upper_t(double[:, ::1] L, double[::1] b, double[::1] x,
                         Py_ssize_t q) noexcept:
    # solves L^T x = b
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(q - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, q):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]


cdef double _node_factor(Py_ssize_t j, unsigned char[::1] delta,
                         long[::1] parent_start, long[::1] parent_idx,
                         long[::1] cpt_start, double[::1] cpt) noexcept:
    cdef long row = 0
    cdef long t
    for t in range(parent_start[j], parent_start[j + 1]):
        row |= (<long> delta[parent_idx[t]]) << (t - parent_start[j])
    cdef double pj = cpt[cpt_start[j] + row]
    if delta[j]:
        return pj
    return 1.0 - pj


cdef double _mixture_mass(unsigned char[::1] delta, Py_ssize_t p,
                          Py_ssize_t n_blocks, unsigned char[:, ::1] block_member,
                          double[::1] mixing,
                          long[::1] parent_start, long[::1] parent_idx,
                          long[::1] cpt_start, double[::1] cpt) noexcept:
    cdef Py_ssize_t j, k
    cdef double prod, tot
    cdef bint ok
    if n_blocks == 0:
        prod = 1.0
        for j in range(p):
            prod *= _node_factor(j, delta, parent_start, parent_idx,
                                 cpt_start, cpt)
        return prod
    tot = 0.0
    for k in range(n_blocks):
        prod = mixing[k]
        ok = True
        for j in range(p):
            if block_member[k, j]:
                prod *= _node_factor(j, delta, parent_start, parent_idx,
                                     cpt_start, cpt)
            elif delta[j]:
                ok = False
                break
        if ok:
            tot += prod
    return tot


def run_chain_kernel(double[:, ::1] X, double[:, ::1] XtX, double[::1] Xty,
                     double[::1] y,
                     long[::1] col_node, long[::1] node_col_start,
                     long[::1] node_col_idx,
                     double[::1] sd_spike, double[::1] sd_slab,
                     double[::1] lr_const, double[::1] lr_coef,
                     long[::1] parent_start, long[::1] parent_idx,
                     long[::1] cpt_start, double[::1] cpt,
                     long[::1] child_start, long[::1] child_idx,
                     long[::1] child_pos, long[::1] topo,
                     Py_ssize_t n_blocks, unsigned char[:, ::1] block_member,
                     double[::1] mixing,
                     unsigned char[::1] w_subset, double[::1] w_table,
                     bint has_weight,
                     double nu, double lam,
                     beta0, sigma2_0, delta0,
                     rng, long iterations, long burn_in, long thin,
                     bint record_beta, bint random_scan):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t q = X.shape[1]
    cdef Py_ssize_t p = topo.shape[0]
    cdef long n_rec = (iterations - burn_in) // thin

    deltas_arr = np.empty((n_rec, p), dtype=np.uint8)
    betas_arr = np.empty((n_rec, q)) if record_beta else None
    sigma2s_arr = np.empty(n_rec) if record_beta else None
    cdef unsigned char[:, ::1] deltas = deltas_arr
    cdef double[:, ::1] betas = betas_arr if record_beta else np.empty((1, 1))
    cdef double[::1] sigma2s = sigma2s_arr if record_beta else np.empty(1)

    M_arr = np.empty((q, q))
    L_arr = np.empty((q, q))
    cdef double[:, ::1] M = M_arr
    cdef double[:, ::1] L = L_arr
    work = np.empty((4, q))
    cdef double[::1] rhs = work[0]
    cdef double[::1] half = work[1]
    cdef double[::1] mean = work[2]
    cdef double[::1] z = work[3]
    beta_arr = np.asarray(beta0, dtype=float).copy()
    cdef double[::1] beta = beta_arr
    delta_arr = np.asarray(delta0, dtype=np.uint8).copy()
    cdef unsigned char[::1] delta = delta_arr
    order_arr = np.asarray(topo, dtype=np.int64).copy()
    cdef long[::1] order = order_arr

    cdef double sigma2 = float(sigma2_0)
    cdef double gamma_shape = 0.5 * (n + nu)
    cdef long wcount = 0
    cdef Py_ssize_t i, j, k, t, jj, c, pos, rec, keep
    cdef long sweep, row, base
    cdef double s, rss, scale, g, llr, u0, u1, pi, pc0, pc1, ud, tval, et
    cdef double prob, mass
    cdef long err_sweep = 0
    cdef int err_code = 0
    cdef long tmp

    if has_weight:
        for i in range(p):
            if w_subset[i] and delta[i]:
                wcount += 1

    bg = rng.bit_generator
    capsule = bg.capsule
    cdef bitgen_t *brng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    rec = 0
    with bg.lock:
        for sweep in range(1, iterations + 1):
            # --- coefficients ---
            for i in range(q):
                for j in range(q):
                    M[i, j] = XtX[i, j] / sigma2
            for j in range(q):
                if col_node[j] >= 0 and delta[col_node[j]]:
                    M[j, j] += 1.0 / (sd_slab[j] * sd_slab[j])
                else:
                    M[j, j] += 1.0 / (sd_spike[j] * sd_spike[j])
            if _cholesky(M, L, q) != 0:
                err_code = 1
                err_sweep = sweep
                break
            for j in range(q):
                rhs[j] = Xty[j] / sigma2
            _solve_lower(L, rhs, half, q)
            _solve_upper_t(L, half, mean, q)
            for j in range(q):
                z[j] = random_standard_normal(brng)
            _solve_upper_t(L, z, half, q)
            for j in range(q):
                beta[j] = mean[j] + half[j]

            # --- noise variance ---
            rss = 0.0
            for i in range(n):
                s = y[i]
                for j in range(q):
                    s -= X[i, j] * beta[j]
                rss += s * s
            scale = 0.5 * (rss + nu * lam)
            g = random_standard_gamma(brng, gamma_shape)
            if scale <= 0.0 or g <= 0.0:
                err_code = 2
                err_sweep = sweep
                break
            sigma2 = scale / g

            # --- activation bits ---
            if random_scan:
                for i in range(p):
                    order[i] = topo[i]
                for i in range(p - 1, 0, -1):
                    j = <Py_ssize_t> (random_standard_uniform(brng) * (i + 1))
                    tmp = order[i]
                    order[i] = order[j]
                    order[j] = tmp
            for t in range(p):
                i = order[t]
                llr = 0.0
                for jj in range(node_col_start[i], node_col_start[i + 1]):
                    j = node_col_idx[jj]
                    llr += lr_const[j] + beta[j] * beta[j] * lr_coef[j]
                if n_blocks == 0:
                    row = 0
                    for jj in range(parent_start[i], parent_start[i + 1]):
                        row |= (<long> delta[parent_idx[jj]]) << (jj - parent_start[i])
                    pi = cpt[cpt_start[i] + row]
                    u0 = 1.0 - pi
                    u1 = pi
                    for jj in range(child_start[i], child_start[i + 1]):
                        c = child_idx[jj]
                        pos = child_pos[jj]
                        base = 0
                        for k in range(parent_start[c], parent_start[c + 1]):
                            if parent_idx[k] != i:
                                base |= (<long> delta[parent_idx[k]]) << (k - parent_start[c])
                        pc0 = cpt[cpt_start[c] + base]
                        pc1 = cpt[cpt_start[c] + base + (1 << pos)]
                        if delta[c]:
                            u0 *= pc0
                            u1 *= pc1
                        else:
                            u0 *= 1.0 - pc0
                            u1 *= 1.0 - pc1
                else:
                    keep = delta[i]
                    delta[i] = 0
                    u0 = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                                       parent_start, parent_idx, cpt_start, cpt)
                    delta[i] = 1
                    u1 = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                                       parent_start, parent_idx, cpt_start, cpt)
                    delta[i] = <unsigned char> keep
                if has_weight:
                    base = wcount
                    if w_subset[i] and delta[i]:
                        base -= 1
                    if w_subset[i]:
                        u0 *= w_table[base]
                        u1 *= w_table[base + 1]
                    else:
                        u0 *= w_table[base]
                        u1 *= w_table[base]
                ud = random_standard_uniform(brng)
                if u0 == 0.0 and u1 == 0.0:
                    err_code = 3
                    err_sweep = sweep
                    break
                if u1 == 0.0:
                    j = 0
                elif u0 == 0.0:
                    j = 1
                else:
                    tval = log(u1 / u0) + llr
                    if tval >= 0.0:
                        prob = 1.0 / (1.0 + exp(-tval))
                    else:
                        et = exp(tval)
                        prob = et / (1.0 + et)
                    j = 1 if ud < prob else 0
                if j != delta[i]:
                    delta[i] = <unsigned char> j
                    if has_weight and w_subset[i]:
                        wcount += 1 if j else -1
            if err_code:
                break

            mass = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                                 parent_start, parent_idx, cpt_start, cpt)
            if has_weight:
                mass *= w_table[wcount]
            if mass <= 0.0:
                err_code = 4
                err_sweep = sweep
                break

            if sweep > burn_in and (sweep - burn_in) % thin == 0:
                for i in range(p):
                    deltas[rec, i] = delta[i]
                if record_beta:
                    for j in range(q):
                        betas[rec, j] = beta[j]
                    sigma2s[rec] = sigma2
                rec += 1

    if err_code == 1:
        raise SamplerError(f"sweep {err_sweep}: coefficient precision matrix "
                           "not positive definite")
    if err_code == 2:
        raise SamplerError(f"sweep {err_sweep}: degenerate noise-variance draw")
    if err_code == 3:
        raise SamplerError(f"sweep {err_sweep}: node has zero mass for both settings")
    if err_code == 4:
        raise SamplerError(f"sweep {err_sweep}: pattern with zero prior mass")

    return deltas_arr, betas_arr, sigma2s_arr
