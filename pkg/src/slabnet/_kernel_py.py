"""Pure-python Gibbs chain kernel (fallback for the compiled extension).

Both kernels implement the identical algorithm and consume the identical
random stream: per sweep, q standard normals (coefficients), one standard
gamma (noise variance), optionally p-1 uniforms (random scan shuffle) and
exactly one uniform per node (activation bits, consumed even when the
conditional is degenerate).  Given the same Generator state they produce
the same chains up to floating-point rounding of the linear algebra.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular


class SamplerError(RuntimeError):
    pass


def _local_masses(i, delta, parent_start, parent_idx, cpt_start, cpt,
                  child_start, child_idx, child_pos):
    """Unnormalized prior masses of bit i's two settings, common factors
    cancelled (valid without competing blocks)."""
    row = 0
    for t in range(parent_start[i], parent_start[i + 1]):
        row |= int(delta[parent_idx[t]]) << (t - parent_start[i])
    pi = cpt[cpt_start[i] + row]
    u0 = 1.0 - pi
    u1 = pi
    for t in range(child_start[i], child_start[i + 1]):
        c = child_idx[t]
        pos = child_pos[t]
        base = 0
        for tt in range(parent_start[c], parent_start[c + 1]):
            pj = parent_idx[tt]
            if pj != i:
                base |= int(delta[pj]) << (tt - parent_start[c])
        pc0 = cpt[cpt_start[c] + base]
        pc1 = cpt[cpt_start[c] + base + (1 << pos)]
        if delta[c]:
            u0 *= pc0
            u1 *= pc1
        else:
            u0 *= 1.0 - pc0
            u1 *= 1.0 - pc1
    return u0, u1


def _mixture_mass(delta, p, n_blocks, block_member, mixing,
                  parent_start, parent_idx, cpt_start, cpt):
    """Full (unweighted) prior mass of the current pattern."""
    if n_blocks == 0:
        prod = 1.0
        for j in range(p):
            row = 0
            for t in range(parent_start[j], parent_start[j + 1]):
                row |= int(delta[parent_idx[t]]) << (t - parent_start[j])
            pj = cpt[cpt_start[j] + row]
            prod *= pj if delta[j] else 1.0 - pj
        return prod
    tot = 0.0
    for k in range(n_blocks):
        prod = mixing[k]
        ok = True
        for j in range(p):
            if block_member[k, j]:
                row = 0
                for t in range(parent_start[j], parent_start[j + 1]):
                    row |= int(delta[parent_idx[t]]) << (t - parent_start[j])
                pj = cpt[cpt_start[j] + row]
                prod *= pj if delta[j] else 1.0 - pj
            elif delta[j]:
                ok = False
                break
        if ok:
            tot += prod
    return tot


def run_chain_kernel(X, XtX, Xty, y,
                     col_node, node_col_start, node_col_idx,
                     sd_spike, sd_slab, lr_const, lr_coef,
                     parent_start, parent_idx, cpt_start, cpt,
                     child_start, child_idx, child_pos, topo,
                     n_blocks, block_member, mixing,
                     w_subset, w_table, has_weight,
                     nu, lam,
                     beta0, sigma2_0, delta0,
                     rng, iterations, burn_in, thin,
                     record_beta, random_scan):
    n, q = X.shape
    p = delta0.size
    n_rec = (iterations - burn_in) // thin
    deltas = np.empty((n_rec, p), dtype=np.uint8)
    betas = np.empty((n_rec, q)) if record_beta else None
    sigma2s = np.empty(n_rec) if record_beta else None

    delta = delta0.copy()
    beta = beta0.copy()
    sigma2 = float(sigma2_0)
    wcount = int(delta[w_subset.astype(bool)].sum()) if has_weight else 0
    gamma_shape = 0.5 * (n + nu)
    col_safe = np.where(col_node >= 0, col_node, 0)
    inv2_spike = 1.0 / sd_spike ** 2
    inv2_slab = 1.0 / sd_slab ** 2
    rec = 0

    for sweep in range(1, iterations + 1):
        # coefficients: N(mean, M^-1), M = X'X/sigma2 + D^-2
        active = delta[col_safe] == 1
        dinv2 = np.where(active & (col_node >= 0), inv2_slab, inv2_spike)
        M = XtX / sigma2
        M[np.diag_indices(q)] += dinv2
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise SamplerError(f"sweep {sweep}: coefficient precision matrix "
                               "not positive definite")
        half = solve_triangular(L, Xty / sigma2, lower=True)
        mean = solve_triangular(L.T, half, lower=False)
        z = rng.standard_normal(q)
        beta = mean + solve_triangular(L.T, z, lower=False)

        # noise variance: InverseGamma((n+nu)/2, (rss + nu*lam)/2)
        r = y - X @ beta
        rss = float(r @ r)
        scale = 0.5 * (rss + nu * lam)
        g = float(rng.standard_gamma(gamma_shape))
        if scale <= 0.0 or g <= 0.0:
            raise SamplerError(f"sweep {sweep}: degenerate noise-variance draw "
                               f"(rss={rss!r})")
        sigma2 = scale / g

        # activation bits, parents-first (optionally shuffled)
        if random_scan:
            order = topo.copy()
            for i in range(p - 1, 0, -1):
                j = int(rng.random() * (i + 1))
                order[i], order[j] = order[j], order[i]
        else:
            order = topo
        for t in range(p):
            i = int(order[t])
            llr = 0.0
            for jj in range(node_col_start[i], node_col_start[i + 1]):
                j = node_col_idx[jj]
                llr += lr_const[j] + beta[j] * beta[j] * lr_coef[j]
            if n_blocks == 0:
                u0, u1 = _local_masses(i, delta, parent_start, parent_idx,
                                       cpt_start, cpt, child_start,
                                       child_idx, child_pos)
            else:
                keep = delta[i]
                delta[i] = 0
                u0 = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                                   parent_start, parent_idx, cpt_start, cpt)
                delta[i] = 1
                u1 = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                                   parent_start, parent_idx, cpt_start, cpt)
                delta[i] = keep
            if has_weight:
                base = wcount - (int(delta[i]) if w_subset[i] else 0)
                if w_subset[i]:
                    u0 *= w_table[base]
                    u1 *= w_table[base + 1]
                else:
                    u0 *= w_table[base]
                    u1 *= w_table[base]
            ud = rng.random()  # always consumed, even for degenerate bits
            if u0 == 0.0 and u1 == 0.0:
                raise SamplerError(f"sweep {sweep}: node {i} has zero mass "
                                   "for both settings")
            if u1 == 0.0:
                newbit = 0
            elif u0 == 0.0:
                newbit = 1
            else:
                tval = math.log(u1 / u0) + llr
                if tval >= 0.0:
                    prob = 1.0 / (1.0 + math.exp(-tval))
                else:
                    et = math.exp(tval)
                    prob = et / (1.0 + et)
                newbit = 1 if ud < prob else 0
            if newbit != delta[i]:
                delta[i] = newbit
                if has_weight and w_subset[i]:
                    wcount += 1 if newbit else -1

        # the chain must never sit on a zero-mass pattern
        mass = _mixture_mass(delta, p, n_blocks, block_member, mixing,
                             parent_start, parent_idx, cpt_start, cpt)
        if has_weight:
            mass *= w_table[wcount]
        if mass <= 0.0:
            raise SamplerError(f"sweep {sweep}: pattern with zero prior mass")

        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            deltas[rec] = delta
            if record_beta:
                betas[rec] = beta
                sigma2s[rec] = sigma2
            rec += 1

    return deltas, betas, sigma2s
