"""Numba-compiled hot loops: butterfly transform, CRC division, SCL decoding.

Everything here works on 0-based natural bit order; callers own the 1-based
public indexing and the bit-reversal bookkeeping.
"""

import numpy as np
from numba import njit

# Path-metric increments beyond this LLR magnitude are below double resolution.
LLR_MAX = 40.0


@njit(cache=True, nogil=True)
def butterfly(u):
    """In-place polar transform x = u * F^{(x)n} over GF(2), natural order."""
    n_bits = u.shape[0]
    d = 1
    while d < n_bits:
        for i in range(0, n_bits, 2 * d):
            for j in range(i, i + d):
                u[j] ^= u[j + d]
        d *= 2


@njit(cache=True, nogil=True)
def bitrev_permutation(n_bits):
    n = 0
    while (1 << n) < n_bits:
        n += 1
    perm = np.empty(n_bits, dtype=np.int64)
    for i in range(n_bits):
        r = 0
        for b in range(n):
            r = (r << 1) | ((i >> b) & 1)
        perm[i] = r
    return perm


@njit(cache=True, nogil=True)
def crc_remainder(bits, poly, width, init):
    """Remainder of bits (MSB-first) divided by the generator polynomial."""
    top = 1 << width
    mask = top - 1
    reg = init & mask
    for i in range(bits.shape[0]):
        reg = ((reg << 1) | bits[i]) & (top | mask)
        if reg & top:
            reg ^= top | poly
    # flush `width` zero bits
    for _ in range(width):
        reg = (reg << 1) & (top | mask)
        if reg & top:
            reg ^= top | poly
    return reg & mask


@njit(cache=True, nogil=True)
def crc_passes(bits, poly, width, init):
    """True iff the trailing `width` bits are the CRC of the leading payload."""
    top = 1 << width
    mask = top - 1
    reg = init & mask
    n = bits.shape[0] - width
    for i in range(n):
        reg = ((reg << 1) | bits[i]) & (top | mask)
        if reg & top:
            reg ^= top | poly
    for i in range(n, bits.shape[0]):
        reg = (reg << 1) & (top | mask)
        if reg & top:
            reg ^= top | poly
        reg ^= bits[i]
    return (reg & mask) == 0


@njit(cache=True, nogil=True, inline="always")
def _softplus(x):
    # ln(1 + e^x), stable
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True, nogil=True, inline="always")
def _boxplus(a, b):
    # exact check-node LLR: 2*atanh(tanh(a/2)*tanh(b/2)), computed in ln domain;
    # correction terms below double resolution (arg > 37) are skipped
    s = 1.0
    if a < 0.0:
        s = -s
        a = -a
    if b < 0.0:
        s = -s
        b = -b
    m = a if a < b else b
    v = a + b
    if v < 37.0:
        m += np.log1p(np.exp(-v))
    v = a - b if a > b else b - a
    if v < 37.0:
        m -= np.log1p(np.exp(-v))
    return s * m


@njit(cache=True, nogil=True, inline="always")
def _minsum(a, b):
    s = 1.0
    if a < 0.0:
        s = -s
        a = -a
    if b < 0.0:
        s = -s
        b = -b
    return s * (a if a < b else b)


@njit(cache=True, nogil=True)
def _stable_argsort(values, count, order):
    """Insertion-sort argsort of values[:count]; equal keys keep index order."""
    for i in range(count):
        order[i] = i
    for i in range(1, count):
        c = order[i]
        v = values[c]
        j = i - 1
        while j >= 0 and values[order[j]] > v:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = c


@njit(cache=True, nogil=True)
def _refresh_paths(wave, llr_tree, uhat, psum, slot_of_rank, active,
                   p, n, n_bits, exact_f):
    """Recompute, for every live path, the LLR wavefront levels leaf p needs.

    Level l (1..n) lives at wave[slot, n_bits - (n_bits >> (l - 1)) : ...]
    with n_bits >> l entries; level 0 is the shared channel vector llr_tree.
    """
    if p == 0:
        start_level = 1
    else:
        t = 0
        while (p >> t) & 1 == 0:
            t += 1
        g_level = n - t
        half = 1 << t
        out_off = n_bits - (n_bits >> (g_level - 1))
        in_off = 0 if g_level == 1 else n_bits - (n_bits >> (g_level - 2))
        for r in range(active):
            s = slot_of_rank[r]
            # partial sums of the decided left-sibling block
            for j in range(half):
                psum[j] = uhat[s, p - half + j]
            d = 1
            while d < half:
                for i in range(0, half, 2 * d):
                    for j in range(i, i + d):
                        psum[j] ^= psum[j + d]
                d *= 2
            if g_level == 1:
                for j in range(half):
                    a = llr_tree[j]
                    b = llr_tree[half + j]
                    wave[s, out_off + j] = b - a if psum[j] else b + a
            else:
                for j in range(half):
                    a = wave[s, in_off + j]
                    b = wave[s, in_off + half + j]
                    wave[s, out_off + j] = b - a if psum[j] else b + a
        start_level = g_level + 1
    for level in range(start_level, n + 1):
        size = n_bits >> level
        out_off = n_bits - (n_bits >> (level - 1))
        in_off = 0 if level == 1 else n_bits - (n_bits >> (level - 2))
        if level == 1:
            for r in range(active):
                s = slot_of_rank[r]
                if exact_f:
                    for j in range(size):
                        wave[s, j] = _boxplus(llr_tree[j], llr_tree[size + j])
                else:
                    for j in range(size):
                        wave[s, j] = _minsum(llr_tree[j], llr_tree[size + j])
        elif exact_f:
            for r in range(active):
                s = slot_of_rank[r]
                for j in range(size):
                    wave[s, out_off + j] = _boxplus(wave[s, in_off + j],
                                                    wave[s, in_off + size + j])
        else:
            for r in range(active):
                s = slot_of_rank[r]
                for j in range(size):
                    wave[s, out_off + j] = _minsum(wave[s, in_off + j],
                                                   wave[s, in_off + size + j])


@njit(cache=True, nogil=True)
def scl_kernel(llr_tree, frozen, list_size, flip_leaf, exact_f,
               uhat_out, pm_out,
               tr_decision, tr_parent, tr_dllr, tr_pm, tr_pminfo,
               tr_pmdisc, tr_active):
    """LLR-domain SCL with full candidate tracing.

    flip_leaf: 0-based leaf at which the selection keeps the L worst
    candidates instead of the L best (-1 for a plain run).  Trace rows are
    filled per information leaf, reserved paths in ascending-metric order.
    Returns the number of live paths (== list_size once the list has filled).
    """
    n_bits = llr_tree.shape[0]
    n = 0
    while (1 << n) < n_bits:
        n += 1
    L = list_size
    wave = np.empty((L, n_bits - 1 if n_bits > 1 else 1), dtype=np.float64)
    uhat = np.zeros((L, n_bits), dtype=np.uint8)
    psum = np.empty(max(n_bits // 2, 1), dtype=np.uint8)
    slot_of_rank = np.empty(L, dtype=np.int32)
    new_slot_of_rank = np.empty(L, dtype=np.int32)
    pm = np.zeros(L, dtype=np.float64)
    pm_info = np.zeros(L, dtype=np.float64)
    new_pm = np.empty(L, dtype=np.float64)
    new_pm_info = np.empty(L, dtype=np.float64)
    cand_pm = np.empty(2 * L, dtype=np.float64)
    order = np.empty(2 * L, dtype=np.int64)
    survivors_of_slot = np.zeros(L, dtype=np.int32)
    slot_in_use = np.zeros(L, dtype=np.uint8)
    free_slots = np.empty(L, dtype=np.int32)
    dec_llr = np.empty(L, dtype=np.float64)

    slot_of_rank[0] = 0
    active = 1
    dec_off = n_bits - (n_bits >> (n - 1)) if n_bits > 1 else 0
    k = 0  # information-leaf counter

    for p in range(n_bits):
        if n_bits == 1:
            for r in range(active):
                dec_llr[r] = llr_tree[0]
        else:
            _refresh_paths(wave, llr_tree, uhat, psum, slot_of_rank, active,
                           p, n, n_bits, exact_f)
            for r in range(active):
                dec_llr[r] = wave[slot_of_rank[r], dec_off]
        if frozen[p]:
            for r in range(active):
                uhat[slot_of_rank[r], p] = 0
                pm[r] += _softplus(-dec_llr[r])
            continue

        # information leaf: every live path forks on the decision bit;
        # candidate c = 2*parent_rank + bit, so a stable sort breaks metric
        # ties by (parent rank, bit).
        n_cand = 2 * active
        for r in range(active):
            cand_pm[2 * r] = pm[r] + _softplus(-dec_llr[r])
            cand_pm[2 * r + 1] = pm[r] + _softplus(dec_llr[r])
        _stable_argsort(cand_pm, n_cand, order)

        if n_cand <= L:
            keep = n_cand
            has_discard = False
        else:
            keep = L
            has_discard = True
            if p == flip_leaf:
                # retry from the would-be-discarded half
                for i in range(L):
                    tmp = order[i]
                    order[i] = order[L + i]
                    order[L + i] = tmp

        for s in range(L):
            survivors_of_slot[s] = 0
            slot_in_use[s] = 0
        for r in range(active):
            slot_in_use[slot_of_rank[r]] = 1
        for i in range(keep):
            survivors_of_slot[slot_of_rank[order[i] >> 1]] += 1
        n_free = 0
        for s in range(L):
            if slot_in_use[s] == 0 or survivors_of_slot[s] == 0:
                free_slots[n_free] = s
                n_free += 1

        for i in range(keep):
            c = order[i]
            parent = c >> 1
            bit = c & 1
            ps = slot_of_rank[parent]
            if survivors_of_slot[ps] == 1:
                dst = ps
            else:
                survivors_of_slot[ps] -= 1
                n_free -= 1
                dst = free_slots[n_free]
                wave[dst, :] = wave[ps, :]
                uhat[dst, :] = uhat[ps, :]
            new_slot_of_rank[i] = dst
            new_pm[i] = cand_pm[c]
            inc = cand_pm[c] - pm[parent]
            new_pm_info[i] = pm_info[parent] + inc
            tr_decision[k, i] = bit
            tr_parent[k, i] = parent
            tr_dllr[k, i] = dec_llr[parent]
            tr_pm[k, i] = cand_pm[c]
            tr_pminfo[k, i] = new_pm_info[i]
        for i in range(keep):
            c = order[i]
            uhat[new_slot_of_rank[i], p] = c & 1
            slot_of_rank[i] = new_slot_of_rank[i]
            pm[i] = new_pm[i]
            pm_info[i] = new_pm_info[i]
        if has_discard:
            for i in range(L):
                tr_pmdisc[k, i] = cand_pm[order[L + i]]
        tr_active[k] = keep
        active = keep
        k += 1

    # final ranking by metric (frozen tail may have reordered paths)
    _stable_argsort(pm, active, order)
    for i in range(active):
        r = order[i]
        pm_out[i] = pm[r]
        uhat_out[i, :] = uhat[slot_of_rank[r], :]
    return active
