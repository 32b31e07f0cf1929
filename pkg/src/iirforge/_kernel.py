"""Compiled inner loop of the exhaustive coefficient search.

With ``u = b0 + b2`` and ``v = b0 - b2`` the numerator's squared magnitude
separates as ``(b1 + u c)^2 + v^2 s2`` (c = cos pi w, s2 = sin^2 pi w).  For
a fixed denominator the upper bounds confine (u, b1) to an intersection of
slabs ``|b1 + u c_i| <= h_i``; its b1-range for each u comes from two lower
envelopes of lines (built once per denominator).  Given (u, b1), every grid
point yields an interval for v^2 and the intersection is a single interval.

All bounds are widened by a relative 1e-9 so the float enumeration is a
superset of the exact feasible set; survivors are re-checked exactly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

REL = 1e-9
ABS = 1e-9


@njit(cache=True, nogil=True)
def _hull(m, k, order, hm, hk):
    # lower envelope of y = m x + k, lines visited in slope-descending order
    n = 0
    for idx in range(order.shape[0]):
        i = order[idx]
        mi = m[i]
        ki = k[i]
        if n > 0 and hm[n - 1] == mi:
            if ki >= hk[n - 1]:
                continue
            n -= 1
        while n >= 2:
            m1 = hm[n - 2]
            k1 = hk[n - 2]
            m2 = hm[n - 1]
            k2 = hk[n - 1]
            if (ki - k1) * (m1 - m2) <= (k2 - k1) * (m1 - mi):
                n -= 1
            else:
                break
        hm[n] = mi
        hk[n] = ki
        n += 1
    return n


@njit(cache=True, nogil=True)
def _b_cost_lb(b0, b1, b2, odd, sc):
    # structural adders of the numerator plus a lower bound on its MCM block
    nnz = 0
    m = 0
    f0 = 0
    f1 = 0
    f2 = 0
    if b0 != 0:
        nnz += 1
        f0 = odd[abs(b0)]
        m = max(m, sc[abs(b0)])
    if b1 != 0:
        nnz += 1
        f1 = odd[abs(b1)]
        m = max(m, sc[abs(b1)])
    if b2 != 0:
        nnz += 1
        f2 = odd[abs(b2)]
        m = max(m, sc[abs(b2)])
    distinct = 0
    if f0 > 1:
        distinct += 1
    if f1 > 1 and f1 != f0:
        distinct += 1
    if f2 > 1 and f2 != f0 and f2 != f1:
        distinct += 1
    if distinct > m:
        m = distinct
    s = nnz - 1
    if s < 0:
        s = 0
    return s + m


@njit(cache=True, nogil=True)
def scan(a_pairs, a_lb, a0, ratio, c, s2, lo2, hi2, order_desc, order_asc,
         box, sbc, odd, sc, threshold, out, cap):
    """Enumerate grid-feasible numerators for every denominator in ``a_pairs``.

    Writes rows (a_index, b0, b1, b2, cost_lb) for candidates whose cost lower
    bound is <= threshold.  Returns (count, min_lb_above, feasible_points)
    where min_lb_above is the smallest lower bound of anything left out.
    """
    n_out = 0
    n_feas = 0
    above = 1 << 30
    ng = c.shape[0]
    lo = np.empty(ng)
    hi = np.empty(ng)
    h = np.empty(ng)
    negc = -c
    hm1 = np.empty(ng)
    hk1 = np.empty(ng)
    hm2 = np.empty(ng)
    hk2 = np.empty(ng)
    lo0 = box[0, 0]
    hi0 = box[0, 1]
    lo1 = box[1, 0]
    hi1 = box[1, 1]
    lo2b = box[2, 0]
    hi2b = box[2, 1]
    ulo = lo0 + lo2b
    uhi = hi0 + hi2b
    if sbc and ulo < 0:
        ulo = 0
    for ia in range(a_pairs.shape[0]):
        if a_lb[ia] > threshold:
            if a_lb[ia] < above:
                above = a_lb[ia]
            continue
        budget = threshold - a_lb[ia]
        a1 = a_pairs[ia, 0]
        a2 = a_pairs[ia, 1]
        for i in range(ng):
            t = a1 + (a0 + a2) * c[i]
            q = t * t + (a0 - a2) * (a0 - a2) * s2[i]
            hi[i] = hi2[i] * ratio * q * (1 + REL) + ABS
            lo[i] = lo2[i] * ratio * q * (1 - REL) - ABS
            h[i] = math.sqrt(hi[i])
        # U(u) = min_i h_i - c_i u ; -L(u) = min_i h_i + c_i u
        n1 = _hull(negc, h, order_asc, hm1, hk1)
        n2 = _hull(c, h, order_desc, hm2, hk2)
        p1 = 0
        p2 = 0
        seen = False
        for u in range(ulo, uhi + 1):
            while p1 + 1 < n1 and hm1[p1 + 1] * u + hk1[p1 + 1] <= hm1[p1] * u + hk1[p1]:
                p1 += 1
            while p2 + 1 < n2 and hm2[p2 + 1] * u + hk2[p2 + 1] <= hm2[p2] * u + hk2[p2]:
                p2 += 1
            U = hm1[p1] * u + hk1[p1]
            L = -(hm2[p2] * u + hk2[p2])
            if L > U:
                if seen:
                    break  # the feasible u-range is an interval (U - L is concave)
                continue
            seen = True
            L1 = int(math.ceil(L))
            U1 = int(math.floor(U))
            if L1 < lo1:
                L1 = lo1
            if U1 > hi1:
                U1 = hi1
            for b1 in range(L1, U1 + 1):
                vlo = 0.0
                vhi = 1e300
                ok = True
                for i in range(ng):
                    t = b1 + u * c[i]
                    t2 = t * t
                    if s2[i] <= 1e-15:
                        if t2 > hi[i] or t2 < lo[i]:
                            ok = False
                            break
                        continue
                    x = (hi[i] - t2) / s2[i]
                    if x < vhi:
                        vhi = x
                    y = (lo[i] - t2) / s2[i]
                    if y > vlo:
                        vlo = y
                    if vlo > vhi:
                        ok = False
                        break
                if not ok:
                    continue
                vl = int(math.ceil(math.sqrt(vlo)))
                vh = int(math.floor(math.sqrt(vhi))) if vhi < 1e299 else hi0 - lo2b
                if (vl - u) % 2 != 0:
                    vl += 1
                for v in range(vl, vh + 1, 2):
                    for sg in (1, -1):
                        if sg == -1 and (sbc or v == 0):
                            break
                        vv = sg * v
                        b0 = (u + vv) // 2
                        b2 = (u - vv) // 2
                        if b0 < lo0 or b0 > hi0 or b2 < lo2b or b2 > hi2b:
                            continue
                        n_feas += 1
                        lb = _b_cost_lb(b0, b1, b2, odd, sc)
                        if lb > budget:
                            if a_lb[ia] + lb < above:
                                above = a_lb[ia] + lb
                            continue
                        if n_out < cap:
                            out[n_out, 0] = ia
                            out[n_out, 1] = b0
                            out[n_out, 2] = b1
                            out[n_out, 3] = b2
                            out[n_out, 4] = a_lb[ia] + lb
                        n_out += 1
    return n_out, above, n_feas
