"""Independent reference implementations used only by the tests.

They share no code with the package: everything is recomputed from first
principles with the most direct (and slow) formulation available.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


# -- MCM: breadth-first enumeration of fundamental sets ----------------------

def _odd_part(m: int) -> int:
    while m and m % 2 == 0:
        m //= 2
    return m


def one_adder(u: int, v: int, cap: int) -> set[int]:
    """Every odd |(u << i) +- (v << j)| with its trailing zeros removed, below cap."""
    bits = cap.bit_length() + 1
    out = set()
    for i in range(bits):
        for j in range(bits):
            if i and j:
                continue  # a common shift only moves zeros into the result
            for s in (1, -1):
                x = _odd_part(abs((u << i) + s * (v << j)))
                if 0 < x < cap:
                    out.add(x)
    return out


def closure(S: frozenset[int], cap: int) -> set[int]:
    out = set()
    for u, v in itertools.combinations_with_replacement(sorted(S), 2):
        out |= one_adder(u, v, cap)
    return out - S


def bfs_levels(cap: int, depth: int) -> list[set[frozenset[int]]]:
    """levels[k] = every set of odd values reachable from {1} with exactly k adders."""
    levels = [{frozenset({1})}]
    for _ in range(depth):
        nxt = set()
        for S in levels[-1]:
            for x in closure(S, cap):
                nxt.add(S | {x})
        levels.append(nxt)
    return levels


def single_costs(max_value: int, cap: int) -> dict[int, int | None]:
    """Adder cost of each odd value <= max_value, exact up to 3 (None means >= 4)."""
    levels = bfs_levels(cap, 2)
    best: dict[int, int] = {1: 0}
    for k, lev in enumerate(levels):
        for S in lev:
            for x in S:
                best.setdefault(x, k)
    for S in levels[2]:
        for x in closure(S, cap):
            best.setdefault(x, 3)
    return {t: best.get(t) for t in range(1, max_value + 1, 2)}


def pair_costs(max_value: int, cap: int) -> dict[tuple[int, int], int | None]:
    """Cost of covering two odd values, exact up to 4 adders (None means >= 5).

    A 4-adder cover of {x, y} that is not already a 3-adder cover must add
    one of them last, so level 4 only needs closures of level-3 sets.
    """
    levels = bfs_levels(cap, 3)
    best: dict[tuple[int, int], int] = {}
    for k, lev in enumerate(levels):
        for S in lev:
            vals = sorted(x for x in S if x <= max_value)
            for x, y in itertools.combinations_with_replacement(vals, 2):
                best.setdefault((x, y), k)
    small_cap = min(cap, max_value + 1)
    for S in levels[3]:
        vals = [x for x in S if x <= max_value]
        if not vals:
            continue
        for y in closure(S, small_cap):
            for x in vals:
                best.setdefault((min(x, y), max(x, y)), 4)
    odd = range(1, max_value + 1, 2)
    return {(x, y): best.get((x, y)) for x in odd for y in odd if x <= y}


def min_signed_digits(c: int) -> int:
    """Fewest nonzero digits over every signed-binary representation of c."""
    n = abs(c).bit_length() + 1
    best = None
    for digits in itertools.product((-1, 0, 1), repeat=n):
        if sum(d << i for i, d in enumerate(digits)) == c:
            w = sum(1 for d in digits if d)
            best = w if best is None else min(best, w)
    return best


# -- exact rational filter helpers -------------------------------------------

def impulse_abs_sum(a1: Fraction, a2: Fraction, n: int) -> Fraction:
    """sum_{k<n} |h_k| for h = impulse response of 1/(1 + a1 z^-1 + a2 z^-2)."""
    h1, h2 = Fraction(0), Fraction(0)
    total = Fraction(0)
    for k in range(n):
        h = (1 if k == 0 else 0) - a1 * h1 - a2 * h2
        total += abs(h)
        h2, h1 = h1, h
    return total


def reference_filter(b, a, xs):
    """Direct difference equation with exact rationals."""
    b0, b1, b2 = (Fraction(v) for v in b)
    a1, a2 = (Fraction(v) for v in a)
    x1 = x2 = y1 = y2 = Fraction(0)
    out = []
    for x in xs:
        x = Fraction(x)
        y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2
        out.append(y)
        x2, x1, y2, y1 = x1, x, y1, y
    return out


def mp_reference(b, a, xs, prec: int = 256):
    """Difference equation in mpmath at ``prec`` bits; for sequences too long for Fractions.

    Returns mpf outputs; the accumulated rounding error is about n * W * 2^-prec.
    """
    import mpmath

    ctx = mpmath.MPContext()
    ctx.prec = prec
    b0, b1, b2 = (ctx.mpf(Fraction(v).numerator) / Fraction(v).denominator for v in b)
    a1, a2 = (ctx.mpf(Fraction(v).numerator) / Fraction(v).denominator for v in a)
    x1 = x2 = y1 = y2 = ctx.mpf(0)
    out = []
    for x in xs:
        x = ctx.mpf(Fraction(x).numerator) / Fraction(x).denominator
        y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2
        out.append(y)
        x2, x1, y2, y1 = x1, x, y1, y
    return out, ctx


# -- adder graphs from their serialized form ---------------------------------

def eval_graph(d: dict) -> tuple[list[int], dict[int, int]]:
    """Recompute node values and target constants from ``AdderGraph.to_dict()`` output.

    Node rows are [value, left, right, left_shift, right_shift, sign, out_shift]
    with -1 naming the input; targets are [constant, [node, shift, sign] | None].
    """
    vals: list[int] = []

    def get(i):
        return 1 if i == -1 else vals[i]

    for _, l, r, ls, rs, sg, out in d["nodes"]:
        raw = (get(l) << ls) + sg * (get(r) << rs)
        assert raw > 0 and raw % (1 << out) == 0, "bad adder node"
        vals.append(raw >> out)
    targets = {}
    for c, ref in d["targets"]:
        targets[c] = 0 if ref is None else ref[2] * (get(ref[0]) << ref[1])
    return vals, targets


# -- exhaustive design space ---------------------------------------------------

def brute_feasible(points, w: int, g_a_values, g_b_values) -> set[tuple]:
    """Every (g_a, g_b, a1, a2, b0, b1, b2) satisfying all grid constraints.

    ``points`` holds (cos(pi w), beta_lo^2, beta_hi^2) as Fractions.  A float
    screen with a wide margin is followed by exact rational checks of every
    candidate near a bound.  Stability is tested on the real coefficients.
    """
    import numpy as np

    R = range(-(1 << (w - 1)), 1 << (w - 1))
    B = np.array(list(itertools.product(R, R, R)), dtype=float)
    c = np.array([float(p[0]) for p in points])
    lo2 = np.array([float(p[1]) for p in points])
    hi2 = np.array([float(p[2]) for p in points])
    qb = ((B ** 2).sum(1)[:, None] + 2 * (B[:, 0] * B[:, 1] + B[:, 1] * B[:, 2])[:, None] * c
          + 2 * (B[:, 0] * B[:, 2])[:, None] * (2 * c * c - 1))

    def qf(v0, v1, v2, cc):
        return v0 * v0 + v1 * v1 + v2 * v2 + 2 * (v0 * v1 + v1 * v2) * cc + 2 * v0 * v2 * (2 * cc * cc - 1)

    out = set()
    for ga in g_a_values:
        sa = Fraction(2) ** (ga - w + 1)
        for a1, a2 in itertools.product(R, R):
            x1, x2 = a1 * sa, a2 * sa
            if not (-2 < x1 < 2 and abs(x1) - 1 < x2 < 1):
                continue
            qa = qf(1.0, float(x1), float(x2), c)
            for gb in g_b_values:
                sb2 = float(Fraction(2) ** (2 * (gb - w + 1)))
                # coarse pass on every 16th frequency, full pass on the survivors
                sub = slice(None, None, 16)
                v = qb[:, sub] * sb2
                keep = np.nonzero(((v <= hi2[sub] * qa[sub] * (1 + 1e-6) + 1e-9)
                                   & (v >= lo2[sub] * qa[sub] * (1 - 1e-6) - 1e-9)).all(1))[0]
                val = qb[keep] * sb2
                up, low = hi2 * qa, lo2 * qa
                tol = 1e-7 * (up + 1)
                sure_bad = (val > up + tol) | (val < low - tol)
                maybe = keep[np.nonzero(~sure_bad.any(1))[0]]
                sb = Fraction(2) ** (gb - w + 1)
                for i in maybe:
                    row = qb[i] * sb2
                    b = [int(v) for v in B[i]]
                    bb = [v * sb for v in b]
                    ok = True
                    for j in np.nonzero((np.abs(row - up) <= tol) | (np.abs(row - low) <= tol))[0]:
                        cc, l2, h2 = points[j]
                        e_a = qf(Fraction(1), x1, x2, cc)
                        e_b = qf(*bb, cc)
                        if not (l2 * e_a <= e_b <= h2 * e_a):
                            ok = False
                            break
                    if ok:
                        out.add((ga, gb, a1, a2, *b))
    return out


def set_cost(values, levels) -> int:
    """Fewest adders realizing every constant, from BFS ``levels``."""
    need = {_odd_part(abs(v)) for v in values if v}
    need.discard(1)
    for k, lev in enumerate(levels):
        if any(need <= S for S in lev):
            return k
    raise ValueError("cost beyond the enumerated depth")


def brute_cost(row, levels) -> int:
    _, _, a1, a2, b0, b1, b2 = row
    nb = sum(1 for v in (b0, b1, b2) if v)
    structural = max(nb - 1, 0) + sum(1 for v in (a1, a2) if v)
    return structural + set_cost((a1, a2), levels) + set_cost((b0, b1, b2), levels)
