"""Exact joint design of coefficients and their shift-and-add cost.

The cost of a TDF-II section is ``A_total = A_M + A_S``: the adders of the
two multiplier blocks (one MCM over the numerator constants, one over the
denominator constants) plus the structural adders that sum the taps.

The optimizer is exhaustive.  For each MSB pair (g_a, g_b) it scans every
stable denominator and, through the compiled kernel, every numerator that
satisfies the discretized magnitude bounds.  Candidates are filtered by a
cost lower bound that rises pass by pass (iterative deepening); only those
survivors get an exact grid check and exact MCM costs.  A pass at threshold
T returns every design whose lower bound is <= T, so once the cheapest exact
cost found is <= T nothing cheaper (or equally cheap) can have been missed.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import _kernel
from .bounds import BBox, b_bounds, default_g_b_range, stable_pairs
from .filterspec import FrequencyGrid, FrequencySpec, append_frequency, discretize
from .fixedpoint import CoefficientFormat, QuantizedFilter
from .mcm import DEFAULT_CAP, AdderGraph, mcm_cost, odd_fundamental, solve_mcm
from .response import Counterexample, Verified, check_grid, verify_spec

OPTIMAL, INFEASIBLE, TIMED_OUT = "Optimal", "Infeasible", "TimedOut"
DEFAULT_G_A_RANGE = (-1, 1)
DEFAULT_TIME_LIMIT = 600.0
_CHUNK = 8192
_INF = 1 << 30


def default_threads() -> int:
    env = os.environ.get("IIRFORGE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class DesignProblem:
    spec: FrequencySpec
    grid: FrequencyGrid
    w: int
    g_b_range: tuple[int, int] | None = None
    g_a_range: tuple[int, int] = DEFAULT_G_A_RANGE
    use_sbc: bool = True
    mcm_cap: int = DEFAULT_CAP
    time_limit: float = DEFAULT_TIME_LIMIT
    threads: int | None = None
    boxes: dict | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.w < 2:
            raise ValueError("word length must be >= 2")
        if len(self.grid) == 0:
            raise ValueError("empty frequency grid")
        if self.g_b_range is None:
            object.__setattr__(self, "g_b_range", default_g_b_range(self.bbox))
        lo, hi = self.g_b_range
        if lo > hi:
            raise ValueError(f"empty g_b range {self.g_b_range}")
        if lo < -self.w or hi > self.bbox.g_b:
            raise ValueError(f"g_b range {self.g_b_range} outside [{-self.w}, {self.bbox.g_b}]")
        if self.g_a_range[0] > self.g_a_range[1] or self.g_a_range[1] > 1:
            raise ValueError(f"bad g_a range {self.g_a_range}")

    @property
    def bbox(self) -> BBox:
        box = self.__dict__.get("_bbox")
        if box is None:
            box = b_bounds(self.spec, self.grid)
            object.__setattr__(self, "_bbox", box)
        return box

    def integer_box(self, g_b: int) -> tuple[tuple[int, int], ...]:
        if self.boxes is not None and g_b in self.boxes:
            return self.boxes[g_b]
        return self.bbox.integer_box(self.w, g_b)


def make_problem(spec: FrequencySpec, w: int, points_per_band: int = 300, **kw) -> DesignProblem:
    return DesignProblem(spec, discretize(spec, points_per_band), w, **kw)


@dataclass
class DesignResult:
    status: str
    filter: QuantizedFilter | None = None
    graph_a: AdderGraph | None = None
    graph_b: AdderGraph | None = None
    A_M: int | None = None
    A_S: int | None = None
    A_total: int | None = None
    zeros: tuple[bool, ...] | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"status": self.status, "A_M": self.A_M, "A_S": self.A_S, "A_total": self.A_total,
             "stats": self.stats}
        if self.filter is not None:
            d["filter"] = self.filter.to_dict()
            d["zeros"] = dict(zip(("a1", "a2", "b0", "b1", "b2"), self.zeros))
            d["graph_a"] = self.graph_a.to_dict()
            d["graph_b"] = self.graph_b.to_dict()
        return d


# -- small structural helpers -------------------------------------------------

def structural_adders(q: QuantizedFilter) -> int:
    nb = sum(1 for c in q.b_int if c)
    na = sum(1 for c in q.a_int if c)
    return max(nb - 1, 0) + na


def sbc_region(b0: int, b1: int, b2: int) -> bool:
    return b0 >= abs(b2)


def symmetric_orbit(b0: int, b1: int, b2: int) -> set[tuple[int, int, int]]:
    return {(b0, b1, b2), (-b0, -b1, -b2), (b2, b1, b0), (-b2, -b1, -b0)}


def _tie_key(q: QuantizedFilter, total: int):
    ints = q.a_int + q.b_int
    zeros = sum(1 for c in ints if c == 0)
    return (total, -zeros, sum(abs(c) for c in ints), ints, q.fmt_a.g, q.fmt_b.g)


# -- kernel plumbing ----------------------------------------------------------

def _cost_tables(w: int, cap: int):
    """odd part and exact single-constant adder cost for every |c| <= 2^(w-1)."""
    n = (1 << (w - 1)) + 1
    odd = np.zeros(n, dtype=np.int64)
    sc = np.zeros(n, dtype=np.int64)
    for m in range(1, n):
        odd[m] = odd_fundamental(m).odd
        c = mcm_cost([m], cap)
        sc[m] = c if c is not None else cap + 1
    return odd, sc


def _a_lower_bounds(pairs: np.ndarray, odd: np.ndarray, sc: np.ndarray) -> np.ndarray:
    a1, a2 = np.abs(pairs[:, 0]), np.abs(pairs[:, 1])
    nnz = (a1 != 0).astype(np.int64) + (a2 != 0)
    f1, f2 = odd[a1], odd[a2]
    distinct = (f1 > 1).astype(np.int64) + ((f2 > 1) & (f2 != f1))
    return nnz + np.maximum(np.maximum(sc[a1], sc[a2]), distinct)


@dataclass
class _Block:
    g_a: int
    g_b: int
    pairs: np.ndarray
    a_lb: np.ndarray
    box: np.ndarray


class _Engine:
    def __init__(self, p: DesignProblem, use_sbc: bool | None = None):
        self.p = p
        self.sbc = p.use_sbc if use_sbc is None else use_sbc
        arr = p.grid.arrays
        # a fixed shuffle makes early exits on violated points likely
        perm = np.random.RandomState(0).permutation(len(p.grid))
        self.c = np.ascontiguousarray(arr["c"][perm])
        self.s2 = np.ascontiguousarray(arr["s2"][perm])
        self.lo2 = np.ascontiguousarray(arr["lo2"][perm])
        self.hi2 = np.ascontiguousarray(arr["hi2"][perm])
        self.order_asc = np.argsort(self.c, kind="stable").astype(np.int64)
        self.order_desc = np.ascontiguousarray(self.order_asc[::-1])
        self.odd, self.sc = _cost_tables(p.w, p.mcm_cap)
        self.blocks: list[_Block] = []
        for g_a in range(p.g_a_range[0], p.g_a_range[1] + 1):
            pairs = stable_pairs(p.w, g_a)
            a_lb = _a_lower_bounds(pairs, self.odd, self.sc)
            order = np.lexsort((pairs[:, 1], pairs[:, 0], a_lb))
            pairs, a_lb = pairs[order], a_lb[order]
            for g_b in range(p.g_b_range[0], p.g_b_range[1] + 1):
                box = np.array(p.integer_box(g_b), dtype=np.int64)
                if np.any(box[:, 0] > box[:, 1]):
                    continue
                for s in range(0, len(pairs), _CHUNK):
                    self.blocks.append(_Block(g_a, g_b, pairs[s:s + _CHUNK], a_lb[s:s + _CHUNK], box))
        self.threads = p.threads or default_threads()

    def _run_block(self, blk: _Block, threshold: int):
        a0 = float(2.0 ** (self.p.w - 1 - blk.g_a))
        ratio = float(2.0 ** (2 * (blk.g_a - blk.g_b)))
        cap = 4096
        while True:
            out = np.empty((cap, 5), dtype=np.int64)
            n, above, feas = _kernel.scan(
                blk.pairs, blk.a_lb, a0, ratio, self.c, self.s2, self.lo2, self.hi2,
                self.order_desc, self.order_asc, blk.box, self.sbc, self.odd, self.sc,
                threshold, out, cap)
            if n <= cap:
                return out[:n], above, feas
            cap = n

    def scan(self, threshold: int, deadline: float | None = None):
        """Run every block at ``threshold``; yields (block, rows, above, feasible)."""
        def job(blk):
            if deadline is not None and time.monotonic() > deadline:
                return blk, None, _INF, 0
            return (blk,) + self._run_block(blk, threshold)

        if self.threads > 1 and len(self.blocks) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                yield from ex.map(job, self.blocks)
        else:
            for blk in self.blocks:
                yield job(blk)

    def filter_of(self, blk: _Block, row) -> QuantizedFilter:
        w = self.p.w
        ia, b0, b1, b2 = (int(x) for x in row[:4])
        a1, a2 = (int(x) for x in blk.pairs[ia])
        return QuantizedFilter(a1, a2, b0, b1, b2, CoefficientFormat(w, blk.g_a), CoefficientFormat(w, blk.g_b))


def enumerate_feasible(p: DesignProblem, use_sbc: bool | None = None) -> Iterator[QuantizedFilter]:
    """Every coefficient set satisfying the grid exactly, over all (g_a, g_b)."""
    eng = _Engine(p, use_sbc)
    for blk, rows, _, _ in eng.scan(_INF - 1):
        for row in rows:
            q = eng.filter_of(blk, row)
            if check_grid(q, p.grid) is None:
                yield q


# -- the optimizer ------------------------------------------------------------

def _exact_cost(q: QuantizedFilter, cap: int) -> int | None:
    ca = mcm_cost(q.a_int, cap)
    cb = mcm_cost(q.b_int, cap)
    if ca is None or cb is None:
        return None
    return structural_adders(q) + ca + cb


def _result(q: QuantizedFilter, status: str, cap: int, stats: dict) -> DesignResult:
    ga = solve_mcm(q.a_int, cap)
    gb = solve_mcm(q.b_int, cap)
    a_m = len(ga.nodes) + len(gb.nodes)
    a_s = structural_adders(q)
    zeros = tuple(c == 0 for c in q.a_int + q.b_int)
    return DesignResult(status, q, ga, gb, a_m, a_s, a_m + a_s, zeros, stats)


def solve(p: DesignProblem) -> DesignResult:
    """Globally minimal A_total over the problem's word length and MSB ranges."""
    t0 = time.monotonic()
    deadline = t0 + p.time_limit if p.time_limit else None
    eng = _Engine(p)
    stats = {"passes": 0, "thresholds": [], "candidates": 0, "exact_checks": 0,
             "feasible_points": 0, "grid_points": len(p.grid), "use_sbc": eng.sbc,
             "g_a_range": list(p.g_a_range), "g_b_range": list(p.g_b_range)}
    seen: dict[tuple, int | None] = {}
    best_key = None
    best_q = None
    min_lb = min((int(b.a_lb.min()) for b in eng.blocks if len(b.a_lb)), default=0)
    threshold = min_lb
    timed_out = False
    while True:
        stats["passes"] += 1
        stats["thresholds"].append(threshold)
        above = _INF
        feasible_points = 0
        rows_all = []
        for blk, rows, blk_above, feas in eng.scan(threshold, deadline):
            if rows is None:
                timed_out = True
                continue
            above = min(above, int(blk_above))
            feasible_points += int(feas)
            rows_all.extend((int(r[4]), blk, r) for r in rows)
        stats["feasible_points"] = max(stats["feasible_points"], feasible_points)
        stats["candidates"] += len(rows_all)
        rows_all.sort(key=lambda t: t[0])
        for lb, blk, row in rows_all:
            if best_key is not None and lb > best_key[0]:
                break
            if deadline is not None and time.monotonic() > deadline:
                timed_out = True
                break
            q = eng.filter_of(blk, row)
            key = (q.fmt_a.g, q.fmt_b.g) + q.a_int + q.b_int
            if key not in seen:
                stats["exact_checks"] += 1
                seen[key] = _exact_cost(q, p.mcm_cap) if check_grid(q, p.grid) is None else None
            cost = seen[key]
            if cost is None:
                continue
            k = _tie_key(q, cost)
            if best_key is None or k < best_key:
                best_key, best_q = k, q
        stats["elapsed"] = round(time.monotonic() - t0, 3)
        if timed_out:
            if best_q is None:
                return DesignResult(TIMED_OUT, stats=stats)
            return _result(best_q, TIMED_OUT, p.mcm_cap, stats)
        best = best_key[0] if best_key else _INF
        if best <= threshold:
            return _result(best_q, OPTIMAL, p.mcm_cap, stats)
        nxt = min(best, above)
        if nxt >= _INF:
            stats["reason"] = "no coefficient set satisfies the grid"
            return DesignResult(INFEASIBLE, stats=stats)
        threshold = max(threshold + 1, nxt)


def design_with_verification(p: DesignProblem, step: float = 1e-4, max_iter: int = 64):
    """Solve, certify on the continuous bands, refine the grid on failure.

    Returns (result, verification, iterations).  ``verification`` is a
    :class:`Verified`, a non-violating :class:`Counterexample` (a bound is
    touched too closely to certify), or None when no design exists.
    """
    for it in range(1, max_iter + 1):
        res = solve(p)
        if res.status != OPTIMAL:
            return res, None, it
        ver = verify_spec(res.filter, p.spec, step)
        res.stats["refinements"] = it - 1
        if isinstance(ver, Verified) or not ver.violated:
            return res, ver, it
        grid = append_frequency(p.grid, ver.omega, p.spec)
        # more points can only shrink the numerator box; values above its MSB
        # are also representable at that MSB, so clamping loses no design
        top = b_bounds(p.spec, grid).g_b
        lo, hi = p.g_b_range
        p = replace(p, grid=grid, g_b_range=(min(lo, top), min(hi, top)), boxes=None)
    raise RuntimeError(f"no verified design after {max_iter} refinements")


def wordlength_sweep(spec: FrequencySpec, w_lo: int, w_hi: int, points_per_band: int = 300,
                     **kw) -> list[DesignResult]:
    """Optimal design for each word length in [w_lo, w_hi]."""
    if w_lo > w_hi:
        raise ValueError("empty word-length range")
    grid = discretize(spec, points_per_band)
    out = []
    for w in range(w_lo, w_hi + 1):
        res = solve(DesignProblem(spec, grid, w, **kw))
        res.stats["w"] = w
        out.append(res)
    return out
