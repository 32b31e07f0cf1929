"""Exact multiple constant multiplication (MCM) by shift-and-add adder graphs.

Every constant is reduced to its odd fundamental (shifts and negation are
free).  The solver runs iterative deepening on the adder count: at depth
``d`` it grows a set of available odd values from {1}, where each new value
is an A-operation of two available ones

    A(u, v) = |(u << i) + s (v << j)| >> r,   s = +-1,

restricted to odd results below a bit-length cap.  Targets that become
reachable are added greedily (never worse), dead states are cached in a
transposition table, and at the last free level the intermediate value is
searched for by inverting A from the targets instead of enumerating every
successor.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

INPUT = -1
MAX_TARGET = 1 << 24
DEFAULT_CAP = 8
DEFAULT_BITS_SLACK = 1


class Fundamental(NamedTuple):
    odd: int
    shift: int
    sign: int


ZERO = Fundamental(0, 0, 1)


def odd_fundamental(c: int) -> Fundamental:
    """Write ``c = sign * odd * 2**shift``; ``ZERO`` for c = 0."""
    if c == 0:
        return ZERO
    sign = 1 if c > 0 else -1
    m = abs(c)
    shift = (m & -m).bit_length() - 1
    return Fundamental(m >> shift, shift, sign)


def _odd(m: int) -> int:
    return m >> ((m & -m).bit_length() - 1)


def csd_digits(c: int) -> list[int]:
    """Canonical signed-digit representation, least significant digit first."""
    digits = []
    while c != 0:
        if c & 1:
            d = 2 - (c & 3)
            c -= d
        else:
            d = 0
        digits.append(d)
        c >>= 1
    return digits


def csd_weight(c: int) -> int:
    return sum(1 for d in csd_digits(c) if d)


def adder_lower_bound(fundamentals: Iterable[int]) -> int:
    """Cheap lower bound on the adders of an MCM block.

    Each distinct odd value above 1 needs its own adder, and an adder at most
    adds the signed-digit weights of its inputs, so a value of CSD weight n
    needs at least ceil(log2 n) adders.
    """
    fs = {abs(f) for f in fundamentals if abs(f) > 1}
    if not fs:
        return 0
    depth = max(math.ceil(math.log2(csd_weight(t))) for t in fs)
    return max(len(fs), depth)


# -- A-operation ---------------------------------------------------------------

class _Op(NamedTuple):
    left: int
    right: int
    left_shift: int
    right_shift: int
    right_sign: int
    out_shift: int


def _aop_terms(u: int, v: int, cap: int) -> Iterator[tuple[int, _Op]]:
    """All odd results x < cap of one adder on odd inputs u, v, with a recipe.

    The recipe is normalized so the raw sum is positive:
    ``x = ((left << ls) + sign * (right << rs)) >> out``.
    """
    s = u + v
    r = (s & -s).bit_length() - 1
    if (s >> r) < cap:
        yield s >> r, _Op(u, v, 0, 0, 1, r)
    if u != v:
        big, small = (u, v) if u > v else (v, u)
        dd = big - small
        r = (dd & -dd).bit_length() - 1
        if (dd >> r) < cap:
            yield dd >> r, _Op(big, small, 0, 0, -1, r)
    for a, b in (((u, v),) if u == v else ((u, v), (v, u))):
        l = 1
        while (a << l) - b < cap:
            x = (a << l) + b
            if x < cap:
                yield x, _Op(a, b, l, 0, 1, 0)
            x = (a << l) - b
            if x > 0:
                yield x, _Op(a, b, l, 0, -1, 0)
            else:
                yield -x, _Op(b, a, 0, l, -1, 0)
            l += 1


@lru_cache(maxsize=1 << 18)
def aop(u: int, v: int, cap: int) -> frozenset[int]:
    """Set of odd values below ``cap`` produced by one adder from u and v."""
    if u > v:
        u, v = v, u
    return frozenset(x for x, _ in _aop_terms(u, v, cap))


def _recipe(x: int, u: int, v: int, cap: int) -> _Op | None:
    for y, op in _aop_terms(u, v, cap):
        if y == x:
            return op
    return None


# -- adder graphs -------------------------------------------------------------

@dataclass(frozen=True)
class AdderNode:
    value: int
    left: int
    right: int
    left_shift: int
    right_shift: int
    right_sign: int
    out_shift: int = 0


@dataclass(frozen=True)
class TargetRef:
    node: int
    shift: int
    sign: int


@dataclass(frozen=True)
class AdderGraph:
    """Topologically ordered shift-add nodes fed by the input (index ``INPUT``).

    ``targets`` maps each requested constant to the node realizing its odd
    fundamental (``None`` for zero).
    """

    nodes: tuple[AdderNode, ...]
    targets: tuple[tuple[int, TargetRef | None], ...]

    def value_of(self, idx: int) -> int:
        return 1 if idx == INPUT else self.nodes[idx].value

    @property
    def target_map(self) -> dict[int, TargetRef | None]:
        return dict(self.targets)

    def validate(self) -> None:
        """Raise ValueError unless every node and target recomputes exactly."""
        for i, n in enumerate(self.nodes):
            for p in (n.left, n.right):
                if not (p == INPUT or 0 <= p < i):
                    raise ValueError(f"node {i} references {p} out of order")
            if n.right_sign not in (1, -1):
                raise ValueError(f"node {i} has sign {n.right_sign}")
            if min(n.left_shift, n.right_shift) != 0:
                raise ValueError(f"node {i} shifts both operands")
            raw = (self.value_of(n.left) << n.left_shift) + n.right_sign * (self.value_of(n.right) << n.right_shift)
            if raw <= 0 or raw % (1 << n.out_shift):
                raise ValueError(f"node {i} raw value {raw} not positive/divisible")
            val = raw >> n.out_shift
            if val != n.value or val % 2 == 0:
                raise ValueError(f"node {i} computes {val}, stores {n.value}")
        for c, ref in self.targets:
            if ref is None:
                if c != 0:
                    raise ValueError(f"target {c} mapped to zero")
                continue
            got = ref.sign * (self.value_of(ref.node) << ref.shift)
            if got != c:
                raise ValueError(f"target {c} realized as {got}")

    def to_dict(self) -> dict:
        return {
            "nodes": [[n.value, n.left, n.right, n.left_shift, n.right_shift, n.right_sign, n.out_shift]
                      for n in self.nodes],
            "targets": [[c, None if r is None else [r.node, r.shift, r.sign]] for c, r in self.targets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdderGraph":
        nodes = tuple(AdderNode(*map(int, n)) for n in d["nodes"])
        targets = tuple((int(c), None if r is None else TargetRef(*map(int, r))) for c, r in d["targets"])
        g = cls(nodes, targets)
        g.validate()
        return g


def adder_count(g: AdderGraph) -> int:
    return len(g.nodes)


def _build_graph(order: list[int], targets: Iterable[int], cap: int) -> AdderGraph:
    index = {1: INPUT}
    nodes: list[AdderNode] = []
    avail = [1]
    for x in order:
        if x in index:
            continue
        op = None
        for i, u in enumerate(avail):
            for v in avail[i:]:
                op = _recipe(x, u, v, cap)
                if op is not None:
                    break
            if op is not None:
                break
        if op is None:
            raise AssertionError(f"{x} not realizable from {avail}")
        index[x] = len(nodes)
        nodes.append(AdderNode(x, index[op.left], index[op.right], op.left_shift,
                               op.right_shift, op.right_sign, op.out_shift))
        avail.append(x)
    tmap = []
    for c in sorted(set(targets)):
        f = odd_fundamental(c)
        tmap.append((c, None if f == ZERO else TargetRef(index[f.odd], f.shift, f.sign)))
    g = AdderGraph(tuple(nodes), tuple(tmap))
    g.validate()
    return g


# -- exact search -------------------------------------------------------------

class _Search:
    def __init__(self, targets: frozenset[int], cap: int):
        self.targets = targets
        self.cap = cap
        self.dead: dict[frozenset[int], int] = {}
        self.nodes = 0

    def reachable(self, t: int, avail) -> bool:
        cap = self.cap
        lst = sorted(avail)
        for i, u in enumerate(lst):
            for v in lst[i:]:
                if t in aop(u, v, cap):
                    return True
        return False

    def successors(self, avail) -> set[int]:
        cap = self.cap
        lst = sorted(avail)
        out: set[int] = set()
        for i, u in enumerate(lst):
            for v in lst[i:]:
                out |= aop(u, v, cap)
        out.difference_update(avail)
        return out

    def inverse_candidates(self, remaining, avail) -> list[int]:
        """Values x such that some remaining target is one adder from {x} | avail."""
        cap = self.cap
        cands: set[int] = set()
        for t in remaining:
            for r in avail:
                cands |= aop(min(t, r), max(t, r), cap)
            k = 1
            while (1 << k) - 1 <= t:
                for d in ((1 << k) - 1, (1 << k) + 1):
                    if d > 1 and t % d == 0:
                        cands.add(t // d)
                k += 1
        cands.difference_update(avail)
        return sorted(x for x in cands if x < cap and self.reachable(x, avail))

    def run(self, order: list[int], avail: frozenset[int], depth: int) -> list[int] | None:
        self.nodes += 1
        order = list(order)
        avail = set(avail)
        remaining = set(self.targets) - avail
        progress = True
        while remaining and progress:
            progress = False
            for t in sorted(remaining):
                if self.reachable(t, avail):
                    order.append(t)
                    avail.add(t)
                    remaining.discard(t)
                    depth -= 1
                    progress = True
            if depth < 0:
                return None
        if not remaining:
            return order
        if depth <= len(remaining):
            return None
        key = frozenset(avail)
        if self.dead.get(key, -1) >= depth:
            return None
        if depth == len(remaining) + 1:
            cands = self.inverse_candidates(remaining, avail)
        else:
            cands = sorted(self.successors(avail))
        for x in cands:
            res = self.run(order + [x], key | {x}, depth - 1)
            if res is not None:
                return res
        self.dead[key] = depth
        return None


_MEMO: dict[tuple[frozenset[int], int], tuple[str, object]] = {}
_MEMO_LOCK = threading.Lock()


def _fundamentals(targets: Iterable[int]) -> frozenset[int]:
    return frozenset(f.odd for f in map(odd_fundamental, targets) if f.odd > 1)


def _bits_cap(funds: frozenset[int], slack: int) -> int:
    return 1 << (max(funds).bit_length() + slack)


def _solve_fundamentals(funds: frozenset[int], cap_adders: int, slack: int) -> list[int] | None:
    """Optimal insertion order of odd values (targets and intermediates), or None."""
    if not funds:
        return []
    key = (funds, slack)
    with _MEMO_LOCK:
        hit = _MEMO.get(key)
    start = adder_lower_bound(funds)
    if hit is not None:
        kind, val = hit
        if kind == "ok":
            return list(val) if len(val) <= cap_adders else None
        start = max(start, val + 1)
        if start > cap_adders:
            return None
    search = _Search(funds, _bits_cap(funds, slack))
    for depth in range(start, cap_adders + 1):
        res = search.run([], frozenset({1}), depth)
        if res is not None:
            with _MEMO_LOCK:
                _MEMO[key] = ("ok", tuple(res))
            return res
        with _MEMO_LOCK:
            old = _MEMO.get(key)
            if old is None or (old[0] == "lb" and old[1] < depth):
                _MEMO[key] = ("lb", depth)
    return None


def _check_targets(targets: Iterable[int]) -> list[int]:
    ts = [int(t) for t in targets]
    for t in ts:
        if abs(t) > MAX_TARGET:
            raise ValueError(f"target {t} exceeds the supported magnitude 2^24")
    return ts


def solve_mcm(targets: Iterable[int], cap: int = DEFAULT_CAP,
              max_bits_slack: int = DEFAULT_BITS_SLACK) -> AdderGraph | None:
    """Minimum-adder graph realizing every target, or None if it needs more than ``cap``."""
    if cap < 0:
        raise ValueError("cap must be >= 0")
    ts = _check_targets(targets)
    funds = _fundamentals(ts)
    order = _solve_fundamentals(funds, cap, max_bits_slack)
    if order is None:
        return None
    return _build_graph(order, ts, _bits_cap(funds, max_bits_slack) if funds else 2)


def mcm_cost(targets: Iterable[int], cap: int = DEFAULT_CAP,
             max_bits_slack: int = DEFAULT_BITS_SLACK) -> int | None:
    """Minimum adder count (memoized on the fundamental set), or None above ``cap``."""
    ts = _check_targets(targets)
    order = _solve_fundamentals(_fundamentals(ts), cap, max_bits_slack)
    return None if order is None else len(order)


def clear_memo() -> None:
    with _MEMO_LOCK:
        _MEMO.clear()


def to_dot(graphs: dict[str, AdderGraph], name: str = "mcm") -> str:
    """Graphviz rendering: one box per adder, edges labelled with shift and sign."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=box];"]
    for block, g in graphs.items():
        inp = f"{block}_in"
        lines.append(f'  {inp} [shape=ellipse, label="{block}"];')
        for i, n in enumerate(g.nodes):
            nid = f"{block}_n{i}"
            label = f"{n.value}{block}" + (f" >>{n.out_shift}" if n.out_shift else "")
            lines.append(f'  {nid} [label="{label}"];')
            for src, sh, sg in ((n.left, n.left_shift, 1), (n.right, n.right_shift, n.right_sign)):
                sid = inp if src == INPUT else f"{block}_n{src}"
                lines.append(f'  {sid} -> {nid} [label="{"-" if sg < 0 else "+"}<<{sh}"];')
        for c, ref in g.targets:
            if ref is None:
                continue
            tid = f"{block}_t{c}".replace("-", "m")
            lines.append(f'  {tid} [shape=plaintext, label="{c}{block}"];')
            sid = inp if ref.node == INPUT else f"{block}_n{ref.node}"
            lines.append(f'  {sid} -> {tid} [label="{"-" if ref.sign < 0 else "+"}<<{ref.shift}", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
