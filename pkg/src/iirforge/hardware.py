"""Datapath sizing, bit-accurate simulation and RTL emission for TDF-II filters.

Fixed-point signals are integer codes at a given LSB position: a code k at
LSB l stands for k * 2^l.  A signal with MSB m and LSB l covers
[-2^m, 2^m - 2^l] (m is the sign-bit weight, width m - l + 1).

Architecture (transposed direct form II, one accumulator):

    v      = b0 x + d1[n-1]
    d1     = b1 x - a1 y_ext + d2[n-1]
    d2     = b2 x - a2 y_ext
    y_ext  = floor(v) to l_ext                       (only internal truncation)
    y      = y_ext rounded to nearest at l_out       (ties toward +inf)

The products b_k x and a_k y_ext come from the two multiplier blocks.  All
additions are exact.  The accumulator error e in (-2^l_ext, 0] reaches the
output through 1/A, so |y_ext - y_ref| < W_A 2^l_ext <= 2^(l_out - 1) once
G = ceil(log2(W_A + 1)) + 1; the final rounding adds at most 2^(l_out - 1).
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .fixedpoint import QuantizedFilter
from .mcm import INPUT, AdderGraph, adder_count, solve_mcm, to_dot
from .response import is_stable

DEFAULT_TOL = 1e-10
_MAX_N = 1 << 22


# -- worst-case peak gain -----------------------------------------------------------

def _pole_radius(a1: float, a2: float) -> float:
    disc = cmath.sqrt(a1 * a1 - 4 * a2)
    return max(abs((-a1 + disc) / 2), abs((-a1 - disc) / 2))


def _require_stable(a1, a2) -> None:
    if not is_stable(Fraction(a1), Fraction(a2)):
        raise ValueError(f"unstable denominator (a1, a2) = ({a1}, {a2})")


def _abs_sum_bound(b: Sequence[float], a1: float, a2: float, tol: float) -> float:
    """Upper bound on sum |g_k| for g = impulse response of B/A."""
    r = _pole_radius(a1, a2)
    b = list(b) + [0.0] * (3 - len(b))
    n = 64
    prev = None
    while True:
        g = np.empty(n + 2)
        g1 = g2 = 0.0
        for k in range(n + 2):
            x = (b[k] if k < 3 else 0.0) - a1 * g1 - a2 * g2
            g[k] = x
            g2, g1 = g1, x
        partial = math.fsum(np.abs(g[:n]))
        tail = (abs(g[n]) + abs(g[n + 1])) * r / (1 - r) if r > 0 else 0.0
        # float rounding over n steps, bounded generously
        bound = (partial + tail) * (1 + 8 * n * 2.0 ** -53)
        if tail < tol and prev is not None and abs(bound - prev) < tol:
            return bound
        if n >= _MAX_N:
            raise ArithmeticError(f"WCPG did not converge (pole radius {r})")
        prev = bound
        n *= 2


def wcpg_denominator(a1, a2, tol: float = DEFAULT_TOL) -> float:
    """Upper bound W on the absolute sum of the impulse response of 1/A."""
    _require_stable(a1, a2)
    return _abs_sum_bound([1.0], float(a1), float(a2), tol)


def wcpg_filter(q: QuantizedFilter, tol: float = DEFAULT_TOL) -> float:
    """Upper bound on the absolute sum of the impulse response of B/A."""
    a1, a2 = q.a
    _require_stable(a1, a2)
    return _abs_sum_bound([float(x) for x in q.b], float(a1), float(a2), tol)


def guard_bits(a1, a2, tol: float = DEFAULT_TOL) -> int:
    """G = ceil(log2(W_A + 1)) + 1."""
    _require_stable(a1, a2)
    if Fraction(a2) == 0:
        # single real pole: W_A = 1 / (1 - |a1|) exactly
        return _ceil_log2(1 / (1 - abs(Fraction(a1))) + 1) + 1
    w = wcpg_denominator(a1, a2, tol)
    return math.ceil(math.log2(w + 1)) + 1


def _ceil_log2(x: Fraction) -> int:
    k = 0
    while Fraction(2) ** k < x:
        k += 1
    return k


# -- formats and sizing ---------------------------------------------------------------

@dataclass(frozen=True)
class Format:
    msb: int
    lsb: int

    @property
    def width(self) -> int:
        return self.msb - self.lsb + 1

    @property
    def code_range(self) -> tuple[int, int]:
        n = self.msb - self.lsb
        return -(1 << n), (1 << n) - 1

    def holds(self, code: int) -> bool:
        lo, hi = self.code_range
        return lo <= code <= hi


def format_for(lo: int, hi: int, lsb: int) -> Format:
    """Smallest two's-complement format at ``lsb`` holding codes in [lo, hi]."""
    n = 1
    while -(1 << (n - 1)) > lo or (1 << (n - 1)) - 1 < hi:
        n += 1
    return Format(lsb + n - 1, lsb)


@dataclass(frozen=True)
class Term:
    """A signed operand of a structural sum: ``sign * signal``."""

    signal: str
    sign: int


@dataclass(frozen=True)
class SumNode:
    """Exact sum of terms; ``len(terms) - 1`` structural adders."""

    name: str
    terms: tuple[Term, ...]


@dataclass
class Datapath:
    q: QuantizedFilter
    graph_a: AdderGraph
    graph_b: AdderGraph
    m_in: int
    l_in: int
    m_out: int
    l_out: int
    l_ext: int
    G: int
    W_A: float
    W_H: float
    formats: dict[str, Format]
    structure: tuple[SumNode, ...]
    saturate: bool = False
    lsb_a: int = 0
    lsb_b: int = 0
    lsb_acc: int = 0
    node_raw: dict[str, Format] = field(default_factory=dict)

    @property
    def structural_adders(self) -> int:
        return sum(max(len(s.terms) - 1, 0) for s in self.structure)

    @property
    def total_adders(self) -> int:
        return adder_count(self.graph_a) + adder_count(self.graph_b) + self.structural_adders

    def summary(self) -> dict:
        return {
            "m_in": self.m_in, "l_in": self.l_in, "m_out": self.m_out, "l_out": self.l_out,
            "l_ext": self.l_ext, "G": self.G, "W_A": self.W_A, "W_H": self.W_H,
            "adders": {"A_Ma": adder_count(self.graph_a), "A_Mb": adder_count(self.graph_b),
                       "A_S": self.structural_adders, "total": self.total_adders},
            "formats": {k: [f.msb, f.lsb] for k, f in self.formats.items()},
        }


def _graph_ranges(g: AdderGraph, prefix: str, lo: int, hi: int, lsb: int,
                  formats: dict, raw: dict) -> None:
    for i, n in enumerate(g.nodes):
        c = n.value
        formats[f"{prefix}n{i}"] = format_for(c * lo if c * lo < c * hi else c * hi,
                                              max(c * lo, c * hi), lsb)
        rc = c << n.out_shift
        raw[f"{prefix}n{i}"] = format_for(min(rc * lo, rc * hi), max(rc * lo, rc * hi), lsb)


def _ceil_code(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def size_datapath(q: QuantizedFilter, in_fmt: tuple[int, int] = (-1, -16),
                  out_fmt: tuple[int, int] | None = None, out_width: int = 16,
                  graphs: tuple[AdderGraph, AdderGraph] | None = None,
                  tol: float = DEFAULT_TOL) -> Datapath:
    """Size every signal of the TDF-II datapath for ``q``.

    ``in_fmt`` and ``out_fmt`` are (msb, lsb).  Without ``out_fmt`` the output
    MSB is m_in + ceil(log2 W_H), raised if the error budget could overflow it,
    and the LSB follows from ``out_width``.  A user-given output format that is
    too narrow makes the output saturate.
    """
    a1, a2 = q.a
    _require_stable(a1, a2)
    m_in, l_in = in_fmt
    if l_in > m_in:
        raise ValueError(f"input LSB {l_in} above MSB {m_in}")
    if graphs is None:
        ga, gb = solve_mcm(q.a_int), solve_mcm(q.b_int)
        if ga is None or gb is None:
            raise ValueError("no adder graph within the default cap")
    else:
        ga, gb = graphs
    ga.validate()
    gb.validate()
    W_A = wcpg_denominator(a1, a2, tol)
    W_H = wcpg_filter(q, tol)
    G = guard_bits(a1, a2, tol)

    x_max = Fraction(2) ** m_in
    saturate = False

    def y_bound(l_out: int) -> Fraction:
        # |y| <= W_H max|x| + W_A 2^l_ext + 2^(l_out - 1)
        return (Fraction(W_H) * x_max + Fraction(W_A) * Fraction(2) ** (l_out - G)
                + Fraction(2) ** (l_out - 1))

    if out_fmt is None:
        m_out = m_in + (math.ceil(math.log2(W_H)) if W_H > 0 else 0)
        while True:
            l_out = m_out - out_width + 1
            if y_bound(l_out) <= Fraction(2) ** m_out - Fraction(2) ** l_out:
                break
            m_out += 1
    else:
        m_out, l_out = out_fmt
        if l_out > m_out:
            raise ValueError(f"output LSB {l_out} above MSB {m_out}")
        saturate = y_bound(l_out) > Fraction(2) ** m_out - Fraction(2) ** l_out
    l_ext = l_out - G

    la, lb = q.fmt_a.lsb, q.fmt_b.lsb
    L = min(l_in + lb, l_ext + la)

    formats: dict[str, Format] = {}
    raw: dict[str, Format] = {}
    xlo, xhi = -(1 << (m_in - l_in)), (1 << (m_in - l_in)) - 1
    formats["x"] = Format(m_in, l_in)
    # |y_ext| <= W_H max|x| + W_A 2^l_ext
    ymag = _ceil_code((Fraction(W_H) * x_max + Fraction(W_A) * Fraction(2) ** l_ext)
                      / Fraction(2) ** l_ext)
    ylo, yhi = -ymag, ymag
    formats["y_ext"] = format_for(ylo, yhi, l_ext)
    _graph_ranges(gb, "mb_", xlo, xhi, l_in, formats, raw)
    _graph_ranges(ga, "ma_", ylo, yhi, l_ext, formats, raw)

    ranges: dict[str, tuple[int, int]] = {}

    def prod(name: str, c: int, lo: int, hi: int, lsb_sig: int, lsb_coef: int) -> None:
        if c == 0:
            return
        s = (lsb_sig + lsb_coef) - L
        vals = (c * lo << s, c * hi << s)
        ranges[name] = (min(vals), max(vals))
        formats[name] = format_for(min(c * lo, c * hi), max(c * lo, c * hi), lsb_sig + lsb_coef)

    for k, c in enumerate(q.b_int):
        prod(f"bx{k}", c, xlo, xhi, l_in, lb)
    for k, c in zip((1, 2), q.a_int):
        prod(f"ay{k}", c, ylo, yhi, l_ext, la)

    structure = []

    def sum_node(name: str, terms: list[Term]) -> None:
        terms = [t for t in terms if t.signal in ranges]
        if not terms:
            return
        lo = hi = 0
        for t in terms:
            a, b = ranges[t.signal]
            if t.sign > 0:
                lo, hi = lo + a, hi + b
            else:
                lo, hi = lo - b, hi - a
        ranges[name] = (lo, hi)
        formats[name] = format_for(lo, hi, L)
        structure.append(SumNode(name, tuple(terms)))
        ranges[name + "_reg"] = (lo, hi)
        formats[name + "_reg"] = formats[name]

    sum_node("d2", [Term("bx2", 1), Term("ay2", -1)])
    sum_node("d1", [Term("bx1", 1), Term("ay1", -1), Term("d2_reg", 1)])
    sum_node("v", [Term("bx0", 1), Term("d1_reg", 1)])
    if "v" not in ranges:
        raise ValueError("filter has no nonzero numerator path")
    formats["y"] = Format(m_out, l_out)
    return Datapath(q, ga, gb, m_in, l_in, m_out, l_out, l_ext, G, W_A, W_H, formats,
                    tuple(structure), saturate, la, lb, L, raw)


# -- simulation ----------------------------------------------------------------------

def _graph_products(g: AdderGraph, v: int) -> tuple[dict[int, int], list[int]]:
    """Evaluate the adder graph on input code v: (constant -> c * v, node values)."""
    vals = []
    for n in g.nodes:
        left = v if n.left == INPUT else vals[n.left]
        right = v if n.right == INPUT else vals[n.right]
        r = (left << n.left_shift) + n.right_sign * (right << n.right_shift)
        vals.append(r >> n.out_shift)
    out = {}
    for c, ref in g.targets:
        if ref is None:
            out[c] = 0
        else:
            base = v if ref.node == INPUT else vals[ref.node]
            out[c] = ref.sign * (base << ref.shift)
    return out, vals


class DatapathOverflow(ArithmeticError):
    pass


def _check(dp: Datapath, name: str, code: int) -> None:
    if not dp.formats[name].holds(code):
        raise DatapathOverflow(f"{name} = {code} overflows {dp.formats[name]}")


def simulate_fixed(dp: Datapath, inputs: Sequence[int]) -> list[int]:
    """Bit-accurate run of the datapath; inputs and outputs are integer codes."""
    fx = dp.formats["x"]
    q = dp.q
    L = dp.lsb_acc
    sb = dp.l_in + dp.lsb_b - L
    sa = dp.l_ext + dp.lsb_a - L
    sh_ext = dp.l_ext - L
    k = dp.l_out - dp.l_ext
    half = 1 << (k - 1)
    ylo, yhi = dp.formats["y"].code_range
    b = q.b_int
    a1c, a2c = q.a_int
    d1 = d2 = 0
    out = []
    checked = dp.formats
    for x in inputs:
        x = int(x)
        if not fx.holds(x):
            raise ValueError(f"input code {x} outside {fx}")
        pb, nodes_b = _graph_products(dp.graph_b, x)
        for i, v in enumerate(nodes_b):
            _check(dp, f"mb_n{i}", v)
        # the accumulator only sees last cycle's registers
        acc = (pb[b[0]] << sb) + d1 if b[0] else d1
        if "v" in checked:
            _check(dp, "v", acc)
        y_ext = acc >> sh_ext
        _check(dp, "y_ext", y_ext)
        pa, nodes_a = _graph_products(dp.graph_a, y_ext)
        for i, v in enumerate(nodes_a):
            _check(dp, f"ma_n{i}", v)
        nd2 = 0
        if b[2]:
            nd2 += pb[b[2]] << sb
        if a2c:
            nd2 -= pa[a2c] << sa
        nd1 = d2
        if b[1]:
            nd1 += pb[b[1]] << sb
        if a1c:
            nd1 -= pa[a1c] << sa
        if "d1" in checked:
            _check(dp, "d1", nd1)
        if "d2" in checked:
            _check(dp, "d2", nd2)
        d1, d2 = nd1, nd2
        y = (y_ext + half) >> k
        if not (ylo <= y <= yhi):
            if not dp.saturate:
                raise DatapathOverflow(f"output {y} overflows {dp.formats['y']}")
            y = min(max(y, ylo), yhi)
        out.append(y)
    return out


def simulate_reference(q: QuantizedFilter, inputs: Sequence) -> list[Fraction]:
    """Exact rational y_n = sum b_k x_(n-k) - sum a_k y_(n-k)."""
    b0, b1, b2 = q.b
    a1, a2 = q.a
    x1 = x2 = y1 = y2 = Fraction(0)
    out = []
    for x in inputs:
        x = Fraction(x)
        y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2
        out.append(y)
        x2, x1, y2, y1 = x1, x, y1, y
    return out


def reference_enclosure(q: QuantizedFilter, codes: Sequence[int], l_in: int,
                        lsb: int) -> tuple[list[int], int]:
    """Reference output codes at ``lsb`` (floor each step) and an error radius.

    Every exact output y_n satisfies |y_n - c_n 2^lsb| < radius * 2^lsb; the
    radius covers the per-step truncation propagated through 1/A.  Used for
    long sequences where exact rationals would grow without bound.
    """
    la, lb = q.fmt_a.lsb, q.fmt_b.lsb
    L = min(l_in + lb, lsb + la)
    sb, sa, sh = l_in + lb - L, lsb + la - L, lsb - L
    b0, b1, b2 = q.b_int
    a1, a2 = q.a_int
    x1 = x2 = y1 = y2 = 0
    out = []
    for x in codes:
        x = int(x)
        acc = ((b0 * x + b1 * x1 + b2 * x2) << sb) - ((a1 * y1 + a2 * y2) << sa)
        y = acc >> sh
        out.append(y)
        x2, x1, y2, y1 = x1, x, y1, y
    radius = math.ceil(wcpg_denominator(*q.a)) + 1
    return out, radius


@dataclass(frozen=True)
class FaithfulReport:
    n: int
    max_error_ulps: float
    raw_ok: bool
    rounded_ok: bool

    @property
    def ok(self) -> bool:
        return self.raw_ok and self.rounded_ok


def faithful_check(dp: Datapath, inputs: Sequence[int], extra_bits: int = 64) -> FaithfulReport:
    """Compare the datapath with a tight enclosure of the exact output.

    raw_ok: |y - y_ref| < 2^l_out for every sample.
    rounded_ok: y is within one output ulp of y_ref rounded to l_out.
    """
    y = simulate_fixed(dp, inputs)
    lh = dp.l_out - extra_bits
    ref, rad = reference_enclosure(dp.q, inputs, dp.l_in, lh)
    ulp = 1 << extra_bits
    half = ulp >> 1
    raw_ok = rounded_ok = True
    worst = 0
    for yi, ri in zip(y, ref):
        d = abs((yi << extra_bits) - ri) + rad
        worst = max(worst, d)
        if d >= ulp:
            raw_ok = False
        # every rounding of a value within (ri - rad, ri + rad)
        for r in {(ri - rad + half) >> extra_bits, (ri + rad + half) >> extra_bits}:
            if abs(yi - r) > 1:
                rounded_ok = False
    return FaithfulReport(len(y), worst / ulp, raw_ok, rounded_ok)


def random_inputs(dp: Datapath, n: int, seed: int = 0) -> np.ndarray:
    lo, hi = dp.formats["x"].code_range
    return np.random.RandomState(seed).randint(lo, hi + 1, size=n)


def worst_case_inputs(dp: Datapath, n: int, period: int = 256) -> list[int]:
    """Full-scale inputs whose signs follow the time-reversed impulse response.

    Repeating the pattern drives the output close to its W_H max|x| bound.
    """
    lo, hi = dp.formats["x"].code_range
    ref = simulate_reference(dp.q, [1] + [0] * (period - 1))
    pattern = [lo if h < 0 else hi for h in reversed(ref)]
    neg = [hi if v == lo else lo for v in pattern]
    seq = []
    while len(seq) < n:
        seq.extend(pattern)
        seq.extend(neg)
    return seq[:n]


def trace_csv(dp: Datapath, inputs: Sequence[int], extra_bits: int = 64) -> str:
    """CSV with n, x, y_fixed, y_reference, error_ulps (both in output ulps).

    The reference comes from :func:`reference_enclosure` at ``extra_bits``
    below the output LSB, well beyond double precision.
    """
    y = simulate_fixed(dp, inputs)
    ref, _ = reference_enclosure(dp.q, inputs, dp.l_in, dp.l_out - extra_bits)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "x", "y_fixed", "y_reference", "error_ulps"])
    for i, (x, yi, ri) in enumerate(zip(inputs, y, ref)):
        r = Fraction(ri, 1 << extra_bits)
        wr.writerow([i, int(x), yi, repr(float(r)), repr(float(yi - r))])
    return buf.getvalue()


# -- emission -------------------------------------------------------------------------

def emit_dot(graphs: dict[str, AdderGraph], name: str = "mcm") -> str:
    return to_dot(graphs, name)


def _vname(name: str) -> str:
    return name.lower()


def _align(sig: str, fmt: Format, lsb: int, width: int) -> str:
    s = fmt.lsb - lsb
    e = f"resize({sig}, {width})"
    return f"shift_left({e}, {s})" if s else e


def emit_vhdl(dp: Datapath, entity: str = "iir_filter") -> str:
    """Synthesizable VHDL-93 (numeric_std) entity for the datapath."""
    f = dp.formats
    q = dp.q
    L = dp.lsb_acc
    lines = [
        "library ieee;",
        "use ieee.std_logic_1164.all;",
        "use ieee.numeric_std.all;",
        "",
        f"-- a = {[str(x) for x in q.a]}, b = {[str(x) for x in q.b]}",
        f"-- x: ({dp.m_in}, {dp.l_in})  y: ({dp.m_out}, {dp.l_out})  l_ext = {dp.l_ext}  G = {dp.G}",
        f"-- adders: multiplier blocks {adder_count(dp.graph_a) + adder_count(dp.graph_b)}, "
        f"structural {dp.structural_adders}",
        f"entity {entity} is",
        "  port (",
        "    clk : in  std_logic;",
        "    rst : in  std_logic;",
        f"    x   : in  std_logic_vector({f['x'].width - 1} downto 0);",
        f"    y   : out std_logic_vector({f['y'].width - 1} downto 0)",
        "  );",
        f"end entity {entity};",
        "",
        f"architecture rtl of {entity} is",
    ]
    decl = []
    body = []

    def sig(name: str, fmt: Format) -> None:
        decl.append(f"  signal {_vname(name)} : signed({fmt.width - 1} downto 0);")

    sig("xs", f["x"])
    body.append(f"  xs <= signed(x);")
    for prefix, g, src, src_fmt in (("mb_", dp.graph_b, "xs", f["x"]), ("ma_", dp.graph_a, "y_ext", f["y_ext"])):
        for i, n in enumerate(g.nodes):
            name = f"{prefix}n{i}"
            fmt = f[name]
            raw = dp.node_raw[name]
            sig(name, fmt)
            wr = raw.width + 1

            def operand(idx: int, shift: int) -> str:
                s = src if idx == INPUT else f"{prefix}n{idx}"
                e = f"resize({s}, {wr})"
                return f"shift_left({e}, {shift})" if shift else e

            op = "+" if n.right_sign > 0 else "-"
            expr = f"{operand(n.left, n.left_shift)} {op} {operand(n.right, n.right_shift)}"
            if n.out_shift:
                expr = f"shift_right({expr}, {n.out_shift})"
            body.append(f"  {name} <= resize({expr}, {fmt.width});")

    def product(name: str, c: int, g: AdderGraph, prefix: str, src: str) -> None:
        if c == 0:
            return
        ref = g.target_map[c]
        fmt = f[name]
        sig(name, fmt)
        base = src if ref.node == INPUT else f"{prefix}n{ref.node}"
        e = f"resize({base}, {fmt.width})"
        if ref.shift:
            e = f"shift_left({e}, {ref.shift})"
        if ref.sign < 0:
            e = f"-({e})"
        body.append(f"  {name} <= {e};")

    for k, c in enumerate(q.b_int):
        product(f"bx{k}", c, dp.graph_b, "mb_", "xs")
    for k, c in zip((1, 2), q.a_int):
        product(f"ay{k}", c, dp.graph_a, "ma_", "y_ext")

    regs = []
    for node in dp.structure:
        fmt = f[node.name]
        sig(node.name, fmt)
        parts = []
        for t in node.terms:
            e = _align(t.signal, f[t.signal], L, fmt.width)
            if not parts:
                parts.append(e if t.sign > 0 else f"-{e}")
            else:
                parts.append(("+ " if t.sign > 0 else "- ") + e)
        body.append(f"  {node.name} <= {' '.join(parts)};")
        if node.name != "v":
            sig(node.name + "_reg", fmt)
            regs.append(node.name)

    fy = f["y_ext"]
    sig("y_ext", fy)
    body.append(f"  y_ext <= resize(shift_right(v, {dp.l_ext - L}), {fy.width});")
    k = dp.l_out - dp.l_ext
    wy = f["y"].width
    rw = fy.width + 1
    decl.append(f"  signal y_rnd : signed({rw - 1} downto 0);")
    body.append(f"  y_rnd <= shift_right(resize(y_ext, {rw}) + to_signed({1 << (k - 1)}, {rw}), {k});")
    body.append(f"  y <= std_logic_vector(resize(y_rnd, {wy}));")

    lines += decl
    lines.append("begin")
    lines += body
    if regs:
        lines += [
            "",
            "  process (clk)",
            "  begin",
            "    if rising_edge(clk) then",
            "      if rst = '1' then",
        ]
        lines += [f"        {r}_reg <= (others => '0');" for r in regs]
        lines.append("      else")
        lines += [f"        {r}_reg <= {r};" for r in regs]
        lines += ["      end if;", "    end if;", "  end process;"]
    lines.append("end architecture rtl;")
    return "\n".join(lines) + "\n"
