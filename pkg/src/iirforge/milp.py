"""Linearized integer model of the filter-design problem and LP-format export.

The model is stated in integer coefficient units for one (g_a, g_b) pair.
Bilinear terms are linearized with absolute values, sign binaries, a binary
expansion of one factor and per-bit big-M products.  Sign selection uses a
split ``z = zp - zn`` so every big-M constant is a plain bound product.

Multiplier-block (MCM) constraints are not part of the model; the objective
in ``max_zeros`` mode is the sparsity part of the full cost.

Auxiliary variables record how they derive from the five coefficient
variables, so any coefficient set can be completed to a full assignment.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .fixedpoint import CoefficientFormat, QuantizedFilter, integer_range, pow2

MAX_BIG_M = 1 << 24
COEFFS = ("a1", "a2", "b0", "b1", "b2")
KINDS = ("continuous", "integer", "binary")
RELS = ("<=", "=", ">=")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]{0,254}$")

INF = math.inf


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float | int | Fraction
    upper: float | int | Fraction


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction


@dataclass(frozen=True)
class BigM:
    constraint: str
    value: int
    derivation: str


@dataclass
class LinearModel:
    """Solver-agnostic MILP: variables, linear constraints and an objective."""

    name: str = "model"
    variables: dict[str, Variable] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    sense: str = "min"
    objective: dict[str, Fraction] = field(default_factory=dict)
    big_m: list[BigM] = field(default_factory=list)
    header: list[str] = field(default_factory=list)
    # name -> (op, args) for auxiliaries determined by other variables
    defs: dict[str, tuple] = field(default_factory=dict)
    _abs: dict = field(default_factory=dict, repr=False)
    _bits: dict = field(default_factory=dict, repr=False)
    _cnames: set = field(default_factory=set, repr=False)

    def add_var(self, name: str, kind: str = "integer", lower=0, upper=INF) -> str:
        if kind not in KINDS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        if name in self.variables:
            raise ValueError(f"duplicate variable {name!r}")
        if kind == "binary":
            lower, upper = 0, 1
        if lower > upper:
            raise ValueError(f"empty bounds for {name}: [{lower}, {upper}]")
        self.variables[name] = Variable(name, kind, lower, upper)
        return name

    def add_constraint(self, name: str, terms: dict[str, object], rel: str, rhs=0,
                       big_m: tuple[int, str] | None = None) -> str:
        if rel not in RELS:
            raise ValueError(f"unknown relation {rel!r}")
        if not _NAME_RE.match(name) or name in self._cnames:
            raise ValueError(f"invalid or duplicate constraint name {name!r}")
        items = []
        for v, c in terms.items():
            if v not in self.variables:
                raise KeyError(f"constraint {name} references undeclared variable {v!r}")
            c = Fraction(c)
            if c != 0:
                items.append((v, c))
        self.constraints.append(Constraint(name, tuple(items), rel, Fraction(rhs)))
        self._cnames.add(name)
        if big_m is not None:
            self.big_m.append(BigM(name, int(big_m[0]), big_m[1]))
        return name

    def set_objective(self, sense: str, terms: dict[str, object]) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        for v in terms:
            if v not in self.variables:
                raise KeyError(f"objective references undeclared variable {v!r}")
        self.sense = sense
        self.objective = {v: Fraction(c) for v, c in terms.items() if c != 0}

    def bound_of(self, name: str) -> int:
        """Largest absolute value the variable can take (must be finite)."""
        v = self.variables[name]
        m = max(abs(v.lower), abs(v.upper))
        if m == INF:
            raise ValueError(f"variable {name} is unbounded")
        return int(m)

    @property
    def max_big_m(self) -> int:
        return max((b.value for b in self.big_m), default=0)

    def batch_check(self, assign: dict[str, np.ndarray]) -> np.ndarray:
        """Vectorized check_solution over many assignments (exact on close calls)."""
        n = len(next(iter(assign.values())))
        vals = {k: np.asarray(v, dtype=np.float64) for k, v in assign.items()}
        keep = np.ones(n, dtype=bool)
        for name, var in self.variables.items():
            x = vals[name]
            keep &= (x >= float(var.lower)) & (x <= float(var.upper))
        alive = np.nonzero(keep)[0]
        doubt = np.zeros(n, dtype=bool)
        # evaluate each constraint only on rows that survived the previous ones,
        # the selective (stability, symmetry, frequency) rows first
        first = ("stab", "sbc", "freq_")
        order = sorted(self.constraints, key=lambda c: not c.name.startswith(first))
        for con in order:
            if alive.size == 0:
                break
            lhs = np.zeros(alive.size)
            mag = np.full(alive.size, abs(float(con.rhs)) + 1.0)
            for v, c in con.terms:
                t = float(c) * vals[v][alive]
                lhs += t
                mag += np.abs(t)
            d = lhs - float(con.rhs)
            tol = 1e-9 * mag
            if con.rel == "<=":
                good = d <= tol
            elif con.rel == ">=":
                good = d >= -tol
            else:
                good = np.abs(d) <= tol
            doubt[alive[(np.abs(d) <= tol) & (d != 0)]] = True
            alive = alive[good]
        ok = np.zeros(n, dtype=bool)
        ok[alive] = True
        for i in np.nonzero(ok & doubt)[0]:
            single = {k: int(v[i]) for k, v in assign.items()}
            ok[i] = check_solution(self, single)[0]
        return ok


# -- building blocks ------------------------------------------------------------

def abs_block(model: LinearModel, x: str) -> tuple[str, str]:
    """x+ = |x| and x_sg = [x < 0] through x = xp - xn with big-M switches."""
    if x in model._abs:
        return model._abs[x]
    m = model.bound_of(x)
    var = model.variables[x]
    pos = model.add_var(f"p_{x}", "integer", 0, m)
    sg = model.add_var(f"sg_{x}", "binary")
    xp = model.add_var(f"xp_{x}", "integer", 0, max(0, int(var.upper)))
    xn = model.add_var(f"xn_{x}", "integer", 0, max(0, -int(var.lower)))
    model.defs[sg] = ("neg", x)
    model.defs[xp] = ("pospart", x)
    model.defs[xn] = ("negpart", x)
    model.defs[pos] = ("abs", x)
    model.add_constraint(f"absdef_{x}", {x: 1, xp: -1, xn: 1}, "=", 0)
    model.add_constraint(f"abssum_{x}", {pos: 1, xp: -1, xn: -1}, "=", 0)
    model.add_constraint(f"abspos_{x}", {xp: 1, sg: m}, "<=", m,
                         big_m=(m, f"max|{x}| = {m}"))
    model.add_constraint(f"absneg_{x}", {xn: 1, sg: -m}, "<=", 0,
                         big_m=(m, f"max|{x}| = {m}"))
    model._abs[x] = (pos, sg)
    return pos, sg


def binary_expansion(model: LinearModel, x: str) -> list[str]:
    """Binaries t_{x,i}, i = 0..ceil(log2 xbar)+1, with x = sum 2^i t_{x,i}."""
    if x in model._bits:
        return model._bits[x]
    var = model.variables[x]
    if var.upper == INF:
        raise ValueError(f"binary expansion of unbounded variable {x}")
    if var.lower < 0:
        raise ValueError(f"binary expansion needs a nonnegative variable, {x} >= {var.lower}")
    xbar = max(int(var.upper), 1)
    top = math.ceil(math.log2(xbar)) + 1
    bits = []
    for i in range(top + 1):
        t = model.add_var(f"t_{x}_{i}", "binary")
        model.defs[t] = ("bit", x, i)
        bits.append(t)
    terms = {x: 1}
    for i, t in enumerate(bits):
        terms[t] = -(1 << i)
    model.add_constraint(f"bin_{x}", terms, "=", 0)
    model._bits[x] = bits
    return bits


def signed_product(model: LinearModel, x: str, y: str, name: str | None = None) -> str:
    """Integer z with z = x * y enforced by linear constraints."""
    name = name or f"z_{x}_{y}"
    xp, xs = abs_block(model, x)
    yp, ys = abs_block(model, y)
    xbar, ybar = model.bound_of(xp), model.bound_of(yp)
    zbar = xbar * ybar
    bits = binary_expansion(model, xp)
    # w_i = t_i * y+
    zplus = model.add_var(f"{name}_abs", "integer", 0, zbar)
    sum_terms: dict[str, object] = {zplus: 1}
    for i, t in enumerate(bits):
        wv = model.add_var(f"{name}_w{i}", "integer", 0, ybar)
        model.defs[wv] = ("and", t, yp)
        d = f"max|{y}| = {ybar}"
        model.add_constraint(f"{name}_w{i}_on", {wv: 1, t: -ybar}, "<=", 0, big_m=(ybar, d))
        model.add_constraint(f"{name}_w{i}_le", {wv: 1, yp: -1}, "<=", 0)
        model.add_constraint(f"{name}_w{i}_ge", {wv: 1, yp: -1, t: -ybar}, ">=", -ybar,
                             big_m=(ybar, d))
        sum_terms[wv] = -(1 << i)
    model.defs[zplus] = ("lin", tuple((v, -c) for v, c in sum_terms.items() if v != zplus))
    model.add_constraint(f"{name}_sum", sum_terms, "=", 0)
    # s = xs xor ys
    s = model.add_var(f"{name}_sg", "binary")
    model.defs[s] = ("xor", xs, ys)
    if xs == ys:  # a square is never negative
        model.add_constraint(f"{name}_x0", {s: 1}, "=", 0)
    else:
        model.add_constraint(f"{name}_x1", {s: 1, xs: -1, ys: 1}, ">=", 0)
        model.add_constraint(f"{name}_x2", {s: 1, xs: 1, ys: -1}, ">=", 0)
        model.add_constraint(f"{name}_x3", {s: 1, xs: -1, ys: -1}, "<=", 0)
        model.add_constraint(f"{name}_x4", {s: 1, xs: 1, ys: 1}, "<=", 2)
    # z = zp - zn, zp only when s = 0, zn only when s = 1
    zp = model.add_var(f"{name}_p", "integer", 0, zbar)
    zn = model.add_var(f"{name}_n", "integer", 0, zbar)
    model.defs[zp] = ("select", zplus, s, 0)
    model.defs[zn] = ("select", zplus, s, 1)
    d = f"max|{x}| * max|{y}| = {xbar} * {ybar} = {zbar}"
    model.add_constraint(f"{name}_split", {zp: 1, zn: 1, zplus: -1}, "=", 0)
    model.add_constraint(f"{name}_pos", {zp: 1, s: zbar}, "<=", zbar, big_m=(zbar, d))
    model.add_constraint(f"{name}_neg", {zn: 1, s: -zbar}, "<=", 0, big_m=(zbar, d))
    z = model.add_var(name, "integer", -zbar, zbar)
    model.defs[z] = ("lin", ((zp, 1), (zn, -1)))
    model.add_constraint(f"{name}_def", {z: 1, zp: -1, zn: 1}, "=", 0)
    return z


# -- the filter-design model --------------------------------------------------------

def _parse_mode(mode: str) -> tuple[str, int | None]:
    if mode in ("feasibility", "max_zeros"):
        return mode, None
    m = re.fullmatch(r"(min_b|max_b)\(?([012])\)?", mode)
    if not m:
        raise ValueError(f"unknown mode {mode!r}; use feasibility, max_zeros, min_bK or max_bK")
    return m.group(1), int(m.group(2))


def build_design_model(p, boxes=None, mode: str = "feasibility", g_a: int | None = None,
                       g_b: int | None = None) -> LinearModel:
    """Linearized design model of problem ``p`` at one (g_a, g_b) pair.

    ``boxes`` is an integer box ((lo, hi),)*3 for b or a mapping g_b -> box
    (as returned by tighten_bounds); by default the problem's own box is used.
    """
    kind, k = _parse_mode(mode)
    grid = p.grid
    if len(grid) == 0:
        raise ValueError("empty frequency grid")
    g_a = p.g_a_range[1] if g_a is None else g_a
    g_b = p.g_b_range[1] if g_b is None else g_b
    if isinstance(boxes, dict):
        box = boxes[g_b]
    elif boxes is not None:
        box = boxes
    else:
        box = p.integer_box(g_b)
    w = p.w
    s = pow2(w - 1 - g_a)
    if s.denominator != 1:
        raise ValueError(f"g_a = {g_a} exceeds the word length's integer scale")
    S = int(s)
    r = pow2(2 * (CoefficientFormat(w, g_a).lsb - CoefficientFormat(w, g_b).lsb))

    m = LinearModel(name=f"{p.spec.name}_w{w}")
    m.header = [
        f"iirforge design model: spec {p.spec.name}, w = {w}, g_a = {g_a}, g_b = {g_b}",
        f"grid points: {len(grid)}, mode: {mode}",
        "multiplier-block (MCM) constraints are omitted; coefficients are rounded to 17 digits",
    ]
    alo, ahi = integer_range(CoefficientFormat(w, g_a))
    # strict stability as closed integer bounds: |a1| <= 2S - 1, a2 <= S - 1
    m.add_var("a1", "integer", max(alo, -2 * S + 1), min(ahi, 2 * S - 1))
    m.add_var("a2", "integer", max(alo, -S + 1), min(ahi, S - 1))
    for j, (lo, hi) in enumerate(box):
        m.add_var(f"b{j}", "integer", lo, hi)

    pa1, _ = abs_block(m, "a1")
    m.add_constraint("stab", {pa1: 1, "a2": -1}, "<=", S - 1)

    za = {(1, 1): signed_product(m, "a1", "a1"), (2, 2): signed_product(m, "a2", "a2"),
          (1, 2): signed_product(m, "a1", "a2")}
    zb = {(i, j): signed_product(m, f"b{i}", f"b{j}") for i in range(3) for j in range(i, 3)}

    for i, pt in enumerate(grid.points):
        c = grid.cos1[i]
        c2 = 2 * c * c - 1
        qb = {zb[0, 0]: 1, zb[1, 1]: 1, zb[2, 2]: 1,
              zb[0, 1]: 2 * c, zb[1, 2]: 2 * c, zb[0, 2]: 2 * c2}
        # |A|^2 = S^2 + a1^2 + a2^2 + 2c (S a1 + a1 a2) + 2 c2 S a2
        qa = {za[1, 1]: 1, za[2, 2]: 1, za[1, 2]: 2 * c, "a1": 2 * c * S, "a2": 2 * c2 * S}
        qa0 = S * S
        for side, beta2, rel in (("up", pt.beta_hi_sq, "<="), ("lo", pt.beta_lo_sq, ">=")):
            if side == "lo" and beta2 == 0:
                continue  # |B|^2 >= 0 holds trivially
            f = beta2 * r
            terms = dict(qb)
            for v, cv in qa.items():
                terms[v] = terms.get(v, 0) - f * cv
            m.add_constraint(f"freq_{side}_{i}", terms, rel, f * qa0)

    if p.use_sbc:
        pb2, _ = abs_block(m, "b2")
        m.add_constraint("sbc", {"b0": 1, pb2: -1}, ">=", 0)

    zetas = []
    for v in COEFFS:
        pv, _ = abs_block(m, v)
        bound = m.bound_of(v)
        zt = m.add_var(f"zeta_{v}", "binary")
        m.defs[zt] = ("iszero", v)
        var = m.variables[v]
        d = f"max|{v}| = {bound}"
        m.add_constraint(f"zeta_{v}_up", {v: 1, zt: int(var.upper)}, "<=", int(var.upper),
                         big_m=(abs(int(var.upper)), d))
        m.add_constraint(f"zeta_{v}_dn", {v: 1, zt: int(var.lower)}, ">=", int(var.lower),
                         big_m=(abs(int(var.lower)), d))
        m.add_constraint(f"zeta_{v}_nz", {pv: 1, zt: 1}, ">=", 1)
        zetas.append(zt)

    if kind == "feasibility":
        m.set_objective("min", {})
    elif kind == "max_zeros":
        m.set_objective("max", {z: 1 for z in zetas})
    else:
        m.set_objective("min" if kind == "min_b" else "max", {f"b{k}": 1})
    return m


# -- assignments ------------------------------------------------------------------

def _neg(x):
    return (x < 0) * 1


def complete_assignment(model: LinearModel, coeffs) -> dict:
    """Extend values of the free variables (a1 .. b2) to every defined variable.

    ``coeffs`` is a QuantizedFilter or a mapping name -> int or integer array;
    with arrays the result is a vectorized assignment.
    """
    if isinstance(coeffs, QuantizedFilter):
        coeffs = dict(zip(COEFFS, coeffs.a_int + coeffs.b_int))
    out = {k: v for k, v in coeffs.items() if k in model.variables}
    for name, (op, *args) in model.defs.items():
        if op == "neg":
            val = _neg(out[args[0]])
        elif op == "abs":
            val = abs(out[args[0]])
        elif op == "pospart":
            x = out[args[0]]
            val = (x + abs(x)) // 2
        elif op == "negpart":
            x = out[args[0]]
            val = (abs(x) - x) // 2
        elif op == "bit":
            val = (out[args[0]] >> args[1]) & 1
        elif op == "and":
            val = out[args[0]] * out[args[1]]
        elif op == "xor":
            val = out[args[0]] ^ out[args[1]]
        elif op == "lin":
            val = sum(c * out[v] for v, c in args[0])
        elif op == "select":
            zplus, s, want = args
            val = out[zplus] * ((out[s] == want) * 1)
        elif op == "iszero":
            val = (out[args[0]] == 0) * 1
        else:  # pragma: no cover
            raise ValueError(f"unknown definition {op}")
        out[name] = val
    missing = [v for v in model.variables if v not in out]
    if missing:
        raise ValueError(f"cannot derive variables {missing[:5]}")
    return out


def filter_assignment(model: LinearModel, q: QuantizedFilter) -> dict:
    return complete_assignment(model, q)


def check_solution(model: LinearModel, assignment: dict) -> tuple[bool, str | None]:
    """Exact rational evaluation of bounds, integrality and every constraint.

    Returns (True, None) or (False, name of the first violated item).
    """
    vals = {}
    for name, var in model.variables.items():
        if name not in assignment:
            raise KeyError(f"assignment misses variable {name!r}")
        x = Fraction(assignment[name])
        if var.kind != "continuous" and x.denominator != 1:
            return False, f"integrality:{name}"
        if x < var.lower or x > var.upper:
            return False, f"bound:{name}"
        vals[name] = x
    for con in model.constraints:
        lhs = sum((c * vals[v] for v, c in con.terms), Fraction(0))
        if con.rel == "<=" and lhs > con.rhs:
            return False, con.name
        if con.rel == ">=" and lhs < con.rhs:
            return False, con.name
        if con.rel == "=" and lhs != con.rhs:
            return False, con.name
    return True, None


# -- LP text format -------------------------------------------------------------------

def _num(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _expr(terms: Iterable[tuple[str, Fraction]]) -> str:
    parts = []
    for v, c in terms:
        neg = c < 0
        a = -c if neg else c
        coef = "" if a == 1 else _num(a) + " "
        if not parts:
            parts.append(("-" if neg else "") + coef + v)
        else:
            parts.append(("- " if neg else "+ ") + coef + v)
    return " ".join(parts)


def _bound(x) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    return _num(x)


def lp_text(model: LinearModel) -> str:
    if model.max_big_m > MAX_BIG_M:
        worst = max(model.big_m, key=lambda b: b.value)
        raise ValueError(f"big-M {worst.value} in {worst.constraint} ({worst.derivation}) "
                         f"exceeds 2^24; refusing to export a numerically unsafe model")
    lines = [f"\\ {h}" for h in model.header]
    lines.append("Maximize" if model.sense == "max" else "Minimize")
    obj = _expr(model.objective.items())
    lines.append(f" obj: {obj}" if obj else " obj:")
    lines.append("Subject To")
    for con in model.constraints:
        rel = {"<=": "<=", ">=": ">=", "=": "="}[con.rel]
        lines.append(f" {con.name}: {_expr(con.terms) or '0 ' + next(iter(model.variables))} "
                     f"{rel} {_num(con.rhs)}")
    bounds = []
    for v in model.variables.values():
        if v.kind == "binary" or (v.lower == 0 and v.upper == INF):
            continue
        if v.lower == -INF and v.upper == INF:
            bounds.append(f" {v.name} free")
        elif v.lower == v.upper:
            bounds.append(f" {v.name} = {_num(v.lower)}")
        else:
            bounds.append(f" {_bound(v.lower)} <= {v.name} <= {_bound(v.upper)}")
    if bounds:
        lines.append("Bounds")
        lines.extend(bounds)
    gens = [v.name for v in model.variables.values() if v.kind == "integer"]
    bins = [v.name for v in model.variables.values() if v.kind == "binary"]
    if gens:
        lines.append("Generals")
        lines.extend(f" {g}" for g in gens)
    if bins:
        lines.append("Binaries")
        lines.extend(f" {b}" for b in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: LinearModel, destination) -> str:
    """Write the model in LP format to a path or text stream; returns the text."""
    text = lp_text(model)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(os.fspath(destination), "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    return text
