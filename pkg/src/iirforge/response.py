"""Squared-magnitude forms, stability and frequency-constraint checks.

For a length-3 coefficient vector ``v`` the squared magnitude on the unit
circle is the quadratic form

    |V(e^{j pi w})|^2 = v0^2 + v1^2 + v2^2 + 2 (v0 v1 + v1 v2) cos(pi w)
                        + 2 v0 v2 cos(2 pi w).

Grid checks use exact rationals (with the grid's dyadic cosines); the dense
verifier certifies whole bands with a Lipschitz argument.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .filterspec import BandSpec, FrequencyGrid, FrequencySpec, cos_pi, exact
from .fixedpoint import QuantizedFilter, pow2

Side = Literal["lower", "upper"]


def qform(v0, v1, v2, c):
    """Squared magnitude of (v0, v1, v2) at cos(pi w) = c; cos(2 pi w) = 2c^2 - 1."""
    return v0 * v0 + v1 * v1 + v2 * v2 + 2 * (v0 * v1 + v1 * v2) * c + 2 * v0 * v2 * (2 * c * c - 1)


def _is_exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in xs)


def mag2_num(b0, b1, b2, omega):
    """|B(e^{j pi omega})|^2.

    Exact when every argument is an int or Fraction, vectorized float otherwise.
    """
    if _is_exact(b0, b1, b2, omega):
        return qform(Fraction(b0), Fraction(b1), Fraction(b2), cos_pi(Fraction(omega)))
    om = np.asarray(omega, dtype=float)
    c1, c2 = np.cos(np.pi * om), np.cos(2 * np.pi * om)
    b0, b1, b2 = float(b0), float(b1), float(b2)
    return b0 * b0 + b1 * b1 + b2 * b2 + 2 * (b0 * b1 + b1 * b2) * c1 + 2 * b0 * b2 * c2


def mag2_den(a1, a2, omega):
    """|A(e^{j pi omega})|^2 with a0 = 1."""
    return mag2_num(1, a1, a2, omega)


def is_stable(a1, a2) -> bool:
    """Strict stability triangle of a monic second-order denominator."""
    return -2 < a1 < 2 and abs(a1) - 1 < a2 < 1


def stable_integer(a1: int, a2: int, w: int, g_a: int) -> bool:
    """Integer form of :func:`is_stable` for a' codes at (w, g_a)."""
    e = w - 1 - g_a
    if e >= 0:
        s = 1 << e
        return abs(a1) < 2 * s and a2 < s and abs(a1) - s < a2
    return is_stable(a1 * pow2(-e), a2 * pow2(-e))


@dataclass(frozen=True)
class Violation:
    omega: Fraction
    side: Side
    index: int = -1


@dataclass(frozen=True)
class GridEnvelope:
    """Per grid point, the admissible interval for |B|^2 given a fixed denominator."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]


def grid_envelope(a1, a2, grid: FrequencyGrid) -> GridEnvelope:
    a1, a2 = exact(a1), exact(a2)
    lo, hi = [], []
    for p, c in zip(grid.points, grid.cos1):
        qa = qform(Fraction(1), a1, a2, c)
        lo.append(qa * p.beta_lo_sq)
        hi.append(qa * p.beta_hi_sq)
    return GridEnvelope(tuple(lo), tuple(hi))


def _require_stable(q: QuantizedFilter) -> None:
    if not stable_integer(q.a1, q.a2, q.w, q.fmt_a.g):
        a1, a2 = q.a
        raise ValueError(f"unstable denominator a1={a1}, a2={a2}")


def integer_forms(q: QuantizedFilter):
    """(s, r): denominator lead coefficient in a'-units and the ratio (lsb_a/lsb_b)^2."""
    e = q.w - 1 - q.fmt_a.g
    s = pow2(e)
    r = pow2(2 * (q.fmt_a.lsb - q.fmt_b.lsb))
    return s, r


def check_grid(q: QuantizedFilter, grid: FrequencyGrid) -> Violation | None:
    """First grid point where the bounds fail, or None; exact arithmetic.

    A float pass screens out points with a comfortable margin; only the
    remainder is decided with rationals.
    """
    _require_stable(q)
    s, r = integer_forms(q)
    arr = grid.arrays
    c = arr["c"]
    fs, fr = float(s), float(r)
    qa = qform(fs, float(q.a1), float(q.a2), c)
    qb = qform(float(q.b0), float(q.b1), float(q.b2), c)
    hi = arr["hi2"] * fr * qa
    lo = arr["lo2"] * fr * qa
    scale = 1e-9 * (np.abs(hi) + np.abs(qb) + 1.0)
    doubt = np.nonzero((qb > hi - scale) | (qb < lo + scale))[0]
    for i in doubt:
        p, ci = grid.points[i], grid.cos1[i]
        qa_e = qform(s, q.a1, q.a2, ci) * r
        qb_e = qform(q.b0, q.b1, q.b2, ci)
        if qb_e > p.beta_hi_sq * qa_e:
            return Violation(p.omega, "upper", int(i))
        if qb_e < p.beta_lo_sq * qa_e:
            return Violation(p.omega, "lower", int(i))
    return None


def satisfies_grid(q: QuantizedFilter, grid: FrequencyGrid) -> bool:
    return check_grid(q, grid) is None


# -- dense verification -------------------------------------------------------

@dataclass(frozen=True)
class Verified:
    samples: int


@dataclass(frozen=True)
class Counterexample:
    """A frequency where the spec could not be certified.

    ``violated`` is True when the bound is exactly broken at ``omega``; False
    means the bound could not be certified there: the slack is too small for
    the Lipschitz test on an interpolated bound, or the exact minimum is
    negative by less than the dyadic cosine at ``omega`` resolves.
    """

    omega: Fraction
    side: Side
    violated: bool = True


def _lipschitz(v: Sequence[float]) -> float:
    """Bound on |d/dw qform(v)| for w in units of pi."""
    v0, v1, v2 = (abs(float(x)) for x in v)
    return 2 * math.pi * (v0 * v1 + v1 * v2 + 2 * v0 * v2)


def _bound_values(bound, om: np.ndarray) -> np.ndarray:
    if bound.is_constant:
        return np.full(om.shape, float(bound.value[0]))
    return np.interp(om, [float(o) for o in bound.omega], [float(v) for v in bound.value])


def _exact_slack(q: QuantizedFilter, band: BandSpec, omega: Fraction, side: Side) -> Fraction:
    a1, a2, b0, b1, b2 = q.to_real()
    c = cos_pi(omega)
    qa = qform(Fraction(1), a1, a2, c)
    qb = qform(b0, b1, b2, c)
    if side == "upper":
        beta = band.beta_hi.at(omega)
        return qa * beta * beta - qb
    beta = band.beta_lo.at(omega)
    return qb - qa * beta * beta


def _poly_c(v) -> tuple[Fraction, Fraction, Fraction]:
    """qform(v, c) as (k0, k1, k2) with qform = k0 + k1 c + k2 c^2."""
    v0, v1, v2 = v
    return (v0 * v0 + v1 * v1 + v2 * v2 - 2 * v0 * v2, 2 * (v0 * v1 + v1 * v2), 4 * v0 * v2)


def _segment_min(q: QuantizedFilter, beta: Fraction, side: Side, c_lo: Fraction,
                 c_hi: Fraction) -> tuple[Fraction, Fraction]:
    """Exact minimum of the slack over c in [c_lo, c_hi] for a constant bound.

    With cos(2 pi w) = 2c^2 - 1 both squared magnitudes are quadratics in
    c = cos(pi w), so the slack is one too; returns (min, argmin c).
    """
    a1, a2, b0, b1, b2 = q.to_real()
    pa, pb = _poly_c((Fraction(1), a1, a2)), _poly_c((b0, b1, b2))
    sgn = 1 if side == "upper" else -1
    k0, k1, k2 = (sgn * (beta * beta * x - y) for x, y in zip(pa, pb))
    cands = [c_lo, c_hi]
    if k2 > 0:
        v = -k1 / (2 * k2)
        if c_lo < v < c_hi:
            cands.append(v)
    vals = [(k0 + k1 * c + k2 * c * c, c) for c in cands]
    return min(vals)


def _omega_of(c: Fraction, lo: Fraction, hi: Fraction) -> Fraction:
    w = exact(math.acos(max(-1.0, min(1.0, float(c)))) / math.pi)
    return min(max(w, lo), hi)


def verify_spec(q: QuantizedFilter, spec: FrequencySpec, step: float = 1e-4,
                max_depth: int = 40) -> Verified | Counterexample:
    """Certify the magnitude bounds on every band, not just on a grid.

    First every band is sampled at ``step`` and any sample with exactly
    negative slack is returned.  Then each segment between bound breakpoints
    is certified: where the bound is constant the slack is a quadratic in
    cos(pi w) and its minimum is found exactly; elsewhere the slack is
    Lipschitz with a constant built from the coefficient magnitudes and the
    bound's slope, and intervals are bisected until ``(f0 + f1)/2 - L h/2``
    is positive.  Cosines at band edges are the dyadic values used by the
    grid checks.
    """
    _require_stable(q)
    a1, a2, b0, b1, b2 = (float(x) for x in q.to_real())
    la, lb = _lipschitz((1.0, a1, a2)), _lipschitz((b0, b1, b2))
    ma = (1 + abs(a1) + abs(a2)) ** 2
    mb = (abs(b0) + abs(b1) + abs(b2)) ** 2
    total = 0
    work = []
    for band in spec.bands:
        lo_w, hi_w = float(band.omega_lo), float(band.omega_hi)
        crit = [float(x) for x in band.critical_points()]
        n = max(int(math.ceil((hi_w - lo_w) / step)), 1)
        om = np.union1d(np.linspace(lo_w, hi_w, n + 1), crit)
        sides: list[Side] = ["upper"] + (["lower"] if band.has_lower else [])
        for side in sides:
            bound = band.beta_hi if side == "upper" else band.beta_lo

            def slack(x: np.ndarray, bound=bound, side=side) -> np.ndarray:
                qa = mag2_den(a1, a2, x)
                qb = mag2_num(b0, b1, b2, x)
                beta = _bound_values(bound, x)
                return qa * beta * beta - qb if side == "upper" else qb - qa * beta * beta

            bmax = max(float(v) for v in bound.value)
            eps = 1e-12 * (1.0 + ma * bmax * bmax + mb)
            f = slack(om)
            total += len(om)
            for j in np.argsort(f):
                if f[j] >= eps:
                    break
                w = exact(float(om[j]))
                if _exact_slack(q, band, w, side) < 0:
                    return Counterexample(w, side, True)
            work.append((band, side, bound, slack, eps, om, f))

    touch = None
    for band, side, bound, slack, eps, om, f in work:
        cps = band.critical_points()
        for s0, s1 in zip(cps, cps[1:]) if len(cps) > 1 else [(cps[0], cps[0])]:
            b_lo, b_hi = bound.at(s0), bound.at(s1)
            if b_lo == b_hi:
                c_lo, c_hi = cos_pi(s1), cos_pi(s0)
                m, c = _segment_min(q, b_lo, side, c_lo, c_hi)
                total += 1
                if m < 0:
                    w = _omega_of(c, s0, s1)
                    return Counterexample(w, side, _exact_slack(q, band, w, side) < 0)
                continue
            # interpolated bound: Lipschitz bisection on the samples inside [s0, s1]
            x0f, x1f = float(s0), float(s1)
            idx = np.nonzero((om >= x0f) & (om <= x1f))[0]
            stack = [(om[j], om[j + 1], f[j], f[j + 1], 0) for j in idx[:-1]]
            while stack:
                x0, x1, f0, f1, depth = stack.pop()
                h = x1 - x0
                bl, br = _bound_values(bound, np.array([x0, x1]))
                bm = max(bl, br)
                lip = la * bm * bm + ma * 2 * bm * abs(br - bl) / h + lb if h > 0 else 0.0
                if 0.5 * (f0 + f1) - 0.5 * lip * h >= eps:
                    continue
                if depth >= max_depth or min(f0, f1) < eps:
                    # a bound touched too closely to certify here
                    xm = x0 if f0 <= f1 else x1
                    touch = touch or Counterexample(exact(float(xm)), side, False)
                    continue
                xm = 0.5 * (x0 + x1)
                fm = float(slack(np.array([xm]))[0])
                total += 1
                if fm < eps and _exact_slack(q, band, exact(float(xm)), side) < 0:
                    return Counterexample(exact(float(xm)), side, True)
                stack.append((x0, xm, f0, fm, depth + 1))
                stack.append((xm, x1, fm, f1, depth + 1))
    return touch if touch is not None else Verified(total)


def response_csv(q: QuantizedFilter, spec: FrequencySpec, n: int = 1001) -> str:
    """CSV with columns omega, magnitude, beta_lo, beta_hi (bounds blank in gaps)."""
    a1, a2, b0, b1, b2 = (float(x) for x in q.to_real())
    om = np.linspace(0.0, 1.0, n)
    mag = np.sqrt(mag2_num(b0, b1, b2, om) / mag2_den(a1, a2, om))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["omega", "magnitude", "beta_lo", "beta_hi"])
    for w, m in zip(om, mag):
        bands = spec.bands_at(Fraction(repr(float(w))))
        if bands:
            blo = max(float(b.beta_lo.at(Fraction(repr(float(w))))) for b in bands)
            bhi = min(float(b.beta_hi.at(Fraction(repr(float(w))))) for b in bands)
            wr.writerow([f"{w:.6f}", f"{m:.12g}", f"{blo:.12g}", f"{bhi:.12g}"])
        else:
            wr.writerow([f"{w:.6f}", f"{m:.12g}", "", ""])
    return buf.getvalue()
