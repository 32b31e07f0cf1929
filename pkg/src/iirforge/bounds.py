"""Coefficient boxes and MSB positions derived before the search.

Stability confines the denominator to the open triangle, which gives
``|A|^2 <= 16`` on the unit circle and therefore ``|B(w)|^2 <= 16 beta_hi(w)^2``
for every feasible numerator.  Each such constraint is an (degenerate)
ellipsoid ``b^T Q(w) b <= 16 beta_hi^2``; adding two of them gives a proper
ellipsoid whose extent along each axis has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filterspec import FrequencyGrid, FrequencySpec
from .fixedpoint import CoefficientFormat, integer_range, msb_for_bound

PAIR_SUBSAMPLE = 32
PD_TOL = 1e-9
_SAFETY = 1 + 1e-9


@dataclass(frozen=True)
class BBox:
    """Symmetric real box |b_k| <= bound[k] and the MSB that covers it."""

    bound: tuple[float, float, float]
    g_b: int

    def integer_box(self, w: int, g_b: int) -> tuple[tuple[int, int], ...]:
        """Integer code ranges for (b0, b1, b2) at word length w and MSB g_b."""
        fmt = CoefficientFormat(w, g_b)
        lo, hi = integer_range(fmt)
        out = []
        for bk in self.bound:
            m = math.floor(bk / float(fmt.scale) * _SAFETY)
            out.append((max(lo, -m), min(hi, m)))
        return tuple(out)


def a_bounds() -> dict:
    """Open stability box of the denominator and its MSB."""
    return {"a1": (-2, 2), "a2": (-1, 1), "g_a": 1}


def stable_pairs(w: int, g_a: int) -> np.ndarray:
    """All integer (a1', a2') at (w, g_a) strictly inside the stability triangle."""
    lo, hi = integer_range(CoefficientFormat(w, g_a))
    a1 = np.arange(lo, hi + 1, dtype=np.int64)
    A1, A2 = np.meshgrid(a1, a1, indexing="ij")
    A1, A2 = A1.ravel(), A2.ravel()
    e = w - 1 - g_a
    if e >= 0:
        s = 1 << e
        keep = (np.abs(A1) < 2 * s) & (A2 < s) & (np.abs(A1) - s < A2)
    else:  # the whole integer range lies well inside the triangle's scale
        s = 2.0 ** e
        keep = (np.abs(A1) * s < 2) & (A2 * s < 1) & (np.abs(A1) * s - 1 < A2 * s)
    return np.stack([A1[keep], A2[keep]], axis=1)


def q_matrix(omega: float) -> np.ndarray:
    """Q_kl = cos((k - l) pi omega), so |B|^2 = b^T Q b."""
    c1, c2 = math.cos(math.pi * omega), math.cos(2 * math.pi * omega)
    return np.array([[1.0, c1, c2], [c1, 1.0, c1], [c2, c1, 1.0]])


def _inv_diag_pd(m: np.ndarray) -> np.ndarray | None:
    """Diagonal of m^-1 via cofactors, or None if m is not positive definite."""
    d1 = m[0, 0]
    d2 = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    if d1 <= PD_TOL or d2 <= PD_TOL or det <= PD_TOL:
        return None
    c00 = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    c11 = m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
    c22 = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([c00, c11, c22]) / det


def b_bounds(spec: FrequencySpec, grid: FrequencyGrid) -> BBox:
    """Outer box on the numerator from pairs of frequency ellipsoids."""
    pts = sorted(grid.points, key=lambda p: (p.omega, p.beta_lo_sq, p.beta_hi_sq))
    if len({p.omega for p in pts}) < 2:
        raise ValueError("b_bounds needs at least two distinct frequencies")
    idx = sorted(set(np.linspace(0, len(pts) - 1, min(PAIR_SUBSAMPLE, len(pts))).round().astype(int)))
    sub = [pts[i] for i in idx]
    qs = [q_matrix(float(p.omega)) for p in sub]
    rhs = [16.0 * float(p.beta_hi_sq) for p in sub]
    best = np.full(3, np.inf)
    for i in range(len(sub)):
        for j in range(i + 1, len(sub)):
            inv = _inv_diag_pd(qs[i] + qs[j])
            if inv is None:
                continue
            best = np.minimum(best, np.sqrt((rhs[i] + rhs[j]) * inv))
    if not np.all(np.isfinite(best)):
        raise ValueError(f"no positive-definite frequency pair in {spec.name}; degenerate spec")
    best = best * _SAFETY
    # Q is persymmetric, so b0 and b2 share a bound up to rounding
    b02 = max(best[0], best[2])
    bound = (float(b02), float(best[1]), float(b02))
    top = max(bound)
    g_b = msb_for_bound(top) if top > 0 else 0
    return BBox(bound, g_b)


def default_g_b_range(box: BBox) -> tuple[int, int]:
    return (box.g_b - 2, box.g_b)


def tighten_bounds(problem) -> dict[int, tuple[tuple[int, int], ...]] | None:
    """Exact integer extrema of each b'_k per g_b over the feasible set.

    Runs the exhaustive enumerator without any cost; returns None when no
    coefficient set at all satisfies the grid (global infeasibility).
    """
    from .search import enumerate_feasible

    boxes: dict[int, list[list[int]]] = {}
    for q in enumerate_feasible(problem, use_sbc=False):
        g = q.fmt_b.g
        cur = boxes.setdefault(g, [[q.b0, q.b0], [q.b1, q.b1], [q.b2, q.b2]])
        for k, v in enumerate(q.b_int):
            cur[k][0] = min(cur[k][0], v)
            cur[k][1] = max(cur[k][1], v)
    if not boxes:
        return None
    return {g: tuple((lo, hi) for lo, hi in v) for g, v in sorted(boxes.items())}
