"""Frequency specifications, built-in benchmarks and grid discretization.

Frequencies are normalized to [0, 1] in units of pi rad/sample.  Bounds on
``|H|`` are either constants or piecewise-linear tables; every value is kept
as an exact rational so that grid checks downstream can be exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np

Number = Union[int, float, str, Fraction]

DEFAULT_POINTS_PER_BAND = 300
DEFAULT_HP0_TAU = Fraction(1, 50)


def exact(x: Number) -> Fraction:
    """Exact rational for a user-supplied number.

    Floats are read through their shortest decimal repr, so ``0.9`` becomes
    exactly 9/10 rather than the nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x}")
        return Fraction(repr(x))
    return Fraction(str(x).strip())


@dataclass(frozen=True)
class Bound:
    """A magnitude bound: a constant (empty ``omega``) or a linear interpolant.

    Outside the table the end values are held constant.
    """

    omega: tuple[Fraction, ...] = ()
    value: tuple[Fraction, ...] = (Fraction(0),)

    def __post_init__(self) -> None:
        if self.omega:
            if len(self.omega) != len(self.value) or len(self.omega) < 2:
                raise ValueError("a bound table needs matching omega/value lists of length >= 2")
            if any(b <= a for a, b in zip(self.omega, self.omega[1:])):
                raise ValueError("bound table omegas must be strictly increasing")
        elif len(self.value) != 1:
            raise ValueError("a constant bound has exactly one value")

    @classmethod
    def constant(cls, v: Number) -> "Bound":
        return cls((), (exact(v),))

    @classmethod
    def table(cls, omega: Sequence[Number], value: Sequence[Number]) -> "Bound":
        return cls(tuple(exact(o) for o in omega), tuple(exact(v) for v in value))

    @property
    def is_constant(self) -> bool:
        return not self.omega

    def at(self, omega: Number) -> Fraction:
        if self.is_constant:
            return self.value[0]
        w = exact(omega)
        om, val = self.omega, self.value
        if w <= om[0]:
            return val[0]
        if w >= om[-1]:
            return val[-1]
        lo, hi = 0, len(om) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if om[mid] <= w:
                lo = mid
            else:
                hi = mid
        t = (w - om[lo]) / (om[hi] - om[lo])
        return val[lo] + t * (val[hi] - val[lo])

    def breakpoints(self, lo: Fraction, hi: Fraction) -> list[Fraction]:
        """Table abscissae strictly inside (lo, hi)."""
        return [o for o in self.omega if lo < o < hi]

    def to_obj(self):
        if self.is_constant:
            return _num_out(self.value[0])
        return {"omega": [_num_out(o) for o in self.omega],
                "value": [_num_out(v) for v in self.value]}

    @classmethod
    def from_obj(cls, obj) -> "Bound":
        if isinstance(obj, dict):
            if set(obj) != {"omega", "value"}:
                raise ValueError(f"bound table needs exactly 'omega' and 'value', got {sorted(obj)}")
            return cls.table(obj["omega"], obj["value"])
        return cls.constant(obj)


def _num_out(x: Fraction) -> float | int:
    if x.denominator == 1:
        return int(x)
    return float(x)


@dataclass(frozen=True)
class BandSpec:
    omega_lo: Fraction
    omega_hi: Fraction
    beta_lo: Bound
    beta_hi: Bound

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega_lo", exact(self.omega_lo))
        object.__setattr__(self, "omega_hi", exact(self.omega_hi))
        if not (0 <= self.omega_lo <= self.omega_hi <= 1):
            raise ValueError(f"band [{self.omega_lo}, {self.omega_hi}] not inside [0, 1]")
        # both bounds are linear between the union of breakpoints
        for w in self.critical_points():
            lo, hi = self.beta_lo.at(w), self.beta_hi.at(w)
            if lo < 0:
                raise ValueError(f"negative lower bound at omega={w}")
            if lo > hi:
                raise ValueError(f"lower bound exceeds upper bound at omega={w}")

    def critical_points(self) -> list[Fraction]:
        pts = {self.omega_lo, self.omega_hi}
        pts.update(self.beta_lo.breakpoints(self.omega_lo, self.omega_hi))
        pts.update(self.beta_hi.breakpoints(self.omega_lo, self.omega_hi))
        return sorted(pts)

    def contains(self, omega: Number) -> bool:
        return self.omega_lo <= exact(omega) <= self.omega_hi

    @property
    def has_lower(self) -> bool:
        """False when the lower bound is identically zero on the band."""
        return any(self.beta_lo.at(w) > 0 for w in self.critical_points())


@dataclass(frozen=True)
class FrequencySpec:
    name: str
    bands: tuple[BandSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bands", tuple(self.bands))
        if not self.bands:
            raise ValueError("a specification needs at least one band")
        ordered = sorted(self.bands, key=lambda b: (b.omega_lo, b.omega_hi))
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.omega_lo < prev.omega_hi:
                raise ValueError(
                    f"bands [{prev.omega_lo}, {prev.omega_hi}] and "
                    f"[{nxt.omega_lo}, {nxt.omega_hi}] overlap")

    def bands_at(self, omega: Number) -> list[BandSpec]:
        return [b for b in self.bands if b.contains(omega)]

    def to_toml(self) -> str:
        """Serialize in the spec-file format read by :func:`load_spec`."""
        lines = [f"name = {json.dumps(self.name)}", ""]
        for b in self.bands:
            lines.append("[[bands]]")
            lines.append(f"lo = {_toml_num(b.omega_lo)}")
            lines.append(f"hi = {_toml_num(b.omega_hi)}")
            for key, bound in (("beta_lo", b.beta_lo), ("beta_hi", b.beta_hi)):
                if bound.is_constant:
                    lines.append(f"{key} = {_toml_num(bound.value[0])}")
                else:
                    om = ", ".join(_toml_num(o) for o in bound.omega)
                    va = ", ".join(_toml_num(v) for v in bound.value)
                    lines.append(f"{key} = {{ omega = [{om}], value = [{va}] }}")
            lines.append("")
        return "\n".join(lines)


def _toml_num(x: Fraction) -> str:
    if x.denominator == 1:
        return f"{int(x)}.0"
    f = float(x)
    if Fraction(repr(f)) == x:
        return repr(f)
    # no short decimal form: keep the exact rational as a quoted "p/q"
    return json.dumps(str(x))


def spec_from_obj(obj: dict) -> FrequencySpec:
    # a [design] table carries command-line defaults and is read by the CLI
    unknown = set(obj) - {"name", "bands", "design"}
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    bands = []
    for i, b in enumerate(obj.get("bands", [])):
        missing = {"lo", "hi", "beta_lo", "beta_hi"} - set(b)
        if missing:
            raise ValueError(f"band {i} lacks {sorted(missing)}")
        bands.append(BandSpec(exact(b["lo"]), exact(b["hi"]),
                              Bound.from_obj(b["beta_lo"]), Bound.from_obj(b["beta_hi"])))
    return FrequencySpec(str(obj.get("name", "spec")), tuple(bands))


def load_spec(path: str | Path) -> FrequencySpec:
    """Read a TOML spec file."""
    import tomli

    with open(path, "rb") as fh:
        return spec_from_obj(tomli.load(fh))


def parse_spec(text: str) -> FrequencySpec:
    import tomli

    return spec_from_obj(tomli.loads(text))


# -- benchmarks ---------------------------------------------------------------

_FAMILY_K = {"lp1": range(0, 7), "lp2": range(0, 5), "lp3": range(0, 5)}


def _lowpass(name: str, wp: Fraction, ws: Fraction, delta: Fraction) -> FrequencySpec:
    return FrequencySpec(name, (
        BandSpec(Fraction(0), wp, Bound.constant(1 - delta), Bound.constant(1 + delta)),
        BandSpec(ws, Fraction(1), Bound.constant(0), Bound.constant(delta)),
    ))


def hp0_reference() -> tuple[list[Fraction], list[Fraction]]:
    """Tabulated target magnitude of the hp0 compensator (101 points)."""
    raw = json.loads(resources.files("iirforge.data").joinpath("hp0_response.json").read_text())
    return [exact(o) for o in raw["omega"]], [exact(v) for v in raw["value"]]


def builtin_benchmark(name: str, k: int | None = None, tau: Number = DEFAULT_HP0_TAU) -> FrequencySpec:
    """Published lowpass families lp1..lp4 and the hp0 compensator."""
    if k is None and "_" in name:
        name, ks = name.split("_", 1)
        try:
            k = int(ks)
        except ValueError:
            raise ValueError(f"bad benchmark index in {name}_{ks}") from None
    tenth, twentieth = Fraction(1, 10), Fraction(1, 20)
    if name in _FAMILY_K:
        if k is None or k not in _FAMILY_K[name]:
            rng = _FAMILY_K[name]
            raise ValueError(f"{name} needs k in {rng.start}..{rng.stop - 1}, got {k}")
        full = f"{name}_{k}"
        if name == "lp1":
            return _lowpass(full, Fraction(3, 10), Fraction(7, 10), tenth - Fraction(k, 100))
        if name == "lp2":
            return _lowpass(full, Fraction(3, 10) + k * twentieth, Fraction(7, 10), tenth)
        return _lowpass(full, Fraction(3, 10), Fraction(7, 10) - k * twentieth, tenth)
    if k is not None:
        raise ValueError(f"{name} takes no index")
    if name == "lp4":
        return _lowpass("lp4", Fraction(1, 2), Fraction(9, 10), tenth)
    if name == "hp0":
        t = exact(tau)
        if not 0 <= t < 1:
            raise ValueError("tau must lie in [0, 1)")
        om, val = hp0_reference()
        keep = [i for i, o in enumerate(om) if o > Fraction(2, 100)]
        om = [om[i] for i in keep]
        val = [val[i] for i in keep]
        lo = Bound(tuple(om), tuple((1 - t) * v for v in val))
        hi = Bound(tuple(om), tuple((1 + t) * v for v in val))
        return FrequencySpec("hp0", (BandSpec(om[0], om[-1], lo, hi),))
    raise ValueError(f"unknown benchmark {name!r}; expected lp1, lp2, lp3, lp4 or hp0")


BENCHMARK_NAMES = tuple(
    [f"lp1_{k}" for k in range(7)] + [f"lp2_{k}" for k in range(5)]
    + [f"lp3_{k}" for k in range(5)] + ["lp4", "hp0"])


# -- grids --------------------------------------------------------------------

_EXACT_COS = {
    Fraction(0): Fraction(1), Fraction(1, 3): Fraction(1, 2), Fraction(1, 2): Fraction(0),
    Fraction(2, 3): Fraction(-1, 2), Fraction(1): Fraction(-1),
}


def cos_pi(omega: Fraction) -> Fraction:
    """cos(pi*omega) as an exact rational.

    Exact where the cosine is rational; elsewhere the correctly rounded double,
    read back as a dyadic rational.  All exact checks use this same value.
    """
    c = _EXACT_COS.get(omega)
    if c is not None:
        return c
    return Fraction(math.cos(math.pi * float(omega)))


@dataclass(frozen=True)
class GridPoint:
    omega: Fraction
    beta_lo_sq: Fraction
    beta_hi_sq: Fraction


@dataclass(frozen=True)
class FrequencyGrid:
    points: tuple[GridPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def cos1(self) -> tuple[Fraction, ...]:
        """Exact cos(pi*omega) per point."""
        return tuple(cos_pi(p.omega) for p in self.points)

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        """Float views used by the search kernels: c = cos(pi w), s2 = sin^2."""
        c = np.array([float(x) for x in self.cos1])
        s2 = np.array([float(1 - x * x) for x in self.cos1])
        lo = np.array([float(p.beta_lo_sq) for p in self.points])
        hi = np.array([float(p.beta_hi_sq) for p in self.points])
        om = np.array([float(p.omega) for p in self.points])
        return {"omega": om, "c": c, "s2": s2, "lo2": lo, "hi2": hi}

    def omegas(self) -> list[Fraction]:
        return [p.omega for p in self.points]


def _points_at(spec: FrequencySpec, w: Fraction) -> list[GridPoint]:
    out = []
    for band in spec.bands_at(w):
        lo, hi = band.beta_lo.at(w), band.beta_hi.at(w)
        out.append(GridPoint(w, lo * lo, hi * hi))
    return out


def _sorted_grid(points) -> FrequencyGrid:
    uniq = sorted(set(points), key=lambda p: (p.omega, p.beta_lo_sq, p.beta_hi_sq))
    return FrequencyGrid(tuple(uniq))


def discretize(spec: FrequencySpec, points_per_band: int = DEFAULT_POINTS_PER_BAND) -> FrequencyGrid:
    """Uniform, endpoint-inclusive grid on every band."""
    if points_per_band < 2:
        raise ValueError("points_per_band must be >= 2")
    pts = []
    n = points_per_band - 1
    for band in spec.bands:
        span = band.omega_hi - band.omega_lo
        for j in range(points_per_band):
            w = band.omega_lo + span * j / n
            lo, hi = band.beta_lo.at(w), band.beta_hi.at(w)
            pts.append(GridPoint(w, lo * lo, hi * hi))
    return _sorted_grid(pts)


def append_frequency(grid: FrequencyGrid, omega: Number, spec: FrequencySpec) -> FrequencyGrid:
    """Grid with ``omega`` added (no-op if already present)."""
    w = exact(omega)
    new = _points_at(spec, w)
    if not new:
        raise ValueError(f"omega={float(w)} lies outside every band of {spec.name}")
    if any(p.omega == w for p in grid.points):
        return grid
    return _sorted_grid(list(grid.points) + new)
