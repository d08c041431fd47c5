"""Piecewise-constant coefficient curves.

Every pricing formula in the package consumes coefficients only through
their accumulated integrals over ``[t, T]``, so a curve is stored together
with its running integral (plain and squared) at the breakpoints and
integrals are exact segment sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DomainError

KINDS = ("rate", "intensity", "volatility")


@dataclass(frozen=True)
class CoefficientCurve:
    """Piecewise-constant function of calendar time (years).

    ``values[j]`` holds on ``[edges[j], edges[j+1])`` where
    ``edges = (start, *breakpoints, domain_end)``; the last segment is closed
    on the right.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    domain_end: float = math.inf
    start: float = 0.0
    kind: str = "rate"
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_sq: np.ndarray = field(init=False, repr=False, compare=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown curve kind {self.kind!r}")
        if len(vals) != len(bps) + 1:
            raise ArgumentError(
                f"{len(bps)} breakpoints need {len(bps) + 1} values, got {len(vals)}"
            )
        if not all(math.isfinite(v) for v in vals):
            raise ArgumentError("curve values must be finite")
        edges = np.array((self.start, *bps, self.domain_end), dtype=float)
        if np.any(np.diff(edges) <= 0):
            raise ArgumentError("breakpoints must be strictly ascending inside (start, domain_end)")
        if self.kind == "volatility" and min(vals) <= 0:
            raise ArgumentError("volatility curve values must be > 0")
        if self.kind == "intensity" and min(vals) < 0:
            raise ArgumentError("intensity curve values must be >= 0")
        v = np.asarray(vals)
        widths = np.diff(edges[:-1])
        cum = np.concatenate(([0.0], np.cumsum(v[:-1] * widths)))
        cum_sq = np.concatenate(([0.0], np.cumsum(v[:-1] ** 2 * widths)))
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_cum_sq", cum_sq)
        object.__setattr__(self, "_vals", v)

    @classmethod
    def constant(cls, value: float, domain_end: float = math.inf, kind: str = "rate") -> "CoefficientCurve":
        return cls((), (value,), domain_end=domain_end, kind=kind)

    @classmethod
    def from_mapping(cls, block: dict, kind: str = "rate") -> "CoefficientCurve":
        """Build from a config block ``{breakpoints: [...], values: [...]}`` or a bare number."""
        if isinstance(block, (int, float)):
            return cls.constant(float(block), kind=kind)
        return cls(
            tuple(block.get("breakpoints", ())),
            tuple(block["values"]),
            domain_end=float(block.get("domain_end", math.inf)),
            start=float(block.get("start", 0.0)),
            kind=kind,
        )

    def to_mapping(self) -> dict:
        out = {"breakpoints": list(self.breakpoints), "values": list(self.values)}
        if math.isfinite(self.domain_end):
            out["domain_end"] = self.domain_end
        return out

    @property
    def edges(self) -> np.ndarray:
        return self._edges.copy()

    def _check_domain(self, s: np.ndarray) -> None:
        if np.any(np.isnan(s)):
            raise ArgumentError("time must not be NaN")
        lo, hi = self._edges[0], self._edges[-1]
        # tolerate representation error at the ends of the domain
        slack = 1e-12 * max(1.0, abs(lo), abs(hi) if math.isfinite(hi) else 1.0)
        if np.any(s < lo - slack) or np.any(s > hi + slack):
            raise DomainError(f"time outside curve domain [{lo}, {hi}]")

    def _segment(self, s: np.ndarray) -> np.ndarray:
        j = np.searchsorted(self._edges[1:-1], s, side="right")
        return j

    def __call__(self, s):
        arr = np.asarray(s, dtype=float)
        self._check_domain(arr)
        out = self._vals[self._segment(arr)]
        return float(out) if out.ndim == 0 else out

    def _antiderivative(self, s: np.ndarray, squared: bool) -> np.ndarray:
        s = np.clip(s, self._edges[0], self._edges[-1])
        j = self._segment(s)
        v = self._vals[j]
        cum = self._cum_sq if squared else self._cum
        level = v * v if squared else v
        return cum[j] + level * (s - self._edges[j])

    def integrate(self, t, T, squared: bool = False):
        """Exact integral of the curve (or its square) over ``[t, T]``."""
        ta = np.asarray(t, dtype=float)
        Ta = np.asarray(T, dtype=float)
        self._check_domain(ta)
        self._check_domain(Ta)
        if np.any(ta > Ta):
            raise ArgumentError("integration requires t <= T")
        out = self._antiderivative(Ta, squared) - self._antiderivative(ta, squared)
        out = np.where(ta == Ta, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def shifted(self, offset: float) -> "CoefficientCurve":
        """Curve plus a constant, e.g. the dividend curve ``r(.) + b``."""
        return self.combine(CoefficientCurve.constant(offset, self.domain_end), lambda a, b: a + b)

    def combine(
        self,
        other: "CoefficientCurve",
        op: Callable[[float, float], float],
        kind: str = "rate",
    ) -> "CoefficientCurve":
        """Pointwise ``op(self, other)`` on the common refinement of both partitions."""
        start = max(self.start, other.start)
        end = min(self.domain_end, other.domain_end)
        cuts = sorted({b for b in (*self.breakpoints, *other.breakpoints) if start < b < end})
        edges = [start, *cuts, end]
        probes = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            probes.append(lo + 0.5 * (hi - lo) if math.isfinite(hi) else lo + 1.0)
        vals = [op(self(p), other(p)) for p in probes]
        return CoefficientCurve(tuple(cuts), tuple(vals), domain_end=end, start=start, kind=kind)

    def levels_on(self, t: float, T: float) -> list[float]:
        """Distinct segment levels touched by the open interval ``(t, T)``."""
        lo = np.searchsorted(self._edges[1:-1], t, side="right")
        hi = np.searchsorted(self._edges[1:-1], T, side="left")
        return list(self.values[lo : hi + 1])


def grid_curve(points: Sequence[float], levels: Sequence[float], kind: str = "rate") -> CoefficientCurve:
    """Curve with ``levels[j]`` on ``[points[j], points[j+1]]``; domain is ``[points[0], points[-1]]``."""
    points = list(points)
    if len(levels) != len(points) - 1:
        raise ArgumentError("need one level per grid cell")
    return CoefficientCurve(
        tuple(points[1:-1]), tuple(levels), domain_end=points[-1], start=points[0], kind=kind
    )
