"""Brute-force verification of the optimizer: exhaustive log-grid search
over level-size increments, with optional zoom refinement.

This is the independent check on the descent-based solver. It evaluates
the delay model on every grid combination, masks out points that violate
the resource constraints or fall outside the model's meaningful region
(clamped miss-rate law, saturated queue), and takes the minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import amat_components
from .params import ConstraintSet, Depth, DomainError, HierarchyPoint, TechParams

__all__ = ["GridSpec", "GridResult", "grid_search", "refine_search"]

_CHUNK = 200_000


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced increment grid: values min_area * 10**(k / points_per_decade)
    up to max_area. Doubling points_per_decade yields a superset grid."""

    min_area: float
    max_area: float
    points_per_decade: int = 24

    def validate(self) -> None:
        if not self.min_area > 0:
            raise DomainError(f"min_area must be > 0, got {self.min_area}")
        if not self.max_area > self.min_area:
            raise DomainError("max_area must exceed min_area")
        if self.points_per_decade < 8:
            raise DomainError(
                f"points_per_decade must be >= 8, got {self.points_per_decade}")

    def axis(self) -> np.ndarray:
        n = int(math.floor(self.points_per_decade
                           * math.log10(self.max_area / self.min_area) + 1e-9))
        pts = self.min_area * 10.0 ** (np.arange(n + 1) / self.points_per_decade)
        return pts[pts <= self.max_area * (1 + 1e-12)]


@dataclass(frozen=True)
class GridResult:
    feasible: bool
    objective: float
    point: Optional[HierarchyPoint]
    n_evaluated: int
    n_feasible: int


def _masked_min(depth: Depth, axes, p: TechParams, cons: ConstraintSet,
                top: int = 1):
    """Evaluate all increment combinations (Cartesian product of axes) in
    chunks; return (best objective, best increments, n_eval, n_feasible,
    top list). The top list holds up to ``top`` (value, increments) pairs
    sorted by value."""
    nd = int(depth)
    sizes = [len(ax) for ax in axes]
    total = int(np.prod(sizes))
    n_feas = 0
    leaders: list = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        incr = np.empty((len(idx), nd))
        rem = idx
        for j in range(nd - 1, -1, -1):
            incr[:, j] = axes[j][rem % sizes[j]]
            rem = rem // sizes[j]
        areas = np.cumsum(incr, axis=1)
        comp = amat_components(depth, *(areas[:, k] for k in range(nd)), p=p)
        vals = np.asarray(comp["amat"], dtype=float)
        mask = np.isfinite(vals) & ~np.asarray(comp["clamped"])
        for name in cons.present():
            lim = cons.limit(name)
            if name == "a_max":
                gv = areas.sum(axis=1)
            elif name == "p_max":
                gv = np.sum(p.rho * np.sqrt(areas / p.alpha), axis=1)
            elif name == "m_d_max":
                gv = np.asarray(comp["m_d"], dtype=float)
            else:
                gv = np.asarray(comp["m_s"], dtype=float)
            mask &= gv <= lim
        n_feas += int(mask.sum())
        if mask.any():
            masked = np.where(mask, vals, math.inf)
            take = min(top, len(masked))
            part = np.argpartition(masked, take - 1)[:take]
            leaders.extend((float(masked[i]), incr[i].copy()) for i in part
                           if math.isfinite(masked[i]))
            leaders.sort(key=lambda t: t[0])
            del leaders[top:]
    if not leaders:
        return math.inf, None, total, n_feas, []
    return leaders[0][0], leaders[0][1], total, n_feas, leaders


def grid_search(depth: Depth, p: TechParams, cons: ConstraintSet,
                grid: GridSpec) -> GridResult:
    """Exhaustive search of the increment grid for one depth."""
    p.validate()
    cons.validate()
    grid.validate()
    depth = Depth(depth)
    ax = grid.axis()
    best_val, best_incr, n_eval, n_feas, _ = _masked_min(
        depth, [ax] * int(depth), p, cons)
    if best_incr is None:
        return GridResult(False, math.inf, None, n_eval, 0)
    return GridResult(True, best_val,
                      HierarchyPoint.from_areas(np.cumsum(best_incr)),
                      n_eval, n_feas)


def refine_search(depth: Depth, p: TechParams, cons: ConstraintSet,
                  grid: GridSpec, rounds: int = 14,
                  points_per_round: int = 17, tracks: int = 3) -> GridResult:
    """Grid search followed by zoom refinement from several coarse leaders.

    Each track re-grids a log-space window centered on its incumbent and
    halves the window each round, so the located minimum converges well
    past the starting resolution. Multiple well-separated starting points
    guard against a zoom track following the wrong valley branch."""
    p.validate()
    cons.validate()
    grid.validate()
    depth = Depth(depth)
    ax = grid.axis()
    step = math.log10(ax[1] / ax[0])
    best_val, best_incr, n_eval, n_feas, leaders = _masked_min(
        depth, [ax] * int(depth), p, cons, top=64)
    if best_incr is None:
        return GridResult(False, math.inf, None, n_eval, 0)
    # pick up to ``tracks`` leaders pairwise separated by > 1.9 grid steps
    starts = []
    for val, inc in leaders:
        loginc = np.log10(inc)
        if all(np.max(np.abs(loginc - np.log10(s))) > 1.9 * step for s in starts):
            starts.append(inc)
        if len(starts) >= tracks:
            break
    for start in starts:
        track_val, track_incr = math.inf, start
        width = step
        for _ in range(rounds):
            axes = []
            for j in range(int(depth)):
                lo = math.log10(track_incr[j]) - width
                hi = math.log10(track_incr[j]) + width
                axes.append(np.logspace(lo, hi, points_per_round))
            val, inc, ne, nf = _masked_min(depth, axes, p, cons)[:4]
            n_eval += ne
            n_feas += nf
            if inc is not None and val < track_val:
                track_val, track_incr = val, inc
            width *= 0.5
        if track_val < best_val:
            best_val, best_incr = track_val, track_incr
    return GridResult(True, best_val,
                      HierarchyPoint.from_areas(np.cumsum(best_incr)),
                      n_eval, n_feas)
