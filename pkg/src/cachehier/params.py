"""Domain types: technology parameters, hierarchy points, delay breakdowns,
and resource constraint sets.

All areas are normalized to the same unit as the baseline cache size
``alpha``; all times are nanoseconds; power is in units of the baseline
cache power ``rho``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional


class DomainError(ValueError):
    """An argument or parameter is outside its mathematical domain."""


class Depth(IntEnum):
    """Cache hierarchy configuration: number of levels."""

    ONE_LEVEL = 1    # single private level
    TWO_LEVEL = 2    # private L1 + shared L2
    THREE_LEVEL = 3  # private L1 + private L2 + shared L3


@dataclass(frozen=True)
class QueueSpec:
    """Congestion delay model for an interconnect, as a function of the
    access rate x in [0, 1).

    form "mm1":    d(x) = coeff * x / (sat - x), diverging at x = sat
    form "linear": d(x) = coeff * x  (sat is ignored)
    """

    form: str = "mm1"
    coeff: float = 1.0
    sat: float = 1.0

    def validate(self) -> None:
        if self.form not in ("mm1", "linear"):
            raise DomainError(f"queue form must be 'mm1' or 'linear', got {self.form!r}")
        if self.coeff < 0:
            raise DomainError(f"queue coeff must be >= 0, got {self.coeff}")
        if self.form == "mm1" and not self.sat > 0:
            raise DomainError(f"mm1 queue sat must be > 0, got {self.sat}")


@dataclass(frozen=True)
class TechParams:
    """Calibration constants of the analytical delay models.

    tau / alpha / beta: power-law access time t(A) = tau * (A/alpha)**beta.
    chi: constant access time of the fixed-latency reference model.
    mu: baseline miss rate; mu_n: size-independent miss floor from data that
    originates on remote cores; e_n: sharing multiplier on shared-level
    misses; n_cores: clients of a shared level; rho: power of a
    baseline-sized cache; d_d: DRAM access penalty; d_t_coeff: NoC transfer
    delay coefficient (d_t = d_t_coeff * sqrt(n_cores)).
    """

    tau: float = 1.0
    alpha: float = 1.0
    beta: float = 0.5
    chi: float = 4.0
    mu: float = 0.24
    mu_n: float = 0.03
    e_n: float = 1.5
    n_cores: int = 16
    rho: float = 1.0
    d_d: float = 600.0
    d_t_coeff: float = 2.0
    noc_q: QueueSpec = field(default_factory=lambda: QueueSpec("mm1", 5.0, 0.8))
    dram_q: QueueSpec = field(default_factory=lambda: QueueSpec("mm1", 30.0, 0.8))

    def validate(self) -> None:
        checks = [
            (self.tau > 0, f"tau must be > 0, got {self.tau}"),
            (self.alpha > 0, f"alpha must be > 0, got {self.alpha}"),
            (0 < self.beta < 1, f"beta must be in (0, 1), got {self.beta}"),
            (self.chi > 0, f"chi must be > 0, got {self.chi}"),
            (0 < self.mu <= 1, f"mu must be in (0, 1], got {self.mu}"),
            (0 <= self.mu_n < 1, f"mu_n must be in [0, 1), got {self.mu_n}"),
            (self.e_n >= 1, f"e_n must be >= 1, got {self.e_n}"),
            (self.n_cores >= 1, f"n_cores must be >= 1, got {self.n_cores}"),
            (self.rho > 0, f"rho must be > 0, got {self.rho}"),
            (self.d_d > 0, f"d_d must be > 0, got {self.d_d}"),
            (self.d_t_coeff >= 0, f"d_t_coeff must be >= 0, got {self.d_t_coeff}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)
        self.noc_q.validate()
        self.dram_q.validate()


@dataclass(frozen=True)
class HierarchyPoint:
    """A candidate design: configuration depth plus cumulative level sizes.

    Sizes are cumulative: a2 is the full size of the second level (which,
    being inclusive, contains the first level's content), so per-level
    effective capacities are the differences a2 - a1 and a3 - a2.
    Unused deeper levels carry no meaning; ``padded()`` reports them as
    equal to the deepest used level.
    """

    depth: Depth
    a1: float
    a2: Optional[float] = None
    a3: Optional[float] = None

    def __post_init__(self) -> None:
        d = Depth(self.depth)
        object.__setattr__(self, "depth", d)
        if not self.a1 > 0:
            raise DomainError(f"a1 must be > 0, got {self.a1}")
        if d >= Depth.TWO_LEVEL:
            if self.a2 is None or not self.a2 > self.a1:
                raise DomainError(f"a2 must exceed a1 for depth >= 2, got a1={self.a1}, a2={self.a2}")
        if d == Depth.THREE_LEVEL:
            if self.a3 is None or not self.a3 > self.a2:
                raise DomainError(f"a3 must exceed a2 for depth 3, got a2={self.a2}, a3={self.a3}")

    def areas(self) -> tuple[float, ...]:
        """Cumulative sizes of the used levels, in level order."""
        if self.depth == Depth.ONE_LEVEL:
            return (self.a1,)
        if self.depth == Depth.TWO_LEVEL:
            return (self.a1, self.a2)
        return (self.a1, self.a2, self.a3)

    def increments(self) -> tuple[float, ...]:
        """Per-level capacity increments, in level order."""
        a = self.areas()
        return tuple(a[i] - (a[i - 1] if i else 0.0) for i in range(len(a)))

    def padded(self) -> tuple[float, float, float]:
        """(a1, a2, a3) with unused levels normalized to the deepest used."""
        a = self.areas()
        return (a[0], a[min(1, len(a) - 1)], a[-1])

    @staticmethod
    def from_areas(areas) -> "HierarchyPoint":
        areas = tuple(float(a) for a in areas)
        if len(areas) not in (1, 2, 3):
            raise DomainError(f"expected 1 to 3 areas, got {len(areas)}")
        return HierarchyPoint(Depth(len(areas)), *areas)


@dataclass(frozen=True)
class DelayBreakdown:
    """Average memory delay and its additive components.

    amat == sum(level_hit_terms) + dram_term. miss_rates are the per-level
    local miss ratios; m_s and m_d are the shared-cache and DRAM access
    rates (products of upstream miss rates). d_noc is the NoC delay folded
    into the shared level's access time; d_q the DRAM queuing delay.
    ``saturated`` names the diverging interconnect ("noc" or "dram") when
    the operating point is past a queue's saturation rate, in which case
    amat is +inf.
    """

    amat: float
    level_hit_terms: tuple[float, ...]
    dram_term: float
    miss_rates: tuple[float, ...]
    m_s: float
    m_d: float
    d_noc: float
    d_q: float
    clamped: bool = False
    saturated: Optional[str] = None


@dataclass(frozen=True)
class ConstraintSet:
    """Active resource limits; a missing (None) limit is not enforced.

    p_max: cache power budget; m_d_max: off-chip DRAM access-rate cap;
    a_max: total area budget (sum of cumulative level sizes);
    m_s_max: NoC capacity as a shared-cache access-rate cap.
    """

    p_max: Optional[float] = None
    m_d_max: Optional[float] = None
    a_max: Optional[float] = None
    m_s_max: Optional[float] = None

    NAMES = ("p_max", "m_d_max", "a_max", "m_s_max")

    def validate(self) -> None:
        for name in self.NAMES:
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be > 0 when present, got {v}")

    def present(self) -> tuple[str, ...]:
        return tuple(n for n in self.NAMES if getattr(self, n) is not None)

    def limit(self, name: str) -> float:
        return getattr(self, name)
