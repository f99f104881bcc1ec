"""Closed-form delay models for one-, two-, and three-level CMP cache
hierarchies.

Level structure:
  ONE_LEVEL:   private L1
  TWO_LEVEL:   private L1 + shared L2 (reached over the NoC)
  THREE_LEVEL: private L1 + private L2 + shared L3 (reached over the NoC)

Access times follow a power law of size, t = tau * (A/alpha)**beta; a
shared level serving n clients uses its per-client capacity slice
(increment / (n * alpha)) and adds NoC delay (transfer + queuing, the
latter a function of the shared access rate M_S). Miss rates follow an
inverse-square-root law of effective capacity; private levels carry a
size-independent floor mu_n for remote-origin data, shared levels a
sharing multiplier e_n instead. DRAM misses pay d_d plus a queuing delay
that grows with the DRAM access rate M_D.

All functions accept scalars or numpy arrays and are pure.
"""
from __future__ import annotations

import math

import numpy as np

from .params import (
    DelayBreakdown,
    Depth,
    DomainError,
    HierarchyPoint,
    QueueSpec,
    TechParams,
)

__all__ = [
    "access_time_private",
    "access_time_shared",
    "miss_rate_private_l1",
    "miss_rate_private_inner",
    "miss_rate_shared",
    "dram_queue_delay",
    "noc_queue_delay",
    "amat",
    "amat_components",
    "amat_const_hit_time",
    "amat_scaled_hit_time",
    "scaled_hit_time_minimizer",
]


def _queue_delay(x, q: QueueSpec):
    """Evaluate a QueueSpec at access rate x; +inf at/beyond saturation."""
    x = np.asarray(x, dtype=float)
    if q.form == "linear":
        out = q.coeff * x
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x < q.sat, q.coeff * x / np.where(x < q.sat, q.sat - x, 1.0), np.inf)
    return out if out.ndim else float(out)


def _clamped_miss(raw):
    """Clamp a raw miss-rate law at 1; return (miss, was_clamped)."""
    raw = np.asarray(raw, dtype=float)
    clamped = raw > 1.0
    m = np.minimum(raw, 1.0)
    if m.ndim:
        return m, clamped
    return float(m), bool(clamped)


def access_time_private(area, p: TechParams):
    """Hit latency of a private level of (cumulative) size ``area``."""
    area = np.asarray(area, dtype=float)
    if np.any(area <= 0):
        raise DomainError("cache area must be > 0")
    out = p.tau * (area / p.alpha) ** p.beta
    return out if out.ndim else float(out)


def access_time_shared(cumulative_area, prev_cumulative_area, p: TechParams, m_s=0.0):
    """Hit latency of a shared level: NoC transfer delay + NoC queuing at
    shared access rate ``m_s`` + power-law access over the per-client slice
    of the level's capacity increment."""
    w = np.asarray(cumulative_area, dtype=float) - np.asarray(prev_cumulative_area, dtype=float)
    if np.any(w <= 0):
        raise DomainError("shared level capacity increment must be > 0")
    d_t = p.d_t_coeff * math.sqrt(p.n_cores)
    out = d_t + _queue_delay(m_s, p.noc_q) + p.tau * (w / (p.n_cores * p.alpha)) ** p.beta
    return out if out.ndim else float(out)


def miss_rate_private_l1(a1, p: TechParams):
    """Local miss rate of a private L1 of size a1 (clamped at 1)."""
    a1 = np.asarray(a1, dtype=float)
    if np.any(a1 <= 0):
        raise DomainError("cache area must be > 0")
    m, _ = _clamped_miss(p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(a1 / p.alpha))
    return m


def miss_rate_private_inner(a_curr, a_prev, p: TechParams):
    """Local miss rate of an inner private level with capacity increment
    a_curr - a_prev (clamped at 1)."""
    w = np.asarray(a_curr, dtype=float) - np.asarray(a_prev, dtype=float)
    if np.any(w <= 0):
        raise DomainError("level capacity increment must be > 0")
    m, _ = _clamped_miss(p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(w / p.alpha))
    return m


def miss_rate_shared(a_curr, a_prev, p: TechParams):
    """Local miss rate of a shared level over its per-client capacity slice
    (clamped at 1). Shared levels hold every client's data, so the
    remote-data floor mu_n does not apply; sharing inflates misses by e_n."""
    w = np.asarray(a_curr, dtype=float) - np.asarray(a_prev, dtype=float)
    if np.any(w <= 0):
        raise DomainError("level capacity increment must be > 0")
    m, _ = _clamped_miss(p.mu * p.e_n / np.sqrt(w / (p.n_cores * p.alpha)))
    return m


def dram_queue_delay(m_d, p: TechParams):
    """DRAM interconnect queuing delay at DRAM access rate m_d."""
    m_d = np.asarray(m_d, dtype=float)
    if np.any(m_d < 0):
        raise DomainError("access rate must be >= 0")
    return _queue_delay(m_d, p.dram_q)


def noc_queue_delay(m_s, p: TechParams):
    """NoC blocking + congestion delay at shared access rate m_s."""
    m_s = np.asarray(m_s, dtype=float)
    if np.any(m_s < 0):
        raise DomainError("access rate must be >= 0")
    return _queue_delay(m_s, p.noc_q)


def amat_components(depth: Depth, a1, a2=None, a3=None, p: TechParams = None):
    """Vectorized average-memory-delay evaluation.

    Returns a dict of arrays (or scalars, matching the inputs):
      amat, hit_terms (tuple, level order), dram_term, miss (tuple),
      m_s, m_d, d_noc, d_q, clamped (bool), saturated_noc, saturated_dram.
    """
    depth = Depth(depth)
    a1 = np.asarray(a1, dtype=float)
    scalar = a1.ndim == 0
    d_t = p.d_t_coeff * math.sqrt(p.n_cores)

    # inf * 0 products can appear transiently where a queue saturates under
    # a clamped miss rate; the saturation fixup below overrides them
    errstate = np.errstate(invalid="ignore", over="ignore")
    errstate.__enter__()
    try:
        return _amat_components_inner(depth, a1, a2, a3, p, d_t, scalar)
    finally:
        errstate.__exit__(None, None, None)


def _amat_components_inner(depth, a1, a2, a3, p, d_t, scalar):
    if depth == Depth.ONE_LEVEL:
        raw1 = p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(a1 / p.alpha)
        m1, cl = _clamped_miss(raw1)
        miss = (m1,)
        m_s = np.zeros_like(a1)
        m_d = m1
        d_noc = np.zeros_like(a1)
        t1 = p.tau * (a1 / p.alpha) ** p.beta
        hit = ((1.0 - m1) * t1,)
    elif depth == Depth.TWO_LEVEL:
        a2 = np.asarray(a2, dtype=float)
        w2 = a2 - a1
        raw1 = p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(a1 / p.alpha)
        raw2 = p.mu * p.e_n / np.sqrt(w2 / (p.n_cores * p.alpha))
        m1, c1 = _clamped_miss(raw1)
        m2, c2 = _clamped_miss(raw2)
        cl = np.logical_or(c1, c2)
        miss = (m1, m2)
        m_s = m1
        m_d = m1 * m2
        d_noc = d_t + _queue_delay(m_s, p.noc_q)
        t1 = p.tau * (a1 / p.alpha) ** p.beta
        t2 = d_noc + p.tau * (w2 / (p.n_cores * p.alpha)) ** p.beta
        hit = ((1.0 - m1) * t1, m1 * (1.0 - m2) * t2)
    else:
        a2 = np.asarray(a2, dtype=float)
        a3 = np.asarray(a3, dtype=float)
        w2 = a2 - a1
        w3 = a3 - a2
        raw1 = p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(a1 / p.alpha)
        raw2 = p.mu_n + (1.0 - p.mu_n) * p.mu / np.sqrt(w2 / p.alpha)
        raw3 = p.mu * p.e_n / np.sqrt(w3 / (p.n_cores * p.alpha))
        m1, c1 = _clamped_miss(raw1)
        m2, c2 = _clamped_miss(raw2)
        m3, c3 = _clamped_miss(raw3)
        cl = np.logical_or(np.logical_or(c1, c2), c3)
        miss = (m1, m2, m3)
        m_s = m1 * m2
        m_d = m_s * m3
        d_noc = d_t + _queue_delay(m_s, p.noc_q)
        t1 = p.tau * (a1 / p.alpha) ** p.beta
        t2 = p.tau * (a2 / p.alpha) ** p.beta
        t3 = d_noc + p.tau * (w3 / (p.n_cores * p.alpha)) ** p.beta
        hit = ((1.0 - m1) * t1, m1 * (1.0 - m2) * t2, m_s * (1.0 - m3) * t3)

    d_q = _queue_delay(m_d, p.dram_q)
    dram_term = m_d * (p.d_d + d_q)
    total = dram_term
    for h in hit:
        total = total + h

    sat_noc = ~np.isfinite(np.asarray(d_noc, dtype=float))
    sat_dram = ~np.isfinite(np.asarray(d_q, dtype=float))
    # a saturated queue makes the delay unbounded even where a clamped miss
    # rate zeroes the offending hit term (inf * 0 would otherwise give nan)
    saturated_any = np.logical_or(sat_noc, sat_dram)
    if np.any(saturated_any):
        total = np.where(saturated_any, np.inf, total)

    out = {
        "amat": total,
        "hit_terms": hit,
        "dram_term": dram_term,
        "miss": miss,
        "m_s": m_s,
        "m_d": m_d,
        "d_noc": d_noc,
        "d_q": d_q,
        "clamped": cl,
        "saturated_noc": sat_noc,
        "saturated_dram": sat_dram,
    }
    if scalar:
        for k, v in out.items():
            if k in ("hit_terms", "miss"):
                out[k] = tuple(float(x) for x in v)
            elif k in ("clamped", "saturated_noc", "saturated_dram"):
                out[k] = bool(v)
            else:
                out[k] = float(v)
    return out


def amat(point: HierarchyPoint, p: TechParams) -> DelayBreakdown:
    """Average memory delay of a candidate design, fully decomposed."""
    a = point.areas()
    c = amat_components(point.depth, *a, p=p)
    saturated = None
    if c["saturated_noc"]:
        saturated = "noc"
    elif c["saturated_dram"]:
        saturated = "dram"
    return DelayBreakdown(
        amat=c["amat"],
        level_hit_terms=c["hit_terms"],
        dram_term=c["dram_term"],
        miss_rates=c["miss"],
        m_s=c["m_s"],
        m_d=c["m_d"],
        d_noc=c["d_noc"],
        d_q=c["d_q"],
        clamped=c["clamped"],
        saturated=saturated,
    )


def amat_const_hit_time(a1, p: TechParams):
    """Single-level average delay under a constant hit latency chi.

    With the hit time fixed, growing the cache only reduces misses, so
    this reference model decreases monotonically toward chi."""
    a1 = np.asarray(a1, dtype=float)
    if np.any(a1 <= 0):
        raise DomainError("cache area must be > 0")
    m, _ = _clamped_miss(p.mu / np.sqrt(a1 / p.alpha))
    out = (1.0 - m) * p.chi + m * p.d_d
    return out if np.asarray(out).ndim else float(out)


def amat_scaled_hit_time(a1, p: TechParams):
    """Single-level average delay with the power-law hit latency.

    The hit time grows with size while the miss penalty shrinks, so this
    model has an interior minimum in a1."""
    a1 = np.asarray(a1, dtype=float)
    if np.any(a1 <= 0):
        raise DomainError("cache area must be > 0")
    m, _ = _clamped_miss(p.mu / np.sqrt(a1 / p.alpha))
    out = (1.0 - m) * p.tau * (a1 / p.alpha) ** p.beta + m * p.d_d
    return out if np.asarray(out).ndim else float(out)


def scaled_hit_time_minimizer(p: TechParams, lo: float = None, hi: float = None) -> float:
    """Numerically locate the interior minimum of amat_scaled_hit_time.

    Golden-section search on a log grid bracket. The stationary condition
    in x = a1/alpha (unclamped region) is
        tau*beta*x**(beta+1/2) - tau*mu*(beta-1/2)*x**beta - mu*d_d/2 = 0,
    which for beta = 1/2 reduces to x = mu*d_d/tau.
    """
    lo = p.alpha / 16.0 if lo is None else lo
    hi = 4096.0 * p.alpha if hi is None else hi
    f = lambda x: float(amat_scaled_hit_time(x, p))
    # bracket the minimum on a log grid, then golden-section in log space
    grid = np.logspace(math.log10(lo), math.log10(hi), 200)
    vals = [f(x) for x in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    la, lb = math.log(a), math.log(b)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = lb - invphi * (lb - la)
    d = la + invphi * (lb - la)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(200):
        if fc < fd:
            lb, d, fd = d, c, fc
            c = lb - invphi * (lb - la)
            fc = f(math.exp(c))
        else:
            la, c, fc = c, d, fd
            d = la + invphi * (lb - la)
            fd = f(math.exp(d))
        if abs(lb - la) < 1e-13:
            break
    return math.exp(0.5 * (la + lb))
