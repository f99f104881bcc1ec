"""Core delay-model tests: frozen hand-computed values, limits, and
property-based invariants."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachehier import (
    ConstraintSet,
    Depth,
    DomainError,
    HierarchyPoint,
    QueueSpec,
    TechParams,
    access_time_private,
    access_time_shared,
    amat,
    amat_const_hit_time,
    amat_scaled_hit_time,
    dram_queue_delay,
    miss_rate_private_inner,
    miss_rate_private_l1,
    miss_rate_shared,
    noc_queue_delay,
)

REF = TechParams()  # the repo reference calibration

NO_QUEUES = dict(noc_q=QueueSpec("linear", 0.0, 1.0),
                 dram_q=QueueSpec("linear", 0.0, 1.0))


def params(**kw):
    base = dict(tau=1.0, alpha=1.0, beta=0.5, chi=4.0, mu=0.2, mu_n=0.0,
                e_n=1.0, n_cores=4, rho=1.0, d_d=100.0, d_t_coeff=0.0)
    base.update(NO_QUEUES)
    base.update(kw)
    return TechParams(**base)


class TestAccessTimePrivate:
    def test_baseline_identity(self):
        for p in (params(), params(tau=0.7, alpha=16.0, beta=0.3)):
            assert access_time_private(p.alpha, p) == pytest.approx(p.tau, rel=1e-15)

    def test_square_root_case(self):
        assert access_time_private(4.0, params(beta=0.5)) == pytest.approx(2.0)

    def test_hand_computed_value(self):
        # 0.8 * (512/32)**0.4, evaluated independently: 2.4251465064166373
        p = params(tau=0.8, alpha=32.0, beta=0.4)
        assert access_time_private(512.0, p) == pytest.approx(2.4251465064166373, rel=1e-14)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            access_time_private(0.0, params())
        with pytest.raises(DomainError):
            access_time_private(-3.0, params())

    @given(st.floats(0.01, 1e5), st.floats(1.01, 4.0))
    @settings(max_examples=60, deadline=None)
    def test_strictly_increasing(self, a, factor):
        p = params(beta=0.37)
        assert access_time_private(a * factor, p) > access_time_private(a, p)


class TestAccessTimeShared:
    def test_baseline_identity(self):
        p = params(n_cores=4)
        assert access_time_shared(4.0 + 1.0, 1.0, p) == pytest.approx(p.tau)

    def test_transfer_delay_plus_power_law(self):
        # sqrt(4)*1 + ((4a)/(4a))**0.5 = 2 + 1
        p = params(n_cores=4, d_t_coeff=1.0)
        assert access_time_shared(5.0, 1.0, p) == pytest.approx(3.0)

    def test_hand_computed_value(self):
        # 0.5*sqrt(16) + 2*0.2/(0.8-0.2) + (64/16)**0.4 = 4.407767793258914
        p = params(n_cores=16, d_t_coeff=0.5, beta=0.4,
                   noc_q=QueueSpec("mm1", 2.0, 0.8))
        got = access_time_shared(66.0, 2.0, p, m_s=0.2)
        assert got == pytest.approx(4.407767793258914, rel=1e-14)

    def test_domain_error_on_empty_increment(self):
        with pytest.raises(DomainError):
            access_time_shared(5.0, 5.0, params())

    @given(st.floats(1.0, 1e4), st.floats(1.1, 3.0), st.floats(0.0, 0.5))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_area_and_rate(self, w, factor, ms):
        p = params(n_cores=8, d_t_coeff=1.0, noc_q=QueueSpec("mm1", 3.0, 0.8))
        base = access_time_shared(w + 1.0, 1.0, p, m_s=ms)
        assert access_time_shared(w * factor + 1.0, 1.0, p, m_s=ms) > base
        assert access_time_shared(w + 1.0, 1.0, p, m_s=ms + 0.2) > base


class TestMissRates:
    def test_l1_baseline(self):
        p = params(mu=0.23, mu_n=0.07)
        expect = 0.07 + 0.93 * 0.23
        assert miss_rate_private_l1(p.alpha, p) == pytest.approx(expect, rel=1e-15)

    def test_l1_quarter(self):
        assert miss_rate_private_l1(4.0, params(mu=0.1)) == pytest.approx(0.05)

    def test_l1_hand_computed(self):
        # 0.02 + 0.98*0.3/sqrt(25) = 0.0788
        p = params(mu=0.3, mu_n=0.02)
        assert miss_rate_private_l1(25.0, p) == pytest.approx(0.0788, rel=1e-14)

    def test_l1_asymptote(self):
        p = params(mu=0.3, mu_n=0.04)
        assert miss_rate_private_l1(1e12, p) == pytest.approx(0.04, abs=1e-6)

    def test_l1_clamps_at_one(self):
        assert miss_rate_private_l1(1e-8, params(mu=0.9)) == 1.0

    def test_inner_baseline(self):
        p = params(mu=0.2, mu_n=0.05)
        assert miss_rate_private_inner(3.0, 2.0, p) == pytest.approx(0.05 + 0.95 * 0.2)

    def test_inner_sixteenth(self):
        assert miss_rate_private_inner(17.0, 1.0, params(mu=0.2)) == pytest.approx(0.05)

    def test_inner_hand_computed(self):
        # 0.01 + 0.99*0.25/3 = 0.0925
        p = params(mu=0.25, mu_n=0.01)
        assert miss_rate_private_inner(10.0, 1.0, p) == pytest.approx(0.0925, rel=1e-14)

    def test_shared_baseline(self):
        p = params(mu=0.17, e_n=1.0, n_cores=8)
        assert miss_rate_shared(8.0 + 2.0, 2.0, p) == pytest.approx(0.17, rel=1e-15)

    def test_shared_simple(self):
        p = params(mu=0.1, e_n=2.0, n_cores=4)
        assert miss_rate_shared(17.0, 1.0, p) == pytest.approx(0.1)

    def test_shared_hand_computed(self):
        # 0.15*1.5/sqrt(72/8) = 0.075
        p = params(mu=0.15, e_n=1.5, n_cores=8)
        assert miss_rate_shared(73.0, 1.0, p) == pytest.approx(0.075, rel=1e-14)

    @given(st.floats(0.05, 1e5), st.floats(1.1, 4.0))
    @settings(max_examples=60, deadline=None)
    def test_all_strictly_decreasing_until_floor(self, w, factor):
        p = params(mu=0.24, mu_n=0.02, e_n=1.3, n_cores=16)
        for fn in (miss_rate_private_l1,
                   lambda a, q: miss_rate_private_inner(a + 1.0, 1.0, q),
                   lambda a, q: miss_rate_shared(a + 1.0, 1.0, q)):
            lo, hi = fn(w * factor, p), fn(w, p)
            if hi < 1.0:  # strictly decreasing outside the clamp
                assert lo < hi


class TestQueueDelays:
    def test_zero_rate(self):
        p = params(dram_q=QueueSpec("mm1", 10.0, 0.5), noc_q=QueueSpec("mm1", 5.0, 0.8))
        assert dram_queue_delay(0.0, p) == 0.0
        assert noc_queue_delay(0.0, p) == 0.0

    def test_mm1_values(self):
        p = params(dram_q=QueueSpec("mm1", 10.0, 0.5), noc_q=QueueSpec("mm1", 5.0, 0.8))
        assert dram_queue_delay(0.25, p) == pytest.approx(10.0)
        assert noc_queue_delay(0.4, p) == pytest.approx(5.0)

    def test_saturation_sentinel(self):
        p = params(dram_q=QueueSpec("mm1", 10.0, 0.5), noc_q=QueueSpec("mm1", 5.0, 0.8))
        assert math.isinf(dram_queue_delay(0.5, p))
        assert math.isinf(dram_queue_delay(0.7, p))
        assert math.isinf(noc_queue_delay(0.8, p))

    def test_linear_form(self):
        p = params(dram_q=QueueSpec("linear", 7.0, 1.0))
        assert dram_queue_delay(0.3, p) == pytest.approx(2.1)

    @given(st.floats(0.0, 0.45), st.floats(0.001, 0.04))
    @settings(max_examples=50, deadline=None)
    def test_mm1_increasing_convex(self, x, h):
        p = params(dram_q=QueueSpec("mm1", 3.0, 0.5))
        f = lambda v: dram_queue_delay(v, p)
        if x + 2 * h < 0.5:
            assert f(x + h) > f(x)
            # convexity: midpoint below chord
            assert f(x + h) <= 0.5 * (f(x) + f(x + 2 * h)) + 1e-12

    def test_negative_rate_rejected(self):
        with pytest.raises(DomainError):
            dram_queue_delay(-0.1, params())


class TestAmat:
    def test_one_level_hand_computed(self):
        # m1 = 0.05, t1 = 2, D = 0.95*2 + 0.05*100 = 6.9
        p = params(mu=0.1, d_d=100.0)
        bd = amat(HierarchyPoint.from_areas([4.0]), p)
        assert bd.amat == pytest.approx(6.9, rel=1e-14)
        assert bd.miss_rates == (pytest.approx(0.05),)
        assert bd.m_d == pytest.approx(0.05)
        assert bd.m_s == 0.0
        assert bd.d_noc == 0.0

    def test_two_level_large_shared_limit(self):
        # as the shared increment grows, the dram term vanishes and the
        # delay tends to (1-m1)*t1 + m1*t2
        p = params(mu=0.2, e_n=1.0, n_cores=4, d_t_coeff=1.0)
        bd = amat(HierarchyPoint.from_areas([4.0, 4.0 + 1e10]), p)
        m1 = 0.1
        t2 = access_time_shared(4.0 + 1e10, 4.0, p, m_s=m1)
        expect = (1 - m1) * 2.0 + m1 * t2
        assert bd.dram_term < 1e-3
        assert bd.amat == pytest.approx(expect, rel=1e-4)

    def test_three_level_reference_point(self):
        # independently recomputed, term by term, for the reference
        # calibration at areas (2, 12, 100): 3.7797563822941243
        bd = amat(HierarchyPoint.from_areas([2.0, 12.0, 100.0]), REF)
        assert bd.amat == pytest.approx(3.7797563822941243, rel=1e-12)
        assert bd.m_s == pytest.approx(0.020165526711438658, rel=1e-12)
        assert bd.m_d == pytest.approx(0.003095499413208181, rel=1e-12)

    def test_degenerate_shared_reduces_to_one_level(self):
        # with no NoC delay and a vanishing shared increment, the two-level
        # delay collapses onto the single-level delay at the same a1
        p = params(mu=0.2, e_n=1.0, n_cores=4, d_t_coeff=0.0)
        d12 = amat(HierarchyPoint.from_areas([4.0, 4.0 + 1e-9]), p)
        d1 = amat(HierarchyPoint.from_areas([4.0]), p)
        assert d12.clamped
        assert d12.miss_rates[1] == 1.0
        assert d12.amat == pytest.approx(d1.amat, rel=1e-9)

    def test_products(self):
        bd = amat(HierarchyPoint.from_areas([2.0, 12.0, 100.0]), REF)
        m1, m2, m3 = bd.miss_rates
        assert bd.m_s == pytest.approx(m1 * m2, rel=1e-15)
        assert bd.m_d == pytest.approx(m1 * m2 * m3, rel=1e-15)
        bd2 = amat(HierarchyPoint.from_areas([2.0, 12.0]), REF)
        assert bd2.m_s == pytest.approx(bd2.miss_rates[0], rel=1e-15)
        assert bd2.m_d == pytest.approx(np.prod(bd2.miss_rates), rel=1e-15)

    def test_additivity_random_points(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            depth = rng.integers(1, 4)
            incr = 10 ** rng.uniform(-2, 2.5, depth)
            bd = amat(HierarchyPoint.from_areas(np.cumsum(incr)), REF)
            if math.isfinite(bd.amat):
                total = sum(bd.level_hit_terms) + bd.dram_term
                assert abs(bd.amat - total) <= 1e-12 * abs(bd.amat)

    def test_saturation_identifies_component(self):
        p = params(mu=0.9, dram_q=QueueSpec("mm1", 10.0, 0.3))
        bd = amat(HierarchyPoint.from_areas([1.0]), p)
        assert math.isinf(bd.amat)
        assert bd.saturated == "dram"
        p2 = params(mu=0.9, mu_n=0.5, noc_q=QueueSpec("mm1", 5.0, 0.3),
                    dram_q=QueueSpec("linear", 1.0, 1.0))
        bd2 = amat(HierarchyPoint.from_areas([0.5, 40.0]), p2)
        assert math.isinf(bd2.amat)
        assert bd2.saturated == "noc"

    def test_purity(self):
        pt = HierarchyPoint.from_areas([1.7, 9.3, 55.5])
        assert amat(pt, REF) == amat(pt, REF)


class TestSingleLevelReferenceModels:
    def test_const_hit_time_approaches_chi_from_above(self):
        p = params(mu=0.2, chi=2.0, d_d=100.0)
        far = amat_const_hit_time(1e12, p)
        assert far == pytest.approx(2.0, abs=1e-4)
        assert amat_const_hit_time(4.0, p) > far

    def test_const_hit_time_hit_portion(self):
        # with the miss penalty off, only (1 - mu/sqrt(a)) * chi remains
        p = params(mu=0.1, chi=2.0, d_d=1e-12)
        assert amat_const_hit_time(4.0, p) == pytest.approx(0.95 * 2.0, abs=1e-9)
        p2 = params(mu=0.3, chi=1.5, d_d=1e-12)
        assert amat_const_hit_time(9.0, p2) == pytest.approx(0.9 * 1.5, abs=1e-9)

    def test_const_decreasing_when_dram_dominates(self):
        p = params(mu=0.2, chi=2.0, d_d=100.0)
        grid = np.logspace(np.log10(1 / 16), np.log10(4096), 200)
        vals = amat_const_hit_time(grid, p)
        assert np.all(np.diff(vals) < 0)

    def test_scaled_hit_time_baseline(self):
        p = params(mu=0.2, d_d=1e-12)
        assert amat_scaled_hit_time(1.0, p) == pytest.approx(0.8, abs=1e-9)

    def test_scaled_interior_minimum_matches_closed_form(self):
        # for beta = 1/2 the stationary point is a1 = alpha*mu*d_d/tau
        from cachehier import scaled_hit_time_minimizer
        p = params(mu=0.2, d_d=100.0, beta=0.5)
        xstar = scaled_hit_time_minimizer(p)
        assert xstar == pytest.approx(20.0, rel=1e-6)
        # values on either side are ordered toward the minimum
        a = np.array([1.0, 4.0, 16.0])
        v = amat_scaled_hit_time(a, p)
        assert v[0] > v[1] > v[2]
        assert amat_scaled_hit_time(20.0, p) < v[2]
        assert amat_scaled_hit_time(20.0, p) < amat_scaled_hit_time(200.0, p)


class TestTypes:
    def test_tech_params_validation(self):
        for bad in (dict(tau=0.0), dict(beta=1.0), dict(beta=0.0), dict(mu=0.0),
                    dict(mu=1.2), dict(mu_n=1.0), dict(e_n=0.5), dict(n_cores=0),
                    dict(d_d=-1.0)):
            with pytest.raises(DomainError):
                params(**bad).validate()

    def test_queue_spec_validation(self):
        with pytest.raises(DomainError):
            QueueSpec("mm2", 1.0, 0.5).validate()
        with pytest.raises(DomainError):
            QueueSpec("mm1", -1.0, 0.5).validate()

    def test_hierarchy_point_ordering(self):
        with pytest.raises(DomainError):
            HierarchyPoint(Depth.TWO_LEVEL, 5.0, 5.0)
        with pytest.raises(DomainError):
            HierarchyPoint(Depth.THREE_LEVEL, 1.0, 2.0, 2.0)
        with pytest.raises(DomainError):
            HierarchyPoint(Depth.ONE_LEVEL, -1.0)
        with pytest.raises(DomainError):
            HierarchyPoint.from_areas([1.0, 2.0, 3.0, 4.0])

    def test_hierarchy_point_helpers(self):
        pt = HierarchyPoint.from_areas([1.0, 3.0, 10.0])
        assert pt.increments() == (1.0, 2.0, 7.0)
        assert pt.padded() == (1.0, 3.0, 10.0)
        p1 = HierarchyPoint.from_areas([4.0])
        assert p1.padded() == (4.0, 4.0, 4.0)

    def test_constraint_set(self):
        c = ConstraintSet(a_max=10.0, m_s_max=0.2)
        assert c.present() == ("a_max", "m_s_max")
        with pytest.raises(DomainError):
            ConstraintSet(p_max=-1.0).validate()
