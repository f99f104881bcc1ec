"""Power-law calibration tests."""
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachehier import AccessTimeSample, DomainError, InsufficientDataError, fit_power_law
from cachehier.fit import read_samples_csv


def synth(tau=1.0, alpha=4096.0, beta=0.45, n=13, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    sizes = alpha * 2.0 ** np.arange(n)
    lats = tau * (sizes / alpha) ** beta
    if noise:
        lats = lats * (1.0 + noise * rng.uniform(-1, 1, size=n))
    return [AccessTimeSample(s, l) for s, l in zip(sizes, lats)]


def test_exact_recovery():
    r = fit_power_law(synth())
    assert r.beta == pytest.approx(0.45, abs=1e-9)
    assert r.max_rel_error < 1e-9
    assert r.alpha == 4096.0  # anchored to the smallest size
    assert r.tau == pytest.approx(1.0, rel=1e-9)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_power_law(synth(n=2))
    # many samples but too few distinct sizes
    s = AccessTimeSample(4096.0, 1.0)
    with pytest.raises(InsufficientDataError):
        fit_power_law([s, s, AccessTimeSample(8192.0, 1.4)])


def test_noisy_recovery_within_five_percent():
    r = fit_power_law(synth(noise=0.02, seed=42))
    assert r.max_rel_error <= 0.05
    assert r.beta == pytest.approx(0.45, abs=0.02)
    assert r.max_rel_error == max(r.per_sample_rel_error)
    assert r.mean_rel_error <= r.max_rel_error


def test_fixed_alpha():
    r = fit_power_law(synth(), fixed_alpha=1024.0)
    assert r.alpha == 1024.0
    assert r.beta == pytest.approx(0.45, abs=1e-9)
    # predictions unchanged by re-anchoring
    assert r.predict(65536.0) == pytest.approx(1.0 * (65536.0 / 4096.0) ** 0.45, rel=1e-9)
    with pytest.raises(DomainError):
        fit_power_law(synth(), fixed_alpha=-5.0)


@given(st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_latency_scale_moves_tau_not_beta(c):
    base = synth(noise=0.02, seed=3)
    scaled = [AccessTimeSample(s.size, s.latency * c) for s in base]
    r0, r1 = fit_power_law(base), fit_power_law(scaled)
    assert abs(r1.beta - r0.beta) < 1e-12
    assert r1.tau == pytest.approx(r0.tau * c, rel=1e-12)


@given(st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_size_rescale_leaves_beta(c):
    base = synth(noise=0.02, seed=4)
    scaled = [AccessTimeSample(s.size * c, s.latency) for s in base]
    r0, r1 = fit_power_law(base), fit_power_law(scaled)
    assert abs(r1.beta - r0.beta) < 1e-12


def test_log_residuals_sum_to_zero():
    samples = synth(noise=0.02, seed=9)
    r = fit_power_law(samples)
    resid = [np.log(s.latency) - np.log(r.predict(s.size)) for s in samples]
    assert abs(sum(resid)) < 1e-9


def test_sample_validation():
    with pytest.raises(DomainError):
        AccessTimeSample(0.0, 1.0)
    with pytest.raises(DomainError):
        AccessTimeSample(4096.0, -1.0)


def test_non_power_law_data_rejected():
    # latencies falling with size fit a negative exponent
    falling = [AccessTimeSample(4096.0 * 2 ** k, 2.0 / (k + 1)) for k in range(6)]
    with pytest.raises(DomainError, match="sane band"):
        fit_power_law(falling)


class TestCsvReader:
    def test_lf_and_crlf(self):
        body = "size_bytes,latency_ns\n4096,0.5\n8192,0.7\n"
        for text in (body, body.replace("\n", "\r\n")):
            got = read_samples_csv(io.StringIO(text))
            assert [(s.size, s.latency) for s in got] == [(4096.0, 0.5), (8192.0, 0.7)]

    def test_bad_header(self):
        with pytest.raises(DomainError, match="header"):
            read_samples_csv(io.StringIO("size,lat\n1,2\n"))

    def test_bad_row_reports_line(self):
        text = "size_bytes,latency_ns\n4096,0.5\n8192,not_a_number\n"
        with pytest.raises(DomainError, match="line 3"):
            read_samples_csv(io.StringIO(text))

    def test_empty_file(self):
        with pytest.raises(DomainError, match="empty"):
            read_samples_csv(io.StringIO(""))

    def test_header_only(self):
        with pytest.raises(DomainError, match="no data rows"):
            read_samples_csv(io.StringIO("size_bytes,latency_ns\n"))

    def test_path_roundtrip(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("size_bytes,latency_ns\n4096,0.5\n8192,0.7\n16384,1.0\n")
        r = fit_power_law(read_samples_csv(path))
        assert r.alpha == 4096.0
