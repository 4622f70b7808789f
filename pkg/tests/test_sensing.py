"""Tests for waveform synthesis, channel simulation, and the one-bit ADC."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebitloc import sensing

B = 180e3
ROLLOFF = 1.0


def rc_scalar(t, period, rolloff):
    """Independent scalar raised-cosine oracle."""
    u = t / period
    if abs(u) > 8.0:
        return 0.0
    if u == 0.0:
        return 1.0
    sinc = math.sin(math.pi * u) / (math.pi * u)
    if rolloff == 0.0:
        return sinc
    den = 1.0 - (2.0 * rolloff * u) ** 2
    if abs(den) < 1e-8:
        u0 = 1.0 / (2.0 * rolloff)
        return (math.pi / 4.0) * math.sin(math.pi * u0) / (math.pi * u0)
    return sinc * math.cos(math.pi * rolloff * u) / den


def baseband_scalar(w, t):
    """Independent convolution-sum oracle for the pilot waveform."""
    total = 0.0 + 0.0j
    for k in range(w.num_symbols):
        total += (
            complex(w.symbols[k])
            * cmath.exp(1j * math.pi * k / w.alphabet_size)
            * rc_scalar(t - k * w.symbol_period, w.symbol_period, w.pulse.rolloff)
        )
    return total


def short_waveform(num_nyquist=64, alphabet=4, seed=7):
    duration = num_nyquist / (2.0 * B)
    return sensing.make_waveform(B, ROLLOFF, duration, alphabet_size=alphabet, rng_seed=seed)


class TestBasebandSignal:
    def test_single_symbol_peak(self):
        w = sensing.make_waveform(B, ROLLOFF, 1.0 / B, alphabet_size=2, symbols=np.array([1.0]))
        assert w.num_symbols == 1
        assert sensing.baseband_signal(w, 0.0) == pytest.approx(1.0 + 0.0j)

    def test_nyquist_zero_crossing(self):
        for m in (2, 4):
            w = sensing.make_waveform(
                B, ROLLOFF, 2.2 / B, alphabet_size=m, symbols=np.array([1.0, 1.0j])
            )
            got = sensing.baseband_signal(w, w.symbol_period)
            assert got == pytest.approx(1.0j * cmath.exp(1j * math.pi / m), abs=1e-12)

    def test_matches_convolution_oracle(self):
        w = short_waveform()
        # irrational offset keeps the grid off the pulse's removable singularity
        times = np.linspace(0.0, w.duration, 201) + 0.087 * math.sqrt(2.0) / B
        got = sensing.baseband_signal(w, times)
        want = np.array([baseband_scalar(w, t) for t in times])
        assert np.max(np.abs(got - want)) < 1e-12

    def test_pulse_half_period_limit(self):
        # rolloff-1 raised cosine passes through 1/2 at half a symbol period
        assert sensing.raised_cosine(0.5 / B, 1.0 / B, 1.0) == pytest.approx(0.5, abs=1e-12)


class TestSampledVector:
    def test_zero_delay_first_entry(self):
        w = short_waveform()
        cfg = sensing.sampling_config(B, w.duration, 1)
        vec = sensing.sampled_signal_vector(w, 0.0, cfg)
        assert vec[0] == pytest.approx(sensing.baseband_signal(w, 0.0))
        assert vec.size == cfg.num_samples

    def test_one_sample_shift_identity(self):
        w = short_waveform()
        cfg = sensing.sampling_config(B, w.duration, 1)
        base = sensing.sampled_signal_vector(w, 0.0, cfg)
        shifted = sensing.sampled_signal_vector(w, cfg.sample_period, cfg)
        np.testing.assert_allclose(shifted[1:], base[:-1], rtol=1e-9, atol=1e-12)

    def test_fractional_delay_pointwise_oracle(self):
        w = short_waveform()
        cfg = sensing.sampling_config(B, w.duration, 1)
        delay = 0.3 * cfg.sample_period
        got = sensing.sampled_signal_vector(w, delay, cfg)
        want = np.array(
            [baseband_scalar(w, l * cfg.sample_period - delay) for l in range(cfg.num_samples)]
        )
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestNoiseCovariance:
    def test_nyquist_rate_identity(self):
        np.testing.assert_allclose(sensing.noise_covariance(3, 1), np.eye(3))

    def test_half_integer_lag(self):
        cov = sensing.noise_covariance(2, 2)
        assert cov[0, 1] == pytest.approx(2.0 / math.pi)

    def test_integer_lag_zero(self):
        cov = sensing.noise_covariance(4, 2)
        assert cov[0, 2] == pytest.approx(0.0, abs=1e-15)

    @given(st.integers(2, 12), st.integers(1, 4))
    @settings(max_examples=25, deadline=None)
    def test_symmetric_unit_diagonal_floored_spectrum(self, num, ovs):
        cov = sensing.noise_covariance(num, ovs)
        np.testing.assert_allclose(cov, cov.T)
        np.testing.assert_allclose(np.diag(cov), 1.0)
        root, inv_root = sensing.covariance_factors(cov)
        vals = np.linalg.eigvalsh(root @ root)
        floor = sensing.EIGENVALUE_FLOOR_RATIO * np.linalg.eigvalsh(cov)[-1]
        assert vals.min() >= floor * (1 - 1e-6)
        np.testing.assert_allclose(root @ inv_root, np.eye(num), atol=1e-8)


class TestSimulateReceived:
    def setup_method(self):
        self.w = short_waveform()
        self.cfg = sensing.sampling_config(B, self.w.duration, 1)

    def test_noiseless_two_path_sum(self):
        ch = sensing.ChannelParams(
            direct_gain=0.8 - 0.1j,
            indirect_gain=0.5 + 0.2j,
            direct_delay=0.0,
            indirect_delay=3.0 * self.cfg.sample_period,
            noise_power=0.0,
        )
        got = sensing.simulate_received(self.w, ch, self.cfg, rng_seed=1)
        want = ch.direct_gain * sensing.sampled_signal_vector(
            self.w, ch.direct_delay, self.cfg
        ) + ch.indirect_gain * sensing.sampled_signal_vector(self.w, ch.indirect_delay, self.cfg)
        np.testing.assert_array_equal(got, want)

    def test_seed_determinism(self):
        ch = sensing.ChannelParams(1.0, 0.3, 0.0, 2e-6, noise_power=0.7)
        a = sensing.simulate_received(self.w, ch, self.cfg, rng_seed=42)
        b = sensing.simulate_received(self.w, ch, self.cfg, rng_seed=42)
        np.testing.assert_array_equal(a, b)

    def test_noise_covariance_monte_carlo(self):
        # noise-only draws; sample second moment vs sigma^2 * Sigma
        num, ovs, power, draws = 8, 2, 2.3, 100_000
        duration = num / (2.0 * ovs * B)
        w = sensing.make_waveform(B, ROLLOFF, duration, symbols=np.array([1.0]))
        cfg = sensing.sampling_config(B, duration, ovs)
        assert cfg.num_samples == num
        ch = sensing.ChannelParams(0.0, 0.0, 0.0, 0.0, noise_power=power)
        acc = np.zeros((num, num), dtype=complex)
        for i in range(draws):
            n = sensing.simulate_received(w, ch, cfg, rng_seed=(900, i))
            acc += np.outer(n, n.conj())
        sample_cov = acc / draws
        target = power * sensing.noise_covariance(num, ovs)
        rel = np.linalg.norm(sample_cov - target) / np.linalg.norm(target)
        assert rel < 0.02


class TestOneBitQuantize:
    def test_basic_signs(self):
        out = sensing.one_bit_quantize(np.array([1 + 2j]), np.array([0j]))
        assert out[0] == pytest.approx((1 + 1j) / math.sqrt(2))

    def test_threshold_flip(self):
        out = sensing.one_bit_quantize(np.array([0.3 - 0.2j]), np.array([0.5 + 0j]))
        assert out[0] == pytest.approx((-1 - 1j) / math.sqrt(2))

    def test_sign_of_zero_convention(self):
        gamma = np.array([0.4 + 0.7j])
        out = sensing.one_bit_quantize(gamma.copy(), gamma)
        assert out[0] == pytest.approx((1 + 1j) / math.sqrt(2))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sensing.one_bit_quantize(np.zeros(3, dtype=complex), np.zeros(2, dtype=complex))

    @given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False), min_size=1, max_size=32))
    @settings(max_examples=60, deadline=None)
    def test_idempotent_and_alphabet(self, values):
        y = np.array(values)
        q = sensing.one_bit_quantize(y, np.zeros_like(y))
        np.testing.assert_allclose(np.abs(q.real), 1 / math.sqrt(2))
        np.testing.assert_allclose(np.abs(q.imag), 1 / math.sqrt(2))
        np.testing.assert_array_equal(sensing.one_bit_quantize(q, np.zeros_like(q)), q)

    @given(
        st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False), min_size=1, max_size=16),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    @settings(max_examples=60, deadline=None)
    def test_positive_scale_invariance(self, values, scale):
        y = np.array(values)
        gamma = 0.5 * np.roll(y, 1)
        np.testing.assert_array_equal(
            sensing.one_bit_quantize(scale * y, scale * gamma),
            sensing.one_bit_quantize(y, gamma),
        )


class TestTemporalThresholds:
    def test_support_and_determinism(self):
        g1 = sensing.draw_temporal_thresholds(500, 1.0, rng_seed=3)
        g2 = sensing.draw_temporal_thresholds(500, 1.0, rng_seed=3)
        np.testing.assert_array_equal(g1, g2)
        assert np.max(np.abs(g1.real)) <= 1.0
        assert np.max(np.abs(g1.imag)) <= 1.0

    def test_empirical_mean(self):
        g = sensing.draw_temporal_thresholds(1_000_000, 1.0, rng_seed=11)
        assert abs(g.real.mean()) < 0.01
        assert abs(g.imag.mean()) < 0.01


class TestSincInterpolate:
    def test_identity_factor(self):
        x = np.arange(5) + 1j
        np.testing.assert_array_equal(sensing.sinc_interpolate(x, 1), x)

    @given(st.integers(2, 5), st.integers(3, 20))
    @settings(max_examples=30, deadline=None)
    def test_subsample_consistency(self, ovs, size):
        rng = np.random.default_rng(size * 31 + ovs)
        x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        out = sensing.sinc_interpolate(x, ovs)
        assert out.size == ovs * size
        np.testing.assert_allclose(out[::ovs], x, atol=1e-12)

    def test_matches_direct_oversampling_mid_vector(self):
        w = short_waveform(num_nyquist=64)
        ovs = 3
        nyq = sensing.sampled_signal_vector(w, 0.0, sensing.sampling_config(B, w.duration, 1))
        direct = sensing.sampled_signal_vector(w, 0.0, sensing.sampling_config(B, w.duration, ovs))
        interp = sensing.sinc_interpolate(nyq, ovs)
        lo, hi = direct.size // 4, 3 * direct.size // 4
        rel = np.linalg.norm(interp[lo:hi] - direct[lo:hi]) / np.linalg.norm(direct[lo:hi])
        assert rel < 0.01
