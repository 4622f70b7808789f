"""Baseband waveform synthesis, two-path channel simulation, one-bit ADC.

The narrowband pilot is a single-tone PSK burst shaped with a raised-cosine
pulse.  The channel adds a direct and an indirect path plus band-limited
complex Gaussian noise whose autocorrelation follows the sinc kernel of the
receive filter.  The ADC keeps only the signs of the real and imaginary
parts relative to a known per-sample threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PULSE_SUPPORT_SYMBOLS = 8.0
EIGENVALUE_FLOOR_RATIO = 1e-10


@dataclass(frozen=True)
class PulseShape:
    """Raised-cosine pulse with design bandwidth `bandwidth` (Hz)."""

    bandwidth: float
    rolloff: float

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")

    @property
    def symbol_period(self) -> float:
        """Symbol period putting the pulse's excess band edge at `bandwidth`."""
        return (1.0 + self.rolloff) / (2.0 * self.bandwidth)


@dataclass(frozen=True)
class Waveform:
    """Pilot burst: unit-modulus symbols, PSK rotation, raised-cosine pulse."""

    symbols: np.ndarray
    alphabet_size: int
    symbol_period: float
    pulse: PulseShape
    duration: float
    num_symbols: int

    def __post_init__(self) -> None:
        if self.alphabet_size not in (2, 4):
            raise ValueError("alphabet_size must be 2 or 4")
        if not np.allclose(np.abs(self.symbols), 1.0, atol=1e-12):
            raise ValueError("pilot symbols must have unit modulus")
        if self.num_symbols * self.symbol_period > self.duration * (1 + 1e-12):
            raise ValueError("symbols do not fit inside the burst duration")


@dataclass(frozen=True)
class SamplingConfig:
    """Uniform sampling at `oversampling` times the Nyquist rate."""

    oversampling: int
    sample_period: float
    num_samples: int


@dataclass(frozen=True)
class ChannelParams:
    """Two-path channel: complex gains, delays (s), and noise power."""

    direct_gain: complex
    indirect_gain: complex
    direct_delay: float
    indirect_delay: float
    noise_power: float


def random_symbols(num_symbols: int, alphabet_size: int, rng_seed) -> np.ndarray:
    """Draw pilot symbols uniformly from the `alphabet_size`-PSK alphabet."""
    rng = np.random.default_rng(rng_seed)
    idx = rng.integers(0, alphabet_size, size=num_symbols)
    return np.exp(2j * np.pi * idx / alphabet_size)


def make_waveform(
    bandwidth: float,
    rolloff: float,
    duration: float,
    alphabet_size: int = 2,
    rng_seed=0,
    symbols: np.ndarray | None = None,
) -> Waveform:
    """Build a pilot burst filling `duration` with as many symbols as fit.

    Parameters
    ----------
    bandwidth : float
        Design bandwidth B of the raised-cosine pulse, Hz.
    rolloff : float
        Pulse rolloff in [0, 1].
    duration : float
        Burst duration T, seconds.
    alphabet_size : int
        PSK alphabet size, 2 or 4.
    rng_seed
        Seed for the random pilot symbols (ignored when `symbols` is given).
    symbols : ndarray, optional
        Explicit unit-modulus pilot symbols.

    Returns
    -------
    Waveform
    """
    pulse = PulseShape(bandwidth=bandwidth, rolloff=rolloff)
    period = pulse.symbol_period
    num_symbols = int(np.floor(duration / period * (1 + 1e-12)))
    if symbols is None:
        symbols = random_symbols(num_symbols, alphabet_size, rng_seed)
    else:
        symbols = np.asarray(symbols, dtype=complex)
        num_symbols = symbols.size
    return Waveform(
        symbols=symbols,
        alphabet_size=alphabet_size,
        symbol_period=period,
        pulse=pulse,
        duration=duration,
        num_symbols=num_symbols,
    )


def sampling_config(bandwidth: float, duration: float, oversampling: int = 1) -> SamplingConfig:
    """Sampling grid with L = 2*oversampling*B*T samples over the burst."""
    if oversampling < 1:
        raise ValueError("oversampling must be a positive integer")
    num = 2.0 * oversampling * bandwidth * duration
    num_samples = int(round(num))
    if abs(num - num_samples) > 1e-6:
        raise ValueError("duration must make 2*oversampling*B*T an integer")
    return SamplingConfig(
        oversampling=oversampling,
        sample_period=1.0 / (2.0 * oversampling * bandwidth),
        num_samples=num_samples,
    )


def raised_cosine(t, symbol_period: float, rolloff: float):
    """Unit-peak raised-cosine pulse, truncated to +/- 8 symbol periods.

    The removable singularity at |t| = symbol_period/(2*rolloff) is filled
    with its limit value; a small tolerance window absorbs samples landing
    there up to floating-point noise.
    """
    u = np.asarray(t, dtype=float) / symbol_period
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    g = np.zeros_like(u)
    inside = np.abs(u) <= PULSE_SUPPORT_SYMBOLS
    ui = u[inside]
    if rolloff == 0.0:
        g[inside] = np.sinc(ui)
    else:
        den = 1.0 - (2.0 * rolloff * ui) ** 2
        singular = np.abs(den) < 1e-8
        limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
        ratio = np.sinc(ui) * np.cos(np.pi * rolloff * ui) / np.where(singular, 1.0, den)
        g[inside] = np.where(singular, limit, ratio)
    return g[()] if scalar else g


def baseband_signal(w: Waveform, t):
    """Evaluate the pilot waveform at time(s) `t`.

    Parameters
    ----------
    w : Waveform
    t : float or ndarray
        Evaluation times, seconds.

    Returns
    -------
    complex or ndarray
        sum_k a_k exp(j*k*pi/M) g(t - k*T_c).
    """
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(w.num_symbols)
    rotated = w.symbols * np.exp(1j * np.pi * k / w.alphabet_size)
    taps = raised_cosine(
        tt[None, :] - k[:, None] * w.symbol_period, w.symbol_period, w.pulse.rolloff
    )
    out = rotated @ taps
    return out[0] if np.ndim(t) == 0 else out


def sampled_signal_vector(w: Waveform, delay: float, cfg: SamplingConfig) -> np.ndarray:
    """Samples s((l-1)*T_s - delay) for l = 1..L; tails evaluate naturally."""
    times = np.arange(cfg.num_samples) * cfg.sample_period - delay
    return baseband_signal(w, times)


def noise_covariance(num_samples: int, oversampling: int) -> np.ndarray:
    """Sinc autocorrelation matrix [Sigma]_{i,j} = sinc(|i-j|/oversampling)."""
    idx = np.arange(num_samples)
    lag = np.abs(idx[:, None] - idx[None, :]) / oversampling
    # integer lags are exact zeros of the sinc; snap them past float round-off
    return np.where(lag == np.round(lag), (lag == 0.0).astype(float), np.sinc(lag))


def covariance_factors(cov: np.ndarray, floor_ratio: float = EIGENVALUE_FLOOR_RATIO):
    """Symmetric square root and inverse square root with eigenvalue flooring.

    Eigenvalues below floor_ratio times the largest are clamped up to that
    floor; the same clamped spectrum feeds both factors so sampling and
    whitening stay mutually consistent for near-singular covariances.

    Returns
    -------
    (ndarray, ndarray)
        (cov^{1/2}, cov^{-1/2}), both symmetric.
    """
    vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
    top = vals[-1]
    if top <= 0:
        raise ValueError("covariance has no positive eigenvalue")
    vals = np.maximum(vals, floor_ratio * top)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    inv_root = (vecs / np.sqrt(vals)) @ vecs.T
    return root, inv_root


@lru_cache(maxsize=64)
def _cached_noise_factors(num_samples: int, oversampling: int):
    root, inv_root = covariance_factors(noise_covariance(num_samples, oversampling))
    root.setflags(write=False)
    inv_root.setflags(write=False)
    return root, inv_root


def noise_factors(num_samples: int, oversampling: int):
    """Cached (Sigma^{1/2}, Sigma^{-1/2}) for the sinc covariance."""
    return _cached_noise_factors(num_samples, oversampling)


def simulate_received(w: Waveform, ch: ChannelParams, cfg: SamplingConfig, rng_seed) -> np.ndarray:
    """Simulate one received sample vector of the two-path channel.

    Noise is circular complex Gaussian with covariance noise_power * Sigma:
    the real and imaginary parts are independent, each with covariance
    noise_power * Sigma / 2.  Deterministic for a fixed seed.
    """
    if not (0.0 <= ch.direct_delay < w.duration and 0.0 <= ch.indirect_delay < w.duration):
        raise ValueError("path delays must lie in [0, duration)")
    y = ch.direct_gain * sampled_signal_vector(w, ch.direct_delay, cfg) + ch.indirect_gain * sampled_signal_vector(w, ch.indirect_delay, cfg)
    if ch.noise_power > 0.0:
        root, _ = noise_factors(cfg.num_samples, cfg.oversampling)
        rng = np.random.default_rng(rng_seed)
        parts = rng.standard_normal((2, cfg.num_samples))
        scale = np.sqrt(ch.noise_power / 2.0)
        y = y + scale * (root @ parts[0] + 1j * (root @ parts[1]))
    return y


def one_bit_quantize(y: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Sign-quantize real and imaginary parts against per-sample thresholds.

    Entry l is (sgn(Re{y_l - g_l}) + j*sgn(Im{y_l - g_l})) / sqrt(2) with
    sgn(0) = +1, so every output entry lies on {(+-1 +- j)/sqrt(2)}.
    """
    y = np.asarray(y)
    thresholds = np.asarray(thresholds)
    if y.shape != thresholds.shape:
        raise ValueError("sample and threshold vectors must have equal length")
    diff = y - thresholds
    re = np.where(diff.real >= 0.0, 1.0, -1.0)
    im = np.where(diff.imag >= 0.0, 1.0, -1.0)
    return (re + 1j * im) / np.sqrt(2.0)


def draw_temporal_thresholds(num_samples: int, amplitude: float, rng_seed) -> np.ndarray:
    """Draw i.i.d. thresholds, Re and Im uniform on [-amplitude, amplitude]."""
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(rng_seed)
    parts = rng.uniform(-amplitude, amplitude, size=(2, num_samples))
    return parts[0] + 1j * parts[1]


def sinc_interpolate(nyquist: np.ndarray, oversampling: int) -> np.ndarray:
    """Sinc-interpolate a Nyquist-rate vector onto a grid `oversampling` x finer.

    Output entry l is sum_p nyquist_p sinc((l-1)/oversampling - p + 1), so the
    entries at l = (p-1)*oversampling + 1 reproduce the input exactly.
    """
    x = np.asarray(nyquist)
    if oversampling < 1:
        raise ValueError("oversampling must be a positive integer")
    if oversampling == 1:
        return x.copy()
    fine = np.arange(x.size * oversampling, dtype=float) / oversampling
    kernel = np.sinc(fine[:, None] - np.arange(x.size)[None, :])
    return kernel @ x
