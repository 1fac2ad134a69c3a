"""Random time series of laser phase, frequency and intensity noise.

A realization is the truncated Fourier series

    x(t) = sum_{j=1}^{M/2} 2 sqrt(S_x(f_j) df) cos(2 pi f_j t + phi_j),

with ``f_j = j df``, ``df = 1/T`` and phases ``phi_j`` uniform on
``[0, 2 pi)``.  Amplitudes are deterministic; only the phases are random.
The frequency trace uses the same phases with ``sin`` and amplitude
``-2 sqrt(S_dnu df)``, so ``dnu = (1/2pi) dphi/dt`` holds term by term.

Seeding
-------
Trial ``i`` of a run with base seed ``s`` on noise channel ``c`` draws its
phases from ``numpy.random.Generator(PCG64(mix_seed(mix_seed(s, c), i)))``,
where :func:`mix_seed` is built on the splitmix64 finalizer.  Phases for all
``M/2`` modes are always drawn, so pruning silent modes never changes the
stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .spectra import model_to_dict

__all__ = [
    "TraceKind",
    "SynthesisConfig",
    "FourierSeries",
    "NoiseTrace",
    "mix_seed",
    "splitmix64",
    "draw_phases",
    "synth_phase_trace",
    "synth_frequency_trace",
    "synth_intensity_trace",
    "fourier_series",
]

RNG_ALGORITHM = "PCG64 seeded by splitmix64 mix"
_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 generator (increment then finalize)."""
    z = (int(x) + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix_seed(base: int, index: int) -> int:
    """Derive a 64-bit child seed: ``splitmix64(splitmix64(base) ^ index)``."""
    return splitmix64(splitmix64(int(base) & _MASK) ^ (int(index) & _MASK))


class TraceKind(str, Enum):
    PHASE = "phase"
    FREQUENCY = "frequency_deviation"
    INTENSITY = "relative_intensity"


@dataclass(frozen=True)
class SynthesisConfig:
    """Time window and bandwidth of a synthesized trace.

    ``M = 2 ceil(bandwidth T)`` is derived so that the top mode is exactly at
    or just above ``bandwidth``; :attr:`bandwidth` reports ``(M/2)/T``.
    """

    duration_T: float = 50e-6
    requested_bandwidth: float = 10e6
    base_seed: int = 0
    num_samples_M: int = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.duration_T) and self.duration_T > 0):
            raise ValidationError(f"duration_T must be > 0, got {self.duration_T!r}")
        if not (np.isfinite(self.requested_bandwidth) and self.requested_bandwidth > 0):
            raise ValidationError(f"bandwidth must be > 0, got {self.requested_bandwidth!r}")
        half = math.ceil(self.requested_bandwidth * self.duration_T * (1 - 1e-12))
        M = 2 * half
        if M < 2:
            raise ValidationError("M < 2: bandwidth * T too small")
        if half <= 1:
            raise ValidationError("bandwidth must exceed the frequency step 1/T")
        object.__setattr__(self, "num_samples_M", M)
        object.__setattr__(self, "base_seed", int(self.base_seed) & _MASK)

    @classmethod
    def from_samples(cls, duration_T, num_samples_M, base_seed=0):
        if num_samples_M < 4 or num_samples_M % 2:
            raise ValidationError("num_samples_M must be even and >= 4")
        return cls(duration_T, (num_samples_M // 2) / duration_T, base_seed)

    @property
    def df(self):
        return 1.0 / self.duration_T

    @property
    def bandwidth(self):
        return (self.num_samples_M // 2) * self.df

    @property
    def frequencies(self):
        return np.arange(1, self.num_samples_M // 2 + 1) * self.df

    @property
    def times(self):
        return np.arange(self.num_samples_M) * (self.duration_T / self.num_samples_M)

    def to_dict(self):
        return {
            "duration_s": self.duration_T,
            "bandwidth_hz": self.bandwidth,
            "num_samples": self.num_samples_M,
            "base_seed": self.base_seed,
        }


def draw_phases(cfg: SynthesisConfig, trial=0, channel=0):
    """Uniform phases for all ``M/2`` modes of one trial."""
    seed = mix_seed(mix_seed(cfg.base_seed, channel), trial)
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(0.0, 2 * np.pi, cfg.num_samples_M // 2), seed


def _amplitudes(model, cfg, kind):
    f = cfg.frequencies
    S = model.psd(f)
    if kind is TraceKind.PHASE:
        return 2.0 * np.sqrt(S / f**2 * cfg.df)
    if kind is TraceKind.FREQUENCY:
        return -2.0 * np.sqrt(S * cfg.df)
    return 2.0 * np.sqrt(S * cfg.df)


@dataclass
class FourierSeries:
    """Batch of truncated Fourier series sharing one frequency grid.

    ``coeffs`` has shape ``(K, J)`` and holds ``a_j exp(i phi_j)`` for ``K``
    realizations; only modes with non-negligible amplitude are stored.
    ``use_sin`` selects ``sum a sin(...)`` instead of ``sum a cos(...)``.
    """

    frequencies: np.ndarray
    coeffs: np.ndarray
    use_sin: bool = False

    def __call__(self, t):
        """Evaluate at arbitrary times; returns shape ``(K,) + t.shape``."""
        t = np.asarray(t, dtype=float)
        if self.frequencies.size == 0:
            return np.zeros((self.coeffs.shape[0],) + t.shape)
        arg = 2 * np.pi * np.outer(self.frequencies, t.ravel())
        z = self.coeffs @ (np.cos(arg) + 1j * np.sin(arg))
        out = z.imag if self.use_sin else z.real
        return out.reshape((self.coeffs.shape[0],) + t.shape)

    def amplitude_bound(self):
        return np.abs(self.coeffs).sum(axis=1)


def fourier_series(model, cfg, kind=TraceKind.PHASE, trials=(0,), channel=0, prune_rel=0.0):
    """Fourier series for the given trials of one noise channel."""
    kind = TraceKind(kind)
    amp = _amplitudes(model, cfg, kind)
    keep = np.abs(amp) > prune_rel * (np.abs(amp).max() if amp.size else 0.0)
    keep &= amp != 0
    rows = []
    for i in trials:
        ph, _ = draw_phases(cfg, i, channel)
        rows.append(amp[keep] * np.exp(1j * ph[keep]))
    coeffs = np.array(rows, dtype=complex).reshape(len(rows), int(keep.sum()))
    return FourierSeries(cfg.frequencies[keep], coeffs, use_sin=kind is TraceKind.FREQUENCY)


@dataclass
class NoiseTrace:
    """One sampled realization with its provenance."""

    kind: TraceKind
    times: np.ndarray
    values: np.ndarray
    model: object
    seed: int
    config: SynthesisConfig
    trial: int = 0
    channel: int = 0
    series: FourierSeries | None = None

    def at(self, t):
        """Evaluate the underlying Fourier sum at arbitrary times."""
        return self.series(t)[0]

    def metadata(self):
        return {
            "kind": self.kind.value,
            "model": model_to_dict(self.model),
            "seed": self.seed,
            "trial": self.trial,
            "channel": self.channel,
            "rng": RNG_ALGORITHM,
            "config": self.config.to_dict(),
        }

    def to_csv(self, path):
        """Write ``time_s,value`` rows and a ``.json`` sidecar next to it."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write("time_s,value\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True))
        return path, side


def _grid_values(series: FourierSeries, cfg: SynthesisConfig):
    """FFT fast path for the uniform grid ``t_k = k T / M``."""
    M = cfg.num_samples_M
    c = np.zeros(M, dtype=complex)
    idx = np.rint(series.frequencies / cfg.df).astype(int)
    c[idx] = series.coeffs[0]
    z = np.fft.ifft(c) * M
    return z.imag if series.use_sin else z.real


def _synth(model, cfg, kind, trial, channel, direct):
    series = fourier_series(model, cfg, kind, trials=(trial,), channel=channel)
    _, seed = draw_phases(cfg, trial, channel)
    times = cfg.times
    values = series(times)[0] if direct else _grid_values(series, cfg)
    return NoiseTrace(kind, times, values, model, seed, cfg, trial, channel, series)


def synth_phase_trace(model, cfg, trial=0, channel=0, direct=False):
    """Phase realization ``phi(t_k)`` in rad from the model's ``S_phi``.

    Set ``direct=True`` to evaluate the O(M^2) closed sum instead of the FFT.
    """
    return _synth(model, cfg, TraceKind.PHASE, trial, channel, direct)


def synth_frequency_trace(model, cfg, trial=0, channel=0, direct=False):
    """Frequency deviation ``dnu(t_k)`` in Hz, sharing phases with the phase trace."""
    return _synth(model, cfg, TraceKind.FREQUENCY, trial, channel, direct)


def synth_intensity_trace(model, cfg, trial=0, channel=0, direct=False):
    """Relative intensity ``alpha_I(t_k)``; ``model`` is read as ``S_alpha`` in 1/Hz."""
    return _synth(model, cfg, TraceKind.INTENSITY, trial, channel, direct)
