"""Frequency-noise power spectral density models.

All spectra are two-sided: ``S(f) = S(-f)`` and the variance of a process is
``integral_{-inf}^{inf} S(f) df``.  A one-sided spectrum would be ``2 S(f)``
for ``f > 0``; that conversion is never applied implicitly.

Frequency-noise spectra ``S_dnu`` are in Hz^2/Hz, phase-noise spectra
``S_phi = S_dnu / f^2`` in rad^2/Hz.  The same model classes describe relative
intensity noise, in which case the amplitude is in 1/Hz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError, NoSolutionError, ValidationError

__all__ = [
    "White",
    "BandLimitedWhite",
    "ServoBump",
    "Composite",
    "NoiseModel",
    "ServoBumpPower",
    "psd_delta_nu",
    "psd_phi",
    "servo_bump_power",
    "crossover_fx",
    "variance_delta_nu",
    "model_from_dict",
    "model_to_dict",
    "iter_terms",
]

SIDEDNESS = "two-sided"


def _check_nonneg(name, value):
    if not np.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")


def _check_pos(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class White:
    """Flat spectrum ``S(f) = h0``."""

    h0: float

    def __post_init__(self):
        _check_nonneg("h0", self.h0)

    def psd(self, f):
        f = np.asarray(f, dtype=float)
        return np.full_like(f, self.h0)


@dataclass(frozen=True)
class BandLimitedWhite:
    """``S(f) = h0`` for ``|f| <= fc`` and zero above."""

    h0: float
    fc: float

    def __post_init__(self):
        _check_nonneg("h0", self.h0)
        _check_pos("fc", self.fc)

    def psd(self, f):
        f = np.asarray(f, dtype=float)
        return np.where(np.abs(f) <= self.fc, self.h0, 0.0)


@dataclass(frozen=True)
class ServoBump:
    """Symmetric pair of Gaussian bumps of height ``hg`` at ``+-fg``."""

    hg: float
    sigma_g: float
    fg: float

    def __post_init__(self):
        _check_nonneg("hg", self.hg)
        _check_pos("sigma_g", self.sigma_g)
        _check_pos("fg", self.fg)

    def psd(self, f):
        f = np.asarray(f, dtype=float)
        s2 = 2.0 * self.sigma_g**2
        return self.hg * (np.exp(-((f - self.fg) ** 2) / s2) + np.exp(-((f + self.fg) ** 2) / s2))

    @property
    def s_g(self):
        return servo_bump_power(self.hg, self.sigma_g, self.fg).s_g


@dataclass(frozen=True)
class Composite:
    """Sum of component spectra."""

    terms: tuple

    def __init__(self, terms: Sequence):
        terms = tuple(terms)
        for t in terms:
            if not isinstance(t, (White, BandLimitedWhite, ServoBump, Composite)):
                raise ValidationError(f"unsupported composite term {t!r}")
        object.__setattr__(self, "terms", terms)

    def psd(self, f):
        f = np.asarray(f, dtype=float)
        out = np.zeros_like(f)
        for t in self.terms:
            out = out + t.psd(f)
        return out


NoiseModel = Union[White, BandLimitedWhite, ServoBump, Composite]


def iter_terms(model):
    """Yield the non-composite leaves of ``model``."""
    if isinstance(model, Composite):
        for t in model.terms:
            yield from iter_terms(t)
    else:
        yield model


def psd_delta_nu(model, f):
    """Two-sided frequency-noise PSD ``S_dnu(f)`` in Hz^2/Hz.

    Returns a float for scalar input, an array otherwise.
    """
    out = model.psd(f)
    return float(out) if np.ndim(out) == 0 else out


def psd_phi(model, f):
    """Phase-noise PSD ``S_phi(f) = S_dnu(f) / f^2`` in rad^2/Hz.

    Raises
    ------
    DomainError
        If any ``f`` is zero, where ``S_phi`` is singular.
    """
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr == 0):
        raise DomainError("S_phi is singular at f = 0")
    out = model.psd(f_arr) / f_arr**2
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ServoBumpPower:
    """Integrated phase-noise power of one bump pair.

    ``narrow_violated`` is set when ``sigma_g > fg / 3``, where replacing
    ``f^2`` by ``fg^2`` under the bump is no longer a good approximation.
    """

    s_g: float
    narrow_violated: bool

    def __float__(self):
        return self.s_g


def servo_bump_power(hg, sigma_g, fg):
    """Dimensionless bump power ``s_g = sqrt(8 pi) sigma_g hg / fg^2``."""
    _check_nonneg("hg", hg)
    _check_pos("sigma_g", sigma_g)
    _check_pos("fg", fg)
    violated = sigma_g > fg / 3.0
    if violated:
        warnings.warn(
            f"servo bump is not narrow (sigma_g={sigma_g:g} > fg/3={fg / 3:g}); s_g is approximate",
            RuntimeWarning,
            stacklevel=2,
        )
    return ServoBumpPower(math.sqrt(8 * math.pi) * sigma_g * hg / fg**2, violated)


def _phase_tail(term, fx):
    """``2 * int_fx^inf S(f) / f^2 df`` for a single term."""
    if isinstance(term, White):
        return 2.0 * term.h0 / fx
    if isinstance(term, BandLimitedWhite):
        return 2.0 * term.h0 * max(1.0 / fx - 1.0 / term.fc, 0.0)
    if isinstance(term, ServoBump):
        if term.hg == 0:
            return 0.0
        lo = max(fx, term.fg - 12 * term.sigma_g)
        hi = term.fg + 12 * term.sigma_g
        if hi <= lo:
            return 0.0

        def integrand(f):
            return float(term.psd(f)) / f**2

        pts = [p for p in (term.fg - term.sigma_g, term.fg, term.fg + term.sigma_g) if lo < p < hi]
        val, err = integrate.quad(integrand, lo, hi, points=pts or None, limit=200, epsabs=1e-13, epsrel=1e-11)
        # low-frequency shoulder of the -fg Gaussian and the +fg one below lo
        if lo > fx:
            extra, _ = integrate.quad(integrand, fx, lo, limit=200, epsabs=1e-13, epsrel=1e-11)
            val += extra
        return 2.0 * val
    raise ValidationError(f"unsupported term {term!r}")


def _total_tail(model, fx):
    return sum(_phase_tail(t, fx) for t in iter_terms(model))


def crossover_fx(model, f_min=1e-6, f_max=1e12, target=0.5):
    """Crossover frequency where ``2 int_fx^inf S_phi df`` equals ``target``.

    Above ``f_x`` the phase noise is weak and the heterodyne spectrum follows
    the phase-noise PSD; below it the lineshape is dominated by the broadened
    carrier.  Pure white noise is solved in closed form (``f_x = 4 h0``);
    everything else is bracketed on ``[f_min, f_max]`` and bisected in
    ``log f``.

    Raises
    ------
    NoSolutionError
        If the tail integral stays below ``target`` on the whole bracket.
    """
    if isinstance(model, White):
        if model.h0 == 0:
            raise NoSolutionError("zero spectrum never reaches the crossover criterion")
        return 4.0 * model.h0 * (0.5 / target)
    g_lo = _total_tail(model, f_min)
    if g_lo < target:
        raise NoSolutionError(
            f"phase-noise tail integral is only {g_lo:.3g} at f={f_min:g} Hz (< {target})"
        )
    if _total_tail(model, f_max) > target:
        raise NoSolutionError(f"tail integral still above {target} at f={f_max:g} Hz")
    a, b = math.log(f_min), math.log(f_max)
    for _ in range(200):
        m = 0.5 * (a + b)
        if _total_tail(model, math.exp(m)) > target:
            a = m
        else:
            b = m
        if b - a < 1e-13:
            break
    return math.exp(0.5 * (a + b))


def variance_delta_nu(model):
    """Two-sided variance ``int S_dnu df`` in Hz^2.

    Raises
    ------
    DivergenceError
        If the model contains an unbounded white term with ``h0 > 0``.
    """
    total = 0.0
    for t in iter_terms(model):
        if isinstance(t, White):
            if t.h0 > 0:
                raise DivergenceError("white noise has infinite variance")
        elif isinstance(t, BandLimitedWhite):
            total += 2.0 * t.h0 * t.fc
        elif isinstance(t, ServoBump):
            total += 2.0 * t.hg * math.sqrt(2 * math.pi) * t.sigma_g
    return total


# -- JSON (de)serialisation --------------------------------------------------

_KEYS = {
    "h0": ("h0_hz2_per_hz", "h0"),
    "fc": ("fc_hz", "fc"),
    "hg": ("hg_hz2_per_hz", "hg"),
    "sigma_g": ("sigma_g_hz", "sigma_g"),
    "fg": ("fg_hz", "fg"),
}


def _get(d, name):
    for key in _KEYS[name]:
        if key in d:
            try:
                return float(d[key])
            except (TypeError, ValueError):
                raise ValidationError(f"field '{key}' must be a number, got {d[key]!r}") from None
    raise ValidationError(f"missing field '{_KEYS[name][0]}'")


def model_from_dict(d: dict[str, Any]):
    """Build a model from its JSON document (``kind`` plus SI parameters)."""
    if not isinstance(d, dict):
        raise ValidationError("noise model must be a JSON object")
    kind = d.get("kind")
    if kind == "white":
        return White(_get(d, "h0"))
    if kind == "band_limited_white":
        return BandLimitedWhite(_get(d, "h0"), _get(d, "fc"))
    if kind == "servo_bump":
        return ServoBump(_get(d, "hg"), _get(d, "sigma_g"), _get(d, "fg"))
    if kind == "composite":
        terms = d.get("terms")
        if not isinstance(terms, list):
            raise ValidationError("field 'terms' must be a list")
        return Composite([model_from_dict(t) for t in terms])
    raise ValidationError(f"field 'kind' has unknown value {kind!r}")


def model_to_dict(model) -> dict[str, Any]:
    """Inverse of :func:`model_from_dict`, with unit-suffixed keys."""
    if isinstance(model, White):
        return {"kind": "white", "h0_hz2_per_hz": model.h0}
    if isinstance(model, BandLimitedWhite):
        return {"kind": "band_limited_white", "h0_hz2_per_hz": model.h0, "fc_hz": model.fc}
    if isinstance(model, ServoBump):
        return {
            "kind": "servo_bump",
            "hg_hz2_per_hz": model.hg,
            "sigma_g_hz": model.sigma_g,
            "fg_hz": model.fg,
        }
    if isinstance(model, Composite):
        return {"kind": "composite", "terms": [model_to_dict(t) for t in model.terms]}
    raise ValidationError(f"unsupported model {model!r}")
