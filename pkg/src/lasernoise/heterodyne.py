"""Laser lineshape and delayed self-heterodyne beat spectra.

Everything is built from the phase structure function

    D(tau) = 2 int S_dnu(f) sin^2(pi f tau) / f^2 df   (over all f),

for which ``R_E(tau) = exp(-D(tau))`` (carrier removed, ``|E0|^2 / 2 = 1``)
and ``R_i(tau) = exp(-[2 D(tau) + 2 D(t_d) - D(tau - t_d) - D(tau + t_d)])``.
``D`` is exact for white and band-limited terms and uses fixed Gauss-Legendre
panels for servo bumps.

Spectra are recentred on the carrier and normalized to unit area.  Constant
parts of the autocorrelation (an unbroadened carrier) appear as a symbolic
delta weight on :class:`SpectrumCurve`, never as a tall bin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import QuadratureError, RegimeError, TauMaxError, ValidationError
from .spectra import BandLimitedWhite, ServoBump, White, iter_terms, model_to_dict
from .specfun import sici

__all__ = [
    "HeterodyneConfig",
    "Normalization",
    "SpectrumCurve",
    "structure_function",
    "autocorr_RE",
    "self_het_autocorr",
    "lineshape_SE",
    "self_het_spectrum",
    "self_het_proxy",
    "quasistatic_spectra",
    "lorentzian_SE",
    "self_het_white",
    "lineshape_fit_form",
    "self_het_fit_form",
    "cosine_transform",
]

TAIL_TOL = 1e-6
_PTS_PER_PERIOD = 48
_MIN_PANELS = 2000


class Normalization(str, Enum):
    UNIT_INTEGRAL = "unit_integral"
    CARRIER_OMITTED = "carrier_omitted"
    RAW = "raw"


@dataclass(frozen=True)
class HeterodyneConfig:
    """Delay line and evaluation grid.

    ``shift_nu_s`` (the acousto-optic offset) is recorded only; all spectra
    are recentred at zero.  ``freq_grid`` is either symmetric about zero or a
    non-negative half grid, spectra being even.  ``tau_max=None`` chooses the
    cutoff automatically from the decay of the autocorrelation.
    """

    delay_td: float = 54.45e-6
    freq_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1e5, 1001))
    tau_max: float | None = None
    quad_tolerance: float = 1e-8
    shift_nu_s: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.delay_td) and self.delay_td > 0):
            raise ValidationError(f"delay_td must be > 0, got {self.delay_td!r}")
        g = np.asarray(self.freq_grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or not np.all(np.isfinite(g)):
            raise ValidationError("freq_grid must be a non-empty 1-D array of finite values")
        if g.min() < 0 and not np.allclose(np.sort(g), -np.sort(g)[::-1], rtol=1e-12, atol=0):
            raise ValidationError("freq_grid must be symmetric about 0 or non-negative")
        object.__setattr__(self, "freq_grid", g)
        if self.tau_max is not None and not self.tau_max > 0:
            raise ValidationError("tau_max must be > 0")


@dataclass
class SpectrumCurve:
    """Continuous spectrum on a grid plus an optional delta at ``f = 0``."""

    frequencies: np.ndarray
    values: np.ndarray
    normalization: Normalization = Normalization.UNIT_INTEGRAL
    delta_weight: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def has_delta_at_zero(self):
        return self.delta_weight != 0.0

    def to_csv(self, path):
        """Write ``freq_hz,psd`` and a JSON sidecar with the delta record."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write("freq_hz,psd\n")
            for f, v in zip(self.frequencies, self.values):
                fh.write(f"{f:.17g},{v:.17g}\n")
        side = dict(self.meta)
        side.update(normalization=self.normalization.value, delta_weight=self.delta_weight)
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True, default=str))
        return path


# -- structure function ------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _d_white(h0, tau):
    return 2 * math.pi**2 * h0 * np.abs(tau)


def _d_bandlimited(h0, fc, tau):
    # 4 h0 int_0^fc sin^2(a f)/f^2 df = 4 h0 [a Si(2 a fc) - sin^2(a fc)/fc], a = pi |tau|
    a = math.pi * np.abs(tau)
    si, _ = sici(2 * a * fc)
    return 4 * h0 * (a * si - np.sin(a * fc) ** 2 / fc)


def _d_bump(term: ServoBump, tau):
    tau = np.abs(np.atleast_1d(tau))
    F = term.fg + 10 * term.sigma_g
    lo = max(0.0, term.fg - 10 * term.sigma_g)
    # the -fg Gaussian reaches into f > 0 only for wide bumps
    if term.fg < 10 * term.sigma_g:
        lo = 0.0
    tmax = float(tau.max()) if tau.size else 0.0
    panels = max(8, int(math.ceil(2 * (F - lo) * tmax)) + 1, int(math.ceil(4 * (F - lo) / term.sigma_g)))
    edges = np.linspace(lo, F, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    f = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel() * term.psd(f)
    keep = w > 0
    f, w = f[keep], w[keep]
    out = np.empty(tau.shape)
    step = max(1, int(4e6 // max(f.size, 1)))
    for i in range(0, tau.size, step):
        t = tau[i : i + step]
        kern = (math.pi * t[None, :]) ** 2 * np.sinc(np.outer(f, t)) ** 2
        out[i : i + step] = 4 * (w @ kern)
    return out


def structure_function(model, tau, method="auto"):
    """Phase structure function ``D(tau)``, dimensionless.

    ``method="auto"`` uses closed forms for white and band-limited terms;
    ``"quadrature"`` integrates ``S sin^2 / f^2`` adaptively for every term
    (the high-frequency tail of a flat spectrum is added analytically).
    """
    tau = np.asarray(tau, dtype=float)
    if method == "quadrature":
        out = np.vectorize(lambda t: _d_quad(model, t), otypes=[float])(tau)
        return float(out) if out.ndim == 0 else out
    if method != "auto":
        raise ValidationError(f"unknown method {method!r}")
    out = np.zeros(tau.shape)
    for t in iter_terms(model):
        if isinstance(t, White):
            out = out + _d_white(t.h0, tau)
        elif isinstance(t, BandLimitedWhite):
            out = out + _d_bandlimited(t.h0, t.fc, tau)
        elif t.hg > 0:
            out = out + _d_bump(t, tau).reshape(tau.shape)
    return float(out) if out.ndim == 0 else out


def _breaks(model):
    pts = []
    for t in iter_terms(model):
        if isinstance(t, BandLimitedWhite):
            pts.append(t.fc)
        elif isinstance(t, ServoBump):
            pts += [t.fg - 5 * t.sigma_g, t.fg, t.fg + 5 * t.sigma_g]
    return sorted(p for p in pts if p > 0)


def _cos_tail(k, F):
    """``int_F^inf cos(k f) / f^2 df``."""
    if k == 0:
        return 1.0 / F
    si, _ = sici(k * F)
    return math.cos(k * F) / F - k * (math.pi / 2 - si)


def _adaptive(fun, F, period, pts, tol):
    edges = sorted({0.0, F, *[p for p in pts if 0 < p < F]})
    step = 20 * period if period > 0 else F
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / step)))
        grid = np.linspace(a, b, n + 1)
        for lo, hi in zip(grid[:-1], grid[1:]):
            val, err = integrate.quad(fun, lo, hi, limit=200, epsabs=0.0, epsrel=tol)
            if not np.isfinite(val):
                raise QuadratureError(f"non-finite integral on [{lo:g}, {hi:g}] Hz")
            total += val
    return total


def _d_quad(model, tau, tol=1e-12):
    tau = abs(float(tau))
    if tau == 0:
        return 0.0
    pts = _breaks(model)
    F = max([50.0 / tau] + [1.1 * p for p in pts])

    def fun(f):
        return float(model.psd(f)) * (math.pi * tau) ** 2 * np.sinc(f * tau) ** 2

    val = _adaptive(fun, F, 1.0 / tau, pts, tol)
    # flat tail beyond F: sin^2(a f) = (1 - cos(2 a f)) / 2
    level = float(model.psd(F))
    val += level * 0.5 * (1.0 / F - _cos_tail(2 * math.pi * tau, F))
    return 4 * val


def autocorr_RE(model, tau, method="auto"):
    """Field autocorrelation ``R_E(tau) = exp(-D(tau))``, carrier removed, ``R_E(0) = 1``."""
    return np.exp(-structure_function(model, tau, method))


def _self_het_exponent(model, tau, td, method):
    tau = np.asarray(tau, dtype=float)
    d = lambda t: structure_function(model, t, method)  # noqa: E731
    return 2 * d(tau) + 2 * d(td) - d(tau - td) - d(tau + td)


def _ri2_quad(model, tau, td, tol=1e-12):
    tau = abs(float(tau))
    if tau == 0:
        return 0.0
    pts = _breaks(model)
    short = min(tau, td)
    F = max([200.0 / short] + [1.1 * p for p in pts])

    def fun(f):
        # sin^2(pi f tau) sin^2(pi f td) / f^2, finite at f = 0
        return float(model.psd(f)) * (math.pi * tau) ** 2 * np.sinc(f * tau) ** 2 * np.sin(math.pi * f * td) ** 2

    val = _adaptive(fun, F, 1.0 / max(tau, td), pts, tol)
    level = float(model.psd(F))
    a, b = 2 * math.pi * tau, 2 * math.pi * td
    # sin^2 A sin^2 B = [1 - cos 2A - cos 2B + cos(2A-2B)/2 + cos(2A+2B)/2] / 4
    tail = (
        1.0 / F
        - _cos_tail(a, F)
        - _cos_tail(b, F)
        + 0.5 * _cos_tail(abs(a - b), F)
        + 0.5 * _cos_tail(a + b, F)
    ) / 4
    val += level * tail
    return 16 * val


def self_het_autocorr(model, tau, td, method="auto"):
    """Self-heterodyne autocorrelation ``R_i(tau)`` for delay ``td``; ``R_i(0) = 1``.

    ``method="quadrature"`` integrates
    ``8 int S sin^2(pi f tau) sin^2(pi f td) / f^2 df`` directly instead of
    combining structure functions.
    """
    if not td > 0:
        raise ValidationError("td must be > 0")
    if method == "quadrature":
        tau = np.asarray(tau, dtype=float)
        out = np.exp(-np.vectorize(lambda t: _ri2_quad(model, t, td), otypes=[float])(tau))
        return float(out) if out.ndim == 0 else out
    out = np.exp(-_self_het_exponent(model, tau, td, method))
    return float(out) if np.ndim(out) == 0 else out


# -- cosine transform --------------------------------------------------------


def _filon_coeffs(theta):
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.1
    t = np.where(small, 1.0, theta)
    s, c = np.sin(t), np.cos(t)
    alpha = (t * t + t * s * c - 2 * s * s) / t**3
    beta = 2 * (t * (1 + c * c) - 2 * s * c) / t**3
    gamma = 4 * (s - t * c) / t**3
    th2 = theta * theta
    alpha = np.where(small, theta * th2 * (2 / 45 - th2 * (2 / 315 - th2 * 2 / 4725)), alpha)
    beta = np.where(small, 2 / 3 + th2 * (2 / 15 - th2 * (4 / 105 - th2 * 2 / 567)), beta)
    gamma = np.where(small, 4 / 3 - th2 * (2 / 15 - th2 * (1 / 210 - th2 / 11340)), gamma)
    return alpha, beta, gamma


def cosine_transform(g, a, b, freqs, n):
    """Filon-Simpson estimate of ``int_a^b g(tau) cos(2 pi f tau) dtau``.

    ``g`` is sampled at ``n + 1`` (``n`` even) equispaced points; the rule is
    exact for piecewise-quadratic ``g`` at any frequency.
    """
    if n % 2:
        n += 1
    tau = np.linspace(a, b, n + 1)
    gv = np.asarray(g(tau), dtype=float)
    h = (b - a) / n
    freqs = np.asarray(freqs, dtype=float)
    out = np.empty(freqs.shape)
    flat = freqs.ravel()
    res = np.empty(flat.shape)
    chunk = max(1, int(2e6 // (n + 1)))
    for i in range(0, flat.size, chunk):
        w = 2 * math.pi * flat[i : i + chunk]
        al, be, ga = _filon_coeffs(w * h)
        cos_m = np.cos(np.outer(w, tau))
        c_even = cos_m[:, ::2] @ gv[::2] - 0.5 * (gv[0] * cos_m[:, 0] + gv[-1] * cos_m[:, -1])
        c_odd = cos_m[:, 1::2] @ gv[1::2]
        ends = gv[-1] * np.sin(w * b) - gv[0] * np.sin(w * a)
        res[i : i + chunk] = h * (al * ends + be * c_even + ga * c_odd)
    out[...] = res.reshape(freqs.shape)
    return out


def _max_freq(model):
    top = 0.0
    for t in iter_terms(model):
        if isinstance(t, BandLimitedWhite):
            top = max(top, t.fc)
        elif isinstance(t, ServoBump):
            top = max(top, t.fg + 5 * t.sigma_g)
    return top


def _auto_tau_max(g, start, limit=1.0):
    """Smallest doubling of ``start`` beyond which ``|g| < TAIL_TOL``."""
    t = start
    while t < limit:
        probe = np.linspace(t, 2 * t, 257)
        if np.max(np.abs(g(probe))) < TAIL_TOL:
            return t
        t *= 2
    raise TauMaxError(f"autocorrelation has not decayed below {TAIL_TOL:g} by tau = {limit:g} s")


def _transform(g, cfg, breaks, model, start):
    """Twice the cosine transform of ``g`` over ``[0, tau_max]``."""
    if cfg.tau_max is None:
        tmax = max(_auto_tau_max(g, start), max(breaks, default=0.0))
    else:
        tmax = cfg.tau_max
        if abs(float(g(np.array([tmax]))[0])) > TAIL_TOL:
            raise TauMaxError(
                f"|R(tau_max) - R(inf)| = {abs(float(g(np.array([tmax]))[0])):.3g} exceeds {TAIL_TOL:g}"
            )
    edges = sorted({0.0, tmax, *[b for b in breaks if 0 < b < tmax]})
    total = np.zeros(cfg.freq_grid.shape)
    for a, b in zip(edges[:-1], edges[1:]):
        # resolve the slowest of the model features and the autocorrelation decay
        n = int(min(4e5, max(_MIN_PANELS, 2 * math.ceil((b - a) * _PTS_PER_PERIOD * max(_max_freq(model), 1.0 / (b - a))))))
        total += cosine_transform(g, a, b, np.abs(cfg.freq_grid), n)
    return 2 * total, tmax


# -- spectra -----------------------------------------------------------------


def _meta(model, cfg, kind, mode, tmax=None):
    return {
        "kind": kind,
        "mode": mode,
        "model": model_to_dict(model),
        "delay_td_s": cfg.delay_td,
        "shift_nu_s_hz": cfg.shift_nu_s,
        "tau_max_s": tmax,
    }


def lorentzian_SE(h0, f):
    """White-noise lineshape ``h0 / (f^2 + (pi h0)^2)``, unit area, FWHM ``2 pi h0``."""
    f = np.asarray(f, dtype=float)
    return h0 / (f * f + (math.pi * h0) ** 2)


def lineshape_fit_form(h0, hg, sigma_g, fg, f):
    """Lorentzian carrier plus bump pair ``hg/fg^2 [G(f - fg) + G(f + fg)]``."""
    f = np.asarray(f, dtype=float)
    bump = np.exp(-((f - fg) ** 2) / (2 * sigma_g**2)) + np.exp(-((f + fg) ** 2) / (2 * sigma_g**2))
    return lorentzian_SE(h0, f) + hg / fg**2 * bump


def self_het_white(h0, td, f):
    """Closed-form white-noise beat spectrum; returns ``(continuous, delta_weight)``."""
    f = np.asarray(f, dtype=float)
    lor = 2 * h0 / (f * f + (2 * math.pi * h0) ** 2)
    damp = math.exp(-4 * math.pi**2 * h0 * td)
    # (2 pi h0 / f) sin(2 pi f td) -> (2 pi h0)(2 pi td) sinc(2 f td)
    ratio = 2 * math.pi * h0 * 2 * math.pi * td * np.sinc(2 * f * td)
    return lor * (1 - damp * (np.cos(2 * math.pi * f * td) + ratio)), damp


def self_het_fit_form(h0, hg, sigma_g, fg, td, f):
    """Continuous part of the white-plus-bump beat spectrum; returns ``(values, delta_weight)``."""
    f = np.asarray(f, dtype=float)
    white, weight = self_het_white(h0, td, f) if h0 > 0 else (np.zeros(f.shape), 1.0)
    bump = np.exp(-((f - fg) ** 2) / (2 * sigma_g**2)) + np.exp(-((f + fg) ** 2) / (2 * sigma_g**2))
    return white + 4 * hg / fg**2 * np.sin(math.pi * f * td) ** 2 * bump, weight


def _white_plus_bumps(model):
    terms = list(iter_terms(model))
    return all(isinstance(t, (White, ServoBump)) for t in terms)


def _split(model):
    h0, bumps = 0.0, []
    for t in iter_terms(model):
        if isinstance(t, White):
            h0 += t.h0
        else:
            bumps.append(t)
    return h0, bumps


def _carrier_limit(model):
    """``D(inf)``: infinite if any flat component reaches ``f = 0``."""
    total = 0.0
    for t in iter_terms(model):
        if isinstance(t, (White, BandLimitedWhite)):
            if t.h0 > 0:
                return math.inf
        elif t.hg > 0:
            lo = max(t.fg - 12 * t.sigma_g, 1e-3 * t.fg)
            val, _ = integrate.quad(lambda f: float(t.psd(f)) / f**2, lo, t.fg + 12 * t.sigma_g, points=[t.fg], limit=200)
            total += 2 * val
    return total


def lineshape_SE(model, cfg: HeterodyneConfig, mode="exact"):
    """Laser lineshape ``S_E(f)`` with unit area (``|E0|^2 / 2 = 1``).

    ``mode="exact"`` transforms :func:`autocorr_RE` numerically, except for a
    pure white spectrum whose transform is the Lorentzian.
    ``mode="approximate"`` returns the Lorentzian-plus-bumps fitting form and
    is only defined for white noise plus servo bumps.
    """
    f = cfg.freq_grid
    if mode == "approximate":
        if not _white_plus_bumps(model):
            raise ValidationError("approximate lineshape needs white noise plus servo bumps only")
        h0, bumps = _split(model)
        vals = lorentzian_SE(h0, f) if h0 > 0 else np.zeros(f.shape)
        for b in bumps:
            vals = vals + b.psd(f) / b.fg**2
        return SpectrumCurve(f, vals, Normalization.UNIT_INTEGRAL, 0.0 if h0 > 0 else 1.0, _meta(model, cfg, "S_E", mode))
    if mode != "exact":
        raise ValidationError(f"unknown mode {mode!r}")
    if isinstance(model, White) and model.h0 > 0:
        return SpectrumCurve(f, lorentzian_SE(model.h0, f), Normalization.UNIT_INTEGRAL, 0.0, _meta(model, cfg, "S_E", mode))
    d_inf = _carrier_limit(model)
    r_inf = 0.0 if math.isinf(d_inf) else math.exp(-d_inf)
    if r_inf == 1.0:
        return SpectrumCurve(f, np.zeros(f.shape), Normalization.UNIT_INTEGRAL, 1.0, _meta(model, cfg, "S_E", mode, 0.0))
    g = lambda tau: autocorr_RE(model, tau) - r_inf  # noqa: E731
    start = 1.0 / max(_max_freq(model), 1.0 / cfg.delay_td)
    vals, tmax = _transform(g, cfg, [], model, start)
    return SpectrumCurve(f, np.maximum(vals, 0.0), Normalization.UNIT_INTEGRAL, r_inf, _meta(model, cfg, "S_E", mode, tmax))


def self_het_spectrum(model, cfg: HeterodyneConfig, mode="exact"):
    """Delayed self-heterodyne beat spectrum ``S_i(f)`` with unit total area.

    Modes
    -----
    ``"exact"``
        Full transform of :func:`self_het_autocorr`.  The constant
        ``R_i(inf) = exp(-2 D(t_d))`` becomes the delta weight.  Writing
        ``R_i = R_inf exp(-u)``, the part linear in ``u`` is transformed in
        closed form (``R_inf 4 sin^2(pi f t_d) S_phi``) and only
        ``R_inf (exp(-u) - 1 + u)`` is transformed numerically.  This keeps
        slowly decaying ripples from sharp spectral edges out of the
        quadrature.
    ``"weak_noise"``
        First order in the noise: delta weight ``1 - 2 D(t_d)`` plus
        ``4 sin^2(pi f t_d) S_phi(f)``.
    ``"fit_form"``
        White closed form plus bumps with ``S_phi ~ hg/fg^2`` under each bump.
        Only for white noise plus servo bumps.
    """
    td = cfg.delay_td
    f = cfg.freq_grid
    scallop = 4 * (math.pi * td) ** 2 * np.sinc(f * td) ** 2 * model.psd(f)
    if mode == "fit_form":
        if not _white_plus_bumps(model):
            raise ValidationError("fit_form needs white noise plus servo bumps only")
        h0, bumps = _split(model)
        vals, weight = self_het_white(h0, td, f) if h0 > 0 else (np.zeros(f.shape), 1.0)
        for b in bumps:
            vals = vals + 4 * np.sin(math.pi * f * td) ** 2 * b.psd(f) / b.fg**2
        return SpectrumCurve(f, vals, Normalization.UNIT_INTEGRAL, float(weight), _meta(model, cfg, "S_i", mode))
    if mode == "weak_noise":
        weight = 1 - 2 * structure_function(model, td)
        return SpectrumCurve(f, scallop, Normalization.UNIT_INTEGRAL, float(weight), _meta(model, cfg, "S_i", mode))
    if mode != "exact":
        raise ValidationError(f"unknown mode {mode!r}")
    k_inf = 2 * structure_function(model, td)
    r_inf = math.exp(-k_inf)

    def g(tau):
        u = _self_het_exponent(model, tau, td, "auto") - k_inf
        return r_inf * (np.expm1(-u) + u)

    start = max(td, 1.0 / max(_max_freq(model), 1.0 / td))
    vals, tmax = _transform(g, cfg, [td], model, start)
    vals = vals + r_inf * scallop
    return SpectrumCurve(f, np.maximum(vals, 0.0), Normalization.UNIT_INTEGRAL, r_inf, _meta(model, cfg, "S_i", mode, tmax))


def self_het_proxy(lineshape: SpectrumCurve, td):
    """Beat spectrum predicted from the lineshape away from the carrier.

    ``S_i(f) ~ 4 sin^2(pi f td) S_E(f)`` with unit-area ``S_E``; valid above
    the crossover frequency.
    """
    f = lineshape.frequencies
    vals = 4 * np.sin(math.pi * f * td) ** 2 * lineshape.values
    meta = dict(lineshape.meta, kind="S_i proxy", delay_td_s=td)
    return SpectrumCurve(f, vals, Normalization.CARRIER_OMITTED, 0.0, meta)


def quasistatic_spectra(h0, fc, td, f):
    """Gaussian ``(S_E, S_i)`` for strongly compressed band-limited noise.

    ``S_E`` has unit area.  Requires ``fc < pi^2 h0 / (8 ln 2)``.
    """
    if h0 <= 0 or fc <= 0 or td <= 0:
        raise ValidationError("h0, fc and td must be > 0")
    limit = math.pi**2 * h0 / (8 * math.log(2))
    if fc >= limit:
        raise RegimeError(f"fc = {fc:g} Hz is not below pi^2 h0 / (8 ln 2) = {limit:g} Hz; use the white-noise forms")
    f = np.asarray(f, dtype=float)
    se = 2 / math.sqrt(16 * math.pi * h0 * fc) * np.exp(-f * f / (4 * h0 * fc))
    a = 16 * math.pi**2 * h0 * td**2 * fc**3
    si = math.sqrt(3 / (16 * math.pi**3 * h0 * td**2 * fc**3)) * np.exp(-3 * f * f / a)
    if f.ndim == 0:
        return float(se), float(si)
    return se, si
