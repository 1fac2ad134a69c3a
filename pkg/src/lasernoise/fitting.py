"""Fits of measured self-heterodyne spectra.

Workflow: :func:`ingest_spectrum` recentres the raw trace, :func:`fit_peak`
fits the narrow central peak, :func:`normalize_record` rescales the record to
unit total power and :func:`fit_noise_model` fits white noise plus Gaussian
servo bumps to the wings.  :func:`error_budget` turns a fit into gate errors.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, signal, special

from .analytic import error_servo_1p, error_white_1p
from .common import Averaging, check_half_integer
from .errors import ConvergenceError, ValidationError
from .heterodyne import self_het_white
from .spectra import Composite, ServoBump, White, model_to_dict, servo_bump_power

__all__ = [
    "SpectrumRecord",
    "PeakFit",
    "BumpFit",
    "NoiseFit",
    "ErrorBudget",
    "ingest_spectrum",
    "read_spectrum_csv",
    "peak_model",
    "peak_integral",
    "fit_peak",
    "normalize_record",
    "wing_model",
    "fit_noise_model",
    "error_budget",
    "synthetic_spectrum",
]

MIN_ROWS = 50
DEFAULT_PEAK_WINDOW = 25e3
_TINY = 1e-300


@dataclass(frozen=True)
class SpectrumRecord:
    """Self-heterodyne trace on a centred frequency axis."""

    frequencies: np.ndarray
    psd: np.ndarray
    rbw: float
    delay_td: float
    center_found: float = 0.0
    normalization_applied: bool = False
    scale: float = 1.0

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.psd, dtype=float)
        if f.ndim != 1 or f.shape != p.shape:
            raise ValidationError("frequencies and psd must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
            raise ValidationError("spectrum contains non-finite values")
        if np.any(np.diff(f) <= 0):
            raise ValidationError("frequencies must be strictly increasing")
        if np.any(p < 0):
            raise ValidationError("psd must be >= 0")
        if not self.delay_td > 0:
            raise ValidationError("field 'td_s' must be > 0")
        if not self.rbw > 0:
            raise ValidationError("field 'rbw_hz' must be > 0")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "psd", p)


@dataclass(frozen=True)
class PeakFit:
    """Central peak ``s_p sigma^(2 alpha - 1) / (f^2 + pi^2 sigma^2)^alpha``."""

    alpha: float
    sigma: float
    s_p: float
    fwhm: float
    power: float
    residual_norm: float

    def __call__(self, f):
        return peak_model(f, self.alpha, self.sigma, self.s_p)


@dataclass(frozen=True)
class BumpFit:
    hg: float
    sigma_g: float
    fg: float
    s_g: float


@dataclass
class NoiseFit:
    """White-plus-bumps fit of the normalized wings.

    ``covariance`` is ordered ``(h0, hg_1, sigma_1, fg_1, hg_2, ...)``.
    """

    h0: float
    bumps: list
    residual_norm: float
    covariance: np.ndarray
    delay_td: float
    n_starts: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def parameters(self):
        out = [self.h0]
        for b in self.bumps:
            out += [b.hg, b.sigma_g, b.fg]
        return np.array(out)

    @property
    def std_errors(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def model(self):
        """The fit as a noise model (``White`` or ``Composite``)."""
        if not self.bumps:
            return White(self.h0)
        return Composite([White(self.h0)] + [ServoBump(b.hg, b.sigma_g, b.fg) for b in self.bumps])

    def to_dict(self):
        d = model_to_dict(self.model())
        if d["kind"] == "white":
            d = {"kind": "composite", "terms": [d]}
        d["fit"] = {
            "residual_norm": self.residual_norm,
            "td_s": self.delay_td,
            "s_g": [b.s_g for b in self.bumps],
            "std_errors": self.std_errors.tolist(),
            "covariance": self.covariance.tolist(),
            "n_starts": self.n_starts,
        }
        return d

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# -- ingest --------------------------------------------------------------------


def _parabolic_center(f, logp, i):
    if i == 0 or i == f.size - 1:
        return f[i]
    x0, x1, x2 = f[i - 1 : i + 2]
    y0, y1, y2 = logp[i - 1 : i + 2]
    # vertex of the parabola through three (possibly non-uniform) points
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / den
    if a >= 0:
        return f[i]
    c = -b / (2 * a)
    return float(np.clip(c, x0, x2))


def ingest_spectrum(raw, meta) -> SpectrumRecord:
    """Recentre a raw analyzer trace on its dominant peak.

    Parameters
    ----------
    raw : array_like, shape (n, 2), or tuple of two arrays
        Columns ``freq_hz, psd`` in analyzer units.
    meta : dict
        ``rbw_hz`` and ``td_s``.

    Raises
    ------
    ValidationError
        Malformed input, fewer than 50 rows, or no dominant peak.
    """
    try:
        if isinstance(raw, tuple):
            f, p = (np.asarray(c, dtype=float) for c in raw)
        else:
            arr = np.asarray(raw, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValidationError("spectrum data must have two columns freq_hz,psd")
            f, p = arr[:, 0], arr[:, 1]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed spectrum data: {exc}") from None
    if f.size < MIN_ROWS:
        raise ValidationError(f"spectrum needs at least {MIN_ROWS} rows, got {f.size}")
    if not isinstance(meta, dict):
        raise ValidationError("meta must be a JSON object with rbw_hz and td_s")
    for key in ("rbw_hz", "td_s"):
        if key not in meta:
            raise ValidationError(f"missing field '{key}'")
    try:
        rbw, td = float(meta["rbw_hz"]), float(meta["td_s"])
    except (TypeError, ValueError):
        raise ValidationError("fields 'rbw_hz' and 'td_s' must be numbers") from None
    order = np.argsort(f)
    f, p = f[order], p[order]
    if np.any(np.diff(f) <= 0):
        raise ValidationError("duplicate frequencies in spectrum data")

    i = int(np.argmax(p))
    if i in (0, f.size - 1):
        raise ValidationError("no dominant peak: maximum sits at the edge of the span")
    # dominant: clearly above the median and falling off on both sides
    floor = np.median(p)
    if not p[i] > 10 * floor or not (p[:i].min() < 0.5 * p[i] and p[i + 1 :].min() < 0.5 * p[i]):
        raise ValidationError("no dominant peak in spectrum")
    logp = np.log(np.maximum(p, _TINY))
    c = _parabolic_center(f, logp, i)
    return SpectrumRecord(f - c, p, rbw, td, center_found=c)


def read_spectrum_csv(data_path, meta_path) -> SpectrumRecord:
    """Load ``freq_hz,psd`` CSV plus JSON meta and ingest it."""
    try:
        data = np.loadtxt(data_path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ValidationError(f"malformed spectrum CSV: {exc}") from None
    with open(meta_path) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"meta JSON does not parse: {exc}") from None
    return ingest_spectrum(data, meta)


# -- central peak --------------------------------------------------------------


def peak_model(f, alpha, sigma, s_p):
    f = np.asarray(f, dtype=float)
    return s_p * sigma ** (2 * alpha - 1) / (f * f + (math.pi * sigma) ** 2) ** alpha


def peak_integral(alpha, sigma, s_p):
    """Total power of :func:`peak_model` over the real line.

    ``s_p sqrt(pi) Gamma(alpha - 1/2) / (Gamma(alpha) pi^(2 alpha - 1))``,
    independent of ``sigma``; equals ``4 s_p / (3 pi^4)`` at ``alpha = 5/2``.
    """
    if alpha <= 0.5:
        raise ValidationError("peak integral diverges for alpha <= 1/2")
    lg = special.gammaln(alpha - 0.5) - special.gammaln(alpha)
    return s_p * math.sqrt(math.pi) * math.exp(lg) / math.pi ** (2 * alpha - 1)


def _peak_fwhm(alpha, sigma):
    return 2 * math.pi * sigma * math.sqrt(2 ** (1 / alpha) - 1)


def fit_peak(record: SpectrumRecord, window=DEFAULT_PEAK_WINDOW, max_nfev=2000) -> PeakFit:
    """Least-squares fit of the central peak on log scale within ``|f| <= window``.

    The white-noise beat continuum under the peak is fitted alongside as a
    background ``B * S_white(f; h_b)``; it is not part of the returned peak.

    Raises
    ------
    ConvergenceError
        Optimizer failure, a fit pinned to a parameter bound, or a peak not
        resolved by the grid (e.g. flat data with an isolated spike).
    """
    f, p = record.frequencies, record.psd
    m = (np.abs(f) <= window) & (p > 0)
    if m.sum() < 8:
        raise ValidationError("fewer than 8 positive points inside the peak window")
    fw, y = f[m], np.log(p[m])
    td = record.delay_td
    pmax = p[m].max()
    above = fw[p[m] >= 0.5 * pmax]
    step = float(np.min(np.diff(fw)))
    width = max(above.max() - above.min(), step)
    a0 = 2.0
    s0 = width / _peak_fwhm(a0, 1.0)
    lsp0 = math.log(pmax) + 2 * a0 * math.log(math.pi * s0) - (2 * a0 - 1) * math.log(s0)
    # background level from the window edges
    edge = np.abs(fw) > 0.5 * window
    hb0 = 10.0
    wb = self_het_white(hb0, td, fw)[0]
    lb0 = math.log(max(np.median(p[m][edge] / wb[edge]) if edge.any() else pmax * 1e-6, _TINY))
    lo = np.array([0.5 + 1e-3, math.log(1e-3 * step), -np.inf, -np.inf, math.log(1e-3)])
    hi = np.array([50.0, math.log(10 * window), np.inf, np.inf, math.log(1e6)])

    def resid(x):
        a, ls, lsp, lb, lh = x
        s = math.exp(ls)
        pk = np.exp(lsp + (2 * a - 1) * ls - a * np.log(fw * fw + (math.pi * s) ** 2))
        bg = math.exp(lb) * self_het_white(math.exp(lh), td, fw)[0]
        return np.log(np.maximum(pk + bg, _TINY)) - y

    x0 = np.clip([a0, math.log(s0), lsp0, lb0, math.log(hb0)], lo + 1e-9, hi - 1e-9)
    res = optimize.least_squares(resid, x0, bounds=(lo, hi), max_nfev=max_nfev, x_scale="jac")
    a, ls, lsp = res.x[:3]
    pinned = np.isclose(res.x[:2], lo[:2], rtol=0, atol=1e-6) | np.isclose(res.x[:2], hi[:2], rtol=0, atol=1e-6)
    if not res.success or np.any(pinned):
        raise ConvergenceError(
            f"peak fit did not converge (status {res.status}, alpha={a:.3g}, sigma={math.exp(ls):.3g} Hz)"
        )
    s, sp = math.exp(ls), math.exp(lsp)
    bg0 = math.exp(res.x[3]) * self_het_white(math.exp(res.x[4]), td, np.array([0.0]))[0][0]
    if not peak_model(0.0, a, s, sp) > bg0:
        raise ConvergenceError("peak fit did not converge: no peak resolved above the background")
    if _peak_fwhm(a, s) < 2 * step:
        raise ConvergenceError("peak fit did not converge: fitted peak is narrower than two grid steps")
    rn = float(np.sqrt(np.mean(res.fun**2)))
    return PeakFit(float(a), s, sp, _peak_fwhm(a, s), float(peak_integral(a, s, sp)), rn)


def normalize_record(record: SpectrumRecord, peak: PeakFit) -> SpectrumRecord:
    """Rescale to unit total power.

    Total = analytic peak power + trapezoid of ``psd - peak(f)`` over the
    span, so the continuum under the peak is counted once.
    """
    f, p = record.frequencies, record.psd
    total = peak.power + np.trapezoid(p - peak(f), f)
    if not total > 0:
        raise ValidationError("total power is not positive")
    return replace(record, psd=p / total, normalization_applied=True, scale=record.scale / total)


# -- wings ---------------------------------------------------------------------


def wing_model(f, h0, bumps, td):
    """White beat spectrum plus ``4 hg / fg^2 sin^2(pi f td)`` weighted Gaussian pairs.

    ``bumps`` is a sequence of ``(hg, sigma_g, fg)``.  Continuous part only.
    """
    f = np.asarray(f, dtype=float)
    out = self_het_white(h0, td, f)[0] if h0 > 0 else np.zeros(f.shape)
    scallop = 4 * np.sin(math.pi * f * td) ** 2
    for hg, sg, fg in bumps:
        g = np.exp(-((f - fg) ** 2) / (2 * sg * sg)) + np.exp(-((f + fg) ** 2) / (2 * sg * sg))
        out = out + scallop * hg / fg**2 * g
    return out


def _white_floor(f, p, td):
    """Robust h0 estimate from the median ratio to the unit white shape."""
    h = max(float(np.median(p * f * f / 2)), 1e-6)
    for _ in range(3):
        shape = self_het_white(h, td, f)[0] / h
        good = shape > 0.2 * np.median(shape)
        h = max(float(np.median(p[good] / shape[good])), 1e-6)
    return h


def _bump_candidates(f, p, h0, td, n_max):
    """Local maxima of the de-scalloped excess over the white floor."""
    pos = f > 0
    fp, pp = f[pos], p[pos]
    excess = pp - self_het_white(h0, td, fp)[0]
    sc = 4 * np.sin(math.pi * fp * td) ** 2
    ok = sc > 1.0
    if ok.sum() < 7:
        return []
    fe = fp[ok]
    # envelope in units of the white level: ~ (hg / h0) G(f - fg) near a bump
    env = excess[ok] / sc[ok] * fe * fe / h0
    env = np.convolve(env, np.ones(5) / 5, mode="same")
    peaks, props = signal.find_peaks(env, prominence=0)
    if peaks.size == 0:
        return []
    order = np.argsort(props["prominences"])[::-1][:n_max]
    widths = signal.peak_widths(env, peaks[order], rel_height=0.5)[0]
    step = np.median(np.diff(fe))
    out = []
    for k, w in zip(peaks[order], widths):
        fg = fe[k]
        sg = max(w * step / math.sqrt(8 * math.log(2)), 2 * step)
        hg = max(env[k], 1e-3) * h0
        out.append((hg, sg, fg))
    return out


def _pack(h0, bumps):
    x = [math.log(h0)]
    for hg, sg, fg in bumps:
        x += [math.log(max(hg, 1e-12)), math.log(sg), fg]
    return np.array(x)


def _unpack(x):
    h0 = math.exp(x[0])
    bumps = [(math.exp(x[1 + 3 * k]), math.exp(x[2 + 3 * k]), x[3 + 3 * k]) for k in range((x.size - 1) // 3)]
    return h0, bumps


def fit_noise_model(
    record: SpectrumRecord,
    n_bumps: int = 0,
    peak_window=DEFAULT_PEAK_WINDOW,
    max_starts: int = 20,
    max_nfev: int = 4000,
) -> NoiseFit:
    """Fit white noise plus ``n_bumps`` servo bumps to the wings on log scale.

    Bump centres are initialised from local maxima of the smoothed excess
    over a white-floor estimate; every combination of the strongest
    candidates is tried and the lowest residual wins.

    Raises
    ------
    ValidationError
        Record not normalized, or too few wing points.
    ConvergenceError
        No start converged.
    """
    if not record.normalization_applied:
        raise ValidationError("record must be normalized before the wing fit (see normalize_record)")
    n_bumps = int(n_bumps)
    if n_bumps < 0:
        raise ValidationError("n_bumps must be >= 0")
    f, p, td = record.frequencies, record.psd, record.delay_td
    m = (np.abs(f) > peak_window) & (p > 0)
    if m.sum() < 3 * n_bumps + 10:
        raise ValidationError("too few wing points for the requested number of bumps")
    fw, pw = f[m], p[m]
    y = np.log(pw)
    fmax = float(np.abs(fw).max())
    step = float(np.median(np.diff(np.abs(fw[fw > 0])))) if np.any(fw > 0) else float(np.median(np.diff(fw)))

    h0_init = _white_floor(np.abs(fw), pw, td)
    cands = _bump_candidates(fw, pw, h0_init, td, max(2 * n_bumps + 2, 4))
    if len(cands) < n_bumps:
        cands = cands + [(h0_init, 5 * step, fmax * (k + 1) / (n_bumps + 1)) for k in range(n_bumps - len(cands))]
    starts = list(itertools.combinations(range(len(cands)), n_bumps))[:max_starts] if n_bumps else [()]

    lo = [math.log(1e-9)] + [math.log(1e-9), math.log(0.5 * step), peak_window] * n_bumps
    hi = [math.log(1e12)] + [math.log(1e15), math.log(fmax), fmax] * n_bumps

    def resid(x):
        h0, bumps = _unpack(x)
        return np.log(np.maximum(wing_model(fw, h0, bumps, td), _TINY)) - y

    best = None
    for combo in starts:
        init = sorted((cands[i] for i in combo), key=lambda b: b[2])
        x0 = np.clip(_pack(h0_init, init), np.add(lo, 1e-9), np.subtract(hi, 1e-9))
        try:
            res = optimize.least_squares(resid, x0, bounds=(lo, hi), max_nfev=max_nfev, x_scale="jac")
        except (ValueError, FloatingPointError):
            continue
        if res.status <= 0 or not np.all(np.isfinite(res.fun)):
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise ConvergenceError("wing fit did not converge from any start")

    h0, bumps = _unpack(best.x)
    order = np.argsort([b[2] for b in bumps])
    bumps = [bumps[i] for i in order]
    # reorder the parameter vector to match the sorted bumps
    perm = [0] + [1 + 3 * int(i) + j for i in order for j in range(3)]
    J = best.jac[:, perm]
    xs = best.x[perm]
    dof = max(y.size - xs.size, 1)
    s2 = 2 * best.cost / dof
    try:
        cov_x = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov_x = np.full((xs.size, xs.size), np.nan)
    # d(param)/d(x): exp for log-parameters, 1 for fg
    d = np.array([math.exp(xs[0])] + [v for k in range(n_bumps) for v in (math.exp(xs[1 + 3 * k]), math.exp(xs[2 + 3 * k]), 1.0)])
    cov = cov_x * np.outer(d, d)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fits = [BumpFit(hg, sg, fg, servo_bump_power(hg, sg, fg).s_g) for hg, sg, fg in bumps]
    for a, b in itertools.combinations(fits, 2):
        if abs(a.fg - b.fg) < 2 * max(a.sigma_g, b.sigma_g):
            warnings.warn(
                f"degenerate bumps: centres {a.fg:.4g} Hz and {b.fg:.4g} Hz lie within 2 sigma_g",
                RuntimeWarning,
                stacklevel=2,
            )
    rn = float(np.sqrt(np.mean(best.fun**2)))
    meta = {"n_points": int(y.size), "peak_window_hz": peak_window, "center_found_hz": record.center_found}
    return NoiseFit(h0, fits, rn, cov, td, n_starts=len(starts), meta=meta)


# -- error budget --------------------------------------------------------------


@dataclass
class ErrorBudget:
    """Gate errors implied by a noise fit."""

    omega0: float
    N: float
    averaging: Averaging
    white_error: float
    bump_errors: list
    total_error: float
    threshold_s_g: float
    flagged: list
    safe_rabi_windows_hz: list

    def to_dict(self):
        return {
            "omega0_rad_per_s": self.omega0,
            "N": self.N,
            "averaging": self.averaging.value,
            "white_error": self.white_error,
            "bump_errors": self.bump_errors,
            "total_error": self.total_error,
            "threshold_s_g": self.threshold_s_g,
            "flagged_bumps": self.flagged,
            "safe_rabi_windows_hz": self.safe_rabi_windows_hz,
        }

    def report(self):
        lines = [
            f"Rabi frequency: {self.omega0 / (2 * math.pi):.6g} Hz, N = {self.N:g}, {self.averaging.value}",
            f"white-noise error: {self.white_error:.4g}",
        ]
        for k, e in enumerate(self.bump_errors):
            flag = "  exceeds s_g threshold" if k in self.flagged else ""
            lines.append(f"bump {k + 1} error: {e:.4g}{flag}")
        lines.append(f"total: {self.total_error:.4g}")
        lines.append(f"s_g threshold (worst case below white): {self.threshold_s_g:.3g}")
        if self.safe_rabi_windows_hz:
            w = ", ".join(f"[{a:.4g}, {b:.4g}]" for a, b in self.safe_rabi_windows_hz)
            lines.append(f"Rabi windows (Hz) where bumps stay below white noise: {w}")
        return "\n".join(lines)


def _bump_total(fit, N, omega0, averaging):
    return sum(error_servo_1p(b.s_g, b.fg, N, omega0, averaging) for b in fit.bumps)


def error_budget(fit: NoiseFit, omega0, N, averaging=Averaging.INITIAL_X, scan_points=400) -> ErrorBudget:
    """White and per-bump gate errors with the worst-case bump criterion.

    A bump is flagged when ``s_g >= 4 pi h0 / (N omega0)``, i.e. when its
    worst-case (resonant) error would exceed the white-noise error.  Safe
    windows are the Rabi frequencies on a log scan where the summed bump
    error stays below the white error.
    """
    N = check_half_integer(N)
    averaging = Averaging.parse(averaging)
    if not omega0 > 0:
        raise ValidationError("omega0 must be > 0")
    white = error_white_1p(fit.h0, N, omega0, averaging)
    bumps = [error_servo_1p(b.s_g, b.fg, N, omega0, averaging) for b in fit.bumps]
    thr = 4 * math.pi * fit.h0 / (N * omega0)
    flagged = [k for k, b in enumerate(fit.bumps) if b.s_g >= thr]
    windows = []
    if fit.bumps:
        fgs = [b.fg for b in fit.bumps]
        scan = np.geomspace(0.1 * min(fgs), 10 * max(fgs), scan_points)
        ok = np.array(
            [_bump_total(fit, N, 2 * math.pi * r, averaging) < error_white_1p(fit.h0, N, 2 * math.pi * r, averaging) for r in scan]
        )
        idx = np.flatnonzero(ok)
        if idx.size:
            for run in np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1):
                windows.append((float(scan[run[0]]), float(scan[run[-1]])))
    return ErrorBudget(omega0, N, averaging, white, bumps, white + sum(bumps), thr, flagged, windows)


# -- synthetic data ------------------------------------------------------------


def synthetic_spectrum(
    h0,
    bumps=(),
    td=54.45e-6,
    frequencies=None,
    peak=(2.5, 240.0),
    noise_rel=0.01,
    rng=None,
    center=0.0,
    scale=1.0,
    rbw=100.0,
):
    """Raw-looking beat spectrum for round-trip tests.

    The continuous part is :func:`wing_model`; the carrier is a peak of
    shape ``peak = (alpha, sigma)`` whose power makes the total exactly one
    (wings taken over the whole real line).  Each
    point is multiplied by ``1 + noise_rel * N(0, 1)`` (clipped positive).

    Returns
    -------
    ndarray, shape (n, 2)
        Columns ``freq_hz, psd`` with the carrier at ``center``.
    """
    if frequencies is None:
        frequencies = np.arange(-400e3, 400e3 + 1, 200.0)
    f = np.asarray(frequencies, dtype=float)
    rng = np.random.default_rng(rng)
    weight = self_het_white(h0, td, np.array([1.0]))[1] if h0 > 0 else 1.0
    for hg, sg, fg in bumps:
        # power of one scalloped bump pair, removed from the carrier
        c = math.cos(2 * math.pi * fg * td) * math.exp(-2 * (math.pi * sg * td) ** 2)
        weight -= 4 * hg / fg**2 * math.sqrt(2 * math.pi) * sg * (1 - c)
    if weight <= 0:
        raise ValidationError("bumps carry more than the total power")
    alpha, sigma = peak
    sp = weight / peak_integral(alpha, sigma, 1.0)
    p = wing_model(f, h0, bumps, td) + peak_model(f, alpha, sigma, sp)
    if noise_rel:
        p = p * np.clip(1 + noise_rel * rng.standard_normal(f.size), 1e-3, None)
    return np.column_stack([f + center, scale * p])
