"""Closed-form and quadrature gate errors for noisy Rabi rotations.

Conventions: ``omega0`` is the angular Rabi frequency (rad/s), spectra are the
two-sided frequency-noise PSD ``S_dnu`` (Hz^2/Hz), gates of period
``t = 2 pi N / omega0`` are labelled by the half-integer ``N``.  Errors are
``1 - Tr[<rho> rho_ideal]`` to leading order in the noise.

Throughout, ``x = 2 pi f / omega0 - 1`` measures the distance from the Rabi
resonance; writing the kernels in ``x`` removes the apparent singularity at
``2 pi f = omega0`` analytically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .common import Averaging, check_half_integer, is_integer_rotation
from .errors import ValidationError
from .spectra import BandLimitedWhite, ServoBump, iter_terms
from .specfun import sici

__all__ = [
    "error_white_1p",
    "error_white_2p",
    "error_servo_1p",
    "error_servo_2p",
    "error_bandlimited_1p",
    "error_quasistatic",
    "error_intensity",
    "error_general",
    "rho_evolution_weak_noise",
    "fidelity_operator",
    "quasistatic_bloch",
    "quasistatic_brute_force",
    "gate_kernel",
    "BandLimitedError",
]

TWO_PI = 2 * math.pi


def _check_rate(omega):
    if not (np.isfinite(omega) and omega > 0):
        raise ValidationError(f"Rabi frequency must be > 0 rad/s, got {omega!r}")


def _weak_noise_warn(h, omega):
    if math.pi * h / omega > 0.01:
        warnings.warn(
            f"pi*h0/omega0 = {math.pi * h / omega:.3g} > 0.01: weak-noise expansion is doubtful",
            RuntimeWarning,
            stacklevel=3,
        )


# -- white noise -------------------------------------------------------------


def error_white_1p(h0, N, omega0, averaging=Averaging.INITIAL_X):
    """White frequency noise: ``pi^3 h0 N / omega0`` (x4/3 when state averaged)."""
    N = check_half_integer(N)
    _check_rate(omega0)
    if h0 < 0:
        raise ValidationError("h0 must be >= 0")
    _weak_noise_warn(h0, omega0)
    e = math.pi**3 * h0 * N / omega0
    return e * 4 / 3 if Averaging.parse(averaging) is Averaging.STATE_AVERAGED else e


def error_white_2p(h1, h2, N, omega_tilde0, averaging=Averaging.INITIAL_X):
    """Two-photon white noise: independent lasers add, ``h0 -> h1 + h2``."""
    return error_white_1p(h1 + h2, N, omega_tilde0, averaging)


# -- servo bumps -------------------------------------------------------------


def _bracket(N, x):
    """``1 - (-1)^{2N} cos(2 pi N (1 + x))`` divided by ``x^2``.

    For half-integer ``N`` this equals ``2 sin^2(pi N x) / x^2``; returned in
    the sinc form so that ``x = 0`` is exact.
    """
    return 2 * (math.pi * N) ** 2 * np.sinc(N * x) ** 2


def error_servo_1p(s_g, fg, N, omega0, averaging=Averaging.INITIAL_X):
    """Narrow servo bump of power ``s_g`` centred at ``fg`` (Hz).

    Uses the delta-peak substitution ``S -> (s_g fg^2 / 2) delta(f - fg)``.
    At ``2 pi fg = omega0`` the result is ``s_g (pi N)^2 / 4`` for
    ``INITIAL_X`` and ``s_g (pi N)^2 / 3`` state averaged; the kernel is
    evaluated in a form that is smooth through resonance.
    """
    N = check_half_integer(N)
    _check_rate(omega0)
    if fg <= 0 or s_g < 0:
        raise ValidationError("need fg > 0 and s_g >= 0")
    x = TWO_PI * fg / omega0 - 1.0
    # (omega0^2 - w^2)^2 = omega0^4 x^2 (2 + x)^2
    ratio = _bracket(N, x) / (2 + x) ** 2
    if Averaging.parse(averaging) is Averaging.INITIAL_X:
        e = 2 * s_g * (math.pi * fg / omega0) ** 2 * ratio
    else:
        w2 = (1 + x) ** 2
        e = 4 * math.pi**2 * s_g * (fg / omega0) ** 2 * (1 + w2) * ratio / 3
    return float(e)


def error_servo_2p(sg1, fg1, sg2, fg2, N, omega_tilde0, averaging=Averaging.INITIAL_X):
    """Sum of the two lasers' bump errors at the two-photon Rabi frequency."""
    return error_servo_1p(sg1, fg1, N, omega_tilde0, averaging) + error_servo_1p(
        sg2, fg2, N, omega_tilde0, averaging
    )


# -- band-limited white noise ------------------------------------------------


@dataclass(frozen=True)
class BandLimitedError:
    """Band-limited error with a validity flag.

    ``valid`` is False for full rotations with ``fc < 1.43 h0`` and
    ``fc < omega0 / 2 pi``, where the leading-order expansion misses the
    dominant quasistatic contribution.
    """

    value: float
    valid: bool

    def __float__(self):
        return self.value


def _bl_first(N, y):
    """``y (1 - (-1)^{2N} cos(2 pi N y)) / (1 - y^2)``, smooth through ``y = 1``."""
    d = y - 1
    return -2 * y * (math.pi * N) ** 2 * d * np.sinc(N * d) ** 2 / (1 + y)


def _bl_braces_x(N, y):
    a, b = TWO_PI * N * (1 - y), TWO_PI * N * (1 + y)
    si_a, ci_a = sici(a)
    si_b, ci_b = sici(b)
    first = 2 * _bl_first(N, y)
    # real part of 2 artanh(y) for y > 1, real part of Ci for negative argument
    artanh2 = math.log(abs((1 + y) / (1 - y)))
    return first + artanh2 + ci_a - ci_b - TWO_PI * N * si_a + TWO_PI * N * si_b


def _bl_braces_avg(N, y):
    si_a, _ = sici(TWO_PI * N * (1 - y))
    si_b, _ = sici(TWO_PI * N * (1 + y))
    first = _bl_first(N, y)
    return first - math.pi * N * si_a + math.pi * N * si_b


def _bl_braces_x_at_one(N):
    si4, ci4 = sici(4 * math.pi * N)
    return 0.5772156649015329 + math.log(4 * math.pi * N) - ci4 + TWO_PI * N * si4


def error_bandlimited_1p(h0, fc, N, omega0, averaging=Averaging.INITIAL_X):
    """Band-limited white noise of level ``h0`` up to ``fc`` (Si/Ci closed form).

    With ``y = 2 pi fc / omega0``.  For ``y > 1`` the real branch is used:
    ``2 artanh(y) -> ln|(1+y)/(1-y)|`` and ``Ci(-z) -> Ci(z)`` (the imaginary
    parts cancel).  Within ``|y - 1| < 1e-8`` the analytic limit is used.
    """
    N = check_half_integer(N)
    _check_rate(omega0)
    if h0 < 0 or fc <= 0:
        raise ValidationError("need h0 >= 0 and fc > 0")
    avg = Averaging.parse(averaging) is Averaging.STATE_AVERAGED
    y = TWO_PI * fc / omega0
    if avg:
        val = 4 * math.pi * h0 / (3 * omega0) * _bl_braces_avg(N, y)
    elif abs(y - 1) < 1e-8:
        val = math.pi * h0 / (2 * omega0) * _bl_braces_x_at_one(N)
    else:
        val = math.pi * h0 / (2 * omega0) * _bl_braces_x(N, y)
    valid = not (is_integer_rotation(N) and fc < 1.43 * h0 and fc < omega0 / TWO_PI)
    return BandLimitedError(float(val), valid)


def error_quasistatic(h0, fc, N, omega, averaging=Averaging.INITIAL_X, h2=0.0, fc2=None):
    """Quasistatic (``fc << omega / 2 pi``) band-limited noise.

    Pass ``h2, fc2`` for a two-photon gate; then ``h0 fc`` is replaced by
    ``h0 fc + h2 fc2`` and ``omega`` is the two-photon Rabi frequency.
    """
    N = check_half_integer(N)
    _check_rate(omega)
    p = h0 * fc + (h2 * fc2 if fc2 is not None else 0.0)
    fmax = max(fc, fc2 or 0.0)
    if fmax > omega / (20 * math.pi):
        warnings.warn("fc exceeds omega/(20 pi): quasistatic limit is doubtful", RuntimeWarning, stacklevel=2)
    avg = Averaging.parse(averaging) is Averaging.STATE_AVERAGED
    if is_integer_rotation(N):
        c = 32 if avg else 48
        return c * math.pi**6 * p**2 * N**2 / omega**4
    c = 16 / 3 if avg else 8
    return c * math.pi**2 * p / omega**2


def quasistatic_bloch(dnu, omega0, t):
    """Exact Bloch vector for a static frequency offset ``dnu`` (Hz).

    Starts on +x in the frame where the drive points along z.  Returns
    ``(x, y, z)`` coefficients of ``sigma_x, sigma_y, sigma_z`` in
    ``rho = 1/2 + x sigma_x + y sigma_y + z sigma_z``.
    """
    d = TWO_PI * np.asarray(dnu, dtype=float)
    w2 = omega0**2 + d**2
    w = np.sqrt(w2)
    c = np.cos(w * t)
    x = d**2 / (2 * w2) + omega0**2 * c / (2 * w2)
    y = omega0 * np.sin(w * t) / (2 * w)
    z = d * omega0 * (1 - c) / (2 * w2)
    return x, y, z


def quasistatic_brute_force(h0, fc, N, omega0, n_draws=100_000, rng=None):
    """Gaussian average of the static solution; returns ``(mean, std_error)``.

    ``dnu ~ Normal(0, 2 h0 fc)`` and ``E = 1 - Tr[rho rho_ideal]`` with
    ``rho_ideal = 1/2 + (-1)^{2N} sigma_x / 2``.  The per-draw error is
    formed as ``(1 - cos(w t) ...)`` combinations that avoid cancellation.
    """
    N = check_half_integer(N)
    rng = np.random.default_rng(rng)
    dnu = rng.normal(0.0, math.sqrt(2 * h0 * fc), n_draws)
    d = TWO_PI * dnu
    w2 = omega0**2 + d**2
    wt = np.sqrt(w2) * TWO_PI * N / omega0
    if is_integer_rotation(N):
        # 1/2 - x = Omega^2 (1 - cos) / (2 w^2)
        err = omega0**2 * 2 * np.sin(wt / 2) ** 2 / (2 * w2)
    else:
        # 1/2 + x = (w^2 + d^2 + Omega^2 cos) / (2 w^2)
        err = (2 * d**2 + omega0**2 * 2 * np.cos(wt / 2) ** 2) / (2 * w2)
    return float(err.mean()), float(err.std(ddof=1) / math.sqrt(n_draws))


# -- intensity noise ---------------------------------------------------------


def error_intensity(sigma2_list, N):
    """Relative-intensity noise: ``(pi N)^2 sum(sigma^2) / 4``."""
    N = check_half_integer(N)
    s = np.atleast_1d(np.asarray(sigma2_list, dtype=float))
    if np.any(s < 0):
        raise ValidationError("variances must be >= 0")
    return float((math.pi * N) ** 2 * s.sum() / 4)


# -- general spectra ---------------------------------------------------------


def gate_kernel(f, omega0, N, averaging=Averaging.INITIAL_X):
    """Kernel ``K(f)`` with ``E = int_0^inf S(f) K(f) df`` at ``t = 2 pi N / omega0``."""
    x = TWO_PI * np.asarray(f, dtype=float) / omega0 - 1.0
    core = _bracket(N, x) / (2 + x) ** 2 / omega0**2
    if Averaging.parse(averaging) is Averaging.INITIAL_X:
        return 4 * math.pi**2 * core
    return 8 * math.pi**2 / 3 * (1 + (1 + x) ** 2) * core


def _as_psd(psd):
    if hasattr(psd, "psd"):
        return psd.psd
    if not callable(psd):
        raise ValidationError("psd must be a noise model or a callable S(f)")

    def f(v):
        v = np.asarray(v, dtype=float)
        out = np.vectorize(lambda q: float(psd(q)), otypes=[float])(v) if v.ndim else float(psd(float(v)))
        return out

    return f


def _features(psd):
    pts = []
    if hasattr(psd, "psd"):
        for t in iter_terms(psd):
            if isinstance(t, BandLimitedWhite):
                pts.append(t.fc)
            elif isinstance(t, ServoBump):
                pts += [t.fg - 4 * t.sigma_g, t.fg - t.sigma_g, t.fg, t.fg + t.sigma_g, t.fg + 4 * t.sigma_g]
    return sorted(p for p in pts if p > 0)


def _upper(psd, f0):
    feats = _features(psd)
    return max([100 * f0] + [1.05 * p for p in feats])


def _segments(a, b, pts, period):
    """Break ``[a, b]`` at ``pts`` and every ~8 oscillation periods."""
    edges = {a, b}
    edges.update(p for p in pts if a < p < b)
    if period > 0:
        step = 8 * period
        k = math.ceil(a / step)
        while k * step < b:
            edges.add(k * step)
            k += 1
    e = sorted(edges)
    return list(zip(e[:-1], e[1:]))


def _quad(fun, segs, epsabs, epsrel):
    total = 0.0
    for a, b in segs:
        val, err = integrate.quad(fun, a, b, limit=400, epsabs=epsabs, epsrel=epsrel)
        total += val
    return total


def _gate_error(S, omega0, N, averaging, pts, epsrel):
    f0 = omega0 / TWO_PI
    t = TWO_PI * N / omega0
    upper = max(_upper_pts(pts, f0), 100 * f0)
    K = lambda f: float(S(f) * gate_kernel(f, omega0, N, averaging))  # noqa: E731
    segs = _segments(0.0, upper, pts + [f0], 1.0 / t)
    val = _quad(K, segs, 0.0, epsrel)
    level = float(S(upper))
    if level:
        sign = -1.0 if round(2 * N) % 2 else 1.0
        if Averaging.parse(averaging) is Averaging.INITIAL_X:
            val += level * 4 * math.pi**2 * omega0**2 / (TWO_PI**4 * 3 * upper**3)
        else:
            a = TWO_PI * t
            si_u, _ = sici(a * upper)
            osc = math.cos(a * upper) / upper + a * (si_u - math.pi / 2)
            val += level * (8 * math.pi**2 / 3) * (
                (1 / upper - sign * osc) / (4 * math.pi**2) + 3 * omega0**2 / (3 * 16 * math.pi**4 * upper**3)
            )
    return val


def _upper_pts(pts, f0):
    return max([100 * f0] + [1.05 * p for p in pts])


def _n1(x, tau):
    small = np.abs(x) < min(1e-3, 1e-2 / max(tau, 1.0))
    s, c = math.sin(tau), math.cos(tau)
    direct = 2 * c - 2 * np.cos(tau * (1 + x)) - x * (2 + x) * tau * s
    series = (
        x**2 * tau * (tau * c - s)
        - x**3 * tau**3 * s / 3
        - x**4 * tau**4 * c / 12
        + x**5 * tau**5 * s / 60
        + x**6 * tau**6 * c / 360
    )
    return np.where(small, series, direct)


def _n2(x, tau):
    small = np.abs(x) < min(1e-3, 1e-2 / max(tau, 1.0))
    s, c = math.sin(tau), math.cos(tau)
    direct = 2 * s - 2 * (1 + x) * np.sin(tau * (1 + x)) - x * (2 + x) * tau * c
    series = (
        x * (-4 * tau * c - 2 * s)
        + x**2 * tau * (tau * s - 3 * c)
        + x**3 * tau**2 * (tau * c / 3 + s)
        + x**4 * tau**3 * (-tau * s + 4 * c) / 12
        - x**5 * tau**4 * (tau * c + 5 * s) / 60
        + x**6 * tau**5 * (tau * s - 6 * c) / 360
    )
    return np.where(small, series, direct)


def _appendix_integrals(S, omega0, t, pts, epsrel):
    """``(I1, I2)``; ``I2`` is a principal value about ``2 pi f = omega0``.

    The p.v. is taken by folding the window ``|x| <= 1/2`` onto itself:
    ``G(x) + G(-x)`` is regular at ``x = 0`` because the ``1/x`` parts cancel.
    """
    f0 = omega0 / TWO_PI
    tau = omega0 * t
    w = 0.5

    def G(x, num):
        x = np.asarray(x, dtype=float)
        f = f0 * (1 + x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return S(f) * num(x, tau) / (omega0**4 * x**2 * (2 + x) ** 2)

    def g1(f):
        x = f / f0 - 1
        if abs(x) < 1e-300:
            return float(S(f)) * tau * (tau * math.cos(tau) - math.sin(tau)) / (4 * omega0**4)
        return float(G(x, _n1))

    def g2(f):
        return float(G(f / f0 - 1, _n2))

    def fold2(x):
        if x < 1e-12:
            x = 1e-12
        return float(G(x, _n2) + G(-x, _n2))

    upper = _upper_pts(pts, f0)
    period = 1.0 / t if t > 0 else 0.0
    segs = _segments(0.0, upper, pts + [f0], period)
    i1 = _quad(g1, segs, 0.0, epsrel)

    lo, hi = f0 * (1 - w), f0 * (1 + w)
    outer = _segments(0.0, lo, pts, period) + _segments(hi, upper, pts, period)
    xpts = sorted({abs(p / f0 - 1) for p in pts if abs(p / f0 - 1) < w} - {0.0})
    inner = _segments(0.0, w, xpts, period / f0)
    i2 = _quad(g2, outer, 0.0, epsrel) + f0 * _quad(fold2, inner, 0.0, epsrel)

    level = float(S(upper))
    if level:
        s, c = math.sin(tau), math.cos(tau)
        inv2 = 1 / (4 * math.pi**2 * upper)
        inv4 = 1 / (16 * math.pi**4 * 3 * upper**3)
        i1 += level * (-(t / omega0) * s * inv2 + (2 * c - omega0 * t * s) * inv4)
        i2 += level * (-(t / omega0) * c * inv2 + (2 * s - omega0 * t * c) * inv4)
    return i1, i2


def _toggling_error(S, omega0, t, averaging, pts, epsrel):
    """Second-order toggling-frame error; smooth integrand, any ``t``.

    With ``beta = 2 pi dnu`` and the sine/cosine filters
    ``G_s(w) = int_0^t sin(omega0 u) e^{i w u} du`` (``G_c`` likewise),
    ``E_x = pi^2 int S |G_s|^2 df`` and
    ``E_avg = (2 pi^2 / 3) int S (|G_s|^2 + |G_c|^2) df`` over all ``f``.
    """
    f0 = omega0 / TWO_PI

    def phase_int(d):
        # int_0^t e^{i d u} du = t e^{i d t/2} sinc(d t / 2)
        return t * np.exp(0.5j * d * t) * np.sinc(d * t / (2 * math.pi))

    def filt(f):
        w = TWO_PI * f
        gp = phase_int(w + omega0)
        gm = phase_int(w - omega0)
        gs = (gp - gm) / 2j
        gc = (gp + gm) / 2
        return np.abs(gs) ** 2, np.abs(gc) ** 2

    avg = Averaging.parse(averaging) is Averaging.STATE_AVERAGED

    def integrand(f):
        s_pos, c_pos = filt(f)
        s_neg, c_neg = filt(-f)
        val = s_pos + s_neg
        if avg:
            val = val + c_pos + c_neg
        return float(S(f) * val)

    upper = _upper_pts(pts, f0)
    segs = _segments(0.0, upper, pts + [f0], 1.0 / t)
    val = _quad(integrand, segs, 0.0, epsrel)
    level = float(S(upper))
    if level:
        # large |w|: |G_s(w)|^2 + |G_s(-w)|^2 ~ 2 sin^2(omega0 t) / w^2 and
        # |G_c|^2 pair ~ 2 (1 + cos^2(omega0 t) - 2 cos(omega0 t) cos(w t)) / w^2
        c = math.cos(omega0 * t)
        tail = 2 * (1 - c * c) / upper
        if avg:
            a = TWO_PI * t
            si_u, _ = sici(a * upper)
            osc = math.cos(a * upper) / upper + a * (si_u - math.pi / 2)
            tail += 2 * (1 + c * c) / upper - 4 * c * osc
        val += level * tail / TWO_PI**2
    pref = 2 * math.pi**2 / 3 if avg else math.pi**2
    return pref * val


def _is_gate_time(omega0, t_g):
    twoN = omega0 * t_g / math.pi
    r = round(twoN)
    return r >= 1 and abs(twoN - r) < 1e-9 * max(1.0, twoN), r / 2


def error_general(psd, omega0, t_g, averaging=Averaging.INITIAL_X, points=(), epsrel=1e-10):
    """Leading-order gate error for an arbitrary spectrum and gate duration.

    Parameters
    ----------
    psd : noise model or callable
        Two-sided ``S_dnu(f)`` in Hz^2/Hz.  It must be smooth near
        ``f = omega0 / 2 pi`` for the principal value to exist.
    omega0 : float
        Angular Rabi frequency (rad/s).
    t_g : float
        Gate duration (s).  Gate times ``2 pi N / omega0`` use the regular
        kernel :func:`gate_kernel`; other times use the principal-value pair
        of :func:`rho_evolution_weak_noise` (``INITIAL_X``) or the
        toggling-frame filter form (``STATE_AVERAGED``).
    points : sequence of float
        Extra break points (Hz) for user-supplied spectra with sharp features.

    Returns
    -------
    float
    """
    _check_rate(omega0)
    if not (t_g > 0):
        raise ValidationError("t_g must be > 0")
    avg = Averaging.parse(averaging)
    S = _as_psd(psd)
    pts = sorted(set(_features(psd)) | set(float(p) for p in points))
    gate, N = _is_gate_time(omega0, t_g)
    if gate:
        return _gate_error(S, omega0, N, avg, pts, epsrel)
    if avg is Averaging.STATE_AVERAGED:
        return _toggling_error(S, omega0, t_g, avg, pts, epsrel)
    _smoothness_check(psd, omega0)
    x, y = rho_evolution_weak_noise(psd, omega0, t_g, points=points, epsrel=epsrel)
    tau = omega0 * t_g
    return 0.5 - x * math.cos(tau) - y * math.sin(tau)


def _smoothness_check(psd, omega0):
    f0 = omega0 / TWO_PI
    if not hasattr(psd, "psd"):
        warnings.warn(
            "smoothness of a user-supplied spectrum near omega0/2pi cannot be verified",
            RuntimeWarning,
            stacklevel=3,
        )
        return
    for t in iter_terms(psd):
        if isinstance(t, BandLimitedWhite) and abs(t.fc - f0) < 1e-3 * f0:
            warnings.warn("spectrum has a cutoff at omega0/2pi; principal value is ill-defined", RuntimeWarning, stacklevel=3)


def rho_evolution_weak_noise(psd, omega0, t, points=(), epsrel=1e-10):
    """Averaged Bloch components ``(x, y)`` of ``<rho(t)>`` to second order.

    The qubit starts on +x in the frame where the drive points along z, so
    the noiseless result is ``(cos(omega0 t)/2, sin(omega0 t)/2)``.
    """
    _check_rate(omega0)
    S = _as_psd(psd)
    pts = sorted(set(_features(psd)) | set(float(p) for p in points))
    i1, i2 = _appendix_integrals(S, omega0, t, pts, epsrel)
    tau = omega0 * t
    k = 2 * math.pi**2 * omega0**2
    return 0.5 * math.cos(tau) - k * i1, 0.5 * math.sin(tau) - k * i2


# -- operator fidelities -----------------------------------------------------


def fidelity_operator(U0, U, measure="standard"):
    """Fidelity of ``U`` against the ideal ``U0``.

    ``standard``: ``(n + |Tr U0^dag U|^2) / (n (n + 1))``, the state-averaged
    fidelity.  ``trace_overlap``: ``|Tr U0^dag U|^2 / n^2``.
    """
    U0 = np.asarray(U0, dtype=complex)
    U = np.asarray(U, dtype=complex)
    if U0.shape != U.shape or U0.ndim != 2 or U0.shape[0] != U0.shape[1]:
        raise ValidationError("U0 and U must be square matrices of equal shape")
    n = U0.shape[0]
    eye = np.eye(n)
    for name, M in (("U0", U0), ("U", U)):
        if np.max(np.abs(M.conj().T @ M - eye)) > 1e-10:
            raise ValidationError(f"{name} is not unitary to 1e-10")
    tr2 = abs(np.trace(U0.conj().T @ U)) ** 2
    if measure == "standard":
        return float((n + tr2) / (n * (n + 1)))
    if measure == "trace_overlap":
        return float(tr2 / n**2)
    raise ValidationError(f"unknown measure {measure!r}")
