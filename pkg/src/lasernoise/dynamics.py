"""Monte Carlo simulation of Rabi gates driven by noisy lasers.

Drives
------
* :class:`OnePhoton` - resonant two-level drive, lab-frame amplitudes
  ``i dc_g/dt = (Omega/2) e^{-i phi} c_e``, ``i dc_e/dt = (Omega/2) e^{i phi} c_g``.
* :class:`TwoPhotonLadder` - g-e-r ladder with independent lasers.  Amplitudes
  are propagated in the frame ``a = c_e e^{i Delta_1 t}``,
  ``b = c_r e^{i (Delta_1 + Delta_2) t}`` where the Hamiltonian is static up
  to the laser phases (populations are unchanged by this frame).
* :class:`Lambda` - Raman transition through a detuned level ``p`` driven by
  two sidebands of one laser, whose phase noise is then correlated.

Errors are defined in the fluctuating frame in which every laser coupling is
real.  Qubit states there are related to lab amplitudes by diagonal phases
built from the instantaneous laser phases; the initial state is mapped in at
``t = 0`` and the final state mapped out at ``t_g``.  The ideal target is the
noiseless evolution of the same initial state, so for three-level drives the
small, deterministic leakage into the intermediate level is not counted as
noise error.

Integrators
-----------
``"magnus4"`` (default) is the fourth-order commutator-free Magnus scheme

    U(t + h, t) = exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)),

with ``H1, H2`` at the Gauss points and ``a1, a2 = (3 -+ 2 sqrt 3) / 12``.
Exponentials are exact (closed form for two levels, ``eigh`` for three), so
the step only has to resolve the noise, not the GHz detunings, and the norm
is conserved to rounding.  ``"dop853"`` integrates the lab-frame equations
with :func:`scipy.integrate.solve_ivp` one trial at a time and serves as an
independent check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .common import ErrorEstimate, Method, check_half_integer
from .errors import IntegrationError, ValidationError
from .spectra import ServoBump, iter_terms, model_from_dict, model_to_dict
from .synth import FourierSeries, NoiseTrace, SynthesisConfig, TraceKind, fourier_series

__all__ = [
    "OnePhoton",
    "TwoPhotonLadder",
    "Lambda",
    "InitialState",
    "GateSpec",
    "IntegratorConfig",
    "Channel",
    "Propagation",
    "propagate_one_photon",
    "propagate_two_photon",
    "propagate_lambda",
    "monte_carlo_error",
    "monte_carlo_error_averaged",
    "drive_from_dict",
    "drive_to_dict",
]

_SQ3 = math.sqrt(3.0)
_A1 = (3 - 2 * _SQ3) / 12
_A2 = (3 + 2 * _SQ3) / 12
_C1 = 0.5 - _SQ3 / 6
_C2 = 0.5 + _SQ3 / 6

# Fourier modes with amplitude below this fraction of the largest are skipped;
# the random phases are still drawn, so streams do not depend on it.
PRUNE_REL = 1e-6


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class OnePhoton:
    omega0: float

    def __post_init__(self):
        if not (np.isfinite(self.omega0) and self.omega0 > 0):
            raise ValidationError(f"omega0 must be > 0 rad/s, got {self.omega0!r}")

    @property
    def rabi(self):
        return self.omega0

    @property
    def levels(self):
        return 2


def resonant_delta(omega1, omega2, delta1):
    """Two-photon detuning that cancels the differential Stark shift."""
    return delta1 * (1 - math.sqrt(1 + (omega1**2 - omega2**2) / (2 * delta1**2)))


@dataclass(frozen=True)
class TwoPhotonLadder:
    """Ladder drive; ``delta = delta1 - delta2`` and ``Delta = delta1 + delta2``.

    The two-photon detuning must satisfy the Stark-compensating resonance and
    ``|delta| >= 10 omega_tilde`` so that the intermediate level stays empty.
    """

    omega1: float
    omega2: float
    delta1: float
    delta2: float

    def __post_init__(self):
        for name in ("omega1", "omega2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be > 0 rad/s, got {v!r}")
        if self.delta_small == 0:
            raise ValidationError("delta1 - delta2 must be non-zero")
        target = resonant_delta(self.omega1, self.omega2, self.delta1)
        if abs(self.delta_sum - target) > 1e-3 * self.omega_tilde:
            raise ValidationError(
                f"delta1 + delta2 = {self.delta_sum:.6g} rad/s is off the resonance value {target:.6g} rad/s"
            )
        if abs(self.delta_small) < 10 * self.omega_tilde:
            raise ValidationError("|delta1 - delta2| must be >= 10 x the two-photon Rabi frequency")

    @classmethod
    def resonant(cls, omega1, omega2, delta1):
        return cls(omega1, omega2, delta1, resonant_delta(omega1, omega2, delta1) - delta1)

    @property
    def delta_small(self):
        return self.delta1 - self.delta2

    @property
    def delta_sum(self):
        return self.delta1 + self.delta2

    @property
    def omega_tilde(self):
        return self.omega1 * self.omega2 / abs(self.delta1 - self.delta2)

    @property
    def rabi(self):
        return self.omega_tilde

    @property
    def levels(self):
        return 3


@dataclass(frozen=True)
class Lambda:
    """Raman drive ``g -> p -> e`` with complex sideband Rabi frequencies.

    The effective qubit Rabi frequency is ``|omega1 omega2^*| / (2 delta)``;
    the phases of ``omega1, omega2`` set the rotation axis.
    """

    omega1: complex
    omega2: complex
    delta: float
    correlated_phase: bool = True

    def __post_init__(self):
        if abs(self.omega1) == 0 or abs(self.omega2) == 0:
            raise ValidationError("sideband Rabi frequencies must be non-zero")
        if not (np.isfinite(self.delta) and self.delta != 0):
            raise ValidationError("delta must be finite and non-zero")
        if abs(self.delta) < 10 * max(abs(self.omega1), abs(self.omega2)):
            raise ValidationError("|delta| must be >= 10 x the sideband Rabi frequencies")

    @property
    def omega_r(self):
        return abs(self.omega1 * np.conj(self.omega2)) / (2 * abs(self.delta))

    @property
    def rabi(self):
        return self.omega_r

    @property
    def levels(self):
        return 3


class InitialState(str, Enum):
    """Fluctuating-frame qubit states.

    The drive axis is the ``z`` axis of this Bloch convention, so
    ``X_PLUS = |g>``, ``Z_PLUS = (|g> + |e>)/sqrt 2`` and
    ``Y_PLUS = (|g> + i|e>)/sqrt 2`` (``|e>`` means ``|r>`` on a ladder).
    """

    X_PLUS = "x_plus"
    Y_PLUS = "y_plus"
    Z_PLUS = "z_plus"

    def vector(self):
        s = 1 / math.sqrt(2)
        return {
            InitialState.X_PLUS: np.array([1.0, 0.0], complex),
            InitialState.Y_PLUS: np.array([s, 1j * s]),
            InitialState.Z_PLUS: np.array([s, s], complex),
        }[self]


@dataclass(frozen=True)
class GateSpec:
    """Gate of ``N`` periods (``t = 2 pi N / Omega``) or explicit duration ``t_g``."""

    N: float | None = None
    t_g: float | None = None
    initial_state: InitialState = InitialState.X_PLUS

    def __post_init__(self):
        if (self.N is None) == (self.t_g is None):
            raise ValidationError("set exactly one of N and t_g")
        if self.N is not None:
            object.__setattr__(self, "N", check_half_integer(self.N))
        elif not (np.isfinite(self.t_g) and self.t_g > 0):
            raise ValidationError("t_g must be > 0")
        object.__setattr__(self, "initial_state", InitialState(self.initial_state))

    def duration(self, rabi):
        return 2 * math.pi * self.N / rabi if self.N is not None else self.t_g


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator choice and accuracy.

    ``max_step`` is the Magnus step (default 1 ns) or the solver's maximum
    step.  ``rel_tol``/``abs_tol`` drive ``dop853`` and bound the allowed norm
    drift ``10 abs_tol``.
    """

    method: str = "magnus4"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float | None = None

    def __post_init__(self):
        if self.method not in ("magnus4", "dop853"):
            raise ValidationError(f"unknown integrator {self.method!r}")
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0 < v <= 1e-3):
                raise ValidationError(f"{name} must lie in (0, 1e-3], got {v!r}")
        if self.max_step is not None and not self.max_step > 0:
            raise ValidationError("max_step must be > 0")

    def step(self, default=1e-9):
        return self.max_step if self.max_step is not None else default


class Channel(int, Enum):
    """Noise channels; the value selects the seed stream."""

    PHASE1 = 0
    PHASE2 = 1
    INTENSITY1 = 2
    INTENSITY2 = 3


_CHANNEL_ALIASES = {
    "phase": Channel.PHASE1,
    "phase1": Channel.PHASE1,
    "phase2": Channel.PHASE2,
    "intensity": Channel.INTENSITY1,
    "intensity1": Channel.INTENSITY1,
    "intensity2": Channel.INTENSITY2,
}


def _channel(key):
    if isinstance(key, Channel):
        return key
    try:
        return _CHANNEL_ALIASES[str(key).lower()]
    except KeyError:
        raise ValidationError(f"unknown noise channel {key!r}") from None


# -- noise sources -----------------------------------------------------------


class _Source:
    """Phase or intensity values of a batch of trials at arbitrary times."""

    def __init__(self, series: FourierSeries | None, K: int):
        self.series = series
        self.K = K

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.series is None or self.series.frequencies.size == 0:
            return np.zeros((self.K,) + t.shape)
        return self.series(t)

    def rate(self, t):
        """Time derivative; exact for Fourier series, central difference otherwise."""
        t = np.asarray(t, dtype=float)
        if self.series is None or self.series.frequencies.size == 0:
            return np.zeros((self.K,) + t.shape)
        if isinstance(self.series, FourierSeries):
            s = self.series
            d = FourierSeries(s.frequencies, -2 * np.pi * s.frequencies * s.coeffs, use_sin=True)
            return d(t)
        h = 1e-12
        return (self.series(t + h) - self.series(t - h)) / (2 * h)


class _Func:
    """Deterministic single-trial signal ``fn(t)`` posing as a series."""

    def __init__(self, fn):
        self.fn = fn
        self.coeffs = np.empty((1, 0))
        self.frequencies = np.array([np.nan])

    def __call__(self, t):
        return np.asarray(self.fn(t), dtype=float)[None, ...] * np.ones((1,) + np.shape(t))


def _from_trace(trace, expect):
    if trace is None:
        return None
    if callable(trace) and not isinstance(trace, (NoiseTrace, FourierSeries)):
        return _Func(trace)
    if isinstance(trace, NoiseTrace):
        if trace.kind is not expect:
            raise ValidationError(f"expected a {expect.value} trace, got {trace.kind.value}")
        return trace.series
    return trace


def _count(*series):
    for s in series:
        if s is not None:
            return s.coeffs.shape[0]
    return 1


# -- Hamiltonians ------------------------------------------------------------


def _h_one(omega0, phi, alpha):
    """Two-level lab Hamiltonian as Pauli components ``(hx, hy)``."""
    amp = 0.5 * omega0 * (1 + 0.5 * alpha)
    return amp * np.cos(phi), amp * np.sin(phi)


def _h_one_fluct(omega0, dnu, alpha):
    """Fluctuating-frame components ``(hx, hz)`` with ``phi' = 2 pi dnu``."""
    return 0.5 * omega0 * (1 + 0.5 * alpha), -math.pi * dnu


# -- exponentials -------------------------------------------------------------


def _apply_su2(hx, hy, hz, h, psi):
    """``exp(-i h (hx sx + hy sy + hz sz)) psi`` for a batch of 2-vectors."""
    n = np.sqrt(hx * hx + hy * hy + hz * hz)
    th = n * h
    c = np.cos(th)
    s = np.where(n > 0, np.sin(th) / np.where(n > 0, n, 1.0), h)
    g, e = psi[:, 0], psi[:, 1]
    ng = c * g - 1j * s * (hz * g + (hx - 1j * hy) * e)
    ne = c * e - 1j * s * ((hx + 1j * hy) * g - hz * e)
    return np.stack([ng, ne], axis=1)


def _apply_expm(H, h, psi):
    w, V = np.linalg.eigh(H)
    coef = np.einsum("kji,kj->ki", V.conj(), psi)
    return np.einsum("kij,kj->ki", V, np.exp(-1j * h * w) * coef)


# -- propagation core ---------------------------------------------------------


@dataclass
class Propagation:
    """Final fluctuating-frame amplitudes with diagnostics.

    ``lab`` holds the lab-frame (or rotating-frame) amplitudes, ``max_leak``
    the largest intermediate-level population seen at step boundaries
    (three-level drives only).
    """

    psi: np.ndarray
    lab: np.ndarray
    norm_error: np.ndarray
    max_leak: np.ndarray | None = None


def _grid(t_final, step):
    n = max(1, int(math.ceil(t_final / step - 1e-9)))
    h = t_final / n
    starts = np.arange(n) * h
    return n, h, np.stack([starts + _C1 * h, starts + _C2 * h], axis=1)


def _check_norm(psi, icfg, offset=0):
    err = np.abs(np.sum(np.abs(psi) ** 2, axis=1) - 1.0)
    bad = np.nonzero(err > 10 * icfg.abs_tol)[0]
    if bad.size:
        i = int(bad[0])
        raise IntegrationError(f"norm drift {err[i]:.3g} exceeds {10 * icfg.abs_tol:.3g}", trial=offset + i)
    return err


def _phase_frame_2(phi):
    """Diagonal lab -> fluctuating frame factors ``(e^{i phi/2}, e^{-i phi/2})``."""
    return np.stack([np.exp(0.5j * phi), np.exp(-0.5j * phi)], axis=1)


def _one_photon_core(omega0, phase, intensity, freq, psi0_fl, t_final, icfg, frame, K):
    n, h, tq = _grid(t_final, icfg.step())
    alpha = intensity(tq)
    if frame == "fluctuating":
        dnu = freq(tq)
        psi = np.broadcast_to(psi0_fl, (K, 2)).astype(complex)
        for j in range(n):
            x1, z1 = _h_one_fluct(omega0, dnu[:, j, 0], alpha[:, j, 0])
            x2, z2 = _h_one_fluct(omega0, dnu[:, j, 1], alpha[:, j, 1])
            psi = _apply_su2(_A2 * x1 + _A1 * x2, 0.0, _A2 * z1 + _A1 * z2, h, psi)
            psi = _apply_su2(_A1 * x1 + _A2 * x2, 0.0, _A1 * z1 + _A2 * z2, h, psi)
        return psi, psi
    phi = phase(tq)
    ends = phase(np.array([0.0, t_final]))
    psi = np.conj(_phase_frame_2(ends[:, 0])) * psi0_fl[None, :]
    for j in range(n):
        x1, y1 = _h_one(omega0, phi[:, j, 0], alpha[:, j, 0])
        x2, y2 = _h_one(omega0, phi[:, j, 1], alpha[:, j, 1])
        psi = _apply_su2(_A2 * x1 + _A1 * x2, _A2 * y1 + _A1 * y2, 0.0, h, psi)
        psi = _apply_su2(_A1 * x1 + _A2 * x2, _A1 * y1 + _A2 * y2, 0.0, h, psi)
    return _phase_frame_2(ends[:, 1]) * psi, psi


def _one_photon_ivp(omega0, phase, intensity, psi0_fl, t_final, icfg):
    ph0 = float(phase(np.array([0.0]))[0, 0])
    y0 = np.conj(_phase_frame_2(np.array([ph0])))[0] * psi0_fl

    def rhs(t, y):
        ph = float(phase(np.array([t]))[0, 0])
        amp = 0.5 * omega0 * (1 + 0.5 * float(intensity(np.array([t]))[0, 0]))
        return np.array([-1j * amp * np.exp(-1j * ph) * y[1], -1j * amp * np.exp(1j * ph) * y[0]])

    sol = _ivp(rhs, y0, t_final, icfg)
    ph1 = float(phase(np.array([t_final]))[0, 0])
    return (_phase_frame_2(np.array([ph1]))[0] * sol)[None, :], sol[None, :]


def _ivp(rhs, y0, t_final, icfg):
    kw = {"max_step": icfg.max_step} if icfg.max_step else {}
    sol = solve_ivp(rhs, (0.0, t_final), y0.astype(complex), method="DOP853", rtol=icfg.rel_tol, atol=icfg.abs_tol, **kw)
    if not sol.success:
        raise IntegrationError(sol.message)
    return sol.y[:, -1]


def propagate_one_photon(
    omega0,
    phase_trace=None,
    intensity_trace=None,
    t_final=None,
    icfg: IntegratorConfig | None = None,
    psi0=None,
    frame="lab",
    frequency_trace=None,
):
    """Propagate the resonant one-photon drive.

    Parameters
    ----------
    omega0 : float
        Rabi frequency (rad/s).
    phase_trace, intensity_trace : NoiseTrace or FourierSeries, optional
        Laser phase ``phi(t)`` (rad) and relative intensity ``alpha_I(t)``;
        ``Omega(t) = omega0 (1 + alpha_I / 2)``.  A :class:`FourierSeries`
        with ``K`` rows propagates ``K`` trials at once.
    t_final : float
        Gate duration (s).
    psi0 : array, optional
        Initial fluctuating-frame state, default ``|g>``.
    frame : {"lab", "fluctuating"}
        ``"fluctuating"`` integrates ``(Omega/2) sx - pi dnu(t) sz`` from the
        matching frequency trace instead of the lab equations.

    Returns
    -------
    Propagation
    """
    icfg = icfg or IntegratorConfig()
    if t_final is None or not t_final > 0:
        raise ValidationError("t_final must be > 0")
    ps = _from_trace(phase_trace, TraceKind.PHASE)
    it = _from_trace(intensity_trace, TraceKind.INTENSITY)
    fr = _from_trace(frequency_trace, TraceKind.FREQUENCY)
    if frame == "fluctuating" and ps is not None and fr is None:
        fr = FourierSeries(ps.frequencies, -ps.frequencies * ps.coeffs, use_sin=True)
    K = _count(ps, it, fr)
    psi0 = InitialState.X_PLUS.vector() if psi0 is None else np.asarray(psi0, complex)
    phase, inten, freq = _Source(ps, K), _Source(it, K), _Source(fr, K)
    if frame not in ("lab", "fluctuating"):
        raise ValidationError(f"unknown frame {frame!r}")
    if icfg.method == "dop853":
        if K != 1 or frame != "lab":
            raise ValidationError("dop853 propagates one lab-frame trial at a time")
        psi, lab = _one_photon_ivp(omega0, phase, inten, psi0, t_final, icfg)
    else:
        psi, lab = _one_photon_core(omega0, phase, inten, freq, psi0, t_final, icfg, frame, K)
    return Propagation(psi, lab, _check_norm(psi, icfg))


def _embed(psi0_q, idx):
    out = np.zeros(3, complex)
    out[idx[0]], out[idx[1]] = psi0_q
    return out


def _three_core(Hfun, frame_phases, psi0, t_final, icfg, K, leak_idx, step):
    """Magnus propagation of a three-level batch in the fluctuating frame.

    ``Hfun(times)`` returns ``j -> H(times[j])`` for the batch; there the laser
    couplings are static and the noise enters only through diagonal
    ``-d theta / dt`` terms, so the large detunings never multiply a
    time-dependent coupling.  ``frame_phases(t) -> (K, 3, len(t))`` maps the
    final state back to rotating-frame amplitudes.
    """
    n, h, tq = _grid(t_final, icfg.step(step))
    H1s, H2s = Hfun(tq[:, 0]), Hfun(tq[:, 1])
    psi = np.broadcast_to(psi0, (K, psi0.size)).astype(complex)
    leak = np.abs(psi[:, leak_idx]) ** 2
    for j in range(n):
        H1, H2 = H1s(j), H2s(j)
        psi = _apply_expm(_A2 * H1 + _A1 * H2, h, psi)
        psi = _apply_expm(_A1 * H1 + _A2 * H2, h, psi)
        leak = np.maximum(leak, np.abs(psi[:, leak_idx]) ** 2)
    theta1 = frame_phases(np.array([t_final]))[..., 0]
    return psi, np.exp(-1j * theta1) * psi, leak


def _ladder_setup(drive, phase1, phase2, inten1, inten2):
    def Hfun(times):
        a1, a2 = inten1(times), inten2(times)
        r1, r2 = phase1.rate(times), phase2.rate(times)
        half = 0.5 * (r1 + r2)

        def H(j):
            K = a1.shape[0]
            out = np.zeros((K, 3, 3), complex)
            g1 = 0.5 * drive.omega1 * (1 + 0.5 * a1[:, j])
            g2 = 0.5 * drive.omega2 * (1 + 0.5 * a2[:, j])
            out[:, 0, 1] = out[:, 1, 0] = g1
            out[:, 1, 2] = out[:, 2, 1] = g2
            out[:, 0, 0] = half[:, j]
            out[:, 1, 1] = -drive.delta1 - r1[:, j] + half[:, j]
            out[:, 2, 2] = -drive.delta_sum - half[:, j]
            return out

        return H

    def frame(t):
        # real couplings: theta_e = theta_g + phi1, theta_r = theta_e + phi2
        p1, p2 = phase1(t), phase2(t)
        s = p1 + p2
        return np.stack([-0.5 * s, p1 - 0.5 * s, 0.5 * s], axis=1)

    return Hfun, frame


def propagate_two_photon(
    drive: TwoPhotonLadder,
    phase1=None,
    phase2=None,
    intensity1=None,
    intensity2=None,
    t_final=None,
    icfg: IntegratorConfig | None = None,
    psi0=None,
):
    """Propagate the ladder drive; returns :class:`Propagation` in basis ``(g, e, r)``.

    ``max_leak`` reports the largest ``|c_e|^2``; a warning is issued above 0.01.
    """
    icfg = icfg or IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9)
    if t_final is None or not t_final > 0:
        raise ValidationError("t_final must be > 0")
    series = [_from_trace(phase1, TraceKind.PHASE), _from_trace(phase2, TraceKind.PHASE)]
    series += [_from_trace(intensity1, TraceKind.INTENSITY), _from_trace(intensity2, TraceKind.INTENSITY)]
    K = _count(*series)
    srcs = [_Source(s, K) for s in series]
    q0 = InitialState.X_PLUS.vector() if psi0 is None else np.asarray(psi0, complex)
    psi0 = _embed(q0, (0, 2))
    Hfun, frame = _ladder_setup(drive, *srcs)
    if icfg.method == "dop853":
        if K != 1:
            raise ValidationError("dop853 propagates one trial at a time")
        psi, lab, leak = _ladder_ivp(drive, *srcs, frame, psi0, t_final, icfg)
    else:
        psi, lab, leak = _three_core(Hfun, frame, psi0, t_final, icfg, K, 1, 1e-9)
    if np.max(leak) > 0.01:
        warnings.warn(f"intermediate population reached {np.max(leak):.3g} > 0.01", RuntimeWarning, stacklevel=2)
    return Propagation(psi, lab, _check_norm(psi, icfg), leak)


def _ladder_ivp(drive, phase1, phase2, inten1, inten2, frame, psi0, t_final, icfg):
    """Integrate the interaction-picture amplitudes with explicit ``e^{i Delta t}``."""
    d1, d2 = drive.delta1, drive.delta2
    theta0 = frame(np.array([0.0]))[0, :, 0]
    y0 = np.exp(-1j * theta0) * psi0  # rotating-frame amplitudes at t = 0 equal c_g, c_e, c_r

    def rhs(t, y):
        tt = np.array([t])
        p1, p2 = float(phase1(tt)[0, 0]), float(phase2(tt)[0, 0])
        o1 = 0.5 * drive.omega1 * (1 + 0.5 * float(inten1(tt)[0, 0]))
        o2 = 0.5 * drive.omega2 * (1 + 0.5 * float(inten2(tt)[0, 0]))
        cg, ce, cr = y
        return np.array(
            [
                -1j * o1 * np.exp(1j * (p1 + d1 * t)) * ce,
                -1j * o1 * np.exp(-1j * (p1 + d1 * t)) * cg - 1j * o2 * np.exp(1j * (p2 + d2 * t)) * cr,
                -1j * o2 * np.exp(-1j * (p2 + d2 * t)) * ce,
            ]
        )

    c = _ivp(rhs, y0, t_final, icfg)
    rot = c * np.exp(1j * np.array([0.0, d1, d1 + d2]) * t_final)
    theta1 = frame(np.array([t_final]))[0, :, 0]
    psi = np.exp(1j * theta1) * rot
    return psi[None, :], rot[None, :], np.array([np.nan])


def _lambda_setup(drive: Lambda, phase1, phase2):
    def rates(times):
        r1 = phase1.rate(times)
        return r1, (r1 if drive.correlated_phase else phase2.rate(times))

    def Hfun(times):
        r1, r2 = rates(times)

        def H(j):
            K = r1.shape[0]
            out = np.zeros((K, 3, 3), complex)
            out[:, 2, 0] = 0.5 * drive.omega1
            out[:, 0, 2] = 0.5 * np.conj(drive.omega1)
            out[:, 1, 2] = 0.5 * np.conj(drive.omega2)
            out[:, 2, 1] = 0.5 * drive.omega2
            out[:, 1, 1] = r1[:, j] - r2[:, j]
            out[:, 2, 2] = drive.delta + r1[:, j]
            return out

        return H

    def frame(t):
        # basis (g, e, p): theta_p = theta_g - phi1, theta_e = theta_p + phi2
        p1 = phase1(t)
        p2 = p1 if drive.correlated_phase else phase2(t)
        return np.stack([np.zeros_like(p1), p2 - p1, -p1], axis=1)

    return Hfun, frame


def propagate_lambda(
    drive: Lambda,
    phase_trace=None,
    t_final=None,
    icfg: IntegratorConfig | None = None,
    psi0=None,
    phase_trace2=None,
):
    """Propagate the Raman drive; basis ``(g, e, p)``.

    With ``correlated_phase`` both sidebands carry ``phase_trace``; otherwise
    the second sideband uses ``phase_trace2``.
    """
    icfg = icfg or IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9)
    if t_final is None or not t_final > 0:
        raise ValidationError("t_final must be > 0")
    s1 = _from_trace(phase_trace, TraceKind.PHASE)
    s2 = None if drive.correlated_phase else _from_trace(phase_trace2, TraceKind.PHASE)
    K = _count(s1, s2)
    Hfun, frame = _lambda_setup(drive, _Source(s1, K), _Source(s2, K))
    q0 = InitialState.X_PLUS.vector() if psi0 is None else np.asarray(psi0, complex)
    psi, lab, leak = _three_core(Hfun, frame, _embed(q0, (0, 1)), t_final, icfg, K, 2, 1e-9)
    return Propagation(psi, lab, _check_norm(psi, icfg), leak)


# -- Monte Carlo ---------------------------------------------------------------


def _perp_norm2(ideal, psi):
    """``|psi - <ideal|psi> ideal|^2``, the error without cancellation."""
    ov = np.sum(np.conj(ideal) * psi, axis=1)
    return np.sum(np.abs(psi - ov[:, None] * ideal) ** 2, axis=1)


def _batch_means(x):
    n = x.size
    b = max(2, int(math.isqrt(n)))
    b = min(b, n)
    groups = np.array_split(x, b)
    means = np.array([g.mean() for g in groups])
    return float(means.std(ddof=1) / math.sqrt(b)) if b > 1 else 0.0


def _normalize_noise(noise):
    out = {}
    for k, m in (noise or {}).items():
        if m is None:
            continue
        if isinstance(m, dict):
            m = model_from_dict(m)
        out[_channel(k)] = m
    return out


def _series_for(noise, ch, cfg, kind, trials):
    m = noise.get(ch)
    if m is None:
        return None
    return fourier_series(m, cfg, kind, trials=trials, channel=int(ch), prune_rel=PRUNE_REL)


def _run_batch(drive, t_final, psi0_q, noise, scfg, icfg, trials, frame):
    K = len(trials)
    if isinstance(drive, OnePhoton):
        ph = _series_for(noise, Channel.PHASE1, scfg, TraceKind.PHASE, trials)
        it = _series_for(noise, Channel.INTENSITY1, scfg, TraceKind.INTENSITY, trials)
        fr = _series_for(noise, Channel.PHASE1, scfg, TraceKind.FREQUENCY, trials) if frame == "fluctuating" else None
        psi, _ = _one_photon_core(
            drive.omega0, _Source(ph, K), _Source(it, K), _Source(fr, K), psi0_q, t_final, icfg, frame, K
        )
        return psi
    if isinstance(drive, TwoPhotonLadder):
        srcs = [
            _Source(_series_for(noise, Channel.PHASE1, scfg, TraceKind.PHASE, trials), K),
            _Source(_series_for(noise, Channel.PHASE2, scfg, TraceKind.PHASE, trials), K),
            _Source(_series_for(noise, Channel.INTENSITY1, scfg, TraceKind.INTENSITY, trials), K),
            _Source(_series_for(noise, Channel.INTENSITY2, scfg, TraceKind.INTENSITY, trials), K),
        ]
        Hfun, fr = _ladder_setup(drive, *srcs)
        psi, _, leak = _three_core(Hfun, fr, _embed(psi0_q, (0, 2)), t_final, icfg, K, 1, 1e-9)
        return psi
    s1 = _Source(_series_for(noise, Channel.PHASE1, scfg, TraceKind.PHASE, trials), K)
    s2 = _Source(_series_for(noise, Channel.PHASE2, scfg, TraceKind.PHASE, trials), K)
    Hfun, fr = _lambda_setup(drive, s1, s2)
    psi, _, _ = _three_core(Hfun, fr, _embed(psi0_q, (0, 1)), t_final, icfg, K, 2, 1e-9)
    return psi


def _trial_errors(drive, gate, noise, n_trials, scfg, icfg, state, frame, batch):
    t_final = gate.duration(drive.rabi)
    psi0 = state.vector()
    ideal = _run_batch(drive, t_final, psi0, {}, scfg, icfg, [0], "lab")
    if not noise:
        return np.zeros(n_trials)
    errs = np.empty(n_trials)
    for start in range(0, n_trials, batch):
        trials = list(range(start, min(n_trials, start + batch)))
        psi = _run_batch(drive, t_final, psi0, noise, scfg, icfg, trials, frame)
        _check_norm(psi, icfg, offset=start)
        errs[start : start + len(trials)] = _perp_norm2(ideal, psi)
    return errs


def _prepare(drive, n_trials, base_seed, icfg, scfg, noise):
    if n_trials < 2:
        raise ValidationError("n_trials must be >= 2")
    if isinstance(drive, dict):
        drive = drive_from_dict(drive)
    default_tol = 1e-10 if isinstance(drive, OnePhoton) else 1e-9
    icfg = icfg or IntegratorConfig(rel_tol=default_tol, abs_tol=default_tol)
    if icfg.method != "magnus4":
        raise ValidationError("Monte Carlo runs use the batched magnus4 integrator")
    scfg = scfg or SynthesisConfig()
    if base_seed is not None:
        scfg = SynthesisConfig(scfg.duration_T, scfg.requested_bandwidth, base_seed)
    noise = _normalize_noise(noise)
    for m in noise.values():
        for t in iter_terms(m):
            if isinstance(t, ServoBump) and t.sigma_g < 2 * scfg.df:
                warnings.warn(
                    f"servo bump width {t.sigma_g:g} Hz is below twice the mode spacing 1/T = {scfg.df:g} Hz; "
                    "increase duration_T to resolve it",
                    RuntimeWarning,
                    stacklevel=3,
                )
    if isinstance(drive, OnePhoton) and any(c in noise for c in (Channel.PHASE2, Channel.INTENSITY2)):
        raise ValidationError("one-photon drives take only phase1 and intensity1 noise")
    if isinstance(drive, Lambda) and drive.correlated_phase and Channel.PHASE2 in noise:
        raise ValidationError("correlated Lambda drives take a single phase channel")
    return drive, icfg, scfg, noise


def monte_carlo_error(
    drive,
    gate: GateSpec,
    noise=None,
    n_trials=500,
    base_seed=None,
    icfg: IntegratorConfig | None = None,
    scfg: SynthesisConfig | None = None,
    frame="lab",
    batch=256,
    return_trials=False,
):
    """Monte Carlo gate error ``1 - Tr[<rho> rho_ideal]``.

    Parameters
    ----------
    drive : OnePhoton, TwoPhotonLadder or Lambda
    gate : GateSpec
    noise : dict
        Noise models keyed by channel: ``phase``/``phase1``, ``phase2``,
        ``intensity``/``intensity1``, ``intensity2``.  Models may be given as
        JSON dictionaries.
    n_trials : int
        Number of independent realizations (>= 2).
    base_seed : int, optional
        Overrides ``scfg.base_seed``.  Trial ``i`` on channel ``c`` is seeded
        with ``mix_seed(mix_seed(base_seed, c), i)``.
    frame : {"lab", "fluctuating"}
        One-photon only: integrate the lab equations with the phase trace or
        the fluctuating-frame equations with the frequency trace.

    Returns
    -------
    ErrorEstimate
        ``std_error`` from batch means over ``sqrt(n_trials)`` batches.  With
        ``return_trials`` the per-trial errors are returned as well.
    """
    drive, icfg, scfg, noise = _prepare(drive, n_trials, base_seed, icfg, scfg, noise)
    errs = _trial_errors(drive, gate, noise, n_trials, scfg, icfg, gate.initial_state, frame, batch)
    est = ErrorEstimate(float(errs.mean()), _batch_means(errs), n_trials, Method.MONTE_CARLO)
    return (est, errs) if return_trials else est


def monte_carlo_error_averaged(drive, gate: GateSpec, noise=None, n_trials=500, base_seed=None, icfg=None, scfg=None, batch=256):
    """State-averaged error: mean over the x, y and z initial states, same seeds."""
    drive, icfg, scfg, noise = _prepare(drive, n_trials, base_seed, icfg, scfg, noise)
    total = np.zeros(n_trials)
    for state in InitialState:
        total += _trial_errors(drive, gate, noise, n_trials, scfg, icfg, state, "lab", batch)
    total /= 3
    return ErrorEstimate(float(total.mean()), _batch_means(total), n_trials, Method.MONTE_CARLO)


# -- JSON ----------------------------------------------------------------------


def _c(v):
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    return complex(v)


def _key(d, name):
    """Fetch ``<name>_rad_per_s`` (or the short alias ``<name>_rad_s``)."""
    for k in (f"{name}_rad_per_s", f"{name}_rad_s"):
        if k in d:
            return d[k]
    raise KeyError(f"{name}_rad_per_s")


def drive_from_dict(d):
    """Build a drive from ``{"kind": "one_photon" | "two_photon_ladder" | "lambda", ...}``."""
    if not isinstance(d, dict):
        raise ValidationError("drive must be a JSON object")
    kind = d.get("kind")
    try:
        if kind == "one_photon":
            return OnePhoton(float(_key(d, "omega0")))
        if kind == "two_photon_ladder":
            o1, o2, d1 = float(_key(d, "omega1")), float(_key(d, "omega2")), float(_key(d, "delta1"))
            if "delta2_rad_per_s" in d or "delta2_rad_s" in d:
                return TwoPhotonLadder(o1, o2, d1, float(_key(d, "delta2")))
            return TwoPhotonLadder.resonant(o1, o2, d1)
        if kind == "lambda":
            return Lambda(
                _c(_key(d, "omega1")),
                _c(_key(d, "omega2")),
                float(_key(d, "delta")),
                bool(d.get("correlated_phase", True)),
            )
    except KeyError as exc:
        raise ValidationError(f"drive is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad drive field: {exc}") from None
    raise ValidationError(f"field 'kind' has unknown drive {kind!r}")


def drive_to_dict(drive):
    if isinstance(drive, OnePhoton):
        return {"kind": "one_photon", "omega0_rad_per_s": drive.omega0}
    if isinstance(drive, TwoPhotonLadder):
        return {
            "kind": "two_photon_ladder",
            "omega1_rad_per_s": drive.omega1,
            "omega2_rad_per_s": drive.omega2,
            "delta1_rad_per_s": drive.delta1,
            "delta2_rad_per_s": drive.delta2,
        }
    c = lambda z: {"re": complex(z).real, "im": complex(z).imag}  # noqa: E731
    return {
        "kind": "lambda",
        "omega1_rad_per_s": c(drive.omega1),
        "omega2_rad_per_s": c(drive.omega2),
        "delta_rad_per_s": drive.delta,
        "correlated_phase": drive.correlated_phase,
    }


def noise_to_dict(noise):
    return {_channel(k).name.lower(): model_to_dict(m) for k, m in (noise or {}).items() if m is not None}
