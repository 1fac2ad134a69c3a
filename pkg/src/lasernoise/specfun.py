"""Sine and cosine integrals.

``Si(x) = int_0^x sin(t)/t dt`` and ``Ci(x) = -int_x^inf cos(t)/t dt``.

Small arguments use the power series, large arguments the continued fraction
for ``E1(ix)``, which converges quickly for ``|x| >= 4``.  Both branches are
accurate to a few ulp over the range used by the error formulas.
"""

from __future__ import annotations

import numpy as np

__all__ = ["si", "ci", "sici"]

EULER_GAMMA = 0.57721566490153286061
_SWITCH = 4.0
_EPS = 1e-17


def _series(x):
    """Power series for ``0 < x < 4``; returns (Si, Ci - gamma - ln x)."""
    x2 = x * x
    si = np.zeros_like(x)
    cin = np.zeros_like(x)
    term_s = x.copy()  # (-1)^k x^(2k+1) / (2k+1)!
    term_c = np.ones_like(x)  # (-1)^k x^(2k) / (2k)!
    for k in range(40):
        si += term_s / (2 * k + 1)
        if k > 0:
            cin += term_c / (2 * k)
        term_s = -term_s * x2 / ((2 * k + 2) * (2 * k + 3))
        term_c = -term_c * x2 / ((2 * k + 1) * (2 * k + 2))
        if np.all(np.abs(term_s) < _EPS * np.abs(si)) and np.all(np.abs(term_c) < _EPS):
            break
    return si, cin


def _cfrac(x):
    """Modified Lentz evaluation of ``E1(ix)`` for ``x >= 4``.

    Uses ``E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...)))``.
    """
    z = 1j * x
    b = z + 1.0
    c = np.full_like(z, 1.0 / 1e-300)
    d = 1.0 / b
    h = d.copy()
    for n in range(1, 200):
        a = -float(n * n)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    return h * np.exp(-z)


def sici(x):
    """Return ``(Si(x), Ci(x))`` for real ``x``.

    ``Si`` is odd.  For ``x < 0``, ``Ci`` returns the real part of the
    principal branch, ``Ci(|x|)``; ``Ci(0) = -inf``.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xa = np.atleast_1d(np.abs(x))
    si = np.zeros_like(xa)
    c = np.full_like(xa, -np.inf)

    small = (xa > 0) & (xa < _SWITCH)
    if np.any(small):
        s, cin = _series(xa[small])
        si[small] = s
        c[small] = EULER_GAMMA + np.log(xa[small]) + cin
    large = (xa >= _SWITCH) & np.isfinite(xa)
    if np.any(large):
        e1 = _cfrac(xa[large])
        # E1(ix) = -Ci(x) + i (Si(x) - pi/2)
        c[large] = -e1.real
        si[large] = e1.imag + np.pi / 2
    big = np.isinf(xa)
    si[big] = np.pi / 2
    c[big] = 0.0

    si = np.where(np.atleast_1d(x) < 0, -si, si)
    if scalar:
        return float(si[0]), float(c[0])
    return si.reshape(x.shape), c.reshape(x.shape)


def si(x):
    """Sine integral."""
    return sici(x)[0]


def ci(x):
    """Cosine integral (real part for negative arguments)."""
    return sici(x)[1]
