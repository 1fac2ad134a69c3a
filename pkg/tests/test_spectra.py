import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lasernoise.errors import DivergenceError, DomainError, NoSolutionError, ValidationError
from lasernoise.spectra import (
    BandLimitedWhite,
    Composite,
    ServoBump,
    White,
    crossover_fx,
    model_from_dict,
    model_to_dict,
    psd_delta_nu,
    psd_phi,
    servo_bump_power,
    variance_delta_nu,
)


def test_white_is_flat():
    assert psd_delta_nu(White(100), 1e3) == 100


def test_servo_bump_value_at_center():
    b = ServoBump(2000, 1.5e3, 234e3)
    expected = 2000 + 2000 * math.exp(-(468e3**2) / (2 * 1.5e3**2))
    assert psd_delta_nu(b, 234e3) == pytest.approx(expected, rel=1e-15)
    assert psd_delta_nu(b, 234e3) == pytest.approx(2000)


def test_band_limited_zero_above_cutoff():
    m = BandLimitedWhite(3180, 1e3)
    assert psd_delta_nu(m, 2e3) == 0
    assert psd_delta_nu(m, 500) == 3180


def test_psd_phi_values():
    assert psd_phi(White(100), 100.0) == pytest.approx(0.01)
    assert psd_phi(ServoBump(25, 18e3, 130e3), 130e3) == pytest.approx(25 / 130e3**2, rel=1e-12)


def test_psd_phi_rejects_zero():
    with pytest.raises(DomainError):
        psd_phi(White(100), 0.0)
    with pytest.raises(DomainError):
        psd_phi(White(100), np.array([1.0, 0.0]))


def test_servo_bump_power_values():
    assert servo_bump_power(2000, 1.5e3, 234e3).s_g == pytest.approx(2.75e-4, rel=5e-3)
    assert servo_bump_power(25, 18e3, 130e3).s_g == pytest.approx(1.33e-4, rel=5e-3)
    assert servo_bump_power(0, 1e3, 100e3).s_g == 0
    assert ServoBump(25, 18e3, 130e3).s_g == servo_bump_power(25, 18e3, 130e3).s_g


def test_servo_bump_power_wide_warns():
    with pytest.warns(RuntimeWarning):
        r = servo_bump_power(10, 50e3, 100e3)
    assert r.narrow_violated
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not servo_bump_power(10, 1e3, 100e3).narrow_violated


def test_crossover_white():
    assert crossover_fx(White(100)) == 400
    assert crossover_fx(White(13)) == pytest.approx(52)


def test_crossover_bisection_matches_closed_form():
    # a wide band-limited spectrum has the white tail above f_x
    fx = crossover_fx(BandLimitedWhite(100, 1e12), f_max=1e11)
    exact = 1 / (1 / 400 + 1 / 1e12)
    assert fx == pytest.approx(exact, rel=1e-10)


def test_crossover_no_solution():
    # tail integral 2 h0 (1/f_min - 1/fc) stays tiny
    with pytest.raises(NoSolutionError):
        crossover_fx(BandLimitedWhite(1e-9, 1e3), f_min=1.0)


def test_variance():
    assert variance_delta_nu(BandLimitedWhite(3180, 1e3)) == pytest.approx(6.36e6, rel=1e-15)
    assert variance_delta_nu(Composite([BandLimitedWhite(1, 1), BandLimitedWhite(2, 1)])) == 6
    with pytest.raises(DivergenceError):
        variance_delta_nu(White(100))


def test_variance_composite_additive():
    parts = [BandLimitedWhite(3.3, 7e3), ServoBump(25, 18e3, 130e3), ServoBump(2000, 1.5e3, 234e3)]
    total = variance_delta_nu(Composite(parts))
    assert total == pytest.approx(sum(variance_delta_nu(p) for p in parts), rel=1e-12)


def test_bump_variance_matches_quadrature():
    from scipy import integrate

    b = ServoBump(2000, 1.5e3, 234e3)
    q, _ = integrate.quad(lambda f: b.psd(f), 200e3, 270e3, points=[234e3], epsabs=0, epsrel=1e-12)
    assert variance_delta_nu(b) == pytest.approx(2 * q, rel=1e-9)


@pytest.mark.parametrize(
    "kwargs",
    [dict(cls=White, args=(-1,)), dict(cls=BandLimitedWhite, args=(1, 0)), dict(cls=ServoBump, args=(1, 0, 1)),
     dict(cls=ServoBump, args=(1, 1, -1)), dict(cls=White, args=(float("nan"),))],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(ValidationError):
        kwargs["cls"](*kwargs["args"])


def test_json_round_trip():
    m = Composite([White(13), ServoBump(25, 18e3, 130e3), BandLimitedWhite(3, 4e3)])
    d = model_to_dict(m)
    assert d["terms"][0] == {"kind": "white", "h0_hz2_per_hz": 13}
    assert model_from_dict(d) == m


def test_json_errors_name_the_field():
    with pytest.raises(ValidationError, match="h0_hz2_per_hz"):
        model_from_dict({"kind": "white"})
    with pytest.raises(ValidationError, match="kind"):
        model_from_dict({"kind": "pink"})


models = st.one_of(
    st.builds(White, st.floats(0, 1e6)),
    st.builds(BandLimitedWhite, st.floats(0, 1e6), st.floats(1e-3, 1e9)),
    st.builds(ServoBump, st.floats(0, 1e6), st.floats(1.0, 1e5), st.floats(1.0, 1e7)),
)
composites = st.lists(models, min_size=1, max_size=4).map(Composite)
freqs = st.floats(-1e9, 1e9).filter(lambda f: abs(f) > 1e-3)


@settings(max_examples=300, deadline=None)
@given(st.one_of(models, composites), freqs)
def test_even(model, f):
    assert psd_delta_nu(model, f) == psd_delta_nu(model, -f)


@settings(max_examples=300, deadline=None)
@given(st.one_of(models, composites), freqs)
def test_phi_consistency(model, f):
    s = psd_delta_nu(model, f)
    assert psd_phi(model, f) * f * f == pytest.approx(s, rel=1e-14, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(composites, st.floats(-1e8, 1e8))
def test_composite_is_sum(model, f):
    assert psd_delta_nu(model, f) == pytest.approx(sum(psd_delta_nu(t, f) for t in model.terms), rel=1e-15)
