import math

import numpy as np
import pytest

from lasernoise import analytic as A
from lasernoise.common import Averaging, Method
from lasernoise.dynamics import (
    GateSpec,
    InitialState,
    IntegratorConfig,
    Lambda,
    OnePhoton,
    TwoPhotonLadder,
    drive_from_dict,
    drive_to_dict,
    monte_carlo_error,
    monte_carlo_error_averaged,
    propagate_lambda,
    propagate_one_photon,
    propagate_two_photon,
)
from lasernoise.errors import ValidationError
from lasernoise.spectra import BandLimitedWhite, ServoBump, White
from lasernoise.synth import SynthesisConfig, synth_phase_trace

W = 2 * math.pi * 1e6
LADDER = TwoPhotonLadder.resonant(2 * math.pi * 100e6, 2 * math.pi * 100e6, 2 * math.pi * 5e9)
RAMAN = Lambda(2 * math.pi * 100e6, 2 * math.pi * 100e6, 2 * math.pi * 5e9)
DOP = IntegratorConfig(method="dop853", rel_tol=1e-12, abs_tol=1e-12)


# -- one photon ----------------------------------------------------------------------


def test_pi_pulse():
    p = propagate_one_photon(W, t_final=math.pi / W)
    assert abs(p.psi[0, 1]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_full_rotation_returns():
    p = propagate_one_photon(W, t_final=2 * math.pi / W)
    assert abs(p.psi[0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(p.psi[0, 1]) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("icfg", [IntegratorConfig(), DOP], ids=["magnus4", "dop853"])
def test_constant_detuning_matches_rabi_formula(icfg):
    d = W / 10
    p = propagate_one_photon(W, lambda t: d * np.asarray(t), t_final=math.pi / W, icfg=icfg)
    wg = math.hypot(W, d)
    expected = (W / wg) ** 2 * math.sin(wg * math.pi / (2 * W)) ** 2
    assert abs(p.lab[0, 1]) ** 2 == pytest.approx(expected, abs=1e-6)


def test_magnus_against_adaptive_solver_with_noise():
    tr = synth_phase_trace(White(4000), SynthesisConfig(50e-6, 10e6, 1))
    t = math.pi / W
    ref = propagate_one_photon(W, tr, t_final=t, icfg=DOP).psi
    fine = propagate_one_photon(W, tr, t_final=t, icfg=IntegratorConfig(max_step=2.5e-10)).psi
    np.testing.assert_allclose(fine, ref, atol=1e-7)


def test_norm_conserved():
    tr = synth_phase_trace(White(4000), SynthesisConfig(50e-6, 10e6, 3))
    p = propagate_one_photon(W, tr, t_final=3 * math.pi / W)
    assert p.norm_error.max() < 1e-12


def test_propagate_requires_duration():
    with pytest.raises(ValidationError):
        propagate_one_photon(W, t_final=0.0)
    with pytest.raises(ValidationError):
        propagate_one_photon(W, t_final=1e-6, frame="rotating")


# -- two-photon ladder ---------------------------------------------------------------


def test_ladder_derived_rates():
    assert LADDER.omega_tilde == pytest.approx(W, rel=1e-12)
    assert LADDER.delta_sum == pytest.approx(0.0, abs=1e-6)


def test_ladder_noiseless_pi_and_2pi():
    p = propagate_two_photon(LADDER, t_final=math.pi / LADDER.omega_tilde)
    assert abs(p.psi[0, 2]) ** 2 >= 0.999
    assert np.max(p.max_leak) <= 1e-3
    q = propagate_two_photon(LADDER, t_final=2 * math.pi / LADDER.omega_tilde)
    assert abs(q.psi[0, 0]) ** 2 >= 0.999


def test_ladder_validation():
    o = 2 * math.pi * 100e6
    with pytest.raises(ValidationError):
        TwoPhotonLadder(o, o, 2 * math.pi * 5e9, -2 * math.pi * 4e9)
    with pytest.raises(ValidationError):
        TwoPhotonLadder.resonant(o, o, 2 * math.pi * 1e8)


# -- Lambda --------------------------------------------------------------------------


def test_lambda_noiseless_transfer():
    assert RAMAN.omega_r == pytest.approx(W, rel=1e-12)
    p = propagate_lambda(RAMAN, t_final=math.pi / RAMAN.omega_r)
    assert abs(p.psi[0, 1]) ** 2 >= 0.999
    assert np.max(p.max_leak) < 1e-3


def test_lambda_validation():
    with pytest.raises(ValidationError):
        Lambda(1e9, 1e9, 5e9)
    with pytest.raises(ValidationError):
        Lambda(0, 1e6, 5e9)


# -- Monte Carlo ---------------------------------------------------------------------


def test_zero_noise_gives_zero_error():
    est = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {}, n_trials=4)
    assert est.mean_error == 0.0 and est.std_error == 0.0
    assert est.method is Method.MONTE_CARLO


def test_one_photon_white_against_analytic():
    est = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase": White(40)}, n_trials=1000, base_seed=11)
    exact = A.error_white_1p(40, 0.5, W)
    assert abs(est.mean_error - exact) <= 2 * est.std_error
    assert est.std_error < 0.1 * exact


def test_state_averaged_against_analytic():
    est = monte_carlo_error_averaged(OnePhoton(W), GateSpec(N=1), {"phase": White(200)}, n_trials=600, base_seed=5)
    exact = A.error_white_1p(200, 1, W, Averaging.STATE_AVERAGED)
    assert abs(est.mean_error - exact) <= 2.5 * est.std_error


def test_frames_agree_per_trial():
    kw = dict(gate=GateSpec(N=0.5), noise={"phase": White(400)}, n_trials=50, base_seed=2, return_trials=True)
    lab, e_lab = monte_carlo_error(OnePhoton(W), frame="lab", **kw)
    fl, e_fl = monte_carlo_error(OnePhoton(W), frame="fluctuating", **kw)
    np.testing.assert_allclose(e_fl, e_lab, rtol=1e-3, atol=1e-9)
    assert abs(lab.mean_error - fl.mean_error) < lab.std_error


def test_determinism():
    kw = dict(noise={"phase": White(100)}, n_trials=20, base_seed=99)
    a = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), **kw)
    b = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), **kw)
    assert a.mean_error == b.mean_error and a.std_error == b.std_error


def test_batch_size_does_not_change_result():
    kw = dict(noise={"phase": White(100)}, n_trials=30, base_seed=4)
    a = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), batch=7, **kw)
    b = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), batch=256, **kw)
    assert a.mean_error == pytest.approx(b.mean_error, rel=1e-12)


def test_servo_bump_suppressed_at_twice_rabi():
    scfg = SynthesisConfig(200e-6, 4e6)

    def err(fg):
        bump = ServoBump(1000.0, 20e3, fg)
        return monte_carlo_error(OnePhoton(W), GateSpec(N=1), {"phase": bump}, n_trials=100, base_seed=8, scfg=scfg)

    on, off = err(1e6), err(2e6)
    assert off.mean_error < on.mean_error / 100


def test_band_limited_quasistatic_error():
    fc, h0 = 1e4, 3180.0
    scfg = SynthesisConfig(2e-3, 2 * fc)
    est = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase": BandLimitedWhite(h0, fc)}, n_trials=400, base_seed=3, scfg=scfg)
    exact = A.error_bandlimited_1p(h0, fc, 0.5, W).value
    assert abs(est.mean_error - exact) <= 2.5 * est.std_error


def test_intensity_noise_error():
    fc, sigma2 = 1e5, 1e-4
    scfg = SynthesisConfig(100e-6, 2 * fc)
    noise = {"intensity": BandLimitedWhite(sigma2 / (2 * fc), fc)}
    est = monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), noise, n_trials=1000, base_seed=21, scfg=scfg)
    # the variance is spread up to fc; the quasistatic formula is exact only for fc << Rabi
    exact = A.error_intensity([sigma2], 0.5)
    assert est.mean_error == pytest.approx(exact, rel=0.15)


def test_ladder_doubles_one_photon():
    kw = dict(gate=GateSpec(N=0.5), n_trials=200, base_seed=6)
    one = monte_carlo_error(OnePhoton(W), noise={"phase": White(400)}, **kw)
    two = monte_carlo_error(LADDER, noise={"phase1": White(400), "phase2": White(400)}, **kw)
    ratio = two.mean_error / one.mean_error
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_lambda_correlated_noise_is_suppressed():
    kw = dict(gate=GateSpec(N=0.5), n_trials=20, base_seed=10)
    ladder = monte_carlo_error(LADDER, noise={"phase1": White(400), "phase2": White(400)}, **kw)
    raman = monte_carlo_error(RAMAN, noise={"phase": White(400)}, **kw)
    assert raman.mean_error < 1e-2 * ladder.mean_error


def test_monte_carlo_validation():
    with pytest.raises(ValidationError):
        monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase": White(1)}, n_trials=1)
    with pytest.raises(ValidationError):
        monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase2": White(1)}, n_trials=2)
    with pytest.raises(ValidationError):
        monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"colour": White(1)}, n_trials=2)
    with pytest.raises(ValidationError):
        monte_carlo_error(RAMAN, GateSpec(N=0.5), {"phase1": White(1), "phase2": White(1)}, n_trials=2)
    with pytest.raises(ValidationError):
        monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase": White(1)}, n_trials=2, icfg=DOP)


def test_narrow_bump_warning():
    with pytest.warns(RuntimeWarning):
        monte_carlo_error(OnePhoton(W), GateSpec(N=0.5), {"phase": ServoBump(10, 1e3, 1e6)}, n_trials=2)


# -- specs and serialization ---------------------------------------------------------


def test_gate_spec():
    assert GateSpec(N=1.5).duration(W) == pytest.approx(3 * math.pi / W)
    assert GateSpec(t_g=1e-6).duration(W) == 1e-6
    assert GateSpec(N=1, initial_state="y_plus").initial_state is InitialState.Y_PLUS
    with pytest.raises(ValidationError):
        GateSpec(N=1, t_g=1e-6)
    with pytest.raises(ValidationError):
        GateSpec()
    with pytest.raises(ValidationError):
        GateSpec(N=0.7)


def test_integrator_config_validation():
    with pytest.raises(ValidationError):
        IntegratorConfig(rel_tol=1e-2)
    with pytest.raises(ValidationError):
        IntegratorConfig(method="euler")


@pytest.mark.parametrize("drive", [OnePhoton(W), LADDER, Lambda(1e9 + 2e8j, 1e9, 5e10, False)], ids=["one", "ladder", "lambda"])
def test_drive_round_trip(drive):
    assert drive_from_dict(drive_to_dict(drive)) == drive


def test_drive_dict_aliases_and_errors():
    assert drive_from_dict({"kind": "one_photon", "omega0_rad_s": W}) == OnePhoton(W)
    with pytest.raises(ValidationError):
        drive_from_dict({"kind": "one_photon"})
    with pytest.raises(ValidationError):
        drive_from_dict({"kind": "four_photon", "omega0_rad_per_s": W})
