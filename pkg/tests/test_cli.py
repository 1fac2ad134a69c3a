import csv
import hashlib
import json
import math
import shutil
import subprocess

import numpy as np
import pytest
from click.testing import CliRunner

from lasernoise import __version__
from lasernoise.cli import main
from lasernoise.fitting import synthetic_spectrum
from lasernoise.spectra import Composite, model_from_dict

W = 2 * math.pi * 1e6
TD = 54.45e-6


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def check_manifest(out, command):
    m = manifest(out)
    assert m["command"] == command
    assert m["artifact_version"] == __version__
    blob = json.dumps(m["config"], sort_keys=True, separators=(",", ":"), default=str).encode()
    assert m["config_digest"] == "sha256:" + hashlib.sha256(blob).hexdigest()
    listed = {o["path"] for o in m["outputs"]}
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == on_disk
    for o in m["outputs"]:
        assert hashlib.sha256((out / o["path"]).read_bytes()).hexdigest() == o["sha256"]
    return m


# -- synth ---------------------------------------------------------------------------


def test_synth_writes_trace(tmp_path):
    cfg = write(tmp_path / "c.json", {"$schema": "lasernoise/synth/v1", "model": {"kind": "white", "h0_hz2_per_hz": 100}, "seed": 7})
    r = run("synth", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    rows = (tmp_path / "o" / "trace.csv").read_text().splitlines()
    assert len(rows) == 1 + 1000
    check_manifest(tmp_path / "o", "synth")
    assert manifest(tmp_path / "o")["seed"] == 7


def test_synth_deterministic_bytes(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"kind": "white", "h0_hz2_per_hz": 100}, "seed": 3})
    run("synth", cfg, "--out-dir", tmp_path / "a")
    run("synth", cfg, "--out-dir", tmp_path / "b")
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    run("synth", cfg, "--out-dir", tmp_path / "c", "--seed", 4)
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "c" / "trace.csv").read_bytes()


def test_synth_multiple_trials(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"kind": "white", "h0_hz2_per_hz": 1}})
    r = run("synth", cfg, "--out-dir", tmp_path / "o", "--trials", 3)
    assert r.exit_code == 0
    assert sorted(p.name for p in (tmp_path / "o").glob("trace_*.csv")) == [f"trace_{i:04d}.csv" for i in range(3)]
    check_manifest(tmp_path / "o", "synth")


def test_synth_model_from_file(tmp_path):
    write(tmp_path / "m.json", {"kind": "band_limited_white", "h0_hz2_per_hz": 100, "fc_hz": 1e5})
    cfg = write(tmp_path / "c.json", {"model": "m.json", "trace": "frequency_deviation"})
    assert run("synth", cfg, "--out-dir", tmp_path / "o").exit_code == 0


@pytest.mark.parametrize(
    "text, needle",
    [
        ('{"model": {"kind": "white", "h0_hz2_per_h": 100}}', "h0_hz2_per_hz"),
        ('{"model":', "JSON"),
        ('{"model": {"kind": "white", "h0_hz2_per_hz": 1}, "trace": "colour"}', "trace"),
        ('{"model": {"kind": "white", "h0_hz2_per_hz": 1}, "duration_s": -1}', "duration_s"),
        ('{"$schema": "lasernoise/fit/v1", "model": {"kind": "white", "h0_hz2_per_hz": 1}}', "$schema"),
    ],
)
def test_synth_validation_exit_code(tmp_path, text, needle):
    cfg = write(tmp_path / "c.json", text)
    r = run("synth", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 2
    assert needle in r.output


def test_missing_config_is_io_error(tmp_path):
    r = run("synth", tmp_path / "nope.json", "--out-dir", tmp_path / "o")
    assert r.exit_code == 4


# -- heterodyne ----------------------------------------------------------------------


def test_heterodyne_modes_and_nulls(tmp_path):
    f = np.linspace(0, 60e3, 601)
    cfg = write(
        tmp_path / "c.json",
        {"model": {"kind": "white", "h0_hz2_per_hz": 100}, "td_s": TD, "modes": ["exact", "weak_noise"], "frequencies_hz": list(f)},
    )
    r = run("heterodyne", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    out = tmp_path / "o"
    check_manifest(out, "heterodyne")
    weak = np.loadtxt(out / "self_heterodyne_weak_noise.csv", delimiter=",", skiprows=1)
    # first order in the noise the scallop factor zeroes the spectrum at k / td
    for k in (1, 2, 3):
        near = np.abs(weak[:, 0] - k / TD) < 0.3 / TD
        assert weak[near, 0][np.argmin(weak[near, 1])] == pytest.approx(k / TD, abs=100.0)
    exact = np.loadtxt(out / "self_heterodyne_exact.csv", delimiter=",", skiprows=1)
    from lasernoise.heterodyne import self_het_white

    ref, weight = self_het_white(100.0, TD, f)
    np.testing.assert_allclose(exact[1:, 1], ref[1:], rtol=1e-6)
    side = json.loads((out / "self_heterodyne_exact.json").read_text())
    assert side["delta_weight"] == pytest.approx(weight, rel=1e-12)


def test_heterodyne_lineshape(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"kind": "white", "h0_hz2_per_hz": 100}, "td_s": TD, "spectrum": "lineshape", "freq_max_hz": 1e4, "n_freq": 11})
    r = run("heterodyne", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    data = np.loadtxt(tmp_path / "o" / "lineshape_exact.csv", delimiter=",", skiprows=1)
    assert data[-1, 1] == pytest.approx(100 / (1e8 + (math.pi * 100) ** 2), rel=1e-12)


def test_heterodyne_missing_delay(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"kind": "white", "h0_hz2_per_hz": 100}})
    r = run("heterodyne", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 2
    assert "td_s" in r.output


def test_heterodyne_tau_max_failure_is_numerical(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": {"kind": "white", "h0_hz2_per_hz": 10}, "td_s": TD, "tau_max_s": 1e-5, "freq_max_hz": 1e4, "n_freq": 11})
    assert run("heterodyne", cfg, "--out-dir", tmp_path / "o").exit_code == 3


# -- fit -> simulate -----------------------------------------------------------------


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    d = tmp_path_factory.mktemp("fit")
    raw = synthetic_spectrum(13.0, [(25.0, 18e3, 130e3), (2000.0, 1.5e3, 234e3)], rng=1, center=80e6, scale=3e4)
    np.savetxt(d / "spec.csv", raw, delimiter=",", header="freq_hz,psd", comments="")
    write(d / "meta.json", {"rbw_hz": 100, "td_s": TD})
    r = run("fit", d / "spec.csv", d / "meta.json", "--n-bumps", 2, "--omega0-rad-per-s", W, "--out-dir", d / "out")
    assert r.exit_code == 0, r.output
    return d


def test_fit_reference_replica(fitted):
    out = fitted / "out"
    check_manifest(out, "fit")
    doc = json.loads((out / "fit.json").read_text())
    model = model_from_dict(doc)
    assert isinstance(model, Composite)
    h0 = model.terms[0].h0
    bumps = sorted(model.terms[1:], key=lambda b: b.fg)
    assert h0 == pytest.approx(13.0, rel=0.05)
    for b, ref in zip(bumps, [(25.0, 18e3, 130e3), (2000.0, 1.5e3, 234e3)]):
        assert (b.hg, b.sigma_g, b.fg) == pytest.approx(ref, rel=0.05)
    assert doc["fit"]["center_found_hz"] == pytest.approx(80e6, abs=200)
    budget = json.loads((out / "budget.json").read_text())
    assert sorted(budget["flagged_bumps"]) == [0, 1]
    assert "total" in (out / "report.txt").read_text()


def test_fit_white_only(fitted, tmp_path):
    raw = synthetic_spectrum(40.0, [], rng=2)
    np.savetxt(tmp_path / "s.csv", raw, delimiter=",", header="freq_hz,psd", comments="")
    r = run("fit", tmp_path / "s.csv", fitted / "meta.json", "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    model = model_from_dict(json.loads((tmp_path / "o" / "fit.json").read_text()))
    assert len(model.terms) == 1
    assert model.terms[0].h0 == pytest.approx(40.0, rel=0.02)


def test_fit_bad_meta(fitted, tmp_path):
    write(tmp_path / "meta.json", {"rbw_hz": 100})
    r = run("fit", fitted / "spec.csv", tmp_path / "meta.json", "--out-dir", tmp_path / "o")
    assert r.exit_code == 2


def test_fit_output_feeds_simulate(fitted, tmp_path):
    cfg = write(
        tmp_path / "sim.json",
        {
            "$schema": "lasernoise/simulate/v1",
            "drive": {"kind": "one_photon", "omega0_rad_per_s": W},
            "gate": {"N": 0.5},
            "noise": {"phase1": str(fitted / "out" / "fit.json")},
            "synthesis": {"duration_s": 2e-3, "bandwidth_hz": 2e6},
            "trials": 20,
            "seed": 1,
        },
    )
    r = run("simulate", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    res = json.loads((tmp_path / "o" / "result.json").read_text())
    assert res["method"] == "monte_carlo" and res["n_trials"] == 20
    assert 0 < res["mean_error"] < 1e-2
    check_manifest(tmp_path / "o", "simulate")


# -- simulate ------------------------------------------------------------------------


def test_simulate_sweep_table(tmp_path):
    cfg = write(
        tmp_path / "sim.json",
        {
            "drive": {"kind": "one_photon", "omega0_rad_per_s": W},
            "gate": {"N": 0.5},
            "noise": {"phase": {"kind": "white", "h0_hz2_per_hz": 100}},
            "trials": 200,
            "seed": 2,
            "sweep": {"param": "noise.phase.h0_hz2_per_hz", "values": [1000, 2000, 4000]},
        },
    )
    r = run("simulate", cfg, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    with open(tmp_path / "o" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["sweep_param", "error", "stderr"]
    errs = [float(row["error"]) for row in rows]
    assert errs[0] < errs[1] < errs[2]
    check_manifest(tmp_path / "o", "simulate")


def test_simulate_deterministic(tmp_path):
    cfg = write(tmp_path / "sim.json", {"gate": {"N": 1}, "noise": {"phase": {"kind": "white", "h0_hz2_per_hz": 100}}, "trials": 10})
    run("simulate", cfg, "--out-dir", tmp_path / "a", "--seed", 5)
    run("simulate", cfg, "--out-dir", tmp_path / "b", "--seed", 5)
    assert (tmp_path / "a" / "result.json").read_bytes() == (tmp_path / "b" / "result.json").read_bytes()


@pytest.mark.parametrize(
    "patch",
    [{"trials": 0}, {"gate": {"N": 0.3}}, {"gate": {"N": 0.5, "t_g_s": 1e-6}}, {"drive": {"kind": "warp"}}, {"sweep": {"param": "noise.nothing.h0", "values": [1]}}],
    ids=["trials", "N", "gate", "drive", "sweep"],
)
def test_simulate_validation(tmp_path, patch):
    base = {"gate": {"N": 0.5}, "noise": {"phase": {"kind": "white", "h0_hz2_per_hz": 1}}, "trials": 4}
    base.update(patch)
    r = run("simulate", write(tmp_path / "sim.json", base), "--out-dir", tmp_path / "o")
    assert r.exit_code == 2, r.output


# -- analytic ------------------------------------------------------------------------


def test_analytic_benchmark(tmp_path):
    q = write(tmp_path / "q.json", {"$schema": "lasernoise/analytic/v1", "model": {"kind": "white", "h0_hz2_per_hz": 40}, "N": 0.5, "omega0_rad_per_s": W})
    r = run("analytic", q, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "o" / "analytic.json").read_text())
    assert doc["mean_error"] == pytest.approx(9.87e-5, rel=1e-3)
    assert doc["method"] == "analytic"
    check_manifest(tmp_path / "o", "analytic")


def test_analytic_off_gate_uses_quadrature(tmp_path):
    q = write(tmp_path / "q.json", {"model": {"kind": "white", "h0_hz2_per_hz": 40}, "t_g_s": 3.3e-7, "omega0_rad_per_s": W})
    r = run("analytic", q, "--out-dir", tmp_path / "o")
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "o" / "analytic.json").read_text())
    assert doc["method"] == "quadrature" and doc["mean_error"] > 0


def test_analytic_other_quantities(tmp_path):
    q = write(tmp_path / "q.json", {"quantity": "intensity", "sigma2": [8e-5, 8e-5], "N": 0.5})
    assert run("analytic", q, "--out-dir", tmp_path / "a").exit_code == 0
    doc = json.loads((tmp_path / "a" / "analytic.json").read_text())
    assert doc["mean_error"] == pytest.approx(math.pi**2 * 1.6e-4 / 16)
    q = write(tmp_path / "q.json", {"quantity": "quasistatic", "h0_hz2_per_hz": 3180, "fc_hz": 100, "N": 0.5, "omega0_rad_per_s": W})
    assert run("analytic", q, "--out-dir", tmp_path / "b").exit_code == 0
    doc = json.loads((tmp_path / "b" / "analytic.json").read_text())
    assert doc["mean_error"] == pytest.approx(6.4e-7, rel=0.01)


@pytest.mark.parametrize(
    "query",
    [
        {"model": {"kind": "white", "h0_hz2_per_hz": 40}, "N": 0.5, "omega0_rad_per_s": W, "averaging": "bogus"},
        {"model": {"kind": "white", "h0_hz2_per_hz": 40}, "omega0_rad_per_s": W},
        {"quantity": "entropy"},
    ],
    ids=["averaging", "no-gate", "quantity"],
)
def test_analytic_validation(tmp_path, query):
    r = run("analytic", write(tmp_path / "q.json", query), "--out-dir", tmp_path / "o")
    assert r.exit_code == 2


def test_console_script_installed(tmp_path):
    exe = shutil.which("lasernoise")
    if exe is None:
        pytest.skip("console script not on PATH")
    q = write(tmp_path / "q.json", {"model": {"kind": "white", "h0_hz2_per_hz": 40}, "N": 0.5, "omega0_rad_per_s": W})
    p = subprocess.run([exe, "analytic", str(q), "--out-dir", str(tmp_path / "o")], capture_output=True, text=True)
    assert p.returncode == 0
    bad = write(tmp_path / "bad.json", '{"model":')
    p = subprocess.run([exe, "analytic", str(bad), "--out-dir", str(tmp_path / "o")], capture_output=True, text=True)
    assert p.returncode == 2
