"""``lasernoise`` command-line tool.

Every subcommand reads a JSON config (SI units, unit-suffixed keys), writes
its outputs plus ``manifest.json`` into ``--out-dir`` and exits with

* 0 on success,
* 2 on invalid input,
* 3 on numerical failure,
* 4 on file-system errors.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analytic import (
    error_bandlimited_1p,
    error_general,
    error_intensity,
    error_quasistatic,
    error_servo_1p,
    error_white_1p,
)
from .common import Averaging, ErrorEstimate, Method, check_half_integer
from .dynamics import (
    GateSpec,
    InitialState,
    IntegratorConfig,
    drive_from_dict,
    drive_to_dict,
    monte_carlo_error,
    monte_carlo_error_averaged,
)
from .errors import LaserNoiseError, NumericalError, ValidationError
from .fitting import DEFAULT_PEAK_WINDOW, error_budget, fit_noise_model, fit_peak, normalize_record, read_spectrum_csv
from .heterodyne import HeterodyneConfig, lineshape_SE, self_het_spectrum
from .spectra import BandLimitedWhite, ServoBump, White, iter_terms, model_from_dict, model_to_dict
from .synth import SynthesisConfig, TraceKind, synth_frequency_trace, synth_intensity_trace, synth_phase_trace

_SYNTH = {
    TraceKind.PHASE: synth_phase_trace,
    TraceKind.FREQUENCY: synth_frequency_trace,
    TraceKind.INTENSITY: synth_intensity_trace,
}
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
SCHEMA_PREFIX = "lasernoise/"


# -- plumbing ------------------------------------------------------------------


class _Fail(click.ClickException):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


def _guard(fn):
    """Map library exceptions to exit codes."""

    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _Fail:
            raise
        except ValidationError as exc:
            raise _Fail(f"validation error: {exc}", EXIT_VALIDATION) from None
        except NumericalError as exc:
            raise _Fail(f"numerical failure: {exc}", EXIT_NUMERICAL) from None
        except LaserNoiseError as exc:
            raise _Fail(f"error: {exc}", EXIT_VALIDATION) from None
        except OSError as exc:
            raise _Fail(f"I/O error: {exc}", EXIT_IO) from None

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _Fail(f"I/O error: {exc}", EXIT_IO) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: JSON does not parse (line {exc.lineno}: {exc.msg})") from None


def _load_config(path, kind):
    cfg = _load_json(path)
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    schema = cfg.get("$schema")
    if schema is not None and not str(schema).startswith(SCHEMA_PREFIX + kind):
        raise ValidationError(f"field '$schema' is {schema!r}, expected '{SCHEMA_PREFIX}{kind}/v1'")
    return cfg


def _num(cfg, key, default=None, required=False, positive=False, integer=False):
    if key not in cfg or cfg[key] is None:
        if required:
            raise ValidationError(f"missing field '{key}'")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"field '{key}' must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ValidationError(f"field '{key}' must be an integer, got {v!r}")
    if positive and not v > 0:
        raise ValidationError(f"field '{key}' must be > 0, got {v!r}")
    return int(v) if integer else float(v)


def _digest(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode()
    return "sha256:" + hashlib.sha256(blob).hexdigest()


def _file_digest(path):
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir, command, resolved, seed, outputs):
    """Write ``manifest.json`` listing every output with its digest."""
    out_dir = Path(out_dir)
    files = []
    for p in outputs:
        p = Path(p)
        files.append({"path": p.name, "sha256": _file_digest(p)[7:]})
    manifest = {
        "command": command,
        "config": resolved,
        "config_digest": _digest(resolved),
        "seed": int(seed) & ((1 << 64) - 1),
        "artifact_version": __version__,
        "outputs": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _out_dir(path):
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Fail(f"I/O error: {exc}", EXIT_IO) from None
    return p


def _model(value, base_dir, field):
    """Noise model from an inline JSON object or a path to a JSON file."""
    if isinstance(value, str):
        path = Path(value)
        if not path.is_absolute():
            path = Path(base_dir) / path
        value = _load_json(path)
    if not isinstance(value, dict):
        raise ValidationError(f"field '{field}' must be a noise model object or a file path")
    try:
        return model_from_dict(value)
    except ValidationError as exc:
        raise ValidationError(f"{field}: {exc}") from None


# -- commands ------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="lasernoise")
def main():
    """Laser phase-noise spectra, heterodyne analysis and qubit gate errors."""


def _common(fn):
    fn = click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True, help="Output directory.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    return fn


@main.command("synth")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common
@click.option("--trials", type=int, default=None, help="Number of independent traces.")
@_guard
def cmd_synth(config_path, out_dir, seed, trials):
    """Synthesize noise traces (CSV ``time_s,value``)."""
    cfg = _load_config(config_path, "synth")
    if "model" not in cfg:
        raise ValidationError("missing field 'model'")
    model = _model(cfg["model"], Path(config_path).parent, "model")
    try:
        kind = TraceKind(cfg.get("trace", "phase"))
    except ValueError:
        raise ValidationError(f"field 'trace' must be one of {[k.value for k in TraceKind]}") from None
    seed = seed if seed is not None else _num(cfg, "seed", 0, integer=True)
    n = trials if trials is not None else _num(cfg, "trials", 1, integer=True)
    if n < 1:
        raise ValidationError("field 'trials' must be >= 1")
    scfg = SynthesisConfig(
        _num(cfg, "duration_s", 50e-6, positive=True), _num(cfg, "bandwidth_hz", 10e6, positive=True), seed
    )
    channel = _num(cfg, "channel", 0, integer=True)
    first = _num(cfg, "trial", 0, integer=True)
    out = _out_dir(out_dir)
    outputs = []
    for i in range(n):
        tr = _SYNTH[kind](model, scfg, trial=first + i, channel=channel)
        name = "trace.csv" if n == 1 else f"trace_{first + i:04d}.csv"
        outputs += list(tr.to_csv(out / name))
    resolved = {
        "model": model_to_dict(model),
        "trace": kind.value,
        "synthesis": scfg.to_dict(),
        "channel": channel,
        "first_trial": first,
        "trials": n,
    }
    _write_manifest(out, "synth", resolved, seed, outputs)
    click.echo(f"wrote {n} trace(s) with M={scfg.num_samples_M} samples to {out}")


def _freq_grid(cfg):
    if "frequencies_hz" in cfg:
        g = np.asarray(cfg["frequencies_hz"], dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValidationError("field 'frequencies_hz' must be a non-empty list")
        return g
    fmax = _num(cfg, "freq_max_hz", 1e5, positive=True)
    n = _num(cfg, "n_freq", 1001, integer=True)
    if n < 2:
        raise ValidationError("field 'n_freq' must be >= 2")
    return np.linspace(0.0, fmax, n)


@main.command("heterodyne")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common
@_guard
def cmd_heterodyne(config_path, out_dir, seed):
    """Self-heterodyne or lineshape spectra of a noise model."""
    cfg = _load_config(config_path, "heterodyne")
    if "model" not in cfg:
        raise ValidationError("missing field 'model'")
    model = _model(cfg["model"], Path(config_path).parent, "model")
    td = _num(cfg, "td_s", required=True, positive=True)
    spectrum = cfg.get("spectrum", "self_heterodyne")
    if spectrum not in ("self_heterodyne", "lineshape"):
        raise ValidationError("field 'spectrum' must be 'self_heterodyne' or 'lineshape'")
    modes = cfg.get("modes", ["exact"])
    if isinstance(modes, str):
        modes = [modes]
    allowed = ("exact", "weak_noise", "fit_form") if spectrum == "self_heterodyne" else ("exact", "approximate")
    for m in modes:
        if m not in allowed:
            raise ValidationError(f"field 'modes' has unknown value {m!r}; allowed {list(allowed)}")
    hcfg = HeterodyneConfig(
        delay_td=td,
        freq_grid=_freq_grid(cfg),
        tau_max=_num(cfg, "tau_max_s", None, positive=True),
        shift_nu_s=_num(cfg, "shift_hz", 0.0),
    )
    out = _out_dir(out_dir)
    outputs = []
    for m in modes:
        curve = self_het_spectrum(model, hcfg, m) if spectrum == "self_heterodyne" else lineshape_SE(model, hcfg, m)
        path = curve.to_csv(out / f"{spectrum}_{m}.csv")
        outputs += [path, path.with_suffix(".json")]
    resolved = {
        "model": model_to_dict(model),
        "td_s": td,
        "spectrum": spectrum,
        "modes": list(modes),
        "frequencies_hz": hcfg.freq_grid.tolist(),
        "tau_max_s": hcfg.tau_max,
    }
    _write_manifest(out, "heterodyne", resolved, seed or 0, outputs)
    click.echo(f"wrote {len(modes)} spectrum file(s) to {out}")


@main.command("fit")
@click.argument("data_path", type=click.Path(dir_okay=False))
@click.argument("meta_path", type=click.Path(dir_okay=False))
@click.option("--n-bumps", type=int, default=0, show_default=True, help="Number of servo bumps.")
@click.option("--peak-window-hz", type=float, default=DEFAULT_PEAK_WINDOW, show_default=True)
@click.option("--omega0-rad-per-s", type=float, default=None, help="Rabi frequency for the error budget.")
@click.option("--N", "N", type=float, default=0.5, show_default=True, help="Gate rotation in periods.")
@click.option("--averaging", default="initial_x", show_default=True)
@_common
@_guard
def cmd_fit(data_path, meta_path, n_bumps, peak_window_hz, omega0_rad_per_s, N, averaging, out_dir, seed):
    """Fit a measured self-heterodyne spectrum (CSV ``freq_hz,psd`` + JSON meta)."""
    if n_bumps < 0:
        raise ValidationError("--n-bumps must be >= 0")
    for p in (data_path, meta_path):
        if not Path(p).is_file():
            raise _Fail(f"I/O error: no such file {p}", EXIT_IO)
    record = read_spectrum_csv(data_path, meta_path)
    peak = fit_peak(record, peak_window_hz)
    norm = normalize_record(record, peak)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_noise_model(norm, n_bumps, peak_window=peak_window_hz)
    out = _out_dir(out_dir)
    doc = fit.to_dict()
    doc["fit"]["peak"] = {
        "alpha": peak.alpha,
        "sigma_hz": peak.sigma,
        "s_p": peak.s_p,
        "fwhm_hz": peak.fwhm,
        "power": peak.power,
    }
    doc["fit"]["center_found_hz"] = record.center_found
    doc["fit"]["warnings"] = [str(w.message) for w in caught]
    fit_path = out / "fit.json"
    fit_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    lines = [
        f"center: {record.center_found:.6g} Hz",
        f"peak: alpha={peak.alpha:.4g} sigma={peak.sigma:.4g} Hz FWHM={peak.fwhm:.4g} Hz",
        f"h0 = {fit.h0:.5g} Hz^2/Hz (+- {fit.std_errors[0]:.2g})",
    ]
    for k, b in enumerate(fit.bumps):
        se = fit.std_errors[1 + 3 * k : 4 + 3 * k]
        lines.append(
            f"bump {k + 1}: hg={b.hg:.5g} (+- {se[0]:.2g}) sigma_g={b.sigma_g:.5g} Hz (+- {se[1]:.2g}) "
            f"fg={b.fg:.6g} Hz (+- {se[2]:.2g}) s_g={b.s_g:.3g}"
        )
    lines.append(f"log-residual rms: {fit.residual_norm:.4g}")
    lines += [f"warning: {w.message}" for w in caught]
    outputs = [fit_path]
    if omega0_rad_per_s is not None:
        budget = error_budget(fit, omega0_rad_per_s, N, averaging)
        lines += ["", budget.report()]
        bpath = out / "budget.json"
        bpath.write_text(json.dumps(budget.to_dict(), indent=2, sort_keys=True) + "\n")
        outputs.append(bpath)
    rpath = out / "report.txt"
    rpath.write_text("\n".join(lines) + "\n")
    outputs.append(rpath)
    resolved = {
        "data_sha256": _file_digest(data_path)[7:],
        "meta": _load_json(meta_path),
        "n_bumps": n_bumps,
        "peak_window_hz": peak_window_hz,
        "omega0_rad_per_s": omega0_rad_per_s,
        "N": N,
        "averaging": averaging,
    }
    _write_manifest(out, "fit", resolved, seed or 0, outputs)
    click.echo("\n".join(lines))


# -- simulate ------------------------------------------------------------------


def _set_path(doc, path, value):
    """Assign ``value`` at a dotted path (list indices allowed)."""
    keys = path.split(".")
    cur = doc
    for k in keys[:-1]:
        if isinstance(cur, list):
            try:
                cur = cur[int(k)]
            except (ValueError, IndexError):
                raise ValidationError(f"sweep path '{path}': bad index {k!r}") from None
        elif isinstance(cur, dict) and k in cur:
            cur = cur[k]
        else:
            raise ValidationError(f"sweep path '{path}': no field {k!r}")
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    elif isinstance(cur, dict):
        cur[last] = value
    else:
        raise ValidationError(f"sweep path '{path}' does not name a field")


def _resolve_noise(cfg, base_dir):
    noise = cfg.get("noise", {})
    if not isinstance(noise, dict):
        raise ValidationError("field 'noise' must be an object keyed by channel")
    out = {}
    for ch, val in noise.items():
        if val is None:
            continue
        out[ch] = model_to_dict(_model(val, base_dir, f"noise.{ch}"))
    return out


def _gate(cfg):
    g = cfg.get("gate", {})
    if not isinstance(g, dict):
        raise ValidationError("field 'gate' must be an object")
    try:
        state = InitialState(g.get("initial_state", "x_plus"))
    except ValueError:
        raise ValidationError(f"field 'gate.initial_state' must be one of {[s.value for s in InitialState]}") from None
    N = g.get("N")
    t_g = g.get("t_g_s")
    if N is None and t_g is None:
        N = 0.5
    averaging = Averaging.parse(g.get("averaging", "initial_x"))
    return GateSpec(N=N, t_g=t_g, initial_state=state), averaging


def _simulate_one(cfg, trials, seed):
    drive = drive_from_dict(cfg.get("drive", {"kind": "one_photon"}))
    gate, averaging = _gate(cfg)
    s = cfg.get("synthesis", {})
    scfg = SynthesisConfig(
        _num(s, "duration_s", 50e-6, positive=True), _num(s, "bandwidth_hz", 10e6, positive=True), seed
    )
    icfg_d = cfg.get("integrator", {})
    icfg = None
    if icfg_d:
        icfg = IntegratorConfig(
            rel_tol=_num(icfg_d, "rel_tol", 1e-10, positive=True),
            abs_tol=_num(icfg_d, "abs_tol", 1e-10, positive=True),
            max_step=_num(icfg_d, "max_step_s", None, positive=True),
        )
    noise = {k: model_from_dict(v) for k, v in cfg["noise"].items()}
    if averaging is Averaging.STATE_AVERAGED:
        return monte_carlo_error_averaged(drive, gate, noise, trials, seed, icfg, scfg)
    return monte_carlo_error(drive, gate, noise, trials, seed, icfg, scfg, frame=cfg.get("frame", "lab"))


@main.command("simulate")
@click.argument("config_path", type=click.Path(dir_okay=False))
@_common
@click.option("--trials", type=int, default=None, help="Override the number of Monte Carlo trials.")
@_guard
def cmd_simulate(config_path, out_dir, seed, trials):
    """Monte Carlo gate error, optionally swept over one config field."""
    cfg = _load_config(config_path, "simulate")
    base = Path(config_path).parent
    resolved = copy.deepcopy(cfg)
    resolved.pop("$schema", None)
    resolved["noise"] = _resolve_noise(cfg, base)
    resolved["drive"] = drive_to_dict(drive_from_dict(cfg.get("drive", {"kind": "one_photon", "omega0_rad_per_s": 2 * math.pi * 1e6})))
    resolved["trials"] = trials if trials is not None else _num(cfg, "trials", 500, integer=True)
    resolved["seed"] = seed if seed is not None else _num(cfg, "seed", 0, integer=True)
    if resolved["trials"] < 2:
        raise ValidationError(f"field 'trials' must be >= 2, got {resolved['trials']}")
    sweep = cfg.get("sweep")
    out = _out_dir(out_dir)
    outputs = []
    if sweep is None:
        est = _simulate_one(resolved, resolved["trials"], resolved["seed"])
        doc = est.to_dict()
    else:
        if not isinstance(sweep, dict) or "param" not in sweep or "values" not in sweep:
            raise ValidationError("field 'sweep' needs 'param' and 'values'")
        values = sweep["values"]
        if not isinstance(values, list) or not values:
            raise ValidationError("field 'sweep.values' must be a non-empty list")
        rows = []
        for v in values:
            run = copy.deepcopy(resolved)
            _set_path(run, sweep["param"], v)
            run["noise"] = {k: model_to_dict(model_from_dict(m)) for k, m in run["noise"].items()}
            est = _simulate_one(run, run["trials"], run["seed"])
            rows.append((v, est))
        spath = out / "sweep.csv"
        with open(spath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sweep_param", "error", "stderr"])
            for v, est in rows:
                w.writerow([repr(float(v)), repr(est.mean_error), repr(est.std_error)])
        outputs.append(spath)
        doc = {"sweep_param": sweep["param"], "results": [dict(value=v, **e.to_dict()) for v, e in rows]}
    rpath = out / "result.json"
    rpath.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    outputs.insert(0, rpath)
    _write_manifest(out, "simulate", resolved, resolved["seed"], outputs)
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


# -- analytic ------------------------------------------------------------------


def _analytic_terms(model, N, omega0, averaging):
    """Sum of closed-form errors over the model's terms; returns (value, valid, parts)."""
    total, valid, parts = 0.0, True, []
    for t in iter_terms(model):
        if isinstance(t, White):
            e = error_white_1p(t.h0, N, omega0, averaging)
        elif isinstance(t, ServoBump):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                e = error_servo_1p(t.s_g, t.fg, N, omega0, averaging)
        elif isinstance(t, BandLimitedWhite):
            r = error_bandlimited_1p(t.h0, t.fc, N, omega0, averaging)
            e, valid = r.value, valid and r.valid
        else:  # pragma: no cover - iter_terms flattens composites
            raise ValidationError(f"unsupported term {t!r}")
        parts.append({"term": model_to_dict(t), "error": e})
        total += e
    return total, valid, parts


@main.command("analytic")
@click.argument("query_path", type=click.Path(dir_okay=False))
@_common
@_guard
def cmd_analytic(query_path, out_dir, seed):
    """Closed-form or quadrature gate errors for a query JSON."""
    q = _load_config(query_path, "analytic")
    averaging = Averaging.parse(q.get("averaging", "initial_x"))
    quantity = q.get("quantity", "model")
    extra = {}
    if quantity == "intensity":
        N = check_half_integer(_num(q, "N", 0.5))
        sig = q.get("sigma2", q.get("sigma"))
        if sig is None:
            raise ValidationError("missing field 'sigma2' (relative-intensity variances)")
        value = error_intensity(sig, N)
        method = Method.ANALYTIC
    elif quantity == "quasistatic":
        N = check_half_integer(_num(q, "N", 0.5))
        omega = _num(q, "omega0_rad_per_s", required=True, positive=True)
        value = error_quasistatic(
            _num(q, "h0_hz2_per_hz", required=True), _num(q, "fc_hz", required=True, positive=True), N, omega, averaging
        )
        method = Method.ANALYTIC
    elif quantity == "model":
        if "model" not in q:
            raise ValidationError("missing field 'model'")
        base = Path(query_path).parent
        models = [_model(q["model"], base, "model")]
        if "model2" in q:
            models.append(_model(q["model2"], base, "model2"))
        omega = _num(q, "omega0_rad_per_s", required=True, positive=True)
        t_g = _num(q, "t_g_s", None, positive=True)
        N = _num(q, "N", None)
        if t_g is None and N is None:
            raise ValidationError("set 'N' or 't_g_s'")
        on_gate = t_g is None
        if t_g is not None and N is not None:
            N = check_half_integer(N)
            on_gate = abs(t_g - 2 * math.pi * N / omega) <= 1e-12 * t_g
        if on_gate and q.get("method", "auto") != "quadrature":
            N = check_half_integer(N)
            value, valid, parts = 0.0, True, []
            for m in models:
                v, ok, p = _analytic_terms(m, N, omega, averaging)
                value, valid, parts = value + v, valid and ok, parts + p
            extra = {"valid": valid, "components": parts}
            method = Method.ANALYTIC
        else:
            t = t_g if t_g is not None else 2 * math.pi * check_half_integer(N) / omega
            value = sum(error_general(m, omega, t, averaging) for m in models)
            extra = {"t_g_s": t}
            method = Method.QUADRATURE
    else:
        raise ValidationError(f"field 'quantity' must be 'model', 'quasistatic' or 'intensity', got {quantity!r}")
    est = ErrorEstimate(float(value), 0.0, 0, method)
    doc = dict(est.to_dict(), **extra)
    out = _out_dir(out_dir)
    rpath = out / "analytic.json"
    rpath.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    resolved = dict(q)
    resolved.pop("$schema", None)
    _write_manifest(out, "analytic", resolved, seed or 0, [rpath])
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
