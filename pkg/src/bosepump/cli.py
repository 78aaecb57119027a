"""Config-driven experiment runner with reproducible run directories.

Experiments are dispatched by name from one defaults table. Every run gets
its own directory under <out>/<experiment>/<timestamp>-<seed>/ with fixed
file names, and the manifest is written before any computation starts, so
an interrupted run leaves a diagnosable record. Replaying a manifest
reproduces the data files byte for byte; only the fresh manifest differs
(it carries its own timestamps).

Exit codes: 0 success, 2 schema problem, 3 infeasible parameters,
4 integrator failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from math import pi
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .circuit import (
    derive_params,
    flux_for_frequency,
    inverse_design,
    tuning_range_report,
)
from .effective import effective_hopping, three_band_spectrum
from .fockspace import build_basis
from .meanfield import TrimerFrequencies, bdg_scan, gap_closing_scan
from .model import ModelParams, PhaseSweep, loop_winding_number, square_loop
from .opensys import fig5_experiment
from .propagate import StateVector, pump_run
from .robustness import noise_sweep

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_INTEGRATOR = 4

# One defaults table; each entry is what the named experiment runs out of
# the box. All experiments sit at the usual operating point Delta = 10J,
# U = -J with a three-photon cluster unless a parameter says otherwise.
EXPERIMENT_DEFAULTS = {
    # forward pump, one slow cycle: COM moves one cell toward m = 0
    "fig2a": {
        "l": 30,
        "n_photons": 3,
        "site": 15,
        "n_max": 3,
        "delta": 10.0,
        "u": -1.0,
        "j": 1.0,
        "omega": 0.01,
        "phi0": 0.0,
        "cycles": 1.0,
        "dt": 0.05,
        "record_stride": 25,
    },
    # quarter-phase start on the middle band, five times slower: the COM
    # moves two cells the other way per cycle
    "fig2c": {
        "l": 30,
        "n_photons": 3,
        "site": 15,
        "n_max": 3,
        "delta": 10.0,
        "u": -1.0,
        "j": 1.0,
        "omega": 0.002,
        "phi0": 0.5 * pi,
        "cycles": 1.0,
        "dt": 0.05,
        "record_stride": 125,
    },
    # square detuning loop of the same duration that encloses no
    # degeneracy: no transport, winding number zero
    "fig4a": {
        "l": 30,
        "n_photons": 3,
        "site": 15,
        "n_max": 3,
        "delta": 10.0,
        "u": -1.0,
        "j": 1.0,
        "omega": 0.01,
        "phi0": 0.0,
        "cycles": 1.0,
        "dt": 0.05,
        "record_stride": 25,
    },
    # noise amplitude sweep on the forward-pump baseline
    "fig4b": {
        "etas": [0.0, 0.25, 0.5, 1.0, 2.0, 5.0],
        "realizations": 10,
        "dt": 0.05,
    },
    # lossy nine-site array, three pump cycles of trajectory averaging
    "fig5": {
        "n_traj": 200,
        "units": "angular",
        "cycles": 3.0,
        "dt": 0.05,
        "record_stride": 10,
        "t1": None,
    },
    # exact trimer spectrum across one pump cycle of the phase
    "bands": {
        "delta": 10.0,
        "u": -1.0,
        "j": 1.0,
        "n_phi": 720,
    },
    # fluctuation bands about the empty lattice plus the phase scan for
    # frequency coincidences
    "meanfield": {
        "delta": 10.0,
        "u": -1.0,
        "j": 1.0,
        "phi0": 0.0,
        "n_k": 241,
        "n_phi": 720,
    },
    # element values hitting 5 GHz / -40 MHz targets at the top of a
    # +-0.4 GHz flux-tuning window (angular units)
    "circuit": {
        "omega0": 5.0e9,
        "delta_range": 4.0e8,
        "j": -4.0e7,
        "u": -4.0e7,
        "n_flux": 41,
    },
}

_TOP_KEYS = ("experiment", "seed", "out", "params")


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: severity, config key path, reason.

    severity is "error" for schema problems, "infeasible" for well-formed
    values outside the physical domain, "warning" for allowed-but-dubious
    settings that do not block a run.
    """

    severity: str
    key: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.key}: {self.message}"


@dataclass
class ExperimentResult:
    exit_code: int
    run_dir: Path | None
    outputs: tuple
    diagnostics: list


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _type_diagnostics(exp, params_in):
    defaults = EXPERIMENT_DEFAULTS[exp]
    diags = []
    for key, value in params_in.items():
        path = f"params.{key}"
        if key not in defaults:
            known = ", ".join(sorted(defaults))
            diags.append(
                Diagnostic("error", path, f"unknown parameter for {exp}; known: {known}")
            )
            continue
        default = defaults[key]
        if key == "units":
            if value not in ("angular", "linear"):
                diags.append(
                    Diagnostic("error", path, "must be 'angular' or 'linear'")
                )
        elif key == "t1":
            if value is not None and not _is_number(value):
                diags.append(Diagnostic("error", path, "must be a number or null"))
        elif key == "etas":
            if not isinstance(value, (list, tuple)) or not value:
                diags.append(Diagnostic("error", path, "must be a non-empty list"))
            elif not all(_is_number(e) for e in value):
                diags.append(Diagnostic("error", path, "entries must be numbers"))
        elif isinstance(default, int):
            if not isinstance(value, int) or isinstance(value, bool):
                diags.append(Diagnostic("error", path, "must be an integer"))
        else:
            if not _is_number(value):
                diags.append(Diagnostic("error", path, "must be a number"))
    return diags


def _value_diagnostics(exp, p):
    diags = []

    def bad(key, msg):
        diags.append(Diagnostic("infeasible", f"params.{key}", msg))

    def warn(key, msg):
        diags.append(Diagnostic("warning", f"params.{key}", msg))

    if exp == "circuit":
        if p["omega0"] <= 0:
            bad("omega0", "target frequency must be positive")
        if p["delta_range"] < 0:
            bad("delta_range", "tuning half-range must be >= 0")
        elif p["omega0"] > 0 and p["delta_range"] >= p["omega0"]:
            bad("delta_range", "tuning half-range must stay below omega0")
        if p["j"] >= 0:
            bad("j", "capacitive hopping target must be negative")
        if p["u"] >= 0:
            bad("u", "Kerr target must be negative")
        if p["n_flux"] < 1:
            bad("n_flux", "need at least one flux point")
        return diags

    if "delta" in p and p["delta"] <= 0:
        bad("delta", "modulation amplitude must be positive")
    if "j" in p and p["j"] <= 0:
        bad("j", "hopping must be positive")
    if "u" in p and p["u"] > 0:
        bad("u", "interaction must be attractive or zero")
    if "omega" in p and p["omega"] <= 0:
        bad("omega", "pump rate must be positive")
    if "cycles" in p and p["cycles"] <= 0:
        bad("cycles", "cycle count must be positive")
    if "dt" in p and p["dt"] <= 0:
        bad("dt", "step size must be positive")
    if "record_stride" in p and p["record_stride"] < 1:
        bad("record_stride", "stride must be >= 1")
    if "l" in p:
        if p["l"] < 1:
            bad("l", "need at least one site")
        elif p["l"] % 3 != 0:
            warn("l", "not a multiple of the three-site cell")
        if p["l"] >= 1 and not 0 <= p["site"] < p["l"]:
            bad("site", f"initial site must lie in [0, {p['l']})")
    if "n_photons" in p:
        if p["n_photons"] < 1:
            bad("n_photons", "need at least one photon")
        if p["n_max"] < 1:
            bad("n_max", "per-site cap must be >= 1")
        elif p["n_max"] < p["n_photons"]:
            bad("n_max", "cap below the photon number excludes the initial state")
    if "n_traj" in p and p["n_traj"] < 1:
        bad("n_traj", "need at least one trajectory")
    if "realizations" in p and p["realizations"] < 1:
        bad("realizations", "need at least one realization")
    if "t1" in p and p["t1"] is not None and p["t1"] <= 0:
        bad("t1", "loss time must be positive (or null for the default)")
    if "etas" in p and any(e < 0 for e in p["etas"]):
        bad("etas", "noise amplitudes must be >= 0")
    for key in ("n_phi", "n_k"):
        if key in p and p[key] < 2:
            bad(key, "grid needs at least two points")

    if "omega" in p and "u" in p and "j" in p and p["u"] != 0 and p["j"] > 0:
        gap = 2.0 * effective_hopping(p["j"], p["u"])
        if p["omega"] >= gap:
            warn(
                "omega",
                f"pump rate {p['omega']:.4g} is not small against the "
                f"protecting gap {gap:.4g}; transport may not be adiabatic",
            )
    return diags


def validate_config(config):
    """Diagnostics for a configuration mapping; empty means fully clean.

    Schema errors (unknown keys, wrong types) block the run with exit code
    2, infeasible values with exit code 3; warnings are reported but the
    run proceeds.
    """
    if not isinstance(config, dict):
        return [Diagnostic("error", "<root>", "configuration must be a mapping")]
    exp = config.get("experiment")
    if exp is None:
        return [Diagnostic("error", "experiment", "required key is missing")]
    if exp not in EXPERIMENT_DEFAULTS:
        known = ", ".join(sorted(EXPERIMENT_DEFAULTS))
        return [Diagnostic("error", "experiment", f"unknown experiment {exp!r}; known: {known}")]

    diags = []
    for key in config:
        if key not in _TOP_KEYS:
            diags.append(
                Diagnostic("error", key, f"unknown top-level key; known: {', '.join(_TOP_KEYS)}")
            )
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        diags.append(Diagnostic("error", "seed", "must be an integer"))
    elif seed < 0:
        diags.append(Diagnostic("error", "seed", "must be >= 0"))
    out = config.get("out", "runs")
    if not isinstance(out, str):
        diags.append(Diagnostic("error", "out", "must be a directory path string"))
    params_in = config.get("params", {}) or {}
    if not isinstance(params_in, dict):
        diags.append(Diagnostic("error", "params", "must be a mapping"))
        return diags

    diags.extend(_type_diagnostics(exp, params_in))
    if any(d.severity == "error" for d in diags):
        return diags
    merged = {**EXPERIMENT_DEFAULTS[exp], **params_in}
    diags.extend(_value_diagnostics(exp, merged))
    return diags


def _cluster_initial_state(l, n_photons, site, n_max):
    basis = build_basis(l, n_photons, n_max)
    occ = [0] * l
    occ[site] = n_photons
    return basis, StateVector.from_occupation(basis, tuple(occ))


def _run_pump(p, seed, run_dir, workers):
    params = ModelParams(L=p["l"], delta=float(p["delta"]), U=float(p["u"]), J=float(p["j"]))
    path = PhaseSweep(omega=float(p["omega"]), phi0=float(p["phi0"]), cycles=float(p["cycles"]))
    basis, psi0 = _cluster_initial_state(p["l"], p["n_photons"], p["site"], p["n_max"])
    series = pump_run(
        basis, params, path, psi0, dt=float(p["dt"]), record_stride=p["record_stride"]
    )
    series.to_csv(run_dir / "observables.csv")
    return ["observables.csv"]


def _run_loop(p, seed, run_dir, workers):
    params = ModelParams(L=p["l"], delta=float(p["delta"]), U=float(p["u"]), J=float(p["j"]))
    duration = float(p["cycles"]) * 2.0 * pi / float(p["omega"])
    loop = square_loop(float(p["delta"]), duration)
    basis, psi0 = _cluster_initial_state(p["l"], p["n_photons"], p["site"], p["n_max"])
    series = pump_run(
        basis, params, loop, psi0, dt=float(p["dt"]), record_stride=p["record_stride"]
    )
    series.to_csv(run_dir / "observables.csv")
    sweep = PhaseSweep(omega=float(p["omega"]), phi0=float(p["phi0"]), cycles=float(p["cycles"]))
    windings = {
        "square_loop": loop_winding_number(loop, params),
        "phase_sweep": loop_winding_number(sweep, params),
    }
    with open(run_dir / "windings.json", "w", encoding="utf-8") as fh:
        json.dump(windings, fh, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return ["observables.csv", "windings.json"]


def _run_noise(p, seed, run_dir, workers):
    result = noise_sweep(
        etas=tuple(float(e) for e in p["etas"]),
        realizations=p["realizations"],
        seed=seed,
        dt=float(p["dt"]),
    )
    result.to_csv(run_dir / "observables.csv")
    return ["observables.csv"]


def _run_lossy(p, seed, run_dir, workers):
    series = fig5_experiment(
        n_traj=p["n_traj"],
        seed=seed,
        units=p["units"],
        cycles=float(p["cycles"]),
        dt=float(p["dt"]),
        record_stride=p["record_stride"],
        t1=None if p["t1"] is None else float(p["t1"]),
        workers=workers,
    )
    series.to_csv(run_dir / "observables.csv")
    return ["observables.csv"]


def _run_bands(p, seed, run_dir, workers):
    phi = np.linspace(0.0, 2.0 * pi, p["n_phi"], endpoint=False)
    scan = three_band_spectrum(float(p["delta"]), float(p["u"]), float(p["j"]), phi)
    scan.to_csv(run_dir / "bands.csv")
    return ["bands.csv"]


def _run_meanfield(p, seed, run_dir, workers):
    omega = TrimerFrequencies.from_phase(float(p["phi0"]), float(p["delta"]))
    k = np.linspace(-pi, pi, p["n_k"])
    bdg_scan(k, omega, float(p["j"]), float(p["u"])).to_csv(run_dir / "bands.csv")
    phi = np.linspace(0.0, 2.0 * pi, p["n_phi"], endpoint=False)
    closings = gap_closing_scan(phi, float(p["delta"]), J=float(p["j"]), U=float(p["u"]))
    closings.to_json(run_dir / "closings.json")
    return ["bands.csv", "closings.json"]


def _run_circuit(p, seed, run_dir, workers):
    omega0, half = float(p["omega0"]), float(p["delta_range"])
    cp = inverse_design(omega0 + half, float(p["j"]), float(p["u"]))
    derived = derive_params(cp)
    phi_hi = flux_for_frequency(cp, omega0 - half) if half > 0 else 0.0
    report = tuning_range_report(cp, np.linspace(0.0, phi_hi, p["n_flux"]))
    report.to_csv(run_dir / "tuning.csv")
    payload = {
        "targets": {"omega0": omega0, "delta_range": half, "j": float(p["j"]), "u": float(p["u"])},
        "circuit": asdict(cp),
        "derived": asdict(derived),
        "fractional_spread": {f: report.fractional_spread(f) for f in ("omega", "j", "u")},
        "half_range": {f: report.half_range(f) for f in ("omega", "j", "u")},
    }
    with open(run_dir / "circuit.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False, indent=2, default=float)
        fh.write("\n")
    return ["tuning.csv", "circuit.json"]


_DISPATCH = {
    "fig2a": _run_pump,
    "fig2c": _run_pump,
    "fig4a": _run_loop,
    "fig4b": _run_noise,
    "fig5": _run_lossy,
    "bands": _run_bands,
    "meanfield": _run_meanfield,
    "circuit": _run_circuit,
}


def _utc_now():
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _worker_count():
    """BOSEPUMP_THREADS caps the process fan-out; unset or invalid means 1."""
    try:
        n = int(os.environ.get("BOSEPUMP_THREADS", ""))
    except ValueError:
        return 1
    return max(1, n)


def _new_run_dir(out_base, experiment, seed):
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    run_dir = out_base / experiment / f"{stamp}-{seed}"
    k = 2
    while run_dir.exists():
        run_dir = out_base / experiment / f"{stamp}-{seed}-{k}"
        k += 1
    run_dir.mkdir(parents=True)
    return run_dir


def write_manifest(run_dir, manifest):
    text = json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2)
    (run_dir / "manifest.json").write_text(text + "\n", encoding="utf-8")


def _emit(diagnostics):
    for d in diagnostics:
        print(d, file=sys.stderr)


def run_config(config):
    """Validate and execute one resolved-or-partial configuration mapping."""
    diags = validate_config(config)
    _emit(diags)
    if any(d.severity == "error" for d in diags):
        return ExperimentResult(EXIT_SCHEMA, None, (), diags)
    if any(d.severity == "infeasible" for d in diags):
        return ExperimentResult(EXIT_INFEASIBLE, None, (), diags)

    exp = config["experiment"]
    seed = config.get("seed", 0)
    out_base = Path(config.get("out", "runs"))
    params = {**EXPERIMENT_DEFAULTS[exp], **(config.get("params") or {})}
    workers = _worker_count()

    run_dir = _new_run_dir(out_base, exp, seed)
    manifest = {
        "experiment": exp,
        "params": params,
        "seed": seed,
        "workers": workers,
        "code_version": __version__,
        "started_at": _utc_now(),
        "finished_at": None,
        "status": "running",
        "outputs": [],
    }
    write_manifest(run_dir, manifest)

    try:
        outputs = _DISPATCH[exp](params, seed, run_dir, workers)
    except np.linalg.LinAlgError as exc:
        return _finish_failed(run_dir, manifest, "integrator failure", exc, EXIT_INTEGRATOR, diags)
    except ValueError as exc:
        return _finish_failed(run_dir, manifest, "infeasible", exc, EXIT_INFEASIBLE, diags)
    except (ArithmeticError, RuntimeError) as exc:
        return _finish_failed(run_dir, manifest, "integrator failure", exc, EXIT_INTEGRATOR, diags)

    manifest["status"] = "complete"
    manifest["finished_at"] = _utc_now()
    manifest["outputs"] = outputs
    write_manifest(run_dir, manifest)
    print(run_dir)
    return ExperimentResult(EXIT_OK, run_dir, tuple(outputs), diags)


def _finish_failed(run_dir, manifest, status, exc, code, diags):
    manifest["status"] = status
    manifest["error"] = str(exc)
    manifest["finished_at"] = _utc_now()
    write_manifest(run_dir, manifest)
    print(f"{status}: {exc}", file=sys.stderr)
    return ExperimentResult(code, run_dir, (), diags)


def run_experiment(config_path=None, experiment=None, overrides=None, out=None):
    """Load a config file, apply flag overrides, validate, and execute.

    Flag values take precedence over the file, which takes precedence over
    the defaults table. Returns an ExperimentResult whose exit_code is 0
    on success, 2 for schema problems, 3 for infeasible parameters, 4 for
    integrator failures.
    """
    config = {}
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            diag = Diagnostic("error", "--config", f"cannot read {config_path}: {exc}")
            _emit([diag])
            return ExperimentResult(EXIT_SCHEMA, None, (), [diag])
        except yaml.YAMLError as exc:
            diag = Diagnostic("error", "--config", f"parse failure: {exc}")
            _emit([diag])
            return ExperimentResult(EXIT_SCHEMA, None, (), [diag])
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            diag = Diagnostic("error", "<root>", "configuration must be a mapping")
            _emit([diag])
            return ExperimentResult(EXIT_SCHEMA, None, (), [diag])
        config = loaded

    if experiment is not None:
        config["experiment"] = experiment
    if out is not None:
        config["out"] = out
    overrides = overrides or {}
    if overrides.get("seed") is not None:
        config["seed"] = overrides["seed"]
    param_overrides = {}
    if overrides.get("dt") is not None:
        param_overrides["dt"] = overrides["dt"]
    if overrides.get("units") is not None:
        param_overrides["units"] = overrides["units"]
    if overrides.get("traj") is not None:
        defaults = EXPERIMENT_DEFAULTS.get(config.get("experiment"), {})
        key = "realizations" if "realizations" in defaults else "n_traj"
        param_overrides[key] = overrides["traj"]
    if param_overrides:
        config["params"] = {**(config.get("params") or {}), **param_overrides}
    return run_config(config)


def replay(manifest_path, out=None):
    """Re-run the experiment a manifest records, into a fresh run directory.

    The stored parameter set is already fully resolved, so the defaults
    merge is a no-op and the data files come out byte-identical. The new
    run lands under the original output base unless out says otherwise.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if out is None:
        out = str(manifest_path.resolve().parent.parent.parent)
    config = {
        "experiment": manifest["experiment"],
        "seed": manifest["seed"],
        "params": manifest["params"],
        "out": out,
    }
    return run_config(config)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="bosepump",
        description="Run a named pumping experiment and write CSV/JSON artifacts.",
    )
    parser.add_argument("--config", type=Path, help="YAML or JSON configuration file")
    parser.add_argument(
        "--experiment", choices=sorted(EXPERIMENT_DEFAULTS), help="experiment name"
    )
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out", help="base output directory (default runs)")
    parser.add_argument(
        "--traj", type=int, help="trajectory or realization count, where applicable"
    )
    parser.add_argument("--dt", type=float, help="integrator step size")
    parser.add_argument("--units", choices=("angular", "linear"), help="frequency convention")
    parser.add_argument(
        "--replay", type=Path, help="manifest.json of a finished run to reproduce"
    )
    args = parser.parse_args(argv)

    if args.replay is not None:
        result = replay(args.replay, out=args.out)
        return result.exit_code
    if args.config is None and args.experiment is None:
        parser.error("one of --config, --experiment, or --replay is required")
    overrides = {k: getattr(args, k) for k in ("seed", "traj", "dt", "units")}
    result = run_experiment(
        args.config, experiment=args.experiment, overrides=overrides, out=args.out
    )
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
