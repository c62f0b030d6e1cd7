"""Command-line scenario runner.

Usage::

    isingkz list
    isingkz run <scenario> [--config FILE] [--out DIR] [--<key> VALUE ...]
    isingkz validate FILE

Config files are flat ``key = value`` TOML.  A ``scenario`` key names the
scenario; every other key must appear in that scenario's defaults (see
``isingkz list --verbose``).  Command-line ``--key value`` pairs override file
values.  Exit status is 0 on success, 2 for invalid input and 3 when a
numerical procedure fails.
"""
from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from . import analysis, bcs, ed, integrable, pairmodel
from .config import dump_flat, load_flat, parse_flat
from .errors import BracketError, DomainError, NumericalError
from .io import write_csv, write_json
from .protocols import RampProtocol, momentum_grid

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

WORKERS_ENV = "ISINGKZ_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    defaults: dict
    runner: Callable


class _Steps:
    """Remembers which module operation is running, for error messages."""

    def __init__(self):
        self.current = "setup"

    def __call__(self, name: str):
        self.current = name
        return self


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


# ---------------------------------------------------------------------------
# scenarios


def _kz_integrable(p, out: Path, step):
    grid = momentum_grid(None, p["n_nodes"])
    rows = {"tauQ": [], "rho_numeric": [], "rho_closed": [], "ratio": [], "norm_error": [],
            "max_lz_deviation": []}
    lz = {"tauQ": [], "k": [], "p_numeric": [], "p_lz": []}
    for tau in _as_list(p["tauQ"]):
        step(f"integrable.evolve_modes(tauQ={tau})")
        ensemble, protocol = integrable.linear_ramp_ensemble(tau, grid)
        final = integrable.evolve_modes(ensemble, protocol, 0.0)
        p_num = integrable.excitation_probability(final, 0.0)
        p_lz = integrable.lz_probability(tau, final.k)
        rho = integrable.excitation_density(final)
        closed = integrable.kink_density_closed(tau)
        mask = p_num > 1e-4
        rows["tauQ"].append(tau)
        rows["rho_numeric"].append(rho)
        rows["rho_closed"].append(closed)
        rows["ratio"].append(rho / closed)
        rows["norm_error"].append(final.norm_error())
        rows["max_lz_deviation"].append(float(np.max(np.abs(p_num - p_lz)[mask])) if mask.any() else 0.0)
        keep = p_num > p["p_floor"]
        lz["tauQ"].extend([tau] * int(keep.sum()))
        lz["k"].extend(final.k[keep])
        lz["p_numeric"].extend(p_num[keep])
        lz["p_lz"].extend(p_lz[keep])
    files = [write_csv(out / "kink_density.csv", rows), write_csv(out / "lz_spectrum.csv", lz)]
    summary = {"points": len(rows["tauQ"])}
    if len(rows["tauQ"]) >= 3:
        step("analysis.fit_power_law")
        fit = analysis.fit_power_law(rows["tauQ"], rows["rho_numeric"])
        summary.update(exponent=fit.exponent, prefactor=fit.prefactor, r_squared=fit.r_squared)
    files.append(write_json(out / "summary.json", summary))
    return files


def _kzm_analytics(p, out: Path, step):
    tau = p["tauQ"]
    grid = momentum_grid(None, p["n_nodes"])
    t_from = -tau + p["start_offset"] * math.sqrt(tau)
    step("integrable.ramp_series")
    s = integrable.ramp_series(tau, sample_dt=p["sample_dt"], grid=grid, t_from=t_from)
    rho = integrable.kink_density_closed(tau)
    dx = s["sx"] - s["sx_gs"]
    dzz = s["zz"] - s["zz_gs"]
    dyy = s["yy"] - s["yy_gs"]
    step("integrable.kzm_oscillation")
    closed = [integrable.kzm_oscillation(tau, t) for t in s["t"]]
    integ = [integrable.kzm_oscillation(tau, t, variant="integrated") for t in s["t"]]
    identity = -dzz - s["g"] * dx - 2 * (1 - s["g"]) * rho
    cols = {
        "t": s["t"],
        "t_minus_tc": s["t_minus_tc"],
        "g": s["g"],
        "delta_x_numeric": dx,
        "delta_x_closed_form": [c.delta_x for c in closed],
        "delta_x_integrated": [c.delta_x for c in integ],
        "delta_zz_numeric": dzz,
        "delta_zz_closed_form": [c.delta_zz for c in closed],
        "delta_yy_numeric": dyy,
        "delta_yy_closed_form": [c.delta_yy for c in closed],
        "identity_residual": identity,
        "extrapolated": [c.extrapolated for c in closed],
    }
    files = [write_csv(out / "kzm_analytics.csv", cols)]
    summary = {
        "tauQ": tau,
        "rho_closed": rho,
        "rho_numeric_final": float(s["rho_exc"][-1]),
        "identity_max_over_rho2": float(np.max(np.abs(identity)) / rho ** 2),
    }
    if len(s["t"]) >= 16:
        for variant in ("closed_form", "integrated"):
            step(f"integrable.compare_oscillation({variant})")
            cmp = integrable.compare_oscillation(s["t"], dx, tau, variant)
            summary[variant] = cmp._asdict()
    files.append(write_json(out / "summary.json", summary))
    return files


def _bcs_sweep(p, out: Path, step):
    g_values = np.linspace(p["g_min"], p["g_max"], p["n_g"])
    step("bcs.sweep")
    states = bcs.sweep(g_values, n_k=p["n_k"], tol=p["tol"], workers=_workers())
    cols = {
        "g": [s.g for s in states],
        "rho": [s.rho for s in states],
        "Delta": [s.delta for s in states],
        "t_f": [s.t_f for s in states],
        "E0": [s.e0_per_site for s in states],
        "residual": [s.residual for s in states],
        "iterations": [s.iterations for s in states],
    }
    files = [write_csv(out / "bcs_sweep.csv", cols)]
    if p["derivatives"]:
        step("bcs.field_derivatives")
        files.append(write_csv(out / "bcs_derivatives.csv",
                               bcs.field_derivatives(g_values, n_k=p["n_k"], tol=p["tol"])))
    return files


def _critical_point(p, out: Path, step):
    step("bcs.locate_critical")
    g_c = bcs.locate_critical(p["g_lo"], p["g_hi"], p["n_g"], n_k=p["n_k"])
    return [write_json(out / "critical_point.json",
                       {"g_c_bcs": g_c, "bracket": [p["g_lo"], p["g_hi"]], "n_g": p["n_g"]})]


def _crossover(p, out: Path, step):
    step("bcs.locate_crossover(perturbative)")
    g_pert = bcs.locate_crossover("perturbative", bracket=(p["g_lo"], p["g_hi"]))
    step("bcs.locate_crossover(full_bcs)")
    g_full = bcs.locate_crossover("full_bcs", bracket=(p["g_lo"], p["g_hi"]), n_k=p["n_k"])
    return [write_json(out / "crossover.json", {
        "g0_perturbative": g_pert,
        "g0_perturbative_closed_form": 8 - 4 * math.sqrt(3),
        "g0_full_bcs": g_full,
        "pair_gap_at_g0_full_bcs": pairmodel.pair_gap(g_full),
    })]


def _ed_gap(p, out: Path, step):
    spectrum = {"L": [], "g": [], "sector": [], "level": [], "energy": []}
    per_l = {"g": [], "L": [], "gap": [], "splitting": []}
    records = []
    for g in _as_list(p["g"]):
        for L in _as_list(p["L"]):
            step(f"ed.lowest_eigenpairs(L={L}, g={g})")
            res = ed.lowest_eigenpairs(L, g, p["J2"], m=p["levels"])
            for j, (e, lab) in enumerate(zip(res.energies, res.sectors)):
                spectrum["L"].append(L)
                spectrum["g"].append(g)
                spectrum["sector"].append(lab)
                spectrum["level"].append(j)
                spectrum["energy"].append(e)
        step(f"ed.pair_gap_ed(g={g})")
        r = ed.pair_gap_ed(g, p["J2"], _as_list(p["L"]), p["splitting_threshold"])
        for L, gap, split in zip(r.L, r.gaps, r.splittings):
            per_l["g"].append(g)
            per_l["L"].append(L)
            per_l["gap"].append(gap)
            per_l["splitting"].append(split)
        records.append({
            "g": g,
            "gap_extrapolated": r.gap_extrapolated,
            "correlation_length": r.correlation_length,
            "fit_residual": r.fit_residual,
            "monotone": r.monotone,
            "pair_gap_second_order": pairmodel.pair_gap(g),
        })
    return [write_csv(out / "ed_spectrum.csv", spectrum),
            write_csv(out / "ed_gap.csv", per_l),
            write_json(out / "ed_gap.json", {"J2": p["J2"], "results": records})]


def _ed_trajectory(p, step):
    L, g, J2 = p["L"], p["g"], p["J2"]
    t_end = p["duration"] + p["t_after"]
    step("ed.ground_state")
    gs = ed.ground_state(L, g, J2)
    ref = ed.measure(gs, g, J2)
    drive = RampProtocol.drive(g, p["A"], p["omega_d"], p["duration"], t_end)
    step("ed.evolve_ed")
    traj = ed.evolve_ed(gs, drive, J2, t_end, dt=p["dt"], sample_dt=p["sample_dt"])
    step("ed.measure")
    table = ed.train_table(gs.sector, 4)
    cols = {key: [] for key in ("t", "g", "sx", "zz_nn", "zz_nnn", "energy",
                                "train_1", "train_2", "train_3", "train_4", "sx_minus_gs")}
    for state in traj:
        g_t = drive.value(state.t)
        m = ed.measure(state, g_t, J2)
        trains = np.abs(state.amplitudes) ** 2 @ table
        cols["t"].append(state.t)
        cols["g"].append(g_t)
        cols["sx"].append(m.sx)
        cols["zz_nn"].append(m.zz_nn)
        cols["zz_nnn"].append(m.zz_nnn)
        cols["energy"].append(m.energy)
        for n in range(4):
            cols[f"train_{n + 1}"].append(trains[n])
        cols["sx_minus_gs"].append(m.sx - ref.sx)
    return drive, cols


def _post_drive(p, values):
    signal = analysis.Signal(0.0, p["sample_dt"], np.asarray(values))
    return signal.window(p["duration"] + p["settle"])


def _ed_drive(p, out: Path, step):
    drive, cols = _ed_trajectory(p, step)
    step("pairmodel.driven_response")
    resp = pairmodel.driven_response(p["g"], drive, drive.t_end, sample_dt=p["sample_dt"])
    cols["x_oscillator"] = resp.signal.values
    omega = pairmodel.pair_gap(p["g"])
    step("analysis.fit_damped_sinusoid")
    fit_ed = analysis.fit_damped_sinusoid(_post_drive(p, cols["sx_minus_gs"]), omega)
    fit_osc = analysis.fit_damped_sinusoid(_post_drive(p, resp.signal.values), omega)
    return [write_csv(out / "trajectory.csv", cols),
            write_json(out / "fit.json", {
                "pair_gap": omega,
                "ed": fit_ed.to_dict(),
                "oscillator": fit_osc.to_dict(),
                "frequency_rel_error": fit_ed.frequency / omega - 1,
                "amplitude_ratio": fit_ed.amplitude / fit_osc.amplitude,
            })]


def _crash_test(p, out: Path, step):
    drive, cols = _ed_trajectory(p, step)
    step("analysis.spectral_peaks")
    peaks = analysis.spectral_peaks(_post_drive(p, cols["sx"]), n_peaks=p["n_peaks"])
    t = np.asarray(cols["t"])
    post = t > p["duration"] + p["settle"]
    trains = {f"train_{n}": float(np.mean(np.asarray(cols[f"train_{n}"])[post])) for n in range(1, 5)}
    return [write_csv(out / "trajectory.csv", cols),
            write_json(out / "crash_test.json", {
                "peaks": [pk._asdict() for pk in peaks],
                "post_drive_train_density": trains,
                "train_energies": {str(n): pairmodel.train_energy(n) for n in range(1, 5)},
            })]


def _pair_drive(p, out: Path, step):
    t_end = p["duration"] + p["t_after"]
    drive = RampProtocol.drive(p["g"], p["A"], p["omega_d"], p["duration"], t_end)
    step("pairmodel.driven_response")
    r = pairmodel.driven_response(p["g"], drive, t_end, dt=p["dt"], sample_dt=p["sample_dt"])
    omega = r.omega
    post = r.signal.window(p["duration"] + p["settle"])
    step("analysis.dominant_frequency")
    peak = analysis.dominant_frequency(post)
    return [write_csv(out / "pair_drive.csv", {"t": r.t, "delta_g": r.delta_g, "x": r.signal.values,
                                                "zz_prediction": r.zz_prediction.values}),
            write_json(out / "pair_drive.json", {
                "pair_gap": omega,
                "post_drive_amplitude": pairmodel.post_drive_amplitude(r),
                "post_drive_frequency": peak.frequency,
                "pair_density_omitted": r.pair_density_omitted,
            })]


def _amplitude_scan(p, out: Path, step):
    grid = momentum_grid(None, p["n_nodes"])
    g = p["g_target"]
    est = {"tauQ": [], "amplitude": [], "frequency": [], "q": [], "q_estimate": [], "residual_rms": []}
    for tau in _as_list(p["tauQ"]):
        step(f"integrable.ramp_series(tauQ={tau})")
        s = integrable.ramp_series(tau, sample_dt=p["sample_dt"], grid=grid, g_target=g,
                                   hold=p["hold"], t_from=0.0)
        signal = analysis.Signal(0.0, p["sample_dt"], s["sx"] - s["sx_gs"])
        step(f"analysis.fit_damped_sinusoid(tauQ={tau})")
        fit = analysis.fit_damped_sinusoid(signal, 4 * (1 - g))
        est["tauQ"].append(tau)
        est["amplitude"].append(fit.amplitude)
        est["frequency"].append(fit.frequency)
        est["q"].append(fit.q)
        est["q_estimate"].append(integrable.period_and_q(tau, g).q)
        est["residual_rms"].append(fit.residual_rms)
    files = [write_csv(out / "amplitude_scan.csv", est)]
    summary = {"g_target": g, "frequency_estimate": 4 * (1 - g)}
    if len(est["tauQ"]) >= 3:
        step("analysis.fit_power_law")
        fit = analysis.fit_power_law(est["tauQ"], est["amplitude"])
        summary.update(exponent=fit.exponent, prefactor=fit.prefactor, r_squared=fit.r_squared)
    files.append(write_json(out / "summary.json", summary))
    return files


_DRIVE_COMMON = {"L": 12, "J2": 1.0, "omega_d": 8.0, "duration": 2 * math.pi,
                 "t_after": 40.0, "dt": 0.01, "sample_dt": 0.05, "settle": 0.5}

SCENARIOS = {s.name: s for s in [
    Scenario("kz-integrable", "kink density and LZ spectrum after linear ramps of the NN chain",
             {"tauQ": [8.0, 32.0, 128.0], "n_nodes": 2048, "p_floor": 1e-12}, _kz_integrable),
    Scenario("kzm-analytics", "numeric ramp tail against the dephasing-oscillation formulas",
             {"tauQ": 8.0, "n_nodes": 2048, "sample_dt": 0.05, "start_offset": 2.0}, _kzm_analytics),
    Scenario("bcs-sweep", "self-consistent BCS mean fields and derivatives versus g",
             {"g_min": 0.0, "g_max": 3.0, "n_g": 61, "n_k": 4096, "tol": 1e-12, "derivatives": True},
             _bcs_sweep),
    Scenario("critical-point", "peak of |dDelta/dg| in the BCS solution",
             {"g_lo": 2.2, "g_hi": 2.7, "n_g": 51, "n_k": 4096}, _critical_point),
    Scenario("crossover", "field where the pair gap meets twice the quasiparticle gap",
             {"g_lo": 0.5, "g_hi": 2.0, "n_k": 4096}, _crossover),
    Scenario("ed-gap", "ED pair gap per size and extrapolated",
             {"g": [0.0, 0.25, 0.5], "J2": 1.0, "L": [8, 10, 12, 14], "levels": 4,
              "splitting_threshold": 1e-3}, _ed_gap),
    Scenario("ed-drive", "ED response to a weak resonant field modulation",
             dict(_DRIVE_COMMON, g=0.25, A=0.005), _ed_drive),
    Scenario("crash-test", "strong drive at g = 0: frequency content and kink trains",
             dict(_DRIVE_COMMON, g=0.0, A=0.5, n_peaks=4), _crash_test),
    Scenario("pair-drive", "driven pair oscillator",
             {"g": 0.25, "A": 0.005, "omega_d": 8.0, "duration": 2 * math.pi, "t_after": 40.0,
              "dt": 1e-3, "sample_dt": 0.01, "settle": 0.5}, _pair_drive),
    Scenario("amplitude-scan", "post-ramp oscillation amplitude and Q versus tauQ for the NN chain",
             {"tauQ": [8.0, 16.0, 32.0, 64.0], "g_target": 0.5, "hold": 60.0, "n_nodes": 2048,
              "sample_dt": 0.05}, _amplitude_scan),
]}


# ---------------------------------------------------------------------------
# config handling


def _coerce(key, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean")
        return value
    if isinstance(default, list):
        items = value if isinstance(value, list) else [value]
        kind = type(default[0]) if default else float
        return [_coerce(key, v, kind()) for v in items]
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{key} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        return float(value)
    if not isinstance(value, type(default)):
        raise ConfigError(f"{key} must be {type(default).__name__}")
    return value


def resolve_config(name: str, values: dict) -> dict:
    """Merge ``values`` over the defaults of scenario ``name`` with type checks."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; try 'isingkz list'")
    defaults = SCENARIOS[name].defaults
    values = dict(values)
    declared = values.pop("scenario", name)
    if declared != name:
        raise ConfigError(f"config is for scenario {declared!r}, not {name!r}")
    unknown = sorted(set(values) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys for {name}: {unknown}")
    out = dict(defaults)
    for key, value in values.items():
        out[key] = _coerce(key, value, defaults[key])
    return out


def _parse_value(text: str):
    try:
        return parse_flat(f"v = {text}")["v"]
    except Exception:
        return text


def parse_overrides(tokens: list[str]) -> dict:
    """Turn ``--key value`` / ``--key=value`` tokens into a mapping."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for --{key}")
            raw = tokens[i + 1]
            i += 2
        out[key.replace("-", "_")] = _parse_value(raw)
    return out


def manifest(name: str, config: dict, wall_time: float, files) -> dict:
    return {
        "scenario": name,
        "config": config,
        "versions": {
            "isingkz": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "workers": _workers(),
        "wall_time_s": wall_time,
        "outputs": sorted(Path(f).name for f in files),
    }


def run(name: str, config: dict, out_dir) -> list[Path]:
    """Run a resolved scenario and write its files plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = _Steps()
    start = time.perf_counter()
    try:
        files = SCENARIOS[name].runner(config, out, steps)
    except Exception as exc:
        exc.operation = steps.current
        raise
    wall = time.perf_counter() - start
    (out / "config.toml").write_text(dump_flat({"scenario": name, **config}))
    files = list(files) + [out / "config.toml"]
    files.append(write_json(out / "manifest.json", manifest(name, config, wall, files)))
    return files


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isingkz", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)
    p_list = sub.add_parser("list", help="list scenarios")
    p_list.add_argument("--verbose", "-v", action="store_true", help="also print default configs")
    p_run = sub.add_parser("run", help="run a scenario", allow_abbrev=False)
    p_run.add_argument("scenario")
    p_run.add_argument("--config", help="flat TOML config file")
    p_run.add_argument("--out", help="output directory (default results/<scenario>)")
    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "list":
            if extra:
                raise ConfigError(f"unexpected arguments {extra}")
            for name, sc in SCENARIOS.items():
                print(f"{name:16s} {sc.summary}")
                if args.verbose:
                    print("    " + dump_flat(sc.defaults).strip().replace("\n", "\n    "))
            return EXIT_OK
        if args.command == "validate":
            if extra:
                raise ConfigError(f"unexpected arguments {extra}")
            values = load_flat(args.config)
            name = values.get("scenario")
            if name is None:
                raise ConfigError("config lacks a 'scenario' key")
            resolve_config(name, values)
            print(f"{args.config}: valid {name} config")
            return EXIT_OK
        values = load_flat(args.config) if args.config else {}
        values.update(parse_overrides(extra))
        config = resolve_config(args.scenario, values)
        out = args.out or os.path.join("results", args.scenario)
        files = run(args.scenario, config, out)
        for f in files:
            print(f)
        return EXIT_OK
    except (ConfigError, DomainError, OSError) as exc:
        _report(args, exc)
        return EXIT_INVALID
    except (NumericalError, BracketError) as exc:
        _report(args, exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # malformed TOML and similar parse failures
        _report(args, exc)
        return EXIT_INVALID


def _report(args, exc):
    where = getattr(exc, "operation", None)
    prefix = f"{getattr(args, 'scenario', args.command)}"
    if where:
        prefix += f": {where}"
    print(f"error: {prefix}: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
