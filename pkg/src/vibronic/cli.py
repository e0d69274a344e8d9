"""Command-line front end.

    vibronic <task> --config FILE [--out DIR] [--workers N] [--seed S] [--preset NAME]
    vibronic run --config FILE          (task taken from the file)
    vibronic validate --config FILE     (schema and physics lint only)
    vibronic presets                    (list presets)

Configs are YAML with ``schema_version: 1``.  Exit codes: 0 success,
2 parse error, 3 validation error, 4 numerical failure; failures print a
one-line JSON reason on stderr and leave no output files behind.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__, fock, observables, semiclassical, trajectory
from . import design as design_mod
from . import liouville as lv
from .errors import VibronicError
from .model import DriveSelection, ModelParams, build_hamiltonian, dissipators
from .presets import PRESETS, preset_config

log = logging.getLogger("vibronic")

SCHEMA_VERSION = 1
TASKS = ("steady", "sweep", "traj", "wigner", "spectrum", "design")
SWEEP_AXES = ("delta0_locked", "delta_v_only", "g_s", "g_as", "omega_thz_rabi", "omega_zpl_rabi")
TRAJ_OBSERVABLES = ("parity", "n_vib", "n_zpl", "n_s", "n_as", "x_sigma", "pop_e")
CSV_SCHEMA = "1"

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

STEADY_COLUMNS = [
    "pop_e", "n_vib", "b_re", "b_im", "sigma_re", "sigma_im",
    "n_zpl", "n_s", "n_as", "gamma_zpl_kcps", "gamma_s_kcps", "gamma_as_kcps",
    "residual", "leak",
]


class ParseError(Exception):
    pass


class ValidationError(Exception):
    pass


@dataclass
class Scenario:
    task: str
    model: ModelParams
    drives: DriveSelection
    p_click: float
    blocks: dict
    raw: dict
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- config


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {str(exc).splitlines()[0]}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("config must be a mapping at top level")
    return data


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _lookup(data: dict, dotted: str):
    cur = data
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def resolve_config(user: dict, preset: str | None = None, task: str | None = None,
                   seed: int | None = None) -> dict:
    """Merge preset, user config and CLI overrides; check required fields."""
    preset = preset or user.get("preset")
    required: list[str] = []
    base: dict = {}
    if preset is not None:
        try:
            base, required = preset_config(preset)
        except KeyError:
            raise ValidationError(f"unknown preset {preset!r}; see `vibronic presets`") from None
    user = {k: v for k, v in user.items() if k != "preset"}
    cfg = _merge(base, user)
    if preset is not None:
        cfg["preset"] = preset
    cfg.setdefault("schema_version", SCHEMA_VERSION)
    if task is not None:
        if "task" in cfg and cfg["task"] != task:
            raise ValidationError(f"command task {task!r} does not match config task {cfg['task']!r}")
        cfg["task"] = task
    if seed is not None:
        cfg.setdefault("trajectory", {})
        if isinstance(cfg["trajectory"], dict):
            cfg["trajectory"]["seed"] = seed
    missing = [r for r in required if _lookup(cfg, r) is None]
    if missing:
        raise ValidationError(f"preset {preset!r} requires user values for {missing}")
    return cfg


def _number(x, name, *, positive=False, nonneg=False, integer=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{name} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    if integer and int(x) != x:
        raise ValidationError(f"{name} must be an integer")
    if positive and not x > 0:
        raise ValidationError(f"{name} must be > 0")
    if nonneg and x < 0:
        raise ValidationError(f"{name} must be >= 0")
    return int(x) if integer else float(x)


def _axis(spec, name) -> np.ndarray:
    if not (isinstance(spec, (list, tuple)) and len(spec) == 3):
        raise ValidationError(f"{name} must be [min, max, points]")
    lo = _number(spec[0], f"{name}[0]")
    hi = _number(spec[1], f"{name}[1]")
    n = _number(spec[2], f"{name}[2]", integer=True)
    if n < 2 or not hi > lo:
        raise ValidationError(f"{name} needs max > min and >= 2 points")
    return np.linspace(lo, hi, n)


def validate_config(cfg: dict) -> Scenario:
    """Schema checks; raises ValidationError with a one-line reason."""
    known = {"schema_version", "task", "preset", "model", "drives", "p_click", "sweep",
             "trajectory", "wigner", "spectrum", "design", "output"}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"schema_version must be {SCHEMA_VERSION}")
    task = cfg.get("task")
    if task not in TASKS:
        raise ValidationError(f"task must be one of {list(TASKS)}, got {task!r}")
    model_d = cfg.get("model", {})
    if not isinstance(model_d, dict):
        raise ValidationError("model must be a mapping")
    for k, v in model_d.items():
        _number(v, f"model.{k}")
    try:
        model = ModelParams.from_dict(model_d)
        drives = DriveSelection.from_dict(cfg.get("drives", {}) or {})
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc
    p_click = _number(cfg.get("p_click", 0.05), "p_click", nonneg=True)
    if p_click > 1:
        raise ValidationError("p_click must lie in [0, 1]")
    blocks = {}
    if task in ("steady", "sweep", "traj", "wigner") and not any(
            getattr(drives, f) for f in ("zpl", "stokes", "anti_stokes", "anti_stokes2", "thz")):
        log.info("no drive selected; the steady state is the ground state")
    if task == "sweep":
        sw = cfg.get("sweep")
        if not isinstance(sw, dict):
            raise ValidationError("sweep task needs a sweep block")
        axis = sw.get("axis")
        if axis not in SWEEP_AXES:
            raise ValidationError(f"sweep.axis must be one of {list(SWEEP_AXES)}")
        start = _number(sw.get("start"), "sweep.start")
        stop = _number(sw.get("stop"), "sweep.stop")
        points = _number(sw.get("points"), "sweep.points", integer=True)
        if points < 2:
            raise ValidationError("sweep.points must be >= 2")
        spacing = sw.get("spacing", "linear")
        if spacing == "linear":
            values = np.linspace(start, stop, points)
        elif spacing == "log":
            if not (start > 0 and stop > 0):
                raise ValidationError("log spacing needs positive start and stop")
            values = np.geomspace(start, stop, points)
        else:
            raise ValidationError("sweep.spacing must be linear or log")
        if start == stop:
            raise ValidationError("sweep range is empty (start == stop)")
        blocks["sweep"] = dict(axis=axis, values=values)
    elif task == "traj":
        tr = cfg.get("trajectory")
        if not isinstance(tr, dict):
            raise ValidationError("traj task needs a trajectory block")
        obs = tr.get("observables", ["parity"])
        bad = [o for o in obs if o not in TRAJ_OBSERVABLES]
        if bad or not obs:
            raise ValidationError(f"trajectory.observables must be drawn from {list(TRAJ_OBSERVABLES)}")
        initial = tr.get("initial", "ground")
        if initial not in ("ground", "low_energy"):
            raise ValidationError("trajectory.initial must be ground or low_energy")
        seed = tr.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ValidationError("trajectory.seed must be an integer in [0, 2^64)")
        block = dict(
            n_traj=_number(tr.get("n_traj", 1), "trajectory.n_traj", integer=True, positive=True),
            t_final=_number(tr.get("t_final"), "trajectory.t_final", positive=True),
            dt_max=_number(tr.get("dt_max", 0.002), "trajectory.dt_max", positive=True),
            record_stride=_number(tr.get("record_stride", 1), "trajectory.record_stride",
                                  integer=True, positive=True),
            seed=seed, observables=list(obs), initial=initial,
            transient=_number(tr.get("transient", 5.0 / (2 * np.pi * model.gamma_v)),
                              "trajectory.transient", nonneg=True),
            histograms=[],
        )
        for h in tr.get("histograms", []) or []:
            if not isinstance(h, dict) or h.get("observable") not in obs:
                raise ValidationError("each histogram needs an observable that is recorded")
            t_sample = h.get("t_sample", block["t_final"])
            t_sample = _number(t_sample, "histogram.t_sample", nonneg=True)
            if t_sample < block["transient"] or t_sample > block["t_final"]:
                raise ValidationError("histogram.t_sample must lie between transient and t_final")
            block["histograms"].append(dict(observable=h["observable"], t_sample=t_sample,
                                            bins=_number(h.get("bins", 20), "histogram.bins",
                                                         integer=True, positive=True)))
        blocks["trajectory"] = block
    elif task == "wigner":
        w = cfg.get("wigner", {}) or {}
        blocks["wigner"] = dict(
            q=_axis(w.get("q", [-6, 6, 121]), "wigner.q"),
            p=_axis(w.get("p", [-6, 6, 121]), "wigner.p"),
            project=w.get("project", "none"),
        )
        if blocks["wigner"]["project"] not in ("none", "excited"):
            raise ValidationError("wigner.project must be none or excited")
    elif task == "spectrum":
        s = cfg.get("spectrum")
        if not isinstance(s, dict) or not s.get("modes"):
            raise ValidationError("spectrum task needs spectrum.modes")
        modes = []
        for i, m in enumerate(s["modes"]):
            if not isinstance(m, dict):
                raise ValidationError(f"spectrum.modes[{i}] must be a mapping")
            n = m.get("n", 0.0)
            if n != "steady":
                n = _number(n, f"spectrum.modes[{i}].n", nonneg=True)
            try:
                modes.append(dict(eta=_number(m.get("eta"), f"spectrum.modes[{i}].eta", nonneg=True),
                                  omega=_number(m.get("omega"), f"spectrum.modes[{i}].omega", positive=True),
                                  gamma=_number(m.get("gamma"), f"spectrum.modes[{i}].gamma", positive=True),
                                  n=n))
            except ValidationError:
                raise
        blocks["spectrum"] = dict(modes=modes, freq=_axis(s.get("freq", [-100, 100, 2001]), "spectrum.freq"))
    elif task == "design":
        d = cfg.get("design")
        if not isinstance(d, dict):
            raise ValidationError("design task needs a design block")
        mode = d.get("mode", "scenario")
        if mode == "scenario":
            if d.get("scenario") not in design_mod.SCENARIOS:
                raise ValidationError(f"design.scenario must be one of {sorted(design_mod.SCENARIOS)}")
        elif mode == "chi_map":
            _axis(d.get("g_over_gamma0"), "design.g_over_gamma0")
            _axis(d.get("gv_over_gamma0"), "design.gv_over_gamma0")
        elif mode == "drive":
            _number(d.get("intensity"), "design.intensity", nonneg=True)
            _number(d.get("dipole_length"), "design.dipole_length", nonneg=True)
        else:
            raise ValidationError("design.mode must be scenario, chi_map or drive")
        blocks["design"] = dict(d)
    return Scenario(task=task, model=model, drives=drives, p_click=p_click, blocks=blocks, raw=cfg)


def lint(sc: Scenario) -> list[str]:
    """Physics warnings for a validated scenario."""
    p, dr = sc.model, sc.drives
    out = []
    if dr.stokes and p.g_s < p.gamma_v:
        out.append(f"coherence: g_s={p.g_s:g} GHz is below gamma_v={p.gamma_v:g} GHz; "
                   "coherent vibronic effects need g_S >~ gamma_v")
    # the coherent amplitude beta ~ g / gamma_v only builds up when the
    # anti-Stokes drive pumps the vibration; Stokes-only runs stay near vacuum
    g = max(p.g_s if dr.stokes else 0.0, p.g_as) if dr.anti_stokes else 0.0
    beta = g / p.gamma_v if p.gamma_v > 0 else 0.0
    occupancy = beta ** 2 + 4 * beta
    if beta > 0 and occupancy >= 0.5 * p.n_cutoff:
        out.append(f"cutoff: expected <b^+b> + 4 spread ~ {occupancy:.3g} approaches "
                   f"n_cutoff={p.n_cutoff}; increase n_cutoff")
    if dr.thz and p.omega_thz_rabi > 0 and p.g_s > 0 and (dr.stokes or dr.zpl):
        try:
            mf = semiclassical.meanfield_steady_state(p)
            figs = semiclassical.stokes_figures(p.g_s, p.delta0, p.gamma0, p.gamma_v)
            ratio = abs(mf.b_ss) ** 2 / figs.n_s
            if ratio > 0.1:
                out.append(f"transducer: |b_ss|^2/n_S = {ratio:.3g} > 0.1; the linear "
                           "susceptibility no longer describes the response")
        except VibronicError as exc:
            out.append(f"transducer: mean-field estimate failed ({exc})")
    return out


# ---------------------------------------------------------------- tasks


def _steady_row(params: ModelParams, drives: DriveSelection, p_click: float) -> dict:
    spec = params.spec
    h = build_hamiltonian(params, drives)
    ss = lv.steady_state(lv.build_liouvillian(h, dissipators(params)))
    rho = ss.rho
    b = fock.expect(fock.annihilation(spec), rho)
    s = fock.expect(fock.sigma_minus(spec), rho)
    row = dict(
        pop_e=ss.expect(fock.excited_projector(spec)),
        n_vib=ss.expect(fock.vib_number(spec)),
        b_re=b.real, b_im=b.imag, sigma_re=s.real, sigma_im=s.imag,
    )
    for short, branch in (("zpl", "zpl"), ("s", "stokes"), ("as", "anti_stokes")):
        op = observables.photon_number_operator(spec, params.eta, branch)
        row[f"n_{short}"] = ss.expect(op)
        row[f"gamma_{short}_kcps"] = observables.fluorescence_rate(rho, op, params.gamma0, p_click).kcps
    row["residual"] = ss.residual
    row["leak"] = lv.population_leak(rho, spec)
    return row


def _apply_axis(params: ModelParams, axis: str, x: float) -> ModelParams:
    if axis == "delta0_locked":
        return params.replace(delta0=x, delta_v=x)
    if axis == "delta_v_only":
        return params.replace(delta_v=x)
    return params.replace(**{axis: x})


def _sweep_point(args):
    params, drives, p_click, axis, x = args
    try:
        row = _steady_row(_apply_axis(params, axis, x), drives, p_click)
        row["error"] = ""
    except (VibronicError, ValueError, np.linalg.LinAlgError) as exc:
        row = {c: float("nan") for c in STEADY_COLUMNS}
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def run_sweep(sc: Scenario, workers: int = 1) -> tuple[list[str], list[list], dict]:
    axis = sc.blocks["sweep"]["axis"]
    values = sc.blocks["sweep"]["values"]
    jobs = [(sc.model, sc.drives, sc.p_click, axis, float(x)) for x in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = []
        for i, job in enumerate(jobs):
            rows.append(_sweep_point(job))
            log.info("sweep point %d/%d", i + 1, len(jobs))
    header = [axis] + STEADY_COLUMNS + ["error"]
    table = [[float(x)] + [r[c] for c in STEADY_COLUMNS] + [r["error"]] for x, r in zip(values, rows)]
    finite = [r["residual"] for r in rows if not r["error"]]
    summary = dict(points=len(rows), failed=sum(1 for r in rows if r["error"]),
                   max_residual=max(finite) if finite else None)
    return header, table, summary


def run_steady(sc: Scenario):
    row = _steady_row(sc.model, sc.drives, sc.p_click)
    return STEADY_COLUMNS, [[row[c] for c in STEADY_COLUMNS]], dict(residual=row["residual"], leak=row["leak"])


def _traj_operator(name: str, params: ModelParams):
    spec = params.spec
    if name == "parity":
        return fock.parity(spec)
    if name == "n_vib":
        return fock.vib_number(spec)
    if name == "pop_e":
        return fock.excited_projector(spec)
    if name == "x_sigma":
        s = fock.sigma_minus(spec)
        return fock._canon(s + s.conj().T)
    branch = {"n_zpl": "zpl", "n_s": "stokes", "n_as": "anti_stokes"}[name]
    return observables.photon_number_operator(spec, params.eta, branch)


def run_traj(sc: Scenario, workers: int = 1):
    b = sc.blocks["trajectory"]
    params = sc.model
    obs = {name: _traj_operator(name, params) for name in b["observables"]}
    cfg = trajectory.TrajectoryConfig(n_traj=b["n_traj"], t_final=b["t_final"], dt_max=b["dt_max"],
                                      seed=b["seed"], observables=obs, record_stride=b["record_stride"])
    h = build_hamiltonian(params, sc.drives)
    if b["initial"] == "ground":
        psi0 = fock.basis_state(params.spec, 0, 0)
    else:
        psi0 = trajectory.LowEnergyStart(params.spec)
    records = trajectory.run_trajectories(
        h, dissipators(params), psi0, cfg, workers=workers,
        progress=lambda done, total: log.info("trajectories %d/%d", done, total))
    header = ["t"]
    cols = []
    for name in b["observables"]:
        t, mean, err = trajectory.ensemble_average(records, name)
        header += [f"{name}_mean", f"{name}_stderr"]
        cols += [mean, err]
    table = [[float(t[i])] + [float(c[i]) for c in cols] for i in range(t.size)]
    extra = {}
    first = records[0]
    extra["trajectory0.csv"] = (["t"] + list(first.labels),
                                [[float(first.times[i])] + list(map(float, first.traces[i]))
                                 for i in range(first.times.size)])
    jumps = [[r.index, float(tj), int(c)] for r in records for tj, c in zip(r.jump_times, r.jump_channels)]
    extra["jumps.csv"] = (["trajectory", "t", "channel"], jumps)
    hist_summary = []
    for hspec in b["histograms"]:
        hg = trajectory.histogram_at(records, hspec["observable"], hspec["t_sample"], bins=hspec["bins"])
        fname = f"histogram_{hspec['observable']}.csv"
        extra[fname] = (["bin_lo", "bin_hi", "count"],
                        [[float(hg.edges[i]), float(hg.edges[i + 1]), int(hg.counts[i])]
                         for i in range(hg.counts.size)])
        hist_summary.append(dict(observable=hspec["observable"], t_sample=hg.sample_time,
                                 modes=len(hg.modes()), bimodal=hg.is_bimodal()))
    channels = [c.label for c in dissipators(params)]
    summary = dict(n_traj=len(records), channels=channels, histograms=hist_summary,
                   jumps_per_channel={lab: int(sum((r.jump_channels == i).sum() for r in records))
                                      for i, lab in enumerate(channels)})
    return header, table, summary, extra


def run_wigner(sc: Scenario):
    params = sc.model
    h = build_hamiltonian(params, sc.drives)
    ss = lv.steady_state(lv.build_liouvillian(h, dissipators(params)))
    rho = ss.rho
    if sc.blocks["wigner"]["project"] == "excited":
        ne = fock.excited_projector(params.spec).toarray()
        rho = ne @ rho @ ne
        w = np.trace(rho).real
        if w < 1e-14:
            raise VibronicError("excited-state projection has zero weight")
        rho = rho / w
    rv = observables.reduce_vibrational(rho)
    grid = observables.wigner(rv, sc.blocks["wigner"]["q"], sc.blocks["wigner"]["p"])
    header = ["q", "p", "W"]
    table = [[float(q), float(p), float(grid.values[i, j])]
             for i, p in enumerate(grid.p) for j, q in enumerate(grid.q)]
    maxima = grid.local_maxima(0.3)
    summary = dict(residual=ss.residual, leak=lv.population_leak(ss.rho, params.spec),
                   wigner_leak_warning=grid.leak_warning, integral=grid.integral(),
                   local_maxima=[list(m) for m in maxima],
                   point_reflection_residual=grid.point_reflection_residual(),
                   b=[fock.expect(fock.annihilation(params.spec), ss.rho).real,
                      fock.expect(fock.annihilation(params.spec), ss.rho).imag])
    return header, table, summary, grid


def run_spectrum(sc: Scenario):
    params = sc.model
    modes = []
    for m in sc.blocks["spectrum"]["modes"]:
        n = m["n"]
        if n == "steady":
            ss = lv.steady_state(lv.build_liouvillian(build_hamiltonian(params, sc.drives),
                                                      dissipators(params)))
            n = ss.expect(fock.vib_number(params.spec))
        modes.append(observables.SpectrumMode(eta=m["eta"], omega=m["omega"], gamma=m["gamma"], n=n))
    freq = sc.blocks["spectrum"]["freq"]
    spec = observables.analytic_spectrum(params.gamma0, modes, freq)
    header = ["label", "center_ghz", "fwhm_ghz", "weight"]
    table = [[ln.label, ln.center, ln.fwhm, ln.weight] for ln in spec.lines]
    return header, table, dict(lines=len(spec.lines)), spec


def run_design(sc: Scenario):
    d = sc.blocks["design"]
    params = sc.model
    mode = d.get("mode", "scenario")
    if mode == "scenario":
        kw = {k: v for k, v in d.items() if k in ("intensity", "dipole_length", "e_field", "design")}
        est = design_mod.scenario_estimate(d["scenario"], chi=d.get("chi"), gamma0=params.gamma0,
                                           gamma_v=params.gamma_v, p_click=d.get("p_click", sc.p_click),
                                           **kw)
        header = ["scenario", "e_field_v_per_m", "rabi_ghz", "gain", "chi", "rate_kcps"]
        table = [[est.name, est.e_field, est.rabi, est.gain, est.chi, est.rate_kcps]]
        return header, table, dict(notes=est.notes)
    if mode == "chi_map":
        gs = np.geomspace(*d["g_over_gamma0"][:2], int(d["g_over_gamma0"][2]))
        gv = np.geomspace(*d["gv_over_gamma0"][:2], int(d["gv_over_gamma0"][2]))
        chi, coop = semiclassical.chi_map(gs, gv, delta0=params.delta0 / params.gamma0)
        header = ["g_over_gamma0", "gv_over_gamma0", "chi", "cooperativity"]
        table = [[float(gs[j]), float(gv[i]), float(chi[i, j]), float(coop[i, j])]
                 for i in range(gv.size) for j in range(gs.size)]
        return header, table, dict(chi_max=float(chi.max()))
    dd = design_mod.DriveDesign(intensity=d["intensity"], dipole_length=d["dipole_length"],
                                wavelength=d.get("wavelength", 0.0))
    header = ["intensity_w_per_cm2", "dipole_nm", "field_v_per_m", "rabi_ghz"]
    return header, [[dd.intensity, dd.dipole_length, dd.field, dd.rabi]], {}


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def execute(cfg: dict, out_dir: str | Path | None = None, workers: int = 1) -> dict:
    """Validate and run a resolved config; write outputs when ``out_dir`` is given.

    Returns a dict with ``header``, ``rows``, ``summary`` and ``manifest``.
    Raises ValidationError or VibronicError; nothing is written on failure.
    """
    sc = validate_config(cfg)
    sc.warnings = lint(sc)
    for w in sc.warnings:
        log.warning(w)
    t0 = time.time()
    extra_csv: dict = {}
    svg_grid = None
    spectrum = None
    if sc.task == "steady":
        header, rows, summary = run_steady(sc)
    elif sc.task == "sweep":
        header, rows, summary = run_sweep(sc, workers)
    elif sc.task == "traj":
        header, rows, summary, extra_csv = run_traj(sc, workers)
    elif sc.task == "wigner":
        header, rows, summary, svg_grid = run_wigner(sc)
    elif sc.task == "spectrum":
        header, rows, summary, spectrum = run_spectrum(sc)
    else:
        header, rows, summary = run_design(sc)
    manifest = dict(
        tool="vibronic", version=__version__, csv_schema=CSV_SCHEMA,
        task=sc.task, preset=cfg.get("preset"), config=_jsonable(cfg),
        model=sc.model.to_dict(), drives=sc.drives.to_dict(), p_click=sc.p_click,
        seed=sc.blocks.get("trajectory", {}).get("seed"), workers=workers,
        versions=dict(python=platform.python_version(), numpy=np.__version__, scipy=scipy.__version__),
        warnings=sc.warnings, summary=_jsonable(summary), elapsed_s=round(time.time() - t0, 3),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "result.csv", header, rows)
        for name, (h, r) in extra_csv.items():
            _write_csv(out / name, h, r)
        if svg_grid is not None:
            observables.write_wigner_svg(svg_grid, out / "wigner.svg")
        if spectrum is not None:
            observables.write_spectrum_csv(spectrum.freq, spectrum.intensity, out / "spectrum.csv")
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return dict(header=header, rows=rows, summary=summary, manifest=manifest)


# ---------------------------------------------------------------- entry


def _fail(code: int, kind: str, reason: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "reason": reason}) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vibronic", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("command", choices=TASKS + ("run", "validate", "presets"))
    ap.add_argument("--config", help="YAML scenario file")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None, help="override trajectory seed")
    ap.add_argument("--preset", default=None, help="start from a named preset")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "presets":
        for name, entry in PRESETS.items():
            req = f"  (requires {', '.join(entry['required'])})" if entry["required"] else ""
            print(f"{name:22s} {entry['description']}{req}")
        return EXIT_OK
    if args.config is None and args.preset is None:
        return _fail(EXIT_PARSE, "parse", "--config or --preset is required")
    if args.workers < 1:
        return _fail(EXIT_VALIDATION, "validation", "--workers must be >= 1")
    try:
        user = load_config(args.config)
    except ParseError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    task = args.command if args.command in TASKS else None
    try:
        cfg = resolve_config(user, preset=args.preset, task=task, seed=args.seed)
        if args.command == "validate":
            sc = validate_config(cfg)
            warnings = lint(sc)
            print(json.dumps({"valid": True, "task": sc.task, "warnings": warnings}))
            return EXIT_OK
        result = execute(cfg, out_dir=args.out, workers=args.workers)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    except (VibronicError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", f"{type(exc).__name__}: {exc}")
    print(json.dumps({"ok": True, "task": cfg["task"], "out": str(args.out),
                      "rows": len(result["rows"])}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
