"""Configuration, run directories and manifests, and the per-command pipelines.

A configuration is a JSON document validated against ``CONFIG_SCHEMA``.
Values can be overridden from the environment with ``SQK_<SECTION>__<KEY>``
(for example ``SQK_SIMULATION__N_TRAJ=8``); the value is parsed as JSON when
possible. Command-line flags win over both.

Every command writes into a fresh run directory
``<out_dir>/<command>-<config digest>-<n>``; existing directories are never
touched. Tabular output is CSV with a header row naming columns and units,
written atomically.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

log = logging.getLogger(__name__)

ENV_PREFIX = "SQK_"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "spinsqueeze run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "units": {
            "type": "object",
            "description": "informational; all quantities are in trap units hbar = m = omega = 1",
            "properties": {
                "energy": {"const": "hbar_omega"},
                "length": {"const": "a_ho"},
                "time": {"const": "1/omega"},
            },
        },
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gamma", "t_ratio"],
            "properties": {
                "n_atoms": _pos,
                "mu": {**_pos, "description": "Thomas-Fermi mu/hbar omega; fixes N from gamma"},
                "gamma": _pos,
                "t_ratio": _pos,
                "seed": {"type": "integer", "minimum": 0},
                "trap": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"kind": {"enum": ["harmonic"]}, "omega": _pos},
                },
            },
            "oneOf": [{"required": ["n_atoms"], "not": {"required": ["mu"]}},
                      {"required": ["mu"], "not": {"required": ["n_atoms"]}}],
        },
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"points": {"type": "integer", "minimum": 4}, "extent": _pos, "spacing": _pos},
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_traj": {"type": "integer", "minimum": 2},
                "t_max": _pos,
                "dt": _pos,
                "dt_factor": _pos,
                "sample_stride": _posint,
                "batch": _posint,
                "quench": {"type": "boolean"},
                "footnote": {"type": "boolean"},
                "track_energy": {"type": "boolean"},
            },
        },
        "semiclassical": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_ratios": {"type": "array", "items": _pos, "minItems": 1},
                "eps_max": _pos,
            },
        },
        "fig1": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_ratios": {"type": "array", "items": _pos, "minItems": 1},
                "mu": _pos,
                "gamma_a": _pos,
                "gammas": {"type": "array", "items": _pos, "minItems": 1},
                "t_ratio_b": _pos,
                "n_values": {"type": "array", "items": _pos, "minItems": 1},
                "gamma_c": _pos,
                "n_traj": {"type": "integer", "minimum": 0},
                "points": {"type": "integer", "minimum": 4},
                "t_max_rescaled": _pos,
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gpe_residual": _pos,
                "dk_form": _pos,
                "quadrature_rel": _pos,
                "degeneracy": _pos,
            },
        },
    },
}

DEFAULTS = {
    "units": {"energy": "hbar_omega", "length": "a_ho", "time": "1/omega"},
    "physical": {"seed": 0, "trap": {"kind": "harmonic", "omega": 1.0}},
    "lattice": {},
    "simulation": {"n_traj": 64, "dt_factor": 0.025, "sample_stride": 50, "batch": 16,
                   "quench": True, "footnote": False, "track_energy": False},
    "semiclassical": {"t_ratios": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]},
    "fig1": {
        "t_ratios": [1.0, 1.5, 2.0, 2.89, 4.0, 6.0, 8.0, 10.0, 12.0],
        "mu": 5.1,
        "gamma_a": 3e-4,
        "gammas": [3e-3, 1.5e-3, 1e-3, 5e-4],
        "t_ratio_b": 2.89,
        "n_values": [3.7e3, 1.5e4, 6.1e4, 2.4e5, 5.6e5],
        "gamma_c": 1.4e-4,
        "n_traj": 0,
        "points": 10,
        "t_max_rescaled": 0.6,
    },
    "tolerances": {"gpe_residual": 1e-11, "dk_form": 1e-2, "quadrature_rel": 1e-10, "degeneracy": 1e-7},
}

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "spinsqueeze run manifest",
    "type": "object",
    "required": ["command", "toolkit_version", "config", "seeds", "started", "finished",
                 "tolerances", "files", "environment"],
    "properties": {
        "command": {"type": "string"},
        "toolkit_version": {"type": "string"},
        "config": {"type": "object"},
        "seeds": {"type": "object"},
        "started": {"type": "string"},
        "finished": {"type": "string"},
        "tolerances": {"type": "object"},
        "threads": {"type": "integer"},
        "files": {
            "type": "object",
            "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        },
        "environment": {"type": "object"},
        "summary": {"type": "object"},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


# ---------------------------------------------------------------------------
# configuration

def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_env_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def env_overrides(environ=None) -> dict:
    """Nested dict from SQK_SECTION__KEY[__SUBKEY]=value variables."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        path = [p.lower() for p in name[len(ENV_PREFIX):].split("__")]
        node = out
        for p in path[:-1]:
            node = node.setdefault(p, {})
        node[path[-1]] = _parse_env_value(value)
    return out


def _error_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_error_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None,
                environ=None) -> dict:
    """Defaults <- file <- SQK_ environment <- explicit overrides, then validated.

    A run manifest can be passed in place of a configuration; its config
    snapshot is used, which reproduces the original run.
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        if isinstance(raw, dict) and "toolkit_version" in raw and "config" in raw:
            raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = _merge(raw, env_overrides(environ))
    raw = _merge(raw, overrides or {})
    if "physical" not in raw:
        raise ConfigError("<root>: 'physical' is a required property")
    validate_config(raw)
    cfg = _merge(DEFAULTS, raw)
    validate_config(cfg)
    return cfg


def physical_config(cfg: dict):
    from .ground_state import n_atoms_from
    from .lattice import PhysicalConfig, TrapSpec
    p = cfg["physical"]
    trap = TrapSpec(kind="harmonic", omega=float(p["trap"].get("omega", 1.0)))
    n = p["n_atoms"] if "n_atoms" in p else n_atoms_from(p["gamma"], p["mu"])
    return PhysicalConfig(float(n), float(p["gamma"]), float(p["t_ratio"]), trap=trap, seed=int(p["seed"]))


# ---------------------------------------------------------------------------
# run directories and artifacts

def config_digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def write_csv(path: str | os.PathLike, columns: list[str], rows, units: dict | None = None) -> Path:
    """CSV with a header row of ``name [unit]`` labels, written atomically."""
    units = units or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{c} [{units[c]}]" if c in units else c for c in columns])
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return atomic_write_bytes(path, buf.getvalue().encode())


def read_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = [h.split(" [")[0] for h in rows[0]]
    data = np.array(rows[1:], dtype=float).reshape(-1, len(names))
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path: str | os.PathLike, obj) -> Path:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    return atomic_write_bytes(path, text.encode())


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def new_run_dir(out_dir: str | os.PathLike, command: str, cfg: dict) -> Path:
    """Fresh directory; an existing one is never reused."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    stem = f"{command}-{config_digest(cfg)[:10]}"
    for n in range(10_000):
        d = base / f"{stem}-{n:03d}"
        try:
            d.mkdir()
            return d
        except FileExistsError:
            continue
    raise RuntimeError(f"no free run directory under {base}")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict
    tolerances: dict
    threads: int = 1
    started: str = dataclasses.field(default_factory=_now)
    finished: str = ""
    files: dict = dataclasses.field(default_factory=dict)
    summary: dict = dataclasses.field(default_factory=dict)
    toolkit_version: str = __version__

    def record(self, run_dir: Path, *paths: Path):
        for p in paths:
            self.files[str(Path(p).relative_to(run_dir))] = file_digest(p)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["environment"] = {"python": platform.python_version(), "numpy": np.__version__,
                            "platform": platform.platform()}
        return d

    def write(self, run_dir: Path) -> Path:
        self.finished = _now()
        d = self.to_dict()
        jsonschema.validate(d, MANIFEST_SCHEMA)
        return write_json(run_dir / "manifest.json", d)


def validate_manifest(path: str | os.PathLike) -> dict:
    d = json.loads(Path(path).read_text())
    jsonschema.validate(d, MANIFEST_SCHEMA)
    return d


# ---------------------------------------------------------------------------
# pipelines

def _setup(cfg: dict):
    from .simulation import prepare_simulation
    lat, sim, tol = cfg["lattice"], cfg["simulation"], cfg["tolerances"]
    return prepare_simulation(physical_config(cfg), points=lat.get("points"), extent=lat.get("extent"),
                              spacing=lat.get("spacing"), quench=sim["quench"], footnote=sim["footnote"],
                              residual_tol=tol["gpe_residual"], form_tol=tol["dk_form"],
                              deg_tol=tol["degeneracy"])


def cmd_gpe(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    from .ground_state import coupling_before_pulse, energy_parts, solve_gpe, thomas_fermi
    from .lattice import build_grid, calibrate_cell_size, default_extent, LatticeGrid, write_fields
    config = physical_config(cfg)
    lat = cfg["lattice"]
    tf = thomas_fermi(config)
    ell = lat.get("spacing") or calibrate_cell_size(config.t_ratio * tf.mu_tf)
    if lat.get("points"):
        grid = LatticeGrid.cubic(lat["points"], ell)
    else:
        grid = build_grid(config, lat.get("extent") or default_extent(config, tf.mu_tf), tf.mu_tf, ell)
    gn = coupling_before_pulse(config) * config.n_atoms
    sol = solve_gpe(grid, config.trap, gn, n_per_component=config.n_atoms,
                    residual_tol=cfg["tolerances"]["gpe_residual"])
    x = grid.axes[0]
    mid = tuple(s // 2 for s in grid.shape[1:])
    cut = sol.phi[(slice(None),) + mid]
    f1 = write_csv(run_dir / "condensate_cut.csv", ["x", "phi"], zip(x, cut),
                   {"x": "a_ho", "phi": "a_ho^-3/2"})
    f2 = write_fields(run_dir / "phi.sqkf", grid, sol.phi[None].astype(complex))
    summary = {"mu_phi": sol.mu_phi, "mu_tf": tf.mu_tf, "gn": gn, "residual": sol.residual,
               "energy": sol.energy, "energy_parts": energy_parts(sol, config.trap),
               "grid_shape": list(grid.shape), "spacing": list(grid.spacing)}
    f3 = write_json(run_dir / "ground_state.json", summary)
    return {"files": [f1, f2, f3], "summary": summary}


def cmd_bdg(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    setup = _setup(cfg)
    m = setup.modes
    rows = zip(range(m.energies.size), m.energies, m.vv, m.dk, m.dk_hf, m.weights)
    f1 = write_csv(run_dir / "modes.csv", ["k", "energy", "vv", "dk", "dk_hf", "weight"], rows,
                   {"energy": "hbar_omega"})
    summary = setup.metadata()
    summary["dk_report"] = dataclasses.asdict(setup.dk_report)
    f2 = write_json(run_dir / "bdg_summary.json", summary)
    return {"files": [f1, f2], "summary": summary}


def cmd_simulate(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    from .dynamics import ensemble_xi2, extract_min, write_curve_csv
    from .simulation import estimate_t_max, rescaled_time_factor, run_ensemble
    sim = cfg["simulation"]
    setup = _setup(cfg)
    t_max = sim.get("t_max") or estimate_t_max(setup)
    rec = run_ensemble(setup, sim["n_traj"], seed=cfg["physical"]["seed"], t_max=t_max, dt=sim.get("dt"),
                       dt_factor=sim["dt_factor"], sample_stride=sim["sample_stride"], batch=sim["batch"],
                       workers=threads, track_energy=sim["track_energy"])
    curve = ensemble_xi2(rec, setup.config.n_atoms, t_rescale=rescaled_time_factor(setup))
    f1 = write_curve_csv(run_dir / "xi2_curve.csv", curve)
    mi = extract_min(curve)
    summary = setup.metadata()
    summary.update({"n_traj": rec.n_traj, "t_max": t_max, "xi2_min": mi.xi2_min,
                    "xi2_min_stderr": mi.xi2_stderr, "t_best": mi.t_best, "plateau_width": mi.plateau_width,
                    "ratio_to_eq17": mi.xi2_min / setup.xi2_classical})
    files = [f1]
    if rec.energy is not None:
        drift = np.max(np.abs(rec.energy / rec.energy[:, :1] - 1), axis=1)
        summary["max_relative_energy_drift"] = float(drift.max())
    files.append(write_json(run_dir / "simulation_summary.json", summary))
    return {"files": files, "summary": summary}


def _semiclassical_row(args):
    from .semiclassical import f_external, f_mix
    t, eps_max, epsrel = args
    fe, fm = f_external(t), f_mix(t, eps_max, epsrel=epsrel)
    return t, fe, fm, fe + fm


def _lda_row(args):
    from .lda import f_lda
    t, epsrel = args
    return f_lda(t, epsrel=epsrel)


def _map(fun, items, threads):
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fun, items))
    return [fun(i) for i in items]


def cmd_semiclassical(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    sc = cfg["semiclassical"]
    ts = [float(t) for t in sc["t_ratios"]]
    rows = _map(_semiclassical_row, [(t, sc.get("eps_max"), cfg["tolerances"]["quadrature_rel"]) for t in ts], threads)
    gamma = cfg["physical"]["gamma"]
    out = [(t, fe, fm, ft, gamma * ft, 1 / math.sqrt(gamma * ft)) for t, fe, fm, ft in rows]
    f1 = write_csv(run_dir / "master_curve.csv",
                   ["t_ratio", "f_ext", "f_mix", "f_total", "xi2_min", "inv_xi_min"], out,
                   {"t_ratio": "k_B T/mu_Phi"})
    summary = {"gamma": gamma, "n_points": len(out)}
    return {"files": [f1], "summary": summary}


def cmd_lda(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    sc = cfg["semiclassical"]
    ts = [float(t) for t in sc["t_ratios"]]
    # the outer radial quadrature of the LDA does not go below 1e-8
    eps = max(1e-8, cfg["tolerances"]["quadrature_rel"])
    lda_vals = _map(_lda_row, [(t, eps) for t in ts], threads)
    sc_rows = _map(_semiclassical_row, [(t, sc.get("eps_max"), cfg["tolerances"]["quadrature_rel"]) for t in ts], threads)
    out = [(t, fl, r[3], fl / r[3] - 1) for t, fl, r in zip(ts, lda_vals, sc_rows)]
    f1 = write_csv(run_dir / "lda_curve.csv", ["t_ratio", "f_lda", "f_semiclassical", "relative_gap"], out,
                   {"t_ratio": "k_B T/mu_Phi"})
    summary = {"rho_convention": "mu_hom/g plus Bogoliubov depletion inside; ideal Bose gas outside",
               "normalisation": "xi2/gamma, same as the semiclassical f"}
    return {"files": [f1], "summary": summary}


def _fig1_point(args):
    """One simulated point: (label, xi2 curve rows, summary)."""
    from .dynamics import ensemble_xi2, extract_min
    from .ground_state import n_atoms_from
    from .lattice import PhysicalConfig
    from .simulation import prepare_simulation, rescaled_time_factor, run_ensemble
    n_atoms, gamma, t_ratio, n_traj, points, t_max_rescaled, seed, sim = args
    config = PhysicalConfig(n_atoms, gamma, t_ratio, seed=seed)
    setup = prepare_simulation(config, points=points, quench=sim["quench"], footnote=sim["footnote"])
    scale = rescaled_time_factor(setup)
    rec = run_ensemble(setup, n_traj, seed=seed, t_max=t_max_rescaled / scale, dt_factor=sim["dt_factor"],
                       sample_stride=sim["sample_stride"], batch=sim["batch"])
    curve = ensemble_xi2(rec, n_atoms, t_rescale=scale)
    mi = extract_min(curve)
    return curve, mi, setup


def cmd_reproduce_fig1(cfg: dict, run_dir: Path, threads: int = 1) -> dict:
    """Three CSV bundles: (a) temperature sweep, (b) gamma sweep, (c) N sweep.

    Simulations are only run when ``fig1.n_traj`` > 0; the default keeps the
    command to the analytical curves plus the lattice predictions.
    """
    from .bdg import xi2_min_classical, xi2_min_quantum
    from .ground_state import n_atoms_from
    from .lattice import PhysicalConfig
    from .simulation import prepare_simulation
    f = cfg["fig1"]
    sim = cfg["simulation"]
    seed = cfg["physical"]["seed"]
    files = []
    # (a)
    ts = [float(t) for t in f["t_ratios"]]
    sc_rows = _map(_semiclassical_row, [(t, None, cfg["tolerances"]["quadrature_rel"]) for t in ts], threads)
    lda_vals = _map(_lda_row, [(t, 1e-8) for t in ts], threads)
    rows_a = []
    gamma_a = f["gamma_a"]
    n_a = n_atoms_from(gamma_a, f["mu"])
    for t, r, fl in zip(ts, sc_rows, lda_vals):
        setup = prepare_simulation(PhysicalConfig(n_a, gamma_a, t, seed=seed), points=f["points"])
        eq17 = setup.xi2_classical / gamma_a
        eq20 = setup.xi2_quantum / gamma_a
        simulated, err = math.nan, math.nan
        if f["n_traj"] > 0:
            _, mi, _ = _fig1_point((n_a, gamma_a, t, f["n_traj"], f["points"], f["t_max_rescaled"], seed, sim))
            simulated, err = mi.xi2_min / gamma_a, mi.xi2_stderr / gamma_a
        rows_a.append((t, eq17, eq20, r[3], fl, simulated, err))
    files.append(write_csv(run_dir / "fig1a_temperature.csv",
                           ["t_ratio", "eq17_lattice", "eq20_lattice", "semiclassical", "lda",
                            "simulation", "simulation_stderr"], rows_a,
                           {"t_ratio": "k_B T/mu_Phi", "eq17_lattice": "xi2/gamma", "eq20_lattice": "xi2/gamma",
                            "semiclassical": "xi2/gamma", "lda": "xi2/gamma", "simulation": "xi2/gamma",
                            "simulation_stderr": "xi2/gamma"}))
    # (b) and (c)
    for label, pairs in (("fig1b_gamma", [(n_atoms_from(g, f["mu"]), g) for g in f["gammas"]]),
                         ("fig1c_number", [(n, f["gamma_c"]) for n in f["n_values"]])):
        rows = []
        for n, g in pairs:
            if f["n_traj"] > 0:
                curve, mi, setup = _fig1_point((n, g, f["t_ratio_b"], f["n_traj"], f["points"],
                                                f["t_max_rescaled"], seed, sim))
                for tr_, x, e in zip(curve.t_rescaled, curve.xi2, curve.xi2_stderr):
                    rows.append((n, g, tr_, x / g, e / g))
            else:
                setup = prepare_simulation(PhysicalConfig(n, g, f["t_ratio_b"], seed=seed), points=f["points"])
                rows.append((n, g, math.nan, setup.xi2_classical / g, math.nan))
        files.append(write_csv(run_dir / f"{label}.csv", ["n_atoms", "gamma", "t_rescaled", "xi2_over_gamma",
                                                          "stderr"], rows,
                               {"t_rescaled": "mu_Phi gamma^1/2 t/hbar"}))
    summary = {"simulated": f["n_traj"] > 0}
    return {"files": files, "summary": summary}


COMMANDS = {
    "gpe": cmd_gpe,
    "bdg": cmd_bdg,
    "simulate": cmd_simulate,
    "semiclassical": cmd_semiclassical,
    "lda": cmd_lda,
    "reproduce-fig1": cmd_reproduce_fig1,
}


def execute(command: str, cfg: dict, out_dir: str | os.PathLike, threads: int = 1) -> Path:
    """Run one command into a new run directory and write its manifest."""
    run_dir = new_run_dir(out_dir, command, cfg)
    manifest = RunManifest(command=command, config=cfg, seeds={"seed": cfg["physical"]["seed"]},
                           tolerances=cfg["tolerances"], threads=threads)
    result = COMMANDS[command](cfg, run_dir, threads)
    manifest.record(run_dir, *result["files"])
    manifest.summary = json.loads(json.dumps(result.get("summary", {}), default=_json_default))
    manifest.write(run_dir)
    log.info("wrote %s", run_dir)
    return run_dir
