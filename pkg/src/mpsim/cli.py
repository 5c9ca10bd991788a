"""Command-line driver: configuration parsing, experiment presets, artifacts.

Every number written to summary.json comes from a library call (diagnostics,
state, zeromode); this module only orchestrates and serializes. Output file
names and keys are frozen in schema/output_schema_v1.json.
"""

from __future__ import annotations

import dataclasses
import difflib
import json
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # stdlib from 3.11 on
    import tomli as tomllib
from dataclasses import dataclass, field
from importlib import resources

import click
import numpy as np

from . import __version__
from .diagnostics import SeriesCollector, linear_fit, scaling_curve, scaling_fit
from .dynamics import run
from .errors import ConfigurationError, FormatError, MpsimError
from .spectral import Grid
from .state import (
    SimParams,
    SimState,
    make_divfree_random_field,
    make_gaussian_packet,
    make_hydrogen_ground_state,
    read_checkpoint,
    write_checkpoint,
)
from .zeromode import ZeroModeSpec, certificate, sobol_ball_samples

__all__ = ["RunConfig", "parse_config", "run_experiment", "main", "EXIT_CODES"]

EXPERIMENTS = ("simulate", "zeromode", "hydrogen", "scaling", "epsilon_sweep")

EXIT_CODES = {"config": 2, "gauge": 3, "blowup": 4, "nonconvergence": 5, "io": 6}

SCHEMA_VERSION = 1


def _float3(v):
    out = tuple(float(c) for c in v)
    if len(out) != 3:
        raise ConfigurationError(f"expected 3 components, got {len(out)}")
    return out


def _float_list(v):
    out = tuple(float(c) for c in v)
    if not out:
        raise ConfigurationError("expected a non-empty list of numbers")
    return out


# key -> (caster, base default); per-experiment presets overlay the defaults
KNOWN_KEYS = {
    "experiment": (str, "simulate"),
    "n": (int, 24),
    "length": (float, 10.0),
    "epsilon": (float, 1.0e-2),
    "dt": (lambda v: None if v is None else float(v), None),
    "t_end": (float, 1.0),
    "alpha": (float, 1.0 / 137.0),
    "z": (float, 0.0),
    "nucleus_pos": (lambda v: None if v is None else _float3(v), None),
    "picard_tol": (float, 1.0e-10),
    "picard_max": (int, 50),
    "output_dir": (str, "mpsim-out"),
    "sample_every": (int, 1),
    "seed": (int, 0),
    "checkpoint_every": (int, 0),  # 0 disables
    "width": (float, 1.0),
    "momentum": (_float3, (0.0, 0.0, 0.0)),
    "a_amplitude": (float, 0.0),
    "mode_cut": (int, 3),
    "lambdas": (_float_list, (0.5, 1.0, 2.0, 4.0)),
    "epsilons": (_float_list, (1.0e-1, 1.0e-2, 1.0e-3)),
}

PRESETS = {
    "simulate": {},
    "zeromode": {},
    "hydrogen": {"z": 1.0, "length": 40.0, "n": 64, "t_end": 0.0},
    "scaling": {"z": 1.0, "alpha": 1.0, "a_amplitude": 0.3},
    # fixed dt so the sweep compares runs at identical quadrature error
    "epsilon_sweep": {"alpha": 1.0, "t_end": 0.6, "dt": 0.02, "a_amplitude": 0.2},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment configuration plus its provenance record."""

    experiment: str
    params: SimParams
    output_dir: str
    sample_every: int
    seed: int
    checkpoint_every: int | None
    extras: dict = field(default_factory=dict)
    effective: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)


def _reject_unknown(keys):
    for k in keys:
        if k not in KNOWN_KEYS:
            close = difflib.get_close_matches(k, KNOWN_KEYS, n=1)
            hint = f"; closest valid key: {close[0]!r}" if close else ""
            raise ConfigurationError(f"unknown config key {k!r}{hint}")


def parse_config(experiment: str, file=None, flags=None) -> RunConfig:
    """Merge defaults <- preset <- config file <- flags into a RunConfig.

    `file` is a TOML path or None; `flags` maps key -> raw value for options
    given explicitly. Every key's effective value and winning source land in
    the returned provenance record, and layered values (file vs flag) are
    kept side by side so the manifest records both.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigurationError(
            f"experiment must be one of {EXPERIMENTS}, got {experiment!r}"
        )

    file_vals = {}
    if file is not None:
        try:
            with open(file, "rb") as fh:
                file_vals = tomllib.load(fh)
        except OSError as exc:
            raise FormatError(f"cannot read config file {file}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise FormatError(f"config file {file} is not valid TOML: {exc}") from exc
    flag_vals = dict(flags or {})
    _reject_unknown(file_vals)
    _reject_unknown(flag_vals)

    effective = {}
    provenance = {}
    preset = PRESETS[experiment]
    for key, (cast, default) in KNOWN_KEYS.items():
        layers = {"default": preset.get(key, default)}
        if key in file_vals:
            layers["file"] = file_vals[key]
        if key in flag_vals:
            layers["flag"] = flag_vals[key]
        source = "flag" if key in flag_vals else "file" if key in file_vals else "default"
        raw = layers[source]
        try:
            value = cast(raw) if raw is not None else None
        except (TypeError, ValueError, ConfigurationError) as exc:
            raise ConfigurationError(f"config key {key!r}: {exc}") from exc
        effective[key] = value
        provenance[key] = {"source": source, "values": layers}
    effective["experiment"] = experiment
    provenance["experiment"]["source"] = "subcommand"

    if effective["sample_every"] < 1:
        raise ConfigurationError(
            f"sample_every must be >= 1, got {effective['sample_every']}"
        )
    if effective["checkpoint_every"] < 0:
        raise ConfigurationError(
            f"checkpoint_every must be >= 0, got {effective['checkpoint_every']}"
        )

    try:
        params = SimParams(
            grid=Grid(effective["n"], effective["length"]),
            epsilon=effective["epsilon"],
            dt=effective["dt"],
            t_end=effective["t_end"],
            alpha=effective["alpha"],
            z=effective["z"],
            nucleus_pos=effective["nucleus_pos"],
            picard_tol=effective["picard_tol"],
            picard_max=effective["picard_max"],
        )
    except (TypeError, ValueError) as exc:
        # constructor validation (grid parity, step bounds, ...) is still a
        # configuration problem from the caller's point of view
        raise ConfigurationError(str(exc)) from exc
    effective["dt"] = params.dt  # record the auto-resolved step
    effective["nucleus_pos"] = list(params.nucleus_pos)

    extras = {
        k: effective[k]
        for k in ("width", "momentum", "a_amplitude", "mode_cut", "lambdas", "epsilons")
    }
    return RunConfig(
        experiment=experiment,
        params=params,
        output_dir=effective["output_dir"],
        sample_every=effective["sample_every"],
        seed=effective["seed"],
        checkpoint_every=effective["checkpoint_every"] or None,
        extras=extras,
        effective=effective,
        provenance=provenance,
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _initial_state(cfg: RunConfig) -> SimState:
    grid = cfg.params.grid
    psi = make_gaussian_packet(
        grid, width=cfg.extras["width"], momentum=cfg.extras["momentum"]
    )
    if cfg.extras["a_amplitude"] > 0.0:
        a = make_divfree_random_field(
            grid, cfg.extras["a_amplitude"], seed=cfg.seed, mode_cut=cfg.extras["mode_cut"]
        )
    else:
        a = np.zeros((3,) + grid.shape)
    return SimState(psi, a, np.zeros((3,) + grid.shape), 0.0)


def _load_restart(cfg: RunConfig, restart_path) -> SimState:
    state, header = read_checkpoint(restart_path)
    fields = {
        "n": cfg.params.grid.n,
        "length": cfg.params.grid.length,
        "alpha": cfg.params.alpha,
        "epsilon": cfg.params.epsilon,
        "z": cfg.params.z,
    }
    for name, want in fields.items():
        if header[name] != want:
            raise ConfigurationError(
                f"checkpoint field {name!r} = {header[name]} does not match "
                f"configured {want}"
            )
    return state


def _run_simulate(cfg: RunConfig, out: str, restart=None) -> dict:
    params = cfg.params
    state0 = _load_restart(cfg, restart) if restart else _initial_state(cfg)
    collector = SeriesCollector(params)
    observers = [collector]
    if cfg.checkpoint_every:

        def checkpointer(state, report):
            if report is not None and report.step % cfg.checkpoint_every == 0:
                write_checkpoint(
                    os.path.join(out, f"ckpt-{report.step:06d}.bin"), state, params
                )

        observers.append(checkpointer)
    final, _ = run(params, state0, observers=observers, sample_every=cfg.sample_every)
    collector.write_csv(os.path.join(out, "series.csv"))
    write_checkpoint(os.path.join(out, "final.bin"), final, params)
    return collector.summary()


def _run_hydrogen(cfg: RunConfig, out: str) -> dict:
    params = cfg.params
    grid = params.grid
    psi, meta = make_hydrogen_ground_state(grid, params.z, params.nucleus_pos)
    state = SimState(psi, np.zeros((3,) + grid.shape), np.zeros((3,) + grid.shape))
    collector = SeriesCollector(params)
    collector(state)
    collector.write_csv(os.path.join(out, "series.csv"))
    rep = collector.reports[0]
    return {
        "rayleigh_quotient": rep.continuum_total,
        "discrete_total": rep.total,
        "kinetic": rep.kinetic,
        "coulomb": rep.coulomb,
        "norm": rep.norm,
        "mean_shift": rep.mean_shift,
        "raw_norm": meta["raw_norm"],
        "continuum_norm": meta["continuum_norm"],
        "tail_level": meta["tail_level"],
        "warnings": meta["warnings"],
    }


def _run_zeromode(cfg: RunConfig) -> dict:
    spec = ZeroModeSpec(np.array([1.0, 0.0]))
    samples = sobol_ball_samples(count=1024, radius=10.0, seed=cfg.seed)
    return certificate(spec, cfg.params.alpha, samples=samples)


def _run_scaling(cfg: RunConfig) -> dict:
    state = _initial_state(cfg)
    a = state.a if cfg.extras["a_amplitude"] > 0.0 else None
    curve = scaling_curve(state.psi, a, cfg.params, cfg.extras["lambdas"])
    return {"curve": [list(row) for row in curve], "fit": scaling_fit(curve)}


def _run_epsilon_sweep(cfg: RunConfig, out: str) -> dict:
    epsilons = cfg.extras["epsilons"]
    rates = []
    for j, eps in enumerate(epsilons):
        params = dataclasses.replace(cfg.params, epsilon=eps)
        collector = SeriesCollector(params)
        run(params, _initial_state(cfg), observers=[collector], sample_every=cfg.sample_every)
        collector.write_csv(os.path.join(out, f"series-{j}.csv"))
        rates.append(collector.summary()["energy_drop_rate"])
    slope, intercept, r2 = linear_fit(epsilons, rates)
    return {
        "epsilons": list(epsilons),
        "drop_rates": rates,
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
    }


def run_experiment(cfg: RunConfig, restart=None, config_file=None, flags=None) -> int:
    """Execute one experiment and write its artifacts; returns 0 on success."""
    out = cfg.output_dir
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create output directory {out}: {exc}") from exc

    started = time.perf_counter()
    if cfg.experiment == "simulate":
        summary = _run_simulate(cfg, out, restart=restart)
    elif cfg.experiment == "hydrogen":
        summary = _run_hydrogen(cfg, out)
    elif cfg.experiment == "zeromode":
        summary = _run_zeromode(cfg)
    elif cfg.experiment == "scaling":
        summary = _run_scaling(cfg)
    else:
        summary = _run_epsilon_sweep(cfg, out)
    elapsed = time.perf_counter() - started

    _write_json(os.path.join(out, "summary.json"), summary)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "package_version": __version__,
        "invocation": {
            "command": cfg.experiment.replace("_", "-"),
            "config_file": str(config_file) if config_file else None,
            "flags": _jsonable(dict(flags or {})),
            "restart": str(restart) if restart else None,
        },
        "effective_config": cfg.effective,
        "provenance": cfg.provenance,
        "timings": {"wall_seconds": elapsed},
        "threads": int(os.environ.get("MPSIM_THREADS", "1")),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return 0


def load_output_schema() -> dict:
    """The frozen schema shipped with the package."""
    text = resources.files("mpsim").joinpath("schema/output_schema_v1.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# click wiring


def _common_options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(), default=None,
                     help="TOML config file; flags override its values."),
        click.option("--out", "output_dir", type=str, default=None,
                     help="Output directory (created if missing)."),
        click.option("--seed", type=int, default=None),
        click.option("--sample-every", type=int, default=None),
        click.option("--n", type=int, default=None, help="Grid points per axis."),
        click.option("--length", type=float, default=None, help="Box edge length."),
        click.option("--epsilon", type=float, default=None),
        click.option("--dt", type=float, default=None),
        click.option("--t-end", type=float, default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--z", type=float, default=None),
        click.option("--width", type=float, default=None),
        click.option("--momentum", type=str, default=None, help="px,py,pz"),
        click.option("--a-amplitude", type=float, default=None),
        click.option("--picard-tol", type=float, default=None),
        click.option("--picard-max", type=int, default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _collect_flags(values: dict) -> dict:
    renames = {"output_dir": "output_dir"}
    flags = {}
    for key, val in values.items():
        if val is None:
            continue
        name = renames.get(key, key)
        if name in ("momentum",):
            val = tuple(float(p) for p in str(val).split(","))
        if name in ("lambdas", "epsilons"):
            val = tuple(float(p) for p in str(val).split(","))
        flags[name] = val
    return flags


def _dispatch(experiment, config_file, restart=None, **option_values):
    flags = _collect_flags(option_values)
    try:
        cfg = parse_config(experiment, file=config_file, flags=flags)
        return run_experiment(cfg, restart=restart, config_file=config_file, flags=flags)
    except MpsimError as exc:
        payload = {"error_class": exc.tag, "message": str(exc)}
        click.echo(json.dumps(payload), err=True)
        sys.exit(EXIT_CODES[exc.tag])


@click.group()
@click.version_option(version=__version__, prog_name="mpsim")
def main():
    """Pseudospectral simulator for a damped Pauli particle coupled to its
    magnetic field, with verification experiments."""


@main.command()
@_common_options
@click.option("--checkpoint-every", type=int, default=None,
              help="Write ckpt-<step>.bin every N steps (0 disables).")
@click.option("--restart", type=click.Path(exists=False), default=None,
              help="Resume from a checkpoint file.")
def simulate(config_file, restart, **option_values):
    """Evolve a Gaussian packet (plus optional seeded field) and record
    the diagnostics series."""
    sys.exit(_dispatch("simulate", config_file, restart=restart, **option_values))


@main.command()
@_common_options
def zeromode(config_file, **option_values):
    """Certify the closed-form zero mode and the critical-charge ratio."""
    sys.exit(_dispatch("zeromode", config_file, **option_values))


@main.command()
@_common_options
def hydrogen(config_file, **option_values):
    """Build the hydrogenic ground state and report its energies."""
    sys.exit(_dispatch("hydrogen", config_file, **option_values))


@main.command()
@_common_options
@click.option("--lambdas", type=str, default=None, help="Comma-separated dilation factors.")
def scaling(config_file, **option_values):
    """Energies of the exactly dilated state family and the power-law fit."""
    sys.exit(_dispatch("scaling", config_file, **option_values))


@main.command("epsilon-sweep")
@_common_options
@click.option("--epsilons", type=str, default=None, help="Comma-separated damping values.")
def epsilon_sweep(config_file, **option_values):
    """Energy-drop rate across damping strengths, with a linear fit."""
    sys.exit(_dispatch("epsilon_sweep", config_file, **option_values))


if __name__ == "__main__":
    main()
