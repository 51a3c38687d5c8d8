"""Experiment configuration: flat INI-style files.

A config names a target model, an optional list of constraint blocks, the
sampler settings, metric settings, and output names. Everything is validated
up front so a bad file fails before any computation or file output starts.

Sections and keys::

    [experiment]  id, seed, samples, tol
    [model]       kind = mixture | empirical | reaction_diffusion, + params
    [sampler]     algorithm (one or more), stepper, steps, scheduler_n, mode,
                  gn_iters, gn_damping, final_budget, eci_events, pocs_cycles
    [constraint.K] kind = halfspace | band | quadratic | min_distance, + params
    [metrics]     reference (path | rejection | simulation),
                  reference_samples, n_projections
    [output]      csv, figures, figure_samples
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .chance import Scheduler
from .constraints import ConstraintSet, LinearBand, LinearIneq, MinDistance, QuadIneq
from .errors import ConfigError
from .flow import EmpiricalTarget, FlowModel, GaussianMixtureTarget, load_matrix
from .numerics import stream_rng
from .oracles import rejection_sample
from .projection import GnConfig
from .reaction_diffusion import RdGrid, rd_constraints, rd_dataset
from .samplers import ALGORITHMS, MODES, STEPPERS, SamplerConfig

__all__ = ["ExperimentConfig", "Workbench", "parse_config", "build_workbench",
           "make_sampler_config"]

# Dedicated RNG stream ids, far above any sample index.
REFERENCE_STREAM = 2**48 + 1
DIRECTION_STREAM = 2**48 + 2

_SECTION_KEYS = {
    "experiment": {"id", "seed", "samples", "tol"},
    "model": {"kind", "means", "scales", "weights", "path", "n_s", "n_t",
              "dt_phys", "nu", "rho", "delta", "train_fields", "data_seed"},
    "sampler": {"algorithm", "stepper", "steps", "scheduler_n", "mode",
                "gn_iters", "gn_damping", "final_budget", "eci_events",
                "pocs_cycles"},
    "metrics": {"reference", "reference_samples", "n_projections"},
    "output": {"csv", "figures", "figure_samples"},
}
_CONSTRAINT_KEYS = {"kind", "a", "b", "lo", "hi", "center", "radius", "coords"}
_FIGURE_KINDS = ("trajectory_2d", "violation_curve")


def _parse_vector(text: str) -> np.ndarray:
    try:
        vec = np.array([float(tok) for tok in text.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector from {text!r}") from exc
    if vec.size == 0:
        raise ConfigError(f"empty vector in {text!r}")
    return vec


def _parse_matrix(text: str) -> np.ndarray:
    rows = [_parse_vector(part) for part in text.split(";") if part.strip()]
    if not rows:
        raise ConfigError(f"empty matrix in {text!r}")
    if len({r.size for r in rows}) != 1:
        raise ConfigError("matrix rows have unequal lengths")
    return np.stack(rows)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    seed: int
    samples: int
    tol: float
    model_kind: str
    model_params: dict
    constraints: tuple
    algorithms: tuple
    sampler: dict
    reference: str
    reference_samples: int
    n_projections: int
    csv_name: str
    figures: tuple
    figure_samples: int
    base_dir: str


@dataclass(frozen=True)
class Workbench:
    """Everything a run needs, built from a config."""

    model: FlowModel
    cs: ConstraintSet
    reference: np.ndarray
    is_rd: bool


class _Section:
    """One config section with typed getters and leftover-key detection."""

    def __init__(self, name: str, mapping, allowed):
        self.name = name
        self.mapping = dict(mapping)
        unknown = set(self.mapping) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")

    def get(self, key: str, default=None, required: bool = False) -> str | None:
        if key in self.mapping:
            return self.mapping[key]
        if required:
            raise ConfigError(f"[{self.name}] is missing required key {key!r}")
        return default

    def get_typed(self, key: str, cast, default=None, required: bool = False):
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return cast(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r}: {exc}") from exc


def _build_constraint(section: _Section):
    kind = section.get("kind", required=True)
    if kind == "halfspace":
        return LinearIneq(_parse_vector(section.get("a", required=True)),
                          section.get_typed("b", float, required=True))
    if kind == "band":
        return LinearBand(_parse_vector(section.get("a", required=True)),
                          section.get_typed("lo", float, required=True),
                          section.get_typed("hi", float, required=True))
    if kind == "quadratic":
        return QuadIneq(_parse_vector(section.get("a", required=True)),
                        section.get_typed("b", float, required=True))
    if kind == "min_distance":
        coords = section.get("coords")
        subset = tuple(int(tok) for tok in coords.split()) if coords else None
        return MinDistance(_parse_vector(section.get("center", required=True)),
                           section.get_typed("radius", float, required=True),
                           coord_subset=subset)
    raise ConfigError(f"unknown constraint kind {kind!r} in [{section.name}]")


def _model_params(section: _Section, kind: str) -> dict:
    if kind == "mixture":
        means = _parse_matrix(section.get("means", required=True))
        scales = _parse_vector(section.get("scales", required=True))
        weights_raw = section.get("weights")
        return {
            "means": means,
            "scales": scales if scales.size > 1 else float(scales[0]),
            "weights": _parse_vector(weights_raw) if weights_raw else None,
        }
    if kind == "empirical":
        return {"path": section.get("path", required=True)}
    if kind == "reaction_diffusion":
        return {
            "n_s": section.get_typed("n_s", int, default=32),
            "n_t": section.get_typed("n_t", int, default=20),
            "dt_phys": section.get_typed("dt_phys", float, default=0.25),
            "nu": section.get_typed("nu", float, default=0.005),
            "rho": section.get_typed("rho", float, default=0.01),
            "delta": section.get_typed("delta", float, default=1e-10),
            "train_fields": section.get_typed("train_fields", int, default=12),
            "data_seed": section.get_typed("data_seed", int, default=0),
        }
    raise ConfigError(f"unknown model kind {kind!r}")


def parse_config(path) -> ExperimentConfig:
    """Read and validate a config file. Any problem raises ConfigError."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    sections = {}
    constraint_sections = []
    for name in parser.sections():
        if name.startswith("constraint."):
            constraint_sections.append(
                _Section(name, parser[name], _CONSTRAINT_KEYS))
        elif name in _SECTION_KEYS:
            sections[name] = _Section(name, parser[name], _SECTION_KEYS[name])
        else:
            raise ConfigError(f"unknown section [{name}]")
    for required in ("experiment", "model", "sampler"):
        if required not in sections:
            raise ConfigError(f"missing section [{required}]")

    exp = sections["experiment"]
    model = sections["model"]
    sampler = sections["sampler"]
    metrics = sections.get("metrics", _Section("metrics", {}, _SECTION_KEYS["metrics"]))
    output = sections.get("output", _Section("output", {}, _SECTION_KEYS["output"]))

    kind = model.get("kind", required=True)
    try:
        constraints = tuple(_build_constraint(s) for s in constraint_sections)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if kind == "reaction_diffusion" and constraints:
        raise ConfigError("reaction_diffusion builds its own constraints; "
                          "remove the [constraint.*] blocks")

    algorithms = tuple(sampler.get("algorithm", default="ccfm").split())
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {alg!r}")
    if not algorithms:
        raise ConfigError("[sampler] algorithm must name at least one algorithm")
    stepper = sampler.get("stepper", default="euler")
    if stepper not in STEPPERS:
        raise ConfigError(f"unknown stepper {stepper!r}")
    mode = sampler.get("mode", default="marginal")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    sampler_fields = {
        "stepper": stepper,
        "n_steps": sampler.get_typed("steps", int, default=100),
        "scheduler_n": sampler.get_typed("scheduler_n", float, default=0.5),
        "mode": mode,
        "gn_iters": sampler.get_typed("gn_iters", int, default=1),
        "gn_damping": sampler.get_typed("gn_damping", float, default=1e-6),
        "final_budget": sampler.get_typed("final_budget", int, default=30),
        "eci_events": sampler.get_typed("eci_events", int, default=2),
        "pocs_cycles": sampler.get_typed("pocs_cycles", int, default=500),
    }

    reference = metrics.get("reference",
                            default="simulation" if kind == "reaction_diffusion"
                            else "rejection")
    figures_raw = output.get("figures", default="")
    figures = tuple(figures_raw.split())
    for fig in figures:
        if fig not in _FIGURE_KINDS:
            raise ConfigError(f"unknown figure kind {fig!r}")

    cfg = ExperimentConfig(
        experiment_id=exp.get("id", required=True),
        seed=exp.get_typed("seed", int, default=0),
        samples=exp.get_typed("samples", int, default=100),
        tol=exp.get_typed("tol", float, default=1e-8),
        model_kind=kind,
        model_params=_model_params(model, kind),
        constraints=constraints,
        algorithms=algorithms,
        sampler=sampler_fields,
        reference=reference,
        reference_samples=metrics.get_typed("reference_samples", int, default=512),
        n_projections=metrics.get_typed("n_projections", int, default=128),
        csv_name=output.get("csv", default="results.csv"),
        figures=figures,
        figure_samples=output.get_typed("figure_samples", int, default=8),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
    if cfg.samples < 1:
        raise ConfigError("samples must be positive")
    if cfg.tol <= 0.0:
        raise ConfigError("tol must be positive")
    if cfg.sampler["n_steps"] < 1:
        raise ConfigError("steps must be positive")
    if cfg.sampler["scheduler_n"] <= 0.0:
        raise ConfigError("scheduler_n must be positive")
    needs_cs = any(alg != "vanilla" for alg in cfg.algorithms)
    if needs_cs and kind != "reaction_diffusion" and not constraints:
        raise ConfigError(
            f"algorithms {cfg.algorithms} need at least one [constraint.*] block")
    return cfg


def make_sampler_config(cfg: ExperimentConfig, algorithm: str,
                        seed: int) -> SamplerConfig:
    s = cfg.sampler
    return SamplerConfig(
        algorithm=algorithm,
        stepper=s["stepper"],
        n_steps=s["n_steps"],
        scheduler=Scheduler(s["scheduler_n"]),
        mode=s["mode"],
        gn=GnConfig(lam=s["gn_damping"], max_iters=s["gn_iters"]),
        final_budget=s["final_budget"],
        seed=seed,
        samples=cfg.samples,
        eci_events=s["eci_events"],
        pocs_cycles=s["pocs_cycles"],
    )


def _resolve(cfg: ExperimentConfig, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(cfg.base_dir, path)


def build_workbench(cfg: ExperimentConfig, seed: int) -> Workbench:
    """Construct the model, constraint set, and reference batch."""
    params = cfg.model_params
    if cfg.model_kind == "reaction_diffusion":
        grid = RdGrid(n_s=params["n_s"], n_t=params["n_t"], dt_phys=params["dt_phys"])
        fields, problems = rd_dataset(
            grid, params["train_fields"] + 1, params["data_seed"],
            nu=params["nu"], rho=params["rho"], delta=params["delta"])
        # Problem 0 is held out: its constraints define the task and its
        # solution is the reference; the target only sees the other fields.
        model = FlowModel(EmpiricalTarget(fields[1:]))
        cs = rd_constraints(problems[0])
        if cfg.reference != "simulation":
            raise ConfigError("reaction_diffusion supports only reference = simulation")
        return Workbench(model=model, cs=cs, reference=fields[:1], is_rd=True)

    if cfg.model_kind == "mixture":
        target = GaussianMixtureTarget(params["means"], params["scales"],
                                       params["weights"])
    else:
        try:
            atoms = load_matrix(_resolve(cfg, params["path"]))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load atoms: {exc}") from exc
        target = EmpiricalTarget(atoms)
    model = FlowModel(target)
    for member in cfg.constraints:
        if member.dim is not None and member.dim != model.dim:
            raise ConfigError(
                f"constraint dimension {member.dim} != model dimension {model.dim}")
    cs = ConstraintSet(cfg.constraints, tol=cfg.tol)

    if cfg.reference == "simulation":
        raise ConfigError("reference = simulation requires a reaction_diffusion model")
    if cfg.reference == "rejection":
        reference = rejection_sample(target, cs, cfg.reference_samples,
                                     stream_rng(seed, REFERENCE_STREAM))
    else:
        try:
            reference = load_matrix(_resolve(cfg, cfg.reference))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load reference batch: {exc}") from exc
        if reference.shape[1] != model.dim:
            raise ConfigError(
                f"reference dimension {reference.shape[1]} != model dimension {model.dim}")
    return Workbench(model=model, cs=cs, reference=reference, is_rd=False)
