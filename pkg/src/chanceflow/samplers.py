"""Sampling algorithms over the exact flow: unconstrained integration,
per-step projection onto the clean set, extrapolate-correct-interpolate, and
chance-constrained projection with a probabilistic schedule.

All samplers integrate the same velocity field on the uniform grid
t_k = k/N and differ only in how (and whether) they correct intermediate
states. Each sample is a pure function of (model, constraints, config,
sample index): the index selects an RNG stream, so batches are reproducible
bitwise regardless of execution order or thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chance import Scheduler, tighten_set
from .constraints import ConstraintSet, max_violation
from .flow import FlowModel, interpolate
from .numerics import sample_std_normal, stream_rng
from .projection import (GnConfig, final_refine, gauss_newton_project,
                         project_decomposed, project_pocs)

__all__ = [
    "SamplerConfig",
    "SampleRecord",
    "euler_step",
    "heun_step",
    "sample_vanilla",
    "sample_repeated",
    "sample_eci",
    "sample_ccfm",
    "run_batch",
]

ALGORITHMS = ("vanilla", "repeated", "eci", "ccfm")
STEPPERS = ("euler", "heun")
MODES = ("marginal", "pathwise")


@dataclass(frozen=True)
class SamplerConfig:
    """Settings shared by all sampling algorithms.

    gn controls the per-step correction (default: a single Gauss-Newton
    update, the final refinement has its own budget); eci_events is the
    number of noise-resampling events for the eci algorithm; pocs_cycles
    bounds the cyclic projection used for multi-constraint closed forms.
    """

    algorithm: str = "ccfm"
    stepper: str = "euler"
    n_steps: int = 100
    scheduler: Scheduler = Scheduler(0.5)
    mode: str = "marginal"
    gn: GnConfig = GnConfig(max_iters=1)
    final_budget: int = 30
    seed: int = 0
    samples: int = 1
    eci_events: int = 2
    pocs_cycles: int = 500

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.stepper not in STEPPERS:
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.final_budget < 0:
            raise ValueError("final_budget must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.eci_events < 0:
            raise ValueError("eci_events must be non-negative")


@dataclass
class SampleRecord:
    """One generated trajectory with its projection diagnostics.

    per_step_violation[k] is the clean-set max violation of the state after
    step k's correction (zeros for unconstrained runs); projection_moves[k]
    is the Euclidean length of step k's correction. states[0] is x0 and
    states[-1] is the terminal x1 after final refinement.
    """

    x0: np.ndarray
    states: np.ndarray
    x1: np.ndarray
    per_step_violation: np.ndarray
    projection_moves: np.ndarray
    wall_time: float
    refine_converged: bool = True
    final_violation: float = 0.0


def euler_step(model: FlowModel, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Forward Euler: x + dt * u(x, t)."""
    _check_step(t, dt)
    if dt == 0.0:
        return np.array(x, dtype=float)
    return x + dt * model.velocity(x, t)


def heun_step(model: FlowModel, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Heun predictor-corrector: average of the slopes at both ends.

    The corrector query at t + dt may land on t = 1, where the velocity is
    evaluated at the clamp time just below.
    """
    _check_step(t, dt)
    if dt == 0.0:
        return np.array(x, dtype=float)
    u1 = model.velocity(x, t)
    u2 = model.velocity(x + dt * u1, t + dt)
    return x + 0.5 * dt * (u1 + u2)


def _check_step(t: float, dt: float):
    if dt < 0.0:
        raise ValueError(f"step size must be non-negative, got {dt!r}")
    if t + dt > 1.0 + 1e-12:
        raise ValueError(f"step beyond t=1: t={t!r}, dt={dt!r}")


_STEPPERS = {"euler": euler_step, "heun": heun_step}


def _time_grid(n_steps: int) -> np.ndarray:
    return np.arange(n_steps + 1) / n_steps


def _project_clean(x: np.ndarray, cs: ConstraintSet, cfg: SamplerConfig) -> np.ndarray:
    """Projection onto the clean set: exact for halfspace/slab intersections,
    one configured Gauss-Newton pass otherwise."""
    if not cs.members:
        return x
    if cs.all_closed_form:
        if len(cs.members) == 1:
            return cs.members[0].project(x)
        return project_pocs(x, cs.members, cfg.pocs_cycles, cs.tol).x_out
    return gauss_newton_project(x, cs, cfg.gn).x_out


def _finish(cs, cfg, x0, states, moves, viols, started) -> SampleRecord:
    x1 = states[-1]
    converged = True
    final_viol = 0.0
    if cs is not None and cs.members:
        report = final_refine(x1, cs, cfg.final_budget)
        x1 = report.x_out
        states[-1] = x1
        converged = report.converged
        final_viol = report.final_max_violation
    return SampleRecord(
        x0=x0,
        states=np.stack(states),
        x1=x1,
        per_step_violation=np.asarray(viols),
        projection_moves=np.asarray(moves),
        wall_time=time.perf_counter() - started,
        refine_converged=converged,
        final_violation=final_viol,
    )


def sample_vanilla(model: FlowModel, cfg: SamplerConfig, sample_index: int = 0) -> SampleRecord:
    """Integrate the flow with no correction at all."""
    started = time.perf_counter()
    step = _STEPPERS[cfg.stepper]
    rng = stream_rng(cfg.seed, sample_index)
    x0 = sample_std_normal(rng, model.dim)
    ts = _time_grid(cfg.n_steps)
    x = x0.copy()
    states = [x0.copy()]
    for k in range(cfg.n_steps):
        x = step(model, x, ts[k], ts[k + 1] - ts[k])
        states.append(x)
    zeros = np.zeros(cfg.n_steps)
    return _finish(None, cfg, x0, states, zeros, zeros.copy(), started)


def sample_repeated(model: FlowModel, cs: ConstraintSet, cfg: SamplerConfig,
                    sample_index: int = 0) -> SampleRecord:
    """Project every intermediate state onto the original clean set.

    The baseline the chance-constrained scheduler is measured against: it
    guarantees per-step feasibility for convex closed-form kinds but drags
    early states onto a set meant for t = 1.
    """
    started = time.perf_counter()
    step = _STEPPERS[cfg.stepper]
    rng = stream_rng(cfg.seed, sample_index)
    x0 = sample_std_normal(rng, model.dim)
    ts = _time_grid(cfg.n_steps)
    x = x0.copy()
    states = [x0.copy()]
    moves = np.zeros(cfg.n_steps)
    viols = np.zeros(cfg.n_steps)
    for k in range(cfg.n_steps):
        x = step(model, x, ts[k], ts[k + 1] - ts[k])
        projected = _project_clean(x, cs, cfg)
        moves[k] = float(np.linalg.norm(projected - x))
        x = projected
        viols[k] = max_violation(cs, x)
        states.append(x)
    return _finish(cs, cfg, x0, states, moves, viols, started)


def sample_eci(model: FlowModel, cs: ConstraintSet, cfg: SamplerConfig,
               sample_index: int = 0) -> SampleRecord:
    """Extrapolate-correct-interpolate per step.

    Each step predicts the clean endpoint in one shot, xhat1 = x + (1-t) u,
    corrects it by projection onto the clean set, and re-interpolates at the
    next grid time. The interpolation endpoint is the realized x0 except at
    the configured resampling events, where fresh noise is drawn from the
    sample's own stream.
    """
    started = time.perf_counter()
    rng = stream_rng(cfg.seed, sample_index)
    x0 = sample_std_normal(rng, model.dim)
    ts = _time_grid(cfg.n_steps)
    period = math.ceil(cfg.n_steps / cfg.eci_events) if cfg.eci_events > 0 else None
    x = x0.copy()
    states = [x0.copy()]
    moves = np.zeros(cfg.n_steps)
    viols = np.zeros(cfg.n_steps)
    for k in range(cfg.n_steps):
        t = ts[k]
        xhat = x + (1.0 - t) * model.velocity(x, t)
        corrected = _project_clean(xhat, cs, cfg)
        moves[k] = float(np.linalg.norm(corrected - xhat))
        if period is not None and (k + 1) % period == 0:
            noise = sample_std_normal(rng, model.dim)
        else:
            noise = x0
        x = interpolate(noise, corrected, ts[k + 1])
        viols[k] = max_violation(cs, x)
        states.append(x)
    return _finish(cs, cfg, x0, states, moves, viols, started)


def sample_ccfm(model: FlowModel, cs: ConstraintSet, cfg: SamplerConfig,
                sample_index: int = 0) -> SampleRecord:
    """Chance-constrained sampling: step, then project onto the tightened set.

    After each step the constraints are tightened at the post-step time —
    marginal mode applies the quantile reformulations with satisfy
    probability phi(t) and projects in closed form; pathwise mode projects
    onto the exact transported set (1-t) x0 + t C. At t = 1 the tightenings
    degenerate to the originals, and a final refinement enforces strict
    terminal feasibility.
    """
    started = time.perf_counter()
    if cfg.mode == "marginal":
        # Fail before any stepping if some kind has no marginal reformulation.
        tighten_set(cs, 1.0, cfg.scheduler, "marginal")
    step = _STEPPERS[cfg.stepper]
    rng = stream_rng(cfg.seed, sample_index)
    x0 = sample_std_normal(rng, model.dim)
    ts = _time_grid(cfg.n_steps)
    x = x0.copy()
    states = [x0.copy()]
    moves = np.zeros(cfg.n_steps)
    viols = np.zeros(cfg.n_steps)
    for k in range(cfg.n_steps):
        x = step(model, x, ts[k], ts[k + 1] - ts[k])
        t_next = ts[k + 1]
        if cs.members:
            if cfg.mode == "marginal":
                tightened = [tc for tc in tighten_set(cs, t_next, cfg.scheduler, "marginal")
                             if tc.kind != "inactive"]
                if len(tightened) == 1:
                    projected = tightened[0].project(x)
                elif tightened:
                    projected = project_pocs(x, tightened, cfg.pocs_cycles, cs.tol).x_out
                else:
                    projected = x
            else:
                projected = project_decomposed(x, x0, t_next, cs, cfg.gn)
            moves[k] = float(np.linalg.norm(projected - x))
            x = projected
        viols[k] = max_violation(cs, x)
        states.append(x)
    return _finish(cs, cfg, x0, states, moves, viols, started)


def _one_sample(model, cs, cfg, index: int) -> SampleRecord:
    if cfg.algorithm == "vanilla":
        return sample_vanilla(model, cfg, index)
    if cs is None:
        raise ValueError(f"algorithm {cfg.algorithm!r} requires a constraint set")
    if cfg.algorithm == "repeated":
        return sample_repeated(model, cs, cfg, index)
    if cfg.algorithm == "eci":
        return sample_eci(model, cs, cfg, index)
    return sample_ccfm(model, cs, cfg, index)


def run_batch(model: FlowModel, cs: ConstraintSet | None, cfg: SamplerConfig,
              threads: int = 1) -> list[SampleRecord]:
    """Generate cfg.samples records, optionally across worker threads.

    Records are keyed by sample index and each index owns its RNG stream, so
    the output is identical for any thread count.
    """
    indices = range(cfg.samples)
    if threads <= 1:
        return [_one_sample(model, cs, cfg, i) for i in indices]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(lambda i: _one_sample(model, cs, cfg, i), indices))
