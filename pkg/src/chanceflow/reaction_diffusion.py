"""Desk-scale 1-D reaction-diffusion benchmark.

The PDE is dv/dt = nu d2v/ds2 + rho v(1 - v) on [0, 1] with prescribed
boundary fluxes. The solver is a node-centered finite-volume scheme with
trapezoid cell weights, implicit diffusion, and explicit reaction; interior
fluxes telescope, so the discrete mass balance

    m(t_{k+1}) = m(t_k) + dt * (gL - gR + rho * sum_i w_i v_i^k (1 - v_i^k))

holds to rounding. The constraint assembly integrates the same quadrature
(trapezoid in space, left endpoint in time), which is what makes simulated
fields feasible for their own constraint set at machine accuracy.

Flattened state convention: x[j * n_s + i] = v(s_i, t_j), so frame 0
occupies the first n_s entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constraints import ConstraintSet, LinearBand, SmoothScalar
from .errors import NumericalError
from .numerics import stream_rng

__all__ = [
    "RdGrid",
    "RdProblem",
    "RdMetrics",
    "simulate_rd",
    "rd_constraints",
    "rd_metrics",
    "sample_rd_problem",
    "rd_dataset",
    "as_field",
]


@dataclass(frozen=True)
class RdGrid:
    """Space-time discretization; the flattened dimension is n_s * n_t."""

    n_s: int = 32
    n_t: int = 20
    length: float = 1.0
    dt_phys: float = 0.25

    def __post_init__(self):
        if self.n_s < 4 or self.n_t < 2:
            raise ValueError("grid needs n_s >= 4 and n_t >= 2")
        if self.length <= 0.0 or self.dt_phys <= 0.0:
            raise ValueError("length and dt_phys must be positive")

    @property
    def d(self) -> int:
        return self.n_s * self.n_t

    @property
    def ds(self) -> float:
        return self.length / (self.n_s - 1)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_s)

    @property
    def cell_weights(self) -> np.ndarray:
        """Trapezoid weights: ds for interior nodes, ds/2 at the endpoints."""
        w = np.full(self.n_s, self.ds)
        w[0] = w[-1] = 0.5 * self.ds
        return w


@dataclass(frozen=True)
class RdProblem:
    """One reaction-diffusion instance: coefficients, IC, fluxes, band width."""

    grid: RdGrid
    nu: float = 0.005
    rho: float = 0.01
    ic: np.ndarray = None
    g_left: float = 0.0
    g_right: float = 0.0
    delta: float = 1e-10

    def __post_init__(self):
        if self.nu <= 0.0 or self.rho < 0.0:
            raise ValueError("need nu > 0 and rho >= 0")
        if self.delta <= 0.0:
            raise ValueError("band half-width must be positive")
        ic = np.asarray(self.ic, dtype=float)
        if ic.shape != (self.grid.n_s,):
            raise ValueError(f"ic shape {ic.shape} does not match grid ({self.grid.n_s},)")
        if not np.all(np.isfinite(ic)):
            raise ValueError("ic must be finite")
        object.__setattr__(self, "ic", ic)
        object.__setattr__(self, "g_left", float(self.g_left))
        object.__setattr__(self, "g_right", float(self.g_right))


@dataclass(frozen=True)
class RdMetrics:
    mmse: float
    smse: float
    cv_ic: float
    cv_cl: float


def _diffusion_operator(grid: RdGrid, nu: float) -> np.ndarray:
    """Interior flux-divergence operator L: row i gives the net diffusive flux
    into cell i (boundary fluxes are prescribed separately)."""
    n = grid.n_s
    coeff = nu / grid.ds
    lap = np.zeros((n, n))
    for i in range(n):
        if i > 0:
            lap[i, i - 1] += coeff
            lap[i, i] -= coeff
        if i < n - 1:
            lap[i, i + 1] += coeff
            lap[i, i] -= coeff
    return lap


def simulate_rd(problem: RdProblem) -> np.ndarray:
    """Integrate the scheme; returns the field with shape (n_t, n_s)."""
    grid = problem.grid
    w = grid.cell_weights
    lap = _diffusion_operator(grid, problem.nu)
    lhs = np.diag(w) - grid.dt_phys * lap
    factor = scipy.linalg.cho_factor(lhs)
    boundary = np.zeros(grid.n_s)
    boundary[0] = problem.g_left
    boundary[-1] = -problem.g_right
    field = np.empty((grid.n_t, grid.n_s))
    field[0] = problem.ic
    v = problem.ic.copy()
    for k in range(1, grid.n_t):
        reaction = problem.rho * v * (1.0 - v) * w
        rhs = w * v + grid.dt_phys * (boundary + reaction)
        # check_finite=False so a blown-up reaction term reaches the
        # divergence check below instead of erroring inside the solver
        v = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"reaction-diffusion simulation diverged at frame {k}")
        field[k] = v
    return field


def as_field(x: np.ndarray, grid: RdGrid) -> np.ndarray:
    """Reshape a flattened state back to (n_t, n_s)."""
    x = np.asarray(x, dtype=float)
    if x.size != grid.d:
        raise ValueError(f"state size {x.size} does not match grid dimension {grid.d}")
    return x.reshape(grid.n_t, grid.n_s)


def _mass_constraint(problem: RdProblem, k: int, sign: float, name: str) -> SmoothScalar:
    """One side of |h_k(x)| <= delta, where h_k is the mass-balance defect of
    frame k against frame 0 plus the integrated reaction and boundary terms."""
    grid = problem.grid
    w = grid.cell_weights
    dt = grid.dt_phys
    rho = problem.rho
    flux = problem.g_left - problem.g_right
    n_s = grid.n_s
    delta = problem.delta

    def defect(x: np.ndarray) -> float:
        frames = x.reshape(grid.n_t, n_s)
        mass_k = float(w @ frames[k])
        mass_0 = float(w @ frames[0])
        reaction = 0.0
        for j in range(k):
            vj = frames[j]
            reaction += float(w @ (vj * (1.0 - vj)))
        return mass_k - mass_0 - dt * (k * flux + rho * reaction)

    def g(x: np.ndarray) -> float:
        return sign * defect(x) - delta

    def grad(x: np.ndarray) -> np.ndarray:
        frames = x.reshape(grid.n_t, n_s)
        out = np.zeros((grid.n_t, n_s))
        out[k] += w
        out[0] -= w
        for j in range(k):
            out[j] -= dt * rho * w * (1.0 - 2.0 * frames[j])
        return sign * out.reshape(-1)

    return SmoothScalar(grid.d, g, grad, name=name)


def rd_constraints(problem: RdProblem) -> ConstraintSet:
    """IC band on frame 0 plus two-sided mass-balance bands for every later
    frame. The set's tolerance matches the band half-width delta."""
    grid = problem.grid
    members = []
    for i in range(grid.n_s):
        a = np.zeros(grid.d)
        a[i] = 1.0
        members.append(LinearBand(a, problem.ic[i] - problem.delta, problem.ic[i] + problem.delta))
    for k in range(1, grid.n_t):
        members.append(_mass_constraint(problem, k, +1.0, f"mass[{k}]+"))
        members.append(_mass_constraint(problem, k, -1.0, f"mass[{k}]-"))
    return ConstraintSet(tuple(members), tol=problem.delta)


def rd_metrics(generated, reference, cs: ConstraintSet) -> RdMetrics:
    """Batch metrics: pointwise MSE of the mean and of the standard deviation
    against the reference batch, plus the worst IC-band and mass-balance
    violations across generated samples."""
    gen = _as_batch(generated)
    ref = _as_batch(reference)
    if gen.shape[1] != ref.shape[1]:
        raise ValueError(f"generated dimension {gen.shape[1]} != reference {ref.shape[1]}")
    if gen.shape[0] < 2:
        raise ValueError("need at least 2 generated samples for the std error")
    mmse = float(np.mean((gen.mean(axis=0) - ref.mean(axis=0)) ** 2))
    smse = float(np.mean((gen.std(axis=0) - ref.std(axis=0)) ** 2))
    cv_ic = 0.0
    cv_cl = 0.0
    for row in gen:
        for member in cs.members:
            worst = float(np.maximum(0.0, member.face_values(row)).max())
            if isinstance(member, LinearBand):
                cv_ic = max(cv_ic, worst)
            else:
                cv_cl = max(cv_cl, worst)
    return RdMetrics(mmse=mmse, smse=smse, cv_ic=cv_ic, cv_cl=cv_cl)


def _as_batch(fields) -> np.ndarray:
    arr = np.asarray(fields, dtype=float)
    if arr.ndim == 3:
        arr = arr.reshape(arr.shape[0], -1)
    if arr.ndim != 2:
        raise ValueError(f"expected a batch of fields, got shape {arr.shape}")
    return arr


def sample_rd_problem(grid: RdGrid, rng: np.random.Generator, nu: float = 0.005,
                      rho: float = 0.01, delta: float = 1e-10) -> RdProblem:
    """Random instance: smooth cosine modes plus a localized bump around a
    0.5 baseline, with small random boundary fluxes."""
    s = grid.s
    ic = np.full(grid.n_s, 0.5)
    for mode in (1, 2):
        ic += rng.uniform(-0.12, 0.12) * np.cos(mode * np.pi * s / grid.length)
    center = rng.uniform(0.2, 0.8) * grid.length
    width = rng.uniform(0.05, 0.15) * grid.length
    ic += rng.uniform(-0.15, 0.15) * np.exp(-0.5 * ((s - center) / width) ** 2)
    g_left = rng.uniform(-0.02, 0.02)
    g_right = rng.uniform(-0.02, 0.02)
    return RdProblem(grid=grid, nu=nu, rho=rho, ic=ic, g_left=g_left,
                     g_right=g_right, delta=delta)


def rd_dataset(grid: RdGrid, n_fields: int, seed: int, nu: float = 0.005,
               rho: float = 0.01, delta: float = 1e-10):
    """Simulate n_fields random problems; returns (flattened fields (n, d),
    problem list). Stream i of the seed drives problem i."""
    fields = np.empty((n_fields, grid.d))
    problems = []
    for i in range(n_fields):
        problem = sample_rd_problem(grid, stream_rng(seed, i), nu=nu, rho=rho, delta=delta)
        fields[i] = simulate_rd(problem).reshape(-1)
        problems.append(problem)
    return fields, problems
