"""Declarative constraints on clean samples, with residuals and Jacobians.

A constraint contributes one or two scalar faces g_j(x); the feasible set is
{x : g_j(x) <= 0 for all j}. Projection and sampling code only ever sees
hinge residuals max(0, g_j(x)), active faces, and gradient rows, so every
family below implements exactly that interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GradientSingularityError, NumericalError
from .numerics import stream_rng

__all__ = [
    "LinearIneq",
    "LinearBand",
    "QuadIneq",
    "MinDistance",
    "SmoothScalar",
    "ConstraintSet",
    "residuals",
    "active_set",
    "jacobian_active",
    "max_violation",
]

_FD_STEP = 1e-6
_FD_RTOL = 1e-5
_PROBE_SEED = 0x5EED_CAFE  # fixed stream for construction-time gradient probes


def _unit_or_raise(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"coefficient vector must be 1-D and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coefficient vector must be finite")
    if np.linalg.norm(a) == 0.0:
        raise ValueError("coefficient vector must be nonzero")
    return a


@dataclass(frozen=True)
class LinearIneq:
    """Halfspace a.x <= b."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _unit_or_raise(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.a.size

    n_faces = 1
    has_closed_projection = True

    def face_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([float(self.a @ x) - self.b])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        return (xs @ self.a - self.b)[:, None]

    def face_gradient(self, x: np.ndarray, face: int) -> np.ndarray:
        return self.a.copy()

    def project(self, x: np.ndarray) -> np.ndarray:
        s = float(self.a @ x) - self.b
        if s <= 0.0:
            return np.array(x, dtype=float)
        return x - (s / float(self.a @ self.a)) * self.a


@dataclass(frozen=True)
class LinearBand:
    """Slab lo <= a.x <= hi; face 0 is the lower side, face 1 the upper."""

    a: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "a", _unit_or_raise(self.a))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"band requires lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dim(self):
        return self.a.size

    n_faces = 2
    has_closed_projection = True

    def face_values(self, x: np.ndarray) -> np.ndarray:
        s = float(self.a @ x)
        return np.array([self.lo - s, s - self.hi])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        s = xs @ self.a
        return np.stack([self.lo - s, s - self.hi], axis=1)

    def face_gradient(self, x: np.ndarray, face: int) -> np.ndarray:
        return -self.a if face == 0 else self.a.copy()

    def project(self, x: np.ndarray) -> np.ndarray:
        s = float(self.a @ x)
        c = min(max(s, self.lo), self.hi)
        if c == s:
            return np.array(x, dtype=float)
        return x + ((c - s) / float(self.a @ self.a)) * self.a


@dataclass(frozen=True)
class QuadIneq:
    """Squared projection (a.x)^2 <= b, b > 0."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _unit_or_raise(self.a))
        object.__setattr__(self, "b", float(self.b))
        if self.b <= 0.0:
            raise ValueError(f"quadratic bound must be positive, got {self.b}")

    @property
    def dim(self):
        return self.a.size

    n_faces = 1
    has_closed_projection = False

    def face_values(self, x: np.ndarray) -> np.ndarray:
        s = float(self.a @ x)
        return np.array([s * s - self.b])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        s = xs @ self.a
        return (s * s - self.b)[:, None]

    def face_gradient(self, x: np.ndarray, face: int) -> np.ndarray:
        return 2.0 * float(self.a @ x) * self.a


@dataclass(frozen=True)
class MinDistance:
    """Keep-out ball: ||x[subset] - center|| >= radius (nonconvex).

    coord_subset selects which coordinates the distance is measured over;
    None means all of them.
    """

    center: np.ndarray
    radius: float
    coord_subset: tuple | None = None

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.ndim != 1 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 1-D vector")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.coord_subset is not None:
            subset = tuple(int(i) for i in self.coord_subset)
            if len(subset) != center.size:
                raise ValueError("coord_subset length must match center length")
            if len(set(subset)) != len(subset) or min(subset) < 0:
                raise ValueError("coord_subset must be distinct non-negative indices")
            object.__setattr__(self, "coord_subset", subset)

    @property
    def dim(self):
        # With a subset the ambient dimension is not pinned by the constraint.
        return self.center.size if self.coord_subset is None else None

    n_faces = 1
    has_closed_projection = False

    def _select(self, x: np.ndarray) -> np.ndarray:
        return x if self.coord_subset is None else x[list(self.coord_subset)]

    def face_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.radius - float(np.linalg.norm(self._select(x) - self.center))])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        sel = xs if self.coord_subset is None else xs[:, list(self.coord_subset)]
        return (self.radius - np.linalg.norm(sel - self.center, axis=1))[:, None]

    def face_gradient(self, x: np.ndarray, face: int) -> np.ndarray:
        diff = self._select(x) - self.center
        dist = float(np.linalg.norm(diff))
        if dist == 0.0:
            raise GradientSingularityError("min-distance gradient undefined at the center")
        grad = np.zeros_like(np.asarray(x, dtype=float))
        if self.coord_subset is None:
            grad[:] = -diff / dist
        else:
            grad[list(self.coord_subset)] = -diff / dist
        return grad


@dataclass(frozen=True)
class SmoothScalar:
    """User-supplied differentiable scalar constraint g(x) <= 0.

    The gradient evaluator is checked against central finite differences on
    seeded probe directions at construction; a mismatch beyond 1e-5 relative
    error rejects the pair immediately rather than corrupting projections
    later.
    """

    dim: int
    g: callable = field(repr=False)
    grad: callable = field(repr=False)
    name: str = ""
    validate: bool = True

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "dim", int(self.dim))
        if self.validate:
            self._check_gradient()

    def _check_gradient(self):
        rng = stream_rng(_PROBE_SEED, self.dim)
        for _ in range(2):
            x = rng.standard_normal(self.dim)
            gx = np.asarray(self.grad(x), dtype=float)
            if gx.shape != (self.dim,):
                raise ValueError(f"gradient evaluator returned shape {gx.shape}, "
                                 f"expected ({self.dim},)")
            for _ in range(3):
                v = rng.standard_normal(self.dim)
                v /= np.linalg.norm(v)
                fd = (float(self.g(x + _FD_STEP * v)) - float(self.g(x - _FD_STEP * v))) / (2.0 * _FD_STEP)
                if abs(fd - float(gx @ v)) > _FD_RTOL * (1.0 + abs(fd)):
                    raise ValueError(
                        f"gradient evaluator disagrees with finite differences "
                        f"(directional derivative {fd:.6e} vs {float(gx @ v):.6e})"
                        + (f" for constraint {self.name!r}" if self.name else ""))

    n_faces = 1
    has_closed_projection = False

    def face_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([float(self.g(x))])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        return np.array([float(self.g(row)) for row in xs])[:, None]

    def face_gradient(self, x: np.ndarray, face: int) -> np.ndarray:
        return np.asarray(self.grad(x), dtype=float)


CONSTRAINT_KINDS = (LinearIneq, LinearBand, QuadIneq, MinDistance, SmoothScalar)


@dataclass(frozen=True)
class ConstraintSet:
    """Immutable conjunction of constraints with a feasibility tolerance."""

    members: tuple
    tol: float = 1e-8

    def __post_init__(self):
        members = tuple(self.members)
        for c in members:
            if not isinstance(c, CONSTRAINT_KINDS):
                raise TypeError(f"unsupported constraint type {type(c).__name__}")
        if float(self.tol) <= 0.0:
            raise ValueError("tolerance must be positive")
        dims = {c.dim for c in members if c.dim is not None}
        if len(dims) > 1:
            raise ValueError(f"constraints disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "tol", float(self.tol))
        faces = tuple((i, j) for i, c in enumerate(members) for j in range(c.n_faces))
        object.__setattr__(self, "_faces", faces)

    @property
    def dim(self):
        dims = {c.dim for c in self.members if c.dim is not None}
        return dims.pop() if dims else None

    @property
    def n_faces(self) -> int:
        return len(self._faces)

    @property
    def faces(self) -> tuple:
        """(member_index, face_index) pair for every scalar face, in order."""
        return self._faces

    @property
    def all_closed_form(self) -> bool:
        return all(c.has_closed_projection for c in self.members)

    def face_values(self, x: np.ndarray) -> np.ndarray:
        x = _check_point(self, x)
        if not self.members:
            return np.empty(0)
        return np.concatenate([c.face_values(x) for c in self.members])

    def batch_face_values(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if not self.members:
            return np.empty((xs.shape[0], 0))
        return np.concatenate([c.batch_face_values(xs) for c in self.members], axis=1)

    def face_gradient(self, x: np.ndarray, face_index: int) -> np.ndarray:
        i, j = self._faces[face_index]
        return self.members[i].face_gradient(np.asarray(x, dtype=float), j)


def _check_point(cs: ConstraintSet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D state, got shape {x.shape}")
    if cs.dim is not None and x.size != cs.dim:
        raise ValueError(f"state dimension {x.size} does not match constraint dimension {cs.dim}")
    if not np.all(np.isfinite(x)):
        raise NumericalError("constraint evaluation at a non-finite state")
    return x


def residuals(cs: ConstraintSet, x) -> np.ndarray:
    """Hinge residuals max(0, g_j(x)) for every face, in declaration order."""
    return np.maximum(0.0, cs.face_values(x))


def active_set(cs: ConstraintSet, x) -> list[int]:
    """Face indices with g_j(x) > 0; empty exactly when x is feasible."""
    return [int(i) for i in np.nonzero(cs.face_values(x) > 0.0)[0]]


def jacobian_active(cs: ConstraintSet, x, active: list[int]) -> np.ndarray:
    """Gradient rows of the listed faces, one row per active face."""
    if len(active) == 0:
        raise ValueError("jacobian_active requires a nonempty active list")
    x = _check_point(cs, x)
    return np.stack([cs.face_gradient(x, int(i)) for i in active])


def max_violation(cs: ConstraintSet, x) -> float:
    """Largest hinge residual; 0.0 when feasible or the set is empty."""
    vals = cs.face_values(x)
    if vals.size == 0:
        return 0.0
    return float(max(0.0, vals.max()))
