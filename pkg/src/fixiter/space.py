"""Finite-dimensional p-normed spaces, convex domains, and convexity-modulus estimation.

Points are immutable ``Vector`` values; geometry (norms, distances, unit-ball
sampling) is owned by ``NormedSpace``.  Domains are closed boxes or norm balls
with an absolute membership tolerance ``TAU_DOM`` so that iterates produced by
convex combinations cannot drift out through rounding alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

import numpy as np

from .errors import ContractError, InfeasibleError

# Absolute tolerance for domain membership tests.
TAU_DOM = 1e-9

_BALL_BATCH = 4096


@dataclass(frozen=True)
class Vector:
    """A point with finite real coordinates, dimension >= 1."""

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) == 0:
            raise ContractError("vector must have dimension >= 1")
        if not all(math.isfinite(c) for c in coords):
            raise ContractError(f"vector has non-finite coordinates: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.coords, dtype=float)
        arr.flags.writeable = False
        return arr

    @staticmethod
    def from_array(arr: np.ndarray | Iterable[float]) -> "Vector":
        return Vector(tuple(float(c) for c in np.asarray(arr, dtype=float)))

    def __add__(self, other: "Vector") -> "Vector":
        return Vector.from_array(self.array + other.array)

    def __sub__(self, other: "Vector") -> "Vector":
        return Vector.from_array(self.array - other.array)

    def __mul__(self, scalar: float) -> "Vector":
        return Vector.from_array(self.array * float(scalar))

    __rmul__ = __mul__


def combine(t: float, x: Vector, y: Vector) -> Vector:
    """Convex combination (1-t)*x + t*y."""
    return Vector.from_array((1.0 - t) * x.array + t * y.array)


@dataclass(frozen=True)
class NormedSpace:
    """R^dim equipped with the l_p norm, 1 <= p <= inf (use ``math.inf``)."""

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if self.dim < 1:
            raise ContractError(f"space dimension must be >= 1, got {self.dim}")
        if not (self.p >= 1.0):
            raise ContractError(f"norm exponent must satisfy p >= 1, got {self.p}")

    @property
    def uniformly_convex(self) -> bool:
        # l_p is uniformly convex exactly for 1 < p < inf.
        return 1.0 < self.p < math.inf

    def _check_dim(self, v: Vector) -> None:
        if v.dim != self.dim:
            raise ContractError(f"dimension mismatch: space has dim {self.dim}, vector has dim {v.dim}")

    def norm(self, v: Vector) -> float:
        self._check_dim(v)
        ord_ = np.inf if self.p == math.inf else self.p
        return float(np.linalg.norm(v.array, ord=ord_))

    def norm_rows(self, points: np.ndarray) -> np.ndarray:
        """Norms of an (n, dim) array of row vectors."""
        ord_ = np.inf if self.p == math.inf else self.p
        return np.linalg.norm(points, ord=ord_, axis=1)

    def distance(self, x: Vector, y: Vector) -> float:
        return self.norm(x - y)

    def unit_ball_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` points uniformly from the closed unit ball (rejection from the cube)."""
        kept: list[np.ndarray] = []
        total = 0
        while total < count:
            batch = rng.uniform(-1.0, 1.0, size=(_BALL_BATCH, self.dim))
            inside = batch[self.norm_rows(batch) <= 1.0]
            kept.append(inside)
            total += len(inside)
        return np.concatenate(kept)[:count]


def norm(space: NormedSpace, v: Vector) -> float:
    """The l_p norm of ``v`` in ``space``."""
    return space.norm(v)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box, lows[i] <= highs[i]."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]
    kind = "box"

    def __post_init__(self):
        lows = tuple(float(v) for v in self.lows)
        highs = tuple(float(v) for v in self.highs)
        if len(lows) != len(highs) or len(lows) == 0:
            raise ContractError("box needs matching, nonempty lower and upper bounds")
        if any(lo > hi for lo, hi in zip(lows, highs)):
            raise ContractError(f"box has lo > hi: lows={lows} highs={highs}")
        if not all(math.isfinite(v) for v in lows + highs):
            raise ContractError("box bounds must be finite")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def dim(self) -> int:
        return len(self.lows)

    def contains(self, space: NormedSpace, v: Vector, tol: float = TAU_DOM) -> bool:
        if v.dim != self.dim:
            raise ContractError(f"dimension mismatch: box has dim {self.dim}, vector has dim {v.dim}")
        return all(lo - tol <= c <= hi + tol for c, lo, hi in zip(v.coords, self.lows, self.highs))

    def diameter(self, space: NormedSpace) -> float:
        side = Vector(tuple(hi - lo for lo, hi in zip(self.lows, self.highs)))
        return space.norm(side)

    def sample(self, space: NormedSpace, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lows, self.highs, size=(count, self.dim))

    def extreme_points(self) -> tuple[Vector, Vector]:
        """A maximally separated pair (the two opposite corners)."""
        return Vector(self.lows), Vector(self.highs)

    def clip(self, space: NormedSpace, v: Vector) -> Vector:
        return Vector(tuple(min(max(c, lo), hi) for c, lo, hi in zip(v.coords, self.lows, self.highs)))


@dataclass(frozen=True)
class Ball:
    """Closed norm ball; the norm is supplied by the space at query time."""

    center: Vector
    radius: float
    kind = "ball"

    def __post_init__(self):
        if not (self.radius >= 0.0) or not math.isfinite(self.radius):
            raise ContractError(f"ball radius must be finite and >= 0, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.dim

    def contains(self, space: NormedSpace, v: Vector, tol: float = TAU_DOM) -> bool:
        return space.distance(v, self.center) <= self.radius + tol

    def diameter(self, space: NormedSpace) -> float:
        return 2.0 * self.radius

    def sample(self, space: NormedSpace, rng: np.random.Generator, count: int) -> np.ndarray:
        pts = space.unit_ball_points(rng, count)
        return self.center.array + self.radius * pts

    def extreme_points(self) -> tuple[Vector, Vector]:
        offset = np.zeros(self.dim)
        offset[0] = self.radius
        return Vector.from_array(self.center.array - offset), Vector.from_array(self.center.array + offset)

    def clip(self, space: NormedSpace, v: Vector) -> Vector:
        # Radial projection; lands on the sphere for outside points, exact for every l_p.
        d = space.distance(v, self.center)
        if d <= self.radius:
            return v
        scale = self.radius / d
        return Vector.from_array(self.center.array + scale * (v.array - self.center.array))


Domain = Union[Box, Ball]


def domain_membership(domain: Domain, space: NormedSpace, v: Vector, tol: float = TAU_DOM) -> bool:
    """Closed-set membership within absolute tolerance ``tol``."""
    return domain.contains(space, v, tol)


@dataclass(frozen=True)
class ModulusEstimate:
    """Sampled upper bound on the modulus of convexity at a given separation.

    ``estimate`` is the minimum of 1 - ||x+y||/2 over the evaluated admissible
    pairs (unit-ball points at distance >= epsilon), so it always sits at or
    above the true infimum.
    """

    epsilon: float
    estimate: float
    sample_count: int
    best_witness: tuple[Vector, Vector]


def _seed_pairs(space: NormedSpace, epsilon: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic near-extremal pairs on the unit sphere.

    Includes the antipodal pair and a same-cap pair at separation exactly
    epsilon; for p=1 also a pair along a flat face of the ball.  These make
    tiny budgets land on (or very near) the infimum for every p.
    """
    d, p = space.dim, space.p
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    if d == 1:
        # On the line the extremal pair is (1, 1 - epsilon).
        pairs.append((np.array([1.0]), np.array([1.0 - epsilon])))
        pairs.append((np.array([1.0]), np.array([-1.0])))
        return pairs
    b = epsilon / 2.0
    if p == math.inf:
        a = 1.0
    else:
        a = (1.0 - b**p) ** (1.0 / p) if b < 1.0 else 0.0
    cap_x = np.zeros(d)
    cap_y = np.zeros(d)
    cap_x[0] = a
    cap_y[0] = a
    cap_x[1] = b
    cap_y[1] = -b
    pairs.append((cap_x, cap_y))
    if p == 1.0:
        face_x = np.zeros(d)
        face_y = np.zeros(d)
        face_x[0] = 1.0
        face_y[0] = 1.0 - b
        face_y[1] = b
        pairs.append((face_x, face_y))
    anti = np.zeros(d)
    anti[0] = 1.0
    pairs.append((anti, -anti))
    return pairs


def modulus_of_convexity_estimate(
    space: NormedSpace, epsilon: float, sample_count: int, seed: int
) -> ModulusEstimate:
    """Estimate the convexity modulus by seeded sampling of admissible pairs.

    Draws ``sample_count`` independent pairs from the unit ball, keeps those at
    distance >= epsilon, adds the deterministic extremal seed pairs, and returns
    the minimum of 1 - ||x+y||/2 together with the achieving pair.  Identical
    seed and budget reproduce the result bit for bit.
    """
    if sample_count < 1:
        raise ContractError(f"sample_count must be >= 1, got {sample_count}")
    if epsilon < 0.0:
        raise ContractError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon > 2.0:
        raise InfeasibleError(
            f"no unit-ball pair has separation {epsilon} > 2; the constraint set is empty"
        )

    rng = np.random.default_rng(seed)
    xs = space.unit_ball_points(rng, sample_count)
    ys = space.unit_ball_points(rng, sample_count)
    admissible = space.norm_rows(xs - ys) >= epsilon
    xs, ys = xs[admissible], ys[admissible]

    best_val = math.inf
    best_pair: tuple[np.ndarray, np.ndarray] | None = None
    evaluated = 0
    for sx, sy in _seed_pairs(space, epsilon):
        evaluated += 1
        val = 1.0 - space.norm(Vector.from_array(sx + sy)) / 2.0
        if val < best_val:
            best_val, best_pair = val, (sx, sy)
    if len(xs):
        vals = 1.0 - space.norm_rows(xs + ys) / 2.0
        evaluated += len(vals)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pair = float(vals[i]), (xs[i], ys[i])

    assert best_pair is not None
    wx, wy = Vector.from_array(best_pair[0]), Vector.from_array(best_pair[1])
    # Recompute through the scalar path so the witness reproduces the estimate exactly.
    estimate = 1.0 - space.norm(wx + wy) / 2.0
    return ModulusEstimate(epsilon=float(epsilon), estimate=estimate, sample_count=evaluated, best_witness=(wx, wy))
