"""Self-maps of convex domains, iterate powers, and sampled class certification.

A ``Mapping`` bundles a point evaluator with its domain, the space whose norm
measures it, an optional closed-form power ``T^n``, and metadata (declared
class, known fixed points, coefficient schedules, discontinuity points).
Construction samples the map to certify that it is a self-map and that any
registered power agrees with repeated application.

Certification of a mapping class is sampling-based and one-sided: "certified"
means no violation was found at the given budget, never a proof.  Witnesses
are kept so a reported violation can be reproduced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DomainError, ParameterError, ScheduleError
from .schedules import Schedule
from .space import TAU_DOM, Ball, Box, Domain, NormedSpace, Vector

# Absolute slack for all sampled inequality checks.
TAU_CERT = 1e-8

MAPPING_CLASSES = (
    "nonexpansive",
    "asymptotically_nonexpansive",
    "nearly_nonexpansive",
    "uniformly_lipschitz_only",
    "unknown",
)

_SELF_MAP_SEED = 0x5E1F
_SELF_MAP_SAMPLES = 1000
_POWER_SAMPLES = 100
_POWER_N_MAX = 20
_POWER_TOL = 1e-10
_DISCONTINUITY_OFFSETS = (1e-3, 1e-6)


@dataclass(frozen=True)
class MappingMeta:
    declared_class: str = "unknown"
    known_fixed_points: tuple[Vector, ...] | None = None
    lipschitz_L: float | None = None
    k_schedule: Schedule | None = None
    a_schedule: Schedule | None = None
    discontinuities: tuple[Vector, ...] = ()
    fixed_set_is_domain: bool = False


@dataclass(frozen=True)
class Mapping:
    mapping_id: str
    space: NormedSpace
    domain: Domain
    apply: Callable[[Vector], Vector]
    power: Callable[[int, Vector], Vector] | None
    meta: MappingMeta
    parameters: tuple[tuple[str, float], ...] = ()

    @property
    def has_power(self) -> bool:
        return self.power is not None


def apply_power(m: Mapping, n: int, x: Vector) -> Vector:
    """The n-th iterate T^n x; n = 0 returns x unchanged."""
    if n < 0:
        raise ContractError(f"power index must be >= 0, got {n}")
    if not m.domain.contains(m.space, x):
        raise DomainError(f"point {x.coords} lies outside the domain of mapping '{m.mapping_id}'")
    if n == 0:
        return x
    if m.power is not None:
        result = m.power(n, x)
    else:
        result = x
        for _ in range(n):
            result = m.apply(result)
    if not m.domain.contains(m.space, result):
        raise DomainError(
            f"mapping '{m.mapping_id}' left its domain: T^{n} {x.coords} = {result.coords}"
        )
    return result


def fixed_point_residual(m: Mapping, x: Vector) -> float:
    """||x - Tx||; vanishes (up to rounding) exactly at fixed points."""
    return m.space.norm(x - apply_power(m, 1, x))


def distance_to_fixed_set(m: Mapping, x: Vector) -> Optional[float]:
    """Distance to the known fixed-point set, or None when no set is declared."""
    if m.meta.fixed_set_is_domain:
        return 0.0
    if m.meta.known_fixed_points:
        return min(m.space.distance(x, p) for p in m.meta.known_fixed_points)
    return None


def near_schedule_for(m: Mapping) -> Optional[Schedule]:
    """The mapping's near-sequence a_n: declared directly, derived from k_n
    and the domain diameter for maps declared via an asymptotic schedule, or
    identically zero for maps declared nonexpansive."""
    if m.meta.a_schedule is not None:
        return m.meta.a_schedule
    if m.meta.k_schedule is not None:
        return near_sequence_from_asymptotic(m.meta.k_schedule, m.domain.diameter(m.space))
    if m.meta.declared_class == "nonexpansive":
        return Schedule.constant(0.0)
    return None


def near_sequence_from_asymptotic(k: Schedule, diam: float) -> Schedule:
    """Turn an asymptotic schedule k_n >= 1 into the near-sequence (k_n - 1) * diam."""
    if diam < 0.0:
        raise ContractError(f"diameter must be >= 0, got {diam}")

    def fn(n: int) -> float:
        kn = k.at(n)
        if kn < 1.0:
            raise ScheduleError(f"asymptotic schedule must satisfy k(n) >= 1; k({n}) = {kn}")
        return (kn - 1.0) * diam

    return Schedule.formula(fn, label=f"near_from_{k.kind}")


# ---------------------------------------------------------------------------
# construction

def _domain_vectors(m_space: NormedSpace, domain: Domain, rng: np.random.Generator, count: int) -> list[Vector]:
    return [Vector.from_array(row) for row in domain.sample(m_space, rng, count)]


def special_points(space: NormedSpace, domain: Domain, meta: MappingMeta) -> list[Vector]:
    """Deterministic probe points: domain extremes, declared discontinuities,
    and points pushed tiny offsets away from each discontinuity.  Violations of
    the mapping-class inequalities concentrate there."""
    points: list[Vector] = list(domain.extreme_points())
    for d in meta.discontinuities:
        points.append(d)
        for off in _DISCONTINUITY_OFFSETS:
            for axis in range(space.dim):
                for sign in (1.0, -1.0):
                    shifted = d.array.copy()
                    shifted[axis] += sign * off
                    neighbor = domain.clip(space, Vector.from_array(shifted))
                    if neighbor.coords != d.coords:
                        points.append(neighbor)
    if meta.known_fixed_points:
        points.extend(meta.known_fixed_points)
    return points


def _special_pairs(m: Mapping) -> list[tuple[Vector, Vector]]:
    pairs: list[tuple[Vector, Vector]] = [m.domain.extreme_points()]
    for d in m.meta.discontinuities:
        for off in _DISCONTINUITY_OFFSETS:
            for axis in range(m.space.dim):
                for sign in (1.0, -1.0):
                    shifted = d.array.copy()
                    shifted[axis] += sign * off
                    neighbor = m.domain.clip(m.space, Vector.from_array(shifted))
                    if neighbor.coords != d.coords:
                        pairs.append((neighbor, d))
    return pairs


def build_mapping(
    mapping_id: str,
    space: NormedSpace,
    domain: Domain,
    apply: Callable[[Vector], Vector],
    power: Callable[[int, Vector], Vector] | None = None,
    meta: MappingMeta = MappingMeta(),
    parameters: dict | None = None,
) -> Mapping:
    """Assemble a Mapping and certify its construction invariants by sampling.

    Checks, each with a fixed internal seed so construction is reproducible:
    * the evaluator maps the domain into itself (uniform samples plus the
      deterministic probe points);
    * a registered closed-form power agrees with repeated application to
      within 1e-10, and returns its argument unchanged at n = 0;
    * declared metadata is coherent (schedules present and admissible for the
      declared class, listed fixed points actually fixed).
    """
    if domain.dim != space.dim:
        raise ContractError(f"domain dim {domain.dim} != space dim {space.dim}")
    if meta.declared_class not in MAPPING_CLASSES:
        raise ContractError(f"unknown mapping class '{meta.declared_class}'")
    _check_meta(space, meta)

    rng = np.random.default_rng(_SELF_MAP_SEED)
    probes = _domain_vectors(space, domain, rng, _SELF_MAP_SAMPLES)
    probes.extend(special_points(space, domain, meta))
    for x in probes:
        fx = apply(x)
        if not domain.contains(space, fx):
            raise ContractError(
                f"mapping '{mapping_id}' is not a self-map: T{x.coords} = {fx.coords} left the domain"
            )

    if power is not None:
        xs = _domain_vectors(space, domain, rng, _POWER_SAMPLES)
        ns = rng.integers(1, _POWER_N_MAX + 1, size=_POWER_SAMPLES)
        for x, n in zip(xs, ns):
            iterated = x
            for _ in range(int(n)):
                iterated = apply(iterated)
            gap = space.distance(power(int(n), x), iterated)
            if gap > _POWER_TOL:
                raise ContractError(
                    f"closed-form power of '{mapping_id}' disagrees with {n}-fold application "
                    f"at {x.coords} by {gap:.3e}"
                )
        for x in xs[:5]:
            if power(0, x).coords != x.coords:
                raise ContractError(f"power(0, x) must return x exactly for '{mapping_id}'")

    m = Mapping(
        mapping_id=mapping_id,
        space=space,
        domain=domain,
        apply=apply,
        power=power,
        meta=meta,
        parameters=tuple(sorted((parameters or {}).items())),
    )
    if meta.known_fixed_points:
        for p in meta.known_fixed_points:
            res = fixed_point_residual(m, p)
            if res > 1e-10:
                raise ContractError(
                    f"declared fixed point {p.coords} of '{mapping_id}' has residual {res:.3e}"
                )
    return m


def _check_meta(space: NormedSpace, meta: MappingMeta) -> None:
    if meta.declared_class == "asymptotically_nonexpansive":
        if meta.k_schedule is None:
            raise ContractError("asymptotically nonexpansive maps must declare a k schedule")
        for n in range(1, 101):
            if meta.k_schedule.at(n) < 1.0:
                raise ScheduleError(f"k({n}) = {meta.k_schedule.at(n)} < 1")
        if meta.k_schedule.at(10_000) > 1.0 + 1e-2:
            raise ScheduleError("k schedule does not approach 1")
    if meta.declared_class == "nearly_nonexpansive":
        if meta.a_schedule is None:
            raise ContractError("nearly nonexpansive maps must declare an a schedule")
        for n in range(1, 101):
            if meta.a_schedule.at(n) < 0.0:
                raise ScheduleError(f"a({n}) = {meta.a_schedule.at(n)} < 0")
        if meta.a_schedule.at(10_000) > 1e-2:
            raise ScheduleError("a schedule does not approach 0")
    if meta.lipschitz_L is not None and meta.lipschitz_L <= 0.0:
        raise ContractError(f"Lipschitz constant must be > 0, got {meta.lipschitz_L}")
    for p in meta.known_fixed_points or ():
        if p.dim != space.dim:
            raise ContractError(f"fixed point {p.coords} has wrong dimension")


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Witness:
    x: Vector
    y: Vector | None = None
    n: int | None = None


@dataclass(frozen=True)
class Certificate:
    """Outcome of a sampled inequality check.

    ``max_violation`` is the largest observed excess over the checked bound
    (negative when the bound held with room to spare); the verdict is
    ``refuted`` exactly when it exceeds TAU_CERT, and ``inconclusive`` when the
    requested budget was below 10 samples.
    """

    property_name: str
    n_range: tuple[int, int]
    sample_count: int
    max_violation: float
    witness: Witness
    verdict: str

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def _verdict(max_violation: float, requested: int) -> str:
    if requested < 10:
        return "inconclusive"
    return "refuted" if max_violation > TAU_CERT else "certified"


def _certify_pairs(
    property_name: str,
    m: Mapping,
    violation: Callable[[int, Vector, Vector], float],
    n_max: int,
    sample_count: int,
    seed: int,
) -> Certificate:
    if n_max < 1:
        raise ContractError(f"n_max must be >= 1, got {n_max}")
    if sample_count < 1:
        raise ContractError(f"sample_count must be >= 1, got {sample_count}")

    best = -math.inf
    best_witness: Witness | None = None
    evaluated = 0

    def consider(n: int, x: Vector, y: Vector) -> None:
        nonlocal best, best_witness, evaluated
        v = violation(n, x, y)
        evaluated += 1
        if v > best:
            best = v
            best_witness = Witness(x=x, y=y, n=n)

    for x, y in _special_pairs(m):
        for n in range(1, n_max + 1):
            consider(n, x, y)

    rng = np.random.default_rng(seed)
    ns = rng.integers(1, n_max + 1, size=sample_count)
    xs = m.domain.sample(m.space, rng, sample_count)
    ys = m.domain.sample(m.space, rng, sample_count)
    for i in range(sample_count):
        consider(int(ns[i]), Vector.from_array(xs[i]), Vector.from_array(ys[i]))

    assert best_witness is not None
    return Certificate(
        property_name=property_name,
        n_range=(1, n_max),
        sample_count=evaluated,
        max_violation=best,
        witness=best_witness,
        verdict=_verdict(best, sample_count),
    )


def nearly_nonexpansive_violation(m: Mapping, a: Schedule, n: int, x: Vector, y: Vector) -> float:
    """Excess of ||T^n x - T^n y|| over ||x - y|| + a_n."""
    lhs = m.space.norm(apply_power(m, n, x) - apply_power(m, n, y))
    return lhs - m.space.distance(x, y) - a.at(n)


def uniform_lipschitz_violation(m: Mapping, L: float, n: int, x: Vector, y: Vector) -> float:
    """Excess of ||T^n x - T^n y|| over L * ||x - y||."""
    lhs = m.space.norm(apply_power(m, n, x) - apply_power(m, n, y))
    return lhs - L * m.space.distance(x, y)


def asymptotically_nonexpansive_violation(m: Mapping, k: Schedule, n: int, x: Vector, y: Vector) -> float:
    """Excess of ||T^n x - T^n y|| over k_n * ||x - y||."""
    lhs = m.space.norm(apply_power(m, n, x) - apply_power(m, n, y))
    return lhs - k.at(n) * m.space.distance(x, y)


def certify_nearly_nonexpansive(
    m: Mapping, a: Schedule, n_max: int, sample_count: int, seed: int
) -> Certificate:
    """Sampled check of ||T^n x - T^n y|| <= ||x - y|| + a_n for 1 <= n <= n_max."""
    for n in range(1, n_max + 1):
        if a.at(n) < 0.0:
            raise ScheduleError(f"near-sequence must be >= 0; a({n}) = {a.at(n)}")
    return _certify_pairs(
        "nearly_nonexpansive", m, lambda n, x, y: nearly_nonexpansive_violation(m, a, n, x, y),
        n_max, sample_count, seed,
    )


def certify_uniform_lipschitz(
    m: Mapping, L: float, n_max: int, sample_count: int, seed: int
) -> Certificate:
    """Sampled check of ||T^n x - T^n y|| <= L * ||x - y|| for 1 <= n <= n_max."""
    if L <= 0.0:
        raise ParameterError(f"Lipschitz constant must be > 0, got {L}")
    return _certify_pairs(
        "uniformly_lipschitz", m, lambda n, x, y: uniform_lipschitz_violation(m, L, n, x, y),
        n_max, sample_count, seed,
    )


def certify_asymptotically_nonexpansive(
    m: Mapping, k: Schedule, n_max: int, sample_count: int, seed: int
) -> Certificate:
    """Sampled check of ||T^n x - T^n y|| <= k_n * ||x - y|| for 1 <= n <= n_max."""
    for n in range(1, n_max + 1):
        if k.at(n) < 1.0:
            raise ScheduleError(f"asymptotic schedule must satisfy k(n) >= 1; k({n}) = {k.at(n)}")
    return _certify_pairs(
        "asymptotically_nonexpansive", m, lambda n, x, y: asymptotically_nonexpansive_violation(m, k, n, x, y),
        n_max, sample_count, seed,
    )


def certify_nonexpansive(m: Mapping, sample_count: int, seed: int) -> Certificate:
    """Sampled check of the single-application bound ||Tx - Ty|| <= ||x - y||."""
    cert = _certify_pairs(
        "nonexpansive", m, lambda n, x, y: uniform_lipschitz_violation(m, 1.0, n, x, y),
        1, sample_count, seed,
    )
    return replace(cert, property_name="nonexpansive")


# ---------------------------------------------------------------------------
# catalog

def make_example21(q: float, space: NormedSpace | None = None) -> Mapping:
    """Discontinuous scaling map on [0, 1]: x -> q*x below 1, with T(1) = 0.

    Not Lipschitz across the jump at x = 1, yet the iterates satisfy
    ||T^n x - T^n y|| <= ||x - y|| + q^n, so it is nearly nonexpansive with
    near-sequence q^n.  The closed-form power is q^n * x (0 beyond the jump).
    """
    if not (0.0 < q < 1.0):
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    space = space or NormedSpace(1, 2.0)
    if space.dim != 1:
        raise ParameterError(f"example21 is one-dimensional; got space dim {space.dim}")
    domain = Box((0.0,), (1.0,))

    def apply(x: Vector) -> Vector:
        v = x.coords[0]
        return Vector((0.0,)) if v >= 1.0 else Vector((q * v,))

    def power(n: int, x: Vector) -> Vector:
        if n == 0:
            return x
        v = x.coords[0]
        return Vector((0.0,)) if v >= 1.0 else Vector(((q**n) * v,))

    meta = MappingMeta(
        declared_class="nearly_nonexpansive",
        known_fixed_points=(Vector((0.0,)),),
        a_schedule=Schedule.geometric(q),
        discontinuities=(Vector((1.0,)),),
    )
    return build_mapping("example21", space, domain, apply, power, meta, {"q": q})


def make_linear_contraction(q: float, dim: int = 1, space: NormedSpace | None = None) -> Mapping:
    """x -> q*x on the unit ball; nonexpansive with fixed point 0."""
    if not (0.0 < q < 1.0):
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    space = space or NormedSpace(dim, 2.0)
    if space.dim != dim:
        raise ParameterError(f"space dim {space.dim} != requested dim {dim}")
    origin = Vector((0.0,) * dim)
    domain = Ball(origin, 1.0)

    def apply(x: Vector) -> Vector:
        return Vector.from_array(q * x.array)

    def power(n: int, x: Vector) -> Vector:
        return x if n == 0 else Vector.from_array((q**n) * x.array)

    meta = MappingMeta(
        declared_class="nonexpansive",
        known_fixed_points=(origin,),
        lipschitz_L=1.0,
    )
    return build_mapping("contraction", space, domain, apply, power, meta, {"q": q, "dim": dim})


def make_identity(dim: int = 1, space: NormedSpace | None = None) -> Mapping:
    """The identity on the box [-1, 1]^dim; every point is fixed."""
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    space = space or NormedSpace(dim, 2.0)
    if space.dim != dim:
        raise ParameterError(f"space dim {space.dim} != requested dim {dim}")
    domain = Box((-1.0,) * dim, (1.0,) * dim)
    meta = MappingMeta(declared_class="nonexpansive", lipschitz_L=1.0, fixed_set_is_domain=True)
    return build_mapping(
        "identity", space, domain,
        apply=lambda x: x,
        power=lambda n, x: x,
        meta=meta,
        parameters={"dim": dim},
    )


_DEMO_EXPAND = 1.2
_DEMO_SHRINK = 0.5


def make_asymptotically_nonexpansive_example(dim: int = 2, space: NormedSpace | None = None) -> Mapping:
    """A map that expands on its first application but contracts from then on.

    For dim >= 2 the first two coordinates are swapped with scale factors
    (1.2, 0.5): one application stretches by up to 1.2, so the map is not
    nonexpansive, but every even power is a plain contraction and the iterate
    Lipschitz constants drop to at most 0.72 from n = 2 onward.  The declared
    asymptotic schedule is (1.2, 1, 1, ...).  For dim = 1 the catalog falls
    back to the halving map with the constant schedule 1.
    """
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    space = space or NormedSpace(dim, 2.0)
    if space.dim != dim:
        raise ParameterError(f"space dim {space.dim} != requested dim {dim}")

    if dim == 1:
        domain = Box((-1.0,), (1.0,))
        meta = MappingMeta(
            declared_class="asymptotically_nonexpansive",
            known_fixed_points=(Vector((0.0,)),),
            lipschitz_L=1.0,
            k_schedule=Schedule.constant(1.0),
        )
        return build_mapping(
            "asymptotic_demo", space, domain,
            apply=lambda x: Vector((0.5 * x.coords[0],)),
            power=lambda n, x: Vector(((0.5**n) * x.coords[0],)),
            meta=meta,
            parameters={"dim": dim},
        )

    lam, mu = _DEMO_EXPAND, _DEMO_SHRINK
    lows = [-1.0, -1.0 / lam] + [-1.0] * (dim - 2)
    highs = [1.0, 1.0 / lam] + [1.0] * (dim - 2)
    domain = Box(tuple(lows), tuple(highs))
    origin = Vector((0.0,) * dim)

    def apply(x: Vector) -> Vector:
        out = mu * x.array
        out[0] = lam * x.coords[1]
        out[1] = mu * x.coords[0]
        return Vector.from_array(out)

    def power(n: int, x: Vector) -> Vector:
        if n == 0:
            return x
        half, odd = divmod(n, 2)
        head = ((lam * mu) ** half) * np.array([x.coords[0], x.coords[1]])
        tail = (mu ** (2 * half)) * x.array[2:]
        even_part = Vector.from_array(np.concatenate((head, tail)))
        return apply(even_part) if odd else even_part

    meta = MappingMeta(
        declared_class="asymptotically_nonexpansive",
        known_fixed_points=(origin,),
        lipschitz_L=lam,
        k_schedule=Schedule.table((lam, 1.0)),
    )
    return build_mapping("asymptotic_demo", space, domain, apply, power, meta, {"dim": dim})


CATALOG_IDS = ("example21", "contraction", "identity", "asymptotic_demo")


def get_mapping(mapping_id: str, parameters: dict, space: NormedSpace) -> Mapping:
    """Resolve a catalog id and parameter dict against a space."""
    params = dict(parameters)
    if mapping_id == "example21":
        q = params.pop("q", None)
        if q is None:
            raise ParameterError("example21 requires parameter 'q'")
        if params:
            raise ParameterError(f"example21 got unknown parameters {sorted(params)}")
        return make_example21(float(q), space)
    if mapping_id == "contraction":
        q = params.pop("q", None)
        if q is None:
            raise ParameterError("contraction requires parameter 'q'")
        if params:
            raise ParameterError(f"contraction got unknown parameters {sorted(params)}")
        return make_linear_contraction(float(q), space.dim, space)
    if mapping_id == "identity":
        if params:
            raise ParameterError(f"identity got unknown parameters {sorted(params)}")
        return make_identity(space.dim, space)
    if mapping_id == "asymptotic_demo":
        if params:
            raise ParameterError(f"asymptotic_demo got unknown parameters {sorted(params)}")
        return make_asymptotically_nonexpansive_example(space.dim, space)
    raise ParameterError(f"unknown mapping id '{mapping_id}'; known ids: {CATALOG_IDS}")
