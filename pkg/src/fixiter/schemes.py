"""The six fixed-point iteration processes and their execution engine.

Schemes
    picard                x_{n+1} = T x_n
    mann                  x_{n+1} = (1-a_n) x_n + a_n T x_n
    ishikawa              y_n = (1-b_n) x_n + b_n T x_n;  x_{n+1} = (1-a_n) x_n + a_n T y_n
    modified_mann         x_{n+1} = (1-a_n) x_n + a_n T^n x_n
    pm_hybrid             y_n = (1-a_n) x_n + a_n T x_n;  x_{n+1} = T y_n
    modified_pm_hybrid    y_n = (1-a_n) x_n + a_n T^n x_n;  x_{n+1} = T^n y_n

Steps are numbered from n = 1, so a power-based scheme never applies the
zeroth iterate (which would make the first step a no-op).  Within one step the
same n indexes both T^n occurrences.

A run stops when the step displacement drops to at most ``stop_tolerance``,
when ``max_steps`` is reached, or when an iterate leaves the domain (the
trajectory is then truncated before the offending point).  Pass a negative
``stop_tolerance`` to disable displacement-based stopping; the comparison
below is exact, so even a step of 0.0 stops a run with the default tolerance.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

from .errors import ConfigurationError, ContractError, DomainError, ParameterError
from .mappings import Mapping, apply_power, distance_to_fixed_set
from .schedules import Schedule
from .space import Vector, combine, domain_membership

SCHEMES = (
    "picard",
    "mann",
    "ishikawa",
    "modified_mann",
    "pm_hybrid",
    "modified_pm_hybrid",
)

# Schemes whose update applies T^n rather than T.
POWER_SCHEMES = ("modified_mann", "modified_pm_hybrid")

_ALPHA_FLOOR = 1e-3
_DECAY_FACTOR = 2.0 / 3.0


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    status: str  # satisfied | violated | undetermined
    detail: str
    enforced: bool = True


@dataclass(frozen=True)
class ScheduleVerdict:
    scheme: str
    verdict: str  # satisfied | violated | undetermined
    checks: tuple[ConstraintCheck, ...]

    @property
    def ok(self) -> bool:
        return self.verdict != "violated"


def _range_check(name: str, sched: Schedule, horizon: int, lo_open: bool, hi_open: bool) -> ConstraintCheck:
    lo_sym = "(" if lo_open else "["
    hi_sym = ")" if hi_open else "]"
    bounds = f"{lo_sym}0, 1{hi_sym}"
    for n in range(1, horizon + 1):
        v = sched.at(n)
        below = v <= 0.0 if lo_open else v < 0.0
        above = v >= 1.0 if hi_open else v > 1.0
        if below or above:
            return ConstraintCheck(
                f"{name}_range", "violated", f"{name}({n}) = {v} outside {bounds}"
            )
    return ConstraintCheck(f"{name}_range", "satisfied", f"{name}(n) in {bounds} for n <= {horizon}")


def _divergence_check(alpha: Schedule, horizon: int) -> ConstraintCheck:
    values = alpha.values(horizon)
    floor = min(values)
    partial = math.fsum(values)
    if floor >= _ALPHA_FLOOR:
        return ConstraintCheck(
            "alpha_sum_divergent", "satisfied",
            f"alpha(n) >= {floor} for n <= {horizon}, so the partial sums grow without bound",
        )
    if partial >= 0.5 * math.log(horizon + 1.0):
        return ConstraintCheck(
            "alpha_sum_divergent", "undetermined",
            f"partial sum {partial:.6g} at horizon {horizon} grows at least logarithmically; "
            "consistent with divergence but not settled at a finite horizon",
        )
    return ConstraintCheck(
        "alpha_sum_divergent", "violated",
        f"partial sum {partial:.6g} at horizon {horizon} is below the log-growth threshold; "
        "the series appears summable",
    )


def _bounded_away_checks(alpha: Schedule, horizon: int, enforced: bool) -> list[ConstraintCheck]:
    # Finite horizons cannot certify a uniform bound; a sustained decay trend
    # (halving the tail does not shrink the value) is treated as the bound failing.
    mid = max(1, horizon // 2)
    lo_now, lo_mid = alpha.at(horizon), alpha.at(mid)
    hi_now, hi_mid = 1.0 - alpha.at(horizon), 1.0 - alpha.at(mid)
    checks = []
    if lo_now <= _DECAY_FACTOR * lo_mid:
        checks.append(ConstraintCheck(
            "alpha_bounded_below", "violated" if enforced else "undetermined",
            f"alpha({horizon}) = {lo_now:.6g} is trending to 0 "
            f"(vs alpha({mid}) = {lo_mid:.6g}); no positive lower bound",
            enforced,
        ))
    else:
        checks.append(ConstraintCheck(
            "alpha_bounded_below", "satisfied",
            f"alpha(n) >= {min(alpha.values(horizon)):.6g} with no decay trend", enforced,
        ))
    if hi_now <= _DECAY_FACTOR * hi_mid:
        checks.append(ConstraintCheck(
            "alpha_bounded_above", "violated" if enforced else "undetermined",
            f"alpha({horizon}) = {alpha.at(horizon):.6g} is trending to 1; no upper bound below 1",
            enforced,
        ))
    else:
        checks.append(ConstraintCheck(
            "alpha_bounded_above", "satisfied",
            f"alpha(n) <= {max(alpha.values(horizon)):.6g} with no growth trend", enforced,
        ))
    return checks


def validate_schedule(
    scheme: str, alpha: Schedule | None, beta: Schedule | None = None, horizon: int = 500
) -> ScheduleVerdict:
    """Check the step-size constraints a scheme imposes on its schedules.

    Range constraints are checked exactly for n up to ``horizon``.  Divergence
    of the alpha series and uniform boundedness away from {0, 1} are decided
    heuristically from the horizon prefix, so those checks may come back
    ``undetermined``.  The overall verdict is ``violated`` when any enforced
    check fails; informational checks never affect it.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme '{scheme}'; known schemes: {SCHEMES}")
    if horizon < 1:
        raise ContractError(f"horizon must be >= 1, got {horizon}")
    if beta is not None and scheme != "ishikawa":
        raise ConfigurationError(f"beta schedule is only meaningful for ishikawa, not {scheme}")

    checks: list[ConstraintCheck] = []
    if scheme == "picard":
        checks.append(ConstraintCheck("no_schedule_needed", "satisfied", "picard uses no step sizes"))
    else:
        if alpha is None:
            raise ConfigurationError(f"scheme {scheme} requires an alpha schedule")
        if scheme in ("mann", "ishikawa", "pm_hybrid"):
            checks.append(_range_check("alpha", alpha, horizon, lo_open=False, hi_open=True))
            if checks[-1].status == "satisfied":
                checks.append(_divergence_check(alpha, horizon))
        elif scheme == "modified_mann":
            checks.append(_range_check("alpha", alpha, horizon, lo_open=True, hi_open=True))
            if checks[-1].status == "satisfied":
                checks.extend(_bounded_away_checks(alpha, horizon, enforced=True))
        else:  # modified_pm_hybrid
            checks.append(_range_check("alpha", alpha, horizon, lo_open=True, hi_open=True))
            if checks[-1].status == "satisfied":
                checks.extend(_bounded_away_checks(alpha, horizon, enforced=False))
        if scheme == "ishikawa":
            if beta is None:
                raise ConfigurationError("ishikawa requires a beta schedule")
            checks.append(_range_check("beta", beta, horizon, lo_open=False, hi_open=True))

    enforced = [c for c in checks if c.enforced]
    if any(c.status == "violated" for c in enforced):
        verdict = "violated"
    elif any(c.status == "undetermined" for c in enforced):
        verdict = "undetermined"
    else:
        verdict = "satisfied"
    return ScheduleVerdict(scheme=scheme, verdict=verdict, checks=tuple(checks))


@dataclass(frozen=True)
class RunConfig:
    scheme: str
    mapping: Mapping
    x0: Vector
    alpha: Schedule | None = None
    beta: Schedule | None = None
    max_steps: int = 10_000
    stop_tolerance: float = 1e-12


@dataclass(frozen=True)
class StepRecord:
    n: int
    step_norm: float
    residual_T: float
    residual_Tn: float
    dist_to_known_fp: float | None
    applications: int


@dataclass(frozen=True)
class Trajectory:
    """Iterates x_0 .. x_N plus one record per step n = 1 .. N.

    Record n describes the step that produced x_n: the displacement from
    x_{n-1}, the residuals ||x_n - T x_n|| and ||x_n - T^n x_n|| (the power
    index is the step's own n), the distance to the known fixed-point set when
    one is declared, and the number of mapping applications the scheme update
    spent (diagnostics are not counted).
    """

    config: RunConfig
    iterates: tuple[Vector, ...]
    records: tuple[StepRecord, ...]
    stop_reason: str  # tolerance | max_steps | domain_exit

    @property
    def scheme(self) -> str:
        return self.config.scheme

    @property
    def steps(self) -> int:
        return len(self.records)

    @property
    def final(self) -> Vector:
        return self.iterates[-1]

    @property
    def total_applications(self) -> int:
        return sum(r.applications for r in self.records)


def _validate_config(config: RunConfig) -> None:
    if config.scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme '{config.scheme}'; known schemes: {SCHEMES}")
    if config.max_steps < 1:
        raise ContractError(f"max_steps must be >= 1, got {config.max_steps}")
    if not math.isfinite(config.stop_tolerance):
        raise ContractError(f"stop_tolerance must be finite, got {config.stop_tolerance}")
    if (config.beta is not None) != (config.scheme == "ishikawa"):
        raise ConfigurationError("beta schedule must be present exactly for the ishikawa scheme")
    if config.scheme != "picard" and config.alpha is None:
        raise ConfigurationError(f"scheme {config.scheme} requires an alpha schedule")
    m = config.mapping
    if config.x0.dim != m.space.dim:
        raise ContractError(f"x0 has dim {config.x0.dim}, mapping space has dim {m.space.dim}")
    if not m.domain.contains(m.space, config.x0):
        raise DomainError(f"x0 = {config.x0.coords} lies outside the mapping domain")
    horizon = min(config.max_steps, 10_000)
    verdict = validate_schedule(config.scheme, config.alpha, config.beta, horizon)
    if not verdict.ok:
        failed = "; ".join(c.detail for c in verdict.checks if c.status == "violated" and c.enforced)
        raise ConfigurationError(f"schedule invalid for {config.scheme}: {failed}")


def run_scheme(config: RunConfig) -> Trajectory:
    """Execute the configured scheme and record the trajectory."""
    _validate_config(config)
    m = config.mapping
    space = m.space
    if config.scheme == "modified_pm_hybrid" and not space.uniformly_convex:
        warnings.warn(
            f"p = {space.p} is not uniformly convex; convergence guarantees for "
            "modified_pm_hybrid assume 1 < p < inf",
            UserWarning,
            stacklevel=2,
        )

    power_cost = (lambda n: 1) if m.has_power else (lambda n: n)
    iterates: list[Vector] = [config.x0]
    records: list[StepRecord] = []
    stop_reason = "max_steps"

    for n in range(1, config.max_steps + 1):
        x = iterates[-1]
        try:
            if config.scheme == "picard":
                nxt = apply_power(m, 1, x)
                cost = 1
            elif config.scheme == "mann":
                nxt = combine(config.alpha.at(n), x, apply_power(m, 1, x))
                cost = 1
            elif config.scheme == "ishikawa":
                y = combine(config.beta.at(n), x, apply_power(m, 1, x))
                if not domain_membership(m.domain, space, y):
                    raise DomainError(f"auxiliary point {y.coords} left the domain at step {n}")
                nxt = combine(config.alpha.at(n), x, apply_power(m, 1, y))
                cost = 2
            elif config.scheme == "modified_mann":
                nxt = combine(config.alpha.at(n), x, apply_power(m, n, x))
                cost = power_cost(n)
            elif config.scheme == "pm_hybrid":
                y = combine(config.alpha.at(n), x, apply_power(m, 1, x))
                if not domain_membership(m.domain, space, y):
                    raise DomainError(f"auxiliary point {y.coords} left the domain at step {n}")
                nxt = apply_power(m, 1, y)
                cost = 2
            else:  # modified_pm_hybrid
                y = combine(config.alpha.at(n), x, apply_power(m, n, x))
                if not domain_membership(m.domain, space, y):
                    raise DomainError(f"auxiliary point {y.coords} left the domain at step {n}")
                nxt = apply_power(m, n, y)
                cost = 2 * power_cost(n)
            if not domain_membership(m.domain, space, nxt):
                raise DomainError(f"iterate {nxt.coords} left the domain at step {n}")
        except DomainError:
            stop_reason = "domain_exit"
            break

        records.append(StepRecord(
            n=n,
            step_norm=space.norm(nxt - x),
            residual_T=space.norm(nxt - apply_power(m, 1, nxt)),
            residual_Tn=space.norm(nxt - apply_power(m, n, nxt)),
            dist_to_known_fp=distance_to_fixed_set(m, nxt),
            applications=cost,
        ))
        iterates.append(nxt)
        if records[-1].step_norm <= config.stop_tolerance:
            stop_reason = "tolerance"
            break

    return Trajectory(
        config=config,
        iterates=tuple(iterates),
        records=tuple(records),
        stop_reason=stop_reason,
    )


def linear_rate_oracle(scheme: str, q: float, alpha: float, n: int = 1) -> float:
    """Exact per-step contraction factor for the linear map x -> q x.

    Independent of the engine: for a constant step size the schemes act on a
    scalar linear map by plain multiplication, so the step-n multiplier has a
    closed form.  ``n`` only matters for modified_pm_hybrid.
    """
    if not (0.0 < q < 1.0):
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise ContractError(f"step index must be >= 1, got {n}")
    if scheme == "picard":
        return q
    if scheme == "mann":
        return 1.0 - alpha * (1.0 - q)
    if scheme == "pm_hybrid":
        return q * (1.0 - alpha * (1.0 - q))
    if scheme == "modified_pm_hybrid":
        qn = q**n
        return qn * (1.0 - alpha * (1.0 - qn))
    raise ParameterError(f"no closed-form factor for scheme '{scheme}'")


# ---------------------------------------------------------------------------
# serialization

def _fmt(value: float | None) -> str:
    # repr gives the shortest decimal that round-trips, stable across platforms
    return "" if value is None else repr(float(value))


def trajectory_csv_rows(traj: Trajectory) -> list[list[str]]:
    dim = traj.config.mapping.space.dim
    header = ["n"] + [f"x_{i}" for i in range(dim)] + [
        "step_norm", "residual_T", "residual_Tn", "dist_to_known_fp",
    ]
    rows = [header]
    for rec in traj.records:
        x = traj.iterates[rec.n]
        rows.append(
            [str(rec.n)] + [_fmt(c) for c in x.coords]
            + [_fmt(rec.step_norm), _fmt(rec.residual_T), _fmt(rec.residual_Tn),
               _fmt(rec.dist_to_known_fp)]
        )
    return rows


def write_trajectory_csv(traj: Trajectory, fileobj) -> None:
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerows(trajectory_csv_rows(traj))


def _p_token(p: float) -> float | str:
    return "inf" if math.isinf(p) else p


def trajectory_header(traj: Trajectory) -> dict:
    """Config echo serialized alongside the CSV."""
    cfg = traj.config
    m = cfg.mapping
    return {
        "scheme": cfg.scheme,
        "mapping": {"id": m.mapping_id, "parameters": dict(m.parameters)},
        "space": {"dim": m.space.dim, "p": _p_token(m.space.p)},
        "x0": list(cfg.x0.coords),
        "alpha": cfg.alpha.to_dict() if cfg.alpha is not None else None,
        "beta": cfg.beta.to_dict() if cfg.beta is not None else None,
        "max_steps": cfg.max_steps,
        "stop_tolerance": cfg.stop_tolerance,
        "stop_reason": traj.stop_reason,
        "steps": traj.steps,
    }
