"""Weak-limit diagnostics: g-sweeps, power-law order fits, and the
comparison between the g -> 0 and spread -> infinity routes to the weak value.

The central quantities are norms measuring how the coupled state differs
from the uncoupled one:

* ``continuity_metric``   || U(g) Psi0 - Psi0 ||
* ``derail_metric``       norm of the system-orthogonal component of U(g) Psi0
* ``first_order_residual``|| U(g) Psi0 - (Psi0 - i g S|in> (x) P|m>) ||
* ``overlap_deficit``     1 - |<Psi0| U(g) Psi0>|

Fitting log(metric) against log(g) gives the leading order in g.  Metric
values at or below ``METRIC_FLOOR`` are treated as identically zero: they
are excluded from the fit and counted, so exact invariance is never
confused with a very high order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ScheduleError, UnclassifiedOrderError
from .pointer import PointerModel, gaussian_pointer
from .qcore import (
    CouplingEvolution,
    LinearOperator,
    StateVector,
    first_order_state,
    tensor_product,
)
from .weakmeas import PrePostSelection, _PointerReadout, weak_value

#: Metric values at or below this floor count as identically zero.
METRIC_FLOOR = 1e-14
#: Sentinel order for all-floor sweeps: no trace at any fitted order.
ALL_FLOOR_ORDER = math.inf

#: Fitted-order classification bands.
FIRST_ORDER_BAND = (0.75, 1.25)
SECOND_ORDER_BAND = (1.75, 2.5)


def default_g_decade(
    g_max: float = 1e-2, g_min: float = 1e-4, points: int = 9
) -> tuple[float, ...]:
    """Decreasing geometric schedule used for all order fits by default."""
    if not 0 < g_min < g_max:
        raise ScheduleError("need 0 < g_min < g_max")
    if points < 4:
        raise ScheduleError("need at least 4 schedule points")
    return tuple(np.geomspace(g_max, g_min, points))


def _joint_ready(pre: StateVector, m: StateVector):
    return tensor_product(pre, m)


def continuity_metric(
    pre: StateVector, m: StateVector, S: LinearOperator, P: LinearOperator, g: float
) -> float:
    """|| U(g)(|in> (x) |m>) - |in> (x) |m> ||; zero at g = 0, bounded by 2."""
    evolution = CouplingEvolution(S, P)
    joint = _joint_ready(pre, m)
    evolved = evolution.apply(g, joint)
    return float(np.linalg.norm(evolved.state.amps - joint.state.amps))


def derail_metric(
    pre: StateVector, m: StateVector, S: LinearOperator, P: LinearOperator, g: float
) -> float:
    """Norm of the component of U(g) Psi0 orthogonal to |in> on the system factor."""
    if not pre.normalized:
        raise ValueError("derail metric requires a normalized system state")
    evolution = CouplingEvolution(S, P)
    if g == 0.0:
        return 0.0
    evolved = evolution.apply(g, _joint_ready(pre, m)).as_matrix()
    overlap = pre.amps.conj() @ evolved  # pointer-space row
    orthogonal = evolved - np.outer(pre.amps, overlap)
    return float(np.linalg.norm(orthogonal))


def first_order_residual(
    pre: StateVector, m: StateVector, S: LinearOperator, P: LinearOperator, g: float
) -> float:
    """Norm distance between the exact evolution and its O(g) expansion."""
    evolution = CouplingEvolution(S, P)
    exact = evolution.apply(g, _joint_ready(pre, m))
    expansion = first_order_state(pre, m, S, P, g)
    return float(np.linalg.norm(exact.state.amps - expansion.state.amps))


def overlap_deficit(
    pre: StateVector, m: StateVector, S: LinearOperator, P: LinearOperator, g: float
) -> float:
    """1 - |<Psi0|U(g)|Psi0>|."""
    evolution = CouplingEvolution(S, P)
    joint = _joint_ready(pre, m)
    evolved = evolution.apply(g, joint)
    return float(1.0 - abs(np.vdot(joint.state.amps, evolved.state.amps)))


def _check_fit_inputs(
    g_values: Sequence[float], metric_values: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    gs = np.asarray([float(g) for g in g_values])
    ms = np.asarray([float(v) for v in metric_values])
    if gs.size != ms.size:
        raise ValueError("g_values and metric_values lengths differ")
    if gs.size < 4:
        raise ScheduleError("need at least 4 sweep points")
    if np.any(gs <= 0):
        raise ScheduleError("g values must be positive")
    if np.any(np.diff(gs) >= 0):
        raise ScheduleError("schedule must decrease")
    if np.any(~np.isfinite(ms)) or np.any(ms < 0):
        raise ValueError("metric values must be finite and non-negative")
    if math.log10(gs[0] / gs[-1]) < 1.0 - 1e-9:
        raise ScheduleError("g values must span at least one decade")
    return gs, ms


def fit_order(
    g_values: Sequence[float], metric_values: Sequence[float]
) -> tuple[float, float, float]:
    """Least-squares line in (log g, log metric).

    Returns (order, coefficient, residual) where order is the slope,
    coefficient is exp(intercept) and residual is the maximum absolute
    deviation in log-log space.  Fewer than 4 points above the floor is
    the all-floor outcome: (inf, 0.0, 0.0), meaning the metric left no
    trace at any fitted order.
    """
    gs, ms = _check_fit_inputs(g_values, metric_values)
    usable = ms > METRIC_FLOOR
    if int(np.count_nonzero(usable)) < 4:
        return (ALL_FLOOR_ORDER, 0.0, 0.0)
    log_g = np.log(gs[usable])
    log_m = np.log(ms[usable])
    slope, intercept = np.polyfit(log_g, log_m, 1)
    residual = float(np.max(np.abs(slope * log_g + intercept - log_m)))
    return (float(slope), float(math.exp(intercept)), residual)


@dataclass(frozen=True)
class SweepResult:
    """A metric evaluated along a decreasing g-schedule, with its power fit."""

    g_values: tuple[float, ...]
    metric_values: tuple[float, ...]
    fitted_order: float
    fitted_coefficient: float
    fit_residual: float
    floored_points: int

    def __post_init__(self):
        if len(self.g_values) != len(self.metric_values):
            raise ValueError("g_values and metric_values lengths differ")
        if len(self.g_values) < 4:
            raise ValueError("sweeps need at least 4 points")
        if any(v < 0 for v in self.metric_values):
            raise ValueError("metric values must be non-negative")
        if any(b >= a for a, b in zip(self.g_values, self.g_values[1:])):
            raise ValueError("g_values must decrease")

    @property
    def all_floor(self) -> bool:
        return math.isinf(self.fitted_order)


def sweep_metric(
    metric: Callable[[float], float], g_values: Sequence[float] | None = None
) -> SweepResult:
    """Evaluate ``metric(g)`` along a schedule and fit its leading order."""
    if g_values is None:
        g_values = default_g_decade()
    schedule = tuple(float(g) for g in g_values)
    values = tuple(float(metric(g)) for g in schedule)
    order, coefficient, residual = fit_order(schedule, values)
    floored = sum(1 for v in values if v <= METRIC_FLOOR)
    return SweepResult(schedule, values, order, coefficient, residual, floored)


def classify_order(order: float, context: str = "metric") -> str:
    """Map a fitted order onto {"first", "second", "none"}.

    Orders outside both bands raise rather than silently guessing.
    """
    if math.isinf(order):
        return "none"
    if FIRST_ORDER_BAND[0] <= order <= FIRST_ORDER_BAND[1]:
        return "first"
    if SECOND_ORDER_BAND[0] <= order <= SECOND_ORDER_BAND[1]:
        return "second"
    raise UnclassifiedOrderError(
        f"fitted order {order:.3f} for {context} falls outside the "
        f"first-order band {FIRST_ORDER_BAND} and second-order band "
        f"{SECOND_ORDER_BAND}"
    )


@dataclass(frozen=True)
class LimitPoint:
    parameter: float
    estimate: complex
    deviation: float


@dataclass(frozen=True)
class LimitComparison:
    """Weak-value trajectories along both routes to the weak limit."""

    analytic: complex
    fixed_spread: float
    fixed_coupling: float
    coupling_branch: tuple[LimitPoint, ...]  # g -> 0 at fixed spread
    spread_branch: tuple[LimitPoint, ...]  # spread -> infinity at fixed g


def compare_limits(
    sel: PrePostSelection,
    S: LinearOperator,
    spread_schedule: Sequence[float] = (2.0, 4.0, 8.0, 16.0, 32.0),
    g_schedule: Sequence[float] | None = None,
    fixed_spread: float = 2.0,
    fixed_coupling: float = 0.5,
    n_points: int = 256,
) -> LimitComparison:
    """Estimate the weak value along g -> 0 (fixed spread) and along
    spread -> infinity (fixed g), reporting each single-point readout and
    its deviation from the analytic value.

    g is a property of the interaction while the spread is a property of
    the pointer, so the two routes are distinct experiments; both must
    converge to the same analytic ratio.
    """
    spreads = tuple(float(d) for d in spread_schedule)
    if len(spreads) < 2 or any(d <= 0 for d in spreads):
        raise ScheduleError("spread schedule must contain positive values")
    if any(b <= a for a, b in zip(spreads, spreads[1:])):
        raise ScheduleError("spread schedule must increase")
    if fixed_coupling <= 0 or fixed_spread <= 0:
        raise ScheduleError("fixed coupling and spread must be positive")

    analytic = weak_value(sel, S)

    coupling_model = gaussian_pointer(fixed_spread, n_points)
    if g_schedule is None:
        gs: Sequence[float] = tuple(0.02 * fixed_spread / 2.0**i for i in range(5))
    else:
        gs = tuple(float(g) for g in g_schedule)
        if any(g <= 0 for g in gs) or any(b >= a for a, b in zip(gs, gs[1:])):
            raise ScheduleError("g schedule must be positive and decrease")

    readout = _PointerReadout(sel, S, coupling_model)
    coupling_branch = []
    for g in gs:
        r = readout.ratio(g)
        coupling_branch.append(LimitPoint(g, r, abs(r - analytic)))

    spread_branch = []
    for spread in spreads:
        model = gaussian_pointer(spread, n_points)
        r = _PointerReadout(sel, S, model).ratio(fixed_coupling)
        spread_branch.append(LimitPoint(spread, r, abs(r - analytic)))

    return LimitComparison(
        analytic,
        fixed_spread,
        fixed_coupling,
        tuple(coupling_branch),
        tuple(spread_branch),
    )


def pointer_model_for_spread(spread: float, n_points: int = 256) -> PointerModel:
    """Convenience used by sweep front ends."""
    return gaussian_pointer(spread, n_points)
