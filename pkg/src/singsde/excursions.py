"""Excursion structure of limit trajectories and the restart identities.

The set of grid nodes where the limit estimate exceeds a threshold decomposes
into maximal runs of consecutive nodes — the grid analogue of the countable
union of open intervals on which the limit process is strictly positive.
Inside each run, retreated a few nodes from both ends, the trajectory should
satisfy the same integral identity it satisfies globally, but restarted from
the window's left edge with no initial-value term: the correction process is
flat on positive excursions.  The residual of that identity, and its decay
under nested 2x grid refinement, are the checkable surrogates.

Thresholds: 0 for the set decomposition itself (the positive set has an exact
discrete analogue) and the family's nonnegativity budget (cauchy_gap + 1e-6)
for residual-window selection, because the residual needs the path bounded
away from 0 to control the reciprocal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbm import FbmPath, TimeGrid
from .ladder import DEFAULT_FLOOR_SCALE, EpsilonFamily
from .sde import SdeSpec

__all__ = [
    "ExcursionSet",
    "InitialIdentityResult",
    "IntervalTooShortError",
    "RestartResidual",
    "decompose_excursions",
    "residual_window_threshold",
    "restart_residual",
    "verify_endpoint_limits",
    "verify_initial_identity",
]

DEFAULT_MARGIN_STEPS = 5
NONNEG_BUDGET_EXTRA = 1e-6


class IntervalTooShortError(RuntimeError):
    """The requested interior window is empty after applying the margin."""


@dataclass(frozen=True)
class ExcursionSet:
    """Maximal runs of consecutive nodes where the values exceed the threshold.

    ``intervals`` holds inclusive (start, end) node-index pairs; the union of
    the reported runs equals exactly the set of nodes above the threshold.
    The flanking nodes start-1 / end+1 (when they exist) are at or below the
    threshold by maximality.  ``first_interval_closed_left`` marks a first
    run containing node 0 (a strictly positive start pins 0 to the first
    run); ``last_interval_truncated_right`` marks a final run cut off by the
    horizon rather than by a crossing.
    """

    intervals: tuple[tuple[int, int], ...]
    first_interval_closed_left: bool
    last_interval_truncated_right: bool
    threshold: float


def decompose_excursions(values: np.ndarray, grid: TimeGrid, threshold: float) -> ExcursionSet:
    """Run-length decomposition of {k : values[k] > threshold}."""

    if threshold < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    x = np.asarray(values, dtype=float)
    if x.shape != (grid.step_count + 1,):
        raise ValueError(f"values must have {grid.step_count + 1} entries, got shape {x.shape}")
    above = x > threshold
    intervals: list[tuple[int, int]] = []
    k = 0
    n_nodes = x.size
    while k < n_nodes:
        if above[k]:
            start = k
            while k < n_nodes and above[k]:
                k += 1
            intervals.append((start, k - 1))
        else:
            k += 1
    return ExcursionSet(
        intervals=tuple(intervals),
        first_interval_closed_left=bool(intervals and intervals[0][0] == 0),
        last_interval_truncated_right=bool(intervals and intervals[-1][1] == n_nodes - 1),
        threshold=threshold,
    )


def residual_window_threshold(family: EpsilonFamily) -> float:
    """Detection threshold for residual windows: the nonnegativity budget."""

    return family.cauchy_gap + NONNEG_BUDGET_EXTRA


@dataclass(frozen=True)
class EndpointCheck:
    """Verdict for one excursion's boundary values."""

    interval_index: int
    left_endpoint_value: float | None
    right_endpoint_value: float | None
    passes: bool


def verify_endpoint_limits(
    values: np.ndarray,
    excursions: ExcursionSet,
    tol: float,
    approach_nodes: int = 3,
) -> list[EndpointCheck]:
    """Check boundary smallness for each excursion.

    The flanking nodes just outside a run must satisfy |value| <= tol, and the
    first few interior nodes adjacent to each boundary must stay below tol
    plus the oscillation accumulated from the boundary (the path approaches 0
    at excursion boundaries, but not necessarily monotonically, so only
    smallness up to local oscillation is asserted).  Boundaries created by the
    grid edge rather than a crossing are skipped.
    """

    x = np.asarray(values, dtype=float)
    checks: list[EndpointCheck] = []
    last = x.size - 1
    for index, (start, end) in enumerate(excursions.intervals):
        left_value = float(x[start - 1]) if start > 0 else None
        right_value = float(x[end + 1]) if end < last else None
        ok = True
        for boundary, direction in ((start - 1, +1), (end + 1, -1)):
            if boundary < 0 or boundary > last:
                continue
            if abs(x[boundary]) > tol:
                ok = False
                continue
            oscillation = 0.0
            for step in range(1, approach_nodes + 1):
                node = boundary + direction * step
                if node < start or node > end:
                    break
                oscillation += abs(float(x[node] - x[node - direction]))
                if x[node] > tol + oscillation:
                    ok = False
                    break
        checks.append(
            EndpointCheck(
                interval_index=index,
                left_endpoint_value=left_value,
                right_endpoint_value=right_value,
                passes=ok,
            )
        )
    return checks


@dataclass(frozen=True)
class RestartResidual:
    """Residual profile of the restarted integral identity on one window.

    The profile is anchored at the window's left edge (margin nodes inside
    the excursion), where it is exactly 0.
    """

    interval_index: int
    margin_steps: int
    anchor_index: int
    window_end_index: int
    profile: np.ndarray
    sup_residual: float


def _identity_residual(
    values: np.ndarray,
    noise_values: np.ndarray,
    spec: SdeSpec,
    grid: TimeGrid,
    start: int,
    end: int,
    floor: float,
    include_initial_value: bool,
) -> np.ndarray:
    """Residual of the integral identity on nodes start..end, anchored at start.

    R(t) = X(t) - X(anchor) - a * singular integral + b * trapezoid of X
           - sigma * (B(t) - B(anchor)); when the anchor is the time origin
    the X(anchor) term is the initial value itself.
    """

    x = values[start : end + 1]
    noise = noise_values[start : end + 1]
    kernel = kernel_column_window(grid, start, end, spec.hurst)
    singular = np.concatenate([[0.0], np.cumsum(kernel / np.maximum(x[:-1], floor))])
    dt = grid.dt
    trapezoid = np.concatenate([[0.0], np.cumsum(0.5 * (x[1:] + x[:-1]) * dt)])
    anchor_value = spec.x0 if include_initial_value else x[0]
    return x - anchor_value - spec.a * singular + spec.b * trapezoid - spec.sigma * (noise - noise[0])


def kernel_column_window(grid: TimeGrid, start: int, end: int, hurst) -> np.ndarray:
    """Exact unregularized kernel integrals over the window's steps."""

    two_h = 2.0 * hurst.value
    nodes = grid.nodes()[start : end + 1]
    return np.diff(nodes**two_h) / two_h


def restart_residual(
    values: np.ndarray,
    noise: FbmPath,
    spec: SdeSpec,
    excursions: ExcursionSet,
    interval_index: int,
    margin_steps: int = DEFAULT_MARGIN_STEPS,
    floor: float | None = None,
) -> RestartResidual:
    """Evaluate the restarted identity inside one excursion.

    The window retreats ``margin_steps`` nodes from both ends of the run
    (the identity is an interior statement; boundary nodes sit at the
    reciprocal's edge of validity).  An empty window raises
    :class:`IntervalTooShortError`.
    """

    if margin_steps < 1:
        raise ValueError(f"margin_steps must be positive, got {margin_steps}")
    if floor is None:
        floor = DEFAULT_FLOOR_SCALE * spec.x0
    x = np.asarray(values, dtype=float)
    start, end = excursions.intervals[interval_index]
    window_start = start + margin_steps
    window_end = end - margin_steps
    if window_end <= window_start:
        raise IntervalTooShortError(
            f"interval {interval_index} spans nodes {start}..{end}; no interior window "
            f"remains after a {margin_steps}-step margin"
        )
    profile = _identity_residual(
        x, noise.values, spec, noise.grid, window_start, window_end, floor, include_initial_value=False
    )
    return RestartResidual(
        interval_index=interval_index,
        margin_steps=margin_steps,
        anchor_index=window_start,
        window_end_index=window_end,
        profile=profile,
        sup_residual=float(np.abs(profile).max()),
    )


@dataclass(frozen=True)
class InitialIdentityResult:
    """Identity residual on the initial positive window against its budget.

    budget = a * (frozen-reciprocal quadrature bound) + 2 * cauchy_gap: the
    quadrature term bounds the left-frozen singular integral against its
    exact counterpart by the reciprocal's total variation per step, and two
    Cauchy gaps cover the limit estimate's distance to the true limit on both
    sides of the identity.
    """

    sup_residual: float
    budget: float
    quadrature_budget: float
    window_end_index: int
    passes: bool


def verify_initial_identity(
    family: EpsilonFamily,
    margin_steps: int = DEFAULT_MARGIN_STEPS,
    floor: float | None = None,
) -> InitialIdentityResult:
    """Check the identity with the initial-value term on [0, first crossing).

    The window runs from the origin to ``margin_steps`` nodes before the
    first node at or below the residual threshold (the whole grid when no
    such node exists).
    """

    spec = family.spec
    if floor is None:
        floor = DEFAULT_FLOOR_SCALE * spec.x0
    x = family.limit_estimate
    threshold = residual_window_threshold(family)
    below = np.flatnonzero(x[1:] <= threshold)
    first_crossing = int(below[0] + 1) if below.size else family.grid.step_count
    window_end = max(first_crossing - margin_steps, 1)
    profile = _identity_residual(
        x, family.noise.values, spec, family.grid, 0, window_end, floor, include_initial_value=True
    )
    sup_residual = float(np.abs(profile).max())
    kernel = kernel_column_window(family.grid, 0, window_end, spec.hurst)
    reciprocal = 1.0 / np.maximum(x[: window_end + 1], floor)
    quadrature = float(np.sum(np.abs(np.diff(reciprocal)) * kernel))
    budget = spec.a * quadrature + 2.0 * family.cauchy_gap
    return InitialIdentityResult(
        sup_residual=sup_residual,
        budget=budget,
        quadrature_budget=quadrature,
        window_end_index=window_end,
        passes=sup_residual <= budget,
    )
