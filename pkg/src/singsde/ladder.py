"""Vanishing-regularization ladders and the pathwise limit verifications.

A ladder solves the regularized equation at a geometrically decreasing
sequence of regularization levels, all driven by one shared noise path.
Shared noise couples the levels pathwise: a smaller level has strictly larger
drift everywhere, so the solutions increase monotonically as the level
shrinks.  The limit is estimated by the deepest level, and the sup-distance
between the two deepest levels (the Cauchy gap) serves as the limit
estimate's error budget throughout — the convergence is monotone with no
proven rate, so reporting the remaining gap is the honest extrapolation.

Verification operations check, per path: the ordering itself, a uniform upper
bound ``X_0 + a T^{2H}/(H X_0) + 2 sigma sup|B|``, decay of the
nonpositive-time measure along the ladder, nonnegativity of the limit
estimate, nonnegativity (up to budget) of the correction process closing the
integral identity, and continuity of the solution in the regularization
parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fbm import FbmPath, TimeGrid
from .sde import RegularizedPath, SdeSpec, kernel_column, solve_regularized

__all__ = [
    "BoundCertificate",
    "CompensatorEstimate",
    "EpsContinuityResult",
    "EpsilonFamily",
    "EpsilonLadder",
    "MeasureDecayResult",
    "NonnegativityResult",
    "build_family",
    "compensator_budget",
    "compute_compensator",
    "nonpositive_measure",
    "singular_integral",
    "verify_eps_continuity",
    "verify_limit_nonnegativity",
    "verify_measure_decay",
    "verify_nested_zero_sets",
    "verify_upper_bound",
]

DEFAULT_TOL_MONO = 1e-12
DEFAULT_TOL_BOUND = 1e-9
DEFAULT_FLOOR_SCALE = 1e-6


@dataclass(frozen=True)
class EpsilonLadder:
    """Geometric levels eps_j = eps0 * ratio^j for j = 0..depth."""

    eps0: float
    ratio: float
    depth: int

    def __post_init__(self) -> None:
        if not (self.eps0 > 0.0 and math.isfinite(self.eps0)):
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        if not (0.0 < self.ratio < 1.0):
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if not (isinstance(self.depth, int) and self.depth >= 1):
            raise ValueError(f"depth must be a positive integer, got {self.depth}")

    def levels(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.depth + 1, dtype=float)


@dataclass
class EpsilonFamily:
    """All ladder levels on one grid under one noise path, plus the limit estimate.

    ``limit_estimate`` is a copy of the deepest level's values;
    ``cauchy_gap`` is the sup-distance between the two deepest levels.
    ``mono_violation_count`` / ``mono_worst_deficit`` record how often and how
    badly the shared-noise ordering failed beyond the rounding tolerance
    (zero in correct operation: ordering is exact in the continuum, so only
    rounding can break it when both levels share noise and stepping).
    """

    spec: SdeSpec
    noise: FbmPath
    ladder: EpsilonLadder
    solutions: list[RegularizedPath]
    limit_estimate: np.ndarray
    cauchy_gap: float
    mono_violation_count: int
    mono_worst_deficit: float
    tol_mono: float

    @property
    def noise_ref(self) -> str:
        return self.noise.ref

    @property
    def grid(self) -> TimeGrid:
        return self.noise.grid


def build_family(
    spec: SdeSpec,
    noise: FbmPath,
    ladder: EpsilonLadder,
    tol_mono: float = DEFAULT_TOL_MONO,
) -> EpsilonFamily:
    """Solve every ladder level on the shared noise and record the diagnostics."""

    if ladder.depth < 2:
        raise ValueError(f"ladder depth must be at least 2, got {ladder.depth}")
    solutions = [solve_regularized(spec, float(eps), noise) for eps in ladder.levels()]
    violations = 0
    worst = 0.0
    for shallow, deep in zip(solutions[:-1], solutions[1:]):
        deficit = shallow.values[1:] - deep.values[1:]
        mask = deficit > tol_mono
        violations += int(mask.sum())
        if mask.any():
            worst = max(worst, float(deficit[mask].max()))
    gap = float(np.abs(solutions[-1].values - solutions[-2].values).max())
    return EpsilonFamily(
        spec=spec,
        noise=noise,
        ladder=ladder,
        solutions=solutions,
        limit_estimate=solutions[-1].values.copy(),
        cauchy_gap=gap,
        mono_violation_count=violations,
        mono_worst_deficit=worst,
        tol_mono=tol_mono,
    )


@dataclass(frozen=True)
class BoundCertificate:
    """Uniform bound C + 2 sigma sup|B| scanned over every level and node."""

    constant: float
    noise_sup: float
    bound: float
    max_violation: float
    tolerance: float

    @property
    def passes(self) -> bool:
        return self.max_violation <= self.tolerance


def verify_upper_bound(family: EpsilonFamily, tol_bound: float = DEFAULT_TOL_BOUND) -> BoundCertificate:
    """Certify X^eps_t <= X_0 + a T^{2H}/(H X_0) + 2 sigma max|B| across the family."""

    spec = family.spec
    grid = family.grid
    two_h = 2.0 * spec.hurst.value
    constant = spec.x0 + spec.a * grid.horizon**two_h / (spec.hurst.value * spec.x0)
    noise_sup = float(np.abs(family.noise.values).max())
    bound = constant + 2.0 * spec.sigma * noise_sup
    max_violation = max(float(sol.values.max()) for sol in family.solutions) - bound
    return BoundCertificate(
        constant=constant,
        noise_sup=noise_sup,
        bound=bound,
        max_violation=max_violation,
        tolerance=tol_bound,
    )


def nonpositive_measure(path: RegularizedPath) -> float:
    """Grid surrogate of the time measure spent at or below 0: dt * #{k >= 1 : X_k <= 0}."""

    return path.grid.dt * int(np.count_nonzero(path.values[1:] <= 0.0))


def _nonpositive_nodes(values: np.ndarray) -> np.ndarray:
    return np.flatnonzero(values[1:] <= 0.0) + 1


@dataclass(frozen=True)
class MeasureDecayResult:
    """Per-level nonpositive-time measures and their monotonicity verdict."""

    per_level: list[float]
    nonincreasing: bool
    last_level: float
    last_below_threshold: bool | None
    passes: bool


def verify_measure_decay(
    family: EpsilonFamily, last_level_max: float | None = None
) -> MeasureDecayResult:
    """Check the nonpositive-time measure is nonincreasing along the ladder.

    The ordering nests the nonpositive sets level by level, which forces the
    measures to be nonincreasing; the optional threshold additionally demands
    the deepest level's measure be small in absolute terms.
    """

    per_level = [nonpositive_measure(sol) for sol in family.solutions]
    nonincreasing = all(b <= a for a, b in zip(per_level[:-1], per_level[1:]))
    last = per_level[-1]
    below = None if last_level_max is None else (last <= last_level_max)
    passes = nonincreasing and (below is not False)
    return MeasureDecayResult(
        per_level=per_level,
        nonincreasing=nonincreasing,
        last_level=last,
        last_below_threshold=below,
        passes=passes,
    )


def verify_nested_zero_sets(family: EpsilonFamily) -> tuple[bool, int]:
    """Exact set containment of nonpositive nodes, deep level inside shallow.

    Returns (all_nested, first_level_index_that_breaks or -1).  Implied by the
    ordering with zero tolerance; tested independently so a rounding-scale
    ordering slip that flips a set membership is caught and localized.
    """

    sets = [set(_nonpositive_nodes(sol.values).tolist()) for sol in family.solutions]
    for j in range(len(sets) - 1):
        if not sets[j + 1].issubset(sets[j]):
            return False, j + 1
    return True, -1


@dataclass(frozen=True)
class NonnegativityResult:
    """Minimum of the limit estimate against its negativity tolerance."""

    worst_value: float
    worst_index: int
    tolerance: float
    passes: bool


def verify_limit_nonnegativity(family: EpsilonFamily, tol: float) -> NonnegativityResult:
    """Pass iff min_k limit_estimate[k] >= -tol.

    The natural tolerance is ``cauchy_gap + small``: the true limit dominates
    the deepest level from above by at most the remaining monotone gap.
    """

    worst_index = int(np.argmin(family.limit_estimate))
    worst_value = float(family.limit_estimate[worst_index])
    return NonnegativityResult(
        worst_value=worst_value,
        worst_index=worst_index,
        tolerance=tol,
        passes=worst_value >= -tol,
    )


def singular_integral(
    values: np.ndarray,
    grid: TimeGrid,
    hurst,
    floor: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Running integral of s^{2H-1} / X(s) with exact kernel and frozen 1/X.

    Each step contributes K(t_k, t_{k+1}, 0) / max(X_k, floor); the floor
    keeps the estimate finite where X dips below it, and those left-endpoint
    indices are returned as the flagged set.
    """

    if not (floor > 0.0):
        raise ValueError(f"floor must be positive, got {floor}")
    x = np.asarray(values, dtype=float)
    if x.shape != (grid.step_count + 1,):
        raise ValueError(f"values must have {grid.step_count + 1} entries, got shape {x.shape}")
    kernel = kernel_column(grid, 0.0, hurst)
    increments = kernel / np.maximum(x[:-1], floor)
    running = np.concatenate([[0.0], np.cumsum(increments)])
    flagged = np.flatnonzero(x[:-1] < floor)
    return running, flagged


@dataclass
class CompensatorEstimate:
    """Reconstruction of the correction process closing the integral identity.

    L(t) = X(t) - X_0 - a * (singular integral) + b * (trapezoid of X)
           - sigma * B(t), evaluated on the limit estimate.  L(0) = 0 exactly;
    in the continuum the correction is nonnegative, and the discrete estimate
    should stay above minus its error budget (see :func:`compensator_budget`).
    """

    values: np.ndarray
    floor: float
    flagged_nodes: np.ndarray


def compute_compensator(family: EpsilonFamily, floor: float | None = None) -> CompensatorEstimate:
    """Evaluate the correction-process estimate on the family's limit estimate."""

    spec = family.spec
    grid = family.grid
    if floor is None:
        floor = DEFAULT_FLOOR_SCALE * spec.x0
    x = family.limit_estimate
    running, flagged = singular_integral(x, grid, spec.hurst, floor)
    dt = grid.dt
    trapezoid = np.concatenate([[0.0], np.cumsum(0.5 * (x[1:] + x[:-1]) * dt)])
    values = (
        x - spec.x0 - spec.a * running + spec.b * trapezoid - spec.sigma * family.noise.values
    )
    return CompensatorEstimate(values=values, floor=floor, flagged_nodes=flagged)


def compensator_budget(
    family: EpsilonFamily,
    estimate: CompensatorEstimate,
    extra: float = 1e-6,
) -> float:
    """Negativity allowance: 2 * cauchy_gap + a * |flagged| * dt / floor + extra.

    Two Cauchy gaps cover the monotone tail between the deepest level and the
    true limit on both sides of the identity; the flagged-mass term covers the
    floored reciprocal on nodes where the limit estimate sits below the floor.
    """

    spec = family.spec
    truncation = spec.a * len(estimate.flagged_nodes) * family.grid.dt / estimate.floor
    return 2.0 * family.cauchy_gap + truncation + extra


@dataclass(frozen=True)
class EpsContinuityResult:
    """Sup-gap table for symmetric perturbations of the regularization level.

    ``rows`` holds (h, gap_plus, gap_minus) per offset.  The verdict demands
    both one-sided gap sequences be nonincreasing and the final two-sided gap
    (the max of the two sides) be at most a quarter of the first — an
    artifact convention standing in for continuity without a proven rate.
    """

    eps_star: float
    rows: list[tuple[float, float, float]]
    both_nonincreasing: bool
    first_gap: float
    last_gap: float
    passes: bool


def verify_eps_continuity(
    spec: SdeSpec,
    noise: FbmPath,
    eps_star: float,
    h_sequence: list[float] | np.ndarray,
) -> EpsContinuityResult:
    """Solve at eps* and at eps* +/- h under shared noise and tabulate sup-gaps."""

    if not (eps_star > 0.0):
        raise ValueError(f"eps_star must be positive, got {eps_star}")
    hs = [float(h) for h in h_sequence]
    if len(hs) < 2:
        raise ValueError("need at least 2 offsets to compare first and last gaps")
    if any(h <= 0.0 for h in hs):
        raise ValueError("offsets must be positive")
    if any(b >= a for a, b in zip(hs[:-1], hs[1:])):
        raise ValueError("offsets must be strictly decreasing")
    if hs[0] >= eps_star:
        raise ValueError("offsets must stay below eps_star so eps* - h remains positive")
    center = solve_regularized(spec, eps_star, noise).values
    rows: list[tuple[float, float, float]] = []
    for h in hs:
        above = solve_regularized(spec, eps_star + h, noise).values
        below = solve_regularized(spec, eps_star - h, noise).values
        rows.append(
            (
                h,
                float(np.abs(above - center).max()),
                float(np.abs(below - center).max()),
            )
        )
    plus = [row[1] for row in rows]
    minus = [row[2] for row in rows]
    both_nonincreasing = all(b <= a for a, b in zip(plus[:-1], plus[1:])) and all(
        b <= a for a, b in zip(minus[:-1], minus[1:])
    )
    first_gap = max(plus[0], minus[0])
    last_gap = max(plus[-1], minus[-1])
    passes = both_nonincreasing and last_gap <= first_gap / 4.0
    return EpsContinuityResult(
        eps_star=eps_star,
        rows=rows,
        both_nonincreasing=both_nonincreasing,
        first_gap=first_gap,
        last_gap=last_gap,
        passes=passes,
    )
