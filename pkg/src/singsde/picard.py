"""Certified local solution by contraction iteration.

On a short enough horizon delta, the integral map

    (T x)(t) = x_0 + a * integral of s^{2H-1} / x(s)
             - b * integral of x(s) + g(t)

is a contraction on the band of continuous paths with values in
[x_0/2, 2 x_0], with modulus ``q = 2 a delta^{2H} / (H x_0^2) + b delta``.
The horizon is certified by two envelope inequalities evaluated on a dense
check grid: with ``C`` the driver's grid Hoelder constant at exponent beta,

    f(t) = a t^{2H} / (H x_0)    - b x_0 t / 2 + C t^beta   must stay <= x_0,
    h(t) = a t^{2H} / (2 H x_0)  - b x_0 t     - C t^beta   must stay >= -x_0/2,

which pin every iterate inside the band.  The selector walks the dyadic
candidates 2^-1, 2^-2, ... and returns the largest horizon satisfying q < 1
and both envelopes with a 5% safety margin; the iteration then runs with the
singular integral discretized exactly per step (frozen left state) and stops
when successive sup-distances reach the tolerance, with an iteration cap
predicted from the certified modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fbm import HolderEstimate, HurstParam, TimeGrid
from .sde import kernel_column

__all__ = [
    "DeltaCertificate",
    "InfeasibleProblemError",
    "LocalProblem",
    "PicardBandError",
    "PicardConvergenceError",
    "PicardResult",
    "contraction_modulus",
    "envelope_lower",
    "envelope_upper",
    "fixed_point_residual",
    "picard_solve",
    "select_delta",
]

_DELTA_CANDIDATE_FLOOR_POWER = 40
_SAFETY_MARGIN = 0.05
_EXTRA_ITERATIONS = 10


class InfeasibleProblemError(RuntimeError):
    """No dyadic horizon down to 2^-40 satisfies the certificate inequalities."""


class PicardBandError(RuntimeError):
    """An iterate escaped [x_0/2, 2 x_0]; the certificate failed numerically."""


class PicardConvergenceError(RuntimeError):
    """The iteration missed the tolerance within its predicted budget."""


@dataclass
class LocalProblem:
    """Local problem data: coefficients, driver path, and its Hoelder certificate.

    The driver g lives on a grid with horizon at most 1 (the certification
    constants are normalized to a unit driver window) and must start at 0;
    the certificate's exponent must sit strictly below the roughness index.
    The driver is stored as raw values so that noise-times-coefficient
    drivers compose without pretending to be unit-coefficient samples.
    """

    x0: float
    a: float
    b: float
    hurst: HurstParam
    grid: TimeGrid
    driver_values: np.ndarray
    holder: HolderEstimate

    def __post_init__(self) -> None:
        if not (self.x0 > 0.0 and math.isfinite(self.x0)):
            raise ValueError(f"x0 must be positive, got {self.x0}")
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive, got {self.a}")
        if not (self.b >= 0.0 and math.isfinite(self.b)):
            raise ValueError(f"b must be nonnegative, got {self.b}")
        self.driver_values = np.asarray(self.driver_values, dtype=float)
        if self.driver_values.shape != (self.grid.step_count + 1,):
            raise ValueError(
                f"driver must have {self.grid.step_count + 1} entries, "
                f"got shape {self.driver_values.shape}"
            )
        if self.driver_values[0] != 0.0:
            raise ValueError("driver must start at 0")
        if self.grid.horizon > 1.0 + 1e-12:
            raise ValueError(
                f"driver window must lie inside [0, 1], got horizon {self.grid.horizon}"
            )
        if not (0.0 < self.holder.exponent < self.hurst.value):
            raise ValueError(
                f"certificate exponent must lie in (0, {self.hurst.value}), got {self.holder.exponent}"
            )
        if self.holder.constant < 0.0:
            raise ValueError(f"certificate constant must be nonnegative, got {self.holder.constant}")


def contraction_modulus(delta: float, problem: LocalProblem) -> float:
    """q(delta) = 2 a delta^{2H} / (H x_0^2) + b delta."""

    two_h = 2.0 * problem.hurst.value
    return 2.0 * problem.a * delta**two_h / (problem.hurst.value * problem.x0**2) + problem.b * delta


def envelope_upper(t: np.ndarray | float, problem: LocalProblem) -> np.ndarray | float:
    """Upper displacement envelope f(t); x_0 + f bounds every iterate from above."""

    two_h = 2.0 * problem.hurst.value
    hv, x0, c = problem.hurst.value, problem.x0, problem.holder.constant
    return (
        problem.a * t**two_h / (hv * x0)
        - 0.5 * problem.b * x0 * t
        + c * t**problem.holder.exponent
    )


def envelope_lower(t: np.ndarray | float, problem: LocalProblem) -> np.ndarray | float:
    """Lower displacement envelope h(t); x_0 + h bounds every iterate from below."""

    two_h = 2.0 * problem.hurst.value
    hv, x0, c = problem.hurst.value, problem.x0, problem.holder.constant
    return (
        0.5 * problem.a * t**two_h / (hv * x0)
        - problem.b * x0 * t
        - c * t**problem.holder.exponent
    )


@dataclass(frozen=True)
class DeltaCertificate:
    """A certified horizon with its contraction modulus and raw envelope slack.

    ``margin_low``  = min over the check grid of (x_0 + h(t)) - x_0/2,
    ``margin_high`` = 2 x_0 - max over the check grid of (x_0 + f(t));
    both are nonnegative for an accepted horizon.
    """

    delta: float
    modulus: float
    margin_low: float
    margin_high: float


def select_delta(problem: LocalProblem, check_nodes: int = 256) -> DeltaCertificate:
    """Largest dyadic horizon passing modulus and envelopes with a 5% margin.

    Every inequality is tightened by 5%: q <= 0.95, f(t) <= 0.95 x_0, and
    h(t) >= -0.95 x_0/2, evaluated at ``check_nodes`` nodes of [0, delta].
    A deterministic, reproducible choice — any smaller certified horizon
    would do as well.
    """

    if check_nodes < 100:
        raise ValueError(f"need at least 100 check nodes, got {check_nodes}")
    x0 = problem.x0
    for power in range(1, _DELTA_CANDIDATE_FLOOR_POWER + 1):
        delta = 2.0**-power
        q = contraction_modulus(delta, problem)
        if q > (1.0 - _SAFETY_MARGIN):
            continue
        t = np.linspace(0.0, delta, check_nodes + 1)[1:]
        f_vals = envelope_upper(t, problem)
        h_vals = envelope_lower(t, problem)
        if f_vals.max() > (1.0 - _SAFETY_MARGIN) * x0:
            continue
        if h_vals.min() < -(1.0 - _SAFETY_MARGIN) * 0.5 * x0:
            continue
        return DeltaCertificate(
            delta=delta,
            modulus=q,
            margin_low=float((x0 + h_vals).min() - 0.5 * x0),
            margin_high=float(2.0 * x0 - (x0 + f_vals).max()),
        )
    raise InfeasibleProblemError(
        f"no dyadic horizon down to 2^-{_DELTA_CANDIDATE_FLOOR_POWER} satisfies the "
        f"certificate (driver constant {problem.holder.constant:.3g} too large?)"
    )


@dataclass
class PicardResult:
    """Converged fixed point with its iteration log.

    ``log`` rows are (iteration, sup_distance, contraction_ratio); the ratio
    of the first row is NaN (no previous distance to compare).
    """

    grid: TimeGrid
    values: np.ndarray
    log: list[tuple[int, float, float]]
    iterations: int
    final_distance: float
    iteration_cap: int


def _apply_map(
    problem: LocalProblem,
    kernel: np.ndarray,
    dt: float,
    driver_values: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    singular = np.concatenate([[0.0], np.cumsum(kernel / x[:-1])])
    linear = np.concatenate([[0.0], np.cumsum(x[:-1] * dt)])
    return problem.x0 + problem.a * singular - problem.b * linear + driver_values


def picard_solve(
    problem: LocalProblem,
    certificate: DeltaCertificate,
    tolerance: float,
    start: np.ndarray | None = None,
) -> PicardResult:
    """Iterate the integral map to its fixed point on the certified window.

    The grid is the driver's grid, whose horizon must not exceed the
    certified delta.  The singular integral uses exact per-step kernels with
    the state frozen at the left endpoint; the linear term uses left-endpoint
    rectangles (mirroring the ladder integrator, so the two limits are
    directly comparable).  Every iterate must remain in [x_0/2, 2 x_0] and
    the iteration must converge within ceil(log(tol / d_1) / log q) + 10
    steps, d_1 being the first displacement.
    """

    if not (tolerance > 0.0):
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    grid = problem.grid
    if grid.horizon > certificate.delta * (1.0 + 1e-12):
        raise ValueError(
            f"driver horizon {grid.horizon} exceeds certified delta {certificate.delta}"
        )
    dt = grid.dt
    kernel = kernel_column(grid, 0.0, problem.hurst)
    driver_values = problem.driver_values
    x0 = problem.x0
    band_lo, band_hi = 0.5 * x0, 2.0 * x0
    x = np.full(grid.step_count + 1, x0) if start is None else np.asarray(start, dtype=float).copy()
    if x.shape != driver_values.shape:
        raise ValueError("start iterate must live on the driver grid")
    if x.min() < band_lo or x.max() > band_hi:
        raise PicardBandError("start iterate lies outside [x_0/2, 2 x_0]")
    log: list[tuple[int, float, float]] = []
    cap = _EXTRA_ITERATIONS
    previous_distance = math.nan
    iteration = 0
    while True:
        iteration += 1
        new_x = _apply_map(problem, kernel, dt, driver_values, x)
        distance = float(np.abs(new_x - x).max())
        ratio = distance / previous_distance if previous_distance and not math.isnan(previous_distance) else math.nan
        log.append((iteration, distance, ratio))
        if new_x.min() < band_lo - 1e-12 or new_x.max() > band_hi + 1e-12:
            raise PicardBandError(
                f"iterate {iteration} escaped [{band_lo}, {band_hi}] "
                f"(min {new_x.min():.6g}, max {new_x.max():.6g})"
            )
        x = new_x
        if iteration == 1:
            if distance <= tolerance:
                break
            cap = (
                math.ceil(math.log(tolerance / distance) / math.log(certificate.modulus))
                + _EXTRA_ITERATIONS
            )
        elif distance <= tolerance:
            break
        elif iteration > cap:
            raise PicardConvergenceError(
                f"no convergence to {tolerance:g} within {cap} iterations "
                f"(last displacement {distance:.3e})"
            )
        previous_distance = distance
    return PicardResult(
        grid=grid,
        values=x,
        log=log,
        iterations=iteration,
        final_distance=float(log[-1][1]),
        iteration_cap=cap,
    )


def fixed_point_residual(problem: LocalProblem, values: np.ndarray) -> float:
    """Sup-distance between the path and its image under the integral map."""

    grid = problem.grid
    kernel = kernel_column(grid, 0.0, problem.hurst)
    image = _apply_map(problem, kernel, grid.dt, problem.driver_values, np.asarray(values, dtype=float))
    return float(np.abs(image - values).max())
