"""Reproducible verification campaigns over the whole laboratory.

A campaign is described by a strict JSON config (unknown keys are rejected so
a config is a complete, machine-checkable record of an experiment).  For each
path index the runner derives the path's noise from (master_seed, path_index),
builds the regularization ladder, and runs every enabled check; failures are
aggregated by count, never raised, so one bad path cannot hide the others.
The outcome is a :class:`VerificationReport` written as JSON plus delimited
artifacts, all stamped with the config's hash.  Report content is a pure
function of the config content: rerunning the same config reproduces the
report byte for byte except for the timestamp and runtime fields.

The campaign fails (``overall_pass`` false, nonzero CLI status) iff some
check's failure count exceeds its allowance — zero by default, a configured
fraction of the path count for statistical checks (the correction-process
check defaults to 5%).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Mapping

import numpy as np

from .excursions import (
    DEFAULT_MARGIN_STEPS,
    ExcursionSet,
    decompose_excursions,
    residual_window_threshold,
    restart_residual,
    verify_endpoint_limits,
    verify_initial_identity,
)
from .fbm import (
    GENERATOR_TAGS,
    FbmPath,
    HurstParam,
    SeedRecord,
    TimeGrid,
    estimate_holder,
    generate_fbm,
    refine_fbm,
)
from .io import FORMAT_VERSION, write_csv, write_family_csv
from .ladder import (
    DEFAULT_TOL_BOUND,
    DEFAULT_TOL_MONO,
    EpsilonFamily,
    EpsilonLadder,
    build_family,
    compensator_budget,
    compute_compensator,
    nonpositive_measure,
    verify_eps_continuity,
    verify_limit_nonnegativity,
    verify_measure_decay,
    verify_nested_zero_sets,
    verify_upper_bound,
)
from .picard import LocalProblem, fixed_point_residual, picard_solve, select_delta
from .sde import SdeSpec, solve_regularized

__all__ = [
    "CHECK_ORDER",
    "CHECK_STATEMENTS",
    "DEFAULT_ALLOWANCES",
    "DEFAULT_TOLERANCES",
    "OUTPUT_DIR_ENV",
    "CheckRecord",
    "ExperimentConfig",
    "VerificationReport",
    "config_digest",
    "config_from_dict",
    "load_config",
    "render_report_table",
    "run_campaign",
]

OUTPUT_DIR_ENV = "SINGSDE_OUTPUT_DIR"
_DEFAULT_OUTPUT_DIR = "singsde-out"

REPORT_FORMAT_VERSION = 1

# Canonical execution order; also the order records appear in reports.
CHECK_ORDER = (
    "ordering",
    "nested-zero-sets",
    "upper-bound",
    "measure-decay",
    "measure-decay-mean",
    "limit-nonneg",
    "compensator",
    "eps-continuity",
    "contraction",
    "excursion-endpoints",
    "initial-identity",
    "restart-refinement",
)

# One-sentence statement of the property each check verifies.
CHECK_STATEMENTS: dict[str, str] = {
    "ordering": (
        "Under shared noise, solutions increase at every node as the "
        "regularization level decreases, up to tol_mono."
    ),
    "nested-zero-sets": (
        "Nonpositive-node sets are exactly nested: each deeper level's set "
        "is contained in the shallower level's."
    ),
    "upper-bound": (
        "Every ladder level stays below x0 + a*T^{2H}/(H*x0) + "
        "2*sigma*sup|B| plus tol_bound."
    ),
    "measure-decay": (
        "The time measure of the nonpositive set never increases from one "
        "ladder level to the next."
    ),
    "measure-decay-mean": (
        "Averaged over the campaign, the deepest level's nonpositive "
        "measure falls strictly below level 0's whenever the latter is "
        "positive."
    ),
    "limit-nonneg": (
        "The limit estimate never drops below -(cauchy_gap + tol_nonneg)."
    ),
    "compensator": (
        "The correction process closing the integral identity stays above "
        "minus its error budget (and pins to 0 within the budget under zero "
        "noise)."
    ),
    "eps-continuity": (
        "Sup-gaps from symmetric regularization shifts shrink monotonically "
        "on both sides and fall to a quarter of the initial gap as the "
        "shift halves twice."
    ),
    "contraction": (
        "On a certified initial window the integral map contracts no slower "
        "than its certified modulus plus slack, converges within its "
        "predicted budget, and its fixed point matches the ladder limit "
        "within cauchy_gap + consistency_extra."
    ),
    "excursion-endpoints": (
        "Boundary values of the limit estimate's excursions sit within the "
        "nonnegativity budget of zero."
    ),
    "initial-identity": (
        "On the initial positive window the limit estimate satisfies the "
        "integral identity with its initial-value term, within the "
        "quadrature budget."
    ),
    "restart-refinement": (
        "On each zero-anchored excursion window with enough interior nodes, "
        "the restarted identity residual does not grow under nested twofold "
        "grid refinement."
    ),
}

# Tolerance schema: name -> (default, kind).  Kinds: nonnegative float
# ("nonneg"), strictly positive float ("pos"), positive integer ("int").
# tol_* entries accept 0 deliberately — a zero tolerance is the documented
# negative control for rounding-scale effects.
_TOLERANCE_SCHEMA: dict[str, tuple[float | int | None, str]] = {
    "tol_mono": (DEFAULT_TOL_MONO, "nonneg"),
    "tol_bound": (DEFAULT_TOL_BOUND, "nonneg"),
    "tol_nonneg": (1e-9, "nonneg"),
    "picard_tolerance": (1e-10, "pos"),
    "eps_star": (0.05, "pos"),
    "consistency_extra": (1e-3, "pos"),
    "contraction_slack": (0.05, "nonneg"),
    "margin_steps": (DEFAULT_MARGIN_STEPS, "int"),
    "min_window_nodes": (20, "int"),
    "window_steps": (256, "int"),
    "endpoint_approach_nodes": (3, "int"),
    "measure_last_max": (None, "pos"),
}

DEFAULT_TOLERANCES: dict[str, float | int] = {
    name: default for name, (default, _) in _TOLERANCE_SCHEMA.items() if default is not None
}

# Fraction of paths allowed to fail per check; unlisted checks allow none.
DEFAULT_ALLOWANCES: dict[str, float] = {"compensator": 0.05}

_CONTRACTION_MAX_RECERTIFICATIONS = 24
_CONTRACTION_INITIAL_WINDOW = 0.5
_HOLDER_EXPONENT_FRACTION = 0.5  # certificate exponent beta = H/2
_WINDOW_LADDER_EXTRA_LEVELS = 4
_WINDOW_LADDER_MAX_DEPTH = 64


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _reject_unknown(section: str, data: Mapping[str, Any], allowed: tuple[str, ...]) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {section} keys: {', '.join(unknown)}")


def _require(section: str, data: Mapping[str, Any], required: tuple[str, ...]) -> None:
    if not isinstance(data, Mapping):
        raise ValueError(f"{section} must be a mapping, got {type(data).__name__}")
    missing = sorted(set(required) - set(data))
    if missing:
        raise ValueError(f"missing {section} keys: {', '.join(missing)}")


def _as_float(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _as_int(section: str, key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{section}.{key} must be an integer, got {value!r}")
    return value


def _validated_tolerances(raw: Mapping[str, Any] | None) -> dict[str, float | int]:
    merged: dict[str, float | int] = dict(DEFAULT_TOLERANCES)
    if raw is None:
        return merged
    _reject_unknown("tolerances", raw, tuple(_TOLERANCE_SCHEMA))
    for key, value in raw.items():
        _, kind = _TOLERANCE_SCHEMA[key]
        if kind == "int":
            parsed: float | int = _as_int("tolerances", key, value)
            if parsed < 1:
                raise ValueError(f"tolerances.{key} must be a positive integer, got {parsed}")
        else:
            parsed = _as_float("tolerances", key, value)
            if not math.isfinite(parsed):
                raise ValueError(f"tolerances.{key} must be finite, got {parsed}")
            if kind == "pos" and parsed <= 0.0:
                raise ValueError(f"tolerances.{key} must be positive, got {parsed}")
            if kind == "nonneg" and parsed < 0.0:
                raise ValueError(f"tolerances.{key} must be nonnegative, got {parsed}")
        merged[key] = parsed
    return merged


def _validated_allowances(raw: Mapping[str, Any] | None) -> dict[str, float]:
    merged = dict(DEFAULT_ALLOWANCES)
    if raw is None:
        return merged
    _reject_unknown("allowances", raw, CHECK_ORDER)
    for key, value in raw.items():
        fraction = _as_float("allowances", key, value)
        if not (0.0 <= fraction <= 1.0):
            raise ValueError(f"allowances.{key} must lie in [0, 1], got {fraction}")
        merged[key] = fraction
    return merged


@dataclass
class ExperimentConfig:
    """Complete, validated description of one verification campaign.

    ``tolerances`` is the fully materialized named map (defaults merged);
    ``allowances`` maps check ids to the fraction of paths allowed to fail;
    ``checks`` is the enabled subset in canonical order.  ``zero_noise``
    switches every driver to the deterministic zero path, turning the
    campaign into a composition of closed-form oracles.
    """

    spec: SdeSpec
    grid: TimeGrid
    ladder: EpsilonLadder
    master_seed: int
    path_count: int
    tolerances: dict[str, float | int] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    allowances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_ALLOWANCES))
    output_dir: str = _DEFAULT_OUTPUT_DIR
    checks: tuple[str, ...] = CHECK_ORDER
    method: str = "circulant"
    zero_noise: bool = False
    save_families: bool = False

    def __post_init__(self) -> None:
        SeedRecord(self.master_seed, 0)  # domain check on the seed
        if not (isinstance(self.path_count, int) and self.path_count >= 1):
            raise ValueError(f"path_count must be a positive integer, got {self.path_count}")
        if self.ladder.depth < 2:
            raise ValueError(f"ladder depth must be at least 2, got {self.ladder.depth}")
        if self.method not in GENERATOR_TAGS:
            raise ValueError(f"unknown generation method {self.method!r}")
        unknown = sorted(set(self.checks) - set(CHECK_ORDER))
        if unknown:
            raise ValueError(f"unknown checks: {', '.join(unknown)}")
        if len(set(self.checks)) != len(self.checks):
            raise ValueError("checks must not repeat")
        if not self.checks:
            raise ValueError("at least one check must be enabled")
        self.checks = tuple(check for check in CHECK_ORDER if check in self.checks)
        self.tolerances = _validated_tolerances(self.tolerances)
        self.allowances = _validated_allowances(self.allowances)

    def allowed_failures(self, check: str) -> int:
        return math.floor(self.allowances.get(check, 0.0) * self.path_count)


_TOP_LEVEL_REQUIRED = ("spec", "grid", "ladder", "seeds")
_TOP_LEVEL_OPTIONAL = (
    "tolerances",
    "allowances",
    "output_dir",
    "checks",
    "method",
    "zero_noise",
    "save_families",
)


def config_from_dict(data: Mapping[str, Any]) -> ExperimentConfig:
    """Build a validated config from parsed JSON; unknown keys are errors."""

    _require("config", data, _TOP_LEVEL_REQUIRED)
    _reject_unknown("config", data, _TOP_LEVEL_REQUIRED + _TOP_LEVEL_OPTIONAL)

    spec_data = data["spec"]
    _require("spec", spec_data, ("x0", "a", "b", "sigma", "hurst"))
    _reject_unknown("spec", spec_data, ("x0", "a", "b", "sigma", "hurst"))
    spec = SdeSpec(
        x0=_as_float("spec", "x0", spec_data["x0"]),
        a=_as_float("spec", "a", spec_data["a"]),
        b=_as_float("spec", "b", spec_data["b"]),
        sigma=_as_float("spec", "sigma", spec_data["sigma"]),
        hurst=HurstParam(_as_float("spec", "hurst", spec_data["hurst"])),
    )

    grid_data = data["grid"]
    _require("grid", grid_data, ("horizon", "steps"))
    _reject_unknown("grid", grid_data, ("horizon", "steps"))
    grid = TimeGrid(
        horizon=_as_float("grid", "horizon", grid_data["horizon"]),
        step_count=_as_int("grid", "steps", grid_data["steps"]),
    )

    ladder_data = data["ladder"]
    _require("ladder", ladder_data, ("eps0", "ratio", "depth"))
    _reject_unknown("ladder", ladder_data, ("eps0", "ratio", "depth"))
    ladder = EpsilonLadder(
        eps0=_as_float("ladder", "eps0", ladder_data["eps0"]),
        ratio=_as_float("ladder", "ratio", ladder_data["ratio"]),
        depth=_as_int("ladder", "depth", ladder_data["depth"]),
    )

    seeds_data = data["seeds"]
    _require("seeds", seeds_data, ("master_seed", "path_count"))
    _reject_unknown("seeds", seeds_data, ("master_seed", "path_count"))

    checks_raw = data.get("checks")
    if checks_raw is None:
        checks = CHECK_ORDER
    else:
        if not isinstance(checks_raw, (list, tuple)) or not all(
            isinstance(item, str) for item in checks_raw
        ):
            raise ValueError("checks must be a list of check ids")
        checks = tuple(checks_raw)

    output_dir = data.get("output_dir")
    if output_dir is None:
        output_dir = os.environ.get(OUTPUT_DIR_ENV, _DEFAULT_OUTPUT_DIR)
    elif not isinstance(output_dir, str):
        raise ValueError(f"output_dir must be a string, got {output_dir!r}")

    method = data.get("method", "circulant")
    if not isinstance(method, str):
        raise ValueError(f"method must be a string, got {method!r}")
    for flag in ("zero_noise", "save_families"):
        if flag in data and not isinstance(data[flag], bool):
            raise ValueError(f"{flag} must be a boolean, got {data[flag]!r}")

    return ExperimentConfig(
        spec=spec,
        grid=grid,
        ladder=ladder,
        master_seed=_as_int("seeds", "master_seed", seeds_data["master_seed"]),
        path_count=_as_int("seeds", "path_count", seeds_data["path_count"]),
        tolerances=_validated_tolerances(data.get("tolerances")),
        allowances=_validated_allowances(data.get("allowances")),
        output_dir=output_dir,
        checks=checks,
        method=method,
        zero_noise=bool(data.get("zero_noise", False)),
        save_families=bool(data.get("save_families", False)),
    )


def load_config(path: str | os.PathLike[str]) -> ExperimentConfig:
    """Read and validate a JSON config file."""

    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    return config_from_dict(data)


def _semantic_config_dict(config: ExperimentConfig) -> dict[str, Any]:
    """The content that determines results (location and export flags excluded)."""

    return {
        "spec": {
            "x0": config.spec.x0,
            "a": config.spec.a,
            "b": config.spec.b,
            "sigma": config.spec.sigma,
            "hurst": config.spec.hurst.value,
        },
        "grid": {"horizon": config.grid.horizon, "steps": config.grid.step_count},
        "ladder": {
            "eps0": config.ladder.eps0,
            "ratio": config.ladder.ratio,
            "depth": config.ladder.depth,
        },
        "seeds": {"master_seed": config.master_seed, "path_count": config.path_count},
        "tolerances": dict(sorted(config.tolerances.items())),
        "allowances": dict(sorted(config.allowances.items())),
        "checks": list(config.checks),
        "method": config.method,
        "zero_noise": config.zero_noise,
    }


def config_digest(config: ExperimentConfig) -> str:
    """sha256 over the canonical JSON rendering of the semantic config content."""

    canonical = json.dumps(
        _semantic_config_dict(config), sort_keys=True, separators=(",", ":"), allow_nan=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# report structures
# ---------------------------------------------------------------------------


@dataclass
class CheckRecord:
    """Aggregated outcome of one check across the campaign.

    ``worst_violation`` is the largest measured excess (negative values mean
    margin); None when no numeric measurement was produced (for instance only
    vacuous windows).  Pass/fail is decided per path by the check itself and
    aggregated by count — the campaign verdict compares ``fail_count``
    against ``allowed_failures``.
    """

    check: str
    statement: str
    pass_count: int
    fail_count: int
    allowed_failures: int
    worst_violation: float | None
    tolerance: float
    runtime_s: float
    failures: tuple[str, ...]

    @property
    def within_allowance(self) -> bool:
        return self.fail_count <= self.allowed_failures

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "statement": self.statement,
            "pass_count": self.pass_count,
            "fail_count": self.fail_count,
            "allowed_failures": self.allowed_failures,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "runtime_s": self.runtime_s,
            "failures": list(self.failures),
        }


@dataclass
class VerificationReport:
    """Campaign outcome: per-check records plus the environment fingerprint."""

    version: str
    config_hash: str
    master_seed: int
    path_count: int
    generated_at: str
    checks: dict[str, CheckRecord]
    overall_pass: bool

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "package_version": self.version,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "path_count": self.path_count,
            "generated_at": self.generated_at,
            "overall_pass": self.overall_pass,
            "checks": {check: record.to_json_dict() for check, record in self.checks.items()},
        }


def _package_version() -> str:
    from . import __version__

    return __version__


class _Accumulator:
    """Serialized aggregation point for one check's per-path outcomes."""

    def __init__(self, check: str, tolerance: float) -> None:
        self.check = check
        self.tolerance = tolerance
        self.pass_count = 0
        self.fail_count = 0
        self.worst: float | None = None
        self.failures: list[str] = []
        self.runtime = 0.0

    def record(self, path_index: int, passed: bool, violation: float | None, note: str | None) -> None:
        if passed:
            self.pass_count += 1
        else:
            self.fail_count += 1
            detail = note if note is not None else "check failed"
            prefix = f"path {path_index}: " if path_index >= 0 else ""
            self.failures.append(prefix + detail)
        if violation is not None and math.isfinite(violation):
            if self.worst is None or violation > self.worst:
                self.worst = violation

    def to_record(self, config: ExperimentConfig) -> CheckRecord:
        return CheckRecord(
            check=self.check,
            statement=CHECK_STATEMENTS[self.check],
            pass_count=self.pass_count,
            fail_count=self.fail_count,
            allowed_failures=config.allowed_failures(self.check),
            worst_violation=self.worst,
            tolerance=self.tolerance,
            runtime_s=round(self.runtime, 6),
            failures=tuple(self.failures),
        )


# ---------------------------------------------------------------------------
# per-path checks
# ---------------------------------------------------------------------------


@dataclass
class _PathContext:
    """Everything one path's checks share, with lazy excursion decomposition."""

    index: int
    seed: SeedRecord
    noise: FbmPath
    family: EpsilonFamily
    threshold: float | None = None
    excursions: ExcursionSet | None = None
    restart_sup: dict[int, float] = field(default_factory=dict)

    def ensure_excursions(self) -> tuple[float, ExcursionSet]:
        if self.excursions is None:
            self.threshold = residual_window_threshold(self.family)
            self.excursions = decompose_excursions(
                self.family.limit_estimate, self.family.grid, self.threshold
            )
        assert self.threshold is not None
        return self.threshold, self.excursions


_CheckResult = tuple[bool, "float | None", "str | None"]


def _check_ordering(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    family = ctx.family
    passed = family.mono_violation_count == 0
    note = None if passed else f"{family.mono_violation_count} nodes beyond tol_mono"
    return passed, family.mono_worst_deficit, note


def _check_nested_zero_sets(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    nested, break_level = verify_nested_zero_sets(ctx.family)
    note = None if nested else f"containment breaks entering level {break_level}"
    return nested, 0.0 if nested else 1.0, note


def _check_upper_bound(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    cert = verify_upper_bound(ctx.family, tol_bound=float(config.tolerances["tol_bound"]))
    note = None if cert.passes else f"exceeds bound {cert.bound:.6g} by {cert.max_violation:.3e}"
    return cert.passes, cert.max_violation, note


def _check_measure_decay(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    last_max = config.tolerances.get("measure_last_max")
    result = verify_measure_decay(
        ctx.family, last_level_max=None if last_max is None else float(last_max)
    )
    increases = [b - a for a, b in zip(result.per_level[:-1], result.per_level[1:])]
    violation = max(increases) if increases else 0.0
    note = None
    if not result.nonincreasing:
        note = f"measure increases by {violation:.3e} between adjacent levels"
    elif result.last_below_threshold is False:
        note = f"deepest-level measure {result.last_level:.6g} exceeds measure_last_max"
    return result.passes, violation, note


def _check_limit_nonneg(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    family = ctx.family
    tol_nonneg = float(config.tolerances["tol_nonneg"])
    result = verify_limit_nonnegativity(family, family.cauchy_gap + tol_nonneg)
    violation = -result.worst_value - family.cauchy_gap
    note = None if result.passes else (
        f"limit estimate reaches {result.worst_value:.6g} at node {result.worst_index}"
    )
    return result.passes, violation, note


def _check_compensator(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    family = ctx.family
    estimate = compute_compensator(family)
    budget = compensator_budget(family, estimate)
    if config.zero_noise:
        measured = float(np.abs(estimate.values).max())
        label = "max |correction|"
    else:
        measured = float(-estimate.values.min())
        label = "negative part of correction"
    violation = measured - budget
    passed = violation <= 0.0
    note = None if passed else f"{label} {measured:.3e} exceeds budget {budget:.3e}"
    return passed, violation, note


def _check_eps_continuity(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    eps_star = float(config.tolerances["eps_star"])
    offsets = [eps_star * 0.5**k for k in range(1, 4)]
    result = verify_eps_continuity(ctx.family.spec, ctx.noise, eps_star, offsets)
    plus = [row[1] for row in result.rows]
    minus = [row[2] for row in result.rows]
    breaches = [b - a for a, b in zip(plus[:-1], plus[1:])]
    breaches += [b - a for a, b in zip(minus[:-1], minus[1:])]
    violation = max(max(breaches), result.last_gap - result.first_gap / 4.0)
    note = None
    if not result.both_nonincreasing:
        note = "a one-sided gap sequence increased"
    elif not result.passes:
        note = (
            f"final gap {result.last_gap:.3e} exceeds a quarter of the "
            f"first gap {result.first_gap:.3e}"
        )
    return result.passes, violation, note


def _window_ladder(ladder: EpsilonLadder, window_dt: float) -> EpsilonLadder:
    """Deepen the ladder until its deepest level is far below the window step."""

    crossing = math.log(window_dt / ladder.eps0) / math.log(ladder.ratio)
    depth = max(ladder.depth, math.ceil(crossing) + _WINDOW_LADDER_EXTRA_LEVELS)
    return EpsilonLadder(ladder.eps0, ladder.ratio, min(depth, _WINDOW_LADDER_MAX_DEPTH))


def _check_contraction(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    spec = config.spec
    tolerances = config.tolerances
    window_steps = int(tolerances["window_steps"])
    picard_tolerance = float(tolerances["picard_tolerance"])
    slack = float(tolerances["contraction_slack"])
    consistency_extra = float(tolerances["consistency_extra"])
    beta = _HOLDER_EXPONENT_FRACTION * spec.hurst.value
    method = "zero" if config.zero_noise else config.method

    # Certify a window that the driver's own roughness permits: sample the
    # driver on a trial window, certify, and shrink the window to the
    # certified horizon until the certificate covers the whole window.
    window = _CONTRACTION_INITIAL_WINDOW
    problem = None
    certificate = None
    window_noise = None
    for _ in range(_CONTRACTION_MAX_RECERTIFICATIONS):
        window_grid = TimeGrid(window, window_steps)
        window_noise = generate_fbm(window_grid, spec.hurst, ctx.seed, method=method, substream=2)
        driver = spec.sigma * window_noise.values
        holder = estimate_holder(driver, window_grid, beta)
        problem = LocalProblem(
            x0=spec.x0,
            a=spec.a,
            b=spec.b,
            hurst=spec.hurst,
            grid=window_grid,
            driver_values=driver,
            holder=holder,
        )
        certificate = select_delta(problem)
        if certificate.delta >= window * (1.0 - 1e-12):
            break
        window = certificate.delta
    else:
        return False, None, "window certification did not stabilize"
    assert problem is not None and certificate is not None and window_noise is not None

    result = picard_solve(problem, certificate, picard_tolerance)
    candidates: list[float] = []
    notes: list[str] = []

    ratios = [row[2] for row in result.log if math.isfinite(row[2])]
    if ratios:
        ratio_excess = max(ratios) - (certificate.modulus + slack)
        candidates.append(ratio_excess)
        if ratio_excess > 0.0:
            notes.append(
                f"measured ratio {max(ratios):.4f} exceeds modulus {certificate.modulus:.4f} + slack"
            )

    # The ladder limit is only trustworthy where the regularization level sits
    # well below the step size (the per-step kernel converges in eps at scale
    # dt); the certified window's fine spacing therefore needs a deeper ladder
    # than the main grid's before the Cauchy-gap budget is meaningful.
    window_ladder = _window_ladder(config.ladder, problem.grid.dt)
    window_family = build_family(
        spec, window_noise, window_ladder, tol_mono=float(tolerances["tol_mono"])
    )
    consistency_gap = float(np.abs(result.values - window_family.limit_estimate).max())
    consistency_excess = consistency_gap - (window_family.cauchy_gap + consistency_extra)
    candidates.append(consistency_excess)
    if consistency_excess > 0.0:
        notes.append(
            f"fixed point differs from ladder limit by {consistency_gap:.3e} "
            f"(allowed {window_family.cauchy_gap + consistency_extra:.3e})"
        )

    residual_excess = fixed_point_residual(problem, result.values) - 2.0 * picard_tolerance
    candidates.append(residual_excess)
    if residual_excess > 0.0:
        notes.append("fixed-point residual exceeds twice the iteration tolerance")

    violation = max(candidates)
    passed = violation <= 0.0
    return passed, violation, ("; ".join(notes) if notes else None)


def _check_excursion_endpoints(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    threshold, excursions = ctx.ensure_excursions()
    checks = verify_endpoint_limits(
        ctx.family.limit_estimate,
        excursions,
        tol=threshold,
        approach_nodes=int(config.tolerances["endpoint_approach_nodes"]),
    )
    failing = [check.interval_index for check in checks if not check.passes]
    note = None if not failing else f"boundary check fails on intervals {failing}"
    return not failing, float(len(failing)), note


def _check_initial_identity(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    result = verify_initial_identity(ctx.family, margin_steps=int(config.tolerances["margin_steps"]))
    violation = result.sup_residual - result.budget
    note = None if result.passes else (
        f"residual {result.sup_residual:.3e} exceeds budget {result.budget:.3e} "
        f"on nodes 0..{result.window_end_index}"
    )
    return result.passes, violation, note


def _check_restart_refinement(config: ExperimentConfig, ctx: _PathContext) -> _CheckResult:
    threshold, excursions = ctx.ensure_excursions()
    margin = int(config.tolerances["margin_steps"])
    min_nodes = int(config.tolerances["min_window_nodes"])
    # The restart identity anchors at a left endpoint where the limit process
    # vanishes; the closed-left component containing t=0 starts at X_0 > 0
    # instead and is covered by the initial-identity check.
    qualifying = [
        index
        for index, (start, end) in enumerate(excursions.intervals)
        if (end - start + 1) >= min_nodes
        and (end - 2 * margin) > start
        and not (index == 0 and excursions.first_interval_closed_left)
    ]
    if not qualifying:
        return True, None, None

    family = ctx.family
    fine_noise = refine_fbm(family.noise)
    deepest_eps = float(family.ladder.levels()[-1])
    fine_solution = solve_regularized(family.spec, deepest_eps, fine_noise)
    fine_excursions = ExcursionSet(
        intervals=tuple((2 * start, 2 * end) for start, end in excursions.intervals),
        first_interval_closed_left=excursions.first_interval_closed_left,
        last_interval_truncated_right=excursions.last_interval_truncated_right,
        threshold=excursions.threshold,
    )
    worst: float | None = None
    notes: list[str] = []
    for index in qualifying:
        coarse = restart_residual(
            family.limit_estimate, family.noise, family.spec, excursions, index, margin
        )
        ctx.restart_sup[index] = coarse.sup_residual
        fine = restart_residual(
            fine_solution.values, fine_noise, family.spec, fine_excursions, index, 2 * margin
        )
        growth = fine.sup_residual - coarse.sup_residual
        if worst is None or growth > worst:
            worst = growth
        if growth > 0.0:
            notes.append(
                f"interval {index}: residual grows {coarse.sup_residual:.3e} -> "
                f"{fine.sup_residual:.3e} under refinement"
            )
    return not notes, worst, ("; ".join(notes) if notes else None)


_PER_PATH_CHECKS: dict[str, Callable[[ExperimentConfig, _PathContext], _CheckResult]] = {
    "ordering": _check_ordering,
    "nested-zero-sets": _check_nested_zero_sets,
    "upper-bound": _check_upper_bound,
    "measure-decay": _check_measure_decay,
    "limit-nonneg": _check_limit_nonneg,
    "compensator": _check_compensator,
    "eps-continuity": _check_eps_continuity,
    "contraction": _check_contraction,
    "excursion-endpoints": _check_excursion_endpoints,
    "initial-identity": _check_initial_identity,
    "restart-refinement": _check_restart_refinement,
}


def _check_tolerance(config: ExperimentConfig, check: str) -> float:
    """The tolerance column of the report: the named knob the check compares against."""

    tolerances = config.tolerances
    named = {
        "ordering": tolerances["tol_mono"],
        "upper-bound": tolerances["tol_bound"],
        "limit-nonneg": tolerances["tol_nonneg"],
        "eps-continuity": tolerances["eps_star"],
        "contraction": tolerances["contraction_slack"],
    }
    return float(named.get(check, 0.0))


# ---------------------------------------------------------------------------
# campaign runner
# ---------------------------------------------------------------------------


def run_campaign(config: ExperimentConfig) -> VerificationReport:
    """Run every enabled check over every path and persist report + artifacts.

    Per-path work is sequential and isolated: a check that raises records a
    failure for that path and the campaign continues.  Artifacts written to
    ``config.output_dir``: ``report.json``, ``checks.csv``, a canonical
    ``config_echo.json``, ``excursions.csv`` when excursion checks ran, and
    per-path family CSVs under ``families/`` when ``save_families`` is set.
    """

    digest = config_digest(config)
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    families_dir = os.path.join(out_dir, "families")
    if config.save_families:
        os.makedirs(families_dir, exist_ok=True)

    accumulators = {
        check: _Accumulator(check, _check_tolerance(config, check)) for check in config.checks
    }
    gather_measures = "measure-decay-mean" in config.checks
    first_level_measures: list[float] = []
    last_level_measures: list[float] = []
    excursion_rows: list[dict[str, object]] = []
    method = "zero" if config.zero_noise else config.method
    per_path_checks = [check for check in config.checks if check != "measure-decay-mean"]

    for index in range(config.path_count):
        seed = SeedRecord(config.master_seed, index)
        build_started = time.perf_counter()
        try:
            noise = generate_fbm(config.grid, config.spec.hurst, seed, method=method)
            family = build_family(
                config.spec, noise, config.ladder, tol_mono=float(config.tolerances["tol_mono"])
            )
        except Exception as exc:  # noqa: BLE001 - aborts become recorded failures
            elapsed = time.perf_counter() - build_started
            note = f"family construction failed: {type(exc).__name__}: {exc}"
            for check in per_path_checks:
                accumulators[check].record(index, False, None, note)
                accumulators[check].runtime += elapsed / max(len(per_path_checks), 1)
            continue

        ctx = _PathContext(index=index, seed=seed, noise=noise, family=family)
        if gather_measures:
            first_level_measures.append(nonpositive_measure(family.solutions[0]))
            last_level_measures.append(nonpositive_measure(family.solutions[-1]))

        for check in per_path_checks:
            accumulator = accumulators[check]
            started = time.perf_counter()
            try:
                passed, violation, note = _PER_PATH_CHECKS[check](config, ctx)
            except Exception as exc:  # noqa: BLE001 - isolation policy
                passed, violation, note = False, None, f"{type(exc).__name__}: {exc}"
            accumulator.runtime += time.perf_counter() - started
            accumulator.record(index, passed, violation, note)

        if ctx.excursions is not None:
            excursion_rows.extend(_excursion_rows(ctx))
        if config.save_families:
            target = os.path.join(families_dir, f"path_{index:05d}.csv")
            write_family_csv(family, target, extra_meta={"config_hash": digest})

    if gather_measures:
        started = time.perf_counter()
        passed, violation, note = _mean_measure_verdict(first_level_measures, last_level_measures)
        accumulator = accumulators["measure-decay-mean"]
        accumulator.runtime += time.perf_counter() - started
        accumulator.record(-1, passed, violation, note)

    records = {check: accumulators[check].to_record(config) for check in config.checks}
    overall_pass = all(record.within_allowance for record in records.values())
    report = VerificationReport(
        version=_package_version(),
        config_hash=digest,
        master_seed=config.master_seed,
        path_count=config.path_count,
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        checks=records,
        overall_pass=overall_pass,
    )

    _write_report_json(report, os.path.join(out_dir, "report.json"))
    _write_checks_csv(report, os.path.join(out_dir, "checks.csv"))
    _write_config_echo(config, digest, os.path.join(out_dir, "config_echo.json"))
    if excursion_rows:
        _write_excursion_table(excursion_rows, report, os.path.join(out_dir, "excursions.csv"))
    return report


def _mean_measure_verdict(
    first_levels: list[float], last_levels: list[float]
) -> tuple[bool, float | None, str | None]:
    if not first_levels:
        return False, None, "no paths produced measures"
    mean_first = float(np.mean(first_levels))
    mean_last = float(np.mean(last_levels))
    if mean_first <= 0.0:
        return True, 0.0, "level-0 mean measure is zero; comparison vacuous"
    violation = mean_last - mean_first
    passed = violation < 0.0
    note = None if passed else (
        f"deepest-level mean {mean_last:.6g} does not fall below level-0 mean {mean_first:.6g}"
    )
    return passed, violation, note


def _excursion_rows(ctx: _PathContext) -> list[dict[str, object]]:
    assert ctx.excursions is not None and ctx.threshold is not None
    values = ctx.family.limit_estimate
    dt = ctx.family.grid.dt
    last = values.size - 1
    rows: list[dict[str, object]] = []
    for index, (start, end) in enumerate(ctx.excursions.intervals):
        rows.append(
            {
                "path_index": ctx.index,
                "interval_index": index,
                "alpha_t": start * dt,
                "beta_t": end * dt,
                "length": (end - start) * dt,
                "endpoint_value_left": float(values[start - 1]) if start > 0 else None,
                "endpoint_value_right": float(values[end + 1]) if end < last else None,
                "sup_residual": ctx.restart_sup.get(index),
                "threshold": ctx.threshold,
            }
        )
    return rows


def _write_report_json(report: VerificationReport, path: str) -> None:
    rendered = json.dumps(report.to_json_dict(), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(rendered + "\n")


def _write_checks_csv(report: VerificationReport, path: str) -> None:
    records = list(report.checks.values())
    write_csv(
        path,
        [
            ("check", [record.check for record in records]),
            ("pass_count", [record.pass_count for record in records]),
            ("fail_count", [record.fail_count for record in records]),
            ("allowed_failures", [record.allowed_failures for record in records]),
            (
                "worst_violation",
                [
                    math.nan if record.worst_violation is None else record.worst_violation
                    for record in records
                ],
            ),
            ("tolerance", [record.tolerance for record in records]),
            ("runtime_s", [record.runtime_s for record in records]),
        ],
        {
            "format_version": FORMAT_VERSION,
            "config_hash": report.config_hash,
            "package_version": report.version,
            "master_seed": report.master_seed,
            "path_count": report.path_count,
            "overall_pass": report.overall_pass,
        },
    )


def _write_config_echo(config: ExperimentConfig, digest: str, path: str) -> None:
    echo = _semantic_config_dict(config)
    echo["output_dir"] = config.output_dir
    echo["save_families"] = config.save_families
    echo["config_hash"] = digest
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(echo, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_excursion_table(
    rows: list[dict[str, object]], report: VerificationReport, path: str
) -> None:
    names = (
        "path_index",
        "interval_index",
        "alpha_t",
        "beta_t",
        "length",
        "endpoint_value_left",
        "endpoint_value_right",
        "sup_residual",
        "threshold",
    )

    def _cell(row: dict[str, object], key: str) -> object:
        value = row.get(key)
        return math.nan if value is None else value

    write_csv(
        path,
        [(name, [_cell(row, name) for row in rows]) for name in names],
        {
            "format_version": FORMAT_VERSION,
            "config_hash": report.config_hash,
            "master_seed": report.master_seed,
            "path_count": report.path_count,
        },
    )


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_report_table(report: VerificationReport | Mapping[str, Any]) -> str:
    """Human-readable table for a report (object or parsed report.json)."""

    if isinstance(report, VerificationReport):
        data = report.to_json_dict()
    else:
        data = dict(report)
    checks: Mapping[str, Mapping[str, Any]] = data.get("checks", {})
    lines = [
        f"verification report (package {data.get('package_version', '?')}, "
        f"format {data.get('format_version', '?')})",
        f"config_hash  : {data.get('config_hash', '?')}",
        f"master_seed  : {data.get('master_seed', '?')}",
        f"path_count   : {data.get('path_count', '?')}",
        f"generated_at : {data.get('generated_at', '?')}",
        f"overall      : {'PASS' if data.get('overall_pass') else 'FAIL'}",
        "",
    ]
    header = (
        f"{'check':<22} {'pass':>5} {'fail':>5} {'allowed':>7} "
        f"{'worst_violation':>16} {'tolerance':>10} {'runtime_s':>10}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for name in CHECK_ORDER:
        if name not in checks:
            continue
        record = checks[name]
        worst = record.get("worst_violation")
        worst_text = "-" if worst is None else f"{worst:.3e}"
        lines.append(
            f"{name:<22} {record.get('pass_count', 0):>5} {record.get('fail_count', 0):>5} "
            f"{record.get('allowed_failures', 0):>7} {worst_text:>16} "
            f"{record.get('tolerance', 0.0):>10.2e} {record.get('runtime_s', 0.0):>10.3f}"
        )
    lines.append("")
    lines.append("statements:")
    for name in CHECK_ORDER:
        if name not in checks:
            continue
        lines.append(f"  {name}: {checks[name].get('statement', '')}")
    failing = [
        (name, checks[name])
        for name in CHECK_ORDER
        if name in checks and checks[name].get("failures")
    ]
    if failing:
        lines.append("")
        lines.append("reported failures:")
        for name, record in failing:
            for entry in record.get("failures", []):
                lines.append(f"  {name}: {entry}")
    return "\n".join(lines)
