"""Exact sampling of fractional Brownian motion on uniform grids.

Fractional Brownian motion (fBm) with Hurst parameter H is the centered
Gaussian process with covariance ``R(s,t) = (t^{2H} + s^{2H} - |t-s|^{2H})/2``.
Its increments over a uniform grid form fractional Gaussian noise (fGn), a
stationary sequence whose unit-variance autocovariance at lag k is
``gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})/2``; for H < 1/2 every
nonzero lag is negative (antipersistence).

Three exact generators are provided:

``circulant``
    Embeds the stationary fGn covariance into a circulant matrix diagonalized
    by the FFT; O(n log n).  The default.  The embedding eigenvalues are
    computed once per (n, H) and cached; a genuinely negative eigenvalue
    (below -1e-10) aborts because for fGn the embedding is known to be
    nonnegative definite, so a violation indicates a bug.
``hosking``
    Recursive conditional sampling (Durbin-Levinson); O(n^2).
``cholesky``
    Dense Cholesky factor of the increment covariance; O(n^3), limited to
    n <= 4096 by policy.
``zero``
    A deterministic path of zeros, used as the driver of zero-noise
    experiments; consumes no randomness.

Randomness contract: every path's Gaussian stream derives deterministically
from ``(master_seed, path_index)`` through a counter-based generator, so
parallel generation order cannot change results.  Substream 1 of the same
counter block is reserved for nested grid refinement (``refine_fbm``) and
substream 2 for auxiliary window drivers.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "GENERATOR_TAGS",
    "FbmGenerationError",
    "FbmPath",
    "HolderEstimate",
    "HurstParam",
    "SeedRecord",
    "TimeGrid",
    "covariance_formula",
    "estimate_holder",
    "fbm_covariance",
    "fgn_autocovariance",
    "generate_fbm",
    "path_stream",
    "refine_fbm",
    "zero_path",
]

GENERATOR_TAGS = ("cholesky", "hosking", "circulant", "zero")

_CHOLESKY_MAX_STEPS = 4096
_EMBEDDING_EIG_FLOOR = -1e-10


class FbmGenerationError(RuntimeError):
    """A generator could not produce a valid Gaussian sample."""


@dataclass(frozen=True)
class HurstParam:
    """Roughness index of the driving noise, restricted to (0, 1/2).

    Pure covariance formulas tolerate any exponent in (0, 1); the solver-side
    restriction to H < 1/2 is enforced here because every downstream object
    carries a HurstParam.  Use :func:`covariance_formula` for out-of-range
    formula sanity checks.
    """

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value < 0.5):
            raise ValueError(f"Hurst parameter must lie in (0, 1/2), got {self.value}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k * horizon / step_count for k = 0..step_count."""

    horizon: float
    step_count: int

    def __post_init__(self) -> None:
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be a positive finite real, got {self.horizon}")
        if not (isinstance(self.step_count, int) and self.step_count >= 1):
            raise ValueError(f"step_count must be a positive integer, got {self.step_count}")

    @property
    def dt(self) -> float:
        return self.horizon / self.step_count

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.step_count + 1)


@dataclass(frozen=True)
class SeedRecord:
    """Provenance of one path: a 64-bit master seed plus a path index."""

    master_seed: int
    path_index: int

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2**64):
            raise ValueError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if not (0 <= self.path_index):
            raise ValueError(f"path_index must be nonnegative, got {self.path_index}")


def path_stream(seed_record: SeedRecord, substream: int = 0) -> Generator:
    """Counter-based Gaussian stream for one (master seed, path index) pair.

    Each path index owns a disjoint counter block; substreams partition the
    block so that derived draws (nested refinement, auxiliary drivers) never
    collide with the base path's stream.
    """

    if not (0 <= substream < 2**64):
        raise ValueError(f"substream must fit in 64 bits, got {substream}")
    counter = (seed_record.path_index << 192) + (substream << 128)
    return Generator(Philox(key=seed_record.master_seed, counter=counter))


@dataclass
class FbmPath:
    """One sampled trajectory with full provenance.

    Invariants: ``values[0] == 0`` exactly, ``len(values) == step_count + 1``,
    and identical (seed_record, generator_tag, grid, hurst) reproduce
    bit-identical values.
    """

    grid: TimeGrid
    values: np.ndarray
    hurst: HurstParam
    seed_record: SeedRecord
    generator_tag: str

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.step_count + 1,):
            raise ValueError(
                f"values must have {self.grid.step_count + 1} entries, got shape {self.values.shape}"
            )
        if self.values[0] != 0.0:
            raise ValueError(f"a noise path must start at 0, got {self.values[0]}")
        if self.generator_tag not in GENERATOR_TAGS:
            raise ValueError(f"unknown generator tag {self.generator_tag!r}")

    @property
    def ref(self) -> str:
        """Stable identifier used by downstream objects to cite their driver."""

        return (
            f"{self.generator_tag}:{self.seed_record.master_seed}"
            f":{self.seed_record.path_index}:n={self.grid.step_count}"
            f":T={self.grid.horizon!r}:H={self.hurst.value!r}"
        )


@dataclass(frozen=True)
class HolderEstimate:
    """Grid Hoelder certificate: |g(t_j) - g(t_i)| <= constant * (t_j - t_i)^exponent.

    ``constant`` is the exact maximum of the pair ratios over every grid pair,
    so the inequality holds with equality for at least one pair.
    """

    exponent: float
    constant: float
    grid: TimeGrid


# ---------------------------------------------------------------------------
# covariance formulas
# ---------------------------------------------------------------------------


def covariance_formula(s: float, t: float, hurst_value: float) -> float:
    """Raw two-point covariance (t^{2H} + s^{2H} - |t-s|^{2H})/2.

    Unrestricted exponent evaluator: accepts any hurst_value in (0, 1) so the
    standard-Brownian boundary case can be sanity-checked against min(s, t).
    """

    if s < 0.0 or t < 0.0:
        raise ValueError(f"time arguments must be nonnegative, got s={s}, t={t}")
    if not (0.0 < hurst_value < 1.0):
        raise ValueError(f"exponent must lie in (0, 1), got {hurst_value}")
    two_h = 2.0 * hurst_value
    return 0.5 * (t**two_h + s**two_h - abs(t - s) ** two_h)


def fbm_covariance(s: float, t: float, hurst: HurstParam) -> float:
    """Covariance of the driving noise at times (s, t); symmetric in (s, t)."""

    return covariance_formula(s, t, hurst.value)


def fgn_autocovariance(k: int, hurst: HurstParam) -> float:
    """Unit-variance increment autocovariance gamma(k); gamma(0) = 1.

    Negative for every k >= 1 when H < 1/2 (antipersistent increments).
    """

    if not (isinstance(k, (int, np.integer)) and k >= 0):
        raise ValueError(f"lag must be a nonnegative integer, got {k}")
    two_h = 2.0 * hurst.value
    kk = float(k)
    return 0.5 * ((kk + 1.0) ** two_h - 2.0 * kk**two_h + abs(kk - 1.0) ** two_h)


def _fgn_kernel(n_lags: int, hurst_value: float) -> np.ndarray:
    """gamma(0..n_lags) for unit-spaced, unit-variance increments."""

    k = np.arange(n_lags + 1, dtype=float)
    two_h = 2.0 * hurst_value
    return 0.5 * ((k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)


# ---------------------------------------------------------------------------
# generators (unit-variance fGn; scaling to the grid happens in generate_fbm)
# ---------------------------------------------------------------------------

_embedding_cache: dict[tuple[int, float], np.ndarray] = {}
_embedding_lock = threading.Lock()


def _circulant_eigenvalues(n: int, hurst_value: float) -> np.ndarray:
    """Eigenvalues of the length-2n circulant embedding of gamma(0..n-1).

    Cached per (n, H); construction is idempotent, so a concurrent first use
    at worst computes the same table twice before one copy wins.
    """

    key = (n, hurst_value)
    cached = _embedding_cache.get(key)
    if cached is not None:
        return cached
    g = _fgn_kernel(n, hurst_value)
    row = np.concatenate([g[:n], [g[n]], g[1:n][::-1]])
    eig = np.fft.fft(row).real
    if eig.min() < _EMBEDDING_EIG_FLOOR:
        raise FbmGenerationError(
            f"circulant embedding produced eigenvalue {eig.min():.3e} below "
            f"{_EMBEDDING_EIG_FLOOR:.0e} for n={n}, H={hurst_value}"
        )
    eig = np.clip(eig, 0.0, None)
    with _embedding_lock:
        _embedding_cache.setdefault(key, eig)
    return _embedding_cache[key]


def _fgn_unit_circulant(n: int, hurst_value: float, rng: Generator) -> np.ndarray:
    eig = _circulant_eigenvalues(n, hurst_value)
    m = 2 * n
    z_re = rng.standard_normal(m)
    z_im = rng.standard_normal(m)
    w = np.fft.fft((z_re + 1j * z_im) * np.sqrt(eig / m))
    return w.real[:n].copy()


def _fgn_unit_hosking(n: int, hurst_value: float, rng: Generator) -> np.ndarray:
    gamma = _fgn_kernel(n, hurst_value)[:n]
    z = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = z[0]
    if n == 1:
        return x
    phi = np.zeros(n)
    variance = 1.0
    for k in range(1, n):
        if k == 1:
            reflection = gamma[1]
        else:
            reflection = (gamma[k] - phi[1:k] @ gamma[1:k][::-1]) / variance
        phi[1:k] -= reflection * phi[1:k][::-1]
        phi[k] = reflection
        variance *= 1.0 - reflection * reflection
        if variance <= 0.0:
            raise FbmGenerationError(
                f"conditional variance collapsed at step {k} (H={hurst_value})"
            )
        mean = phi[1 : k + 1] @ x[k - 1 :: -1]
        x[k] = mean + math.sqrt(variance) * z[k]
    return x


def _fgn_unit_cholesky(n: int, hurst_value: float, rng: Generator) -> np.ndarray:
    if n > _CHOLESKY_MAX_STEPS:
        raise FbmGenerationError(
            f"cholesky generator is limited to n <= {_CHOLESKY_MAX_STEPS} by policy, got {n}"
        )
    gamma = _fgn_kernel(n, hurst_value)[:n]
    idx = np.arange(n)
    cov = gamma[np.abs(idx[:, None] - idx[None, :])]
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise FbmGenerationError(
            f"increment covariance is not numerically positive definite (n={n}, H={hurst_value})"
        ) from exc
    return factor @ rng.standard_normal(n)


_UNIT_GENERATORS = {
    "circulant": _fgn_unit_circulant,
    "hosking": _fgn_unit_hosking,
    "cholesky": _fgn_unit_cholesky,
}


def generate_fbm(
    grid: TimeGrid,
    hurst: HurstParam,
    seed_record: SeedRecord,
    method: str = "circulant",
    substream: int = 0,
) -> FbmPath:
    """Sample one trajectory on the grid: values[0] = 0, increments exact fGn.

    The increments carry covariance ``dt^{2H} * gamma(k)``.  A circulant
    failure is raised to the caller (who may fall back to ``cholesky``); it is
    not silently absorbed.  ``method='zero'`` returns the deterministic zero
    driver without consuming randomness.  ``substream`` selects a disjoint
    portion of the path's counter block for auxiliary draws (0 is the base
    path; 1 is reserved for nested refinement) and is part of the
    reproducibility key.
    """

    if method == "zero":
        return zero_path(grid, hurst, seed_record)
    if method not in _UNIT_GENERATORS:
        raise ValueError(f"unknown generation method {method!r}; expected one of {GENERATOR_TAGS}")
    rng = path_stream(seed_record, substream=substream)
    unit = _UNIT_GENERATORS[method](grid.step_count, hurst.value, rng)
    increments = unit * grid.dt**hurst.value
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return FbmPath(grid=grid, values=values, hurst=hurst, seed_record=seed_record, generator_tag=method)


def zero_path(grid: TimeGrid, hurst: HurstParam, seed_record: SeedRecord | None = None) -> FbmPath:
    """Deterministic driver identically 0 (zero-noise experiments)."""

    rec = seed_record if seed_record is not None else SeedRecord(0, 0)
    return FbmPath(
        grid=grid,
        values=np.zeros(grid.step_count + 1),
        hurst=hurst,
        seed_record=rec,
        generator_tag="zero",
    )


# ---------------------------------------------------------------------------
# Hoelder estimation
# ---------------------------------------------------------------------------


def estimate_holder(values: np.ndarray, grid: TimeGrid, beta: float) -> HolderEstimate:
    """Exact maximal pair ratio max |g(t_j) - g(t_i)| / (t_j - t_i)^beta.

    Scans every offset; on a uniform grid the denominator depends only on the
    offset, so taking the per-offset maximum of |differences| reproduces the
    full O(n^2) pair scan exactly.
    """

    if not (0.0 < beta < 1.0):
        raise ValueError(f"exponent must lie in (0, 1), got {beta}")
    g = np.asarray(values, dtype=float)
    if g.shape != (grid.step_count + 1,):
        raise ValueError(f"values must have {grid.step_count + 1} entries, got shape {g.shape}")
    if g.size < 2:
        raise ValueError("need at least 2 grid nodes")
    dt = grid.dt
    best = 0.0
    for offset in range(1, grid.step_count + 1):
        spread = float(np.abs(g[offset:] - g[:-offset]).max())
        ratio = spread / (offset * dt) ** beta
        if ratio > best:
            best = ratio
    return HolderEstimate(exponent=beta, constant=best, grid=grid)


# ---------------------------------------------------------------------------
# nested refinement (2x grid, coarse nodes preserved bitwise)
# ---------------------------------------------------------------------------

_refine_cache: dict[tuple[int, float, float], tuple[np.ndarray, np.ndarray]] = {}
_refine_lock = threading.Lock()


def _refine_tables(n: int, horizon: float, hurst_value: float) -> tuple[np.ndarray, np.ndarray]:
    """Conditional-mean matrix A and conditional-covariance Cholesky factor.

    Fine increments live on the 2n-step grid.  Writing c for the coarse
    increments (each the sum of a fine pair) and v for the first fine
    increment of each pair, the pair (v, c) is jointly Gaussian, so
    v | c ~ N(A c, Cond) with A = Cov(v,c) Cov(c,c)^{-1}.  The second member
    of each pair is forced to c - v, which preserves coarse nodes exactly.
    """

    key = (n, horizon, hurst_value)
    cached = _refine_cache.get(key)
    if cached is not None:
        return cached
    dt_fine = horizon / (2 * n)
    g = _fgn_kernel(2 * n, hurst_value) * dt_fine ** (2.0 * hurst_value)
    idx = np.arange(n)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")

    def cov(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return g[np.abs(i - j)]

    coarse_cov = (
        cov(2 * ii, 2 * jj)
        + cov(2 * ii, 2 * jj + 1)
        + cov(2 * ii + 1, 2 * jj)
        + cov(2 * ii + 1, 2 * jj + 1)
    )
    cross = cov(2 * ii, 2 * jj) + cov(2 * ii, 2 * jj + 1)
    own = cov(2 * ii, 2 * jj)
    factor = cho_factor(coarse_cov, lower=True)
    a_matrix = cho_solve(factor, cross.T).T
    conditional = own - a_matrix @ cross.T
    jitter = 1e-12 * float(np.diag(conditional).mean())
    chol = np.linalg.cholesky(conditional + jitter * np.eye(n))
    with _refine_lock:
        _refine_cache.setdefault(key, (a_matrix, chol))
    return _refine_cache[key]


def refine_fbm(path: FbmPath, rng: Generator | None = None) -> FbmPath:
    """Resample the path on the doubled grid, conditioning on the coarse path.

    Even fine nodes equal the coarse nodes bitwise; odd nodes are drawn from
    the exact conditional law of the fine process given every coarse
    increment.  The default randomness is substream 1 of the path's own
    counter block, so refinement is itself reproducible.
    """

    if path.generator_tag == "zero":
        fine_grid = TimeGrid(path.grid.horizon, 2 * path.grid.step_count)
        return zero_path(fine_grid, path.hurst, path.seed_record)
    n = path.grid.step_count
    if rng is None:
        rng = path_stream(path.seed_record, substream=1)
    a_matrix, chol = _refine_tables(n, path.grid.horizon, path.hurst.value)
    coarse_inc = np.diff(path.values)
    first_of_pair = a_matrix @ coarse_inc + chol @ rng.standard_normal(n)
    fine = np.empty(2 * n + 1)
    fine[0::2] = path.values
    fine[1::2] = path.values[:-1] + first_of_pair
    fine_grid = TimeGrid(path.grid.horizon, 2 * n)
    return FbmPath(
        grid=fine_grid,
        values=fine,
        hurst=path.hurst,
        seed_record=path.seed_record,
        generator_tag=path.generator_tag,
    )
