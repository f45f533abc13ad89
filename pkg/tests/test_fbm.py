"""Noise-core tests: covariance formulas, generators, Hölder estimation.

Statistical assertions use frozen master seeds so every run sees the same
draws; the bars (3-5 standard errors) come from the module contract.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from singsde import (
    GENERATOR_TAGS,
    FbmGenerationError,
    FbmPath,
    HurstParam,
    SeedRecord,
    TimeGrid,
    covariance_formula,
    estimate_holder,
    fbm_covariance,
    fgn_autocovariance,
    generate_fbm,
    path_stream,
    refine_fbm,
    zero_path,
)

from _support import lag_autocov_zscores

H_QUARTER = HurstParam(0.25)
GRID_1024 = TimeGrid(horizon=1.0, step_count=1024)


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------


def test_covariance_formula_pinned_values():
    assert covariance_formula(1.0, 1.0, 0.3) == pytest.approx(1.0, abs=1e-12)
    # H = 1/2 is outside the rough-regime domain type but the raw evaluator
    # accepts it; the formula must then collapse to the Brownian min(s, t).
    assert covariance_formula(1.0, 3.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert covariance_formula(1.0, 2.0, 0.25) == pytest.approx(0.7071068, abs=1e-7)
    assert fbm_covariance(1.0, 2.0, H_QUARTER) == pytest.approx(0.7071068, abs=1e-7)
    # symmetry and the variance diagonal
    assert covariance_formula(0.3, 1.2, 0.25) == covariance_formula(1.2, 0.3, 0.25)
    assert covariance_formula(0.5, 0.5, 0.25) == pytest.approx(0.5**0.5, abs=1e-12)


def test_covariance_formula_domain():
    with pytest.raises(ValueError, match="time arguments must be nonnegative"):
        covariance_formula(-0.1, 1.0, 0.25)
    with pytest.raises(ValueError, match="exponent must lie in"):
        covariance_formula(0.5, 1.0, 1.0)
    with pytest.raises(ValueError, match="must lie in \\(0, 1/2\\)"):
        HurstParam(0.5)
    with pytest.raises(ValueError, match="must lie in \\(0, 1/2\\)"):
        HurstParam(0.0)


def test_fgn_autocovariance_pinned_values():
    for value in (0.1, 0.25, 0.4):
        assert fgn_autocovariance(0, HurstParam(value)) == pytest.approx(1.0, abs=1e-12)
    assert fgn_autocovariance(1, H_QUARTER) == pytest.approx(-0.2928932, abs=1e-7)


def test_fgn_autocovariance_antipersistent_sign():
    for value in (0.1, 0.25, 0.4):
        hurst = HurstParam(value)
        worst = max(fgn_autocovariance(k, hurst) for k in range(1, 101))
        print(f"H={value}: max lag-1..100 autocovariance {worst:.3e}")
        assert worst < 0.0, f"H={value}: lagged autocovariance must stay negative"


def test_fgn_autocovariance_domain():
    with pytest.raises(ValueError, match="lag must be a nonnegative integer"):
        fgn_autocovariance(-1, H_QUARTER)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def test_single_increment_unit_variance():
    # n = 1, T = 1: the lone increment is standard normal; check the variance
    # over 1e5 seeds against the 3-standard-error band (SE of a variance
    # estimate is sqrt(2/N) for Gaussian data).
    grid = TimeGrid(horizon=1.0, step_count=1)
    draws = np.array(
        [
            generate_fbm(grid, H_QUARTER, SeedRecord(7, index)).values[1]
            for index in range(100_000)
        ]
    )
    variance = draws.var(ddof=1)
    bar = 3.0 * math.sqrt(2.0 / draws.size)
    print(f"n=1 increment variance {variance:.4f} (|dev| {abs(variance - 1):.4f}, bar {bar:.4f})")
    assert abs(variance - 1.0) <= bar


def test_same_seed_is_bit_identical():
    for method in ("circulant", "hosking", "cholesky"):
        first = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(42, 3), method=method)
        second = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(42, 3), method=method)
        assert np.array_equal(first.values, second.values), method
        assert first.generator_tag == method
    other_path = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(42, 4))
    other_sub = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(42, 3), substream=1)
    base = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(42, 3))
    assert not np.array_equal(base.values, other_path.values)
    assert not np.array_equal(base.values, other_sub.values)


def test_paths_start_at_zero():
    for method in GENERATOR_TAGS:
        path = generate_fbm(TimeGrid(1.0, 64), H_QUARTER, SeedRecord(1, 0), method=method)
        assert path.values[0] == 0.0, method


def test_lag_autocovariance_monte_carlo():
    # Module example: H=0.25, n=1024, 4096 paths, lags 0..10 within 4 SE.
    zscores = lag_autocov_zscores(0.25, 1024, 4096, master_seed=12345)
    worst = np.abs(zscores).max()
    print(f"lag autocovariance z-scores (H=0.25): {np.round(zscores, 2)}")
    assert worst < 4.0, f"worst |z| = {worst:.2f} exceeds 4 standard errors"


def test_generator_cross_validation():
    # Circulant vs Cholesky from independent seeds: entrywise difference of
    # the empirical increment covariance matrices within 5 standard errors.
    n, paths = 64, 4096
    grid = TimeGrid(horizon=1.0, step_count=n)

    def increment_rows(method: str, master: int) -> np.ndarray:
        rows = np.empty((paths, n))
        for index in range(paths):
            path = generate_fbm(grid, H_QUARTER, SeedRecord(master, index), method=method)
            rows[index] = np.diff(path.values)
        return rows

    def covariance_and_variance(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cov = rows.T @ rows / rows.shape[0]
        second = (rows**2).T @ (rows**2) / rows.shape[0]
        return cov, second - cov**2

    cov_a, var_a = covariance_and_variance(increment_rows("circulant", 101))
    cov_b, var_b = covariance_and_variance(increment_rows("cholesky", 202))
    stderr = np.sqrt((var_a + var_b) / paths)
    zmatrix = np.abs(cov_a - cov_b) / stderr
    print(f"cross-validation worst entrywise z: {zmatrix.max():.3f}")
    assert zmatrix.max() < 5.0


def test_terminal_value_moments():
    # Invariant: over N >= 4096 paths, the mean of B_T is within 4 T^H/sqrt(N)
    # of 0 and the variance within 4 sqrt(2) T^{2H}/sqrt(N) of T^{2H} (T = 1).
    paths = 4096
    grid = TimeGrid(horizon=1.0, step_count=256)
    terminal = np.array(
        [
            generate_fbm(grid, H_QUARTER, SeedRecord(9, index)).values[-1]
            for index in range(paths)
        ]
    )
    mean_bar = 4.0 / math.sqrt(paths)
    var_bar = 4.0 * math.sqrt(2.0) / math.sqrt(paths)
    print(
        f"B_T moments: mean {terminal.mean():+.4f} (bar {mean_bar:.4f}), "
        f"variance {terminal.var(ddof=1):.4f} (bar {var_bar:.4f})"
    )
    assert abs(terminal.mean()) <= mean_bar
    assert abs(terminal.var(ddof=1) - 1.0) <= var_bar


def test_cholesky_step_limit_and_unknown_method():
    with pytest.raises(FbmGenerationError, match="limited to n <= 4096 by policy"):
        generate_fbm(TimeGrid(1.0, 4097), H_QUARTER, SeedRecord(0, 0), method="cholesky")
    with pytest.raises(ValueError, match="unknown generation method"):
        generate_fbm(GRID_1024, H_QUARTER, SeedRecord(0, 0), method="fft")


def test_zero_generator():
    path = zero_path(TimeGrid(1.0, 32), H_QUARTER)
    assert path.generator_tag == "zero"
    assert np.all(path.values == 0.0)


def test_path_must_start_at_zero():
    grid = TimeGrid(1.0, 4)
    values = np.array([0.5, 0.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="must start at 0"):
        FbmPath(grid, values, H_QUARTER, SeedRecord(0, 0), "zero")


def test_path_stream_determinism():
    a = path_stream(SeedRecord(5, 1)).standard_normal(8)
    b = path_stream(SeedRecord(5, 1)).standard_normal(8)
    c = path_stream(SeedRecord(5, 1), substream=2).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# Hölder estimation
# ---------------------------------------------------------------------------


def test_estimate_holder_pinned_values():
    grid = TimeGrid(1.0, 8)
    constant = estimate_holder(np.full(9, 3.7), grid, beta=0.2)
    assert constant.constant == 0.0

    two_node = TimeGrid(1.0, 1)
    linear = estimate_holder(np.array([0.0, 1.0]), two_node, beta=0.5)
    assert linear.constant == pytest.approx(1.0, abs=1e-12)


def test_estimate_holder_stability_under_refinement():
    # Module example: at beta = H/2 the estimated constant grows by less than
    # 50% when the grid doubles via the nested refinement of the same draw.
    worst_ratio = 0.0
    for master in range(2024, 2030):
        coarse = generate_fbm(GRID_1024, H_QUARTER, SeedRecord(master, 0))
        fine = refine_fbm(coarse)
        c_coarse = estimate_holder(coarse.values, coarse.grid, beta=0.125).constant
        c_fine = estimate_holder(fine.values, fine.grid, beta=0.125).constant
        worst_ratio = max(worst_ratio, c_fine / c_coarse)
    print(f"Hölder constant growth under 2x refinement: worst ratio {worst_ratio:.3f}")
    assert worst_ratio < 1.5


def test_estimate_holder_monotone_in_beta():
    path = generate_fbm(TimeGrid(1.0, 256), H_QUARTER, SeedRecord(11, 0))
    constants = [
        estimate_holder(path.values, path.grid, beta=beta).constant
        for beta in (0.05, 0.1, 0.2)
    ]
    print(f"Hölder constants over beta=(0.05, 0.1, 0.2): {np.round(constants, 4)}")
    assert constants[0] <= constants[1] <= constants[2]


def test_estimate_holder_matches_reference_scan():
    # The vectorized per-offset scan must equal the O(n^2) reference maximum.
    path = generate_fbm(TimeGrid(1.0, 128), H_QUARTER, SeedRecord(3, 0))
    beta = 0.125
    times = path.grid.nodes()
    reference = 0.0
    for i in range(times.size):
        for j in range(i + 1, times.size):
            ratio = abs(path.values[j] - path.values[i]) / (times[j] - times[i]) ** beta
            reference = max(reference, ratio)
    fast = estimate_holder(path.values, path.grid, beta=beta).constant
    assert fast == pytest.approx(reference, rel=1e-12)


# ---------------------------------------------------------------------------
# nested refinement
# ---------------------------------------------------------------------------


def test_refine_fbm_is_nested_and_deterministic():
    coarse = generate_fbm(TimeGrid(1.0, 512), H_QUARTER, SeedRecord(77, 2))
    fine = refine_fbm(coarse)
    again = refine_fbm(coarse)
    assert fine.grid.step_count == 2 * coarse.grid.step_count
    assert fine.grid.horizon == coarse.grid.horizon
    assert np.array_equal(fine.values[::2], coarse.values), "even nodes must be preserved"
    assert np.array_equal(fine.values, again.values), "refinement must be deterministic"


def test_refine_fbm_fine_increment_statistics():
    # Refined paths must look like fGn at the fine resolution: variance of
    # fine increments within 5 SE of dt^{2H} across many refined paths.
    paths = 512
    grid = TimeGrid(horizon=1.0, step_count=64)
    samples = []
    for index in range(paths):
        fine = refine_fbm(generate_fbm(grid, H_QUARTER, SeedRecord(31, index)))
        samples.append(np.diff(fine.values))
    increments = np.concatenate(samples)
    dt_fine = 1.0 / 128.0
    target = dt_fine**0.5
    variance = increments.var(ddof=1)
    stderr = math.sqrt(2.0 / increments.size) * target
    z = abs(variance - target) / stderr
    print(f"fine-increment variance {variance:.6e} vs target {target:.6e} (z={z:.2f})")
    assert z < 5.0
