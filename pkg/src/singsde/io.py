"""Delimited exports with provenance headers.

Every CSV written by the library starts with ``# key=value`` comment lines
carrying the provenance needed to regenerate the file (seeds, parameters,
format version, config hash when applicable), followed by one header row of
column names.  Floats are rendered with ``repr``-exact precision so a file is
a faithful witness of the computation.
"""

from __future__ import annotations

import os
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .fbm import FbmPath
from .ladder import EpsilonFamily
from .sde import RegularizedPath

__all__ = [
    "read_csv_with_meta",
    "write_csv",
    "write_excursion_csv",
    "write_family_csv",
    "write_fbm_csv",
    "write_iteration_log_csv",
    "write_solution_csv",
]

FORMAT_VERSION = 1


def _format_value(value: object) -> str:
    # Normalize numpy scalars through the builtin types: np.float64 subclasses
    # float, and its own repr ("np.float64(...)") must never reach a cell.
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(
    target: str | os.PathLike[str] | TextIO,
    columns: Sequence[tuple[str, Sequence | np.ndarray]],
    meta: Mapping[str, object],
) -> None:
    """Write ``# key=value`` header lines, a column-name row, then the rows."""

    names = [name for name, _ in columns]
    arrays = [np.asarray(data) for _, data in columns]
    if arrays and any(arr.shape != arrays[0].shape for arr in arrays):
        raise ValueError("all columns must have identical length")

    def _emit(handle: TextIO) -> None:
        for key, value in meta.items():
            handle.write(f"# {key}={_format_value(value)}\n")
        handle.write(",".join(names) + "\n")
        if arrays:
            for row in zip(*arrays):
                handle.write(",".join(_format_value(cell) for cell in row) + "\n")

    if hasattr(target, "write"):
        _emit(target)  # type: ignore[arg-type]
    else:
        with open(target, "w", encoding="utf-8") as handle:
            _emit(handle)


def read_csv_with_meta(path: str | os.PathLike[str]) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Read back a library CSV: (meta dict, column names, float value matrix)."""

    meta: dict[str, str] = {}
    names: list[str] = []
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif not names:
                names = line.split(",")
            else:
                rows.append([float(cell) for cell in line.split(",")])
    matrix = np.array(rows) if rows else np.empty((0, len(names)))
    return meta, names, matrix


def _seed_meta(path: FbmPath) -> dict[str, object]:
    return {
        "format_version": FORMAT_VERSION,
        "hurst": path.hurst.value,
        "horizon": path.grid.horizon,
        "step_count": path.grid.step_count,
        "master_seed": path.seed_record.master_seed,
        "path_index": path.seed_record.path_index,
        "generator_tag": path.generator_tag,
    }


def write_fbm_csv(path: FbmPath, target, extra_meta: Mapping[str, object] | None = None) -> None:
    """Path archive: provenance header plus (t, value) rows."""

    meta = _seed_meta(path)
    if extra_meta:
        meta.update(extra_meta)
    write_csv(target, [("t", path.grid.nodes()), ("value", path.values)], meta)


def write_solution_csv(
    solution: RegularizedPath,
    noise: FbmPath,
    target,
    extra_meta: Mapping[str, object] | None = None,
) -> None:
    """Single-level solve: (t, X_eps, noise_value) with spec and seed metadata."""

    spec = solution.spec
    meta: dict[str, object] = {
        "format_version": FORMAT_VERSION,
        "x0": spec.x0,
        "a": spec.a,
        "b": spec.b,
        "sigma": spec.sigma,
        "hurst": spec.hurst.value,
        "eps": solution.epsilon,
        "horizon": solution.grid.horizon,
        "step_count": solution.grid.step_count,
        "master_seed": noise.seed_record.master_seed,
        "path_index": noise.seed_record.path_index,
        "generator_tag": noise.generator_tag,
    }
    if extra_meta:
        meta.update(extra_meta)
    write_csv(
        target,
        [
            ("t", solution.grid.nodes()),
            ("X_eps", solution.values),
            ("noise_value", noise.values),
        ],
        meta,
    )


def write_family_csv(
    family: EpsilonFamily, target, extra_meta: Mapping[str, object] | None = None
) -> None:
    """Ladder export: (t, noise, X_eps_0 .. X_eps_J, limit_estimate)."""

    spec = family.spec
    meta: dict[str, object] = {
        "format_version": FORMAT_VERSION,
        "x0": spec.x0,
        "a": spec.a,
        "b": spec.b,
        "sigma": spec.sigma,
        "hurst": spec.hurst.value,
        "eps0": family.ladder.eps0,
        "ratio": family.ladder.ratio,
        "depth": family.ladder.depth,
        "horizon": family.grid.horizon,
        "step_count": family.grid.step_count,
        "master_seed": family.noise.seed_record.master_seed,
        "path_index": family.noise.seed_record.path_index,
        "generator_tag": family.noise.generator_tag,
        "cauchy_gap": family.cauchy_gap,
    }
    if extra_meta:
        meta.update(extra_meta)
    columns: list[tuple[str, np.ndarray]] = [
        ("t", family.grid.nodes()),
        ("noise", family.noise.values),
    ]
    for level, solution in enumerate(family.solutions):
        columns.append((f"X_eps_{level}", solution.values))
    columns.append(("limit_estimate", family.limit_estimate))
    write_csv(target, columns, meta)


def write_iteration_log_csv(
    log: Iterable[tuple[int, float, float]], target, extra_meta: Mapping[str, object] | None = None
) -> None:
    """Fixed-point iteration log: (iteration, sup_distance, contraction_ratio)."""

    rows = list(log)
    meta: dict[str, object] = {"format_version": FORMAT_VERSION}
    if extra_meta:
        meta.update(extra_meta)
    write_csv(
        target,
        [
            ("iteration", [row[0] for row in rows]),
            ("sup_distance", [row[1] for row in rows]),
            ("contraction_ratio", [row[2] for row in rows]),
        ],
        meta,
    )


def write_excursion_csv(
    rows: Iterable[Mapping[str, object]], target, extra_meta: Mapping[str, object] | None = None
) -> None:
    """Excursion report rows.

    Expected row keys: interval_index, alpha_t, beta_t, length,
    endpoint_value_left, endpoint_value_right, sup_residual (None values are
    rendered as nan).
    """

    rows = list(rows)
    meta: dict[str, object] = {"format_version": FORMAT_VERSION}
    if extra_meta:
        meta.update(extra_meta)
    names = [
        "interval_index",
        "alpha_t",
        "beta_t",
        "length",
        "endpoint_value_left",
        "endpoint_value_right",
        "sup_residual",
    ]

    def _cell(row: Mapping[str, object], key: str) -> object:
        value = row.get(key)
        return float("nan") if value is None else value

    write_csv(
        target,
        [(name, [_cell(row, name) for row in rows]) for name in names],
        meta,
    )
