"""Spatial traffic field, temporal arrival-rate modulation and load-state quantization.

Traffic is a fluid model: every grid cell carries an arrival density (flows per
area unit per second) and a mean file size in bits. Per-BS offered loads are
Riemann sums of ``arrival_density * mean_file_size`` over the cells a BS serves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class CellTraffic(NamedTuple):
    arrival_density: float  # flows per area unit per second
    mean_file_size: float  # bits


def traffic_load_density(cell: CellTraffic) -> float:
    """Offered bits per second per area unit at one location."""
    return cell.arrival_density * cell.mean_file_size


@dataclass(frozen=True)
class TemporalProfile:
    """Stage-indexed arrival rate; ``static`` ignores the sinusoid fields."""

    kind: str = "static"
    lambda_mean: float = 5e-6
    lambda_var: float = 0.0
    period_stages: int = 24
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("static", "sinusoidal"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.lambda_mean < 0:
            raise ValueError("lambda_mean must be >= 0")
        if self.kind == "sinusoidal":
            if not 0 <= self.lambda_var <= self.lambda_mean:
                raise ValueError("sinusoidal profile needs 0 <= lambda_var <= lambda_mean")
            if self.period_stages < 1:
                raise ValueError("period_stages must be >= 1")


def temporal_arrival_rate(profile: TemporalProfile, stage: int) -> float:
    if profile.kind == "static":
        return profile.lambda_mean
    # reduce the argument modulo the period so rate(k) == rate(k + D) bit-exactly
    frac = math.fmod(stage + profile.phase, profile.period_stages) / profile.period_stages
    rate = profile.lambda_var * math.cos(2.0 * math.pi * frac) + profile.lambda_mean
    return max(rate, 0.0)


@dataclass(frozen=True)
class Hotspot:
    """Axis-aligned rectangle whose cells get ``arrival_density *= multiplier``."""

    x_min_m: float
    y_min_m: float
    x_max_m: float
    y_max_m: float
    multiplier: float

    def __post_init__(self):
        if self.x_max_m <= self.x_min_m or self.y_max_m <= self.y_min_m:
            raise ValueError("hotspot rectangle is empty")
        if self.multiplier < 0:
            raise ValueError("hotspot multiplier must be >= 0")


@dataclass
class RegionGrid:
    """Uniform quadrature grid over a rectangular region.

    Arrays are flat, row-major over ``shape == (ny, nx)``. ``area_unit_m2`` is
    the area to which ``arrival_density`` refers; 1.0 means per square meter.
    """

    width_m: float
    height_m: float
    cell_size_m: float
    centers: np.ndarray  # (M, 2) meters
    cell_area: np.ndarray  # (M,) m^2
    arrival_density: np.ndarray  # (M,)
    mean_file_size: np.ndarray  # (M,) bits
    area_unit_m2: float = 1.0
    shape: tuple = field(default=(0, 0))

    @classmethod
    def uniform(
        cls,
        width_m: float,
        height_m: float,
        cell_size_m: float = 50.0,
        arrival_density: float = 5e-6,
        mean_file_size: float = 8e5,
        area_unit_m2: float = 1.0,
        hotspots: Sequence[Hotspot] = (),
    ) -> "RegionGrid":
        if min(width_m, height_m, cell_size_m) <= 0:
            raise ValueError("region and cell dimensions must be positive")
        if arrival_density < 0 or mean_file_size <= 0 or area_unit_m2 <= 0:
            raise ValueError("invalid traffic density parameters")
        nx = math.ceil(width_m / cell_size_m)
        ny = math.ceil(height_m / cell_size_m)
        x_lo = np.arange(nx) * cell_size_m
        y_lo = np.arange(ny) * cell_size_m
        x_hi = np.minimum(x_lo + cell_size_m, width_m)
        y_hi = np.minimum(y_lo + cell_size_m, height_m)
        cx, cy = np.meshgrid((x_lo + x_hi) / 2, (y_lo + y_hi) / 2)
        wx, wy = np.meshgrid(x_hi - x_lo, y_hi - y_lo)
        centers = np.column_stack([cx.ravel(), cy.ravel()])
        density = np.full(nx * ny, float(arrival_density))
        for h in hotspots:
            inside = (
                (centers[:, 0] >= h.x_min_m) & (centers[:, 0] < h.x_max_m)
                & (centers[:, 1] >= h.y_min_m) & (centers[:, 1] < h.y_max_m)
            )
            density[inside] *= h.multiplier
        return cls(
            width_m=float(width_m),
            height_m=float(height_m),
            cell_size_m=float(cell_size_m),
            centers=centers,
            cell_area=(wx * wy).ravel(),
            arrival_density=density,
            mean_file_size=np.full(nx * ny, float(mean_file_size)),
            area_unit_m2=float(area_unit_m2),
            shape=(ny, nx),
        )

    @property
    def n_cells(self) -> int:
        return len(self.cell_area)

    def cell(self, idx: int) -> CellTraffic:
        return CellTraffic(float(self.arrival_density[idx]), float(self.mean_file_size[idx]))

    def load_mass(self) -> np.ndarray:
        """Offered bits/s contributed by each cell (density times area)."""
        return self.arrival_density * self.mean_file_size * (self.cell_area / self.area_unit_m2)

    def total_offered(self) -> float:
        return float(self.load_mass().sum())

    def scaled(self, factor: float) -> "RegionGrid":
        return RegionGrid(
            self.width_m, self.height_m, self.cell_size_m, self.centers, self.cell_area,
            self.arrival_density * factor, self.mean_file_size, self.area_unit_m2, self.shape,
        )


def bs_traffic_loads(grid: RegionGrid, assoc: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Per-BS offered traffic in bits/s; zero for sleeping BSs.

    ``assoc[c]`` is the serving BS index of cell ``c`` or -1 when unassigned.
    """
    active = np.asarray(active, dtype=bool)
    assigned = assoc >= 0
    if np.any(~active[assoc[assigned]]):
        raise ValueError("association references a sleeping BS")
    return np.bincount(assoc[assigned], weights=grid.load_mass()[assigned], minlength=len(active))


class LoadHistory:
    """Per-BS running mean of observed traffic loads."""

    def __init__(self, n_bs: int):
        self.mean = np.zeros(n_bs)
        self.count = np.zeros(n_bs, dtype=np.int64)

    def update(self, loads) -> None:
        loads = np.asarray(loads, dtype=float)
        self.count += 1
        self.mean += (loads - self.mean) / self.count

    def thresholds(self) -> np.ndarray:
        return np.where(self.count > 0, self.mean, 0.0)


def quantize_state(loads, history: LoadHistory) -> np.ndarray:
    """Binary state: 1 where the load is at or above its historical mean.

    A BS without history maps to 1 only for a positive load. The history
    absorbs ``loads`` afterwards.
    """
    loads = np.asarray(loads, dtype=float)
    seen = history.count > 0
    state = np.where(seen, loads >= history.thresholds(), loads > 0).astype(np.int8)
    history.update(loads)
    return state


def encode_bits(bits) -> int:
    """Pack a 0/1 vector into an integer, element i at bit i."""
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def decode_bits(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.int8)


class TrafficModel:
    """Stage-by-stage traffic realization over a fixed spatial pattern.

    The grid holds the spatial pattern at the profile's mean rate; each stage
    rescales it by ``rate(k) / lambda_mean`` times an optional mean-one
    lognormal noise factor drawn from the traffic RNG stream.
    """

    def __init__(self, grid: RegionGrid, profile: TemporalProfile, noise_sigma: float = 0.0):
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        self.grid = grid
        self.profile = profile
        self.noise_sigma = noise_sigma

    def stage_scale(self, stage: int, rng: np.random.Generator) -> float:
        lam = self.profile.lambda_mean
        scale = temporal_arrival_rate(self.profile, stage) / lam if lam > 0 else 1.0
        if self.noise_sigma > 0:
            s = self.noise_sigma
            scale *= math.exp(s * rng.standard_normal() - 0.5 * s * s)
        return scale
