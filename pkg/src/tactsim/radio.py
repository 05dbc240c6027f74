"""Radio network: path loss, rates, load-aware association and the stage cost.

Conventions: BSs are indexed 0..N-1 in roster order, an active set is a boolean
vector of length N, and an association map is an int array with one serving
BS index per grid cell (-1 when no BS is active).
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .traffic import CellTraffic, RegionGrid, traffic_load_density


class OverloadError(RuntimeError):
    """Raised when no admissible BS configuration can carry the offered traffic."""


@dataclass(frozen=True)
class BaseStation:
    id: int
    kind: str
    position: tuple
    height_m: float
    max_tx_power_w: float
    max_op_power_w: float
    constant_fraction: float = 0.5

    def __post_init__(self):
        if self.kind not in ("macro", "micro"):
            raise ValueError(f"BS {self.id}: unknown kind {self.kind!r}")
        if not 0 < self.constant_fraction < 1:
            raise ValueError(f"BS {self.id}: constant_fraction must lie in (0, 1)")
        if self.max_tx_power_w <= 0 or self.max_op_power_w <= 0 or self.height_m <= 0:
            raise ValueError(f"BS {self.id}: powers and height must be positive")


@dataclass(frozen=True)
class ChannelParams:
    bandwidth_hz: float = 1.25e6
    carrier_freq_mhz: float = 2000.0
    interference_factor: float = 0.01
    noise_floor_w: float = 1e-13
    mobile_height_m: float = 1.5
    urban_correction_db: float = 3.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0 <= self.interference_factor <= 1:
            raise ValueError("interference_factor must lie in [0, 1]")
        if self.noise_floor_w < 0:
            raise ValueError("noise_floor_w must be >= 0")


MACRO = dict(kind="macro", height_m=32.0, max_tx_power_w=20.0, max_op_power_w=865.0)
MICRO = dict(kind="micro", height_m=12.5, max_tx_power_w=1.0, max_op_power_w=38.0)

DEFAULT_MACRO_SITES = [(500, 500), (1500, 500), (1000, 1000), (500, 1500), (1500, 1500)]
DEFAULT_MICRO_SITES = [(250, 1000), (1000, 250), (1750, 1000), (1000, 1750), (1000, 600)]


def default_roster(constant_fraction: float = 0.5) -> list[BaseStation]:
    """Five macros and five micros over a 2 km x 2 km region."""
    sites = [(p, MACRO) for p in DEFAULT_MACRO_SITES] + [(p, MICRO) for p in DEFAULT_MICRO_SITES]
    return [
        BaseStation(id=i, position=(float(x), float(y)), constant_fraction=constant_fraction, **spec)
        for i, ((x, y), spec) in enumerate(sites)
    ]


def cost231_path_loss_db(distance_m, bs_height_m, ch: ChannelParams):
    """COST-231 Hata, urban, small/medium-city mobile correction. Distances clamp at 1 m."""
    d_km = np.maximum(np.asarray(distance_m, dtype=float), 1.0) / 1000.0
    f = ch.carrier_freq_mhz
    hb = np.asarray(bs_height_m, dtype=float)
    a_hm = (1.1 * math.log10(f) - 0.7) * ch.mobile_height_m - (1.56 * math.log10(f) - 0.8)
    return (
        46.3 + 33.9 * math.log10(f) - 13.82 * np.log10(hb) - a_hm
        + (44.9 - 6.55 * np.log10(hb)) * np.log10(d_km) + ch.urban_correction_db
    )


def path_loss_db(bs: BaseStation, cell_center, ch: ChannelParams) -> float:
    d = math.dist(bs.position, cell_center)
    return float(cost231_path_loss_db(d, bs.height_m, ch))


def received_power_w(bs: BaseStation, cell_center, ch: ChannelParams) -> float:
    return bs.max_tx_power_w * 10.0 ** (-path_loss_db(bs, cell_center, ch) / 10.0)


def transmission_rate(bs: BaseStation, cell_center, active_set: Sequence[BaseStation], ch: ChannelParams) -> float:
    """Time-averaged Shannon rate with other active BSs as static interference."""
    if all(b.id != bs.id for b in active_set):
        raise ValueError(f"BS {bs.id} is not active")
    signal = received_power_w(bs, cell_center, ch)
    interference = sum(received_power_w(b, cell_center, ch) for b in active_set if b.id != bs.id)
    sinr = signal / (ch.noise_floor_w + ch.interference_factor * interference)
    return ch.bandwidth_hz * math.log2(1.0 + sinr)


def system_load_density(cell: CellTraffic, rate: float) -> float:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return traffic_load_density(cell) / rate


def is_feasible(loads) -> bool:
    return bool(np.all(np.asarray(loads) < 1.0))


def energy_cost(loads, active, roster: Sequence[BaseStation]) -> float:
    """Constant share plus load-proportional share of each active BS's power, in watts."""
    loads = np.asarray(loads, dtype=float)
    total = 0.0
    for i, bs in enumerate(roster):
        if active[i]:
            q, p = bs.constant_fraction, bs.max_op_power_w
            total += (1.0 - q) * float(loads[i]) * p + q * p
    return total


def delay_cost(loads, active) -> float:
    """Expected number of flows in the system summed over active BSs."""
    loads = np.asarray(loads, dtype=float)
    total = 0.0
    for i, on in enumerate(active):
        if on:
            if loads[i] >= 1.0:
                raise OverloadError(f"BS {i} load {loads[i]:.4f} >= 1; delay diverges")
            rho = float(loads[i])
            total += rho / (1.0 - rho)
    return total


def total_cost(energy: float, delay: float, varsigma: float) -> float:
    return energy + varsigma * delay


@dataclass(frozen=True)
class CostBreakdown:
    energy_w: float
    delay_flows: float
    total: float
    varsigma: float

    @classmethod
    def of(cls, loads, active, roster, varsigma: float) -> "CostBreakdown":
        e = energy_cost(loads, active, roster)
        d = delay_cost(loads, active)
        return cls(e, d, total_cost(e, d, varsigma), varsigma)


def mask_of(active) -> int:
    return int(sum(1 << i for i, on in enumerate(active) if on))


def active_of(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)


class RadioNetwork:
    """Vectorized rate and association engine for a roster over a grid.

    Received powers are precomputed once; per-active-set rate matrices are kept
    in a small LRU cache since the learner revisits configurations often.
    """

    def __init__(self, roster: Sequence[BaseStation], channel: ChannelParams, grid: RegionGrid,
                 cache_size: int = 256):
        if [b.id for b in roster] != sorted(b.id for b in roster):
            raise ValueError("roster must be sorted by id")
        self.roster = list(roster)
        self.channel = channel
        self.grid = grid
        self.n_bs = len(self.roster)
        pos = np.array([b.position for b in self.roster], dtype=float)
        dist = np.linalg.norm(grid.centers[:, None, :] - pos[None, :, :], axis=2)
        heights = np.array([b.height_m for b in self.roster])
        pl = cost231_path_loss_db(dist, heights[None, :], channel)
        tx = np.array([b.max_tx_power_w for b in self.roster])
        self.rx = tx[None, :] * 10.0 ** (-pl / 10.0)  # (M, N) watts
        self.q = np.array([b.constant_fraction for b in self.roster])
        self.p = np.array([b.max_op_power_w for b in self.roster])
        self.dynamic_power = (1.0 - self.q) * self.p
        self._rates = OrderedDict()
        self._cache_size = cache_size

    def rates(self, active) -> np.ndarray:
        """(M, N) rate matrix in bits/s; columns of sleeping BSs are zero."""
        active = np.asarray(active, dtype=bool)
        key = mask_of(active)
        hit = self._rates.get(key)
        if hit is not None:
            self._rates.move_to_end(key)
            return hit
        ch = self.channel
        rx = self.rx * active[None, :]
        interference = rx.sum(axis=1, keepdims=True) - rx
        sinr = rx / (ch.noise_floor_w + ch.interference_factor * interference)
        c = ch.bandwidth_hz * np.log2(1.0 + sinr)
        c[:, ~active] = 0.0
        c.flags.writeable = False
        self._rates[key] = c
        if len(self._rates) > self._cache_size:
            self._rates.popitem(last=False)
        return c

    def associate(self, active, prev_loads, varsigma: float) -> np.ndarray:
        """Each cell joins argmax_j c_j / ((1-q_j) P_j + varsigma (1-rho_j)^-2); ties go to the lowest index."""
        active = np.asarray(active, dtype=bool)
        if not active.any():
            raise ValueError("cannot associate users with an empty active set")
        prev = np.asarray(prev_loads, dtype=float)
        if np.any(prev[active] >= 1.0):
            raise ValueError("previous loads must be < 1 for active BSs")
        denom = self.dynamic_power.copy()
        if varsigma:
            denom = denom + varsigma / (1.0 - np.where(active, prev, 0.0)) ** 2
        metric = self.rates(active) / denom[None, :]
        metric[:, ~active] = -np.inf
        return np.argmax(metric, axis=1)

    def compute_loads(self, assoc: np.ndarray, active, grid: RegionGrid | None = None) -> np.ndarray:
        """System loads rho_i (fraction of time busy); zero for sleeping BSs."""
        grid = self.grid if grid is None else grid
        active = np.asarray(active, dtype=bool)
        assigned = assoc >= 0
        if not assigned.any():
            return np.zeros(self.n_bs)
        cells = np.nonzero(assigned)[0]
        bs = assoc[cells]
        if np.any(~active[bs]):
            raise ValueError("association references a sleeping BS")
        rate = self.rates(active)[cells, bs]
        return np.bincount(bs, weights=grid.load_mass()[cells] / rate, minlength=self.n_bs)

    def energy(self, loads, active) -> float:
        return energy_cost(loads, active, self.roster)


def associate(network: RadioNetwork, active, prev_loads, varsigma: float) -> np.ndarray:
    return network.associate(active, prev_loads, varsigma)


def compute_loads(network: RadioNetwork, assoc, active, grid: RegionGrid | None = None) -> np.ndarray:
    return network.compute_loads(assoc, active, grid)
