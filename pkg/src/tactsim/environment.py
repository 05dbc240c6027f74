"""Stage-level evaluation of BS on/off configurations.

``RanEnvironment.evaluate`` is the single code path used by the learner, the
all-on reference and the greedy/exhaustive oracles: associate, compute system
and traffic loads, check feasibility, price the stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radio import CostBreakdown, OverloadError, RadioNetwork, active_of, mask_of
from .traffic import TrafficModel, bs_traffic_loads


@dataclass(frozen=True)
class Outcome:
    mask: int
    active: np.ndarray
    loads: np.ndarray  # system loads rho_i
    traffic: np.ndarray  # offered traffic Gamma_i, bits/s
    feasible: bool
    unserved: bool = False

    @property
    def max_load(self) -> float:
        return math.inf if self.unserved else float(self.loads.max(initial=0.0))


class RanEnvironment:
    def __init__(self, network: RadioNetwork, traffic: TrafficModel, varsigma: float = 0.0):
        if network.grid is not traffic.grid:
            raise ValueError("network and traffic model must share one grid")
        self.network = network
        self.traffic = traffic
        self.varsigma = float(varsigma)
        self.n_bs = network.n_bs
        self.all_on = (1 << self.n_bs) - 1
        self._base_offered = traffic.grid.total_offered()
        self._static = {}
        self._offered_unit = None

    def _unit_loads(self, active, prev_loads):
        """Association plus loads at stage scale 1; memoized when association ignores prev loads."""
        if self.varsigma == 0:
            key = mask_of(active)
            hit = self._static.get(key)
            if hit is None:
                hit = self._compute_unit(active, prev_loads)
                self._static[key] = hit
            return hit
        return self._compute_unit(active, prev_loads)

    def _compute_unit(self, active, prev_loads):
        net = self.network
        assoc = net.associate(active, prev_loads, self.varsigma)
        rho = net.compute_loads(assoc, active)
        gamma = bs_traffic_loads(net.grid, assoc, active)
        return assoc, rho, gamma

    def evaluate(self, mask: int, prev_loads, scale: float) -> Outcome:
        active = active_of(mask, self.n_bs)
        if mask == 0:
            zero = np.zeros(self.n_bs)
            served = self._base_offered * scale == 0
            return Outcome(0, active, zero, zero, feasible=served, unserved=not served)
        _, rho, gamma = self._unit_loads(active, prev_loads)
        rho = rho * scale
        return Outcome(mask, active, rho, gamma * scale, feasible=bool(np.all(rho < 1.0)))

    def cost(self, out: Outcome) -> CostBreakdown:
        if not out.feasible:
            raise OverloadError(f"configuration {out.mask:#x} is infeasible")
        return CostBreakdown.of(out.loads, out.active, self.network.roster, self.varsigma)

    def offered_traffic(self, scale: float) -> np.ndarray:
        """Per-BS traffic under the all-on reference association with zero previous loads."""
        if self._offered_unit is None:
            self._offered_unit = self._compute_unit(active_of(self.all_on, self.n_bs), np.zeros(self.n_bs))[2]
        return self._offered_unit * scale

    def repair(self, mask: int, prev_loads, scale: float) -> tuple[Outcome, bool]:
        """Wake sleeping BSs one at a time, each time the one that most lowers the peak load."""
        out = self.evaluate(mask, prev_loads, scale)
        if out.feasible:
            return out, False
        while not out.feasible:
            if out.mask == self.all_on:
                raise OverloadError("offered traffic exceeds capacity even with every BS active")
            best = None
            for i in range(self.n_bs):
                if out.mask >> i & 1:
                    continue
                cand = self.evaluate(out.mask | (1 << i), prev_loads, scale)
                if best is None or cand.max_load < best.max_load:
                    best = cand
            out = best
        return out, True
