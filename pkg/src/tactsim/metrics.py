"""Per-stage records and the derived evaluation metrics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class StageRecord:
    stage: int
    state: int
    action: int
    loads: tuple
    energy_w: float
    delay_flows: float
    total_cost: float
    repaired: bool = False
    td_error: float = math.nan
    proposed_action: int = -1
    next_state: int = -1
    traffic_scale: float = 1.0


@dataclass
class RunHistory:
    scheme: str
    seed: int
    config_hash: str = ""
    traffic_hash: str = ""
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def append(self, rec: StageRecord) -> None:
        expected = len(self.records) + 1
        if rec.stage != expected:
            raise ValueError(f"stage {rec.stage} breaks contiguity; expected {expected}")
        self.records.append(rec)

    def energies(self) -> np.ndarray:
        return np.array([r.energy_w for r in self.records])

    def delays(self) -> np.ndarray:
        return np.array([r.delay_flows for r in self.records])

    def states(self) -> list:
        return [r.state for r in self.records]


def _cumulative_energy(history: RunHistory, upto: int) -> float:
    if upto > len(history):
        raise ValueError(f"{history.scheme} history has {len(history)} stages, asked for {upto}")
    return math.fsum(r.energy_w for r in history.records[:upto])


def _check_paired(a: RunHistory, b: RunHistory) -> None:
    if a.traffic_hash and b.traffic_hash and a.traffic_hash != b.traffic_hash:
        raise ValueError("histories were produced under different traffic configurations")
    if a.seed != b.seed:
        raise ValueError("histories use different seeds, traffic realizations differ")


def cecr(scheme: RunHistory, all_on: RunHistory, upto: int | None = None) -> float:
    """Cumulative energy of a scheme over that of the all-on reference."""
    _check_paired(scheme, all_on)
    upto = len(scheme) if upto is None else upto
    return _cumulative_energy(scheme, upto) / _cumulative_energy(all_on, upto)


def running_cecr(scheme: RunHistory, all_on: RunHistory) -> np.ndarray:
    _check_paired(scheme, all_on)
    n = len(scheme)
    return np.cumsum(scheme.energies()) / np.cumsum(all_on.energies()[:n])


def improvement(tact: RunHistory, ac: RunHistory, upto: int | None = None) -> float:
    """Energy margin of TACT over classical AC, relative to AC. Negative means negative transfer."""
    _check_paired(tact, ac)
    upto = len(ac) if upto is None else upto
    e_ac = _cumulative_energy(ac, upto)
    if e_ac == 0:
        raise ValueError("AC cumulative energy is zero")
    return (e_ac - _cumulative_energy(tact, upto)) / e_ac


def kl_divergence(p, q, eps: float = 1e-9) -> float:
    """KL(p || q) in nats after additive smoothing and renormalization of both."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability distribution")
    p = (p + eps) / (p + eps).sum()
    q = (q + eps) / (q + eps).sum()
    return max(float(np.sum(p * np.log(p / q))), 0.0)


def task_state_distribution(history: RunHistory) -> dict:
    if not history.records:
        raise ValueError("empty history")
    counts = Counter(r.state for r in history.records)
    n = len(history.records)
    return {s: c / n for s, c in sorted(counts.items())}


def aligned(*dists: dict) -> list:
    """Express state distributions over their common (union) support."""
    support = sorted(set().union(*dists))
    return [np.array([d.get(s, 0.0) for s in support]) for d in dists]
