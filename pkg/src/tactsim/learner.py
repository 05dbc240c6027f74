"""Tabular actor-critic with transferred (exotic) policy blending.

Tables are sparse over states and dense over actions: a state's row is
materialized the first time the state is visited. The Boltzmann strategy is
always read from the overall policy ``p_o``; in classical actor-critic mode
``p_o`` mirrors the native policy exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

SNAPSHOT_FORMAT = "tact-policy"
SNAPSHOT_VERSION = 1


def alpha(k: int) -> float:
    return 1.0 / k


def beta(k: int) -> float:
    if k <= 1:
        return 1.0
    return 1.0 / (k * math.log(k))


def zeta(k: int, theta: float) -> float:
    return theta ** k


@dataclass(frozen=True)
class HyperParams:
    temperature: float = 1000.0
    discount: float = 0.001
    transfer_factor: float = 0.2
    projection_bound: float = 1e5
    varsigma: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if not 0 < self.transfer_factor < 1:
            raise ValueError("transfer_factor must lie in (0, 1)")
        if self.projection_bound <= 0:
            raise ValueError("projection_bound must be positive")
        if self.varsigma < 0:
            raise ValueError("varsigma must be >= 0")


def strategy_probabilities(p_row, temperature: float) -> np.ndarray:
    """Boltzmann distribution over a row of policy values."""
    z = np.asarray(p_row, dtype=float) / temperature
    z = np.exp(z - z.max())
    return z / z.sum()


@dataclass
class StateRow:
    value: float
    visits: int
    p_n: np.ndarray
    p_e: np.ndarray
    p_o: np.ndarray
    executions: np.ndarray


@dataclass
class LearnerTables:
    """V, p_n, p_e, p_o and the visit counters nu1 / nu2.

    ``exotic`` maps state -> {action: value}; absent entries read 0.
    ``initial_zeta`` is the transfer weight used to seed p_o for unseen entries.
    """

    n_actions: int
    value_init: float = 0.0
    exotic: Mapping[int, Mapping[int, float]] = field(default_factory=dict)
    initial_zeta: float = 1.0
    projection_bound: float = 1e5
    rows: dict = field(default_factory=dict)

    def row(self, state: int) -> StateRow:
        r = self.rows.get(state)
        if r is None:
            p_n = np.zeros(self.n_actions)
            p_e = np.zeros(self.n_actions)
            for a, v in self.exotic.get(state, {}).items():
                p_e[a] = v
            z = self.initial_zeta
            p_o = np.clip((1.0 - z) * p_n + z * p_e, -self.projection_bound, self.projection_bound)
            r = StateRow(self.value_init, 0, p_n, p_e, p_o, np.zeros(self.n_actions, dtype=np.int64))
            self.rows[state] = r
        return r

    def value(self, state: int) -> float:
        r = self.rows.get(state)
        return self.value_init if r is None else r.value

    def overall_row(self, state: int) -> np.ndarray:
        r = self.rows.get(state)
        if r is not None:
            return r.p_o
        return self.row(state).p_o

    def max_abs_overall(self) -> float:
        return max((float(np.abs(r.p_o).max()) for r in self.rows.values()), default=0.0)

    def greedy_action(self, state: int) -> int:
        # np.argmax returns the first maximum, i.e. the lowest action integer
        return int(np.argmax(self.overall_row(state)))


def select_action(state: int, tables: LearnerTables, temperature: float, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from the Boltzmann strategy over actions 0..|A|-1."""
    probs = strategy_probabilities(tables.overall_row(state), temperature)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, tables.n_actions - 1)


def td_error(cost: float, v_next: float, v_curr: float, discount: float) -> float:
    return cost + discount * v_next - v_curr


def update_value(tables: LearnerTables, state: int, delta: float) -> None:
    r = tables.row(state)
    r.visits += 1
    r.value += alpha(r.visits) * delta


def update_native_policy(tables: LearnerTables, state: int, action: int, delta: float) -> None:
    r = tables.row(state)
    r.executions[action] += 1
    r.p_n[action] -= beta(int(r.executions[action])) * delta


def tact_update(tables: LearnerTables, state: int, action: int, zeta_k: float, bound: float) -> None:
    """Blend native and exotic values for the executed entry, then project onto [-bound, bound]."""
    r = tables.row(state)
    blended = (1.0 - zeta_k) * r.p_n[action] + zeta_k * r.p_e[action]
    r.p_o[action] = min(max(blended, -bound), bound)


class ActorCritic:
    """Classical AC (``transfer=False``) or TACT (``transfer=True``).

    ``zeta_fn`` maps the pre-update execution count to a transfer weight; it
    defaults to ``theta ** k``. Passing ``lambda k: 0.0`` disables transfer.
    """

    def __init__(self, n_actions: int, hyper: HyperParams, transfer: bool = False,
                 exotic: Mapping[int, Mapping[int, float]] | None = None,
                 zeta_fn: Callable[[int], float] | None = None):
        self.hyper = hyper
        self.transfer = transfer
        if zeta_fn is None:
            theta = hyper.transfer_factor
            zeta_fn = lambda k: zeta(k, theta)  # noqa: E731
        self.zeta_fn = zeta_fn
        self.tables = LearnerTables(
            n_actions=n_actions,
            exotic=dict(exotic or {}) if transfer else {},
            initial_zeta=zeta_fn(0) if transfer else 0.0,
            projection_bound=hyper.projection_bound,
        )

    def act(self, state: int, rng: np.random.Generator) -> int:
        return select_action(state, self.tables, self.hyper.temperature, rng)

    def learn(self, state: int, action: int, cost: float, next_state: int) -> float:
        t = self.tables
        delta = td_error(cost, t.value(next_state), t.value(state), self.hyper.discount)
        update_value(t, state, delta)
        zeta_k = self.zeta_fn(int(t.row(state).executions[action]))
        update_native_policy(t, state, action, delta)
        r = t.row(state)
        if self.transfer:
            tact_update(t, state, action, zeta_k, self.hyper.projection_bound)
        else:
            r.p_o[action] = r.p_n[action]
        return delta


@dataclass
class PolicySnapshot:
    n_bs: int
    entries: dict  # (state, action) -> native policy value
    stages: int = 0
    seed: int | None = None
    config_hash: str = ""
    grid_hash: str = ""

    def exotic_table(self) -> dict:
        table: dict = {}
        for (s, a), v in self.entries.items():
            table.setdefault(s, {})[a] = v
        return table


def export_policy(tables: LearnerTables, n_bs: int, **meta) -> PolicySnapshot:
    """Every native entry executed at least once, keyed by (state, action)."""
    entries = {}
    for s in sorted(tables.rows):
        r = tables.rows[s]
        for a in np.nonzero(r.executions)[0]:
            entries[(s, int(a))] = float(r.p_n[a])
    return PolicySnapshot(n_bs=n_bs, entries=entries, **meta)


def import_policy(snapshot: PolicySnapshot, n_bs: int) -> dict:
    if snapshot.n_bs != n_bs:
        raise ValueError(f"snapshot was learned with {snapshot.n_bs} BSs, target has {n_bs}")
    return snapshot.exotic_table()


def write_snapshot(snapshot: PolicySnapshot, path) -> None:
    seed = "none" if snapshot.seed is None else str(snapshot.seed)
    lines = [
        f"# {SNAPSHOT_FORMAT} version={SNAPSHOT_VERSION} n_bs={snapshot.n_bs} stages={snapshot.stages} "
        f"seed={seed} config_hash={snapshot.config_hash or '-'} grid_hash={snapshot.grid_hash or '-'}",
    ]
    for (s, a), v in sorted(snapshot.entries.items()):
        lines.append(f"{s} {a} {v!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> PolicySnapshot:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(f"# {SNAPSHOT_FORMAT} "):
        raise ValueError(f"{path}: not a policy snapshot")
    meta = dict(tok.split("=", 1) for tok in text[0][2:].split()[1:])
    if int(meta.get("version", -1)) != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {meta.get('version')}")
    entries = {}
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'state action value'")
        entries[(int(parts[0]), int(parts[1]))] = float(parts[2])
    return PolicySnapshot(
        n_bs=int(meta["n_bs"]),
        entries=entries,
        stages=int(meta.get("stages", 0)),
        seed=None if meta.get("seed", "none") == "none" else int(meta["seed"]),
        config_hash="" if meta.get("config_hash") == "-" else meta.get("config_hash", ""),
        grid_hash="" if meta.get("grid_hash") == "-" else meta.get("grid_hash", ""),
    )
