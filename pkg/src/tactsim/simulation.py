"""One seeded trajectory of a BS switching scheme, stage by stage."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .baselines import all_on_stage, sota_greedy_stage
from .environment import RanEnvironment
from .learner import ActorCritic, HyperParams
from .metrics import StageRecord
from .traffic import LoadHistory, encode_bits, quantize_state

SCHEMES = ("tact", "ac", "sota", "all_on")
STATE_MODES = ("realized", "offered")

# fixed labels keep the traffic stream independent of action sampling
TRAFFIC_STREAM = 0
ACTION_STREAM = 1


def stream(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(label,)))


class Simulation:
    """Runs the controller loop: select, repair, serve, observe next state, learn.

    With ``state_mode="realized"`` the state quantizes each BS's served
    traffic (zero while asleep); ``"offered"`` quantizes the traffic each BS
    would see under the all-on reference association instead.
    """

    def __init__(self, env: RanEnvironment, scheme: str, seed: int, hyper: HyperParams | None = None,
                 state_mode: str = "realized", exotic: Mapping | None = None,
                 zeta_fn: Callable[[int], float] | None = None):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if state_mode not in STATE_MODES:
            raise ValueError(f"unknown state mode {state_mode!r}")
        self.env = env
        self.scheme = scheme
        self.seed = seed
        self.state_mode = state_mode
        self.traffic_rng = stream(seed, TRAFFIC_STREAM)
        self.action_rng = stream(seed, ACTION_STREAM)
        self.learner = None
        if scheme in ("tact", "ac"):
            self.learner = ActorCritic(1 << env.n_bs, hyper or HyperParams(),
                                       transfer=scheme == "tact", exotic=exotic, zeta_fn=zeta_fn)
        self.history = LoadHistory(env.n_bs)
        self.prev_loads = np.zeros(env.n_bs)
        self.state = env.all_on
        self.stage = 0

    @property
    def tables(self):
        return self.learner.tables if self.learner else None

    def run_stage(self) -> StageRecord:
        env = self.env
        k = self.stage + 1
        scale = env.traffic.stage_scale(k, self.traffic_rng)
        proposed, repaired = -1, False
        if self.learner is not None:
            proposed = self.learner.act(self.state, self.action_rng)
            out, repaired = env.repair(proposed, self.prev_loads, scale)
        elif self.scheme == "all_on":
            out, _ = all_on_stage(env, self.prev_loads, scale)
        else:
            out, _ = sota_greedy_stage(env, self.prev_loads, scale)
        cost = env.cost(out)

        observed = out.traffic if self.state_mode == "realized" else env.offered_traffic(scale)
        next_state = encode_bits(quantize_state(observed, self.history))
        delta = float("nan")
        if self.learner is not None:
            delta = self.learner.learn(self.state, out.mask, cost.total, next_state)

        rec = StageRecord(
            stage=k, state=self.state, action=out.mask, loads=tuple(float(x) for x in out.loads),
            energy_w=cost.energy_w, delay_flows=cost.delay_flows, total_cost=cost.total,
            repaired=repaired, td_error=delta, proposed_action=proposed, next_state=next_state,
            traffic_scale=scale,
        )
        self.prev_loads = out.loads
        self.state = next_state
        self.stage = k
        return rec
