"""Reference schemes with oracle access to the current stage's traffic."""

from __future__ import annotations

from enum import Enum

from .environment import Outcome, RanEnvironment
from .radio import CostBreakdown, OverloadError


class BaselineKind(str, Enum):
    ALL_ON = "all_on"
    SOTA_GREEDY = "sota"


def all_on_stage(env: RanEnvironment, prev_loads, scale: float) -> tuple[Outcome, CostBreakdown]:
    out = env.evaluate(env.all_on, prev_loads, scale)
    if not out.feasible:
        raise OverloadError("all-on configuration is overloaded")
    return out, env.cost(out)


def sota_greedy_stage(env: RanEnvironment, prev_loads, scale: float) -> tuple[Outcome, CostBreakdown]:
    """Best-improvement switch-off descent from all-on.

    Each step tries sleeping every active BS, keeps the feasible candidate with
    the lowest total cost, and stops once no candidate lowers the cost.
    """
    out, cost = all_on_stage(env, prev_loads, scale)
    while out.mask:
        best = None
        for i in range(env.n_bs):
            if not out.mask >> i & 1:
                continue
            cand = env.evaluate(out.mask & ~(1 << i), prev_loads, scale)
            if not cand.feasible:
                continue
            c = env.cost(cand)
            if best is None or c.total < best[1].total:
                best = (cand, c)
        if best is None or best[1].total >= cost.total:
            break
        out, cost = best
    return out, cost


def exhaustive_optimum(env: RanEnvironment, prev_loads, scale: float) -> tuple[Outcome, CostBreakdown]:
    """Minimum-cost feasible configuration over all 2^N masks; ties go to the lowest mask."""
    best = None
    for mask in range(env.all_on + 1):
        cand = env.evaluate(mask, prev_loads, scale)
        if not cand.feasible:
            continue
        c = env.cost(cand)
        if best is None or c.total < best[1].total:
            best = (cand, c)
    if best is None:
        raise OverloadError("no feasible configuration")
    return best
