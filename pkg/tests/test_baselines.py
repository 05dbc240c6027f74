import dataclasses

import numpy as np
import pytest
from conftest import make_env, station

from tactsim.baselines import all_on_stage, exhaustive_optimum, sota_greedy_stage
from tactsim.radio import OverloadError, default_roster


def test_all_on_zero_traffic_energy(zero_env):
    # five macros at 0.5 * 865 W plus five micros at 0.5 * 38 W
    _, cost = all_on_stage(zero_env, np.zeros(10), 1.0)
    assert cost.energy_w == pytest.approx(2257.5, rel=1e-9)


def test_greedy_sleeps_everything_without_traffic(zero_env):
    out, cost = sota_greedy_stage(zero_env, np.zeros(10), 1.0)
    assert out.mask == 0
    assert cost.total == 0.0


def test_two_bs_fixture_keeps_the_cheap_bs():
    roster = [station(0, "micro", 300, 250), station(1, "macro", 700, 250)]
    env = make_env(roster, width=1000, height=500, density=5e-6, unit=250.0)
    prev = np.zeros(2)
    both = env.evaluate(0b11, prev, 1.0)
    micro_only = env.evaluate(0b01, prev, 1.0)
    assert micro_only.feasible
    # by hand: the extra dynamic power of the micro is below the macro's constant power
    q, p_micro, p_macro = 0.5, 38.0, 865.0
    extra = (1 - q) * (micro_only.loads[0] - both.loads[0]) * p_micro
    assert extra < q * p_macro
    cost_both = sum(q * p + (1 - q) * r * p for r, p in zip(both.loads, (p_micro, p_macro)))
    cost_micro = q * p_micro + (1 - q) * micro_only.loads[0] * p_micro
    assert cost_micro < cost_both
    out, cost = sota_greedy_stage(env, prev, 1.0)
    assert out.mask == 0b01
    assert cost.total == pytest.approx(cost_micro, rel=1e-12)


@pytest.mark.parametrize("scale", [0.2, 1.0, 5.0, 40.0, 100.0])
def test_greedy_never_worse_than_all_on(default_env, scale):
    prev = np.zeros(10)
    g_out, g = sota_greedy_stage(default_env, prev, scale)
    _, a = all_on_stage(default_env, prev, scale)
    assert g_out.feasible
    assert g.total <= a.total
    again, _ = sota_greedy_stage(default_env, prev, scale)
    assert again.mask == g_out.mask


SMALL_FIXTURES = [
    ([0, 5, 9], 5e-6), ([2, 6, 7, 9], 1e-5), ([5, 6, 7, 8], 5e-5), ([0, 1, 5, 6], 2e-5),
    ([2, 9], 5e-5), ([3, 4, 8], 1e-5), ([0, 1, 2, 3], 5e-6),
]


def sub_env(ids, density, varsigma=0.0):
    roster = [b for b in default_roster() if b.id in ids]
    roster = [dataclasses.replace(b, id=i) for i, b in enumerate(roster)]
    return make_env(roster, density=density, varsigma=varsigma)


@pytest.mark.parametrize("ids,density", SMALL_FIXTURES)
@pytest.mark.parametrize("varsigma", [0.0, 100.0])
def test_greedy_close_to_exhaustive(ids, density, varsigma):
    env = sub_env(ids, density, varsigma)
    prev = np.zeros(len(ids))
    _, best = exhaustive_optimum(env, prev, 1.0)
    _, greedy = sota_greedy_stage(env, prev, 1.0)
    assert greedy.total >= best.total - 1e-9
    assert greedy.total <= 1.05 * best.total


def test_greedy_can_miss_the_optimum():
    # four macros: switching off the busiest one first strands the descent at a corner macro,
    # while the central macro alone is cheapest
    env = sub_env([0, 1, 2, 3], 1e-4)
    prev = np.zeros(4)
    best_out, best = exhaustive_optimum(env, prev, 1.0)
    out, greedy = sota_greedy_stage(env, prev, 1.0)
    assert best_out.mask == 0b0100
    assert out.feasible and out.mask != best_out.mask
    assert greedy.total / best.total == pytest.approx(1.33, abs=0.01)


def test_exhaustive_without_feasible_configuration():
    env = sub_env([5, 6], 5e-4)
    with pytest.raises(OverloadError):
        exhaustive_optimum(env, np.zeros(2), 1.0)
