import math

import numpy as np
import pytest
from conftest import make_env, station

from tactsim.learner import (
    ActorCritic,
    HyperParams,
    LearnerTables,
    PolicySnapshot,
    alpha,
    beta,
    export_policy,
    import_policy,
    read_snapshot,
    select_action,
    strategy_probabilities,
    tact_update,
    td_error,
    update_native_policy,
    update_value,
    write_snapshot,
    zeta,
)
from tactsim.radio import default_roster
from tactsim.simulation import Simulation

TAU = 1000.0


# --- schedules -----------------------------------------------------------------


def test_schedules():
    assert alpha(1) == 1.0 and alpha(4) == 0.25
    assert beta(1) == 1.0
    assert beta(2) == pytest.approx(0.7213475204444817, rel=1e-12)
    assert zeta(0, 0.2) == 1.0
    assert zeta(3, 0.2) == pytest.approx(0.008, rel=1e-12)


def test_hyperparam_bounds():
    for bad in (dict(temperature=0), dict(discount=1.0), dict(transfer_factor=1.0), dict(projection_bound=0),
                dict(varsigma=-1)):
        with pytest.raises(ValueError):
            HyperParams(**bad)
    assert HyperParams() == HyperParams(1000.0, 0.001, 0.2, 1e5, 0.0)


# --- strategy ------------------------------------------------------------------


def test_equal_preferences_are_uniform():
    assert np.allclose(strategy_probabilities(np.full(8, 3.0), TAU), 1 / 8, rtol=0, atol=1e-15)


def test_two_action_closed_form():
    p = strategy_probabilities([TAU * math.log(2), 0.0], TAU)
    assert p[0] == pytest.approx(2 / 3, rel=1e-9)
    assert p[1] == pytest.approx(1 / 3, rel=1e-9)


def test_strategy_is_stable_and_positive():
    p = strategy_probabilities([1e5, -1e5, 0.0, 3e4], 1000.0)
    assert abs(p.sum() - 1) < 1e-12
    assert np.all(p > 0)
    shifted = strategy_probabilities(np.array([1e5, -1e5, 0.0, 3e4]) + 5e4, 1000.0)
    assert np.allclose(p, shifted, rtol=1e-12)


def test_two_equal_actions_sample_evenly():
    tables = LearnerTables(n_actions=2)
    rng = np.random.default_rng(42)
    draws = [select_action(0, tables, TAU, rng) for _ in range(10_000)]
    assert abs(np.mean(draws) - 0.5) <= 0.02


def test_action_sampling_is_deterministic():
    def draw(seed):
        t = LearnerTables(n_actions=16)
        t.row(3).p_o[:] = np.linspace(-2000, 2000, 16)
        rng = np.random.default_rng(seed)
        return [select_action(3, t, TAU, rng) for _ in range(200)]

    assert draw(5) == draw(5)
    assert draw(5) != draw(6)


def test_sampling_follows_strategy():
    t = LearnerTables(n_actions=2)
    t.row(0).p_o[:] = [TAU * math.log(3), 0.0]  # 3:1 odds
    rng = np.random.default_rng(0)
    draws = np.array([select_action(0, t, TAU, rng) for _ in range(20_000)])
    assert np.mean(draws == 0) == pytest.approx(0.75, abs=0.015)


# --- critic and actor updates --------------------------------------------------


def test_td_error_examples():
    assert td_error(12.0, 99.0, 5.0, 0.0) == 7.0
    assert td_error(648.75, 1000.0, 500.0, 0.001) == pytest.approx(149.75, rel=1e-9)
    v = 300.0 / (1 - 0.5)
    assert td_error(300.0, v, v, 0.5) == 0.0


def test_value_update_examples():
    t = LearnerTables(n_actions=2)
    update_value(t, 0, 10.0)
    assert t.value(0) == 10.0
    update_value(t, 0, 10.0)
    assert t.value(0) == pytest.approx(15.0, rel=1e-12)
    update_value(t, 0, 0.0)
    assert t.value(0) == 15.0
    assert t.row(0).visits == 3


def test_native_policy_examples():
    t = LearnerTables(n_actions=4)
    update_native_policy(t, 0, 2, -5.0)
    assert t.row(0).p_n[2] == 5.0
    update_native_policy(t, 0, 2, 2.0)
    # second execution: step size 1/(2 ln 2), scaled by the TD error of 2
    assert t.row(0).p_n[2] == pytest.approx(5.0 - 2 * 0.7213475204444817, rel=1e-12)
    before = t.row(0).p_n.copy()
    update_native_policy(t, 0, 2, 0.0)
    assert np.array_equal(t.row(0).p_n, before)


def test_tact_update_examples():
    t = LearnerTables(n_actions=2, exotic={0: {1: 7.0}})
    r = t.row(0)
    r.p_n[:] = [-300.0, 42.0]
    tact_update(t, 0, 0, 0.0, 100.0)
    assert r.p_o[0] == -100.0
    tact_update(t, 0, 1, 1.0, 100.0)
    assert r.p_o[1] == 7.0
    r.p_n[1] = 150.0
    tact_update(t, 0, 1, 0.0, 100.0)
    assert r.p_o[1] == 100.0


def test_first_execution_copies_exotic_value():
    ac = ActorCritic(4, HyperParams(projection_bound=100.0), transfer=True, exotic={0: {2: 7.0}})
    assert ac.tables.row(0).p_o.tolist() == [0.0, 0.0, 7.0, 0.0]
    ac.learn(0, 2, 500.0, 1)
    assert ac.tables.row(0).p_o[2] == 7.0
    assert ac.tables.row(0).p_n[2] == -500.0


def test_unseen_row_seed_is_projected():
    t = LearnerTables(n_actions=2, exotic={0: {0: 5e6}}, projection_bound=1e5)
    assert t.row(0).p_o[0] == 1e5


def test_negative_td_error_raises_preference_and_probability():
    ac = ActorCritic(4, HyperParams(), transfer=False)
    p_before = strategy_probabilities(ac.tables.overall_row(0), TAU)[1]
    ac.tables.row(0).value = 1000.0
    delta = ac.learn(0, 1, 100.0, 0)
    assert delta < 0
    assert ac.tables.row(0).p_n[1] > 0
    assert strategy_probabilities(ac.tables.overall_row(0), TAU)[1] > p_before


def test_learn_uses_values_before_the_update():
    ac = ActorCritic(2, HyperParams(discount=0.5))
    ac.tables.row(1).value = 40.0
    delta = ac.learn(0, 0, 10.0, 1)
    assert delta == 10.0 + 0.5 * 40.0 - 0.0
    assert ac.tables.value(0) == delta


def test_one_state_one_action_value_fixed_point():
    cost, gamma = 648.75, 0.001
    ac = ActorCritic(1, HyperParams(discount=gamma))
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        a = ac.act(0, rng)
        ac.learn(0, a, cost, 0)
    target = cost / (1 - gamma)
    assert ac.tables.value(0) == pytest.approx(target, rel=1e-6)


# --- simulation loop -----------------------------------------------------------


def test_counts_balance_every_stage(default_env):
    sim = Simulation(default_env, "tact", seed=3, state_mode="offered")
    for _ in range(200):
        sim.run_stage()
        for r in sim.tables.rows.values():
            assert r.executions.sum() == r.visits


def test_learner_is_credited_with_executed_action():
    env = make_env(default_roster())
    sim = Simulation(env, "ac", seed=0, state_mode="offered")
    for _ in range(100):
        rec = sim.run_stage()
        if rec.repaired:
            break
    else:
        pytest.fail("fixture never triggered a repair in 100 stages")
    r = sim.tables.row(rec.state)
    assert r.executions[rec.action] >= 1
    assert rec.action != rec.proposed_action


def test_zero_traffic_stage_costs_constant_power(zero_env):
    sim = Simulation(zero_env, "ac", seed=11, state_mode="realized")
    roster = zero_env.network.roster
    for _ in range(30):
        rec = sim.run_stage()
        assert not rec.repaired
        expected = sum(b.constant_fraction * b.max_op_power_w for i, b in enumerate(roster) if rec.action >> i & 1)
        assert rec.energy_w == pytest.approx(expected, rel=1e-12)


def test_all_off_with_zero_traffic_costs_nothing(zero_env):
    out, repaired = zero_env.repair(0, np.zeros(10), 1.0)
    assert not repaired and out.feasible
    assert zero_env.cost(out).total == 0.0


def test_transfer_without_exotic_matches_ac_on_first_stage(default_env):
    a = Simulation(default_env, "ac", seed=9, state_mode="offered").run_stage()
    t = Simulation(default_env, "tact", seed=9, state_mode="offered").run_stage()
    assert a == t


def test_projection_holds_every_stage(default_env):
    exotic = {s: {a: (-1) ** a * 4e5 for a in range(0, 1024, 7)} for s in range(1024)}
    sim = Simulation(default_env, "tact", seed=2, hyper=HyperParams(projection_bound=2e3),
                     state_mode="offered", exotic=exotic)
    for _ in range(300):
        sim.run_stage()
        assert sim.tables.max_abs_overall() <= 2e3


# --- feasibility repair --------------------------------------------------------


def test_feasible_action_is_untouched(default_env):
    out, repaired = default_env.repair(default_env.all_on, np.zeros(10), 1.0)
    assert not repaired and out.mask == default_env.all_on


def test_all_off_with_traffic_is_repaired(default_env):
    out, repaired = default_env.repair(0, np.zeros(10), 1.0)
    assert repaired and out.mask != 0 and out.feasible


def two_micro_env_needing_both():
    roster = [station(0, "micro", 250, 250), station(1, "micro", 750, 250)]
    env = make_env(roster, width=1000, height=500, density=1e-6, unit=1.0)
    peak = {m: env.evaluate(m, np.zeros(2), 1.0).max_load for m in (1, 2, 3)}
    scale = 2.0 / (peak[3] + min(peak[1], peak[2]))
    return env, scale


def test_crafted_fixture_forces_all_on():
    env, scale = two_micro_env_needing_both()
    # brute-force capacity check of every configuration
    feasible = {m: env.evaluate(m, np.zeros(2), scale).feasible for m in range(4)}
    assert feasible == {0: False, 1: False, 2: False, 3: True}
    for m in (0, 1, 2):
        out, repaired = env.repair(m, np.zeros(2), scale)
        assert repaired and out.mask == 3


def test_overload_everywhere_raises():
    from tactsim.radio import OverloadError

    env, scale = two_micro_env_needing_both()
    with pytest.raises(OverloadError):
        env.repair(0, np.zeros(2), scale * 10)


# --- policy snapshots ----------------------------------------------------------


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    entries = {(int(s), int(a)): float(v) for s, a, v in zip(rng.integers(0, 1024, 300), rng.integers(0, 1024, 300),
                                                            rng.normal(0, 1e4, 300))}
    entries[(0, 0)] = 1e-300
    entries[(0, 1)] = -0.1 + 0.2
    snap = PolicySnapshot(10, entries, stages=1500, seed=4, config_hash="abc", grid_hash="def")
    path = tmp_path / "p.txt"
    write_snapshot(snap, path)
    back = read_snapshot(path)
    assert back == snap
    assert all(back.entries[k] == v for k, v in entries.items())


def test_snapshot_rejects_mismatched_size():
    with pytest.raises(ValueError):
        import_policy(PolicySnapshot(10, {(0, 1): 2.0}), 6)


def test_fresh_tables_export_empty(tmp_path):
    snap = export_policy(LearnerTables(n_actions=8), 3)
    assert snap.entries == {}
    write_snapshot(snap, tmp_path / "e.txt")
    exotic = import_policy(read_snapshot(tmp_path / "e.txt"), 3)
    t = LearnerTables(n_actions=8, exotic=exotic)
    assert not t.row(5).p_e.any()


def test_export_covers_executed_entries_only():
    ac = ActorCritic(4, HyperParams())
    ac.learn(1, 3, 10.0, 2)
    ac.learn(2, 0, 5.0, 1)
    snap = export_policy(ac.tables, 2)
    assert set(snap.entries) == {(1, 3), (2, 0)}
    assert snap.entries[(1, 3)] == -10.0


def test_garbage_snapshot_rejected(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        read_snapshot(p)
