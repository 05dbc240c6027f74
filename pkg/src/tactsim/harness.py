"""Experiment orchestration: single runs, one-axis sweeps and source->target transfer.

Every observable output is a function of the config and the seed. Schemes
under test are paired with an all-on trajectory built from the same traffic
stream, which is what the cumulative energy consumption ratio divides by.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, set_path
from .environment import RanEnvironment
from .learner import PolicySnapshot, export_policy, import_policy, read_snapshot, write_snapshot
from .metrics import RunHistory, aligned, cecr, improvement, kl_divergence, running_cecr, task_state_distribution
from .radio import OverloadError, RadioNetwork
from .simulation import Simulation
from .traffic import RegionGrid, TrafficModel

log = logging.getLogger(__name__)

STAGE_COLUMNS = ["stage", "state_int", "action_int", "repaired", "energy_w", "delay_flows",
                 "total_cost", "cecr_running", "td_error"]
NA = "NA"


def build_environment(cfg: RunConfig) -> RanEnvironment:
    t = cfg.traffic
    grid = RegionGrid.uniform(t.width_m, t.height_m, t.cell_size_m, t.arrival_density, t.file_size_bits,
                              t.area_unit_m2, cfg.hotspots())
    network = RadioNetwork(cfg.stations(), cfg.channel(), grid)
    return RanEnvironment(network, TrafficModel(grid, cfg.profile(), t.noise_sigma), cfg.learner.varsigma_w_s)


def simulate(cfg: RunConfig, scheme: str, seed: int, stages: int, env: RanEnvironment | None = None,
             exotic: dict | None = None) -> tuple[RunHistory, Simulation]:
    env = env or build_environment(cfg)
    zeta_fn = None
    override = cfg.learner.transfer_rate_override
    if override is not None:
        zeta_fn = lambda k: override  # noqa: E731
    sim = Simulation(env, scheme, seed, cfg.hyper(), cfg.state_mode(), exotic, zeta_fn)
    history = RunHistory(scheme, seed, cfg.config_hash(), cfg.traffic_hash())
    for _ in range(stages):
        history.append(sim.run_stage())
    return history, sim


@dataclass
class RunResult:
    history: RunHistory
    reference: RunHistory  # all-on trajectory on the same traffic
    summary: dict
    snapshot: Optional[PolicySnapshot] = None


def _exotic_for(cfg: RunConfig, n_bs: int) -> dict | None:
    if cfg.learner.scheme != "tact" or not cfg.learner.transfer_snapshot:
        return None
    return import_policy(read_snapshot(cfg.learner.transfer_snapshot), n_bs)


def run(cfg: RunConfig, seed: int | None = None, out_dir=None, exotic: dict | None = None,
        scheme: str | None = None) -> RunResult:
    """Run one scheme for ``cfg.learner.stages`` stages plus its all-on reference."""
    seed = cfg.learner.seed if seed is None else seed
    scheme = scheme or cfg.learner.scheme
    stages = cfg.learner.stages
    env = build_environment(cfg)
    if exotic is None and scheme == "tact":
        exotic = _exotic_for(cfg, env.n_bs)
    history, sim = simulate(cfg, scheme, seed, stages, env, exotic)
    if scheme == "all_on":
        reference = history
    else:
        reference, _ = simulate(cfg, "all_on", seed, stages, env)
    snapshot = None
    if sim.learner is not None:
        snapshot = export_policy(sim.tables, env.n_bs, stages=stages, seed=seed,
                                 config_hash=cfg.config_hash(), grid_hash=cfg.traffic_hash())
    summary = summarize(history, reference, cfg.output.checkpoints)
    result = RunResult(history, reference, summary, snapshot)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.output.write_stage_csv:
            write_stage_csv(out / f"stages_{scheme}_seed{seed}.csv", history, reference)
        write_rows(out / "summary.csv", [summary])
        if snapshot is not None:
            write_snapshot(snapshot, out / f"policy_{scheme}_seed{seed}.txt")
    return result


def summarize(history: RunHistory, reference: RunHistory, checkpoints, extra: dict | None = None) -> dict:
    n = len(history)
    row = {"scheme": history.scheme, "seed": history.seed, "stages": n,
           "cecr_final": cecr(history, reference, n) if n else NA}
    for c in checkpoints:
        row[f"cecr_{c}"] = cecr(history, reference, c) if c <= n else NA
    row["cumulative_energy_w"] = float(math.fsum(history.energies())) if n else NA
    row["mean_delay_flows"] = float(np.mean(history.delays())) if n else NA
    row["improvement_vs_ac"] = NA
    row["kl_source_target"] = NA
    if extra:
        row.update(extra)
    return row


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_stage_csv(path, history: RunHistory, reference: RunHistory) -> None:
    ratio = running_cecr(history, reference) if len(history) else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAGE_COLUMNS)
        for r, c in zip(history.records, ratio):
            w.writerow([r.stage, r.state, r.action, int(r.repaired), _fmt(r.energy_w), _fmt(r.delay_flows),
                        _fmt(r.total_cost), _fmt(float(c)), _fmt(r.td_error)])


def write_rows(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    columns = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(k, NA)) for k in columns])


# --- transfer -----------------------------------------------------------------


@dataclass
class TransferResult:
    source: RunHistory
    snapshot: PolicySnapshot
    tact: RunHistory
    ac: RunHistory
    reference: RunHistory
    improvement: float
    kl: float
    summaries: list = field(default_factory=list)


def train_source(source_cfg: RunConfig, seed: int) -> tuple[RunHistory, PolicySnapshot]:
    env = build_environment(source_cfg)
    stages = source_cfg.learner.stages
    history, sim = simulate(source_cfg, "ac", seed, stages, env)
    snap = export_policy(sim.tables, env.n_bs, stages=stages, seed=seed,
                         config_hash=source_cfg.config_hash(), grid_hash=source_cfg.traffic_hash())
    return history, snap


def transfer_pipeline(source_cfg: RunConfig, target_cfg: RunConfig, out_dir=None,
                      source_seed: int | None = None, target_seed: int | None = None,
                      upto: int | None = None) -> TransferResult:
    """Train AC on the source task, transfer its policy into TACT on the target, compare with AC."""
    n_src, n_tgt = len(source_cfg.stations()), len(target_cfg.stations())
    if n_src != n_tgt:
        raise ConfigError(f"source has {n_src} BSs but target has {n_tgt}")
    source_seed = source_cfg.learner.seed if source_seed is None else source_seed
    target_seed = target_cfg.learner.seed if target_seed is None else target_seed

    source, snap = train_source(source_cfg, source_seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        snap_path = out / f"source_policy_seed{source_seed}.txt"
        write_snapshot(snap, snap_path)
        reread = read_snapshot(snap_path)
        if reread.entries != snap.entries or reread.n_bs != snap.n_bs:
            raise RuntimeError(f"policy snapshot {snap_path} failed its round-trip check")
    exotic = import_policy(snap, n_tgt)

    env = build_environment(target_cfg)
    stages = target_cfg.learner.stages
    tact, _ = simulate(target_cfg, "tact", target_seed, stages, env, exotic)
    ac, _ = simulate(target_cfg, "ac", target_seed, stages, env)
    reference, _ = simulate(target_cfg, "all_on", target_seed, stages, env)

    upto = stages if upto is None else upto
    gain = improvement(tact, ac, upto) if upto else math.nan
    kl = math.nan
    if len(source) and len(tact):
        p, q = aligned(task_state_distribution(source), task_state_distribution(tact))
        kl = kl_divergence(p, q)
    checkpoints = target_cfg.output.checkpoints
    summaries = [
        summarize(tact, reference, checkpoints, {"improvement_vs_ac": gain, "kl_source_target": kl}),
        summarize(ac, reference, checkpoints),
    ]
    if out_dir is not None:
        out = Path(out_dir)
        if target_cfg.output.write_stage_csv:
            write_stage_csv(out / f"stages_tact_seed{target_seed}.csv", tact, reference)
            write_stage_csv(out / f"stages_ac_seed{target_seed}.csv", ac, reference)
        write_rows(out / "summary.csv", summaries)
    return TransferResult(source, snap, tact, ac, reference, gain, kl, summaries)


# --- sweeps -------------------------------------------------------------------


@dataclass
class SweepSpec:
    base: RunConfig
    axis: str
    values: list
    seeds: list
    schemes: list
    transfer_source: dict = field(default_factory=dict)  # overrides turning base into the source task
    source_seed_offset: int = 1000

    @classmethod
    def load(cls, path) -> "SweepSpec":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read sweep spec {path}: {exc}") from exc
        return cls.from_dict(data, path.parent)

    @classmethod
    def from_dict(cls, data: dict, root: Path | None = None) -> "SweepSpec":
        allowed = {"base", "axis", "values", "seeds", "schemes", "transfer_source", "source_seed_offset"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"sweep spec: unknown keys {unknown}")
        base = data.get("base", {})
        if isinstance(base, str):
            base = RunConfig.load((root or Path(".")) / base)
        else:
            base = RunConfig.from_dict(base)
        spec = cls(base=base, axis=data["axis"], values=list(data["values"]), seeds=list(data["seeds"]),
                   schemes=list(data["schemes"]), transfer_source=dict(data.get("transfer_source", {})),
                   source_seed_offset=int(data.get("source_seed_offset", 1000)))
        for v in spec.values:
            for s in spec.schemes:
                spec.cell_config(v, s)  # every generated config must validate
        return spec

    def cell_config(self, value, scheme: str) -> RunConfig:
        data = self.base.to_dict()
        set_path(data, self.axis, value)
        set_path(data, "learner.scheme", scheme)
        return RunConfig.from_dict(data)

    def source_config(self, cell_cfg: RunConfig) -> RunConfig:
        return cell_cfg.with_overrides({**self.transfer_source, "learner.scheme": "ac"})


def _sweep_cell(spec: SweepSpec, value, scheme: str, seed: int) -> dict:
    row = {"axis": spec.axis, "value": value}
    try:
        cfg = spec.cell_config(value, scheme)
        exotic = None
        if scheme == "tact" and not cfg.learner.transfer_snapshot:
            _, snap = train_source(spec.source_config(cfg), seed + spec.source_seed_offset)
            exotic = import_policy(snap, len(cfg.stations()))
        res = run(cfg, seed=seed, exotic=exotic)
        row.update(res.summary)
        row["status"] = "ok"
    except (OverloadError, ConfigError, ValueError) as exc:
        log.warning("sweep cell %s=%r scheme=%s seed=%s failed: %s", spec.axis, value, scheme, seed, exc)
        row.update({"scheme": scheme, "seed": seed, "status": f"error: {exc}"})
    return row


def sweep(spec: SweepSpec, out_dir=None, jobs: int = 1) -> list[dict]:
    cells = [(v, s, seed) for v in spec.values for s in spec.schemes for seed in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, [spec] * len(cells), *zip(*cells)))
    else:
        rows = [_sweep_cell(spec, *c) for c in cells]
    order = {v: i for i, v in enumerate(sorted(set(spec.values)))}
    rows.sort(key=lambda r: (order[r["value"]], r["scheme"], r["seed"]))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "sweep.csv", rows)
        write_rows(out / "sweep_means.csv", sweep_means(rows, spec.base.output.checkpoints))
    return rows


def sweep_means(rows: list[dict], checkpoints) -> list[dict]:
    """Mean over seeds of the checkpointed CECRs, per (value, scheme)."""
    keys = ["cecr_final"] + [f"cecr_{c}" for c in checkpoints] + ["mean_delay_flows", "cumulative_energy_w"]
    groups: dict = {}
    for r in rows:
        if r.get("status") != "ok":
            continue
        groups.setdefault((r["value"], r["scheme"]), []).append(r)
    out = []
    for (value, scheme), members in groups.items():
        row = {"axis": members[0]["axis"], "value": value, "scheme": scheme, "seeds": len(members)}
        for k in keys:
            vals = [m[k] for m in members if m.get(k, NA) != NA]
            row[k] = float(np.mean(vals)) if vals else NA
        out.append(row)
    return out
