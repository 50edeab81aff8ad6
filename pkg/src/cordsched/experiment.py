"""Schedulability sweeps comparing allocation policies.

One sweep draws a common pool of random tasksets per (edge
probability, utilization) cell and runs every enabled mode on the same
tasksets, so mode columns are paired. Results land in a tidy CSV, one
row per (mode, p, utilization).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

from ._util import derive_seed
from .baseline import decomp_schedulable
from .cordalg import Platform, schedule_taskset
from .phases import ModelBank
from .taskgen import TasksetConfig, gen_taskset
from .workload import Budget

ALL_MODES = ("decomp", "cord-greedy", "cord-da", "cord-gen")
RESULT_HEADER = ["mode", "p", "utilization", "fraction_schedulable",
                 "mean_runtime_ms", "max_runtime_ms"]


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 4
    r_max: Budget = Budget(8, 8)
    p_values: tuple = (0.5,)
    u_start: float = 0.2
    u_stop: float = 5.0
    u_step: float = 0.2
    per_step: int = 200
    seed: int = 0
    modes: tuple = ("decomp", "cord-greedy", "cord-da")
    timing: bool = True

    def __post_init__(self) -> None:
        if self.u_step <= 0:
            raise ValueError("utilization step must be positive")
        if self.u_stop < self.u_start:
            raise ValueError("empty utilization range")
        if self.per_step < 1:
            raise ValueError("need at least one taskset per step")
        for mode in self.modes:
            if mode not in ALL_MODES:
                raise ValueError(f"unknown mode {mode!r}")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"edge probability {p} outside [0, 1]")

    def utilizations(self) -> tuple:
        n = int((self.u_stop - self.u_start) / self.u_step + 1e-9)
        return tuple(round(self.u_start + i * self.u_step, 9)
                     for i in range(n + 1))


@dataclass(frozen=True)
class ResultRow:
    mode: str
    p: float
    utilization: float
    fraction_schedulable: float
    mean_runtime_ms: float
    max_runtime_ms: float


def _run_mode(mode, taskset, platform, bank, gen_bank):
    if mode == "decomp":
        return decomp_schedulable(taskset, platform, bank)
    if mode == "cord-greedy":
        return schedule_taskset(taskset, bank, platform, "greedy").schedulable
    if mode == "cord-da":
        return schedule_taskset(taskset, bank, platform,
                                "deadline-aware").schedulable
    return schedule_taskset(taskset, gen_bank, platform,
                            "deadline-aware").schedulable


def run_experiment(config: ExperimentConfig, bank: ModelBank,
                   gen_bank: ModelBank = None) -> list:
    """One row per (mode, p, utilization), sorted; deterministic under
    the config seed (timings aside; disable them for byte-stable runs)."""
    if "cord-gen" in config.modes and gen_bank is None:
        raise ValueError("cord-gen mode needs a generated-model bank")
    platform = Platform(config.m, config.r_max)
    rows = []
    for p in config.p_values:
        for u in config.utilizations():
            tasksets = []
            for j in range(config.per_step):
                seed = derive_seed(config.seed, "taskset",
                                   f"{p:.6f}", f"{u:.6f}", j)
                tasksets.append(gen_taskset(
                    TasksetConfig(utilization=u, edge_prob=p, seed=seed),
                    bank, m=config.m))
            for mode in config.modes:
                passed = 0
                times = []
                for ts in tasksets:
                    t0 = time.perf_counter()
                    ok = _run_mode(mode, ts, platform, bank, gen_bank)
                    times.append((time.perf_counter() - t0) * 1e3)
                    passed += bool(ok)
                if config.timing:
                    mean_ms, max_ms = sum(times) / len(times), max(times)
                else:
                    mean_ms, max_ms = 0.0, 0.0
                rows.append(ResultRow(mode, p, u,
                                      passed / config.per_step,
                                      mean_ms, max_ms))
    return sorted(rows, key=lambda r: (r.mode, r.p, r.utilization))


def write_results(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([r.mode, f"{r.p:g}", f"{r.utilization:g}",
                        f"{r.fraction_schedulable:.6f}",
                        f"{r.mean_runtime_ms:.3f}",
                        f"{r.max_runtime_ms:.3f}"])


def read_results(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != RESULT_HEADER:
            raise ValueError(f"bad results header: {header}")
        for row in rd:
            if len(row) != len(RESULT_HEADER):
                raise ValueError(f"bad results row: {row}")
            rows.append(ResultRow(row[0], float(row[1]), float(row[2]),
                                  float(row[3]), float(row[4]),
                                  float(row[5])))
    return rows


def strip_timing(rows) -> list:
    return [replace(r, mean_runtime_ms=0.0, max_runtime_ms=0.0)
            for r in rows]
