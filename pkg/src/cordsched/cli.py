"""Command-line entry points for the profiling and scheduling pipeline.

Subcommands: workload synth, profile-gen, phase-extract, taskgen,
cord run, experiment, validate. Every option can also come from a YAML
config file (see README); explicit flags override the file, and any
scalar key at the file's top level acts as a shared default.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import yaml

from ._util import derive_seed
from .cordalg import (
    Platform,
    StaticSchedule,
    read_report,
    read_schedule_csv,
    schedule_taskset,
    write_report,
    write_schedule_csv,
)
from .experiment import ExperimentConfig, run_experiment, write_results
from .genprofile import (
    DEFAULT_BETA_WEIGHT,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    conditional_series,
    profile_from_conditionals,
    snapshot_grid,
    solve_profiles,
)
from .phases import (
    DEFAULT_K_RANGE,
    bank_from_ground_truth,
    bank_from_profiles,
    load_bank,
    save_bank,
)
from .plotting import plot_profile_overlay, plot_schedulability
from .taskgen import TasksetConfig, gen_taskset, load_taskset, save_taskset
from .validate import validate_schedule
from .workload import (
    Budget,
    ProfileSet,
    default_workloads,
    dump_workload_specs,
    load_workload_specs,
    read_profiles,
    sample_profile,
    write_profiles,
)

# Budget values making up the default training subset of the grid.
TRAINED_VALUES = (1, 5, 10, 15, 20)

WEIGHTS_HEADER = ["beta_cache", "beta_bw", "t_ms", "instr", "cache_req",
                  "cache_miss", "weight"]


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------

def _parse_budget(text: str) -> Budget:
    try:
        c, b = str(text).split(",")
        return Budget(int(c), int(b))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected CACHE,BW integers, got {text!r}") from None


def _budget_value(val) -> Budget:
    """Budget from a flag value, a config string, or a config pair."""
    if isinstance(val, Budget):
        return val
    if isinstance(val, str):
        c, b = val.split(",")
        return Budget(int(c), int(b))
    if isinstance(val, (list, tuple)) and len(val) == 2:
        return Budget(int(val[0]), int(val[1]))
    raise ValueError(f"bad budget value {val!r}, expected CACHE,BW")


def _budget_list(val, r_max: Budget) -> list[Budget]:
    """'all', 'trained', a 'C,B;C,B' string, or a config list of pairs."""
    if isinstance(val, (list, tuple)):
        return [_budget_value(v) for v in val]
    text = str(val).strip()
    if text == "all":
        return [Budget(c, b)
                for c in range(1, r_max.cache + 1)
                for b in range(1, r_max.bw + 1)]
    if text == "trained":
        cs = [v for v in TRAINED_VALUES if v <= r_max.cache]
        bs = [v for v in TRAINED_VALUES if v <= r_max.bw]
        return [Budget(c, b) for c in cs for b in bs]
    out = [_budget_value(part) for part in text.split(";") if part.strip()]
    if not out:
        raise ValueError(f"no budgets in {val!r}")
    return out


def _float_list(val) -> list[float]:
    if isinstance(val, (list, tuple)):
        return [float(v) for v in val]
    return [float(v) for v in str(val).split(",") if str(v).strip()]


def _name_list(val) -> list[str]:
    if isinstance(val, (list, tuple)):
        return [str(v) for v in val]
    return [v.strip() for v in str(val).split(",") if v.strip()]


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a mapping: {path}")
    return data


class Options:
    """Layered option lookup for one subcommand.

    Priority: explicit flag, then the subcommand's config section, then
    a scalar top-level config key, then the built-in default.
    """

    def __init__(self, args, section: str):
        self.args = args
        config = _load_config(getattr(args, "config", None))
        self.top = {k: v for k, v in config.items()
                    if not isinstance(v, dict)}
        sect = config.get(section, {}) or {}
        if not isinstance(sect, dict):
            raise ValueError(f"config section {section!r} must be a mapping")
        self.section = sect

    def get(self, name: str, default=None):
        val = getattr(self.args, name, None)
        if val is not None:
            return val
        if name in self.section:
            return self.section[name]
        if name in self.top:
            return self.top[name]
        return default

    def require(self, name: str):
        val = self.get(name)
        if val is None:
            flag = "--" + name.replace("_", "-")
            raise ValueError(
                f"missing required option {flag} (or config key {name!r})")
        return val

    def budget(self, name: str, default: Budget) -> Budget:
        return _budget_value(self.get(name, default))


def _ensure_parent(path) -> Path:
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _load_bank_arg(val, r_max: Budget):
    """Load a model bank for the platform grid.

    A .json path is a phase-model bank file and must match the grid
    exactly; a .yaml/.yml path is a ground-truth workload spec,
    converted to an exact bank at the grid. None falls back to the
    built-in workload set.
    """
    if val is None:
        return bank_from_ground_truth(default_workloads(), r_max)
    path = str(val)
    if path.endswith((".yaml", ".yml")):
        return bank_from_ground_truth(load_workload_specs(path), r_max)
    bank = load_bank(path)
    if bank.r_max != r_max:
        raise ValueError(
            f"bank grid {tuple(bank.r_max)} does not match platform "
            f"r_max {tuple(r_max)}")
    return bank


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_workload_synth(args) -> int:
    """Sample measured profile CSVs from ground-truth workloads."""
    opts = Options(args, "workload_synth")
    r_max = opts.budget("r_max", Budget(8, 8))
    spec_path = opts.get("spec")
    if spec_path:
        workloads = load_workload_specs(spec_path)
    else:
        workloads = default_workloads(float(opts.get("noise", 0.0)))
    names = opts.get("workloads")
    if names:
        keep = _name_list(names)
        missing = [n for n in keep if n not in workloads]
        if missing:
            raise ValueError(f"unknown workloads: {', '.join(missing)}")
        workloads = {n: workloads[n] for n in keep}
    budgets = _budget_list(opts.get("budgets", "trained"), r_max)
    for b in budgets:
        if not r_max.covers(b):
            raise ValueError(f"budget {tuple(b)} outside grid {tuple(r_max)}")
    runs = int(opts.get("runs", 1))
    interval = float(opts.get("interval_ms", 10)) / 1000.0
    seed = int(opts.get("seed", 0))
    out_dir = Path(opts.get("out_dir", "profiles"))
    out_dir.mkdir(parents=True, exist_ok=True)
    emit = opts.get("emit_spec")
    if emit:
        dump_workload_specs(_ensure_parent(emit),
                            [workloads[n] for n in sorted(workloads)])
        print(f"wrote {emit}")
    for name in sorted(workloads):
        wl = workloads[name]
        profs = []
        for b in budgets:
            for j in range(runs):
                sub = derive_seed(seed, "measure", name, b.cache, b.bw, j)
                profs.append(sample_profile(
                    wl, b, sub, run_id=f"{name}-c{b.cache}b{b.bw}-r{j}",
                    interval=interval))
        pset = ProfileSet(workload=name, r_max=r_max, interval=interval,
                          profiles=profs)
        path = out_dir / f"{name}.csv"
        write_profiles(path, pset)
        print(f"wrote {path} ({len(budgets)} budgets x {runs} runs)")
    return 0


def cmd_profile_gen(args) -> int:
    """Solve the transport chain for one profile set and emit synthetic
    profiles at the requested budgets, plus a per-time weights dump."""
    opts = Options(args, "profile_gen")
    pset = read_profiles(opts.require("profiles"))
    r_max = pset.r_max
    budgets = _budget_list(opts.get("budgets", "all"), r_max)
    modes = _name_list(opts.get("modes", "ml,mean"))
    for md in modes:
        if md not in ("ml", "mean"):
            raise ValueError(f"mode must be ml or mean, got {md!r}")
    snapshot = float(opts.get("snapshot_ms", 50)) / 1000.0
    interval_ms = opts.get("interval_ms")
    interval = (float(interval_ms) / 1000.0 if interval_ms is not None
                else pset.interval)
    epsilon = opts.get("epsilon")
    bandwidth = opts.get("bandwidth")
    sol = solve_profiles(
        pset,
        snapshot_times=snapshot_grid(pset, snapshot),
        epsilon=None if epsilon is None else float(epsilon),
        beta_weight=float(opts.get("beta_weight", DEFAULT_BETA_WEIGHT)),
        tol=float(opts.get("tol", DEFAULT_TOL)),
        max_iter=int(opts.get("max_iter", DEFAULT_MAX_ITER)),
    )
    if opts.get("verbose"):
        hist = ", ".join(f"{r:.2e}" for r in sol.residual_history[-5:])
        print(f"solver: {sol.iterations} iterations, "
              f"residual {sol.residual:.3e} (last: {hist})")
    out_dir = Path(opts.get("out_dir", "synthetic"))
    out_dir.mkdir(parents=True, exist_ok=True)
    bw = None if bandwidth is None else float(bandwidth)
    weight_rows = []
    generated = []
    for b in budgets:
        conds = conditional_series(sol, [b.cache, b.bw], interval=interval,
                                   bandwidth=bw)
        runs = [profile_from_conditionals(conds, [b.cache, b.bw], mode=md,
                                          interval=interval,
                                          workload=pset.workload).profile
                for md in modes]
        generated.extend(runs)
        out_set = ProfileSet(workload=pset.workload, r_max=r_max,
                             interval=interval, profiles=runs)
        path = out_dir / f"{pset.workload}_c{b.cache}b{b.bw}.csv"
        write_profiles(path, out_set)
        print(f"wrote {path} ({', '.join(modes)})")
        for cond in conds:
            for pt, wgt in zip(cond.points, cond.weights):
                weight_rows.append([b.cache, b.bw, round(cond.time * 1000),
                                    f"{pt[0]:.6g}", f"{pt[1]:.6g}",
                                    f"{pt[2]:.6g}", f"{wgt:.8g}"])
    weights_path = _ensure_parent(
        opts.get("weights_out", out_dir / f"{pset.workload}_weights.csv"))
    with open(weights_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WEIGHTS_HEADER)
        w.writerows(weight_rows)
    print(f"wrote {weights_path} ({len(weight_rows)} support points)")
    figure = opts.get("figure")
    if figure:
        plot_profile_overlay(generated, _ensure_parent(figure),
                             title=pset.workload)
        print(f"wrote {figure}")
    return 0


def cmd_phase_extract(args) -> int:
    """Extract phase models from profile CSVs into a bank file."""
    opts = Options(args, "phase_extract")
    paths = opts.require("profiles")
    if isinstance(paths, str):
        paths = [paths]
    r_max = opts.budget("r_max", Budget(8, 8))
    k_min = int(opts.get("k_min", DEFAULT_K_RANGE[0]))
    k_max = int(opts.get("k_max", DEFAULT_K_RANGE[1]))
    run_filter = opts.get("run_filter")
    seed = int(opts.get("seed", 0))
    selected = []
    seen = set()
    for path in paths:
        ps = read_profiles(path)
        if ps.r_max != r_max:
            raise ValueError(
                f"{path}: grid {tuple(ps.r_max)} does not match r_max "
                f"{tuple(r_max)}")
        for prof in ps.profiles:
            if run_filter and run_filter not in prof.run_id:
                continue
            key = (prof.workload, prof.budget)
            if key in seen:
                continue        # keep the first run per (workload, budget)
            seen.add(key)
            selected.append(prof)
    if not selected:
        raise ValueError("no profiles selected (check --run-filter)")
    # Lookahead tables need every neighbor budget, so the profiles must
    # cover the full grid per workload; fail before the slow extraction.
    grid = [Budget(c, b)
            for c in range(1, r_max.cache + 1)
            for b in range(1, r_max.bw + 1)]
    by_wl: dict = {}
    for prof in selected:
        by_wl.setdefault(prof.workload, set()).add(prof.budget)
    for wl in sorted(by_wl):
        gaps = [b for b in grid if b not in by_wl[wl]]
        if gaps:
            raise ValueError(
                f"workload {wl!r} missing {len(gaps)} of {len(grid)} grid "
                f"budgets (first {tuple(gaps[0])})")
    bank = bank_from_profiles(selected, r_max, k_range=(k_min, k_max),
                              seed=seed)
    out = _ensure_parent(opts.get("out", "bank.json"))
    save_bank(out, bank)
    print(f"wrote {out} ({len(bank.models)} models, "
          f"{len(bank.workloads())} workloads)")
    return 0


def cmd_taskgen(args) -> int:
    """Generate taskset files, optionally over a utilization sweep."""
    opts = Options(args, "taskgen")
    m = int(opts.get("m", 4))
    r_max = opts.budget("r_max", Budget(8, 8))
    bank = _load_bank_arg(opts.get("bank"), r_max)
    p = float(opts.get("p", 0.5))
    n_tasks = int(opts.get("n_tasks", 5))
    depth = _float_list(opts.get("depth", "3,8"))
    if len(depth) != 2:
        raise ValueError("depth must be LO,HI")
    width_cap = int(opts.get("width_cap", 4))
    seed = int(opts.get("seed", 0))
    count = int(opts.get("count", 1))
    u_start = opts.get("u_start")
    if u_start is not None:
        u_stop = float(opts.require("u_stop"))
        u_step = float(opts.get("u_step", 0.2))
        n = int((u_stop - float(u_start)) / u_step + 1e-9)
        targets = [round(float(u_start) + i * u_step, 9) for i in range(n + 1)]
    else:
        targets = [float(opts.require("utilization"))]
    single = len(targets) == 1 and count == 1 and opts.get("out") is not None
    out_dir = Path(opts.get("out_dir", "tasksets"))
    if not single:
        out_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for u in targets:
        for j in range(count):
            cfg = TasksetConfig(
                utilization=u, edge_prob=p, n_tasks=n_tasks,
                depth_range=(int(depth[0]), int(depth[1])),
                width_cap=width_cap,
                seed=derive_seed(seed, "taskgen", f"{p:.6f}", f"{u:.6f}", j))
            ts = gen_taskset(cfg, bank, m=m)
            if single:
                path = _ensure_parent(opts.get("out"))
            else:
                path = out_dir / f"taskset_p{p:g}_u{u:g}_{j}.json"
            save_taskset(ts, path)
            written += 1
            if opts.get("verbose"):
                print(f"wrote {path} ({len(ts.tasks)} tasks)")
    where = opts.get("out") if single else out_dir
    print(f"wrote {written} taskset(s) to {where}")
    return 0


def cmd_cord_run(args) -> int:
    """Schedule one taskset and write the schedule CSV plus report."""
    opts = Options(args, "cord_run")
    m = int(opts.get("m", 4))
    r_max = opts.budget("r_max", Budget(8, 8))
    platform = Platform(m, r_max)
    bank = _load_bank_arg(opts.get("bank"), r_max)
    ts = load_taskset(opts.require("taskset"))
    mode = str(opts.get("mode", "deadline-aware"))
    sched = schedule_taskset(ts, bank, platform, mode)
    out = _ensure_parent(opts.get("out", "schedule.csv"))
    report_path = opts.get("report")
    if report_path is None:
        report_path = out.with_suffix(".json")
        if report_path == out:
            raise ValueError("give --report when --out ends in .json")
    write_schedule_csv(sched, out)
    write_report(sched, _ensure_parent(report_path))
    print(f"schedulable: {'yes' if sched.schedulable else 'no'}")
    print(f"wrote {out} ({len(sched.segments)} segments) and {report_path}")
    if opts.get("verbose") and sched.diagnostics:
        for key in sorted(sched.diagnostics):
            print(f"  {key}: {sched.diagnostics[key]}")
    return 0


def cmd_experiment(args) -> int:
    """Run a schedulability sweep and write results plus figures."""
    opts = Options(args, "experiment")
    m = int(opts.get("m", 4))
    r_max = opts.budget("r_max", Budget(8, 8))
    modes = tuple(_name_list(opts.get("modes", "decomp,cord-greedy,cord-da")))
    cfg = ExperimentConfig(
        m=m, r_max=r_max,
        p_values=tuple(_float_list(opts.get("p_values", "0.5"))),
        u_start=float(opts.get("u_start", 0.2)),
        u_stop=float(opts.get("u_stop", 5.0)),
        u_step=float(opts.get("u_step", 0.2)),
        per_step=int(opts.get("per_step", 200)),
        seed=int(opts.get("seed", 0)),
        modes=modes,
        timing=bool(opts.get("timing", True)),
    )
    bank = _load_bank_arg(opts.get("bank"), r_max)
    gen_path = opts.get("gen_bank")
    gen_bank = None if gen_path is None else _load_bank_arg(gen_path, r_max)
    rows = run_experiment(cfg, bank, gen_bank=gen_bank)
    out = _ensure_parent(opts.get("out", "results.csv"))
    write_results(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    if opts.get("figures", True):
        for path in plot_schedulability(rows, out.parent or Path(".")):
            print(f"wrote {path}")
    return 0


def cmd_validate(args) -> int:
    """Check a schedule CSV plus report against its taskset and bank."""
    opts = Options(args, "validate")
    m = int(opts.get("m", 4))
    r_max = opts.budget("r_max", Budget(8, 8))
    platform = Platform(m, r_max)
    bank = _load_bank_arg(opts.get("bank"), r_max)
    ts = load_taskset(opts.require("taskset"))
    sched_path = Path(opts.require("schedule"))
    report_path = opts.get("report", sched_path.with_suffix(".json"))
    try:
        segments = read_schedule_csv(sched_path)
        report = read_report(report_path)
    except ValueError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    for key in ("schedulable", "subtasks"):
        if key not in report:
            print(f"format error: report missing {key!r}", file=sys.stderr)
            return 2
    schedule = StaticSchedule(
        segments=segments, schedulable=bool(report["schedulable"]),
        report=report["subtasks"],
        diagnostics=report.get("diagnostics", {}))
    result = validate_schedule(schedule, ts, bank, platform)
    if result.passed:
        print("PASS: schedule is consistent with the taskset and bank")
        return 0
    for v in result.violations:
        print(str(v))
    print(f"FAIL: {len(result.violations)} violation(s)")
    return 2


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="YAML config file; flags override its values")
    common.add_argument("--verbose", action="store_true", default=None,
                        help="print extra diagnostics")

    ap = argparse.ArgumentParser(
        prog="cordsched",
        description="Generative resource profiling and resource/deadline "
                    "co-allocation for DAG tasks.")
    sub = ap.add_subparsers(dest="command", required=True)

    wl = sub.add_parser("workload", help="ground-truth workload tools")
    wl_sub = wl.add_subparsers(dest="subcommand", required=True)
    ws = wl_sub.add_parser(
        "synth", parents=[common],
        help="sample measured profile CSVs from ground-truth workloads")
    ws.add_argument("--spec", help="workload spec YAML (default: built-ins)")
    ws.add_argument("--noise", type=float,
                    help="noise level for the built-in workloads")
    ws.add_argument("--workloads", help="comma-separated subset to sample")
    ws.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    ws.add_argument("--budgets",
                    help="'trained', 'all', or 'C,B;C,B;...' (default trained)")
    ws.add_argument("--runs", type=int, help="runs per budget (default 1)")
    ws.add_argument("--interval-ms", type=float,
                    help="sample interval in ms (default 10)")
    ws.add_argument("--seed", type=int)
    ws.add_argument("--out-dir", help="output directory (default profiles)")
    ws.add_argument("--emit-spec", help="also write the spec used here")
    ws.set_defaults(func=cmd_workload_synth)

    pg = sub.add_parser(
        "profile-gen", parents=[common],
        help="generate synthetic profiles at unseen budgets")
    pg.add_argument("--profiles", help="measured ProfileSet CSV")
    pg.add_argument("--budgets", help="'all', 'trained', or 'C,B;...'")
    pg.add_argument("--modes", help="ml, mean, or ml,mean (default both)")
    pg.add_argument("--epsilon", type=float, help="entropic regularization")
    pg.add_argument("--tol", type=float, help="solver tolerance")
    pg.add_argument("--max-iter", type=int)
    pg.add_argument("--beta-weight", type=float,
                    help="budget-dimension cost weight")
    pg.add_argument("--bandwidth", type=float,
                    help="budget kernel bandwidth for unseen budgets")
    pg.add_argument("--snapshot-ms", type=float,
                    help="marginal snapshot spacing (default 50)")
    pg.add_argument("--interval-ms", type=float,
                    help="output sample interval (default: input interval)")
    pg.add_argument("--out-dir", help="output directory (default synthetic)")
    pg.add_argument("--weights-out", help="per-time weights CSV path")
    pg.add_argument("--figure", help="render an overlay figure to this path")
    pg.set_defaults(func=cmd_profile_gen)

    pe = sub.add_parser(
        "phase-extract", parents=[common],
        help="extract phase models from profile CSVs into a bank file")
    pe.add_argument("--profiles", nargs="+", help="profile CSV paths")
    pe.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    pe.add_argument("--k-min", type=int, help="smallest phase count tried")
    pe.add_argument("--k-max", type=int, help="largest phase count tried")
    pe.add_argument("--run-filter",
                    help="only use runs whose id contains this substring")
    pe.add_argument("--seed", type=int)
    pe.add_argument("--out", help="bank file path (default bank.json)")
    pe.set_defaults(func=cmd_phase_extract)

    tg = sub.add_parser("taskgen", parents=[common],
                        help="generate random DAG taskset files")
    tg.add_argument("--bank", help="bank .json or workload spec .yaml")
    tg.add_argument("--m", type=int, help="core count (default 4)")
    tg.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    tg.add_argument("--utilization", type=float, help="taskset utilization")
    tg.add_argument("--u-start", type=float, help="sweep start")
    tg.add_argument("--u-stop", type=float, help="sweep stop")
    tg.add_argument("--u-step", type=float, help="sweep step (default 0.2)")
    tg.add_argument("--count", type=int, help="tasksets per point (default 1)")
    tg.add_argument("--p", type=float, help="edge probability (default 0.5)")
    tg.add_argument("--n-tasks", type=int, help="tasks per set (default 5)")
    tg.add_argument("--depth", help="DAG depth range LO,HI (default 3,8)")
    tg.add_argument("--width-cap", type=int, help="layer width cap")
    tg.add_argument("--seed", type=int)
    tg.add_argument("--out", help="output path for a single taskset")
    tg.add_argument("--out-dir", help="output directory for sweeps")
    tg.set_defaults(func=cmd_taskgen)

    cd = sub.add_parser("cord", help="scheduler commands")
    cd_sub = cd.add_subparsers(dest="subcommand", required=True)
    cr = cd_sub.add_parser("run", parents=[common],
                           help="schedule a taskset file")
    cr.add_argument("--taskset", help="taskset JSON path")
    cr.add_argument("--bank", help="bank .json or workload spec .yaml")
    cr.add_argument("--m", type=int, help="core count (default 4)")
    cr.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    cr.add_argument("--mode", choices=["greedy", "deadline-aware"],
                    help="base allocation mode (default deadline-aware)")
    cr.add_argument("--out", help="schedule CSV path (default schedule.csv)")
    cr.add_argument("--report", help="report JSON path (default: CSV stem)")
    cr.set_defaults(func=cmd_cord_run)

    ex = sub.add_parser("experiment", parents=[common],
                        help="run a schedulability sweep")
    ex.add_argument("--bank", help="bank .json or workload spec .yaml")
    ex.add_argument("--gen-bank",
                    help="bank for the cord-gen mode (same formats)")
    ex.add_argument("--m", type=int, help="core count (default 4)")
    ex.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    ex.add_argument("--p-values", help="edge probabilities, e.g. 0.25,0.5")
    ex.add_argument("--u-start", type=float)
    ex.add_argument("--u-stop", type=float)
    ex.add_argument("--u-step", type=float)
    ex.add_argument("--per-step", type=int, help="tasksets per step")
    ex.add_argument("--modes", help="subset of decomp,cord-greedy,cord-da,"
                                    "cord-gen")
    ex.add_argument("--seed", type=int)
    ex.add_argument("--timing", action=argparse.BooleanOptionalAction,
                    default=None,
                    help="--no-timing zeroes runtime columns for "
                         "byte-identical reruns")
    ex.add_argument("--figures", action=argparse.BooleanOptionalAction,
                    default=None,
                    help="render schedulability figures next to the CSV")
    ex.add_argument("--out", help="results CSV path (default results.csv)")
    ex.set_defaults(func=cmd_experiment)

    va = sub.add_parser("validate", parents=[common],
                        help="check a schedule against taskset and bank")
    va.add_argument("--schedule", help="schedule CSV path")
    va.add_argument("--report",
                    help="report JSON path (default: the schedule path "
                         "with a .json suffix)")
    va.add_argument("--taskset", help="taskset JSON path")
    va.add_argument("--bank", help="bank .json or workload spec .yaml")
    va.add_argument("--m", type=int, help="core count (default 4)")
    va.add_argument("--r-max", type=_parse_budget, help="platform grid C,B")
    va.set_defaults(func=cmd_validate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
