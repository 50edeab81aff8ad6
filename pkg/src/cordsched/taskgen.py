"""Random layered-DAG taskset generation for schedulability experiments.

Tasksets follow the usual layered recipe. Per-task utilizations come
from UUniFast-Discard; each task is a DAG of 3 to 8 layers with at most
4 nodes per layer and Bernoulli(p) edges from a node to nodes in lower
layers; node workloads are drawn uniformly from a model bank; the period
is the summed reference WCET divided by the task utilization, rounded to
the nearest power of two (linear distance, ties toward the lower power)
so that hyper-periods stay manageable.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._util import TICKS_PER_SEC, derive_seed
from .phases import ModelBank
from .workload import Budget

log = logging.getLogger(__name__)

DEFAULT_DEPTH_RANGE = (3, 8)
DEFAULT_WIDTH_CAP = 4
# periods are clamped to powers of two in this range (seconds)
MIN_PERIOD_SEC = 1.0
MAX_PERIOD_SEC = 16.0


@dataclass(frozen=True)
class TasksetConfig:
    """Knobs for one generated taskset."""

    utilization: float
    edge_prob: float = 0.5
    n_tasks: int = 5
    depth_range: tuple = DEFAULT_DEPTH_RANGE
    width_cap: int = DEFAULT_WIDTH_CAP
    period_bounds: tuple = (MIN_PERIOD_SEC, MAX_PERIOD_SEC)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in [0, 1]")
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be at least 1")
        lo, hi = self.depth_range
        if lo < 1 or hi < lo:
            raise ValueError("bad depth range")
        if self.width_cap < 1:
            raise ValueError("width_cap must be at least 1")
        if self.utilization < 0:
            raise ValueError("utilization must be non-negative")


@dataclass
class DagTask:
    """One periodic DAG task with workload-bound subtask nodes."""

    id: str
    period: int                      # ticks
    deadline: int                    # ticks, implicit deadline = period
    utilization: float               # target before period rounding
    layers: list                     # list of lists of node names
    workloads: dict                  # node -> workload name
    edges: list                      # (src, dst) node-name pairs
    ref_wcets: dict                  # node -> seconds at the reference budget

    @property
    def nodes(self) -> list:
        return [n for layer in self.layers for n in layer]

    def predecessors(self) -> dict:
        preds = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            preds[dst].append(src)
        return {n: sorted(ps) for n, ps in preds.items()}

    def successors(self) -> dict:
        succs = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            succs[src].append(dst)
        return {n: sorted(ss) for n, ss in succs.items()}

    def depth(self) -> int:
        return len(self.layers)

    def actual_utilization(self) -> float:
        """Utilization after period rounding."""
        return sum(self.ref_wcets.values()) / (self.period / TICKS_PER_SEC)

    def check(self) -> None:
        nodes = self.nodes
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node names")
        layer_of = {n: i for i, layer in enumerate(self.layers)
                    for n in layer}
        for src, dst in self.edges:
            # edges must point to a strictly lower layer: acyclic by layout
            if layer_of[src] >= layer_of[dst]:
                raise ValueError(f"edge {src}->{dst} not downward")
        if any(len(layer) == 0 for layer in self.layers):
            raise ValueError("empty layer")
        if self.period <= 0:
            raise ValueError("period must be positive")


@dataclass
class TaskSet:
    tasks: list
    target_utilization: float
    edge_prob: float
    seed: int
    ref_budget: Budget

    def check(self) -> None:
        for task in self.tasks:
            task.check()
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task ids")


@dataclass
class AnchorSet:
    """Fixed instance release points per task over one hyper-period."""

    hyperperiod: int                 # ticks
    by_task: dict                    # task id -> tuple of anchor ticks

    def all_points(self) -> tuple:
        pts = set()
        for anchors_i in self.by_task.values():
            pts.update(anchors_i)
        return tuple(sorted(pts))


def uunifast_discard_many(n: int, u_total: float, count: int, rng,
                          max_attempts: int = 500_000_000):
    """count rows of n utilizations, each row summing to u_total.

    Classic UUniFast stick-breaking with whole-vector resampling whenever
    any component exceeds 1; the accepted law is uniform on the boxed
    simplex {0 <= u <= 1, sum u = U}. That set is symmetric under
    u -> 1 - u with total n - U, so for totals above n/2 the draw runs on
    the complement side where the discard acceptance rate is tractable
    (near U = n it collapses like ((n-U)/U)**(n-1) otherwise). The
    boundary totals 0 and n short-circuit.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if u_total > n:
        raise ValueError(f"total utilization {u_total} exceeds n={n}")
    if u_total < 0:
        raise ValueError("total utilization must be non-negative")
    rng = np.random.default_rng(rng)
    if u_total == 0:
        return np.zeros((count, n))
    if u_total == n:
        return np.ones((count, n))
    flip = u_total > n / 2
    total0 = n - u_total if flip else u_total
    rows, got, attempts, chunk = [], 0, 0, 16_384
    while got < count:
        attempts += chunk
        if attempts > max_attempts:
            raise RuntimeError("UUniFast-Discard failed to draw enough "
                               f"feasible vectors (n={n}, U={u_total})")
        r = rng.random((chunk, n - 1)) if n > 1 else np.empty((chunk, 0))
        out = np.empty((chunk, n))
        total = np.full(chunk, float(total0))
        for i in range(1, n):
            nxt = total * r[:, i - 1] ** (1.0 / (n - i))
            out[:, i - 1] = total - nxt
            total = nxt
        out[:, n - 1] = total
        good = out[np.all(out <= 1.0, axis=1)]
        if len(good):
            rows.append(1.0 - good if flip else good)
            got += len(good)
        chunk = min(chunk * 2, 1_048_576)
    return np.concatenate(rows)[:count]


def uunifast_discard(n: int, u_total: float, rng):
    """One vector of n task utilizations summing to u_total, each <= 1."""
    return uunifast_discard_many(n, u_total, 1, rng)[0]


def nearest_power_of_two(x: float) -> float:
    """Closest 2**k to x by linear distance; ties pick the lower power."""
    if x <= 0:
        raise ValueError("need a positive value")
    k = math.floor(math.log2(x))
    lo, hi = 2.0 ** k, 2.0 ** (k + 1)
    # the log floor can land one off at representation boundaries
    while lo > x:
        lo, hi = lo / 2, lo
    while hi < x:
        lo, hi = hi, hi * 2
    return lo if x - lo <= hi - x else hi


def reference_budget(m: int, r_max: Budget) -> Budget:
    """Even per-core split of the platform budget, floored to integers."""
    ref = Budget(r_max.cache // m, r_max.bw // m)
    if ref.cache < 1 or ref.bw < 1:
        raise ValueError(f"platform too small for an even split over {m} cores")
    rem = r_max.minus(Budget(ref.cache * m, ref.bw * m))
    if rem.total() > 0:
        log.debug("even split leaves %s partitions unassigned", rem)
    return ref


def _gen_dag(task_id: str, utilization: float, rng, config: TasksetConfig,
             names: list, bank: ModelBank, ref: Budget) -> DagTask:
    lo, hi = config.depth_range
    depth = int(rng.integers(lo, hi + 1))
    widths = [int(rng.integers(1, config.width_cap + 1)) for _ in range(depth)]
    layers, counter = [], 0
    for w in widths:
        layers.append([f"v{counter + j}" for j in range(w)])
        counter += w
    edges = []
    for i in range(depth):
        for src in layers[i]:
            for j in range(i + 1, depth):
                for dst in layers[j]:
                    if rng.random() < config.edge_prob:
                        edges.append((src, dst))
    # orphan fixup: every node must lie on some source-to-sink path
    incoming = {dst for _, dst in edges}
    for i in range(1, depth):
        for node in layers[i]:
            if node not in incoming:
                src = layers[i - 1][int(rng.integers(0, len(layers[i - 1])))]
                edges.append((src, node))
                incoming.add(node)
    outgoing = {src for src, _ in edges}
    for i in range(depth - 1):
        for node in layers[i]:
            if node not in outgoing:
                dst = layers[i + 1][int(rng.integers(0, len(layers[i + 1])))]
                edges.append((node, dst))
                outgoing.add(node)

    workloads = {n: names[int(rng.integers(0, len(names)))]
                 for layer in layers for n in layer}
    ref_wcets = {n: bank.get(wl, ref).wcet() for n, wl in workloads.items()}

    raw_period = sum(ref_wcets.values()) / utilization
    p_lo, p_hi = config.period_bounds
    period_sec = min(max(nearest_power_of_two(raw_period), p_lo), p_hi)
    period = round(period_sec * TICKS_PER_SEC)
    task = DagTask(id=task_id, period=period, deadline=period,
                   utilization=utilization, layers=layers,
                   workloads=workloads, edges=edges, ref_wcets=ref_wcets)
    task.check()
    return task


def gen_taskset(config: TasksetConfig, bank: ModelBank,
                ref: Budget | None = None, m: int = 4) -> TaskSet:
    """Generate one taskset against the bank's workloads.

    Tasks that draw a zero utilization are dropped (only possible when
    the target utilization itself is zero). The per-task utilizations
    sum exactly to the target before period rounding; the post-rounding
    deviation is reported via each task's actual_utilization().
    """
    names = sorted(bank.workloads())
    if not names:
        raise ValueError("bank has no workloads")
    if ref is None:
        ref = reference_budget(m, bank.r_max)
    rng = np.random.default_rng(derive_seed(config.seed, "uunifast"))
    utils = uunifast_discard(config.n_tasks, config.utilization, rng)
    tasks = []
    for idx, u in enumerate(utils):
        if u == 0:
            continue
        task_rng = np.random.default_rng(derive_seed(config.seed, "dag", idx))
        tasks.append(_gen_dag(f"t{idx}", float(u), task_rng, config,
                              names, bank, ref))
    ts = TaskSet(tasks=tasks, target_utilization=config.utilization,
                 edge_prob=config.edge_prob, seed=config.seed, ref_budget=ref)
    ts.check()
    return ts


def anchors(taskset: TaskSet):
    """Hyper-period and per-task anchor points (k-1)*P over [0, H)."""
    periods = [t.period for t in taskset.tasks]
    for p in periods:
        if p <= 0:
            raise ValueError("periods must be positive")
    if not periods:
        return 0, AnchorSet(hyperperiod=0, by_task={})
    hyper = math.lcm(*periods)
    by_task = {}
    for task in taskset.tasks:
        count = hyper // task.period
        by_task[task.id] = tuple(k * task.period for k in range(count))
    return hyper, AnchorSet(hyperperiod=hyper, by_task=by_task)


# ---------------------------------------------------------------------------
# taskset files
# ---------------------------------------------------------------------------

def taskset_to_dict(ts: TaskSet) -> dict:
    return {
        "target_utilization": ts.target_utilization,
        "edge_prob": ts.edge_prob,
        "seed": ts.seed,
        "ref_budget": [ts.ref_budget.cache, ts.ref_budget.bw],
        "tasks": [
            {
                "id": t.id,
                "period_us": t.period,
                "deadline_us": t.deadline,
                "utilization": t.utilization,
                "layers": t.layers,
                "workloads": t.workloads,
                "edges": [[s, d] for s, d in t.edges],
                "ref_wcets": t.ref_wcets,
            }
            for t in ts.tasks
        ],
    }


def taskset_from_dict(data: dict) -> TaskSet:
    tasks = []
    for td in data["tasks"]:
        tasks.append(DagTask(
            id=td["id"], period=td["period_us"], deadline=td["deadline_us"],
            utilization=td["utilization"], layers=td["layers"],
            workloads=td["workloads"],
            edges=[tuple(e) for e in td["edges"]],
            ref_wcets=td["ref_wcets"]))
    ts = TaskSet(tasks=tasks,
                 target_utilization=data["target_utilization"],
                 edge_prob=data["edge_prob"], seed=data["seed"],
                 ref_budget=Budget(*data["ref_budget"]))
    ts.check()
    return ts


def save_taskset(ts: TaskSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(taskset_to_dict(ts), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_taskset(path) -> TaskSet:
    with open(path) as fh:
        return taskset_from_dict(json.load(fh))
