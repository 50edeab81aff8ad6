"""Resource-deadline co-allocation over multi-phase execution models.

Scheduling works on one hyper-period of subtask instances. Each instance
carries a base budget, release, and deadline from one of two base
allocation strategies (greedy minimum or deadline-aware shedding from
the platform maximum). The main loop walks decision points: it picks the
m earliest-deadline ready subtasks, sheds budgets to platform capacity,
then iteratively grants spare partitions to whichever ready subtask
gains the most expected rate over the coming segment, shrinking its
deadline by the improvement. Completions, releases, and anchors define
the next decision point.

All schedule times are integer microsecond ticks; completion estimates
round up. Instruction counts are floats with a small relative
forgiveness when they land within rounding dust of a subtask's total,
so tick-rounded segment ends still register as exact completions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

from ._util import TICKS_PER_SEC, ceil_ticks
from .phases import ModelBank, PhaseModel
from .workload import MIN_BUDGET, RESOURCE_TYPES, Budget

# instruction counts within this relative distance of a cap count as done
INS_FORGIVENESS = 1e-9
# a boost must pull the completion estimate at least this far ahead of the
# segment end to justify re-cutting the segment; smaller improvements keep
# the boost and complete on the boundary. Without the threshold the reset
# loop can ratchet the segment end down one microsecond at a time.
RESET_MERGE_TICKS = 1000
# hard stop for pathological decision-point cascades
SEGMENT_CAP = 200_000
# simulation extends past the hyper-period until this multiple
HORIZON_FACTOR = 4

SENTINEL_ID = "-"
SCHEDULE_HEADER = ["seg_start_us", "seg_end_us", "subtask_id",
                   "beta_cache", "beta_bw"]


@dataclass(frozen=True)
class SubtaskInstance:
    """One release of one DAG node within the hyper-period."""

    id: str
    task_id: str
    instance: int                    # k, 1-based
    node: str
    workload: str
    max_ins: float
    predecessors: tuple              # instance-local subtask ids
    successors: tuple
    anchor: int                      # ticks, (k-1)*P
    abs_deadline: int                # ticks, (k-1)*P + D
    base_budget: Budget = None
    release: int = None
    deadline: int = None

    def allocated(self) -> bool:
        return self.base_budget is not None


@dataclass(frozen=True)
class Platform:
    m: int
    r_max: Budget

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("need at least one core")
        # every scheduled subtask must be able to hold the minimum budget
        if not self.r_max.covers(Budget(self.m, self.m)):
            raise ValueError(f"R_max {self.r_max} below m*(1,1) for m={self.m}")


@dataclass(frozen=True)
class ScheduleSegment:
    start: int
    end: int
    entries: tuple                   # ((subtask id, Budget), ...)


@dataclass
class StaticSchedule:
    segments: tuple
    schedulable: bool
    report: dict                     # id -> completion_us / done / met
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# phase-model walkers
# ---------------------------------------------------------------------------

def span_time(model: PhaseModel, start_ins: float, end_ins: float) -> float:
    """Seconds to advance from start_ins to end_ins at the model's rates.

    Counts past the final phase extend at the final phase's rate (models
    extracted from noisy profiles can disagree slightly on the total
    instruction count across budgets).
    """
    if end_ins <= start_ins:
        return 0.0
    phases = model.phases
    if start_ins >= model.max_ins:
        return (end_ins - start_ins) / phases[-1].rate
    i = model.index_at(start_ins)
    total, cur = 0.0, start_ins
    while True:
        hi = phases[i].end_ins if i + 1 < len(phases) else math.inf
        step = min(end_ins, hi)
        total += (step - cur) / phases[i].rate
        cur = step
        if cur >= end_ins:
            return total
        i += 1


def advance_ins(model: PhaseModel, ins: float, duration_sec: float,
                cap: float) -> float:
    """Instruction count reached after duration_sec, capped exactly at cap."""
    forgive = INS_FORGIVENESS * cap
    if ins >= cap - forgive:
        return cap
    if duration_sec <= 0:
        return ins
    phases = model.phases
    if ins >= model.max_ins:
        i = len(phases) - 1
        cur, left = ins, duration_sec
    else:
        i = model.index_at(ins)
        cur, left = ins, duration_sec
    while True:
        hi = phases[i].end_ins if i + 1 < len(phases) else math.inf
        need = (hi - cur) / phases[i].rate
        if need >= left:
            val = cur + phases[i].rate * left
            return cap if val >= cap - forgive else val
        cur = hi
        left -= need
        if cur >= cap - forgive:
            return cap
        i += 1


# ---------------------------------------------------------------------------
# base allocation
# ---------------------------------------------------------------------------

def topological_order(ids, preds: dict) -> list:
    """Kahn's algorithm with id-sorted tie-breaking."""
    pending = {i: len(preds.get(i, ())) for i in ids}
    ready = sorted(i for i, n in pending.items() if n == 0)
    succs = {i: [] for i in ids}
    for i in ids:
        for p in preds.get(i, ()):
            succs[p].append(i)
    order = []
    while ready:
        cur = ready.pop(0)
        order.append(cur)
        opened = []
        for s in succs[cur]:
            pending[s] -= 1
            if pending[s] == 0:
                opened.append(s)
        ready = sorted(ready + opened)
    if len(order) != len(pending):
        raise ValueError("dependency cycle")
    return order


def deadline_shares(ids, preds: dict, costs: dict,
                    deadline_sec: float) -> dict:
    """Per-node share of the DAG deadline, proportional along paths.

    A node's share is deadline * cost / (maximum total cost over all
    source-to-sink paths through it), which equals the minimum
    path-proportional share over those paths. Shares then telescope to
    at most the full deadline along every path.
    """
    order = topological_order(ids, preds)
    succs = {i: [] for i in ids}
    for i in ids:
        for p in preds.get(i, ()):
            succs[p].append(i)
    up, down = {}, {}
    for i in order:
        up[i] = costs[i] + max((up[p] for p in preds.get(i, ())), default=0.0)
    for i in reversed(order):
        down[i] = costs[i] + max((down[s] for s in succs[i]), default=0.0)
    shares = {}
    for i in ids:
        through = up[i] + down[i] - costs[i]
        shares[i] = deadline_sec * costs[i] / through
    return shares


def _shed_budget(bank: ModelBank, workload: str, r_max: Budget,
                 release: int, deadline: int) -> Budget:
    """Remove partitions from r_max, cheapest WCET increase first, while
    release + WCET still meets the deadline. Returns the minimal budget
    the removal order reaches."""
    beta = r_max
    while True:
        best = None
        for rt in RESOURCE_TYPES:          # cache sheds first on ties
            if getattr(beta, rt) <= 1:
                continue
            e_new = bank.get(workload, beta.minus(Budget.unit(rt))).wcet()
            if best is None or e_new < best[0]:
                best = (e_new, rt)
        if best is None or release + ceil_ticks(best[0]) > deadline:
            return beta
        beta = beta.minus(Budget.unit(best[1]))


def base_alloc(instances, bank: ModelBank, platform: Platform, mode: str):
    """Assign (base budget, release, deadline) to every subtask instance.

    greedy: minimum budget everywhere, releases chain over predecessor
    deadlines. deadline-aware: decompose each instance's deadline into
    path-proportional shares at the full platform budget, then shed each
    subtask's budget to the smallest one still meeting its share;
    subtasks infeasible even at R_max are returned in the second value
    and the taskset is unschedulable up front.
    """
    if mode not in ("greedy", "deadline-aware"):
        raise ValueError(f"unknown mode {mode!r}")
    subs = {s.id: s for s in instances}
    groups = {}
    for s in instances:
        groups.setdefault((s.task_id, s.instance), []).append(s.id)
    out, infeasible = {}, []
    for key in sorted(groups):
        ids = groups[key]
        preds = {i: subs[i].predecessors for i in ids}
        order = topological_order(ids, preds)
        anchor = subs[ids[0]].anchor
        rel, dl, budget = {}, {}, {}
        if mode == "greedy":
            for i in order:
                sub = subs[i]
                e = ceil_ticks(bank.get(sub.workload, MIN_BUDGET).wcet())
                rel[i] = anchor if not sub.predecessors else \
                    max(dl[p] for p in sub.predecessors)
                dl[i] = rel[i] + e
                budget[i] = MIN_BUDGET
        else:
            costs = {i: bank.get(subs[i].workload, platform.r_max).wcet()
                     for i in ids}
            d_rel = subs[ids[0]].abs_deadline - anchor
            shares = deadline_shares(ids, preds, costs, d_rel / TICKS_PER_SEC)
            for i in order:
                sub = subs[i]
                rel[i] = anchor if not sub.predecessors else \
                    max(dl[p] for p in sub.predecessors)
                dl[i] = rel[i] + ceil_ticks(shares[i])
                if rel[i] + ceil_ticks(costs[i]) > dl[i]:
                    infeasible.append(i)
                    budget[i] = platform.r_max
                else:
                    budget[i] = _shed_budget(bank, sub.workload,
                                             platform.r_max, rel[i], dl[i])
        for i in ids:
            out[i] = replace(subs[i], base_budget=budget[i],
                             release=rel[i], deadline=dl[i])
    return [out[s.id] for s in instances], sorted(infeasible)


# ---------------------------------------------------------------------------
# the scheduler
# ---------------------------------------------------------------------------

class CordScheduler:
    """One scheduling run; all mutable per-subtask state lives here."""

    def __init__(self, instances, anchor_set, bank: ModelBank,
                 platform: Platform):
        for s in instances:
            if not s.allocated():
                raise ValueError(f"subtask {s.id} missing base allocation")
        self.subs = {s.id: s for s in sorted(instances, key=lambda s: s.id)}
        self.bank = bank
        self.plat = platform
        self.anchor_points = list(anchor_set.all_points())
        self.hyper = anchor_set.hyperperiod
        self.r, self.d, self.d_init = {}, {}, {}
        self.c, self.c_init, self.beta, self.ins, self.done = {}, {}, {}, {}, {}
        self.t = 0
        self.t_next = 0
        self.Q = set()
        self.diagnostics = {"swaps": 0, "segment_resets": 0,
                            "step2_state_repeats": 0, "step2_cap_hits": 0}

    # -- model plumbing ----------------------------------------------------

    def _model(self, tid: str, beta: Budget) -> PhaseModel:
        return self.bank.get(self.subs[tid].workload, beta)

    def compute_ins(self, tid: str, beta: Budget, ins: float,
                    t: int, t_next: int) -> float:
        """Instructions retired by t_next when running [t, t_next) at beta."""
        dur = (t_next - t) / TICKS_PER_SEC
        return advance_ins(self._model(tid, beta), ins, dur,
                           self.subs[tid].max_ins)

    def finish_time(self, tid: str, beta: Budget, ins: float,
                    start: int, t_next) -> int:
        """Estimated completion tick running at beta until t_next, then at
        the base budget. t_next=None means beta holds throughout."""
        sub = self.subs[tid]
        if ins >= sub.max_ins:
            raise ValueError(f"{tid} already finished")
        model = self._model(tid, beta)
        if t_next is None:
            c_sec = start / TICKS_PER_SEC + span_time(model, ins, sub.max_ins)
        else:
            reached = advance_ins(model, ins, (t_next - start) / TICKS_PER_SEC,
                                  sub.max_ins)
            if reached >= sub.max_ins:
                c_sec = start / TICKS_PER_SEC + \
                    span_time(model, ins, sub.max_ins)
            else:
                base_model = self._model(tid, sub.base_budget)
                c_sec = t_next / TICKS_PER_SEC + \
                    span_time(base_model, reached, sub.max_ins)
        return max(start + 1, ceil_ticks(c_sec))

    # -- scheduled-set maintenance -----------------------------------------

    def get_sched_tasks(self):
        """The m ready subtasks with the smallest deadlines (ties by id)."""
        order = sorted(self.Q, key=lambda i: (self.d[i], i))
        S = set(order[:self.plat.m])
        r_s = Budget(0, 0)
        for i in S:
            r_s = r_s.plus(self.beta[i])
        return S, r_s

    def max_slack_task(self, S, r_s: Budget):
        """Victim for budget shedding: the most-slack subtask holding a
        partition of an over-subscribed type; the partition whose removal
        costs the least WCET (cache first on ties)."""
        over = [rt for rt in RESOURCE_TYPES
                if getattr(r_s, rt) > getattr(self.plat.r_max, rt)]
        elig = [i for i in S
                if any(getattr(self.beta[i], rt) > 1 for rt in over)]
        if not elig:
            raise AssertionError("no sheddable subtask; platform invariant "
                                 "m*(1,1) <= R_max should prevent this")
        victim = sorted(elig, key=lambda i: (-(self.d[i] - self.c[i]), i))[0]
        best = None
        for rt in RESOURCE_TYPES:
            if rt not in over or getattr(self.beta[victim], rt) <= 1:
                continue
            trial = self.beta[victim].minus(Budget.unit(rt))
            e_new = self._model(victim, trial).wcet()
            if best is None or e_new < best[0]:
                best = (e_new, rt)
        return victim, Budget.unit(best[1])

    def shed(self, S, r_s: Budget) -> Budget:
        while not self.plat.r_max.covers(r_s):
            victim, delta = self.max_slack_task(S, r_s)
            self.beta[victim] = self.beta[victim].minus(delta)
            r_s = r_s.minus(delta)
        return r_s

    def _sched_tasks_shed(self):
        S, r_s = self.get_sched_tasks()
        return S, self.shed(S, r_s)

    # -- resource allocation -----------------------------------------------

    def resource_alloc(self, S, r_s: Budget, order=None, ins_cache=None):
        """Pick the ready subtask with the largest instruction-weighted
        expected rate gain over [t, t_next) and the resource type that
        contributed most of that gain; None when nothing gains.

        order is a pre-sorted view of Q; ins_cache memoizes the phase
        walk per (subtask, budget) while t and t_next stand still."""
        avail = self.plat.r_max.minus(r_s)
        best_id, best_gain, best_contrib = None, 0.0, None
        for tid in (sorted(self.Q) if order is None else order):
            beta = self.beta[tid]
            if tid in S:
                types_ok = [rt for rt in RESOURCE_TYPES
                            if getattr(avail, rt) > 0]
            else:
                types_ok = [rt for rt in RESOURCE_TYPES
                            if getattr(beta, rt) < getattr(self.plat.r_max, rt)]
            if not types_ok:
                continue
            ins = self.ins[tid]
            reached = None if ins_cache is None else ins_cache.get((tid, beta))
            if reached is None:
                reached = self.compute_ins(tid, beta, ins, self.t, self.t_next)
                if ins_cache is not None:
                    ins_cache[(tid, beta)] = reached
            if reached <= ins:
                continue
            model = self._model(tid, beta)
            phases = model.phases
            k = len(phases) - 1 if ins >= model.max_ins else model.index_at(ins)
            gain_sum = 0.0
            contrib = dict.fromkeys(types_ok, 0.0)
            while k < len(phases) and phases[k].start_ins < reached:
                ph = phases[k]
                lo = max(ph.start_ins, ins)
                hi = reached if k + 1 == len(phases) else \
                    min(ph.end_ins, reached)
                if hi > lo:
                    bt, bg = None, -math.inf
                    for rt in types_ok:
                        g = ph.delta.get(rt, 0.0)
                        if g > bg:
                            bt, bg = rt, g
                    gain_sum += bg * (hi - lo)
                    contrib[bt] += bg * (hi - lo)
                k += 1
            if gain_sum > best_gain:
                best_id, best_gain, best_contrib = tid, gain_sum, contrib
        if best_id is None:
            return None
        rt_best, top = None, -math.inf
        for rt in RESOURCE_TYPES:
            if rt in best_contrib and best_contrib[rt] > top:
                rt_best, top = rt, best_contrib[rt]
        return best_id, Budget.unit(rt_best)

    def reset_segment(self, keep: str):
        """Back to base budgets, saved deadlines, and segment-entry
        completion estimates for every ready subtask except keep; fresh
        scheduled set. The estimates saved at the segment entry already
        assume the base budget from t, so restoring them matches a
        recomputation without the phase walks."""
        for tid in self.Q:
            if tid == keep:
                continue
            self.beta[tid] = self.subs[tid].base_budget
            self.d[tid] = self.d_init[tid]
            self.c[tid] = self.c_init[tid]
        return self._sched_tasks_shed()

    def release_successors(self, tid: str):
        """Successors whose predecessors are all done; released at the
        finisher's completion. The completion estimate accrues from the
        segment boundary, where the successor first becomes schedulable,
        not from a mid-segment release time."""
        out = []
        for succ in self.subs[tid].successors:
            if all(self.done[p] for p in self.subs[succ].predecessors):
                self.r[succ] = self.c[tid]
                self.c[succ] = self.finish_time(
                    succ, self.subs[succ].base_budget, 0.0, self.t_next, None)
                out.append(succ)
        return out

    # -- main loop ---------------------------------------------------------

    def _step2(self, S, r_s: Budget):
        seen = set()
        iters = 0
        cap = 10 * max(1, len(self.Q)) * self.plat.r_max.total()
        order = sorted(self.Q)
        ins_cache = {}
        while True:
            pick = self.resource_alloc(S, r_s, order, ins_cache)
            if pick is None:
                break
            iters += 1
            if iters > cap:
                self.diagnostics["step2_cap_hits"] += 1
                break
            tid, delta = pick
            self.beta[tid] = self.beta[tid].plus(delta)
            new_c = self.finish_time(tid, self.beta[tid], self.ins[tid],
                                     self.t, self.t_next)
            self.d[tid] -= self.c[tid] - new_c
            self.c[tid] = new_c
            if tid not in S:
                latest = sorted(S, key=lambda j: (-self.d[j], j))[0]
                trial = r_s.minus(self.beta[latest]).plus(self.beta[tid])
                if self.d[tid] < self.d[latest] and \
                        self.plat.r_max.covers(trial):
                    S = (S - {latest}) | {tid}
                    r_s = trial
                    self.diagnostics["swaps"] += 1
            if new_c >= self.t_next - RESET_MERGE_TICKS:
                S, r_s = self._sched_tasks_shed()
            else:
                S, r_s = self.reset_segment(tid)
                self.t_next = new_c
                ins_cache.clear()
                self.diagnostics["segment_resets"] += 1
            state = (frozenset(S),
                     tuple(sorted((i, self.beta[i]) for i in self.Q)),
                     self.t_next)
            if state in seen:
                self.diagnostics["step2_state_repeats"] += 1
                break
            seen.add(state)
        return S, r_s

    def run(self) -> StaticSchedule:
        subs = self.subs
        if not subs:
            return StaticSchedule(segments=(), schedulable=True, report={},
                                  diagnostics=dict(self.diagnostics))
        for tid, sub in subs.items():
            self.ins[tid] = 0.0
            self.done[tid] = False
            self.beta[tid] = sub.base_budget
            self.r[tid] = sub.release
            self.d[tid] = sub.deadline
            self.d_init[tid] = sub.deadline
            self.c[tid] = sub.release + ceil_ticks(
                self._model(tid, sub.base_budget).wcet())
        self.t = 0
        B = set(self.anchor_points) - {0}
        self.Q = {i for i in subs if self.r[i] == 0}
        segments = []
        capped = False
        while True:
            if self.hyper and self.t >= HORIZON_FACTOR * self.hyper and \
                    not all(self.done.values()):
                self.diagnostics["horizon_cap"] = True
                capped = True
                break
            if len(segments) > SEGMENT_CAP:
                self.diagnostics["segment_cap"] = True
                capped = True
                break
            # Step 1: base budgets, save deadlines, pick by deadline, shed
            for tid in self.Q:
                self.d_init[tid] = self.d[tid]
                self.c_init[tid] = self.c[tid]
                self.beta[tid] = subs[tid].base_budget
            S, r_s = self._sched_tasks_shed()
            # The segment can only end at an event that can happen: the
            # earliest completion estimate among the subtasks about to
            # run, or the next anchor. Estimates of preempted subtasks
            # are not events; treating them as decision points lets a
            # nearly-done waiting subtask slice the timeline into
            # thousands of micro-segments.
            cands = [self.c[i] for i in S]
            if B:
                cands.append(min(B))
            self.t_next = min(cands)
            # Step 2: grant spare partitions while something gains
            S, r_s = self._step2(S, r_s)
            # Step 3: settle this segment, advance instruction counts
            for tid in sorted(self.Q - S):
                self.beta[tid] = subs[tid].base_budget
                self.d[tid] = self.d_init[tid]
                self.c[tid] = self.finish_time(
                    tid, subs[tid].base_budget, self.ins[tid],
                    self.t_next, None)
            newly_done = []
            for tid in sorted(S):
                before = self.ins[tid]
                self.ins[tid] = self.compute_ins(
                    tid, self.beta[tid], before, self.t, self.t_next)
                if self.ins[tid] == subs[tid].max_ins:
                    # a merged reset can finish ahead of the boundary;
                    # record the true tick so the report stays exact
                    self.c[tid] = min(self.t_next, self.finish_time(
                        tid, self.beta[tid], before, self.t, None))
                    self.done[tid] = True
                    newly_done.append(tid)
                else:
                    # the boosted budget expires at t_next; re-estimate
                    # under base so the decision clock never reuses a
                    # stale completion
                    self.c[tid] = self.finish_time(
                        tid, subs[tid].base_budget, self.ins[tid],
                        self.t_next, None)
            for tid in newly_done:
                self.Q.discard(tid)
                self.Q.update(self.release_successors(tid))
            segments.append([self.t, self.t_next,
                             tuple((i, self.beta[i]) for i in sorted(S))])
            if not self.Q and not B:
                break
            # with Q empty the next pass schedules nothing and emits an
            # idle segment bridging to the next anchor
            t_new = self.t_next
            if t_new <= self.t:
                self.diagnostics["progress_stall"] = True
                capped = True
                break
            self.t = t_new
            for tid, sub in subs.items():
                if not sub.predecessors and not self.done[tid] and \
                        self.r[tid] == self.t:
                    self.Q.add(tid)
            B.discard(self.t)
        report = {}
        ok = not capped
        for tid, sub in subs.items():
            met = self.done[tid] and self.c[tid] <= sub.abs_deadline
            ok = ok and met
            report[tid] = {"completion_us": int(self.c[tid]),
                           "done": self.done[tid],
                           "abs_deadline_us": sub.abs_deadline,
                           "met": met}
        return StaticSchedule(
            segments=tuple(ScheduleSegment(s, e, entries)
                           for s, e, entries in segments),
            schedulable=ok, report=report,
            diagnostics=dict(self.diagnostics))


def cord_schedule(instances, anchor_set, bank: ModelBank,
                  platform: Platform) -> StaticSchedule:
    return CordScheduler(instances, anchor_set, bank, platform).run()


# ---------------------------------------------------------------------------
# taskset expansion and the one-call driver
# ---------------------------------------------------------------------------

def instantiate(taskset, anchor_set, bank: ModelBank):
    """Expand a taskset into per-instance subtasks over the hyper-period."""
    out = []
    for task in taskset.tasks:
        preds = task.predecessors()
        succs = task.successors()
        for k, anchor in enumerate(anchor_set.by_task[task.id], start=1):
            prefix = f"{task.id}:{k}"
            for node in task.nodes:
                wl = task.workloads[node]
                out.append(SubtaskInstance(
                    id=f"{prefix}:{node}", task_id=task.id, instance=k,
                    node=node, workload=wl,
                    max_ins=bank.get(wl, MIN_BUDGET).max_ins,
                    predecessors=tuple(f"{prefix}:{p}" for p in preds[node]),
                    successors=tuple(f"{prefix}:{s}" for s in succs[node]),
                    anchor=anchor, abs_deadline=anchor + task.deadline))
    return out


def schedule_taskset(taskset, bank: ModelBank, platform: Platform,
                     mode: str) -> StaticSchedule:
    """instantiate + base_alloc + cord_schedule; deadline-aware tasksets
    infeasible at R_max are rejected before scheduling."""
    from .taskgen import anchors
    _, aset = anchors(taskset)
    instances = instantiate(taskset, aset, bank)
    allocated, infeasible = base_alloc(instances, bank, platform, mode)
    if infeasible:
        report = {s.id: {"completion_us": None, "done": False,
                         "abs_deadline_us": s.abs_deadline,
                         "met": False}
                  for s in allocated}
        return StaticSchedule(segments=(), schedulable=False, report=report,
                              diagnostics={"infeasible_at_r_max": infeasible})
    return cord_schedule(allocated, aset, bank, platform)


# ---------------------------------------------------------------------------
# schedule files
# ---------------------------------------------------------------------------

def write_schedule_csv(schedule: StaticSchedule, path) -> None:
    """One row per (segment, entry); idle segments get a sentinel row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCHEDULE_HEADER)
        for seg in schedule.segments:
            if not seg.entries:
                w.writerow([seg.start, seg.end, SENTINEL_ID, 0, 0])
                continue
            for tid, beta in seg.entries:
                w.writerow([seg.start, seg.end, tid, beta.cache, beta.bw])


def read_schedule_csv(path):
    """Segments from a schedule CSV (sentinel rows become empty entries)."""
    segs = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != SCHEDULE_HEADER:
            raise ValueError(f"bad schedule header: {header}")
        for row in rd:
            if len(row) != 5:
                raise ValueError(f"bad schedule row: {row}")
            start, end = int(row[0]), int(row[1])
            key = (start, end)
            segs.setdefault(key, [])
            if row[2] != SENTINEL_ID:
                segs[key].append((row[2], Budget(int(row[3]), int(row[4]))))
    return tuple(ScheduleSegment(s, e, tuple(entries))
                 for (s, e), entries in sorted(segs.items()))


def write_report(schedule: StaticSchedule, path) -> None:
    payload = {"schedulable": schedule.schedulable,
               "subtasks": schedule.report,
               "diagnostics": schedule.diagnostics}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
