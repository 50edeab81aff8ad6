"""Independent schedule validation by replay.

The validator re-derives the subtask instances for one hyper-period,
checks every segment against the platform limits, then replays
instruction accrual through the phase models and compares reached
completion times with the schedule's own report. Tick rounding grants
one instruction and one microsecond of tolerance per segment a subtask
appears in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ._util import TICKS_PER_SEC, ceil_ticks
from .cordalg import Platform, StaticSchedule, advance_ins, instantiate, span_time
from .phases import ModelBank
from .taskgen import anchors
from .workload import MIN_BUDGET, Budget


@dataclass(frozen=True)
class Violation:
    kind: str
    segment: int = None              # index into schedule.segments
    subtask: str = None
    detail: str = ""

    def __str__(self) -> str:
        where = []
        if self.segment is not None:
            where.append(f"segment {self.segment}")
        if self.subtask is not None:
            where.append(self.subtask)
        loc = " @ ".join(where)
        return f"{self.kind}({loc}): {self.detail}" if loc else \
            f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)   # id -> instructions short

    @property
    def passed(self) -> bool:
        return not self.violations

    def kinds(self) -> dict:
        out = {}
        for v in self.violations:
            out[v.kind] = out.get(v.kind, 0) + 1
        return out


def validate_schedule(schedule: StaticSchedule, taskset, bank: ModelBank,
                      platform: Platform) -> ValidationReport:
    _, aset = anchors(taskset)
    insts = {s.id: s for s in instantiate(taskset, aset, bank)}
    rep = ValidationReport()
    add = rep.violations.append

    # structural pass over segments
    prev_end = None
    for idx, seg in enumerate(schedule.segments):
        if seg.start >= seg.end:
            add(Violation("segment-structure", idx,
                          detail=f"empty span [{seg.start}, {seg.end})"))
        if prev_end is not None and seg.start != prev_end:
            add(Violation("segment-structure", idx,
                          detail=f"starts at {seg.start}, previous ended "
                                 f"at {prev_end}"))
        prev_end = seg.end
        if len(seg.entries) > platform.m:
            add(Violation("entry-count", idx,
                          detail=f"{len(seg.entries)} entries on "
                                 f"{platform.m} cores"))
        seen = set()
        total = Budget(0, 0)
        for tid, beta in seg.entries:
            if tid in seen:
                add(Violation("segment-structure", idx, tid,
                              "duplicate entry"))
            seen.add(tid)
            if tid not in insts:
                add(Violation("unknown-subtask", idx, tid,
                              "no such subtask instance"))
                continue
            if not beta.covers(MIN_BUDGET):
                add(Violation("budget-floor", idx, tid,
                              f"budget {tuple(beta)} below (1, 1)"))
            if not bank.has(insts[tid].workload, beta):
                add(Violation("unknown-budget", idx, tid,
                              f"budget {tuple(beta)} not in the bank"))
            total = total.plus(beta)
        if not platform.r_max.covers(total):
            add(Violation("resource-cap", idx,
                          detail=f"sum {tuple(total)} exceeds "
                                 f"{tuple(platform.r_max)}"))

    # replay instruction accrual in time order
    ins = {tid: 0.0 for tid in insts}
    fin = {}
    appearances = {tid: 0 for tid in insts}
    for idx, seg in enumerate(schedule.segments):
        for tid, beta in seg.entries:
            if tid not in insts or not bank.has(insts[tid].workload, beta):
                continue
            sub = insts[tid]
            if seg.start < sub.anchor:
                add(Violation("anchor", idx, tid,
                              f"runs at {seg.start} before anchor "
                              f"{sub.anchor}"))
            for p in sub.predecessors:
                done_at = fin.get(p)
                if done_at is None or done_at > seg.start:
                    add(Violation("precedence", idx, tid,
                                  f"predecessor {p} incomplete at "
                                  f"{seg.start}"))
            appearances[tid] += 1
            model = bank.get(sub.workload, beta)
            before = ins[tid]
            after = advance_ins(model, before,
                                (seg.end - seg.start) / TICKS_PER_SEC,
                                sub.max_ins)
            if before < sub.max_ins <= after:
                t_fin = seg.start / TICKS_PER_SEC + \
                    span_time(model, before, sub.max_ins)
                fin[tid] = min(seg.end, max(seg.start + 1,
                                            ceil_ticks(t_fin)))
            ins[tid] = after

    # accounting and verdict against the report
    all_met = True
    for tid, sub in sorted(insts.items()):
        rep.residuals[tid] = sub.max_ins - ins[tid]
        entry = schedule.report.get(tid)
        if entry is None:
            add(Violation("completion-mismatch", subtask=tid,
                          detail="missing from the report"))
            all_met = False
            continue
        tol = max(1, appearances[tid])
        if entry["done"]:
            if rep.residuals[tid] > appearances[tid] * 1.0 or tid not in fin:
                add(Violation("instruction-accounting", subtask=tid,
                              detail=f"replay leaves "
                                     f"{rep.residuals[tid]:.1f} instructions "
                                     f"after {appearances[tid]} segments"))
            elif abs(fin[tid] - entry["completion_us"]) > tol:
                add(Violation("completion-mismatch", subtask=tid,
                              detail=f"replay finishes at {fin[tid]}, "
                                     f"report says "
                                     f"{entry['completion_us']}"))
        elif tid in fin:
            add(Violation("completion-mismatch", subtask=tid,
                          detail=f"reported unfinished but replay "
                                 f"completes at {fin[tid]}"))
        met_want = bool(entry["done"]) and \
            entry["completion_us"] <= sub.abs_deadline
        if bool(entry["met"]) != met_want:
            add(Violation("verdict-mismatch", subtask=tid,
                          detail="met flag disagrees with the deadline "
                                 "comparison"))
        all_met = all_met and met_want
    if bool(schedule.schedulable) != all_met:
        add(Violation("verdict-mismatch",
                      detail=f"schedulable={schedule.schedulable} but "
                             f"deadline outcomes say {all_met}"))
    return rep
