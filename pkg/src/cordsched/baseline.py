"""Decomposition baseline: proportional deadline shares under a static
even resource split, checked with a density bound.

Each core gets an equal floored share of every resource; DAG deadlines
decompose into per-subtask windows proportional to the even-split WCET
along paths (the same share rule the deadline-aware allocator uses).
A taskset passes when total density sum(e / window) stays within m and
every subtask fits its own window. The density test is a conservative
stand-in for the global-EDF analysis it replaces, so comparisons
against the co-allocator are trend-level; reports label this baseline
"density-GEDF".
"""

from __future__ import annotations

from dataclasses import dataclass

from ._util import TICKS_PER_SEC
from .cordalg import Platform, deadline_shares, topological_order
from .phases import ModelBank
from .taskgen import reference_budget

BASELINE_LABEL = "density-GEDF"
# slack for float dust in share arithmetic, well under one tick
_EPS = 1e-9


@dataclass(frozen=True)
class DecomposedSubtask:
    node: str
    release: float                   # seconds from the instance anchor
    deadline: float
    wcet: float                      # seconds under the even split

    @property
    def window(self) -> float:
        return self.deadline - self.release

    def feasible(self) -> bool:
        return self.wcet <= self.window + _EPS


def decompose_deadlines(task, wcets: dict) -> dict:
    """Per-subtask (release, deadline) windows in seconds.

    Windows are the path-proportional shares of the task deadline;
    each subtask releases when its last predecessor's window closes.
    """
    preds = task.predecessors()
    ids = list(task.nodes)
    shares = deadline_shares(ids, preds, wcets,
                             task.deadline / TICKS_PER_SEC)
    dl = {}
    out = {}
    for node in topological_order(ids, preds):
        rel = max((dl[p] for p in preds[node]), default=0.0)
        dl[node] = rel + shares[node]
        out[node] = DecomposedSubtask(node, rel, dl[node], wcets[node])
    return out


def even_split_wcets(task, bank: ModelBank, beta_ref) -> dict:
    return {node: bank.get(task.workloads[node], beta_ref).wcet()
            for node in task.nodes}


def decomp_schedulable(taskset, platform: Platform,
                       bank: ModelBank) -> bool:
    """Density test over decomposed windows at the even-split budget."""
    beta_ref = reference_budget(platform.m, platform.r_max)
    density = 0.0
    for task in taskset.tasks:
        wcets = even_split_wcets(task, bank, beta_ref)
        for sub in decompose_deadlines(task, wcets).values():
            if not sub.feasible():
                return False
            density += sub.wcet / sub.window
    return density <= platform.m + _EPS
