"""Scheduler tests: walkers and helpers against independent oracles,
then end-to-end hand-traced schedules."""

import math

import numpy as np
import pytest

from cordsched._util import ceil_ticks
from cordsched.cordalg import (
    CordScheduler,
    Platform,
    ScheduleSegment,
    SubtaskInstance,
    advance_ins,
    base_alloc,
    cord_schedule,
    deadline_shares,
    instantiate,
    read_report,
    read_schedule_csv,
    schedule_taskset,
    span_time,
    topological_order,
    write_report,
    write_schedule_csv,
)
from cordsched.phases import bank_from_ground_truth
from cordsched.taskgen import AnchorSet, TasksetConfig, anchors, gen_taskset
from cordsched.workload import MIN_BUDGET, RESOURCE_TYPES, Budget, make_ground_truth

R4 = Budget(4, 4)


def _lin(name, max_ins, base, ca, bw):
    return make_ground_truth(name, max_ins, [{
        "span_frac": 1.0, "base_rate": base,
        "cache_coeff": ca, "bw_coeff": bw,
    }])


@pytest.fixture(scope="module")
def tiny_bank():
    gts = {
        "lin": _lin("lin", 1.0e6, 1.0e6, 5.0e5, 0.0),
        "lin12": _lin("lin12", 1.2e6, 1.0e6, 5.0e5, 0.0),
        "both": _lin("both", 1.0e6, 1.0e6, 2.0e5, 1.0e5),
        "flat": _lin("flat", 1.0e6, 1.0e6, 0.0, 0.0),
        "tri": make_ground_truth("tri", 3.0e6, [
            {"span_frac": 1 / 3, "base_rate": 2.0e6,
             "cache_coeff": 6.0e5, "bw_coeff": 1.0e5},
            {"span_frac": 1 / 3, "base_rate": 1.0e6,
             "cache_coeff": 1.0e5, "bw_coeff": 4.0e5},
            {"span_frac": 1 / 3, "base_rate": 3.0e6,
             "cache_coeff": 2.0e5, "bw_coeff": 2.0e5},
        ]),
        "duo": make_ground_truth("duo", 2.0e6, [
            {"span_frac": 0.5, "base_rate": 1.0e6,
             "cache_coeff": 0.0, "bw_coeff": 3.0e5},
            {"span_frac": 0.5, "base_rate": 2.0e6,
             "cache_coeff": 3.0e5, "bw_coeff": 0.0},
        ]),
    }
    return bank_from_ground_truth(gts, R4)


def make_inst(tid, workload, bank, *, preds=(), succs=(), anchor=0,
              abs_deadline=10_000_000, base=None, release=None,
              deadline=None, task=None, k=1):
    return SubtaskInstance(
        id=tid, task_id=task or tid.split(":")[0], instance=k, node=tid,
        workload=workload, max_ins=bank.get(workload, MIN_BUDGET).max_ins,
        predecessors=tuple(preds), successors=tuple(succs),
        anchor=anchor, abs_deadline=abs_deadline,
        base_budget=base, release=release, deadline=deadline)


def make_sched(bank, insts, *, m=1, r_max=R4, hyper=10_000_000, points=(0,)):
    aset = AnchorSet(hyperperiod=hyper, by_task={"_": tuple(points)})
    return CordScheduler(insts, aset, bank, Platform(m, r_max))


def _prime(sched, t, t_next):
    """Mimic run() initialization so helpers can be exercised directly."""
    sched.t, sched.t_next = t, t_next
    sched.Q = set(sched.subs)
    for tid, sub in sched.subs.items():
        sched.beta[tid] = sub.base_budget
        sched.ins[tid] = 0.0
        sched.done[tid] = False
        sched.r[tid] = sub.release
        sched.d[tid] = sub.deadline
        sched.d_init[tid] = sub.deadline
        sched.c[tid] = sched.finish_time(tid, sub.base_budget, 0.0,
                                         sub.release, None)
        sched.c_init[tid] = sched.c[tid]


# ---------------------------------------------------------------------------
# phase walkers
# ---------------------------------------------------------------------------

def test_span_time_single_phase_matches_wcet(tiny_bank):
    for beta in (Budget(1, 1), Budget(3, 2), Budget(4, 4)):
        model = tiny_bank.get("lin", beta)
        assert span_time(model, 0.0, model.max_ins) == \
            pytest.approx(model.wcet(), rel=1e-12)


def test_span_time_partial_and_extension(tiny_bank):
    model = tiny_bank.get("tri", Budget(2, 2))
    r0, r1, r2 = (ph.rate for ph in model.phases)
    want = 0.5e6 / r0 + 1.0e6 / r1 + 0.5e6 / r2
    assert span_time(model, 0.5e6, 2.5e6) == pytest.approx(want, rel=1e-12)
    # counts past the model end run at the final phase's rate
    assert span_time(model, 3.0e6, 3.5e6) == pytest.approx(0.5e6 / r2,
                                                           rel=1e-12)


def test_advance_ins_inverts_span_time(tiny_bank):
    model = tiny_bank.get("tri", Budget(3, 1))
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = np.sort(rng.uniform(0, model.max_ins, size=2))
        if b - a < 1.0:
            continue
        got = advance_ins(model, a, span_time(model, a, b), model.max_ins)
        assert got == pytest.approx(b, rel=1e-9, abs=1e-3)


def test_advance_ins_caps_exactly_at_wcet(tiny_bank):
    model = tiny_bank.get("tri", Budget(2, 3))
    assert advance_ins(model, 0.0, model.wcet(), model.max_ins) == \
        model.max_ins
    # genuine shortfalls are not forgiven
    short = advance_ins(model, 0.0, 0.5 * model.wcet(), model.max_ins)
    assert short < model.max_ins


# ---------------------------------------------------------------------------
# deadline decomposition
# ---------------------------------------------------------------------------

def test_topological_order_sorts_ties():
    assert topological_order(["b", "a", "c"], {"c": ("a", "b")}) == \
        ["a", "b", "c"]


def test_topological_order_rejects_cycle():
    with pytest.raises(ValueError):
        topological_order(["a", "b"], {"a": ("b",), "b": ("a",)})


def test_deadline_shares_chain_even_split():
    shares = deadline_shares(["a", "b"], {"b": ("a",)},
                             {"a": 1.0, "b": 1.0}, 10.0)
    assert shares["a"] == pytest.approx(5.0)
    assert shares["b"] == pytest.approx(5.0)


def test_deadline_shares_diamond():
    # a(2) -> {b(1), c(3)} -> d(2); critical path a-c-d costs 7
    preds = {"b": ("a",), "c": ("a",), "d": ("b", "c")}
    costs = {"a": 2.0, "b": 1.0, "c": 3.0, "d": 2.0}
    shares = deadline_shares(list(costs), preds, costs, 7.0)
    assert shares["a"] == pytest.approx(2.0)
    assert shares["b"] == pytest.approx(7.0 / 5.0)
    assert shares["c"] == pytest.approx(3.0)
    assert shares["d"] == pytest.approx(2.0)
    # shares telescope to at most the deadline along every path
    assert shares["a"] + shares["c"] + shares["d"] <= 7.0 + 1e-9
    assert shares["a"] + shares["b"] + shares["d"] <= 7.0 + 1e-9


# ---------------------------------------------------------------------------
# base allocation
# ---------------------------------------------------------------------------

def test_base_alloc_greedy_chain(tiny_bank):
    plat = Platform(2, R4)
    a = make_inst("t:1:a", "lin", tiny_bank, succs=("t:1:b",), task="t")
    b = make_inst("t:1:b", "lin", tiny_bank, preds=("t:1:a",), task="t")
    out, bad = base_alloc([a, b], tiny_bank, plat, "greedy")
    assert bad == []
    oa, ob = out
    assert oa.base_budget == MIN_BUDGET and ob.base_budget == MIN_BUDGET
    assert (oa.release, oa.deadline) == (0, 1_000_000)
    # successor releases at the predecessor's deadline
    assert (ob.release, ob.deadline) == (1_000_000, 2_000_000)


def test_base_alloc_deadline_aware_no_slack(tiny_bank):
    """Deadline equal to the full-budget WCET leaves nothing to shed.

    Every partition matters to this workload, so any removal would
    push the WCET past the deadline.
    """
    e_full = ceil_ticks(tiny_bank.get("both", R4).wcet())
    a = make_inst("t:1:a", "both", tiny_bank, abs_deadline=e_full, task="t")
    out, bad = base_alloc([a], tiny_bank, Platform(1, R4), "deadline-aware")
    assert bad == []
    assert out[0].base_budget == R4
    assert out[0].deadline == e_full


def test_base_alloc_deadline_aware_minimal_budget(tiny_bank):
    """The shed result must match an exhaustive search over the grid."""
    dl = 2 * ceil_ticks(tiny_bank.get("lin", R4).wcet())
    a = make_inst("t:1:a", "lin", tiny_bank, abs_deadline=dl, task="t")
    out, bad = base_alloc([a], tiny_bank, Platform(1, R4), "deadline-aware")
    assert bad == []
    got = out[0].base_budget
    feasible = {b for b in tiny_bank.grid()
                if ceil_ticks(tiny_bank.get("lin", b).wcet()) <= dl}
    assert got in feasible
    for rt in RESOURCE_TYPES:
        if getattr(got, rt) > 1:
            assert got.minus(Budget.unit(rt)) not in feasible
    assert got == min(feasible, key=lambda b: (b.total(), b))
    assert got == Budget(2, 1)


def test_base_alloc_deadline_aware_infeasible(tiny_bank):
    e_full = ceil_ticks(tiny_bank.get("lin", R4).wcet())
    a = make_inst("t:1:a", "lin", tiny_bank, abs_deadline=e_full // 2,
                  task="t")
    out, bad = base_alloc([a], tiny_bank, Platform(1, R4), "deadline-aware")
    assert bad == ["t:1:a"]
    assert out[0].base_budget == R4


def test_base_alloc_rejects_unknown_mode(tiny_bank):
    with pytest.raises(ValueError):
        base_alloc([], tiny_bank, Platform(1, R4), "rate-monotonic")


# ---------------------------------------------------------------------------
# finish-time and instruction accounting
# ---------------------------------------------------------------------------

def _single(bank, wl="lin", base=MIN_BUDGET, dl=10_000_000):
    inst = make_inst("t:1:a", wl, bank, base=base, release=0,
                     deadline=dl, abs_deadline=dl, task="t")
    return make_sched(bank, [inst]), "t:1:a"


def test_finish_time_single_phase(tiny_bank):
    sched, tid = _single(tiny_bank)
    assert sched.finish_time(tid, MIN_BUDGET, 0.0, 0, None) == 1_000_000


def test_finish_time_boost_then_base(tiny_bank):
    # rate 2e6 until 0.3 s retires 6e5; the rest at 1e6 takes 0.4 s
    sched, tid = _single(tiny_bank)
    assert sched.finish_time(tid, Budget(3, 1), 0.0, 0, 300_000) == 700_000


def test_finish_time_rejects_finished(tiny_bank):
    sched, tid = _single(tiny_bank)
    with pytest.raises(ValueError):
        sched.finish_time(tid, MIN_BUDGET, 1.0e6, 0, None)


def _integrate_finish(bank, wl, beta, base, ins, t_ticks, t_next_ticks,
                      step=1e-4):
    """Forward-Euler walk of the rate function in 0.1 ms steps."""
    boosted = bank.get(wl, beta)
    resting = bank.get(wl, base)
    cap = boosted.max_ins
    tt = t_ticks / 1e6
    switch = math.inf if t_next_ticks is None else t_next_ticks / 1e6
    cur = ins
    while True:
        if tt < switch:
            model, dt = boosted, min(step, switch - tt)
        else:
            model, dt = resting, step
        rate = model.rate_at_clamped(cur)
        if cur + rate * dt >= cap:
            return tt + (cap - cur) / rate
        cur += rate * dt
        tt += dt


def test_finish_time_matches_integrator(tiny_bank):
    inst = make_inst("t:1:a", "tri", tiny_bank, base=MIN_BUDGET,
                     release=0, deadline=10_000_000, task="t")
    sched = make_sched(tiny_bank, [inst])
    beta = Budget(4, 2)
    for t_next in (None, 200_000, 600_000, 1_100_000):
        got = sched.finish_time("t:1:a", beta, 0.0, 0, t_next)
        ref = _integrate_finish(tiny_bank, "tri", beta, MIN_BUDGET,
                                0.0, 0, t_next)
        assert abs(got / 1e6 - ref) <= 2e-4


def test_compute_ins_zero_duration(tiny_bank):
    sched, tid = _single(tiny_bank)
    assert sched.compute_ins(tid, MIN_BUDGET, 1234.5, 50_000, 50_000) == \
        1234.5


def test_compute_ins_single_phase(tiny_bank):
    sched, tid = _single(tiny_bank)
    got = sched.compute_ins(tid, Budget(2, 1), 0.0, 0, 200_000)
    assert got == pytest.approx(3.0e5, rel=1e-12)
    assert sched.compute_ins(tid, Budget(2, 1), 9.0e5, 0, 200_000) == 1.0e6


def test_compute_ins_finish_roundtrip(tiny_bank):
    inst = make_inst("t:1:a", "tri", tiny_bank, base=MIN_BUDGET,
                     release=0, deadline=10_000_000, task="t")
    sched = make_sched(tiny_bank, [inst])
    for beta in (MIN_BUDGET, Budget(2, 3), Budget(4, 4)):
        for ins0 in (0.0, 0.4e6, 2.9e6):
            c = sched.finish_time("t:1:a", beta, ins0, 100_000, None)
            assert sched.compute_ins("t:1:a", beta, ins0, 100_000, c) == 3.0e6


# ---------------------------------------------------------------------------
# resource allocation
# ---------------------------------------------------------------------------

def test_resource_alloc_all_delta_zero(tiny_bank):
    sched, _ = _single(tiny_bank, wl="flat")
    _prime(sched, 0, 500_000)
    assert sched.resource_alloc(*sched.get_sched_tasks()) is None


def test_resource_alloc_prefers_stronger_type(tiny_bank):
    sched, tid = _single(tiny_bank, wl="both")
    _prime(sched, 0, 500_000)
    assert sched.resource_alloc(*sched.get_sched_tasks()) == \
        (tid, Budget.unit("cache"))


def _brute_force_alloc(sched, S, r_s, samples=50_000):
    """Re-evaluate the weighted gains by midpoint sampling."""
    avail = sched.plat.r_max.minus(r_s)
    best = None
    for tid in sorted(sched.Q):
        beta = sched.beta[tid]
        if tid in S:
            ok = [rt for rt in RESOURCE_TYPES if getattr(avail, rt) > 0]
        else:
            ok = [rt for rt in RESOURCE_TYPES
                  if getattr(beta, rt) < getattr(sched.plat.r_max, rt)]
        if not ok:
            continue
        ins0 = sched.ins[tid]
        reached = sched.compute_ins(tid, beta, ins0, sched.t, sched.t_next)
        if reached <= ins0:
            continue
        model = sched.bank.get(sched.subs[tid].workload, beta)
        width = (reached - ins0) / samples
        contrib = dict.fromkeys(ok, 0.0)
        for j in range(samples):
            x = min(ins0 + (j + 0.5) * width,
                    np.nextafter(model.max_ins, 0.0))
            ph = model.lookup(x)
            bt, bg = None, -math.inf
            for rt in ok:
                g = ph.delta.get(rt, 0.0)
                if g > bg:
                    bt, bg = rt, g
            contrib[bt] += bg * width
        total = sum(contrib.values())
        if total > 0 and (best is None or total > best[0]):
            rt_best, top = None, -math.inf
            for rt in RESOURCE_TYPES:
                if rt in contrib and contrib[rt] > top:
                    rt_best, top = rt, contrib[rt]
            best = (total, tid, Budget.unit(rt_best))
    return None if best is None else (best[1], best[2])


def test_resource_alloc_matches_brute_force(tiny_bank):
    a = make_inst("t:1:a", "tri", tiny_bank, base=Budget(2, 1), release=0,
                  deadline=900_000, task="t")
    b = make_inst("t:1:b", "duo", tiny_bank, base=Budget(1, 2), release=0,
                  deadline=1_100_000, task="t")
    for m in (1, 2):
        sched = make_sched(tiny_bank, [a, b], m=m)
        _prime(sched, 0, 350_000)
        sched.ins["t:1:a"] = 0.2e6
        sched.ins["t:1:b"] = 0.9e6
        S, r_s = sched.get_sched_tasks()
        got = sched.resource_alloc(S, r_s)
        assert got is not None
        assert got == _brute_force_alloc(sched, S, r_s)


# ---------------------------------------------------------------------------
# budget shedding
# ---------------------------------------------------------------------------

def _two_scheduled(bank, wl_a, wl_b, beta_a, beta_b):
    a = make_inst("t:1:a", wl_a, bank, base=beta_a, release=0,
                  deadline=6_000_000, task="t")
    b = make_inst("t:1:b", wl_b, bank, base=beta_b, release=0,
                  deadline=6_000_000, task="t")
    sched = make_sched(bank, [a, b], m=2)
    _prime(sched, 0, 500_000)
    S, r_s = sched.get_sched_tasks()
    return sched, S, r_s


def test_max_slack_picks_most_slack(tiny_bank):
    sched, S, r_s = _two_scheduled(tiny_bank, "lin", "lin",
                                   Budget(3, 2), Budget(3, 3))
    sched.c["t:1:a"] = 1_000_000
    sched.d["t:1:a"] = 6_000_000     # slack 5.0 s
    sched.c["t:1:b"] = 5_000_000
    sched.d["t:1:b"] = 6_000_000     # slack 1.0 s
    victim, delta = sched.max_slack_task(S, r_s)
    assert victim == "t:1:a"
    # cache removal costs time on this workload, bandwidth is free
    assert delta == Budget.unit("bw")


def test_max_slack_restricted_to_oversubscribed(tiny_bank):
    # rate-flat workloads tie on removal cost; unrestricted the tie
    # would go to cache, but only bandwidth is over budget
    sched, S, r_s = _two_scheduled(tiny_bank, "flat", "flat",
                                   Budget(2, 3), Budget(2, 3))
    assert r_s == Budget(4, 6)
    victim, delta = sched.max_slack_task(S, r_s)
    assert delta == Budget.unit("bw")


def test_max_slack_removal_matches_one_step_oracle(tiny_bank):
    sched, S, r_s = _two_scheduled(tiny_bank, "tri", "both",
                                   Budget(3, 3), Budget(3, 2))
    sched.c["t:1:a"] = 1_000_000
    sched.c["t:1:b"] = 5_900_000
    victim, delta = sched.max_slack_task(S, r_s)
    over = [rt for rt in RESOURCE_TYPES
            if getattr(r_s, rt) > getattr(sched.plat.r_max, rt)]
    elig = [i for i in S
            if any(getattr(sched.beta[i], rt) > 1 for rt in over)]
    want = min(elig, key=lambda i: (-(sched.d[i] - sched.c[i]), i))
    assert victim == want
    costs = []
    for idx, rt in enumerate(RESOURCE_TYPES):
        if rt in over and getattr(sched.beta[victim], rt) > 1:
            trial = sched.beta[victim].minus(Budget.unit(rt))
            wl = sched.subs[victim].workload
            costs.append((sched.bank.get(wl, trial).wcet(), idx, rt))
    assert delta == Budget.unit(min(costs)[2])


def test_shed_reaches_capacity(tiny_bank):
    sched, S, r_s = _two_scheduled(tiny_bank, "tri", "both",
                                   Budget(3, 3), Budget(3, 2))
    r_s = sched.shed(S, r_s)
    assert sched.plat.r_max.covers(r_s)
    total = Budget(0, 0)
    for tid in S:
        assert sched.beta[tid].covers(MIN_BUDGET)
        total = total.plus(sched.beta[tid])
    assert total == r_s


# ---------------------------------------------------------------------------
# successor release and segment reset
# ---------------------------------------------------------------------------

def _diamond(bank):
    ids = ("t:1:a", "t:1:b", "t:1:c", "t:1:d")
    a = make_inst(ids[0], "lin", bank, succs=ids[1:3], base=MIN_BUDGET,
                  release=0, deadline=1_000_000, task="t")
    b = make_inst(ids[1], "lin", bank, preds=(ids[0],), succs=(ids[3],),
                  base=MIN_BUDGET, release=1_000_000, deadline=2_000_000,
                  task="t")
    c = make_inst(ids[2], "lin", bank, preds=(ids[0],), succs=(ids[3],),
                  base=MIN_BUDGET, release=1_000_000, deadline=2_000_000,
                  task="t")
    d = make_inst(ids[3], "lin", bank, preds=ids[1:3], base=MIN_BUDGET,
                  release=2_000_000, deadline=3_000_000, task="t")
    return ids, [a, b, c, d]


def test_release_successors_sink(tiny_bank):
    sched, tid = _single(tiny_bank)
    _prime(sched, 0, 500_000)
    sched.done[tid] = True
    sched.c[tid] = 400_000
    assert sched.release_successors(tid) == []


def test_release_successors_diamond(tiny_bank):
    ids, insts = _diamond(tiny_bank)
    sched = make_sched(tiny_bank, insts, m=2)
    _prime(sched, 0, 500_000)
    sched.done[ids[0]] = True
    sched.done[ids[1]] = True
    sched.c[ids[1]] = 200_000
    assert sched.release_successors(ids[1]) == []   # c not done yet
    sched.done[ids[2]] = True
    sched.c[ids[2]] = 300_000
    assert sched.release_successors(ids[2]) == [ids[3]]
    assert sched.r[ids[3]] == 300_000
    # the successor can first run at the segment boundary, so its
    # estimate accrues from there rather than from the release time
    assert sched.c[ids[3]] == 500_000 + 1_000_000


def test_reset_segment_keep_only(tiny_bank):
    sched, tid = _single(tiny_bank)
    _prime(sched, 0, 500_000)
    sched.beta[tid] = Budget(3, 1)
    S, r_s = sched.reset_segment(tid)
    assert S == {tid}
    assert sched.beta[tid] == Budget(3, 1)   # the kept subtask stays boosted


def test_reset_segment_restores_boosted(tiny_bank):
    sched, S, _ = _two_scheduled(tiny_bank, "lin", "lin",
                                 MIN_BUDGET, MIN_BUDGET)
    sched.beta["t:1:b"] = Budget(3, 2)
    sched.d["t:1:b"] = 500_000
    S, r_s = sched.reset_segment("t:1:a")
    assert sched.beta["t:1:b"] == MIN_BUDGET
    assert sched.d["t:1:b"] == sched.d_init["t:1:b"]
    assert sched.c["t:1:b"] == 1_000_000
    assert S == {"t:1:a", "t:1:b"}


def test_reset_segment_three_tasks(tiny_bank):
    insts = [make_inst(f"t:1:{n}", "lin", tiny_bank, base=MIN_BUDGET,
                       release=0, deadline=dl, task="t")
             for n, dl in (("a", 600_000), ("b", 800_000), ("c", 700_000))]
    sched = make_sched(tiny_bank, insts, m=2)
    _prime(sched, 0, 500_000)
    sched.beta["t:1:b"] = Budget(4, 1)
    sched.d["t:1:b"] = 400_000       # boosted ahead of a and c
    S, r_s = sched.reset_segment("t:1:a")
    assert S == {"t:1:a", "t:1:c"}   # b falls back behind c
    assert r_s == Budget(2, 2)


# ---------------------------------------------------------------------------
# whole schedules
# ---------------------------------------------------------------------------

def test_schedule_single_subtask_stops_at_zero_gain(tiny_bank):
    # bandwidth never helps this workload, so growth stops at (4, 1)
    inst = make_inst("t:1:a", "lin", tiny_bank, base=MIN_BUDGET, release=0,
                     deadline=1_000_000, abs_deadline=1_000_000, task="t")
    aset = AnchorSet(1_000_000, {"t": (0,)})
    sched = cord_schedule([inst], aset, tiny_bank, Platform(1, R4))
    assert sched.schedulable
    assert sched.segments == (
        ScheduleSegment(0, 400_000, (("t:1:a", Budget(4, 1)),)),)
    assert sched.report["t:1:a"] == {
        "completion_us": 400_000, "done": True,
        "abs_deadline_us": 1_000_000, "met": True}


def test_schedule_single_subtask_climbs_to_r_max(tiny_bank):
    inst = make_inst("t:1:a", "both", tiny_bank, base=MIN_BUDGET, release=0,
                     deadline=1_000_000, abs_deadline=1_000_000, task="t")
    aset = AnchorSet(1_000_000, {"t": (0,)})
    sched = cord_schedule([inst], aset, tiny_bank, Platform(1, R4))
    end = ceil_ticks(tiny_bank.get("both", R4).wcet())
    assert sched.segments == (
        ScheduleSegment(0, end, (("t:1:a", R4),)),)


def test_schedule_two_independent_single_core(tiny_bank):
    a = make_inst("t:1:a", "lin", tiny_bank, base=MIN_BUDGET, release=0,
                  deadline=1_000_000, abs_deadline=1_000_000, task="t")
    b = make_inst("u:1:a", "lin12", tiny_bank, base=MIN_BUDGET, release=0,
                  deadline=1_200_000, abs_deadline=2_000_000, task="u")
    aset = AnchorSet(2_000_000, {"t": (0,), "u": (0,)})
    sched = cord_schedule([a, b], aset, tiny_bank, Platform(1, R4))
    assert sched.schedulable
    assert sched.segments == (
        ScheduleSegment(0, 400_000, (("t:1:a", Budget(4, 1)),)),
        ScheduleSegment(400_000, 880_000, (("u:1:a", Budget(4, 1)),)),
    )
    assert sched.report["t:1:a"]["completion_us"] == 400_000
    assert sched.report["u:1:a"]["completion_us"] == 880_000


def test_schedule_overload_unschedulable(tiny_bank):
    # two seconds of minimum-budget work against a one-second deadline
    # on one core with no headroom
    insts = [make_inst(f"{t}:1:a", "lin", tiny_bank, base=MIN_BUDGET,
                       release=0, deadline=1_000_000,
                       abs_deadline=1_000_000, task=t)
             for t in ("a", "b")]
    aset = AnchorSet(1_000_000, {"a": (0,), "b": (0,)})
    sched = cord_schedule(insts, aset, tiny_bank,
                          Platform(1, Budget(1, 1)))
    assert not sched.schedulable
    assert sched.report["a:1:a"]["met"] is True
    assert sched.report["b:1:a"] == {
        "completion_us": 2_000_000, "done": True,
        "abs_deadline_us": 1_000_000, "met": False}
    assert len(sched.segments) == 2


def test_schedule_idle_gap_between_anchors(tiny_bank):
    k1 = make_inst("t:1:a", "lin", tiny_bank, base=MIN_BUDGET, release=0,
                   deadline=1_000_000, abs_deadline=1_000_000, task="t")
    k2 = make_inst("t:2:a", "lin", tiny_bank, base=MIN_BUDGET,
                   release=1_000_000, deadline=2_000_000, anchor=1_000_000,
                   abs_deadline=2_000_000, task="t", k=2)
    aset = AnchorSet(2_000_000, {"t": (0, 1_000_000)})
    sched = cord_schedule([k1, k2], aset, tiny_bank, Platform(1, R4))
    assert sched.schedulable
    assert sched.segments == (
        ScheduleSegment(0, 400_000, (("t:1:a", Budget(4, 1)),)),
        ScheduleSegment(400_000, 1_000_000, ()),
        ScheduleSegment(1_000_000, 1_400_000, (("t:2:a", Budget(4, 1)),)),
    )


def test_schedule_diamond_respects_precedence(tiny_bank):
    ids, insts = _diamond(tiny_bank)
    aset = AnchorSet(4_000_000, {"t": (0,)})
    allocated, bad = base_alloc(insts, tiny_bank, Platform(2, R4), "greedy")
    assert bad == []
    sched = cord_schedule(allocated, aset, tiny_bank, Platform(2, R4))
    assert sched.schedulable
    first_seen = {}
    for seg in sched.segments:
        for tid, _ in seg.entries:
            first_seen.setdefault(tid, seg.start)
    for inst in insts:
        for p in inst.predecessors:
            assert sched.report[p]["completion_us"] <= first_seen[inst.id]
    # both middle nodes overlap after the source completes
    assert first_seen[ids[1]] == first_seen[ids[2]] == \
        sched.report[ids[0]]["completion_us"]


def _segment_invariants(sched, m, r_max):
    prev_end = None
    for seg in sched.segments:
        assert seg.start < seg.end
        if prev_end is not None:
            assert seg.start == prev_end
        prev_end = seg.end
        assert len(seg.entries) <= m
        total = Budget(0, 0)
        for _, beta in seg.entries:
            assert beta.covers(MIN_BUDGET)
            total = total.plus(beta)
        assert r_max.covers(total)


def test_schedule_fuzzed_invariants(desk_bank):
    plat = Platform(4, Budget(8, 8))
    for seed in (3, 4):
        ts = gen_taskset(TasksetConfig(utilization=1.0, seed=seed),
                         desk_bank)
        for mode in ("greedy", "deadline-aware"):
            sched = schedule_taskset(ts, desk_bank, plat, mode)
            _segment_invariants(sched, 4, Budget(8, 8))
            if not sched.schedulable:
                continue
            _, aset = anchors(ts)
            first_seen = {}
            for seg in sched.segments:
                for tid, _ in seg.entries:
                    first_seen.setdefault(tid, seg.start)
            for inst in instantiate(ts, aset, desk_bank):
                if inst.id not in first_seen:
                    continue
                for p in inst.predecessors:
                    assert sched.report[p]["completion_us"] <= \
                        first_seen[inst.id]


def test_schedule_deterministic(desk_bank):
    plat = Platform(4, Budget(8, 8))
    ts = gen_taskset(TasksetConfig(utilization=1.5, seed=11), desk_bank)
    s1 = schedule_taskset(ts, desk_bank, plat, "deadline-aware")
    s2 = schedule_taskset(ts, desk_bank, plat, "deadline-aware")
    assert s1.segments == s2.segments
    assert s1.report == s2.report
    assert s1.schedulable == s2.schedulable


def test_instantiate_expands_hyperperiod(desk_bank):
    ts = gen_taskset(TasksetConfig(utilization=0.5, seed=2), desk_bank)
    hyper, aset = anchors(ts)
    insts = instantiate(ts, aset, desk_bank)
    want = sum((hyper // t.period) * len(t.nodes) for t in ts.tasks)
    assert len(insts) == want
    ids = [s.id for s in insts]
    assert len(set(ids)) == len(ids)
    by_id = {s.id: s for s in insts}
    deadlines = {t.id: t.deadline for t in ts.tasks}
    for s in insts:
        assert s.abs_deadline == s.anchor + deadlines[s.task_id]
        for p in s.predecessors:
            assert by_id[p].instance == s.instance
            assert by_id[p].task_id == s.task_id


# ---------------------------------------------------------------------------
# schedule files
# ---------------------------------------------------------------------------

def test_schedule_csv_roundtrip(tiny_bank, tmp_path):
    k1 = make_inst("t:1:a", "lin", tiny_bank, base=MIN_BUDGET, release=0,
                   deadline=1_000_000, abs_deadline=1_000_000, task="t")
    k2 = make_inst("t:2:a", "lin", tiny_bank, base=MIN_BUDGET,
                   release=1_000_000, deadline=2_000_000, anchor=1_000_000,
                   abs_deadline=2_000_000, task="t", k=2)
    aset = AnchorSet(2_000_000, {"t": (0, 1_000_000)})
    sched = cord_schedule([k1, k2], aset, tiny_bank, Platform(1, R4))
    csv_path = tmp_path / "schedule.csv"
    write_schedule_csv(sched, csv_path)
    assert read_schedule_csv(csv_path) == sched.segments

    report_path = tmp_path / "report.json"
    write_report(sched, report_path)
    rep = read_report(report_path)
    assert rep["schedulable"] == sched.schedulable
    assert rep["subtasks"] == sched.report


def test_schedule_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_schedule_csv(path)
