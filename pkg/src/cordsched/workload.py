"""Profile data model and synthetic ground-truth workload generator.

A workload executes a fixed number of instructions. While it runs under a
resource budget (cache partitions, memory-bandwidth partitions) a profiler
records, once per sampling interval, how many instructions retired and how
many cache requests/misses occurred in that interval. Profiles are stored
as per-interval deltas; cumulative counts are derived prefix sums.

The synthetic ground truth replaces hardware measurement: a workload is a
sequence of phases over instruction ranges, each with an affine execution
rate in the budget, plus per-phase cache request/miss ratios and optional
multiplicative sampling noise.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import yaml


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------

class Budget(NamedTuple):
    """A resource budget: partition counts per resource type."""

    cache: int
    bw: int

    def plus(self, other: "Budget") -> "Budget":
        return Budget(self.cache + other.cache, self.bw + other.bw)

    def minus(self, other: "Budget") -> "Budget":
        return Budget(self.cache - other.cache, self.bw - other.bw)

    def covers(self, other: "Budget") -> bool:
        """True if self >= other in every component."""
        return self.cache >= other.cache and self.bw >= other.bw

    def total(self) -> int:
        return self.cache + self.bw

    @staticmethod
    def unit(rtype: str) -> "Budget":
        if rtype == "cache":
            return Budget(1, 0)
        if rtype == "bw":
            return Budget(0, 1)
        raise ValueError(f"unknown resource type {rtype!r}")


RESOURCE_TYPES = ("cache", "bw")

MIN_BUDGET = Budget(1, 1)


# ---------------------------------------------------------------------------
# profile containers
# ---------------------------------------------------------------------------

@dataclass
class ResourceSample:
    """Counters for one sampling interval starting at time t (seconds)."""

    t: float
    instr: float
    cache_req: float
    cache_miss: float

    def feature(self) -> tuple[float, float, float]:
        return (self.instr, self.cache_req, self.cache_miss)


@dataclass
class ResourceProfile:
    """One profiled run of a workload under a fixed budget."""

    workload: str
    run_id: str
    budget: Budget
    interval: float
    samples: list[ResourceSample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def duration(self) -> float:
        return len(self.samples) * self.interval

    def total_instr(self) -> float:
        return float(sum(s.instr for s in self.samples))

    def features(self) -> np.ndarray:
        """(n, 3) matrix of per-interval (instr, cache_req, cache_miss)."""
        return np.array([s.feature() for s in self.samples], dtype=float)

    def cumulative_instr(self) -> np.ndarray:
        """Cumulative instructions at the END of each interval."""
        return np.cumsum([s.instr for s in self.samples])

    def state_at(self, t: float) -> tuple[float, float, float]:
        """Per-interval counters of the interval containing time t.

        Sample k covers [k*interval, (k+1)*interval). Times past the end of
        the run return zero deltas (the run holds its final cumulative
        state after completion).
        """
        if t < 0:
            raise ValueError(f"negative time {t}")
        k = int(np.floor(t / self.interval + 1e-9))
        if k >= len(self.samples):
            return (0.0, 0.0, 0.0)
        return self.samples[k].feature()

    def check(self) -> None:
        if self.budget.cache < 1 or self.budget.bw < 1:
            raise ValueError(f"budget below minimum: {self.budget}")
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        for k, s in enumerate(self.samples):
            if not np.isclose(s.t, k * self.interval, atol=1e-9):
                raise ValueError(
                    f"sample {k} of {self.run_id}: time {s.t} not on the "
                    f"interval grid"
                )
            if s.instr < 0 or s.cache_req < 0 or s.cache_miss < 0:
                raise ValueError(f"sample {k} of {self.run_id}: negative counter")
            if s.cache_miss > s.cache_req + 1e-9:
                raise ValueError(
                    f"sample {k} of {self.run_id}: misses exceed requests"
                )


@dataclass
class ProfileSet:
    """Profiles of one workload across a grid of budgets.

    r_max is the full platform grid corner: valid budgets are
    (1,1) <= beta <= r_max. The sampled budgets (the training grid) are
    whatever budgets appear among the profiles.
    """

    workload: str
    r_max: Budget
    interval: float
    profiles: list[ResourceProfile] = field(default_factory=list)

    def sampled_budgets(self) -> list[Budget]:
        seen: list[Budget] = []
        for p in self.profiles:
            if p.budget not in seen:
                seen.append(p.budget)
        return seen

    def by_budget(self) -> dict[Budget, list[ResourceProfile]]:
        groups: dict[Budget, list[ResourceProfile]] = {}
        for p in self.profiles:
            groups.setdefault(p.budget, []).append(p)
        return groups

    def check(self) -> None:
        for p in self.profiles:
            p.check()
            if p.workload != self.workload:
                raise ValueError(
                    f"profile {p.run_id} is for workload {p.workload!r}, "
                    f"set is for {self.workload!r}"
                )
            if not np.isclose(p.interval, self.interval):
                raise ValueError(f"profile {p.run_id}: inconsistent interval")
            if not self.r_max.covers(p.budget):
                raise ValueError(
                    f"profile {p.run_id}: budget {p.budget} outside grid "
                    f"{self.r_max}"
                )


# ---------------------------------------------------------------------------
# synthetic ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthPhase:
    """One execution phase over an instruction range [start_ins, end_ins).

    Execution rate under budget beta is affine:
        rate = base_rate + cache_coeff*(beta.cache-1) + bw_coeff*(beta.bw-1)
    in instructions per second. Cache requests are req_ratio per
    instruction; misses are miss_ratio per request.
    """

    start_ins: float
    end_ins: float
    base_rate: float
    cache_coeff: float
    bw_coeff: float
    req_ratio: float
    miss_ratio: float

    def rate(self, budget: Budget) -> float:
        return (
            self.base_rate
            + self.cache_coeff * (budget.cache - 1)
            + self.bw_coeff * (budget.bw - 1)
        )


@dataclass(frozen=True)
class GroundTruthWorkload:
    """A synthetic workload: phases partition [0, max_ins)."""

    name: str
    max_ins: float
    phases: tuple[GroundTruthPhase, ...]
    noise_level: float = 0.0

    def __post_init__(self) -> None:
        if self.max_ins <= 0:
            raise ValueError("max_ins must be positive")
        if not self.phases:
            raise ValueError("workload needs at least one phase")
        if not (0.0 <= self.noise_level < 1.0 / 3.0):
            raise ValueError("noise_level must lie in [0, 1/3)")
        pos = 0.0
        for ph in self.phases:
            if not np.isclose(ph.start_ins, pos):
                raise ValueError("phases must be contiguous from 0")
            if ph.end_ins <= ph.start_ins:
                raise ValueError("empty phase")
            if ph.base_rate <= 0:
                raise ValueError("base rate must be positive")
            # non-negative coefficients keep rate(beta) monotone in beta
            if ph.cache_coeff < 0 or ph.bw_coeff < 0:
                raise ValueError("sensitivity coefficients must be >= 0")
            if not (0 <= ph.req_ratio):
                raise ValueError("req_ratio must be >= 0")
            if not (0 <= ph.miss_ratio <= 1):
                raise ValueError("miss_ratio must lie in [0, 1]")
            pos = ph.end_ins
        if not np.isclose(pos, self.max_ins):
            raise ValueError("phases must cover [0, max_ins)")

    def phase_at(self, ins: float) -> GroundTruthPhase:
        if ins < 0 or ins >= self.max_ins:
            raise ValueError(f"instruction index {ins} outside [0, {self.max_ins})")
        starts = [ph.start_ins for ph in self.phases]
        k = bisect.bisect_right(starts, ins) - 1
        return self.phases[k]

    def rate_at(self, ins: float, budget: Budget) -> float:
        return self.phase_at(ins).rate(budget)

    def wcet(self, budget: Budget) -> float:
        """Execution time in seconds under a constant budget, noise-free."""
        return sum(
            (ph.end_ins - ph.start_ins) / ph.rate(budget) for ph in self.phases
        )


def make_ground_truth(
    name: str,
    max_ins: float,
    phase_specs: Iterable[dict],
    noise_level: float = 0.0,
) -> GroundTruthWorkload:
    """Build a workload from phase spec dicts.

    Each spec gives either span_frac (fraction of max_ins) or span
    (absolute instructions), plus base_rate and optional cache_coeff,
    bw_coeff, req_ratio, miss_ratio.
    """
    specs = list(phase_specs)
    spans = []
    for s in specs:
        if "span" in s:
            spans.append(float(s["span"]))
        elif "span_frac" in s:
            spans.append(float(s["span_frac"]) * max_ins)
        else:
            raise ValueError("phase spec needs span or span_frac")
    total = sum(spans)
    if not np.isclose(total, max_ins, rtol=1e-6):
        # normalize fractional specs that do not sum exactly to one
        spans = [sp * max_ins / total for sp in spans]
    phases = []
    pos = 0.0
    for s, span in zip(specs, spans):
        end = pos + span
        phases.append(
            GroundTruthPhase(
                start_ins=pos,
                end_ins=end,
                base_rate=float(s["base_rate"]),
                cache_coeff=float(s.get("cache_coeff", 0.0)),
                bw_coeff=float(s.get("bw_coeff", 0.0)),
                req_ratio=float(s.get("req_ratio", 0.1)),
                miss_ratio=float(s.get("miss_ratio", 0.3)),
            )
        )
        pos = end
    # force the last boundary onto max_ins exactly
    last = phases[-1]
    phases[-1] = GroundTruthPhase(
        last.start_ins, float(max_ins), last.base_rate, last.cache_coeff,
        last.bw_coeff, last.req_ratio, last.miss_ratio,
    )
    return GroundTruthWorkload(
        name=name, max_ins=float(max_ins), phases=tuple(phases),
        noise_level=float(noise_level),
    )


def sample_profile(
    workload: GroundTruthWorkload,
    budget: Budget,
    seed: int,
    run_id: str | None = None,
    interval: float = 0.010,
) -> ResourceProfile:
    """Simulate one profiled run of a ground-truth workload.

    Each interval retires rate*interval instructions, where the rate is
    held at its value at the interval's starting instruction position
    (zero-order hold). Noise multiplies the count by (1 + z) with
    z ~ N(0, noise_level) truncated at +-3 sigma. The final interval is
    clipped so the cumulative count lands exactly on max_ins.
    """
    if not budget.covers(MIN_BUDGET):
        raise ValueError(f"budget below minimum: {budget}")
    rng = np.random.default_rng(seed)
    if run_id is None:
        run_id = f"{workload.name}-c{budget.cache}b{budget.bw}-{seed}"
    samples: list[ResourceSample] = []
    c = 0.0
    k = 0
    nl = workload.noise_level
    while c < workload.max_ins - 1e-9:
        ph = workload.phase_at(min(c, workload.max_ins - 1e-9))
        delta = ph.rate(budget) * interval
        if nl > 0:
            z = float(rng.normal(0.0, nl))
            z = min(3 * nl, max(-3 * nl, z))
            delta *= 1.0 + z
        delta = min(delta, workload.max_ins - c)
        samples.append(
            ResourceSample(
                t=k * interval,
                instr=delta,
                cache_req=ph.req_ratio * delta,
                cache_miss=ph.miss_ratio * ph.req_ratio * delta,
            )
        )
        c += delta
        k += 1
    return ResourceProfile(
        workload=workload.name, run_id=run_id, budget=budget,
        interval=interval, samples=samples,
    )


# ---------------------------------------------------------------------------
# profile CSV I/O
# ---------------------------------------------------------------------------

PROFILE_HEADER = ["run_id", "beta_cache", "beta_bw", "t_ms", "instr",
                  "cache_req", "cache_miss"]


class ProfileFormatError(ValueError):
    """Malformed profile file; carries the 1-based line number."""

    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def write_profiles(path, pset: ProfileSet) -> None:
    """Write a ProfileSet as CSV with # key=value metadata lines on top."""
    pset.check()
    interval_ms = pset.interval * 1000.0
    if abs(interval_ms - round(interval_ms)) > 1e-6:
        raise ValueError("sampling interval must be a whole number of ms")
    with open(path, "w", newline="") as fh:
        fh.write(f"# workload={pset.workload}\n")
        fh.write(f"# interval_ms={int(round(interval_ms))}\n")
        fh.write(f"# r_max_cache={pset.r_max.cache}\n")
        fh.write(f"# r_max_bw={pset.r_max.bw}\n")
        w = csv.writer(fh)
        w.writerow(PROFILE_HEADER)
        for p in pset.profiles:
            for k, s in enumerate(p.samples):
                t_ms = int(round(s.t * 1000.0))
                w.writerow([
                    p.run_id, p.budget.cache, p.budget.bw, t_ms,
                    repr(float(s.instr)), repr(float(s.cache_req)),
                    repr(float(s.cache_miss)),
                ])


def read_profiles(path) -> ProfileSet:
    """Read a ProfileSet written by write_profiles.

    Malformed rows raise ProfileFormatError with the offending line
    number.
    """
    meta: dict[str, str] = {}
    profiles: dict[str, ResourceProfile] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        lineno = 0
        header_seen = False
        interval = None
        for raw in fh:
            lineno += 1
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise ProfileFormatError(f"bad metadata {body!r}", lineno)
                key, val = body.split("=", 1)
                meta[key.strip()] = val.strip()
                continue
            cells = next(csv.reader([line]))
            if not header_seen:
                if cells != PROFILE_HEADER:
                    raise ProfileFormatError(
                        f"expected header {','.join(PROFILE_HEADER)}", lineno)
                header_seen = True
                for key in ("workload", "interval_ms", "r_max_cache", "r_max_bw"):
                    if key not in meta:
                        raise ProfileFormatError(
                            f"missing metadata key {key}", lineno)
                interval = int(meta["interval_ms"]) / 1000.0
                continue
            if len(cells) != len(PROFILE_HEADER):
                raise ProfileFormatError(
                    f"expected {len(PROFILE_HEADER)} fields, got {len(cells)}",
                    lineno)
            try:
                run_id = cells[0]
                budget = Budget(int(cells[1]), int(cells[2]))
                t_ms = int(cells[3])
                instr = float(cells[4])
                req = float(cells[5])
                miss = float(cells[6])
            except ValueError as exc:
                raise ProfileFormatError(str(exc), lineno) from None
            if run_id not in profiles:
                profiles[run_id] = ResourceProfile(
                    workload=meta["workload"], run_id=run_id, budget=budget,
                    interval=interval, samples=[],
                )
                order.append(run_id)
            prof = profiles[run_id]
            if prof.budget != budget:
                raise ProfileFormatError(
                    f"run {run_id} changes budget mid-run", lineno)
            k = len(prof.samples)
            expect_ms = round(k * interval * 1000.0)
            if t_ms != expect_ms:
                raise ProfileFormatError(
                    f"run {run_id}: expected t_ms={expect_ms}, got {t_ms}",
                    lineno)
            if miss > req + 1e-9 or instr < 0 or req < 0 or miss < 0:
                raise ProfileFormatError(
                    f"run {run_id}: inconsistent counters", lineno)
            prof.samples.append(
                ResourceSample(t=k * interval, instr=instr, cache_req=req,
                               cache_miss=miss))
    if not header_seen:
        raise ProfileFormatError("no header row", lineno if lineno else 1)
    pset = ProfileSet(
        workload=meta["workload"],
        r_max=Budget(int(meta["r_max_cache"]), int(meta["r_max_bw"])),
        interval=interval,
        profiles=[profiles[r] for r in order],
    )
    pset.check()
    return pset


# ---------------------------------------------------------------------------
# workload spec files (YAML) and the default synthetic stable
# ---------------------------------------------------------------------------

def load_workload_specs(path) -> dict[str, GroundTruthWorkload]:
    """Load ground-truth workloads from a YAML spec file."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "workloads" not in doc:
        raise ValueError("workload spec must have a top-level 'workloads' list")
    out: dict[str, GroundTruthWorkload] = {}
    for w in doc["workloads"]:
        gt = make_ground_truth(
            name=w["name"],
            max_ins=float(w["max_ins"]),
            phase_specs=w["phases"],
            noise_level=float(w.get("noise_level", 0.0)),
        )
        out[gt.name] = gt
    return out


def dump_workload_specs(path, workloads: Iterable[GroundTruthWorkload]) -> None:
    doc = {"workloads": []}
    for w in workloads:
        doc["workloads"].append({
            "name": w.name,
            "max_ins": float(w.max_ins),
            "noise_level": float(w.noise_level),
            "phases": [
                {
                    "span": float(ph.end_ins - ph.start_ins),
                    "base_rate": float(ph.base_rate),
                    "cache_coeff": float(ph.cache_coeff),
                    "bw_coeff": float(ph.bw_coeff),
                    "req_ratio": float(ph.req_ratio),
                    "miss_ratio": float(ph.miss_ratio),
                }
                for ph in w.phases
            ],
        })
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def default_workloads(noise_level: float = 0.0) -> dict[str, GroundTruthWorkload]:
    """A small stable of synthetic workloads with varied phase structure.

    Rates are sized so that execution times at mid-grid budgets land
    near 0.1..0.25 s, which keeps generated task periods in the one to
    sixteen second band and lets realized utilization track the target
    instead of saturating the period clamp.
    """
    mk = make_ground_truth
    ws = [
        mk("cachewarm", 1.5e6, [
            dict(span_frac=0.25, base_rate=6.0e6, cache_coeff=8.0e5,
                 bw_coeff=1.0e5, req_ratio=0.12, miss_ratio=0.45),
            dict(span_frac=0.25, base_rate=9.0e6, cache_coeff=2.0e5,
                 bw_coeff=1.0e5, req_ratio=0.05, miss_ratio=0.20),
            dict(span_frac=0.25, base_rate=5.0e6, cache_coeff=9.0e5,
                 bw_coeff=1.0e5, req_ratio=0.15, miss_ratio=0.50),
            dict(span_frac=0.25, base_rate=8.0e6, cache_coeff=3.0e5,
                 bw_coeff=5.0e4, req_ratio=0.08, miss_ratio=0.30),
        ], noise_level),
        mk("membound", 1.2e6, [
            dict(span_frac=0.30, base_rate=5.0e6, cache_coeff=1.0e5,
                 bw_coeff=7.0e5, req_ratio=0.20, miss_ratio=0.60),
            dict(span_frac=0.20, base_rate=7.0e6, cache_coeff=5.0e4,
                 bw_coeff=4.0e5, req_ratio=0.10, miss_ratio=0.30),
            dict(span_frac=0.30, base_rate=4.5e6, cache_coeff=1.0e5,
                 bw_coeff=8.0e5, req_ratio=0.22, miss_ratio=0.65),
            dict(span_frac=0.20, base_rate=6.0e6, cache_coeff=5.0e4,
                 bw_coeff=5.0e5, req_ratio=0.12, miss_ratio=0.35),
        ], noise_level),
        mk("balanced", 1.4e6, [
            dict(span_frac=0.2, base_rate=6.0e6, cache_coeff=4.0e5,
                 bw_coeff=3.0e5, req_ratio=0.10, miss_ratio=0.40),
            dict(span_frac=0.2, base_rate=8.0e6, cache_coeff=3.0e5,
                 bw_coeff=4.0e5, req_ratio=0.09, miss_ratio=0.35),
            dict(span_frac=0.2, base_rate=5.0e6, cache_coeff=5.0e5,
                 bw_coeff=2.0e5, req_ratio=0.13, miss_ratio=0.45),
            dict(span_frac=0.2, base_rate=7.0e6, cache_coeff=2.0e5,
                 bw_coeff=5.0e5, req_ratio=0.11, miss_ratio=0.38),
            dict(span_frac=0.2, base_rate=9.0e6, cache_coeff=3.0e5,
                 bw_coeff=2.0e5, req_ratio=0.07, miss_ratio=0.25),
        ], noise_level),
        mk("steady", 1.0e6, [
            dict(span_frac=0.4, base_rate=7.0e6, cache_coeff=4.0e4,
                 bw_coeff=3.0e4, req_ratio=0.06, miss_ratio=0.20),
            dict(span_frac=0.3, base_rate=7.5e6, cache_coeff=3.0e4,
                 bw_coeff=3.0e4, req_ratio=0.05, miss_ratio=0.18),
            dict(span_frac=0.3, base_rate=6.5e6, cache_coeff=5.0e4,
                 bw_coeff=2.0e4, req_ratio=0.07, miss_ratio=0.22),
        ], noise_level),
        mk("burst", 1.6e6, [
            dict(span_frac=0.15, base_rate=1.0e7, cache_coeff=2.0e5,
                 bw_coeff=1.0e5, req_ratio=0.04, miss_ratio=0.15),
            dict(span_frac=0.20, base_rate=4.0e6, cache_coeff=7.0e5,
                 bw_coeff=3.0e5, req_ratio=0.18, miss_ratio=0.55),
            dict(span_frac=0.15, base_rate=9.0e6, cache_coeff=1.0e5,
                 bw_coeff=2.0e5, req_ratio=0.05, miss_ratio=0.20),
            dict(span_frac=0.20, base_rate=4.5e6, cache_coeff=8.0e5,
                 bw_coeff=2.0e5, req_ratio=0.16, miss_ratio=0.50),
            dict(span_frac=0.15, base_rate=8.0e6, cache_coeff=2.0e5,
                 bw_coeff=1.0e5, req_ratio=0.06, miss_ratio=0.22),
            dict(span_frac=0.15, base_rate=5.0e6, cache_coeff=6.0e5,
                 bw_coeff=4.0e5, req_ratio=0.14, miss_ratio=0.48),
        ], noise_level),
    ]
    return {w.name: w for w in ws}
