"""Multi-phase execution models from profiles.

A profile's per-interval samples are clustered in (instr, cache_req,
cache_miss) space; consecutive samples with the same cluster collapse
into phases over instruction ranges. Each phase carries a worst-case
rate (the cluster-wide minimum) and, once a bank covers the full budget
grid, a lookahead table of expected rate gains per extra resource
partition.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.metrics import davies_bouldin_score
from sklearn.mixture import GaussianMixture

from ._util import derive_seed
from .workload import (
    MIN_BUDGET,
    RESOURCE_TYPES,
    Budget,
    GroundTruthWorkload,
    ResourceProfile,
)

DEFAULT_K_RANGE = (3, 20)
# relative Davies-Bouldin improvement below this counts as diminishing
DB_IMPROVEMENT = 0.05


# ---------------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    """One execution phase over the instruction range [start_ins, end_ins)."""

    start_ins: float
    end_ins: float
    rate: float                      # worst-case instructions per second
    cluster: int = -1
    delta: dict = field(default_factory=dict)    # type -> lookahead mean gain
    direct: dict = field(default_factory=dict)   # type -> one-step gain

    def span(self) -> float:
        return self.end_ins - self.start_ins


@dataclass
class PhaseModel:
    """Phases of one workload under one budget, contiguous over [0, max_ins)."""

    workload: str
    budget: Budget
    max_ins: float
    phases: tuple
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.phases = tuple(self.phases)
        if not self.phases:
            raise ValueError("model needs at least one phase")
        if self.max_ins <= 0:
            raise ValueError("max_ins must be positive")
        pos = 0.0
        for ph in self.phases:
            if ph.start_ins != pos:
                raise ValueError("phases must be contiguous from 0")
            if ph.end_ins <= ph.start_ins:
                raise ValueError("empty phase")
            if ph.rate <= 0:
                raise ValueError("phase rate must be positive")
            pos = ph.end_ins
        if pos != self.max_ins:
            raise ValueError("phases must cover [0, max_ins)")
        self._starts = [ph.start_ins for ph in self.phases]
        self._wcet = None

    def index_at(self, ins: float) -> int:
        """Index of the phase containing cumulative instruction count ins."""
        if ins < 0 or ins >= self.max_ins:
            raise ValueError(
                f"instruction count {ins} outside [0, {self.max_ins})")
        return bisect.bisect_right(self._starts, ins) - 1

    def lookup(self, ins: float) -> Phase:
        """Phase containing cumulative instruction count ins."""
        return self.phases[self.index_at(ins)]

    def rate_at(self, ins: float) -> float:
        return self.lookup(ins).rate

    def rate_at_clamped(self, ins: float) -> float:
        """rate_at with out-of-range counts clamped to the nearest phase."""
        if ins < 0:
            return self.phases[0].rate
        if ins >= self.max_ins:
            return self.phases[-1].rate
        return self.rate_at(ins)

    def wcet(self) -> float:
        """Execution time in seconds under this budget."""
        # scheduling hits this constantly; phases never change after init
        if self._wcet is None:
            self._wcet = sum(ph.span() / ph.rate for ph in self.phases)
        return self._wcet


@dataclass
class ModelBank:
    """Phase models keyed by (workload, budget) over a platform grid."""

    r_max: Budget
    models: dict = field(default_factory=dict)

    def add(self, model: PhaseModel) -> None:
        self.models[(model.workload, model.budget)] = model

    def has(self, workload: str, budget: Budget) -> bool:
        return (workload, budget) in self.models

    def get(self, workload: str, budget: Budget) -> PhaseModel:
        try:
            return self.models[(workload, budget)]
        except KeyError:
            raise KeyError(
                f"no model for workload {workload!r} at budget {budget}"
            ) from None

    def workloads(self) -> list[str]:
        seen: list[str] = []
        for wl, _ in self.models:
            if wl not in seen:
                seen.append(wl)
        return seen

    def budgets(self, workload: str) -> list[Budget]:
        return sorted(b for wl, b in self.models if wl == workload)

    def grid(self) -> list[Budget]:
        return [Budget(c, b)
                for c in range(1, self.r_max.cache + 1)
                for b in range(1, self.r_max.bw + 1)]

    def check_complete(self, workloads=None) -> None:
        """Every listed workload must cover the full budget grid."""
        names = list(workloads) if workloads is not None else self.workloads()
        for wl in names:
            missing = [b for b in self.grid() if (wl, b) not in self.models]
            if missing:
                raise ValueError(
                    f"workload {wl!r} missing {len(missing)} budgets, "
                    f"first {missing[0]}")


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------

def _db_score(points: np.ndarray, labels: np.ndarray) -> float:
    """Davies-Bouldin score; degenerate partitions rank worst."""
    if np.unique(labels).size < 2:
        return np.inf
    try:
        score = float(davies_bouldin_score(points, labels))
    except ValueError:
        return np.inf
    if not np.isfinite(score):
        return np.inf
    return score


def select_k(points: np.ndarray, k_range=DEFAULT_K_RANGE, seed: int = 0):
    """Pick a cluster count by Davies-Bouldin diminishing returns.

    Fits one Gaussian mixture per k in k_range and returns the smallest
    k whose relative score improvement to k+1 falls below 5%; a score of
    exactly 0 wins immediately. All points identical short-circuits to
    k_min with one shared label.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    k_min, k_max = int(k_range[0]), int(k_range[1])
    if not (1 <= k_min <= k_max):
        raise ValueError(f"bad k range [{k_min}, {k_max}]")
    n = points.shape[0]
    if n < k_max:
        raise ValueError(f"need at least k_max={k_max} points, got {n}")
    if np.all(points == points[0]):
        return k_min, np.zeros(n, dtype=int)

    ks = list(range(k_min, k_max + 1))
    labels_by_k = {}
    scores = []
    for k in ks:
        gmm = GaussianMixture(
            n_components=k, covariance_type="diag", tol=1e-6, max_iter=200,
            n_init=3, init_params="k-means++",
            random_state=int(derive_seed(seed, "gmm", k) % (2 ** 32)),
        )
        labels = gmm.fit_predict(points)
        labels_by_k[k] = labels
        scores.append(_db_score(points, labels))

    for i, k in enumerate(ks[:-1]):
        s = scores[i]
        if s == 0.0:
            return k, labels_by_k[k]
        if not np.isfinite(s):
            continue
        if (s - scores[i + 1]) / s < DB_IMPROVEMENT:
            return k, labels_by_k[k]
    if scores and scores[-1] == 0.0:
        return ks[-1], labels_by_k[ks[-1]]
    finite = [(s, k) for s, k in zip(scores, ks) if np.isfinite(s)]
    if finite:
        _, best = min(finite)
        return best, labels_by_k[best]
    return k_min, labels_by_k[k_min]


# ---------------------------------------------------------------------------
# phase extraction
# ---------------------------------------------------------------------------

def extract_phases(profile: ResourceProfile, labels) -> PhaseModel:
    """Collapse consecutive equal labels into phases.

    Phase boundaries sit at cumulative instruction counts. Each phase's
    rate is the minimum per-interval rate among all samples sharing its
    cluster label anywhere in the profile (worst case). The last sample
    that retires instructions is excluded from the minimum when its
    cluster has other members: a run ends mid-interval, so the trailing
    partial interval understates the true rate by up to the whole
    interval fraction. Runs that retire no instructions span no
    instruction range and are dropped; adjacent surviving runs with
    equal labels merge; a trailing run holding only the partial sample
    of an otherwise unused cluster folds into its predecessor. A
    cluster whose minimum rate is 0 is floored to one instruction per
    interval and flagged.
    """
    labels = np.asarray(labels).ravel()
    if labels.shape[0] != len(profile.samples):
        raise ValueError("one label per sample required")
    if labels.shape[0] == 0:
        raise ValueError("profile has no samples")
    interval = profile.interval
    rates = np.array([s.instr / interval for s in profile.samples])

    live = np.nonzero(rates > 0)[0]
    last_live = int(live[-1]) if live.size else -1
    floor = 1.0 / interval
    floored = []
    cluster_rate = {}
    for c in np.unique(labels):
        mask = labels == c
        full = mask.copy()
        if last_live >= 0:
            full[last_live] = False
        r = float(rates[full].min()) if np.any(full) else float(rates[mask].min())
        if r <= 0.0:
            r = floor
            floored.append(int(c))
        cluster_rate[int(c)] = r

    runs = []  # [cluster, first sample, last sample + 1, span]
    i = 0
    while i < len(labels):
        j = i
        while j < len(labels) and labels[j] == labels[i]:
            j += 1
        span = float(sum(s.instr for s in profile.samples[i:j]))
        if span > 0.0:
            c = int(labels[i])
            if runs and runs[-1][0] == c:
                runs[-1][2] = j
                runs[-1][3] += span
            else:
                runs.append([c, i, j, span])
        i = j
    if not runs:
        raise ValueError("profile retires no instructions")
    # A trailing run holding only the partial sample of an otherwise
    # unused cluster is a sampling artifact, not a phase: fold it into
    # its predecessor.
    if len(runs) >= 2:
        c, i0, j0, span = runs[-1]
        if (j0 - i0 == 1 and i0 == last_live
                and int(np.count_nonzero(labels == c)) == 1):
            runs[-2][3] += span
            runs.pop()
    phases = []
    pos = 0.0
    for c, _, _, span in runs:
        phases.append(Phase(start_ins=pos, end_ins=pos + span,
                            rate=cluster_rate[c], cluster=c))
        pos += span
    return PhaseModel(
        workload=profile.workload, budget=profile.budget, max_ins=pos,
        phases=tuple(phases),
        diagnostics={"floored_clusters": floored} if floored else {},
    )


def model_from_profile(
    profile: ResourceProfile,
    k_range=DEFAULT_K_RANGE,
    seed: int = 0,
) -> PhaseModel:
    """Cluster a profile's standardized features and extract phases."""
    feats = profile.features()
    if feats.shape[0] == 0:
        raise ValueError("profile has no samples")
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd[sd == 0.0] = 1.0
    z = (feats - mu) / sd
    k_max = min(int(k_range[1]), feats.shape[0])
    k_min = min(int(k_range[0]), k_max)
    _, labels = select_k(z, (k_min, k_max), seed=seed)
    return extract_phases(profile, labels)


def bank_from_profiles(profiles, r_max: Budget,
                       k_range=DEFAULT_K_RANGE, seed: int = 0) -> ModelBank:
    """Extract one model per profiled (workload, budget) run and fill
    lookahead tables. Accepts ResourceProfiles or ProfileSets."""
    flat = []
    for item in profiles:
        if hasattr(item, "samples"):
            flat.append(item)
        else:
            flat.extend(item.profiles)
    bank = ModelBank(r_max=r_max)
    for prof in flat:
        sub = derive_seed(seed, "extract", prof.workload,
                          prof.budget.cache, prof.budget.bw)
        bank.add(model_from_profile(prof, k_range=k_range, seed=sub))
    return build_delta_tables(bank)


# ---------------------------------------------------------------------------
# lookahead tables
# ---------------------------------------------------------------------------

def build_delta_tables(bank: ModelBank) -> ModelBank:
    """Fill per-phase expected rate gains per extra unit of resource.

    For phase p of the model at budget beta, the entry for one extra
    partition of a type is the mean, over every additional allocation
    beta'' of at least that one partition still fitting under r_max, of
    rate(beta + beta'') at p's start instruction minus p's rate. A type
    with no admissible allocation gets no entry. The one-step change is
    kept separately for diagnostics.
    """
    out = ModelBank(r_max=bank.r_max)
    for (wl, beta), model in bank.models.items():
        room = Budget(bank.r_max.cache - beta.cache, bank.r_max.bw - beta.bw)
        new_phases = []
        for ph in model.phases:
            delta = {}
            direct = {}
            for rtype in RESOURCE_TYPES:
                unit = Budget.unit(rtype)
                gains = []
                for extra_c in range(unit.cache, room.cache + 1):
                    for extra_b in range(unit.bw, room.bw + 1):
                        other = bank.get(wl, beta.plus(Budget(extra_c, extra_b)))
                        gains.append(
                            other.rate_at_clamped(ph.start_ins) - ph.rate)
                if gains:
                    delta[rtype] = float(np.mean(gains))
                if room.covers(unit):
                    one = bank.get(wl, beta.plus(unit))
                    direct[rtype] = one.rate_at_clamped(ph.start_ins) - ph.rate
            new_phases.append(replace(ph, delta=delta, direct=direct))
        out.add(PhaseModel(
            workload=model.workload, budget=model.budget,
            max_ins=model.max_ins, phases=tuple(new_phases),
            diagnostics=dict(model.diagnostics)))
    return out


# ---------------------------------------------------------------------------
# ground-truth models (measurement-free oracle path)
# ---------------------------------------------------------------------------

def model_from_ground_truth(gt: GroundTruthWorkload, budget: Budget) -> PhaseModel:
    """Exact phase model read off a synthetic workload's definition."""
    phases = tuple(
        Phase(start_ins=ph.start_ins, end_ins=ph.end_ins,
              rate=ph.rate(budget), cluster=i)
        for i, ph in enumerate(gt.phases)
    )
    return PhaseModel(workload=gt.name, budget=budget, max_ins=gt.max_ins,
                      phases=phases)


def bank_from_ground_truth(workloads, r_max: Budget) -> ModelBank:
    """Complete bank over the budget grid with lookahead tables filled."""
    if not r_max.covers(MIN_BUDGET):
        raise ValueError(f"r_max below minimum budget: {r_max}")
    bank = ModelBank(r_max=r_max)
    for gt in workloads.values() if isinstance(workloads, dict) else workloads:
        for c in range(1, r_max.cache + 1):
            for b in range(1, r_max.bw + 1):
                bank.add(model_from_ground_truth(gt, Budget(c, b)))
    return build_delta_tables(bank)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_bank(path, bank: ModelBank) -> None:
    """Write a bank as JSON: one record per model, one dict per phase."""
    doc = {
        "r_max": [bank.r_max.cache, bank.r_max.bw],
        "models": [
            {
                "workload": wl,
                "budget": [beta.cache, beta.bw],
                "max_ins": model.max_ins,
                "diagnostics": model.diagnostics,
                "phases": [
                    {
                        "start_ins": ph.start_ins,
                        "end_ins": ph.end_ins,
                        "rate": ph.rate,
                        "cluster": ph.cluster,
                        "delta": ph.delta,
                        "direct": ph.direct,
                    }
                    for ph in model.phases
                ],
            }
            for (wl, beta), model in sorted(
                bank.models.items(), key=lambda kv: (kv[0][0], kv[0][1]))
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_bank(path) -> ModelBank:
    with open(path) as fh:
        doc = json.load(fh)
    bank = ModelBank(r_max=Budget(*doc["r_max"]))
    for rec in doc["models"]:
        phases = tuple(
            Phase(start_ins=p["start_ins"], end_ins=p["end_ins"],
                  rate=p["rate"], cluster=p["cluster"],
                  delta=dict(p["delta"]), direct=dict(p["direct"]))
            for p in rec["phases"]
        )
        bank.add(PhaseModel(
            workload=rec["workload"], budget=Budget(*rec["budget"]),
            max_ins=rec["max_ins"], phases=phases,
            diagnostics=rec.get("diagnostics", {})))
    return bank
