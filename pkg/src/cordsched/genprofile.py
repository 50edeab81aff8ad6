"""Budget-conditioned generative profiling on the bridge solver.

Profiled runs across a training grid of budgets become one augmented
marginal per snapshot time: each support point is the per-interval
resource state of one run at that time with the run's budget appended.
Solving the transport chain over these marginals yields a distribution
at every intermediate time; conditioning that distribution on a budget
(exactly at trained budgets, by a Gaussian kernel in budget space at
unseen ones) and reducing each conditional to its argmax or mean point
produces a synthetic profile at any budget on the platform grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .msb import (
    DEFAULT_BETA_WEIGHT,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    Marginal,
    MsbSolution,
    ScatteredDistribution,
    build_cost_chain,
    interpolate,
    merge_coincident,
    sinkhorn_solve,
)
from .workload import Budget, ProfileSet, ResourceProfile, ResourceSample

# resource state = (instr, cache_req, cache_miss) per sampling interval
N_STATE_DIMS = 3
N_BUDGET_DIMS = 2

SNAPSHOT_SPACING = 0.05
OUTPUT_SPACING = 0.010
EXACT_BUDGET_TOL = 1e-6
KERNEL_FLOOR = 1e-12


class ExtrapolationError(ValueError):
    """Query budget too far from every trained budget."""


# ---------------------------------------------------------------------------
# conditional distributions and synthetic profiles
# ---------------------------------------------------------------------------

@dataclass
class ConditionalDistribution:
    """Resource-state distribution at one time given a budget.

    Budget coordinates are stripped from the points; coinciding states
    are merged, so weights are per distinct state.
    """

    time: float
    budget: np.ndarray
    points: np.ndarray   # (n, N_STATE_DIMS)
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.budget = np.asarray(self.budget, dtype=float).ravel()
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights disagree on support size")
        if abs(float(self.weights.sum()) - 1.0) > 1e-10:
            raise ValueError("conditional weights must sum to 1 within 1e-10")

    def ml_state(self) -> np.ndarray:
        """Highest-probability state; ties go to the lowest point index."""
        return self.points[int(np.argmax(self.weights))]

    def mean_state(self) -> np.ndarray:
        return self.weights @ self.points


@dataclass
class SyntheticProfile:
    """A generated profile at one budget, tagged with its reduction mode."""

    budget: Budget
    mode: str            # "ml" | "mean"
    interval: float
    profile: ResourceProfile


# ---------------------------------------------------------------------------
# marginal construction
# ---------------------------------------------------------------------------

def snapshot_grid(pset: ProfileSet, spacing: float = SNAPSHOT_SPACING) -> np.ndarray:
    """Times spacing*(k) for k=0.. until the longest run is covered."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if not pset.profiles:
        raise ValueError("profile set is empty")
    horizon = max(p.duration() for p in pset.profiles)
    n_last = int(np.ceil(horizon / spacing - 1e-9))
    n_last = max(n_last, 1)
    return spacing * np.arange(n_last + 1)


def build_marginals(pset: ProfileSet, snapshot_times) -> list[Marginal]:
    """One equally weighted marginal per snapshot time.

    Point i of every marginal belongs to the same profiled run: its
    per-interval state at that time with the run's budget appended.
    Runs shorter than the horizon contribute zero deltas past their end
    (the run holds its final cumulative state). Every budget must carry
    the same number of runs so the empirical weights are uniform.
    """
    if not pset.profiles:
        raise ValueError("profile set is empty")
    times = np.asarray(snapshot_times, dtype=float).ravel()
    if times.size < 2:
        raise ValueError("need at least two snapshot times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    if times[0] < 0:
        raise ValueError("snapshot times must be non-negative")
    sizes = {b: len(ps) for b, ps in pset.by_budget().items()}
    if len(set(sizes.values())) != 1:
        raise ValueError(f"unequal run counts per budget group: {sizes}")
    n = len(pset.profiles)
    marginals = []
    for t in times:
        pts = np.empty((n, N_STATE_DIMS + N_BUDGET_DIMS))
        for i, p in enumerate(pset.profiles):
            pts[i, :N_STATE_DIMS] = p.state_at(float(t))
            pts[i, N_STATE_DIMS] = p.budget.cache
            pts[i, N_STATE_DIMS + 1] = p.budget.bw
        marginals.append(
            Marginal(points=pts, weights=np.full(n, 1.0 / n), time=float(t)))
    return marginals


def pipeline_epsilon(marginals: list[Marginal], chain) -> float:
    """0.05 times the median positive state-only squared distance.

    The budget-penalty terms are excluded on purpose: including them
    puts the regularizer at the scale of the cross-budget penalty, where
    cross-budget kernel mass decays too slowly for the scaling iteration
    to contract. Set from the state dimensions alone, same-budget
    transport stays well conditioned and cross-budget entries underflow
    to exact zeros (runs cannot change budget mid-execution anyway).
    """
    nstate = marginals[0].points.shape[1] - chain.n_budget_dims
    chunks = []
    for a, b in zip(marginals[:-1], marginals[1:]):
        za = chain.standardize(a.points)[:, :nstate]
        zb = chain.standardize(b.points)[:, :nstate]
        d = za[:, None, :] - zb[None, :, :]
        c = np.einsum("ijk,ijk->ij", d, d).ravel()
        chunks.append(c[c > 0])
    pos = np.concatenate(chunks) if chunks else np.array([])
    if pos.size == 0:
        return 1.0
    return 0.05 * float(np.median(pos))


def solve_profiles(
    pset: ProfileSet,
    snapshot_times=None,
    epsilon: float | None = None,
    beta_weight: float = DEFAULT_BETA_WEIGHT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    log_domain: str | bool = "auto",
) -> MsbSolution:
    """Build marginals from a profile set and solve the transport chain."""
    pset.check()
    if snapshot_times is None:
        snapshot_times = snapshot_grid(pset)
    marginals = build_marginals(pset, snapshot_times)
    chain = build_cost_chain(marginals, beta_weight=beta_weight,
                             n_budget_dims=N_BUDGET_DIMS)
    if epsilon is None:
        epsilon = pipeline_epsilon(marginals, chain)
    sol = sinkhorn_solve(marginals, chain, epsilon=epsilon, tol=tol,
                         max_iter=max_iter, log_domain=log_domain)
    sol.stats["workload"] = pset.workload
    sol.stats["profile_interval"] = pset.interval
    return sol


# ---------------------------------------------------------------------------
# conditioning
# ---------------------------------------------------------------------------

def trained_budgets(solution: MsbSolution) -> np.ndarray:
    """Distinct budget rows present in the training data (sorted)."""
    nb = solution.chain.n_budget_dims
    if nb <= 0:
        raise ValueError("solution has no budget dimensions")
    return np.unique(solution.marginals[0].points[:, -nb:], axis=0)


def default_bandwidth(solution: MsbSolution) -> np.ndarray:
    """Per-dimension kernel width: one grid spacing of the trained budgets."""
    tb = trained_budgets(solution)
    h = np.ones(tb.shape[1])
    for k in range(tb.shape[1]):
        vals = np.unique(tb[:, k])
        if vals.size > 1:
            h[k] = float(np.diff(vals).min())
    return h


def budget_marginal(solution: MsbSolution) -> ScatteredDistribution:
    """Mass per trained budget: the conditional's normalizing factor.

    Time-invariant along the solved chain because transported mass keeps
    its budget coordinates, so slot 0 serves for every time.
    """
    nb = solution.chain.n_budget_dims
    m = solution.marginals[0]
    return merge_coincident(ScatteredDistribution(
        points=m.points[:, -nb:].copy(), weights=m.weights.copy(),
        time=m.time))


def conditional_at(
    solution: MsbSolution,
    t: float,
    budget,
    bandwidth=None,
) -> ConditionalDistribution:
    """Resource-state distribution at time t conditioned on a budget.

    At a trained budget the conditional is the exact slice of the
    interpolated distribution (budget coordinates matching within
    1e-6). Otherwise every support point is reweighted by a Gaussian
    kernel in budget space centered at the query, with per-dimension
    bandwidth defaulting to one grid spacing of the trained budgets.
    """
    nb = solution.chain.n_budget_dims
    if nb <= 0:
        raise ValueError("solution has no budget dimensions")
    bq = np.asarray(budget, dtype=float).ravel()
    if bq.shape[0] != nb:
        raise ValueError(f"budget needs {nb} components, got {bq.shape[0]}")
    dist = merge_coincident(interpolate(solution, t))
    beta = dist.points[:, -nb:]
    gap = np.abs(beta - bq[None, :]).max(axis=1)
    exact = gap <= EXACT_BUDGET_TOL
    if np.any(exact) and float(dist.weights[exact].sum()) > KERNEL_FLOOR:
        w = dist.weights[exact].copy()
        pts = dist.points[exact, :-nb]
    else:
        if bandwidth is None:
            h = default_bandwidth(solution)
        else:
            h = np.asarray(bandwidth, dtype=float)
            if h.ndim == 0:
                h = np.full(nb, float(h))
        if np.any(h <= 0):
            raise ValueError("bandwidth must be positive")
        z = (beta - bq[None, :]) / h[None, :]
        kern = np.exp(-0.5 * np.einsum("ij,ij->i", z, z))
        if float(kern.max()) < KERNEL_FLOOR:
            raise ExtrapolationError(
                f"budget {bq.tolist()} too far from every trained budget")
        w = dist.weights * kern
        pts = dist.points[:, :-nb]
    total = float(w.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise ExtrapolationError(
            f"budget {bq.tolist()} carries no conditional mass at t={t}")
    merged = merge_coincident(ScatteredDistribution(
        points=pts, weights=w / total, time=t))
    return ConditionalDistribution(time=t, budget=bq, points=merged.points,
                                   weights=merged.weights)


# ---------------------------------------------------------------------------
# synthetic profiles
# ---------------------------------------------------------------------------

def output_grid(solution: MsbSolution, interval: float = OUTPUT_SPACING) -> np.ndarray:
    """Times 0, interval, 2*interval, ... up to the last marginal time."""
    if interval <= 0:
        raise ValueError("interval must be positive")
    t_end = solution.marginals[-1].time
    n = int(np.floor(t_end / interval + 1e-9))
    return interval * np.arange(n + 1)


def conditional_series(
    solution: MsbSolution,
    budget,
    interval: float = OUTPUT_SPACING,
    bandwidth=None,
) -> list[ConditionalDistribution]:
    return [conditional_at(solution, float(t), budget, bandwidth=bandwidth)
            for t in output_grid(solution, interval)]


def profile_from_conditionals(
    conds: list[ConditionalDistribution],
    budget,
    mode: str,
    interval: float,
    workload: str = "workload",
) -> SyntheticProfile:
    """Reduce one conditional per grid time to a profile sample."""
    if mode not in ("ml", "mean"):
        raise ValueError(f"mode must be 'ml' or 'mean', got {mode!r}")
    bq = np.asarray(budget, dtype=float).ravel()
    b = Budget(int(round(bq[0])), int(round(bq[1])))
    samples = []
    for k, cond in enumerate(conds):
        state = cond.ml_state() if mode == "ml" else cond.mean_state()
        samples.append(ResourceSample(
            t=k * interval,
            instr=float(state[0]),
            cache_req=float(state[1]),
            cache_miss=float(state[2]),
        ))
    prof = ResourceProfile(
        workload=workload, run_id=f"synthetic-{mode}", budget=b,
        interval=interval, samples=samples)
    return SyntheticProfile(budget=b, mode=mode, interval=interval,
                            profile=prof)


def synthetic_profile(
    solution: MsbSolution,
    budget,
    mode: str = "ml",
    interval: float = OUTPUT_SPACING,
    bandwidth=None,
) -> SyntheticProfile:
    """Generate a profile at any budget from the solved chain."""
    conds = conditional_series(solution, budget, interval=interval,
                               bandwidth=bandwidth)
    return profile_from_conditionals(
        conds, budget, mode=mode, interval=interval,
        workload=str(solution.stats.get("workload", "workload")))
