"""Entropy-regularized multimarginal transport on a path-structured cost.

Supports discrete marginals mu_1..mu_ns at increasing times. The cost of
a tuple (i_1..i_ns) decomposes along the chain:

    C_{i1..ins} = sum_s C^s[i_s, i_{s+1}]

so the optimal coupling has the form M = K (x) U with per-edge Gibbs
kernels K^s = exp(-C^s/eps) and a rank-one dual factor U = prod u_s. The
cyclic scaling iteration

    u_s <- u_s * mu_s / proj_s(K (x) U)

is strictly contractive and converges linearly; every projection needed
is computed with forward/backward message passing so one sweep costs a
number of matrix-vector products linear in the number of marginals.

A dense-tensor reference solver (brute_force_oracle) computes the same
coupling by explicit marginalization for cross-checking at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

# Switch the scaling iteration to log-domain arithmetic when some kernel
# row or column would fully underflow (exp dies near cost/eps ~ 709).
LOG_SWITCH_RATIO = 690.0

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000
DEFAULT_BETA_WEIGHT = 10.0


class SinkhornConvergenceError(RuntimeError):
    """Scaling iteration did not reach tolerance within max_iter."""

    def __init__(self, msg: str, residual_history: list[float]):
        super().__init__(msg)
        self.residual_history = residual_history


class EpsilonUnderflowError(ValueError):
    """eps too small relative to the costs for linear-domain kernels."""


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass
class Marginal:
    """A discrete distribution over support points at one time."""

    points: np.ndarray   # (n, dim)
    weights: np.ndarray  # (n,), strictly positive, sums to 1
    time: float

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points and weights disagree on support size")
        if self.points.shape[0] == 0:
            raise ValueError("empty marginal")
        if np.any(self.weights <= 0):
            raise ValueError("marginal weights must be strictly positive")
        if abs(self.weights.sum() - 1.0) > 1e-8:
            raise ValueError("marginal weights must sum to 1")

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass
class CostChain:
    """Chain costs C^s between consecutive marginals plus normalization."""

    costs: list[np.ndarray]
    offset: np.ndarray
    scale: np.ndarray
    beta_weight: float
    n_budget_dims: int

    def max_cost(self) -> float:
        return max(float(c.max()) for c in self.costs)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        """Map raw coordinates into the standardized cost space."""
        z = (np.asarray(x, dtype=float) - self.offset) / self.scale
        if self.n_budget_dims:
            z = z.copy()
            z[..., -self.n_budget_dims:] *= self.beta_weight
        return z


@dataclass
class ScatteredDistribution:
    """Weighted point cloud representing a distribution at one time."""

    points: np.ndarray
    weights: np.ndarray
    time: float

    def __post_init__(self) -> None:
        s = float(self.weights.sum())
        if abs(s - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {s}, expected 1 within 1e-10")


@dataclass
class MsbSolution:
    """Converged scaling solution for one marginal sequence."""

    marginals: list[Marginal]
    chain: CostChain
    epsilon: float
    log_u: list[np.ndarray]
    log_phi: list[np.ndarray]
    log_psi: list[np.ndarray]
    residual: float
    iterations: int
    residual_history: list[float]
    log_domain: bool
    stats: dict = field(default_factory=dict)

    @property
    def n_marginals(self) -> int:
        return len(self.marginals)

    def duals(self) -> list[np.ndarray]:
        return [np.exp(lu) for lu in self.log_u]

    def kernels(self) -> list[np.ndarray]:
        return [np.exp(-c / self.epsilon) for c in self.chain.costs]

    def projection(self, s: int) -> np.ndarray:
        """Marginal of the coupling onto slot s (matches mu_s at tol)."""
        return np.exp(self.log_u[s] + self.log_phi[s] + self.log_psi[s])

    def objective(self) -> float:
        """Transport cost plus eps times plan entropy term.

        For a coupling of the form K (x) U the integrand C + eps*log M
        collapses to eps * sum_s log u_s, so the objective is
        eps * sum_s <proj_s, log u_s>.
        """
        total = 0.0
        for s in range(self.n_marginals):
            total += float(np.dot(self.projection(s), self.log_u[s]))
        return self.epsilon * total


# ---------------------------------------------------------------------------
# cost construction
# ---------------------------------------------------------------------------

def build_cost_chain(
    marginals: list[Marginal],
    beta_weight: float = DEFAULT_BETA_WEIGHT,
    n_budget_dims: int = 0,
    normalize: bool = True,
) -> CostChain:
    """Squared-Euclidean chain costs on standardized coordinates.

    All marginals are pooled to compute a per-dimension offset (mean) and
    scale (standard deviation; 1 for zero-variance dimensions). The
    trailing n_budget_dims dimensions are multiplied by beta_weight after
    standardization, which penalizes transport across budgets.
    """
    if len(marginals) < 2:
        raise ValueError("need at least two marginals")
    dim = marginals[0].points.shape[1]
    for m in marginals:
        if m.points.shape[1] != dim:
            raise ValueError("marginals disagree on dimension")
    if not (0 <= n_budget_dims <= dim):
        raise ValueError("n_budget_dims out of range")
    pooled = np.vstack([m.points for m in marginals])
    if normalize:
        offset = pooled.mean(axis=0)
        scale = pooled.std(axis=0)
        scale[scale == 0.0] = 1.0
    else:
        offset = np.zeros(dim)
        scale = np.ones(dim)
    chain = CostChain(costs=[], offset=offset, scale=scale,
                      beta_weight=beta_weight, n_budget_dims=n_budget_dims)
    zs = [chain.standardize(m.points) for m in marginals]
    for a, b in zip(zs[:-1], zs[1:]):
        d = a[:, None, :] - b[None, :, :]
        chain.costs.append(np.einsum("ijk,ijk->ij", d, d))
    return chain


def default_epsilon(chain: CostChain) -> float:
    """0.05 times the median cost entry across the chain."""
    entries = np.concatenate([c.ravel() for c in chain.costs])
    med = float(np.median(entries))
    if med <= 0:
        med = float(np.mean(entries)) or 1.0
    return 0.05 * med


# ---------------------------------------------------------------------------
# scaling iteration
# ---------------------------------------------------------------------------

def _backward_messages(kernels, u, counter):
    """psi_s for all s under the current duals (linear domain)."""
    ns = len(u)
    psi = [None] * ns
    psi[ns - 1] = np.ones_like(u[ns - 1])
    for s in range(ns - 2, -1, -1):
        psi[s] = kernels[s] @ (u[s + 1] * psi[s + 1])
        counter[0] += 1
    return psi


def _backward_messages_log(log_kernels, log_u, counter):
    ns = len(log_u)
    psi = [None] * ns
    psi[ns - 1] = np.zeros_like(log_u[ns - 1])
    for s in range(ns - 2, -1, -1):
        psi[s] = logsumexp(
            log_kernels[s] + (log_u[s + 1] + psi[s + 1])[None, :], axis=1)
        counter[0] += 1
    return psi


def sinkhorn_solve(
    marginals: list[Marginal],
    chain: CostChain | None = None,
    epsilon: float | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    log_domain: str | bool = "auto",
) -> MsbSolution:
    """Solve the path-structured multimarginal problem by cyclic scaling.

    One sweep updates u_1..u_ns in order; the forward message phi is
    maintained incrementally with the freshly updated duals while the
    backward messages psi are recomputed once per sweep, so each sweep
    costs 2*(ns-1) matrix-vector products. The residual reported after
    each sweep is max_s ||proj_s - mu_s||_inf with all messages consistent
    with the final duals of that sweep.
    """
    if chain is None:
        chain = build_cost_chain(marginals)
    if epsilon is None:
        epsilon = default_epsilon(chain)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    ns = len(marginals)
    if len(chain.costs) != ns - 1:
        raise ValueError("chain length does not match marginal count")
    for s, c in enumerate(chain.costs):
        if c.shape != (marginals[s].n, marginals[s + 1].n):
            raise ValueError(f"cost {s} has shape {c.shape}, expected "
                             f"({marginals[s].n}, {marginals[s + 1].n})")

    if log_domain == "auto":
        # Linear kernels stay usable as long as every row and column keeps
        # at least one representable entry; isolated underflowed entries
        # are harmless (they carry no mass anyway).
        use_log = False
        for c in chain.costs:
            row_min = c.min(axis=1) / epsilon
            col_min = c.min(axis=0) / epsilon
            if row_min.max() > LOG_SWITCH_RATIO or \
                    col_min.max() > LOG_SWITCH_RATIO:
                use_log = True
                break
    else:
        use_log = bool(log_domain)

    mu = [m.weights for m in marginals]
    counter = [0]  # matrix-vector products (or log-space equivalents)
    history: list[float] = []

    if use_log:
        log_kernels = [-c / epsilon for c in chain.costs]
        log_mu = [np.log(w) for w in mu]
        log_u = [np.zeros(m.n) for m in marginals]
        log_psi = _backward_messages_log(log_kernels, log_u, counter)
        for it in range(1, max_iter + 1):
            log_phi = [np.zeros(m.n) for m in marginals]
            for s in range(ns):
                log_u[s] = log_mu[s] - (log_phi[s] + log_psi[s])
                if s < ns - 1:
                    log_phi[s + 1] = logsumexp(
                        log_kernels[s]
                        + (log_u[s] + log_phi[s])[:, None], axis=0)
                    counter[0] += 1
            log_psi = _backward_messages_log(log_kernels, log_u, counter)
            residual = 0.0
            for s in range(ns):
                proj = np.exp(log_u[s] + log_phi[s] + log_psi[s])
                residual = max(residual, float(np.abs(proj - mu[s]).max()))
            history.append(residual)
            if residual <= tol:
                return MsbSolution(
                    marginals=marginals, chain=chain, epsilon=epsilon,
                    log_u=log_u, log_phi=log_phi, log_psi=log_psi,
                    residual=residual, iterations=it,
                    residual_history=history, log_domain=True,
                    stats={"matvecs": counter[0], "sweeps": it},
                )
        raise SinkhornConvergenceError(
            f"no convergence in {max_iter} sweeps "
            f"(residual {history[-1]:.3e})", history)

    # linear domain
    kernels = [np.exp(-c / epsilon) for c in chain.costs]
    for s, k in enumerate(kernels):
        if not np.all(np.isfinite(k)) or k.max() == 0.0 or \
                np.any(k.sum(axis=1) == 0.0) or np.any(k.sum(axis=0) == 0.0):
            raise EpsilonUnderflowError(
                f"kernel {s} underflows: eps={epsilon} too small for cost "
                f"scale {chain.costs[s].max():.3g}; use log_domain=True")
    u = [np.ones(m.n) for m in marginals]
    psi = _backward_messages(kernels, u, counter)
    for it in range(1, max_iter + 1):
        phi = [np.ones(m.n) for m in marginals]
        for s in range(ns):
            denom = phi[s] * psi[s]
            if np.any(denom <= 0.0) or not np.all(np.isfinite(denom)):
                raise EpsilonUnderflowError(
                    f"projection underflow at marginal {s}; "
                    f"use log_domain=True")
            u[s] = mu[s] / denom
            if s < ns - 1:
                phi[s + 1] = kernels[s].T @ (u[s] * phi[s])
                counter[0] += 1
        psi = _backward_messages(kernels, u, counter)
        residual = 0.0
        for s in range(ns):
            proj = u[s] * phi[s] * psi[s]
            residual = max(residual, float(np.abs(proj - mu[s]).max()))
        history.append(residual)
        if residual <= tol:
            return MsbSolution(
                marginals=marginals, chain=chain, epsilon=epsilon,
                log_u=[np.log(x) for x in u],
                log_phi=[np.log(x) for x in phi],
                log_psi=[np.log(x) for x in psi],
                residual=residual, iterations=it,
                residual_history=history, log_domain=False,
                stats={"matvecs": counter[0], "sweeps": it},
            )
    raise SinkhornConvergenceError(
        f"no convergence in {max_iter} sweeps (residual {history[-1]:.3e})",
        history)


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def bimarginal(solution: MsbSolution, s: int) -> np.ndarray:
    """Coupling between consecutive slots s and s+1.

    Rows sum to the slot-s projection, columns to the slot-(s+1)
    projection.
    """
    ns = solution.n_marginals
    if not (0 <= s <= ns - 2):
        raise IndexError(f"slot {s} out of range for {ns} marginals")
    log_row = solution.log_u[s] + solution.log_phi[s]
    log_col = solution.log_u[s + 1] + solution.log_psi[s + 1]
    log_k = -solution.chain.costs[s] / solution.epsilon
    return np.exp(log_row[:, None] + log_k + log_col[None, :])


def interpolate(solution: MsbSolution, t: float) -> ScatteredDistribution:
    """Distribution at time t by displacement interpolation.

    For t in [t_s, t_{s+1}] with lam = (t-t_s)/(t_{s+1}-t_s), mass
    B[i,j] of the (s, s+1) coupling sits at
    (1-lam)*x_i(s) + lam*x_j(s+1). lam within 1e-9 of an endpoint snaps
    to it so queries on ulp-perturbed time grids recover marginal
    support points bit-exactly.
    """
    times = [m.time for m in solution.marginals]
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t={t} outside solved range [{times[0]}, {times[-1]}]")
    s = int(np.searchsorted(times, t, side="right")) - 1
    s = min(max(s, 0), len(times) - 2)
    lam = (t - times[s]) / (times[s + 1] - times[s])
    lam = min(max(lam, 0.0), 1.0)
    if lam < 1e-9:
        lam = 0.0
    elif lam > 1.0 - 1e-9:
        lam = 1.0
    a = solution.marginals[s].points
    b = solution.marginals[s + 1].points
    pts = (1.0 - lam) * a[:, None, :] + lam * b[None, :, :]
    w = bimarginal(solution, s)
    return ScatteredDistribution(
        points=pts.reshape(-1, a.shape[1]), weights=w.ravel(), time=t)


def merge_coincident(dist: ScatteredDistribution) -> ScatteredDistribution:
    """Aggregate weights of exactly coinciding support points.

    Zero-weight points are dropped before the unique pass; interpolated
    clouds are mostly exact zeros once transport decouples into blocks,
    and sorting them would dominate the cost.
    """
    live = dist.weights > 0
    pts = dist.points[live]
    wts = dist.weights[live]
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    w = np.zeros(uniq.shape[0])
    np.add.at(w, inverse.ravel(), wts)
    return ScatteredDistribution(points=uniq, weights=w, time=dist.time)


# ---------------------------------------------------------------------------
# dense-tensor reference solver
# ---------------------------------------------------------------------------

ORACLE_SIZE_LIMIT = 1_000_000


@dataclass
class OracleResult:
    plan: np.ndarray
    duals: list[np.ndarray]
    residual: float
    iterations: int

    def bimarginal(self, s: int) -> np.ndarray:
        axes = tuple(a for a in range(self.plan.ndim) if a not in (s, s + 1))
        return self.plan.sum(axis=axes)

    def projection(self, s: int) -> np.ndarray:
        axes = tuple(a for a in range(self.plan.ndim) if a != s)
        return self.plan.sum(axis=axes)

    def objective(self, chain: CostChain, epsilon: float) -> float:
        cost = np.zeros_like(self.plan)
        ns = self.plan.ndim
        for s, c in enumerate(chain.costs):
            shape = [1] * ns
            shape[s] = c.shape[0]
            shape[s + 1] = c.shape[1]
            cost = cost + c.reshape(shape)
        m = self.plan
        return float(np.sum(m * (cost + epsilon * np.log(m))))


def brute_force_oracle(
    marginals: list[Marginal],
    chain: CostChain,
    epsilon: float,
    tol: float = 1e-12,
    max_iter: int = 20000,
) -> OracleResult:
    """Dense-tensor cyclic scaling by explicit marginalization.

    Builds the full n_1*...*n_ns coupling tensor and computes every
    projection by summing axes directly. Only for small instances
    (product of support sizes capped at 1e6); used to cross-check the
    message-passing solver.
    """
    ns = len(marginals)
    sizes = [m.n for m in marginals]
    total = 1
    for n in sizes:
        total *= n
    if total > ORACLE_SIZE_LIMIT:
        raise ValueError(f"instance too large for dense oracle: {total}")
    log_k = np.zeros(sizes)
    for s, c in enumerate(chain.costs):
        shape = [1] * ns
        shape[s] = sizes[s]
        shape[s + 1] = sizes[s + 1]
        log_k = log_k + (-c / epsilon).reshape(shape)
    kernel = np.exp(log_k)
    mu = [m.weights for m in marginals]
    u = [np.ones(n) for n in sizes]

    def scaled_plan():
        m = kernel.copy()
        for s in range(ns):
            shape = [1] * ns
            shape[s] = sizes[s]
            m = m * u[s].reshape(shape)
        return m

    for it in range(1, max_iter + 1):
        for s in range(ns):
            m = scaled_plan()
            axes = tuple(a for a in range(ns) if a != s)
            proj = m.sum(axis=axes)
            u[s] = u[s] * mu[s] / proj
        m = scaled_plan()
        residual = 0.0
        for s in range(ns):
            axes = tuple(a for a in range(ns) if a != s)
            residual = max(residual,
                           float(np.abs(m.sum(axis=axes) - mu[s]).max()))
        if residual <= tol:
            return OracleResult(plan=m, duals=u, residual=residual,
                                iterations=it)
    raise SinkhornConvergenceError(
        f"oracle did not converge in {max_iter} sweeps", [residual])
