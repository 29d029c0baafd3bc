"""Opaque-selling inventory model with joint replenishment.

Purchases map onto the balls-into-bins kernel: a customer buying product i
is a ball landing in bin i, so the per-product depletion x_i = S - z_i is
exactly a bin load.  A cycle ends the period any product's stock hits 0;
cycle statistics (length R, exercised discounts D) feed the renewal-reward
long-run cost

    C = K/E[R] + h/2 * (2NS + 1 - E[R^2]/E[R]) + delta * E[D]/E[R].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .balls_bins import (ALWAYS_FLEX, DYNAMIC, FLEX_SQRT_T, NO_FLEX,
                         PRESET_NUMERICS, PRESET_THEORY, STATIC, ModelParams,
                         PolicySpec, draw_raw_arrays, static_start,
                         theory_a_s)

NUMERICS_C_S = 10.0
NUMERICS_C_D = 0.7

REGIMES = ("delta_zero", "delta_inv_sqrt", "delta_const", "delta_sqrt")

OPAQUE_POLICIES = (NO_FLEX, ALWAYS_FLEX, STATIC, DYNAMIC, FLEX_SQRT_T)


@dataclass(frozen=True)
class InventoryParams:
    """Product count, initial stock, flex-customer mix, and cost constants."""

    N: int
    S: int
    q: float
    r: int = 2
    K: float = 0.0
    h: float = 0.0
    delta: float = 0.0
    allow_single_product: bool = False  # N=1 enables closed-form test oracles

    def __post_init__(self):
        min_n = 1 if self.allow_single_product else 2
        if self.N < min_n:
            raise ValueError(f"N must be >= {min_n}, got {self.N}")
        if self.S < 1:
            raise ValueError(f"S must be >= 1, got {self.S}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {self.q}")
        if self.N > 1 and not 2 <= self.r <= self.N:
            raise ValueError(f"r must be in [2, N], got r={self.r}")
        if self.K < 0 or self.h < 0 or self.delta < 0:
            raise ValueError("costs must be nonnegative")

    @property
    def horizon(self) -> int:
        """Loose upper bound N(S-1)+1 on any cycle length."""
        return self.N * (self.S - 1) + 1


@dataclass
class InventoryState:
    """Remaining stock per product and periods elapsed in the cycle."""

    stock: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class CycleStats:
    """One replenishment cycle: length R, exercised discount count D."""

    R: int
    D: int


@dataclass
class CostEstimate:
    """Long-run average cost decomposition with batch-means standard errors."""

    total: float
    ordering: float
    holding: float
    discount: float
    se_total: float
    se_ordering: float
    se_holding: float
    se_discount: float
    n_cycles: int


def resolve_opaque_policy(spec: PolicySpec, params: InventoryParams,
                          preset: str = PRESET_NUMERICS) -> PolicySpec:
    """Fill in missing opaque-policy constants from a named preset.

    The dynamic opaque policy is latched by default: once the imbalance
    condition triggers, the option is offered every period to depletion.
    """
    a_s, a_d = spec.a_s, spec.a_d
    model = ModelParams(T=params.horizon, N=max(params.N, 2), q=params.q)
    if a_s is None:
        a_s = (NUMERICS_C_S if preset == PRESET_NUMERICS
               else theory_a_s(model))
    if a_d is None:
        a_d = (NUMERICS_C_D if preset == PRESET_NUMERICS
               else 1.0 / (10.0 * math.comb(model.N, 2)))
    latched = spec.latched if spec.kind != DYNAMIC else True
    return PolicySpec(kind=spec.kind, a_s=a_s, a_d=a_d, latched=latched)


def inventory_gap(state: InventoryState, params: InventoryParams) -> float:
    """S - min_i z_i(t) - t/N; equals the balls-into-bins gap of x = S - z."""
    return params.S - float(state.stock.min()) - state.t / params.N


def static_cycle_start(params: InventoryParams, c_s: float) -> int:
    """Period from which the static opaque policy offers the option."""
    model = ModelParams(T=params.horizon, N=max(params.N, 2), q=params.q)
    return static_start(model, c_s)


def simulate_cycles(policy: PolicySpec, params: InventoryParams,
                    n_cycles: int, root_seed: int, *path):
    """Simulate independent replenishment cycles, vectorized in lockstep.

    Returns (R, D) int arrays of shape (n_cycles,).  Cycle c consumes the
    streams addressed by (*path, c), so results are independent of
    n_cycles batching.
    """
    N, S, q = params.N, params.S, params.q
    T = params.horizon
    arr = [draw_raw_arrays(root_seed, N, q, T, *path, c)
           for c in range(n_cycles)]
    is_flex = np.stack([a.is_flex for a in arr])
    preferred = np.stack([a.preferred for a in arr]).astype(np.int64)
    pair_lo = np.stack([a.pair_lo for a in arr]).astype(np.int64)
    pair_hi = np.stack([a.pair_hi for a in arr]).astype(np.int64)
    exert_u = (np.stack([a.exert_u for a in arr])
               if policy.kind == FLEX_SQRT_T else None)

    loads = np.zeros((n_cycles, N), dtype=np.int64)  # depletion x = S - z
    R = np.zeros(n_cycles, dtype=np.int64)
    D = np.zeros(n_cycles, dtype=np.int64)
    active = np.ones(n_cycles, dtype=bool)
    triggered = np.zeros(n_cycles, dtype=bool)
    rows = np.arange(n_cycles)

    t_hat = (static_cycle_start(params, policy.a_s)
             if policy.kind in (STATIC, FLEX_SQRT_T) else 0)
    sqrt_prob = (T - t_hat) / T if policy.kind == FLEX_SQRT_T else 0.0

    for t in range(T):
        if not active.any():
            break
        if policy.kind == NO_FLEX:
            exert = np.zeros(n_cycles, dtype=bool)
        elif policy.kind == ALWAYS_FLEX:
            exert = active.copy()
        elif policy.kind == STATIC:
            exert = active if t >= t_hat else np.zeros(n_cycles, dtype=bool)
        elif policy.kind == FLEX_SQRT_T:
            exert = active & (exert_u[:, t] < sqrt_prob)
        else:  # dynamic, latched per the opaque-selling formulation
            threshold = policy.a_d * (T - t) * q / N
            cond = active & (loads.max(axis=1) - t / N >= threshold)
            if policy.latched:
                triggered |= cond
                exert = active & triggered
            else:
                exert = cond

        flexed = exert & is_flex[:, t]
        a = pair_lo[:, t]
        b = pair_hi[:, t]
        # sell the most-stocked (least-depleted) product, ties to index a
        lesser = np.where(loads[rows, a] <= loads[rows, b], a, b)
        chosen = np.where(flexed, lesser, preferred[:, t])
        D += flexed & active
        loads[rows[active], chosen[active]] += 1
        depleted = active & (loads[rows, chosen] >= S)
        R[depleted] = t + 1
        active &= ~depleted

    return R, D


def run_cycle(policy: PolicySpec, params: InventoryParams, root_seed: int,
              *path, record_loads: bool = False):
    """Simulate a single cycle; optionally return the depletion trajectory
    (one loads row per period, post-placement) for coupling checks."""
    R, D = simulate_cycles(policy, params, 1, root_seed, *path)
    stats = CycleStats(R=int(R[0]), D=int(D[0]))
    if not record_loads:
        return stats
    # re-run sequentially to expose the trajectory
    arr = draw_raw_arrays(root_seed, params.N, params.q, params.horizon,
                          *path, 0)
    trajectory = _sequential_trajectory(policy, params, arr)
    return stats, trajectory


def _sequential_trajectory(policy: PolicySpec, params: InventoryParams, arr):
    N, S, q = params.N, params.S, params.q
    T = params.horizon
    loads = np.zeros(N, dtype=np.int64)
    out = []
    triggered = False
    t_hat = (static_cycle_start(params, policy.a_s)
             if policy.kind in (STATIC, FLEX_SQRT_T) else 0)
    sqrt_prob = (T - t_hat) / T if policy.kind == FLEX_SQRT_T else 0.0
    for t in range(T):
        if policy.kind == NO_FLEX:
            exert = False
        elif policy.kind == ALWAYS_FLEX:
            exert = True
        elif policy.kind == STATIC:
            exert = t >= t_hat
        elif policy.kind == FLEX_SQRT_T:
            exert = arr.exert_u[t] < sqrt_prob
        else:
            cond = loads.max() - t / N >= policy.a_d * (T - t) * q / N
            triggered = triggered or cond
            exert = triggered if policy.latched else cond
        if exert and arr.is_flex[t]:
            a, b = int(arr.pair_lo[t]), int(arr.pair_hi[t])
            chosen = a if loads[a] <= loads[b] else b
        else:
            chosen = int(arr.preferred[t])
        loads[chosen] += 1
        out.append(loads.copy())
        if loads[chosen] >= S:
            break
    return np.array(out)


def long_run_cost(R, D, params: InventoryParams,
                  n_groups: int = 10) -> CostEstimate:
    """Renewal-reward cost from cycle samples.

    Point estimates use pooled moments over all cycles (plug-in sample
    means for E[R], E[R^2], E[D]); standard errors come from batch means
    over ``n_groups`` contiguous cycle groups.
    """
    R = np.asarray(R, dtype=float)
    D = np.asarray(D, dtype=float)
    if R.size == 0:
        raise ValueError("long_run_cost needs at least one cycle")

    def terms(r, d):
        er = r.mean()
        er2 = (r ** 2).mean()
        ed = d.mean()
        ordering = params.K / er
        holding = params.h / 2.0 * (2 * params.N * params.S + 1 - er2 / er)
        discount = params.delta * ed / er
        return ordering, holding, discount

    ordering, holding, discount = terms(R, D)
    n_groups = min(n_groups, R.size)
    if n_groups >= 2:
        splits_r = np.array_split(R, n_groups)
        splits_d = np.array_split(D, n_groups)
        per_group = np.array([terms(r, d) for r, d in
                              zip(splits_r, splits_d)])
        ses = per_group.std(axis=0, ddof=1) / math.sqrt(n_groups)
        se_total = (per_group.sum(axis=1).std(ddof=1)
                    / math.sqrt(n_groups))
    else:
        ses = np.full(3, np.nan)
        se_total = float("nan")
    return CostEstimate(
        total=ordering + holding + discount,
        ordering=ordering, holding=holding, discount=discount,
        se_total=float(se_total), se_ordering=float(ses[0]),
        se_holding=float(ses[1]), se_discount=float(ses[2]),
        n_cycles=int(R.size),
    )


def lower_bound(params: InventoryParams) -> float:
    """Universal lower bound K/(N(S-1)+1) + h/2*(NS+N) on long-run cost."""
    return (params.K / params.horizon
            + params.h / 2.0 * (params.N * params.S + params.N))


def regime_delta(regime: str, N: int, S: int) -> float:
    """Opaque discount under a named scaling regime."""
    if regime == "delta_zero":
        return 0.0
    if regime == "delta_inv_sqrt":
        return 10.0 / math.sqrt(N * S)
    if regime == "delta_const":
        return 0.5
    if regime == "delta_sqrt":
        return 0.006 * math.sqrt(N * S)
    raise ValueError(f"unknown regime {regime!r}")


def eoq_params(N: int, S: int, q: float, r: int, regime: str,
               allow_single_product: bool = False) -> InventoryParams:
    """EOQ-consistent cost constants K = NS/2, h = 1/(NS) plus the
    regime's delta."""
    return InventoryParams(N=N, S=S, q=q, r=r,
                           K=N * S / 2.0, h=1.0 / (N * S),
                           delta=regime_delta(regime, N, S),
                           allow_single_product=allow_single_product)


def regime_sweep(regime: str, S_grid, *, N: int = 5, q: float = 0.1,
                 r: int = 2, instances: int = 10,
                 cycles_per_instance: int = 10, root_seed: int = 0,
                 preset: str = PRESET_NUMERICS, policies=OPAQUE_POLICIES,
                 cycle_cache: dict | None = None):
    """Tabulate C - C* for each policy over an ascending S grid.

    ``cycle_cache`` maps (policy kind, S) -> (R, D) arrays so the same
    cycle simulations can be shared across regimes (the dynamics do not
    depend on K, h, delta).
    """
    if list(S_grid) != sorted(S_grid):
        raise ValueError("S_grid must be ascending")
    rows = []
    for S in S_grid:
        params = eoq_params(N, S, q, r, regime)
        c_star = lower_bound(params)
        for kind in policies:
            key = (kind, S)
            if cycle_cache is not None and key in cycle_cache:
                R, D = cycle_cache[key]
            else:
                policy = resolve_opaque_policy(PolicySpec(kind=kind), params,
                                               preset)
                n = instances * cycles_per_instance
                R, D = simulate_cycles(policy, params, n, root_seed,
                                       "opaque", kind, S)
                if cycle_cache is not None:
                    cycle_cache[key] = (R, D)
            est = long_run_cost(R, D, params, n_groups=instances)
            rows.append({
                "regime": regime, "S": S, "policy": kind,
                "cost": est.total, "lower_bound": c_star,
                "loss": est.total - c_star, "se": est.se_total,
                "mean_R": float(np.mean(R)), "mean_D": float(np.mean(D)),
            })
    return rows
