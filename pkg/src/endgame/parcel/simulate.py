"""One-day delivery simulation: online package-to-truck assignment with
approximate routing and five flexing policies.

Packages are bootstrap-resampled from the corpus pool.  Truck travel
time is tracked approximately between full TSP re-solves (every M1
arrivals) by adding, per assignment, twice the distance to the nearest
already-assigned stop (or the depot for an empty truck).  The day ends
with an exact re-solve for every truck.

Policies:

* ``no_flex``: always the default zone's truck.
* ``unloading_only``: dynamic threshold on unloading hours only; the
  flex set is every zone whose center lies within ``radius_km`` of the
  package.
* ``routing_dynamic``: the same threshold rule on unloading plus
  approximate travel hours; flex set from the 1 km closeness rule.
* ``patient_dynamic``: flexes only when the default truck's one-step
  load exceeds the best candidate's load projected to the end of the
  horizon using per-zone-pair increment tables.
* ``cost_min``: flexes when the projected end-of-day cost saving of the
  best candidate exceeds a time-decaying threshold, with future zone
  arrivals modeled as binomial counts.

The thresholds for ``unloading_only`` and ``routing_dynamic`` live in
hours, so the dimensionless ball-model threshold a_d (T - t) / N is
scaled by the pool's mean unloading time per package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..streams import stream
from .corpus import Corpus
from .tsp import tsp_route

NO_FLEX = "no_flex"
UNLOADING_ONLY = "unloading_only"
ROUTING_DYNAMIC = "routing_dynamic"
PATIENT_DYNAMIC = "patient_dynamic"
COST_MIN = "cost_min"

PARCEL_POLICIES = (NO_FLEX, UNLOADING_ONLY, ROUTING_DYNAMIC,
                   PATIENT_DYNAMIC, COST_MIN)

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ParcelParams:
    """Costs, horizon, and routing constants for one delivery day."""

    c_r: float = 6.3
    c_o: float = 38.0
    h_max: float = 8.0
    N: int = 24
    T: int = 2000
    speed: float = 15.75
    flex_km: float = 1.0
    oblivious_radius_km: float = 5.0
    M1: int = 100
    M2: int = 200
    a_d: float = 0.7

    def __post_init__(self):
        for name in ("c_r", "c_o", "h_max", "N", "T", "speed", "flex_km",
                     "oblivious_radius_km", "M1", "M2", "a_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ParcelPolicy:
    kind: str
    a_d: float | None = None       # None: take ParcelParams.a_d
    radius_km: float | None = None  # unloading_only flex radius override

    def __post_init__(self):
        if self.kind not in PARCEL_POLICIES:
            raise ValueError(f"unknown parcel policy {self.kind!r}")


@dataclass
class TruckState:
    """One truck's assigned stops and running load components."""

    pts: list = field(default_factory=list)       # stop coords, assignment order
    unloads: list = field(default_factory=list)
    y_u: float = 0.0
    y_r_approx: float = 0.0
    y_r_exact: float = 0.0
    tour: np.ndarray | None = None  # order over pts from the last re-solve

    @property
    def load(self) -> float:
        return self.y_u + self.y_r_approx


@dataclass
class DayRecord:
    """Final per-truck times for one simulated day.

    ``y_r`` holds exact post-re-solve travel hours; recosting with other
    (c_r, c_o, h_max) values needs only ``y_u`` and ``y_r``.
    """

    policy: str
    y_u: np.ndarray
    y_r: np.ndarray
    n_assigned: np.ndarray
    flex_count: int
    tours: list | None = None        # per truck: (stop coords, unloads, order)
    sample_idx: np.ndarray | None = None

    @property
    def totals(self) -> np.ndarray:
        return self.y_u + self.y_r


def flex_set_of(pkg_xy, centers, default_zone: int,
                flex_km: float) -> np.ndarray:
    """Zones whose center is within ``flex_km`` beyond the default
    zone's center distance.  Always contains the default zone."""
    d = np.hypot(centers[:, 0] - pkg_xy[0], centers[:, 1] - pkg_xy[1])
    mask = d <= d[default_zone] + flex_km
    mask[default_zone] = True
    return np.flatnonzero(mask)


def radius_flex_set(pkg_xy, centers, default_zone: int,
                    radius_km: float) -> np.ndarray:
    """Zones whose center is within ``radius_km`` of the package, plus
    the default zone."""
    d = np.hypot(centers[:, 0] - pkg_xy[0], centers[:, 1] - pkg_xy[1])
    mask = d <= radius_km
    mask[default_zone] = True
    return np.flatnonzero(mask)


def inc_approx(truck: TruckState, pkg_xy, depot, speed: float) -> float:
    """Approximate incremental travel hours of assigning one package:
    twice the distance to the nearest assigned stop, or to the depot for
    an empty truck."""
    if truck.pts:
        pts = np.asarray(truck.pts)
        d = np.hypot(pts[:, 0] - pkg_xy[0], pts[:, 1] - pkg_xy[1]).min()
        d = min(d, float(np.hypot(*(np.asarray(depot) - pkg_xy))))
    else:
        d = float(np.hypot(*(np.asarray(depot) - pkg_xy)))
    return 2.0 * d / speed


def _resolve_all(trucks, depot, speed):
    for tr in trucks:
        order, hours = tsp_route(np.asarray(tr.pts).reshape(-1, 2),
                                 depot, speed)
        tr.tour = order
        tr.y_r_exact = hours
        tr.y_r_approx = hours


def _normal_overtime(mean: float, sd: float, h: float) -> float:
    """E[(Y - h)^+] for Y ~ Normal(mean, sd)."""
    if sd <= 0.0:
        return max(mean - h, 0.0)
    d = (mean - h) / sd
    phi = math.exp(-0.5 * d * d) / _SQRT2PI
    Phi = 0.5 * math.erfc(-d / math.sqrt(2.0))
    return sd * phi + (mean - h) * Phi


def run_day(policy: ParcelPolicy, corpus: Corpus, params: ParcelParams,
            tables=None, *, root_seed: int = 0, stream_path: tuple = (),
            keep_tours: bool = False) -> DayRecord:
    """Simulate one day.  Deterministic in (policy, corpus, params,
    root_seed, stream_path); the bootstrap arrival sequence depends only
    on the seed and path, so policies are coupled on common arrivals.

    ``tables`` (a :class:`~endgame.parcel.tables.FlexTables`) is
    required for ``patient_dynamic`` and ``cost_min``.
    """
    N, T, speed = params.N, params.T, params.speed
    if N != corpus.n_zones:
        raise ValueError(
            f"params.N={N} does not match corpus zones={corpus.n_zones}")
    needs_tables = policy.kind in (PATIENT_DYNAMIC, COST_MIN)
    if needs_tables and tables is None:
        raise ValueError(f"{policy.kind} requires estimated flex tables")

    rng = stream(root_seed, "parcel", *stream_path, "arrivals")
    sample_idx = rng.integers(0, len(corpus), size=T)
    pts = corpus.points[sample_idx]
    unloads = corpus.unload[sample_idx]
    defaults = corpus.default_zone[sample_idx]
    centers = corpus.centers
    depot = corpus.depot

    a_d = params.a_d if policy.a_d is None else policy.a_d
    radius = (params.oblivious_radius_km if policy.radius_km is None
              else policy.radius_km)
    # hour scale for the dimensionless dynamic threshold
    u_bar = float(corpus.unload.mean())

    if needs_tables:
        inc_t = tables.inc
        ser_t = tables.ser
        p_zone = tables.arrival_prob
        inc_diag = np.nan_to_num(np.diagonal(inc_t), nan=0.0)
        ser_diag = np.nan_to_num(np.diagonal(ser_t), nan=0.0)

    trucks = [TruckState() for _ in range(N)]
    flex_count = 0

    for t in range(T):
        if t > 0 and t % params.M1 == 0:
            _resolve_all(trucks, depot, speed)

        pkg = pts[t]
        u = unloads[t]
        dz = int(defaults[t])
        dest = dz

        if policy.kind == UNLOADING_ONLY or policy.kind == ROUTING_DYNAMIC:
            if policy.kind == UNLOADING_ONLY:
                x = np.array([tr.y_u for tr in trucks])
                fset = radius_flex_set(pkg, centers, dz, radius)
            else:
                x = np.array([tr.load for tr in trucks])
                fset = flex_set_of(pkg, centers, dz, params.flex_km)
            threshold = a_d * (T - t) * u_bar / N
            if x.max() - x.mean() >= threshold and len(fset) > 1:
                dest = int(fset[np.argmin(x[fset])])
                if dest != dz:
                    flex_count += 1
        elif policy.kind == PATIENT_DYNAMIC:
            fset = flex_set_of(pkg, centers, dz, params.flex_km)
            cands = fset[fset != dz]
            if len(cands) > 0:
                one_step = (trucks[dz].load
                            + inc_approx(trucks[dz], pkg, depot, speed) + u)
                horizon = (T - t) / params.M2
                best, best_bar = -1, math.inf
                for j in cands:
                    pair = inc_t[dz, j] + ser_t[dz, j]
                    if not np.isfinite(pair):
                        continue  # no observations: never project onto it
                    bar = (trucks[j].load
                           + inc_approx(trucks[j], pkg, depot, speed) + u
                           + horizon * pair)
                    if bar < best_bar:
                        best, best_bar = int(j), bar
                if best >= 0 and one_step >= best_bar:
                    dest = best
                    flex_count += 1
        elif policy.kind == COST_MIN:
            fset = flex_set_of(pkg, centers, dz, params.flex_km)
            cands = fset[fset != dz]
            if len(cands) > 0:
                n_fut = T - 1 - t
                inc_d = inc_approx(trucks[dz], pkg, depot, speed)
                h = params.h_max

                def _ot(zone, extra):
                    w = inc_diag[zone] + ser_diag[zone]
                    p = p_zone[zone]
                    mean = trucks[zone].load + extra + w * n_fut * p
                    sd = w * math.sqrt(max(n_fut, 0) * p * (1.0 - p))
                    return _normal_overtime(mean, sd, h)

                base_d = _ot(dz, inc_d + u)       # default keeps the package
                hat_d = _ot(dz, 0.0)              # default after flexing away
                best, best_diff = -1, -math.inf
                for j in cands:
                    inc_j = inc_approx(trucks[j], pkg, depot, speed)
                    diff = (params.c_o * (base_d + _ot(j, 0.0)
                                          - hat_d - _ot(j, inc_j + u))
                            + params.c_r * (inc_d - inc_j))
                    if diff > best_diff:
                        best, best_diff = int(j), diff
                if best >= 0 and best_diff >= (T - t) / params.M2:
                    dest = best
                    flex_count += 1

        tr = trucks[dest]
        tr.y_r_approx += inc_approx(tr, pkg, depot, speed)
        tr.pts.append((float(pkg[0]), float(pkg[1])))
        tr.unloads.append(float(u))
        tr.y_u += float(u)

    _resolve_all(trucks, depot, speed)
    tours = None
    if keep_tours:
        tours = [(np.asarray(tr.pts).reshape(-1, 2),
                  np.asarray(tr.unloads), tr.tour) for tr in trucks]
    return DayRecord(
        policy=policy.kind,
        y_u=np.array([tr.y_u for tr in trucks]),
        y_r=np.array([tr.y_r_exact for tr in trucks]),
        n_assigned=np.array([len(tr.pts) for tr in trucks]),
        flex_count=flex_count,
        tours=tours,
        sample_idx=sample_idx,
    )


def day_cost(record: DayRecord, params: ParcelParams, *,
             c_r: float | None = None, c_o: float | None = None,
             h_max: float | None = None):
    """Dollar cost of a day: travel plus overtime, with optional cost
    overrides for sensitivity sweeps.  Returns (total, travel, overtime)."""
    c_r = params.c_r if c_r is None else c_r
    c_o = params.c_o if c_o is None else c_o
    h_max = params.h_max if h_max is None else h_max
    travel = c_r * record.y_r.sum()
    overtime = c_o * np.clip(record.totals - h_max, 0.0, None).sum()
    return float(travel + overtime), float(travel), float(overtime)
