"""Tour construction for truck routes: nearest-neighbor + 2-opt heuristic,
plus an exact Held-Karp solver used as a small-instance oracle and cheap
single-point insertion/removal deltas for table estimation."""

from __future__ import annotations

import numpy as np


def _coords(points, depot):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    depot = np.asarray(depot, dtype=float).reshape(2)
    return np.vstack([depot[None, :], points])


def _dist_matrix(coords):
    diff = coords[:, None, :] - coords[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def tour_length(D, order):
    """Length of the closed tour depot -> order -> depot.  ``order`` holds
    indices into the points array (0-based, excluding the depot)."""
    arr = np.concatenate(([0], np.asarray(order, dtype=np.int64) + 1, [0]))
    return float(D[arr[:-1], arr[1:]].sum())


def nearest_neighbor_order(D):
    """Greedy construction starting from the depot (node 0 of D)."""
    n = D.shape[0] - 1
    unvisited = np.ones(n + 1, dtype=bool)
    unvisited[0] = False
    order = []
    cur = 0
    for _ in range(n):
        d = np.where(unvisited, D[cur], np.inf)
        cur = int(d.argmin())
        unvisited[cur] = False
        order.append(cur - 1)
    return np.array(order, dtype=np.int64)


def two_opt(D, order):
    """Best-improvement 2-opt until no improving move remains."""
    n = len(order)
    if n < 3:
        return np.asarray(order, dtype=np.int64)
    arr = np.concatenate(([0], np.asarray(order, dtype=np.int64) + 1, [0]))
    idx = np.arange(1, n + 1)
    while True:
        pred = arr[idx - 1]
        cur = arr[idx]
        succ = arr[idx + 1]
        delta = (D[pred[:, None], cur[None, :]]
                 + D[cur[:, None], succ[None, :]]
                 - D[pred, cur][:, None]
                 - D[cur, succ][None, :])
        delta[np.tril_indices(n)] = np.inf  # only i < k moves
        flat = delta.argmin()
        i, k = divmod(int(flat), n)
        if delta[i, k] >= -1e-12:
            break
        arr[i + 1:k + 2] = arr[i + 1:k + 2][::-1]
    return arr[1:-1] - 1


def tsp_route(points, depot, speed: float):
    """Closed tour over ``points`` from the depot via NN + 2-opt.

    Returns (order, travel_hours).  Empty input yields ([], 0.0); travel
    hours are Euclidean tour length divided by ``speed``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return np.array([], dtype=np.int64), 0.0
    if len(points) == 1:
        d = float(np.hypot(*(points[0] - np.asarray(depot, dtype=float))))
        return np.array([0], dtype=np.int64), 2.0 * d / speed
    coords = _coords(points, depot)
    D = _dist_matrix(coords)
    order = two_opt(D, nearest_neighbor_order(D))
    return order, tour_length(D, order) / speed


def held_karp_length(points, depot):
    """Exact optimal closed-tour length by dynamic programming.  Intended
    for small oracle instances (n <= ~12)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    if n == 0:
        return 0.0
    D = _dist_matrix(_coords(points, depot))
    full = (1 << n) - 1
    best = np.full((1 << n, n), np.inf)
    for j in range(n):
        best[1 << j, j] = D[0, j + 1]
    for mask in range(1, full + 1):
        for j in range(n):
            bit = 1 << j
            if not mask & bit or best[mask, j] == np.inf:
                continue
            base = best[mask, j]
            for k in range(n):
                kbit = 1 << k
                if mask & kbit:
                    continue
                cand = base + D[j + 1, k + 1]
                if cand < best[mask | kbit, k]:
                    best[mask | kbit, k] = cand
    return float(min(best[full, j] + D[j + 1, 0] for j in range(n)))


def insertion_delta(tour_pts, depot, new_pt):
    """Cheapest-edge cost of inserting ``new_pt`` into a closed tour given
    by the ordered point coordinates ``tour_pts`` (km, not hours)."""
    new_pt = np.asarray(new_pt, dtype=float)
    tour_pts = np.asarray(tour_pts, dtype=float).reshape(-1, 2)
    depot = np.asarray(depot, dtype=float)
    if len(tour_pts) == 0:
        return 2.0 * float(np.hypot(*(new_pt - depot)))
    cyc = np.vstack([depot[None, :], tour_pts, depot[None, :]])
    a = cyc[:-1]
    b = cyc[1:]
    d_an = np.hypot(*(a - new_pt).T)
    d_nb = np.hypot(*(b - new_pt).T)
    d_ab = np.hypot(*(a - b).T)
    return float((d_an + d_nb - d_ab).min())


def removal_delta(tour_pts, depot, position):
    """Length saved by dropping the stop at ``position`` from a closed tour
    (km).  Nonnegative by the triangle inequality."""
    tour_pts = np.asarray(tour_pts, dtype=float).reshape(-1, 2)
    depot = np.asarray(depot, dtype=float)
    cyc = np.vstack([depot[None, :], tour_pts, depot[None, :]])
    p = position + 1
    prev_pt, this_pt, next_pt = cyc[p - 1], cyc[p], cyc[p + 1]
    return float(np.hypot(*(prev_pt - this_pt))
                 + np.hypot(*(this_pt - next_pt))
                 - np.hypot(*(prev_pt - next_pt)))
