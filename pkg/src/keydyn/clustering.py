"""Seeded k-means with multi-restart search and elbow-based k selection.

Centroids are initialized with distance-weighted sampling (k-means++ style)
from a caller-supplied seed, refined by Lloyd iteration, and the best run
over a fixed number of restarts wins by within-cluster sum of squares.
Everything here is deterministic for a given (points, k, seed, restarts).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

Point = tuple[float, ...]


def euclidean(a: Point, b: Point) -> float:
    """Euclidean distance between two equal-length vectors."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


@dataclass
class ClusterModel:
    """Result of one k-means fit.

    wcss_history records the objective after each Lloyd update of the
    winning restart; it never increases.
    """

    k: int
    centroids: list[Point]
    assignments: list[int]
    wcss: float
    iterations: int
    seed: int
    wcss_history: list[float]

    def cluster_size(self, j: int) -> int:
        return sum(1 for a in self.assignments if a == j)


def wcss(centroids: list[Point], points: list[Point], assignments: list[int]) -> float:
    """Within-cluster sum of squared distances."""
    if len(points) != len(assignments):
        raise ValueError("points and assignments differ in length")
    total = 0.0
    for p, a in zip(points, assignments):
        c = centroids[a]
        if len(p) != len(c):
            raise ValueError(f"dimension mismatch: {len(p)} vs {len(c)}")
        total += sum((x - y) ** 2 for x, y in zip(p, c))
    return total


def _as_array(points: list[Point]) -> np.ndarray:
    if not points:
        raise ValueError("empty input: at least one point is required")
    dim = len(points[0])
    for i, p in enumerate(points):
        if len(p) != dim:
            raise ValueError(f"dimension mismatch: point {i} has {len(p)} dims, expected {dim}")
    return np.asarray(points, dtype=float)


def _sq_distances(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: random.Random) -> np.ndarray:
    """Distance-weighted initial centroids drawn with the given generator."""
    n = len(pts)
    chosen = [rng.randrange(n)]
    d2 = np.einsum("nd,nd->n", pts - pts[chosen[0]], pts - pts[chosen[0]])
    while len(chosen) < k:
        total = float(d2.sum())
        if total <= 0.0:
            # All remaining mass is on already-chosen coordinates (duplicate
            # points). Fall back to the lowest-index unchosen point.
            taken = set(chosen)
            nxt = next(i for i in range(n) if i not in taken)
        else:
            r = rng.random() * total
            nxt = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            nxt = min(nxt, n - 1)
        chosen.append(nxt)
        cand = np.einsum("nd,nd->n", pts - pts[nxt], pts - pts[nxt])
        d2 = np.minimum(d2, cand)
    return pts[chosen].copy()


def _reseed_empty(pts: np.ndarray, centroids: np.ndarray, assign: np.ndarray, k: int) -> None:
    """Seed drained clusters with far points that can hold them.

    A donor must come from a cluster with at least two members (so the donor
    cluster is not drained in turn) and must not sit exactly on an existing
    centroid (or the next assignment pass would pull it straight back). When
    every point already rests on its centroid no reseed can improve the fit
    and the cluster stays empty.
    """
    while True:
        counts = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if not len(empties):
            return
        own = np.linalg.norm(pts - centroids[assign], axis=1)
        own[counts[assign] <= 1] = -1.0
        on_centroid = (pts[:, None, :] == centroids[None, :, :]).all(axis=2).any(axis=1)
        own[on_centroid] = -1.0
        p = int(np.argmax(own))
        if own[p] <= 0.0:
            return
        centroids[int(empties[0])] = pts[p]
        assign[p] = int(empties[0])


def _lloyd(
    pts: np.ndarray, centroids: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    k = len(centroids)
    centroids = centroids.copy()
    prev_assign: np.ndarray | None = None
    history: list[float] = []
    iterations = max_iter
    assign = np.zeros(len(pts), dtype=int)
    for it in range(1, max_iter + 1):
        d2 = _sq_distances(pts, centroids)
        assign = d2.argmin(axis=1)
        _reseed_empty(pts, centroids, assign, k)
        for j in range(k):
            members = pts[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        diff = pts - centroids[assign]
        history.append(float(np.einsum("nd,nd->n", diff, diff).sum()))
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            # Fixpoint: the partition repeated, so the means it induces (and
            # therefore the next assignment) cannot change any further.
            iterations = it
            break
        prev_assign = assign
    return centroids, assign, history[-1], iterations, history


def kmeans(
    points: list[Point],
    k: int,
    seed: int,
    max_iter: int = 100,
    restarts: int = 32,
) -> ClusterModel:
    """Best-of-restarts k-means fit.

    Restart r uses its own generator derived from (seed, r); ties on the
    objective keep the earliest restart, so results are reproducible.
    """
    pts = _as_array(points)
    n = len(pts)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    best: tuple[float, int, np.ndarray, np.ndarray, int, list[float]] | None = None
    for r in range(max(1, restarts)):
        rng = random.Random(seed * 1_000_003 + r)
        init = _kmeans_pp_init(pts, k, rng)
        centroids, assign, run_wcss, iterations, history = _lloyd(pts, init, max_iter)
        if best is None or run_wcss < best[0]:
            best = (run_wcss, r, centroids, assign, iterations, history)
    assert best is not None
    run_wcss, _, centroids, assign, iterations, history = best
    return ClusterModel(
        k=k,
        centroids=[tuple(float(x) for x in c) for c in centroids],
        assignments=[int(a) for a in assign],
        wcss=run_wcss,
        iterations=iterations,
        seed=seed,
        wcss_history=history,
    )


def nearest_centroid(model: ClusterModel, point: Point) -> tuple[int, float]:
    """Index of the closest centroid and the distance to it. Ties pick the
    lowest index."""
    best_j = 0
    best_d = euclidean(model.centroids[0], point)
    for j in range(1, len(model.centroids)):
        d = euclidean(model.centroids[j], point)
        if d < best_d:
            best_j, best_d = j, d
    return best_j, best_d


@dataclass
class ElbowReport:
    """WCSS curve over candidate k values and the selected elbow."""

    k_values: list[int]
    wcss_values: list[float]
    second_differences: list[float | None]
    chosen_k: int

    def csv_rows(self) -> list[str]:
        return [f"{k},{w:.9f}" for k, w in zip(self.k_values, self.wcss_values)]


@dataclass
class ElbowScan:
    """Elbow selection plus the fitted model for every candidate k."""

    report: ElbowReport
    models: dict[int, ClusterModel]

    @property
    def chosen_k(self) -> int:
        return self.report.chosen_k

    @property
    def chosen_model(self) -> ClusterModel:
        return self.models[self.report.chosen_k]


def _from_arrays(model_parts, k: int, seed: int) -> ClusterModel:
    centroids, assign, run_wcss, iterations, history = model_parts
    return ClusterModel(
        k=k,
        centroids=[tuple(float(x) for x in c) for c in centroids],
        assignments=[int(a) for a in assign],
        wcss=run_wcss,
        iterations=iterations,
        seed=seed,
        wcss_history=history,
    )


def elbow_scan(
    points: list[Point],
    k_min: int,
    k_max: int,
    seed: int,
    restarts: int = 32,
    max_iter: int = 100,
) -> ElbowScan:
    """Fit every candidate k and pick the sharpest bend in the WCSS curve.

    Each k keeps the better of the restart search and a warm start that
    extends the previous k's winner with its farthest point, which keeps the
    best-known WCSS curve non-increasing in k. The elbow is the interior k
    maximizing the discrete second difference of that curve; a flat curve,
    ties at the maximum, or fewer than three candidates fall back to k_min.
    """
    pts = _as_array(points)
    n = len(pts)
    if not (1 <= k_min <= k_max <= n):
        raise ValueError(f"invalid k range [{k_min}, {k_max}] for {n} points")

    models: dict[int, ClusterModel] = {}
    prev: ClusterModel | None = None
    for k in range(k_min, k_max + 1):
        best = kmeans(points, k, seed, max_iter=max_iter, restarts=restarts)
        if prev is not None and prev.k == k - 1:
            prev_cents = np.asarray(prev.centroids, dtype=float)
            assign = np.asarray(prev.assignments, dtype=int)
            own = np.linalg.norm(pts - prev_cents[assign], axis=1)
            extra = pts[int(np.argmax(own))]
            init = np.vstack([prev_cents, extra[None, :]])
            warm = _from_arrays(_lloyd(pts, init, max_iter), k, seed)
            if warm.wcss < best.wcss:
                best = warm
        models[k] = best
        prev = best

    k_values = list(range(k_min, k_max + 1))
    curve = [models[k].wcss for k in k_values]
    second: list[float | None] = [None] * len(k_values)
    chosen = k_min
    if len(k_values) >= 3:
        best_d2 = -math.inf
        for i in range(1, len(k_values) - 1):
            d2 = curve[i - 1] - 2.0 * curve[i] + curve[i + 1]
            second[i] = d2
            if d2 > best_d2:
                best_d2 = d2
                chosen = k_values[i]
        if best_d2 <= 1e-12:
            # No bend worth speaking of; prefer the simplest model.
            chosen = k_min
    report = ElbowReport(k_values, curve, second, chosen)
    return ElbowScan(report=report, models=models)


def choose_k_elbow(
    points: list[Point],
    k_min: int,
    k_max: int,
    seed: int,
    restarts: int = 32,
    max_iter: int = 100,
) -> tuple[int, ElbowReport]:
    """Elbow-selected k and the curve behind the choice."""
    scan = elbow_scan(points, k_min, k_max, seed, restarts=restarts, max_iter=max_iter)
    return scan.chosen_k, scan.report
