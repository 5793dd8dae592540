"""Three-stage risk assessment for a login attempt.

Stage 1 (global): re-cluster the profile history together with the attempt,
choosing k by the elbow rule. An attempt that ends up alone in its cluster
fits none of the user's established behavior modes and fails outright.

Stage 2 (contextualize): locate the attempt's context cluster (nearest
centroid) and collect the distinct distances of that cluster's historical
members from the centroid.

Stage 3 (local): compare the attempt's distance against two thresholds
derived from the member distances. Inside the first threshold is normal;
between the two is a first-degree outlier; at or beyond the second is a
second-degree outlier, as is any global failure.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Sequence

from .clustering import ClusterModel, Point, elbow_scan, euclidean, nearest_centroid
from .config import EngineConfig
from .errors import EmptyContextClusterError, ProfileNotTrainedError

DEFAULT_CONFIG = EngineConfig()


class OutlierDegree(IntEnum):
    """Severity ordering used for threshold comparisons."""

    NORMAL = 0
    FIRST_DEGREE = 1
    SECOND_DEGREE = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Thresholds:
    """Distance cutoffs for the local check; 0 < t1 <= t2 always holds."""

    t1: float
    t2: float

    def __post_init__(self) -> None:
        if not (0.0 < self.t1 <= self.t2):
            raise ValueError(f"thresholds must satisfy 0 < t1 <= t2, got ({self.t1}, {self.t2})")

    def to_dict(self) -> dict[str, float]:
        return {"t1": self.t1, "t2": self.t2}


@dataclass
class RiskAssessment:
    """Outcome of the full pipeline plus an ordered trace of each stage."""

    global_pass: bool
    degree: OutlierDegree
    recluster_k: int
    context_cluster: int | None = None
    distance: float | None = None
    thresholds: Thresholds | None = None
    explain: list[str] = field(default_factory=list)

    def to_dict(self, include_explain: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "global_pass": self.global_pass,
            "degree": self.degree.label,
            "recluster_k": self.recluster_k,
            "context_cluster": self.context_cluster,
            "distance": self.distance,
            "thresholds": self.thresholds.to_dict() if self.thresholds else None,
        }
        if include_explain:
            doc["explain"] = list(self.explain)
        return doc


def global_check(
    history: Sequence[Point],
    attempt: Point,
    seed: int,
    config: EngineConfig = DEFAULT_CONFIG,
) -> tuple[bool, ClusterModel]:
    """Re-cluster history plus attempt and test whether the attempt is isolated.

    Returns (passed, model) where model is the elbow-selected fit over the
    union. The attempt occupies the last index.
    """
    if len(history) < config.min_history:
        raise ProfileNotTrainedError(
            f"profile not trained: {len(history)} vectors, need {config.min_history}"
        )
    union = list(history) + [attempt]
    k_min, k_max = config.k_range(len(union))
    scan = elbow_scan(
        union, k_min, k_max, seed, restarts=config.restarts, max_iter=config.max_iter
    )
    model = scan.chosen_model
    attempt_cluster = model.assignments[len(history)]
    passed = model.cluster_size(attempt_cluster) > 1
    return passed, model


def contextualize(
    model: ClusterModel,
    history: Sequence[Point],
    attempt: Point,
) -> tuple[int, list[float], float]:
    """Locate the attempt's context cluster within a union model.

    Returns (cluster index, sorted distinct historical member distances,
    attempt distance). Duplicate distances collapse to one entry: what
    matters is which distance values occur, not how often.
    """
    context, attempt_distance = nearest_centroid(model, attempt)
    centroid = model.centroids[context]
    member_distances = sorted(
        {
            euclidean(history[i], centroid)
            for i in range(len(history))
            if model.assignments[i] == context
        }
    )
    if not member_distances:
        raise EmptyContextClusterError(
            f"context cluster {context} has no historical members"
        )
    return context, member_distances, attempt_distance


def compute_thresholds(
    member_distances: Sequence[float],
    config: EngineConfig = DEFAULT_CONFIG,
) -> Thresholds:
    """Derive (t1, t2) from the context cluster's member distances.

    radius-factor mode takes the cluster radius (largest member distance)
    as t1; mean-sigma mode takes mean plus three standard deviations. Both
    set t2 = radius_factor * t1. A zero t1 (all members at the centroid)
    is floored to a small epsilon so the comparison stays well defined.
    """
    if not member_distances:
        raise ValueError("member_distances must be non-empty")
    if config.threshold_mode == "radius-factor":
        t1 = max(member_distances)
    elif config.threshold_mode == "mean-sigma":
        mean = statistics.fmean(member_distances)
        sigma = statistics.pstdev(member_distances) if len(member_distances) > 1 else 0.0
        t1 = mean + 3.0 * sigma
    else:
        raise ValueError(f"unknown threshold_mode {config.threshold_mode!r}")
    if t1 <= 0.0:
        t1 = config.epsilon_floor
    return Thresholds(t1=t1, t2=config.radius_factor * t1)


def local_check(attempt_distance: float, thresholds: Thresholds) -> OutlierDegree:
    """Grade the attempt distance against the two thresholds."""
    if attempt_distance <= thresholds.t1:
        return OutlierDegree.NORMAL
    if attempt_distance < thresholds.t2:
        return OutlierDegree.FIRST_DEGREE
    return OutlierDegree.SECOND_DEGREE


def assess(
    history: Sequence[Point],
    attempt: Point,
    seed: int,
    config: EngineConfig = DEFAULT_CONFIG,
) -> RiskAssessment:
    """Run the full three-stage pipeline over normalized vectors."""
    passed, model = global_check(history, attempt, seed, config)
    attempt_cluster = model.assignments[len(history)]
    explain = [
        f"global: re-clustered {len(history) + 1} points with k={model.k}; "
        f"attempt joined cluster {attempt_cluster} "
        f"(size {model.cluster_size(attempt_cluster)})"
    ]
    if not passed:
        explain.append(
            "global: attempt is isolated in its own cluster; escalating to "
            "second-degree outlier"
        )
        return RiskAssessment(
            global_pass=False,
            degree=OutlierDegree.SECOND_DEGREE,
            recluster_k=model.k,
            explain=explain,
        )
    try:
        context, member_distances, distance = contextualize(model, history, attempt)
    except EmptyContextClusterError:
        # Defensive: cannot happen after a passed global check, but an empty
        # context offers no basis for thresholds, so treat it as the worst case.
        explain.append("context: no historical members; escalating to second-degree outlier")
        return RiskAssessment(
            global_pass=True,
            degree=OutlierDegree.SECOND_DEGREE,
            recluster_k=model.k,
            explain=explain,
        )
    thresholds = compute_thresholds(member_distances, config)
    degree = local_check(distance, thresholds)
    explain.append(
        f"context: cluster {context} with {len(member_distances)} distinct member "
        f"distances; attempt distance {distance:.6f}"
    )
    explain.append(
        f"thresholds: mode={config.threshold_mode} t1={thresholds.t1:.6f} "
        f"t2={thresholds.t2:.6f}"
    )
    explain.append(f"local: attempt graded {degree.label}")
    return RiskAssessment(
        global_pass=True,
        degree=degree,
        recluster_k=model.k,
        context_cluster=context,
        distance=distance,
        thresholds=thresholds,
        explain=explain,
    )
