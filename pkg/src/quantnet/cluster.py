"""Bottom-up Ward clustering of per-market encoder scores.

Each market starts as its own cluster; every step merges the pair whose
merge would raise the total within-cluster sum of squares the least:

    cost(A, B) = |A| |B| / (|A| + |B|) * ||centroid_A - centroid_B||^2

Ties break toward the lexicographically smallest (left, right) label pair,
and a cluster is always labeled by its smallest member id, so the merge
sequence is a pure function of the scores. The full dendrogram is played out
to a single cluster; assignments are snapshotted when the requested cluster
count is reached.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .validation import require_finite


@dataclass
class ClusterMerge:
    left: str  # label of the first merged cluster (smallest member id)
    right: str
    cost: float
    size: int  # members in the merged cluster


def _check_scores(scores: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    if not scores:
        raise ConfigError("no markets to cluster")
    out = {}
    width = None
    for mid in sorted(scores):
        v = np.asarray(scores[mid], dtype=np.float64).ravel()
        if width is None:
            width = v.size
        elif v.size != width:
            raise ShapeError(
                f"market {mid}: score length {v.size}, expected {width}"
            )
        require_finite(v, f"scores[{mid}]")
        out[mid] = v
    return out


def _ward_cost(size_a: int, size_b: int, cent_a: np.ndarray, cent_b: np.ndarray) -> float:
    diff = cent_a - cent_b
    return size_a * size_b / (size_a + size_b) * float(diff @ diff)


def cluster_markets(
    scores: dict[str, np.ndarray], n_clusters: int = 6
) -> tuple[dict[str, int], list[ClusterMerge]]:
    """Ward-link markets by score vectors; returns (assignments, merges).

    Assignments map market id to a cluster index in 0..K-1, where clusters
    are numbered by their smallest member id and K = min(n_clusters, number
    of markets). Merges cover the whole dendrogram down to one cluster.
    """
    if n_clusters < 1:
        raise ConfigError(f"n_clusters must be >= 1, got {n_clusters}")
    vecs = _check_scores(scores)
    # label -> (member set, size, centroid); label = smallest member id
    clusters: dict[str, tuple[list[str], int, np.ndarray]] = {
        mid: ([mid], 1, vecs[mid].copy()) for mid in vecs
    }
    target = min(n_clusters, len(clusters))
    merges: list[ClusterMerge] = []
    assignments: dict[str, int] | None = None

    def snapshot() -> dict[str, int]:
        out = {}
        for idx, label in enumerate(sorted(clusters)):
            for member in clusters[label][0]:
                out[member] = idx
        return out

    if len(clusters) == target:
        assignments = snapshot()
    while len(clusters) > 1:
        labels = sorted(clusters)
        best: tuple[str, str] | None = None
        best_cost = np.inf
        for i, la in enumerate(labels):
            _, na, ca = clusters[la]
            for lb in labels[i + 1 :]:
                _, nb, cb = clusters[lb]
                cost = _ward_cost(na, nb, ca, cb)
                if cost < best_cost:
                    best_cost = cost
                    best = (la, lb)
        assert best is not None
        la, lb = best
        members_a, na, ca = clusters.pop(la)
        members_b, nb, cb = clusters.pop(lb)
        merged = sorted(members_a + members_b)
        centroid = (na * ca + nb * cb) / (na + nb)
        clusters[merged[0]] = (merged, na + nb, centroid)
        merges.append(ClusterMerge(left=la, right=lb, cost=best_cost, size=na + nb))
        if len(clusters) == target:
            assignments = snapshot()
    if assignments is None:  # target below 1 is impossible; single cluster case
        assignments = snapshot()
    return assignments, merges


def write_assignments_csv(assignments: dict[str, int], path: str | Path) -> None:
    lines = ["market_id,cluster"]
    for mid in sorted(assignments):
        lines.append(f"{mid},{assignments[mid]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_merges_json(merges: list[ClusterMerge], path: str | Path) -> None:
    payload = [
        {"left": m.left, "right": m.right, "cost": m.cost, "size": m.size}
        for m in merges
    ]
    text = json.dumps(payload, separators=(",", ":"), allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
