"""Cluster separation (Davies-Bouldin) and heavy-tail spectral diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import as_matrix, sym_spd_eigvals
from .errors import DegenerateClusters, InvalidInput


@dataclass(frozen=True)
class ClusterAssignment:
    points: np.ndarray  # (n, m)
    labels: np.ndarray  # (n,) cluster index per point

    def __post_init__(self):
        points = as_matrix(self.points, "points")
        labels = np.asarray(self.labels)
        if labels.shape != (points.shape[0],):
            raise InvalidInput("need exactly one label per point")
        if np.unique(labels).size < 2:
            raise InvalidInput("need at least 2 clusters")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return int(np.unique(self.labels).size)


def davies_bouldin(assignment: ClusterAssignment) -> float:
    """Mean over clusters of the worst (S_i + S_j) / D_ij ratio.

    S_i is the mean Euclidean distance of cluster members to their centroid
    and D_ij the distance between centroids. Lower means better separated.
    """
    pts, labels = assignment.points, assignment.labels
    clusters = np.unique(labels)
    centroids = np.array([pts[labels == c].mean(axis=0) for c in clusters])
    scatter = np.array([np.linalg.norm(pts[labels == c] - mu, axis=1).mean() for c, mu in zip(clusters, centroids)])
    worst = []
    for i in range(len(clusters)):
        ratios = []
        for j in range(len(clusters)):
            if i == j:
                continue
            dist = np.linalg.norm(centroids[i] - centroids[j])
            if dist == 0:
                raise DegenerateClusters(f"clusters {clusters[i]!r} and {clusters[j]!r} share a centroid")
            ratios.append((scatter[i] + scatter[j]) / dist)
        worst.append(max(ratios))
    return math.fsum(worst) / len(worst)


def esd_from_matrix(w) -> np.ndarray:
    """Nonzero-rank spectrum of W^T W, descending.

    Uses the smaller Gram matrix, so an (n, m) matrix yields min(n, m) values.
    """
    w = as_matrix(w, "weight matrix")
    gram = w @ w.T if w.shape[0] < w.shape[1] else w.T @ w
    return sym_spd_eigvals(gram)


def hill_alpha(eigenvalues, k: int) -> float:
    """Hill tail-exponent estimate 1 + k / sum_{i<=k} ln(lam_i / lam_{k+1}).

    Returns ``inf`` for a flat tail (all top-(k+1) values equal).
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=np.float64))[::-1]
    if not 2 <= k < lam.size:
        raise InvalidInput(f"tail size k={k} must satisfy 2 <= k < {lam.size}")
    top = lam[: k + 1]
    if not np.all(np.isfinite(top)) or top[-1] <= 0:
        raise InvalidInput("top-(k+1) eigenvalues must be finite and positive")
    log_sum = math.fsum(np.log(top[:k] / top[k]))
    if log_sum == 0:
        return math.inf
    return 1.0 + k / log_sum


def default_k(n: int) -> int:
    return max(2, int(0.1 * n))


@dataclass(frozen=True)
class LayerFit:
    alpha: float
    lambda_max: float


@dataclass(frozen=True)
class HTSRReport:
    layers: tuple[LayerFit, ...]
    weighted_alpha: float

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else None

        return {
            "layers": [{"alpha": num(f.alpha), "lambda_max": f.lambda_max} for f in self.layers],
            "weighted_alpha": num(self.weighted_alpha),
        }


def weighted_alpha_from_fits(fits: Sequence[LayerFit]) -> float:
    """(1/L) sum_l alpha_l ln lambda_max_l; a layer with lambda_max = 1 contributes 0."""
    if not fits:
        raise InvalidInput("need at least one layer")
    terms = []
    for f in fits:
        log_max = math.log(f.lambda_max)
        terms.append(0.0 if log_max == 0 else f.alpha * log_max)
    return math.fsum(terms) / len(terms)


def weighted_alpha(layers: Sequence, k_rule: Callable[[int], int] = default_k) -> HTSRReport:
    """Per-layer Hill fits on the spectrum of W^T W, combined into weighted alpha."""
    if len(layers) == 0:
        raise InvalidInput("need at least one layer")
    fits = []
    for i, w in enumerate(layers):
        try:
            lam = esd_from_matrix(w)
            fits.append(LayerFit(hill_alpha(lam, k_rule(lam.size)), float(lam[0])))
        except InvalidInput as exc:
            raise InvalidInput(f"layer {i}: {exc}") from exc
    return HTSRReport(tuple(fits), weighted_alpha_from_fits(fits))
