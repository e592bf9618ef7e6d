"""Data-driven metrics and the rules that map them to a kernel and a divergence."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import as_distribution, as_vector
from .divergences import wasserstein_1d
from .errors import DegenerateTriplet, InvalidInput, KurtosisUndefined

PND_FORMS = ("ratio", "difference")
BALANCE = {"ratio": 1.0, "difference": 0.0}
NEAR_ZERO = 0.05  # tolerance for "NAG ~ 0" and "PND ~ balance"


@dataclass(frozen=True)
class Thresholds:
    kernel_eps1: float = 0.5  # PNAV above -> RBF
    kernel_eps2: float = 0.3  # TAT below -> RBF
    kernel_eps3: float = 0.2  # PNAV below -> Mahalanobis
    kernel_eps4: float = 0.7  # TAT above -> Spectral
    kernel_eps5: float = 0.1  # PND below -> Spectral
    div_eps1: float = 0.6  # overlap above -> Bhattacharyya
    div_eps2: float = 0.3  # drift above -> Wasserstein
    div_eps3: float = 3.0  # kurtosis above -> Renyi
    low_overlap: float = 0.3  # overlap at or below -> Jensen-Shannon
    support_floor: float = 1e-8
    smoothness: float = 0.1  # at or below -> Hellinger

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidInput(f"threshold {name} must be positive and finite")
        if self.low_overlap > self.div_eps1:
            raise InvalidInput("low_overlap must not exceed div_eps1")


@dataclass(frozen=True)
class KernelSelectionMetrics:
    pnd: float
    pnav: float
    tat: float
    nag: float
    pnd_form: str = "ratio"


@dataclass(frozen=True)
class DivergenceSelectionMetrics:
    support_overlap: float
    drift: float
    kurtosis: float
    smoothness: float


@dataclass(frozen=True)
class Selection:
    name: str
    rule_fired: str


def _distances(triplets) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-triplet d(x, y+), d(x, y-) and ||y+ - y-||."""
    if len(triplets) == 0:
        raise InvalidInput("need at least one triplet")
    d_pos, d_neg, d_pair = [], [], []
    dim = None
    for i, t in enumerate(triplets):
        if len(t) != 3:
            raise InvalidInput(f"triplet {i} must be (x, y_pos, y_neg)")
        x, yp, yn = (as_vector(v, "embedding") for v in t)
        if dim is None:
            dim = x.size
        if not x.size == yp.size == yn.size == dim:
            raise InvalidInput(f"triplet {i} has inconsistent embedding dimensions")
        d_pos.append(np.linalg.norm(x - yp))
        d_neg.append(np.linalg.norm(x - yn))
        d_pair.append(np.linalg.norm(yp - yn))
    return np.array(d_pos), np.array(d_neg), np.array(d_pair)


def kernel_metrics(triplets: Sequence, pnd_form: str = "ratio") -> KernelSelectionMetrics:
    """PND, PNAV, TAT and NAG over (x, y_pos, y_neg) embedding triplets.

    Distances are Euclidean. PND is the mean ratio d+/d- or mean
    difference d+ - d- depending on ``pnd_form``.
    """
    if pnd_form not in PND_FORMS:
        raise InvalidInput(f"pnd_form must be one of {PND_FORMS}")
    d_pos, d_neg, d_pair = _distances(triplets)
    total = d_pos + d_neg
    for i in range(d_pos.size):
        if total[i] == 0:
            raise DegenerateTriplet("both distances are zero", i)
        if pnd_form == "ratio" and d_neg[i] == 0:
            raise DegenerateTriplet("d(x, y_neg) is zero; PND ratio undefined", i)
    diff = d_pos - d_neg
    pnd = d_pos / d_neg if pnd_form == "ratio" else diff
    return KernelSelectionMetrics(
        pnd=math.fsum(pnd) / pnd.size,
        pnav=math.fsum(diff**2) / diff.size,
        tat=math.fsum(d_pair / total) / total.size,
        nag=math.fsum(-diff / total) / total.size,
        pnd_form=pnd_form,
    )


def support_overlap(p, q, floor: float = 1e-8) -> float:
    """|supp p & supp q| / |supp p | supp q| with support = mass above ``floor``."""
    p, q = as_distribution(p), as_distribution(q)
    if p.size != q.size:
        raise InvalidInput("distributions must be aligned")
    sp, sq = p > floor, q > floor
    return int((sp & sq).sum()) / int((sp | sq).sum())


def kurtosis(samples) -> float:
    """Non-excess kurtosis E[(x-mu)^4] / E[(x-mu)^2]^2."""
    x = as_vector(samples, "samples")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    if m2 == 0:
        raise KurtosisUndefined("samples have zero variance")
    return float(np.mean(dev**4) / m2**2)


def smoothness(checkpoints: Sequence) -> float:
    """Mean 1-D Wasserstein distance between consecutive checkpoint distributions."""
    if len(checkpoints) == 0:
        raise InvalidInput("need at least one checkpoint")
    if len(checkpoints) == 1:
        return 0.0
    steps = [wasserstein_1d(a, b) for a, b in zip(checkpoints[:-1], checkpoints[1:])]
    return math.fsum(steps) / len(steps)


def drift(triplets: Sequence) -> float:
    """Mean of d(x, y+) - d(x, y-) over embedding triplets."""
    d_pos, d_neg, _ = _distances(triplets)
    return math.fsum(d_pos - d_neg) / d_pos.size


def mean_overlap(policy_dists: Sequence, ref_dists: Sequence, floor: float = 1e-8) -> float:
    if len(policy_dists) == 0 or len(policy_dists) != len(ref_dists):
        raise InvalidInput("need equally many policy and reference distributions")
    overlaps = [support_overlap(p, q, floor) for p, q in zip(policy_dists, ref_dists)]
    return math.fsum(overlaps) / len(overlaps)


def divergence_metrics(
    policy_dists: Sequence,
    ref_dists: Sequence,
    checkpoints: Sequence,
    stat_samples,
    triplets: Sequence,
    floor: float = 1e-8,
) -> DivergenceSelectionMetrics:
    """Support overlap (mean over aligned pairs), drift, kurtosis and smoothness."""
    return DivergenceSelectionMetrics(
        support_overlap=mean_overlap(policy_dists, ref_dists, floor),
        drift=drift(triplets),
        kurtosis=kurtosis(stat_samples),
        smoothness=smoothness(checkpoints),
    )


def _check_finite(metrics) -> None:
    for name, value in asdict(metrics).items():
        if isinstance(value, float) and not math.isfinite(value):
            raise InvalidInput(f"metric {name} is not finite")


def select_kernel(m: KernelSelectionMetrics, th: Thresholds = Thresholds()) -> Selection:
    """First matching case wins; RBF when nothing matches."""
    _check_finite(m)
    balance = BALANCE[m.pnd_form]
    if m.pnav > th.kernel_eps1 and m.tat < th.kernel_eps2:
        return Selection("rbf", "pnav_high_tat_low")
    if abs(m.nag) < NEAR_ZERO and abs(m.pnd - balance) < NEAR_ZERO:
        return Selection("polynomial", "balanced")
    if m.nag > 0 and m.pnav < th.kernel_eps3:
        return Selection("mahalanobis", "nag_positive_pnav_low")
    if m.tat > th.kernel_eps4 and m.pnd < th.kernel_eps5:
        return Selection("spectral", "tat_high_pnd_low")
    return Selection("rbf", "default")


def select_divergence(m: DivergenceSelectionMetrics, th: Thresholds = Thresholds()) -> Selection:
    """First matching case wins; KL when nothing matches."""
    _check_finite(m)
    if m.support_overlap > th.div_eps1:
        return Selection("bhattacharyya", "overlap_high")
    if m.drift > th.div_eps2:
        return Selection("wasserstein", "drift_high")
    if m.kurtosis > th.div_eps3:
        return Selection("renyi", "kurtosis_high")
    if m.support_overlap <= th.low_overlap:
        return Selection("js", "overlap_low")
    if m.smoothness <= th.smoothness:
        return Selection("hellinger", "smooth")
    return Selection("kl", "default")
