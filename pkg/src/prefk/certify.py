"""Seeded random configurations for analytic-vs-numeric gradient certification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergences import (
    KL,
    Bhattacharyya,
    DivergenceKind,
    Hellinger,
    JensenShannon,
    Renyi,
    Wasserstein1D,
    chi_squared,
)
from .kernels import RBF, Identity, MahalanobisScalar, Polynomial, Spectral
from .loss import AnyKernel, GradientReport, ObjectiveConfig, Params, grad_check
from .mixture import HMK, HMKState
from .policy import PreferenceRecord, ToyPolicy

KERNEL_NAMES = ("identity", "polynomial", "rbf", "spectral", "mahalanobis", "hmk")
DIVERGENCE_NAMES = ("kl", "js", "hellinger", "renyi", "bhattacharyya", "wasserstein", "fdiv_chi2")
TOLERANCE = 1e-4


@dataclass
class Case:
    config: ObjectiveConfig
    records: list[PreferenceRecord]
    params: Params
    ref_logits: np.ndarray


def make_divergence(name: str) -> DivergenceKind:
    return {
        "kl": KL(),
        "js": JensenShannon(),
        "hellinger": Hellinger(),
        "renyi": Renyi(2.0),
        "bhattacharyya": Bhattacharyya(),
        "wasserstein": Wasserstein1D(),
        "fdiv_chi2": chi_squared(),
    }[name]


def _poly(rng) -> Polynomial:
    return Polynomial(c=float(rng.uniform(0.5, 2.0)), d=int(rng.integers(2, 4)))


def _rbf(rng) -> RBF:
    return RBF(sigma=float(rng.uniform(0.5, 2.0)))


def _spectral(rng) -> Spectral:
    p = int(rng.integers(1, 4))
    return Spectral(tuple(rng.uniform(0.2, 1.5, size=p)))


def _maha(rng) -> MahalanobisScalar:
    return MahalanobisScalar(
        mu=float(rng.uniform(-1, 1)),
        sigma=float(rng.uniform(0.5, 2.0)),
        mu_prime=float(rng.uniform(0.5, 1.5)),
        sigma_prime=float(rng.uniform(0.5, 2.0)),
    )


def make_kernel(name: str, rng: np.random.Generator) -> AnyKernel:
    if name == "identity":
        return Identity()
    if name == "polynomial":
        return _poly(rng)
    if name == "rbf":
        return _rbf(rng)
    if name == "spectral":
        return _spectral(rng)
    if name == "mahalanobis":
        return _maha(rng)
    if name == "hmk":
        return HMK(_poly(rng), _rbf(rng), _spectral(rng), _maha(rng))
    raise KeyError(name)


def random_case(
    kernel: str,
    divergence: str,
    rng: np.random.Generator,
    n_contexts: int = 2,
    n_outcomes: int = 4,
    dim: int = 3,
    n_records: int = 4,
) -> Case:
    """Moderate-scale random problem: positive dot products, policy != reference."""
    config = ObjectiveConfig(
        alpha=float(rng.uniform(0.1, 1.0)),
        beta=float(rng.uniform(0.5, 2.0)),
        gamma=float(rng.uniform(0.1, 1.0)),
        kernel=make_kernel(kernel, rng),
        divergence=make_divergence(divergence),
    )
    logits = rng.normal(0.0, 1.0, size=(n_contexts, n_outcomes))
    ref_logits = rng.normal(0.0, 1.0, size=(n_contexts, n_outcomes))
    # leading coordinate keeps every e_x . e_y well away from zero
    U = np.column_stack([np.ones(n_contexts), rng.normal(0, 0.3, size=(n_contexts, dim - 1))])
    V = np.column_stack([np.ones(n_outcomes), rng.normal(0, 0.3, size=(n_outcomes, dim - 1))])
    # preferred and rejected outcomes come from disjoint pools; with the identity
    # kernel an outcome used in both roles in one context has an exactly-zero
    # gradient, which central differences only resolve to round-off (~1e-11)
    half = n_outcomes // 2
    records = []
    for _ in range(n_records):
        x = int(rng.integers(n_contexts))
        records.append(PreferenceRecord(x, int(rng.integers(half)), int(rng.integers(half, n_outcomes))))
    mixture = None
    if kernel == "hmk":
        mixture = HMKState(tuple(rng.normal(0, 1, 4)), tuple(rng.normal(0, 1, 2)))
    return Case(config, records, Params(ToyPolicy(logits, U, V), mixture), ref_logits)


def check_case(case: Case, h: float = 1e-5) -> GradientReport:
    return grad_check(case.config, case.records, case.params, case.ref_logits, h)


def certify(trials: int, seed: int = 0, kernels=KERNEL_NAMES, divergences=DIVERGENCE_NAMES) -> list[dict]:
    """Run ``trials`` random cases for every kernel x divergence pair.

    Each (pair, trial) gets its own child seed so results do not depend on
    iteration order.
    """
    rows = []
    for ki, kname in enumerate(kernels):
        for di, dname in enumerate(divergences):
            for t in range(trials):
                rng = np.random.default_rng([seed, ki, di, t])
                report = check_case(random_case(kname, dname, rng))
                rows.append({"kernel": kname, "divergence": dname, "trial": t, "max_rel_err": report.max_rel_err})
    return rows
