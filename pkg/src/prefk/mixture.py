"""Kernel mixtures with softmax-parameterized weights.

Flat mixture: ``sum_k lambda_k kappa_k`` with lambda slots ordered
(Polynomial, RBF, Spectral, Mahalanobis).

HMK: ``tau_1 (lambda_1 RBF + lambda_2 Poly) + tau_2 (lambda_3 Spectral + lambda_4 Maha)``.
Note the different slot order: lambda_1 is RBF in HMK but Polynomial in the
flat mixture. lambda (4-simplex) and tau (2-simplex) are independent softmaxes
of logits theta and psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import as_vector
from .errors import InvalidInput, NumericalFailure
from .kernels import RBF, KernelSpec, MahalanobisScalar, Polynomial, Spectral, scalar_kernel, vector_kernel

FLAT_ORDER = ("polynomial", "rbf", "spectral", "mahalanobis")
HMK_ORDER = ("rbf", "polynomial", "spectral", "mahalanobis")
HMK_GROUPS = ((0, 1), (2, 3))  # lambda slots feeding tau_1 (local) and tau_2 (global)


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def _jacobian(w: np.ndarray) -> np.ndarray:
    return np.diag(w) - np.outer(w, w)


def weights_from_logits(theta) -> tuple[np.ndarray, np.ndarray]:
    """Softmax weights and their Jacobian ``J[i, j] = w_i (delta_ij - w_j)``."""
    theta = as_vector(theta, "theta")
    w = _softmax(theta)
    return w, _jacobian(w)


@dataclass(frozen=True)
class MixtureState:
    theta: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if len(theta) != 4 or not all(math.isfinite(t) for t in theta):
            raise InvalidInput("mixture state needs 4 finite logits")
        object.__setattr__(self, "theta", theta)

    @property
    def lam(self) -> np.ndarray:
        return _softmax(np.array(self.theta))

    @property
    def tau(self) -> None:
        return None


@dataclass(frozen=True)
class HMKState:
    theta: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    psi: tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        psi = tuple(float(t) for t in self.psi)
        if len(theta) != 4 or len(psi) != 2:
            raise InvalidInput("HMK state needs 4 kernel logits and 2 group logits")
        if not all(math.isfinite(t) for t in theta + psi):
            raise InvalidInput("HMK logits must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "psi", psi)

    @property
    def lam(self) -> np.ndarray:
        return _softmax(np.array(self.theta))

    @property
    def tau(self) -> np.ndarray:
        return _softmax(np.array(self.psi))


AnyMixtureState = Union[MixtureState, HMKState]


@dataclass(frozen=True)
class FlatMixture:
    polynomial: Polynomial = field(default_factory=Polynomial)
    rbf: RBF = field(default_factory=RBF)
    spectral: Spectral = field(default_factory=Spectral)
    mahalanobis: MahalanobisScalar = field(default_factory=MahalanobisScalar)
    name = "mixture"

    def components(self) -> tuple[KernelSpec, ...]:
        return tuple(getattr(self, n) for n in FLAT_ORDER)

    def initial_state(self) -> MixtureState:
        return MixtureState()


@dataclass(frozen=True)
class HMK:
    polynomial: Polynomial = field(default_factory=Polynomial)
    rbf: RBF = field(default_factory=RBF)
    spectral: Spectral = field(default_factory=Spectral)
    mahalanobis: MahalanobisScalar = field(default_factory=MahalanobisScalar)
    name = "hmk"

    def components(self) -> tuple[KernelSpec, ...]:
        return tuple(getattr(self, n) for n in HMK_ORDER)

    def initial_state(self) -> HMKState:
        return HMKState()


MixtureSpec = Union[FlatMixture, HMK]


def slot_weights(state: AnyMixtureState) -> np.ndarray:
    """Per-slot multipliers: lambda for the flat mixture, tau_group * lambda for HMK."""
    lam = state.lam
    if isinstance(state, HMKState):
        tau = state.tau
        out = lam.copy()
        for g, slots in enumerate(HMK_GROUPS):
            out[list(slots)] *= tau[g]
        return out
    return lam


def _evaluate(specs: Sequence[KernelSpec], args) -> np.ndarray:
    if len(specs) != 4:
        raise InvalidInput("a mixture needs exactly 4 component kernels")
    if len(args) == 1:
        return np.array([scalar_kernel(s, float(args[0])) for s in specs])
    if len(args) == 2:
        return np.array([vector_kernel(s, args[0], args[1]) for s in specs])
    raise InvalidInput("pass either a scalar z or an embedding pair (u, v)")


def flat_mixture_kernel(state: MixtureState, specs: Sequence[KernelSpec], *args) -> float:
    """Weighted kernel value; ``specs`` in (Poly, RBF, Spectral, Maha) order."""
    values = _evaluate(specs, args)
    return float(state.lam @ values)


def hmk_combine(tau, lam, values) -> float:
    """tau_1 (lam_1 v_1 + lam_2 v_2) + tau_2 (lam_3 v_3 + lam_4 v_4) for arbitrary weights."""
    tau, lam, values = (np.asarray(a, dtype=np.float64) for a in (tau, lam, values))
    if tau.shape != (2,) or lam.shape != (4,) or values.shape != (4,):
        raise InvalidInput("need 2 group weights, 4 kernel weights and 4 values")
    return float(sum(tau[g] * sum(lam[s] * values[s] for s in slots) for g, slots in enumerate(HMK_GROUPS)))


def hmk_kernel(state: HMKState, specs: Sequence[KernelSpec], *args) -> float:
    """HMK value; ``specs`` in (RBF, Poly, Spectral, Maha) order."""
    return hmk_combine(state.tau, state.lam, _evaluate(specs, args))


def entropy_reg(lam) -> tuple[float, np.ndarray]:
    lam = as_vector(lam, "lambda")
    if np.any(lam <= 0):
        raise InvalidInput("entropy needs strictly positive weights")
    logs = np.log(lam)
    return float(-(lam * logs).sum()), -logs - 1.0


def log_weights(theta) -> np.ndarray:
    """ln softmax(theta), computed without forming the weights."""
    theta = as_vector(theta, "theta")
    shifted = theta - theta.max()
    return shifted - math.log(np.exp(shifted).sum())


def entropy_from_logits(theta) -> float:
    logs = log_weights(theta)
    return float(-(np.exp(logs) * logs).sum())


def logit_grads(
    state: AnyMixtureState, grad_lam: np.ndarray, grad_tau: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Chain gradients w.r.t. (lambda, tau) onto (theta, psi) via the full softmax Jacobian."""
    g_theta = _jacobian(state.lam).T @ np.asarray(grad_lam, dtype=np.float64)
    g_psi = None
    if isinstance(state, HMKState):
        gt = np.zeros(2) if grad_tau is None else np.asarray(grad_tau, dtype=np.float64)
        g_psi = _jacobian(state.tau).T @ gt
    return g_theta, g_psi


def mixture_step(
    state: AnyMixtureState,
    grad_lam,
    grad_tau=None,
    entropy_weight: float = 0.0,
    eta: float = 0.05,
) -> AnyMixtureState:
    """One descent step on the logits for a loss with these (lambda, tau) gradients.

    The entropy bonus enters the minimized loss as ``-entropy_weight * H(lambda)``,
    so its gradient is subtracted from ``grad_lam`` before projection.
    """
    if not eta > 0:
        raise InvalidInput("eta must be positive")
    if entropy_weight < 0:
        raise InvalidInput("entropy weight must be nonnegative")
    g_lam = np.asarray(grad_lam, dtype=np.float64)
    if g_lam.shape != (4,):
        raise InvalidInput("lambda gradient must have 4 entries")
    if entropy_weight > 0:
        # log-weights straight from the logits so tiny weights never underflow to 0
        log_lam = log_weights(state.theta)
        g_lam = g_lam - entropy_weight * (-log_lam - 1.0)
    if not np.all(np.isfinite(g_lam)) or (grad_tau is not None and not np.all(np.isfinite(grad_tau))):
        raise NumericalFailure("non-finite mixture gradient")
    g_theta, g_psi = logit_grads(state, g_lam, grad_tau)
    theta = np.array(state.theta) - eta * g_theta
    if isinstance(state, HMKState):
        psi = np.array(state.psi) - eta * g_psi
        return HMKState(tuple(theta), tuple(psi))
    return MixtureState(tuple(theta))


@dataclass(frozen=True)
class CollapseReport:
    min_lambda_trajectory: tuple[float, ...]
    collapsed: bool
    dominant_index: int | None  # 1-based kernel slot


def collapse_detect(trace, threshold: float = 0.05) -> CollapseReport:
    """Flag collapse when min_i lambda_i drops below ``threshold`` in the final 10% of steps."""
    lam = np.asarray(trace, dtype=np.float64)
    if lam.ndim != 2 or lam.shape[0] == 0:
        raise InvalidInput("trace must be a nonempty (steps, k) array")
    if not 0 < threshold <= 0.25:
        raise InvalidInput("threshold must lie in (0, 0.25]")
    mins = lam.min(axis=1)
    window = max(1, int(math.ceil(0.1 * lam.shape[0])))
    collapsed = bool(mins[-window:].min() < threshold)
    dominant = int(np.argmax(lam[-1])) + 1 if collapsed else None
    return CollapseReport(tuple(mins.tolist()), collapsed, dominant)
