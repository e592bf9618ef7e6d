"""Hybrid and kernelized preference objectives with closed-form gradients.

The maximized objective for a batch is

    total = mean_i[kappa(z_i)] + gamma * mean_i[kappa_e(a_i, b_i)] - alpha * beta * mean_i[D(pi_i || ref_i)]

with z = ln pi(y+|x) - ln pi(y-|x), a = e_x.e_y+, b = e_x.e_y-, and
kappa_e the embedding row of the kernel (see ``kernels.embed_kernel``).
Mixture kernels replace kappa by the weighted sum of their components, with
weights carried in a ``MixtureState``/``HMKState``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .core import log_softmax
from .divergences import KL, DivergenceKind, divergence_grad, divergence_regularizer
from .errors import DegenerateRatio, InvalidInput, InvalidKernelForm
from .kernels import (
    RBF,
    Identity,
    KernelSpec,
    MahalanobisVector,
    embed_kernel,
    embed_kernel_grad,
    scalar_kernel,
    scalar_kernel_deriv,
)
from .mixture import HMK, HMK_GROUPS, AnyMixtureState, FlatMixture, HMKState, MixtureSpec, MixtureState, slot_weights
from .policy import PreferenceRecord, ToyPolicy

AnyKernel = Union[KernelSpec, MixtureSpec]


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 0.5
    beta: float = 1.0
    gamma: float = 0.5
    kernel: AnyKernel = field(default_factory=RBF)
    divergence: DivergenceKind = field(default_factory=KL)
    allow_out_of_range: bool = False

    def __post_init__(self):
        if self.allow_out_of_range:
            if min(self.alpha, self.beta, self.gamma) < 0:
                raise InvalidInput("alpha, beta, gamma must be nonnegative")
            return
        for name, lo, hi in (("alpha", 0.1, 1.0), ("beta", 0.5, 2.0), ("gamma", 0.1, 1.0)):
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise InvalidInput(f"{name}={value!r} outside [{lo}, {hi}]; set allow_out_of_range to override")

    @property
    def is_mixture(self) -> bool:
        return isinstance(self.kernel, (FlatMixture, HMK))


@dataclass(frozen=True)
class TripletSignals:
    logp_pos: float
    logp_neg: float
    dot_pos: float
    dot_neg: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.logp_pos, self.logp_neg, self.dot_pos, self.dot_neg)):
            raise InvalidInput("triplet signals must be finite")

    @property
    def z(self) -> float:
        return self.logp_pos - self.logp_neg

    @property
    def r(self) -> float:
        if self.dot_neg == 0.0:
            raise DegenerateRatio("dot product with the rejected embedding is zero")
        return self.dot_pos / self.dot_neg


@dataclass(frozen=True)
class LossBreakdown:
    prob_term: float
    embed_term: float
    regularizer: float
    total: float


@dataclass(frozen=True)
class GradientReport:
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_err: float


def hybrid_loss(signals: TripletSignals, gamma: float) -> float:
    """z + gamma * ln(dot_pos / dot_neg); gamma = 0 is the plain DPO margin."""
    return signals.z + gamma * embed_kernel(Identity(), signals.dot_pos, signals.dot_neg)


def _check_scalar_capable(spec) -> None:
    if isinstance(spec, MahalanobisVector):
        raise InvalidKernelForm("MahalanobisVector acts on embedding pairs, not on scalar signals")


def _component_terms(spec: AnyKernel, z: float, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(spec, (FlatMixture, HMK)):
        comps = spec.components()
    else:
        _check_scalar_capable(spec)
        comps = (spec,)
    prob = np.array([scalar_kernel(k, z) for k in comps])
    emb = np.array([embed_kernel(k, a, b) for k in comps])
    return prob, emb


def _weights(spec: AnyKernel, state: AnyMixtureState | None) -> np.ndarray:
    if isinstance(spec, (FlatMixture, HMK)):
        if state is None:
            state = spec.initial_state()
        want = HMKState if isinstance(spec, HMK) else MixtureState
        if not isinstance(state, want):
            raise InvalidInput(f"{type(spec).__name__} needs a {want.__name__}")
        return slot_weights(state)
    return np.ones(1)


def kernel_terms(
    spec: AnyKernel, signals: TripletSignals, state: AnyMixtureState | None = None
) -> tuple[float, float]:
    """(kernelized probability term, kernelized embedding term) for one triplet."""
    w = _weights(spec, state)
    prob, emb = _component_terms(spec, signals.z, signals.dot_pos, signals.dot_neg)
    return float(w @ prob), float(w @ emb)


def kernelized_hybrid_loss(
    spec: AnyKernel, signals: TripletSignals, gamma: float, state: AnyMixtureState | None = None
) -> float:
    prob, emb = kernel_terms(spec, signals, state)
    return prob + gamma * emb


def full_objective(
    config: ObjectiveConfig,
    batch: Sequence[TripletSignals],
    policy_dists: Sequence,
    ref_dists: Sequence,
    state: AnyMixtureState | None = None,
) -> LossBreakdown:
    if len(batch) == 0:
        raise InvalidInput("batch is empty")
    if len(policy_dists) != len(batch) or len(ref_dists) != len(batch):
        raise InvalidInput("distribution pairs must align with the triplets")
    probs, embs = [], []
    for s in batch:
        p, e = kernel_terms(config.kernel, s, state)
        probs.append(p)
        embs.append(e)
    n = len(batch)
    prob_term = math.fsum(probs) / n
    embed_term = math.fsum(embs) / n
    reg = divergence_regularizer(config.divergence, list(zip(policy_dists, ref_dists)))
    total = prob_term + config.gamma * embed_term - config.alpha * config.beta * reg
    return LossBreakdown(prob_term, embed_term, reg, total)


# --- toy-policy parameterization ------------------------------------------


@dataclass
class Params:
    """Everything the objective is differentiated against."""

    policy: ToyPolicy
    mixture: AnyMixtureState | None = None

    def flatten(self) -> np.ndarray:
        parts = [self.policy.logits.ravel(), self.policy.U.ravel(), self.policy.V.ravel()]
        if self.mixture is not None:
            parts.append(np.array(self.mixture.theta))
            if isinstance(self.mixture, HMKState):
                parts.append(np.array(self.mixture.psi))
        return np.concatenate(parts)

    def unflatten(self, flat: np.ndarray) -> "Params":
        pol = self.policy
        sizes = [pol.logits.size, pol.U.size, pol.V.size]
        offs = np.cumsum([0] + sizes)
        logits = flat[offs[0] : offs[1]].reshape(pol.logits.shape)
        U = flat[offs[1] : offs[2]].reshape(pol.U.shape)
        V = flat[offs[2] : offs[3]].reshape(pol.V.shape)
        mix = None
        if isinstance(self.mixture, HMKState):
            mix = HMKState(tuple(flat[offs[3] : offs[3] + 4]), tuple(flat[offs[3] + 4 : offs[3] + 6]))
        elif isinstance(self.mixture, MixtureState):
            mix = MixtureState(tuple(flat[offs[3] : offs[3] + 4]))
        return Params(ToyPolicy(logits, U, V), mix)


@dataclass
class ObjectiveGrad:
    """Gradient of the maximized objective, split by parameter block."""

    logits: np.ndarray
    U: np.ndarray
    V: np.ndarray
    lam: np.ndarray | None = None  # d objective / d lambda
    tau: np.ndarray | None = None  # d objective / d tau
    theta: np.ndarray | None = None
    psi: np.ndarray | None = None

    def flatten(self) -> np.ndarray:
        parts = [self.logits.ravel(), self.U.ravel(), self.V.ravel()]
        if self.theta is not None:
            parts.append(self.theta)
        if self.psi is not None:
            parts.append(self.psi)
        return np.concatenate(parts)


def policy_signals(policy: ToyPolicy, record: PreferenceRecord) -> TripletSignals:
    policy.check(record)
    logp = log_softmax(policy.logits[record.x])
    ex = policy.U[record.x]
    return TripletSignals(
        float(logp[record.y_pos]),
        float(logp[record.y_neg]),
        float(ex @ policy.V[record.y_pos]),
        float(ex @ policy.V[record.y_neg]),
    )


def evaluate(
    config: ObjectiveConfig, records: Sequence[PreferenceRecord], params: Params, ref_logits: np.ndarray
) -> LossBreakdown:
    pol = params.policy
    signals = [policy_signals(pol, r) for r in records]
    pis = [pol.probs(r.x) for r in records]
    refs = [np.exp(log_softmax(ref_logits[r.x])) for r in records]
    return full_objective(config, signals, pis, refs, params.mixture)


def objective_grad(
    config: ObjectiveConfig, records: Sequence[PreferenceRecord], params: Params, ref_logits: np.ndarray
) -> ObjectiveGrad:
    """Closed-form gradient of ``evaluate(...).total``.

    The log-probability gap of a table policy has gradient
    onehot(y+) - onehot(y-) in the context's logit row (the softmax
    normalizer cancels); embedding-ratio terms follow the quotient rule;
    the regularizer is pushed through the full softmax Jacobian.
    """
    if len(records) == 0:
        raise InvalidInput("batch is empty")
    pol = params.policy
    spec = config.kernel
    w = _weights(spec, params.mixture)
    comps = spec.components() if config.is_mixture else (spec,)
    if not config.is_mixture:
        _check_scalar_capable(spec)
    n = len(records)
    g_logits = np.zeros_like(pol.logits)
    g_U = np.zeros_like(pol.U)
    g_V = np.zeros_like(pol.V)
    g_slots = np.zeros(len(comps))
    coef = config.alpha * config.beta / n
    for rec in records:
        pol.check(rec)
        x, yp, yn = rec.x, rec.y_pos, rec.y_neg
        ex, ep, en = pol.U[x], pol.V[yp], pol.V[yn]
        z = float(pol.logits[x, yp] - pol.logits[x, yn])
        a, b = float(ex @ ep), float(ex @ en)
        dz = 0.0
        da = db = 0.0
        for k, comp in enumerate(comps):
            dz += w[k] * scalar_kernel_deriv(comp, z)
            ka, kb = embed_kernel_grad(comp, a, b)
            da += w[k] * ka
            db += w[k] * kb
            if config.is_mixture:
                g_slots[k] += (scalar_kernel(comp, z) + config.gamma * embed_kernel(comp, a, b)) / n
        g_logits[x, yp] += dz / n
        g_logits[x, yn] -= dz / n
        ga, gb = config.gamma * da / n, config.gamma * db / n
        g_U[x] += ga * ep + gb * en
        g_V[yp] += ga * ex
        g_V[yn] += gb * ex
        if coef != 0.0:
            p = pol.probs(x)
            q = np.exp(log_softmax(ref_logits[x]))
            gp = divergence_grad(config.divergence, p, q)
            g_logits[x] -= coef * p * (gp - p @ gp)
    out = ObjectiveGrad(g_logits, g_U, g_V)
    if config.is_mixture:
        state = params.mixture if params.mixture is not None else spec.initial_state()
        lam = state.lam
        if isinstance(state, HMKState):
            tau = state.tau
            g_lam = g_slots.copy()
            g_tau = np.zeros(2)
            for gi, slots in enumerate(HMK_GROUPS):
                for s in slots:
                    g_lam[s] = tau[gi] * g_slots[s]
                    g_tau[gi] += lam[s] * g_slots[s]
            out.lam, out.tau = g_lam, g_tau
            out.theta = lam * (g_lam - lam @ g_lam)
            out.psi = tau * (g_tau - tau @ g_tau)
        else:
            out.lam = g_slots
            out.theta = lam * (g_slots - lam @ g_slots)
    return out


def analytic_grad(
    config: ObjectiveConfig, records: Sequence[PreferenceRecord], params: Params, ref_logits: np.ndarray
) -> np.ndarray:
    """Flat gradient in ``Params.flatten`` order."""
    return objective_grad(config, records, params, ref_logits).flatten()


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    if not h > 0:
        raise InvalidInput("finite-difference step must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def finite_diff_grad(
    config: ObjectiveConfig,
    records: Sequence[PreferenceRecord],
    params: Params,
    ref_logits: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    def f(flat: np.ndarray) -> float:
        return evaluate(config, records, params.unflatten(flat), ref_logits).total

    return central_difference(f, params.flatten(), h)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.shape != numeric.shape:
        raise InvalidInput("gradient vectors differ in shape")
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(
    config: ObjectiveConfig,
    records: Sequence[PreferenceRecord],
    params: Params,
    ref_logits: np.ndarray,
    h: float = 1e-5,
) -> GradientReport:
    a = analytic_grad(config, records, params, ref_logits)
    n = finite_diff_grad(config, records, params, ref_logits, h)
    return GradientReport(a, n, relative_error(a, n))
