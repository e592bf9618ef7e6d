"""Divergence regularizers between a policy distribution P and a reference Q.

All values are in nats. ``0 * ln 0`` is taken as 0; mass of P on an outcome
where Q has none raises :class:`InfiniteDivergence` instead of returning a
large sentinel.

Every kind also exposes ``divergence_grad`` (gradient w.r.t. P), used by the
loss module to push the regularizer through the policy softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import as_distribution
from .errors import InfiniteDivergence, InvalidFunction, InvalidInput, NotDifferentiableHere, UseKLInstead

LN2 = math.log(2.0)


@dataclass(frozen=True)
class KL:
    name = "kl"


@dataclass(frozen=True)
class JensenShannon:
    name = "js"


@dataclass(frozen=True)
class Hellinger:
    name = "hellinger"


@dataclass(frozen=True)
class Renyi:
    alpha: float = 2.0
    name = "renyi"

    def __post_init__(self):
        _check_renyi_order(self.alpha)


@dataclass(frozen=True)
class Bhattacharyya:
    name = "bhattacharyya"


@dataclass(frozen=True)
class Wasserstein1D:
    name = "wasserstein"


@dataclass(frozen=True)
class FDiv:
    """f-divergence ``sum_i q_i f(p_i / q_i)`` for a convex ``f`` with ``f(1) = 0``.

    ``slope_at_inf`` is ``lim f(t)/t`` as t grows, used for outcomes with
    q = 0 (contribution ``p * slope_at_inf``). ``f_prime`` is needed only
    for gradients.
    """

    f: Callable[[float], float]
    f_prime: Callable[[float], float] | None = None
    slope_at_inf: float = math.inf
    label: str = "custom"
    name = "fdiv"

    def __post_init__(self):
        f1 = self.f(1.0)
        if not math.isfinite(f1) or abs(f1) > 1e-12:
            raise InvalidFunction(f"f(1) must be 0, got {f1!r}")


DivergenceKind = Union[KL, JensenShannon, Hellinger, Renyi, Bhattacharyya, Wasserstein1D, FDiv]


def _xlogx(t: float) -> float:
    return 0.0 if t == 0.0 else t * math.log(t)


def _neg_log(t: float) -> float:
    return math.inf if t == 0.0 else -math.log(t)


# Named generators for FDiv, addressable from JSON configs.
F_GENERATORS: dict[str, FDiv] = {
    "kl": FDiv(_xlogx, lambda t: math.log(t) + 1.0, math.inf, "kl"),
    "chi2": FDiv(lambda t: (t - 1.0) ** 2, lambda t: 2.0 * (t - 1.0), math.inf, "chi2"),
    "reverse_kl": FDiv(_neg_log, lambda t: -1.0 / t, 0.0, "reverse_kl"),
    "squared_hellinger": FDiv(
        lambda t: (math.sqrt(t) - 1.0) ** 2, lambda t: 1.0 - 1.0 / math.sqrt(t), 1.0, "squared_hellinger"
    ),
    "total_variation": FDiv(lambda t: 0.5 * abs(t - 1.0), None, 0.5, "total_variation"),
}


def chi_squared() -> FDiv:
    return F_GENERATORS["chi2"]


def _check_renyi_order(alpha: float) -> None:
    if not math.isfinite(alpha) or alpha <= 0:
        raise InvalidInput(f"Renyi order must be > 0, got {alpha!r}")
    if alpha == 1.0:
        raise UseKLInstead("Renyi order 1 is the KL divergence; use KL")


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = as_distribution(p, "P")
    q = as_distribution(q, "Q")
    if p.size != q.size:
        raise InvalidInput(f"dimension mismatch: {p.size} vs {q.size}")
    return p, q


def kl(p, q) -> float:
    return _kl(*_pair(p, q))


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    support = p > 0
    if np.any(q[support] == 0):
        raise InfiniteDivergence("KL: P has mass where Q has none")
    ps, qs = p[support], q[support]
    return max(0.0, float(np.sum(ps * np.log(ps / qs))))


def js(p, q) -> float:
    return _js(*_pair(p, q))


def _js(p: np.ndarray, q: np.ndarray) -> float:
    # p ln(2p / (p + q)) avoids forming the midpoint, which underflows for subnormal mass
    s = p + q
    total = 0.0
    for v in (p, q):
        mask = v > 0
        total += 0.5 * float(np.sum(v[mask] * np.log(2.0 * v[mask] / s[mask])))
    return min(LN2, max(0.0, total))


def hellinger(p, q) -> float:
    return _hellinger(*_pair(p, q))


def _hellinger(p: np.ndarray, q: np.ndarray) -> float:
    s = float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return min(1.0, math.sqrt(s / 2.0))


def bhattacharyya(p, q) -> float:
    return _bhattacharyya(*_pair(p, q))


def _bhattacharyya(p: np.ndarray, q: np.ndarray) -> float:
    bc = float(np.sum(np.sqrt(p * q)))
    if bc <= 0.0:
        raise InfiniteDivergence("Bhattacharyya: distributions have disjoint support")
    return max(0.0, -math.log(min(bc, 1.0)))


def renyi(alpha: float, p, q) -> float:
    _check_renyi_order(alpha)
    p, q = _pair(p, q)
    return _renyi(alpha, p, q)


def _renyi_terms(alpha: float, p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, float]:
    support = p > 0
    if alpha > 1 and np.any(q[support] == 0):
        raise InfiniteDivergence("Renyi: P has mass where Q has none")
    both = support & (q > 0)
    terms = np.zeros_like(p)
    terms[both] = p[both] ** alpha * q[both] ** (1.0 - alpha)
    return terms, float(terms.sum())


def _renyi(alpha: float, p: np.ndarray, q: np.ndarray) -> float:
    _, s = _renyi_terms(alpha, p, q)
    if s <= 0.0:
        raise InfiniteDivergence("Renyi: distributions have disjoint support")
    return max(0.0, math.log(s) / (alpha - 1.0))


def wasserstein_1d(p, q) -> float:
    p, q = _pair(p, q)
    return _wasserstein(p, q)


def _wasserstein(p: np.ndarray, q: np.ndarray) -> float:
    gap = np.cumsum(p)[:-1] - np.cumsum(q)[:-1]
    return float(np.abs(gap).sum())


def f_divergence(f: FDiv | Callable[[float], float], p, q) -> float:
    if not isinstance(f, FDiv):
        f = FDiv(f)
    p, q = _pair(p, q)
    return _fdiv(f, p, q)


def _fdiv(f: FDiv, p: np.ndarray, q: np.ndarray) -> float:
    total = 0.0
    for pi, qi in zip(p.tolist(), q.tolist()):
        if qi > 0:
            term = qi * f.f(pi / qi)
        elif pi > 0:
            term = pi * f.slope_at_inf
        else:
            term = 0.0
        if not math.isfinite(term):
            raise InfiniteDivergence(f"f-divergence ({f.label}) is infinite on this pair")
        total += term
    return max(0.0, total)


def divergence(kind: DivergenceKind, p, q) -> float:
    """Evaluate any supported divergence D(P || Q)."""
    p, q = _pair(p, q)
    return _dispatch(kind, p, q)


def _dispatch(kind: DivergenceKind, p: np.ndarray, q: np.ndarray) -> float:
    if isinstance(kind, KL):
        return _kl(p, q)
    if isinstance(kind, JensenShannon):
        return _js(p, q)
    if isinstance(kind, Hellinger):
        return _hellinger(p, q)
    if isinstance(kind, Renyi):
        return _renyi(kind.alpha, p, q)
    if isinstance(kind, Bhattacharyya):
        return _bhattacharyya(p, q)
    if isinstance(kind, Wasserstein1D):
        return _wasserstein(p, q)
    if isinstance(kind, FDiv):
        return _fdiv(kind, p, q)
    raise InvalidInput(f"unknown divergence kind {kind!r}")


def divergence_grad(kind: DivergenceKind, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Gradient of D(P || Q) with respect to the entries of P.

    Treats P as unconstrained coordinates; callers project through the
    softmax Jacobian. Requires full support of both arguments. Hellinger at
    P == Q and Wasserstein at zero CDF gaps take the zero subgradient.
    """
    if np.any(p <= 0) or np.any(q <= 0):
        raise NotDifferentiableHere("divergence gradients need full-support distributions")
    if isinstance(kind, KL):
        return np.log(p / q) + 1.0
    if isinstance(kind, JensenShannon):
        return 0.5 * np.log(2.0 * p / (p + q))
    if isinstance(kind, Hellinger):
        diff = np.sqrt(p) - np.sqrt(q)
        s = float(np.sum(diff**2))
        if s == 0.0:
            return np.zeros_like(p)
        return diff / np.sqrt(p) / (2.0 * math.sqrt(2.0 * s))
    if isinstance(kind, Renyi):
        a = kind.alpha
        terms, s = _renyi_terms(a, p, q)
        return a * terms / p / ((a - 1.0) * s)
    if isinstance(kind, Bhattacharyya):
        bc = float(np.sum(np.sqrt(p * q)))
        return -0.5 * np.sqrt(q / p) / bc
    if isinstance(kind, Wasserstein1D):
        sign = np.sign(np.cumsum(p)[:-1] - np.cumsum(q)[:-1])
        # d/dp_j sum_{i<C-1} |F_P(i) - F_Q(i)| picks up every gap at or after j
        tail = np.cumsum(sign[::-1])[::-1]
        return np.append(tail, 0.0)
    if isinstance(kind, FDiv):
        if kind.f_prime is None:
            raise NotDifferentiableHere(f"f-divergence {kind.label!r} was registered without f'")
        return np.array([kind.f_prime(pi / qi) for pi, qi in zip(p.tolist(), q.tolist())])
    raise InvalidInput(f"unknown divergence kind {kind!r}")


def divergence_regularizer(kind: DivergenceKind, pairs: Sequence[tuple]) -> float:
    """Mean divergence over (policy, reference) pairs, reduced in index order."""
    if len(pairs) == 0:
        raise InvalidInput("regularizer needs at least one distribution pair")
    values = []
    for i, (p, q) in enumerate(pairs):
        try:
            values.append(divergence(kind, p, q))
        except InfiniteDivergence as exc:
            raise InfiniteDivergence(f"pair {i}: {exc}", index=i) from exc
    return math.fsum(values) / len(values)


def symmetric(kind: DivergenceKind) -> bool:
    return isinstance(kind, (JensenShannon, Hellinger, Bhattacharyya, Wasserstein1D)) or (
        isinstance(kind, Renyi) and kind.alpha == 0.5
    )
