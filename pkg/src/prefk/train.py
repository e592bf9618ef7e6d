"""Synthetic preference data and the gradient-ascent training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import log_softmax, make_rng
from .errors import DegenerateRatio, InvalidInput, NotDifferentiableHere, NumericalFailure, PrefKError
from .loss import LossBreakdown, ObjectiveConfig, Params, evaluate, objective_grad, policy_signals
from .mixture import HMKState, entropy_from_logits, mixture_step
from .policy import PreferenceRecord, ToyPolicy

GENERATORS = ("separable_clusters", "local_structure", "random")


@dataclass(frozen=True)
class Sizes:
    n_contexts: int = 4
    n_outcomes: int = 6
    n_records: int = 32
    dim: int = 4

    def __post_init__(self):
        if min(self.n_contexts, self.n_records, self.dim) < 1 or self.n_outcomes < 2:
            raise InvalidInput(f"invalid sizes {self}")


@dataclass
class SyntheticData:
    policy: ToyPolicy
    records: list[PreferenceRecord]
    # outcome-level group label: 1 for outcomes only ever preferred, 0 otherwise
    outcome_groups: np.ndarray
    kind: str


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.05
    steps: int = 200
    seed: int = 0
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    entropy_weight: float = 0.1
    snapshot_every: int = 50
    mixture_eta: float | None = None  # step size for theta/psi; None reuses eta
    grad_clip: float | None = None  # elementwise bound on every gradient entry; None = plain ascent

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidInput("eta must be positive")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 0:
            raise InvalidInput("steps must be a nonnegative integer")
        if self.mixture_eta is not None and not self.mixture_eta > 0:
            raise InvalidInput("mixture_eta must be positive")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise InvalidInput("grad_clip must be positive")
        if self.entropy_weight < 0:
            raise InvalidInput("entropy weight must be nonnegative")


@dataclass
class TraceRow:
    step: int
    breakdown: LossBreakdown
    lam: tuple[float, ...] | None
    tau: tuple[float, ...] | None
    entropy: float | None
    mean_z: float

    @property
    def min_lambda(self) -> float | None:
        return None if self.lam is None else min(self.lam)

    @property
    def loss(self) -> float:
        """Minimized quantity: the negated objective."""
        return -self.breakdown.total


@dataclass
class TrainTrace:
    rows: list[TraceRow] = field(default_factory=list)
    snapshots: dict[int, dict] = field(default_factory=dict)
    final_params: Params | None = None
    failure: str | None = None

    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.rows])


def _unit_rows(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def gen_synthetic(kind: str, sizes: Sizes = Sizes(), seed: int = 0) -> SyntheticData:
    """Deterministic synthetic preference problem.

    ``separable_clusters`` puts preferred and rejected outcomes in two blobs
    (centroid gap 12 blob std) far from the origin; ``local_structure`` gives
    each context a tight neighbourhood of preferred outcomes on the unit
    sphere; ``random`` draws every table i.i.d. standard normal.
    """
    if kind not in GENERATORS:
        raise InvalidInput(f"unknown generator {kind!r}; choose from {GENERATORS}")
    rng = make_rng(seed)
    X, C, n, m = sizes.n_contexts, sizes.n_outcomes, sizes.n_records, sizes.dim
    if kind != "random" and (m < 2 or C < 2):
        raise InvalidInput(f"{kind} needs dim >= 2 and at least 2 outcomes")
    logits = rng.normal(0.0, 0.1, size=(X, C))
    groups = np.zeros(C, dtype=int)
    records = []

    if kind == "separable_clusters":
        # blobs sit far from the origin so dot products stay well away from zero
        blob = 0.1
        n_good = C // 2
        groups[:n_good] = 1
        centre_good = np.zeros(m)
        centre_bad = np.zeros(m)
        centre_good[:2] = (4.0, 0.6)
        centre_bad[:2] = (4.0, -0.6)
        U = np.zeros((X, m))
        U[:, 0] = 1.0
        U[:, 1:] = rng.normal(0.0, 0.05, size=(X, m - 1))
        V = np.where(groups[:, None] == 1, centre_good, centre_bad) + rng.normal(0.0, blob, size=(C, m))
        # balanced usage: each outcome appears in as near-equal a share of records as n allows
        pos = rng.permutation(np.resize(np.arange(n_good), n))
        neg = rng.permutation(np.resize(np.arange(n_good, C), n))
        for i in range(n):
            records.append(PreferenceRecord(int(rng.integers(X)), int(pos[i]), int(neg[i])))
    elif kind == "local_structure":
        # context x owns outcomes {y : y % X == x}; those sit close to e_x
        owner = np.arange(C) % X
        directions = rng.normal(0.0, 1.0, size=(X, m - 1))
        directions = 0.5 * _unit_rows(directions)
        U = np.column_stack([np.ones(X), directions])
        V = U[owner] + rng.normal(0.0, 0.05, size=(C, m))
        U, V = _unit_rows(U), _unit_rows(V)
        for _ in range(n):
            x = int(rng.integers(X))
            own = np.flatnonzero(owner == x)
            other = np.flatnonzero(owner != x)
            if own.size == 0 or other.size == 0:
                raise InvalidInput("local_structure needs n_outcomes > n_contexts")
            records.append(PreferenceRecord(x, int(rng.choice(own)), int(rng.choice(other))))
        groups = np.ones(C, dtype=int)
    else:
        logits = rng.normal(0.0, 1.0, size=(X, C))
        U = rng.normal(0.0, 1.0, size=(X, m))
        V = rng.normal(0.0, 1.0, size=(C, m))
        for _ in range(n):
            yp, yn = rng.choice(C, size=2, replace=False)
            records.append(PreferenceRecord(int(rng.integers(X)), int(yp), int(yn)))
        groups = np.ones(C, dtype=int)

    return SyntheticData(ToyPolicy(logits, U, V), records, groups, kind)


def policy_forward(policy: ToyPolicy, record: PreferenceRecord):
    return policy_signals(policy, record)


def log_prob_grad(policy: ToyPolicy, record: PreferenceRecord, y: int | None = None) -> np.ndarray:
    """Gradient of ln pi(y|x) over the context's logit row: onehot(y) - pi(.|x)."""
    policy.check(record)
    y = record.y_pos if y is None else y
    if not 0 <= y < policy.n_outcomes:
        raise InvalidInput(f"outcome index {y} out of range")
    g = -np.exp(log_softmax(policy.logits[record.x]))
    g[y] += 1.0
    return g


def _mean_z(policy: ToyPolicy, records: Sequence[PreferenceRecord]) -> float:
    return math.fsum(policy_signals(policy, r).z for r in records) / len(records)


def _row(step: int, config: TrainConfig, records, params: Params, ref_logits) -> TraceRow:
    breakdown = evaluate(config.objective, records, params, ref_logits)
    lam = tau = ent = None
    if params.mixture is not None:
        lam_arr = params.mixture.lam
        lam = tuple(lam_arr.tolist())
        ent = entropy_from_logits(params.mixture.theta)
        if isinstance(params.mixture, HMKState):
            tau = tuple(params.mixture.tau.tolist())
    return TraceRow(step, breakdown, lam, tau, ent, _mean_z(params.policy, records))


def initial_params(config: TrainConfig, policy: ToyPolicy) -> Params:
    mixture = config.objective.kernel.initial_state() if config.objective.is_mixture else None
    return Params(policy.copy(), mixture)


def train_step(config: TrainConfig, records, params: Params, ref_logits: np.ndarray) -> Params:
    """One ascent step on the objective; mixture logits move via ``mixture_step``."""
    try:
        g = objective_grad(config.objective, records, params, ref_logits)
    except (NotDifferentiableHere, DegenerateRatio) as exc:
        raise NumericalFailure(f"gradient unavailable: {exc}") from exc
    pol = params.policy
    eta = config.eta
    for block in (g.logits, g.U, g.V):
        if not np.all(np.isfinite(block)):
            raise NumericalFailure("non-finite policy gradient")
    clip = (lambda a: a) if config.grad_clip is None else (lambda a: np.clip(a, -config.grad_clip, config.grad_clip))
    new_policy = ToyPolicy(
        pol.logits + eta * clip(g.logits), pol.U + eta * clip(g.U), pol.V + eta * clip(g.V)
    )
    mixture = params.mixture
    if mixture is not None:
        grad_tau = None if g.tau is None else -clip(g.tau)
        mixture = mixture_step(
            mixture, -clip(g.lam), grad_tau, config.entropy_weight, config.mixture_eta or eta
        )
    return Params(new_policy, mixture)


def train_run(config: TrainConfig, data: SyntheticData) -> TrainTrace:
    """Full-batch gradient ascent for ``config.steps`` steps.

    The reference policy is a frozen copy of the initial logits. On a
    numerical failure the trace so far is returned with ``failure`` set.
    """
    records = data.records
    if not records:
        raise InvalidInput("no preference records")
    ref_logits = data.policy.logits.copy()
    ref_logits.setflags(write=False)
    params = initial_params(config, data.policy)
    trace = TrainTrace()
    try:
        trace.rows.append(_row(0, config, records, params, ref_logits))
        trace.snapshots[0] = params.policy.to_dict()
        for step in range(1, config.steps + 1):
            params = train_step(config, records, params, ref_logits)
            row = _row(step, config, records, params, ref_logits)
            if not math.isfinite(row.breakdown.total):
                raise NumericalFailure(f"objective became non-finite at step {step}")
            trace.rows.append(row)
            if config.snapshot_every and (step % config.snapshot_every == 0 or step == config.steps):
                trace.snapshots[step] = params.policy.to_dict()
    except PrefKError as exc:
        trace.failure = f"{type(exc).__name__}: {exc}"
    trace.final_params = params
    return trace
