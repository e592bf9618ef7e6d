import math

import numpy as np
import pytest
from sklearn.metrics import davies_bouldin_score

from prefk.analysis import ClusterAssignment, davies_bouldin
from prefk.errors import DegenerateRatio, InvalidInput
from prefk.kernels import Identity
from prefk.loss import ObjectiveConfig, evaluate, objective_grad
from prefk.mixture import HMK
from prefk.policy import PreferenceRecord, ToyPolicy
from prefk.train import (
    GENERATORS,
    Sizes,
    TrainConfig,
    gen_synthetic,
    initial_params,
    log_prob_grad,
    policy_forward,
    train_run,
    train_step,
)


def _policy(logits, U=None, V=None):
    logits = np.atleast_2d(logits)
    X, C = logits.shape
    U = np.ones((X, 2)) if U is None else U
    V = np.ones((C, 2)) if V is None else V
    return ToyPolicy(logits, U, V)


def test_forward_examples():
    assert policy_forward(_policy([0.0, 0.0]), PreferenceRecord(0, 0, 1)).z == 0.0
    assert policy_forward(_policy([math.log(2), 0.0]), PreferenceRecord(0, 0, 1)).z == pytest.approx(math.log(2))
    pol = _policy([0.0, 0.0], U=np.array([[1.0, 0.0]]), V=np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DegenerateRatio):
        policy_forward(pol, PreferenceRecord(0, 0, 1)).r
    with pytest.raises(InvalidInput):
        policy_forward(pol, PreferenceRecord(0, 0, 5))


def test_log_prob_grad_examples():
    g = log_prob_grad(_policy(np.zeros(4)), PreferenceRecord(0, 2, 0))
    np.testing.assert_allclose(g, [-0.25, -0.25, 0.75, -0.25])
    sat = log_prob_grad(_policy([0.0, 0.0, 50.0]), PreferenceRecord(0, 2, 0))
    np.testing.assert_allclose(sat, 0.0, atol=1e-20)
    rng = np.random.default_rng(1)
    for _ in range(20):
        assert abs(log_prob_grad(_policy(rng.normal(size=5)), PreferenceRecord(0, 1, 3)).sum()) <= 1e-12


@pytest.mark.parametrize("kind", GENERATORS)
def test_generators_are_deterministic(kind):
    a, b = gen_synthetic(kind, Sizes(), 11), gen_synthetic(kind, Sizes(), 11)
    for name in ("logits", "U", "V"):
        assert getattr(a.policy, name).tobytes() == getattr(b.policy, name).tobytes()
    assert a.records == b.records


@pytest.mark.parametrize("kind", GENERATORS)
def test_generator_shapes(kind):
    data = gen_synthetic(kind, Sizes(n_contexts=4, n_outcomes=6, n_records=32), 0)
    assert len(data.records) == 32
    for r in data.records:
        assert 0 <= r.x < 4 and 0 <= r.y_pos < 6 and 0 <= r.y_neg < 6 and r.y_pos != r.y_neg


def test_separable_blobs_start_well_separated():
    for seed in range(5):
        data = gen_synthetic("separable_clusters", Sizes(), seed)
        V, labels = data.policy.V, data.outcome_groups
        dbs = davies_bouldin(ClusterAssignment(V, labels))
        assert dbs == pytest.approx(davies_bouldin_score(V, labels), rel=1e-10)
        assert dbs <= 0.5


def test_zero_steps_gives_initial_row():
    trace = train_run(TrainConfig(steps=0), gen_synthetic("random", Sizes(), 0))
    assert len(trace.rows) == 1 and trace.failure is None


def test_runs_are_reproducible():
    cfg = TrainConfig(steps=20, objective=ObjectiveConfig(kernel=HMK()))
    data = gen_synthetic("local_structure", Sizes(), 3)
    a, b = train_run(cfg, data), train_run(cfg, data)
    assert [r.breakdown for r in a.rows] == [r.breakdown for r in b.rows]
    assert [r.lam for r in a.rows] == [r.lam for r in b.rows]


def test_reference_policy_stays_frozen():
    data = gen_synthetic("separable_clusters", Sizes(), 0)
    before = data.policy.logits.tobytes()
    train_run(TrainConfig(steps=10), data)
    assert data.policy.logits.tobytes() == before


@pytest.mark.parametrize("kind", GENERATORS)
def test_default_traces_are_finite(kind):
    trace = train_run(TrainConfig(), gen_synthetic(kind, Sizes(), 0))
    assert trace.failure is None and len(trace.rows) == 201
    assert all(math.isfinite(r.breakdown.total) for r in trace.rows)


def test_identity_kernel_learns_preferences():
    cfg = TrainConfig(steps=200, eta=0.05, objective=ObjectiveConfig(kernel=Identity()))
    trace = train_run(cfg, gen_synthetic("separable_clusters", Sizes(), 0))
    assert trace.failure is None
    assert trace.rows[-1].mean_z > trace.rows[0].mean_z


def test_one_step_is_eta_times_gradient():
    cfg = TrainConfig(eta=0.05)
    data = gen_synthetic("random", Sizes(), 2)
    ref = data.policy.logits.copy()
    params = initial_params(cfg, data.policy)
    g = objective_grad(cfg.objective, data.records, params, ref)
    after = train_step(cfg, data.records, params, ref)
    np.testing.assert_array_equal(after.policy.logits, params.policy.logits + cfg.eta * g.logits)
    np.testing.assert_array_equal(after.policy.U, params.policy.U + cfg.eta * g.U)
    np.testing.assert_array_equal(after.policy.V, params.policy.V + cfg.eta * g.V)
    # a small ascent step raises the objective
    assert evaluate(cfg.objective, data.records, after, ref).total > evaluate(cfg.objective, data.records, params, ref).total


def test_config_validation():
    for bad in (dict(eta=0.0), dict(steps=-1), dict(steps=True), dict(grad_clip=0.0), dict(mixture_eta=-1.0)):
        with pytest.raises(InvalidInput):
            TrainConfig(**bad)
