"""Solver rounds: queue, schedule, both variants, baseline, full runs."""
import math

import numpy as np
import pytest

import queueprox as qp
from queueprox import algorithm as alg
from oracles import GOLDEN, golden_config

BALL = qp.Ball(center=np.zeros(2), radius=1.0)
EUC2 = qp.euclidean(2)


def run_shipped(name, horizon=None, seed=None):
    cfg = qp.shipped_scenario(name, horizon=horizon, seed=seed)
    built = qp.build_scenario(cfg)
    return built, qp.run(cfg.variant, built, horizon=cfg.horizon)


# ---------------------------------------------------------------------------
# hyperparameters
# ---------------------------------------------------------------------------


def test_hyperparams_from_variation_examples():
    hp = qp.hyperparams_from_variation(16.0, 1.0)
    assert (hp.eta, hp.gamma) == (0.25, 2.0)
    hp = qp.hyperparams_from_variation(0.0, 2.0)
    assert hp.eta == 0.5
    assert hp.gamma == pytest.approx(math.sqrt(2), rel=1e-15)
    hp = qp.hyperparams_from_variation(16.0, 1.0, horizon=100,
                                       variant=qp.VARIANT_SIMPLEX)
    assert hp.nu == 0.01


def test_hyperparams_rejects_bad_inputs():
    with pytest.raises(ValueError):
        qp.hyperparams_from_variation(1.0, 0.0)
    with pytest.raises(ValueError):
        qp.hyperparams_from_variation(-1.0, 1.0)
    with pytest.raises(ValueError):
        qp.hyperparams_from_variation(1.0, 1.0, variant=qp.VARIANT_SIMPLEX)
    with pytest.raises(ValueError):
        qp.HyperParams(eta=1.0, gamma=-0.1)


def test_hyperparams_gamma_zero_is_legal():
    hp = qp.HyperParams(eta=1.0, gamma=0.0)
    assert hp.gamma == 0.0


# ---------------------------------------------------------------------------
# queue, xi, alpha primitives
# ---------------------------------------------------------------------------


def test_queue_update_examples():
    assert qp.queue_update(np.zeros(1), np.array([-0.5]), 1.0)[0] == 0.5
    assert qp.queue_update(np.array([2.0]), np.array([0.3]), 1.0)[0] == 2.3
    assert qp.queue_update(np.array([0.1]), np.array([-0.4]), 2.0)[0] == 0.8


def test_queue_update_keeps_both_branches_nonnegative():
    rng = np.random.default_rng(4)
    q = np.zeros(3)
    for _ in range(500):
        g = rng.uniform(-1, 1, size=3)
        q = qp.queue_update(q, g, 0.7)
        assert np.all(q >= 0)
        assert np.all(q + 0.7 * g >= 0)


def test_xi_value_examples():
    assert qp.xi_value(np.zeros(1), 1.0, 0.0, 1.0, 1.0) == 1.0
    assert qp.xi_value(np.array([1.0, 1.0]), 2.0, 0.5, 1.0, 0.0) == 4.0
    assert qp.xi_value(np.array([5.0]), 0.0, 2.0, 3.0, 1.0) == 0.0


def test_alpha_update_general_plug_in():
    val = qp.alpha_update(0.0, 1.0, eta=1.0, gamma=1.0, rho=1.0,
                          grad_lipschitz=1.0, curvature=0.0, value_bound=0.0)
    assert val == 6.0


def test_alpha_update_clamps_to_previous():
    val = qp.alpha_update(50.0, 1.0, eta=1.0, gamma=1.0, rho=1.0,
                          grad_lipschitz=1.0, curvature=0.0, value_bound=0.0)
    assert val == 50.0


def test_alpha_update_simplex_plug_in():
    val = qp.alpha_update(0.0, 1.0, eta=1.0, gamma=1.0, rho=1.0,
                          grad_lipschitz=1.0, curvature=0.0, value_bound=0.0,
                          variant=qp.VARIANT_SIMPLEX)
    assert val == 8.0


def test_alpha_update_rejects_nonpositive_eta():
    with pytest.raises(ValueError):
        qp.alpha_update(0.0, 1.0, eta=0.0, gamma=1.0, rho=1.0,
                        grad_lipschitz=1.0, curvature=0.0, value_bound=0.0)


def test_mix_anchor_examples():
    out = qp.mix_anchor(np.array([1.0, 0.0, 0.0]), 0.3)
    assert np.allclose(out, [0.8, 0.1, 0.1], atol=1e-15)
    uniform = np.full(3, 1 / 3)
    assert np.allclose(qp.mix_anchor(uniform, 0.2), uniform, atol=1e-15)
    anywhere = np.array([0.7, 0.2, 0.1])
    assert np.allclose(qp.mix_anchor(anywhere, 1.0), uniform, atol=1e-15)


# ---------------------------------------------------------------------------
# golden trace
# ---------------------------------------------------------------------------


def test_golden_trace_matches_frozen_oracle_exactly():
    built = qp.build_scenario(golden_config())
    assert built.hp.eta == GOLDEN["eta"]
    assert built.hp.gamma == GOLDEN["gamma"]
    trace = qp.run("ompd", built, horizon=3)
    for t in range(3):
        assert tuple(trace.decisions[t]) == GOLDEN["decisions"][t]
        assert trace.losses[t] == GOLDEN["losses"][t]
        assert trace.alphas[t] == GOLDEN["alphas"][t]
    for i, q in enumerate(GOLDEN["queues"]):
        assert trace.queues[i][0] == q
    assert trace.xis[0] == GOLDEN["xi_1"]
    assert float(trace.losses.sum()) == GOLDEN["cum_loss"]
    assert float(trace.g_values[1:].sum()) == GOLDEN["violation"]


# ---------------------------------------------------------------------------
# rounds
# ---------------------------------------------------------------------------


def test_init_state_anchored_at_center():
    block = qp.empty_block(2)
    state = qp.init_state(block, EUC2, BALL)
    assert np.allclose(state.x_last, qp.center(BALL))
    assert np.allclose(state.anchor, qp.center(BALL))
    assert state.alpha == 0.0 and state.round_index == 0


def test_round_one_reduces_to_projected_gradient_without_constraints():
    seq = qp.fixed_quadratic(EUC2, BALL, [0.4, 0.2], 5)
    block = qp.empty_block(2)
    problem = qp.Problem(seq=seq, block=block)
    hp = qp.hyperparams_from_variation(0.0, seq.grad_lipschitz)
    state = qp.init_state(block, EUC2, BALL)
    new_state, out = qp.round_general(state, problem, EUC2, BALL, hp)
    expect = qp.project(BALL, -seq.grad(0, np.zeros(2)) / out.alpha)
    assert np.allclose(out.decision, expect, atol=1e-15)
    assert new_state.round_index == 1


def test_gamma_zero_disables_queue_entirely():
    seq = qp.fixed_linear(EUC2, BALL, [-1.0, 0.0], 20, grad_lipschitz=0.5)
    block = qp.linear_block(EUC2, BALL, [[1.0, 0.0]], [0.3])
    hp = qp.HyperParams(eta=1.0, gamma=0.0)
    scenario = qp.Scenario(geom=EUC2, base=BALL, block=block, seq=seq, hp=hp)
    trace = qp.run("ompd", scenario)
    assert np.all(trace.queues == 0.0)
    assert np.all(trace.xis == 0.0)
    # with the queue dead this is unconstrained online mirror prox
    unconstrained = qp.Scenario(geom=EUC2, base=BALL, block=qp.empty_block(2),
                                seq=seq, hp=hp)
    free = qp.run("ompd", unconstrained)
    assert np.allclose(trace.decisions, free.decisions, atol=1e-15)


def test_run_rejects_bad_variant_and_pairings():
    built = qp.build_scenario(golden_config())
    with pytest.raises(ValueError):
        qp.run("nonsense", built)
    simplex_built = qp.build_scenario(qp.shipped_scenario("simplex-d10",
                                                          horizon=10))
    with pytest.raises(ValueError):
        qp.run("ompd", simplex_built)       # entropic needs the simplex variant
    with pytest.raises(ValueError):
        qp.run("ompd-simplex", built)


def test_run_horizon_zero_and_one():
    built = qp.build_scenario(golden_config())
    empty = qp.run("ompd", built, horizon=0)
    assert empty.horizon == 0
    assert empty.decisions.shape == (0, 2)
    assert empty.queues.shape == (2, 1)

    one = qp.run("ompd", built, horizon=1)
    state = qp.init_state(built.block, built.geom, built.base)
    problem = qp.Problem(seq=built.seq, block=built.block)
    _, out = qp.round_general(state, problem, built.geom, built.base,
                              built.hp)
    assert np.allclose(one.decisions[0], out.decision, atol=0)
    assert one.alphas[0] == out.alpha
    with pytest.raises(ValueError):
        qp.run("ompd", built, horizon=4)    # beyond the sequence horizon


def test_run_deterministic_replay():
    built, trace1 = run_shipped("drift-rotate-d2", horizon=300)
    _, trace2 = run_shipped("drift-rotate-d2", horizon=300)
    assert np.array_equal(trace1.decisions, trace2.decisions)
    assert np.array_equal(trace1.queues, trace2.queues)
    assert np.array_equal(trace1.losses, trace2.losses)


def test_nan_gradient_raises_oracle_error_with_round():
    def bad_grad(t, x):
        return np.array([np.nan, 0.0]) if t == 3 else np.zeros(2)

    seq = qp.custom_sequence(EUC2, BALL, lambda t, x: 0.0, bad_grad,
                             horizon=5, grad_bound=1.0, grad_lipschitz=1.0,
                             variation=0.0)
    scenario = qp.Scenario(geom=EUC2, base=BALL, block=qp.empty_block(2),
                           seq=seq, hp=qp.HyperParams(eta=1.0, gamma=1.0))
    with pytest.raises(qp.OracleError) as err:
        qp.run("ompd", scenario)
    assert err.value.round_index == 3


def test_collapsed_schedule_raises(monkeypatch):
    built = qp.build_scenario(golden_config())
    monkeypatch.setattr(alg, "alpha_update", lambda *a, **k: 0.0)
    with pytest.raises(qp.ScheduleError):
        qp.run("ompd", built, horizon=1)


# ---------------------------------------------------------------------------
# schedule invariants on live runs
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["golden-d2", "box-mixed-d3", "simplex-d10"])
def test_alpha_running_max_matches_closed_form(name):
    built, trace = run_shipped(name, horizon=400)
    G = built.block.value_bound_total
    H = built.block.lipschitz_total
    l1 = np.abs(trace.queues).sum(axis=1)
    run_max = np.maximum.accumulate(l1[1:trace.horizon + 1])
    for t in range(trace.horizon):
        closed = qp.alpha_closed_form(
            run_max[t], built.hp.eta, built.hp.gamma, built.hp.rho,
            built.seq.grad_lipschitz, built.block.curvature, G, H,
            variant=trace.variant)
        assert abs(closed - trace.alphas[t]) <= 1e-12 * abs(trace.alphas[t])
    assert np.all(np.diff(trace.alphas) >= 0)
    assert trace.alphas[0] >= 2.0 / (built.hp.rho * built.hp.eta) - 1e-15


@pytest.mark.parametrize("name", ["golden-d2", "simplex-d10"])
def test_queue_nonnegativity_exact_on_runs(name):
    _, trace = run_shipped(name, horizon=400)
    assert np.all(trace.queues >= 0.0)
    shifted = trace.queues[1:] + trace.gamma * trace.g_values
    assert np.all(shifted >= 0.0)


def test_replayed_rounds_satisfy_pushback_both_steps():
    built, trace = run_shipped("golden-d2", horizon=200)
    rng = np.random.default_rng(41)
    for t in rng.choice(trace.horizon, size=8, replace=False) + 1:
        x_prev = trace.decisions[t - 2] if t >= 2 else trace.x0
        _, jac = qp.constraint_eval(built.block, x_prev)
        weights = trace.queues[t] + trace.gamma * trace.g_values[t - 1]
        penalty = trace.gamma * (weights @ jac)
        anchor = trace.anchors[t - 1]
        alpha = trace.alphas[t - 1]
        steps = [
            (built.seq.grad(t - 1, x_prev) + penalty, trace.decisions[t - 1]),
            (built.seq.grad(t, trace.decisions[t - 1]) + penalty,
             trace.anchors[t]),
        ]
        for h, x_opt in steps:
            lhs = (float(h @ x_opt)
                   + alpha * qp.bregman(built.geom, built.base, x_opt, anchor))
            for z in qp.sample(built.base, rng, 100):
                rhs = (float(h @ z)
                       + alpha * (qp.bregman(built.geom, built.base, z, anchor)
                                  - qp.bregman(built.geom, built.base, z,
                                               x_opt)))
                assert lhs <= rhs + 1e-8


# ---------------------------------------------------------------------------
# simplex variant specifics
# ---------------------------------------------------------------------------


def test_simplex_iterates_stay_on_simplex():
    built, trace = run_shipped("simplex-d10", horizon=300)
    for mat in (trace.decisions, trace.anchors, trace.mixed_anchors):
        assert np.max(np.abs(mat.sum(axis=1) - 1.0)) <= 1e-12
        assert np.all(mat >= -1e-12)
    floor = trace.nu / trace.dim
    assert np.all(trace.mixed_anchors >= floor)


def test_simplex_variant_uses_mixed_anchor_for_both_steps():
    built, trace = run_shipped("simplex-d10", horizon=50)
    t = 17
    x_prev = trace.decisions[t - 2]
    _, jac = qp.constraint_eval(built.block, x_prev)
    weights = trace.queues[t] + trace.gamma * trace.g_values[t - 1]
    penalty = trace.gamma * (weights @ jac)
    mixed = qp.mix_anchor(trace.anchors[t - 1], trace.nu)
    assert np.allclose(mixed, trace.mixed_anchors[t - 1], atol=0)
    h = built.seq.grad(t - 1, x_prev) + penalty
    redo = qp.mirror_step(built.geom, built.base, mixed, h,
                          trace.alphas[t - 1])
    assert np.allclose(redo, trace.decisions[t - 1], atol=1e-15)


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------


def test_baseline_without_constraints_is_projected_gradient():
    seq = qp.fixed_quadratic(EUC2, BALL, [0.4, 0.2], 30)
    block = qp.empty_block(2)
    hp = qp.HyperParams(eta=1.0, gamma=1.0)
    scenario = qp.Scenario(geom=EUC2, base=BALL, block=block, seq=seq, hp=hp)
    trace = qp.run("pd-baseline", scenario)
    x = qp.center(BALL)
    for t in range(1, 31):
        step = 1.0 / (max(seq.grad_lipschitz, 1.0) * math.sqrt(t))
        x = qp.project(BALL, x - step * seq.grad(t - 1, x))
        assert np.allclose(trace.decisions[t - 1], x, atol=1e-15)


def test_baseline_objective_gap_shrinks_with_horizon():
    # target outside the feasible region, so the optimum sits on the
    # constraint boundary and convergence is gradual
    block = qp.linear_block(EUC2, BALL, [[1.0, 0.0]], [0.3],
                            slater_point=[0.0, 0.0])
    gaps = {}
    for T in (100, 2000):
        seq = qp.fixed_quadratic(EUC2, BALL, [1.2, 0.4], T)
        hp = qp.hyperparams_from_variation(0.0, seq.grad_lipschitz)
        scenario = qp.Scenario(geom=EUC2, base=BALL, block=block, seq=seq,
                               hp=hp)
        trace = qp.run("pd-baseline", scenario)
        comparator = qp.hindsight_comparator(seq, block, BALL)
        best = sum(seq.value(t, comparator) for t in range(1, T + 1))
        # approach is from the infeasible side, so the signed gap is
        # negative; convergence means its magnitude decays
        gaps[T] = abs(float(trace.losses.sum()) - best) / T
    assert gaps[2000] < gaps[100]
    assert np.allclose(qp.run("pd-baseline", scenario).decisions[-1],
                       [0.3, 0.4], atol=1e-6)


def test_baseline_zero_gamma_keeps_dual_at_zero():
    seq = qp.fixed_linear(EUC2, BALL, [-1.0, 0.0], 25, grad_lipschitz=0.5)
    block = qp.linear_block(EUC2, BALL, [[1.0, 0.0]], [0.3])
    hp = qp.HyperParams(eta=1.0, gamma=0.0)
    scenario = qp.Scenario(geom=EUC2, base=BALL, block=block, seq=seq, hp=hp)
    trace = qp.run("pd-baseline", scenario)
    assert np.all(trace.queues == 0.0)
