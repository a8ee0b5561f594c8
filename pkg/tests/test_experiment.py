import numpy as np
import pytest

from tabrl.config import ConfigError, parse_kv
from tabrl.envs import TaskSpec, build_sample_model
from tabrl.experiment import (ExperimentConfig, LearningCurve, benchmark_step_cost, cumulative_average,
                              resolve_task, run_learning_process, run_repetitions, seed_streams)
from tabrl.statespace import InputVariable


def constant_task(c, n_states=3, n_actions=2, step_limit=None):
    log = [(s, a, (s + a + 1) % n_states, c) for s in range(n_states) for a in range(n_actions)]
    model = build_sample_model(log, n_states, n_actions, task="const")
    return TaskSpec("const", "sample_model", (InputVariable("state", n_states),), (("action", n_actions),),
                    {}, step_limit, {"model_obj": model})


@pytest.mark.parametrize("alg,sel", [("q", "softmax"), ("sarsa", "epsilon_greedy"), ("tosl", "qbiassr")])
def test_one_step_curve(alg, sel):
    cfg = ExperimentConfig(task="wander-simple", algorithm=alg, selection=sel, steps=1)
    _, curve = run_learning_process(cfg, 5)
    assert len(curve) == 1
    assert curve.cumulative.tolist() == curve.rewards.tolist()


@pytest.mark.parametrize("alg", ["q", "sarsa", "sarsa_lambda", "tosl"])
def test_constant_reward(alg):
    cfg = ExperimentConfig(algorithm=alg, selection="softmax", steps=200)
    _, curve = run_learning_process(cfg, 0, constant_task(2.5))
    assert (curve.cumulative == 2.5).all()


@pytest.mark.parametrize("task", ["wander-simple", "2D-navigation-1K", "3D-arm-1K"])
def test_determinism(task):
    cfg = ExperimentConfig(task=task, steps=400)
    q1, c1 = run_learning_process(cfg, 17)
    q2, c2 = run_learning_process(cfg, 17)
    assert np.array_equal(q1.values, q2.values)
    assert np.array_equal(c1.rewards, c2.rewards)
    assert np.array_equal(c1.actions, c2.actions)
    assert c1.episode_averages == c2.episode_averages
    _, c3 = run_learning_process(cfg, 18)
    assert not np.array_equal(c1.rewards, c3.rewards)


def test_seed_streams_independent():
    e1, a1 = seed_streams(3)
    e2, a2 = seed_streams(3)
    assert [e1.random() for _ in range(5)] == [e2.random() for _ in range(5)]
    assert [a1.random() for _ in range(5)] == [a2.random() for _ in range(5)]
    e, a = seed_streams(3)
    assert e.random() != a.random()


def test_step_accounting_across_episodes():
    cfg = ExperimentConfig(task="2D-navigation-1K", steps=500, episode_limit=7)
    _, curve = run_learning_process(cfg, 1)
    assert len(curve) == 500
    assert sum(curve.episode_lengths) <= 500
    assert 500 - sum(curve.episode_lengths) < 7
    assert all(n <= 7 for n in curve.episode_lengths)
    start = 0
    for n, avg in zip(curve.episode_lengths, curve.episode_averages):
        assert avg == pytest.approx(curve.rewards[start:start + n].mean(), rel=1e-12)
        start += n


def test_wander_not_episodic():
    _, curve = run_learning_process(ExperimentConfig(task="wander-1K", steps=300), 2)
    assert curve.episode_lengths == []


def test_curve_arithmetic():
    cfg = ExperimentConfig(task="wander-1K", steps=1000)
    _, curve = run_learning_process(cfg, 4)
    np.testing.assert_array_equal(curve.cumulative, np.cumsum(curve.rewards) / np.arange(1, 1001))
    assert curve.final_average == curve.cumulative[-1]
    assert cumulative_average([1.0, 3.0, 2.0]).tolist() == [1.0, 2.0, 2.0]


def test_mean_curve_single_and_pair():
    res = run_repetitions(ExperimentConfig(steps=50, repetitions=1, seed=9))
    np.testing.assert_array_equal(res.mean_curve, res.curves[0].cumulative)
    res.curves = [LearningCurve([1.0, 1.0]), LearningCurve([3.0, 3.0])]
    assert res.mean_curve.tolist() == [2.0, 2.0]


def test_repetition_seeds_and_parallel_order():
    cfg = ExperimentConfig(task="wander-1K", steps=300, repetitions=4, seed=20)
    serial = run_repetitions(cfg, workers=1)
    assert serial.seeds == [20, 21, 22, 23]
    for sd, curve in zip(serial.seeds, serial.curves):
        assert np.array_equal(run_learning_process(cfg, sd)[1].rewards, curve.rewards)
    par = run_repetitions(cfg, workers=2)
    assert np.array_equal(par.mean_curve, serial.mean_curve)
    assert par.final_averages == serial.final_averages


def test_mean_curve_reproducible():
    cfg = ExperimentConfig(task="wander-simple", steps=200, repetitions=20, seed=100)
    assert np.array_equal(run_repetitions(cfg).mean_curve, run_repetitions(cfg).mean_curve)


def test_python_and_auto_backends_agree():
    cfg = ExperimentConfig(task="wander-1K", steps=500)
    qa, ca = run_learning_process(cfg, 6)
    qb, cb = run_learning_process(ExperimentConfig(task="wander-1K", steps=500, backend="python"), 6)
    assert np.array_equal(qa.values, qb.values) and np.array_equal(ca.rewards, cb.rewards)


def test_reward_scale_shifts_rewards_only():
    cfg = ExperimentConfig(task="wander-simple", steps=300)
    q1, c1 = run_learning_process(cfg, 3)
    q2, c2 = run_learning_process(ExperimentConfig(task="wander-simple", steps=300, reward_scale=4.0), 3)
    np.testing.assert_allclose(c2.rewards, 4 * c1.rewards, rtol=1e-12)
    assert np.array_equal(c1.actions, c2.actions)
    np.testing.assert_allclose(q2.values, 4 * q1.values, rtol=1e-9, atol=1e-12)


# configuration -----------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(steps=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(alpha=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithm="dqn")
    assert ExperimentConfig(lam=0.0).lam == 0.0


def test_config_from_text_round_trip():
    cfg = ExperimentConfig(task="wander-1K", algorithm="q", selection="softmax", alpha=0.3, steps=77,
                           normalize=False, label="x")
    entries = parse_kv("\n".join(f"{k} = {v}" for k, v in cfg.to_items().items()), "c.txt")
    assert ExperimentConfig.from_entries(entries) == cfg


def test_config_errors_point_at_line():
    entries = parse_kv("task = wander-1K\n\ngamma = 2\n", "exp.cfg")
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_entries(entries)
    assert str(exc.value).startswith("exp.cfg:3:") and "(0, 1)" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_entries(parse_kv("colour = red\n", "exp.cfg"))
    assert exc.value.line == 1


def test_resolve_task_errors():
    assert resolve_task("wander-4K").n_actions == 25
    with pytest.raises(ConfigError):
        resolve_task("no-such-task")


# benchmark ----------------------------------------------------------------------------


def test_benchmark_contract():
    with pytest.raises(ValueError):
        benchmark_step_cost(ExperimentConfig(task="wander-1K"), measured=999)
    cost = benchmark_step_cost(ExperimentConfig(task="wander-1K", algorithm="q", selection="softmax"),
                               warmup=100, measured=1000, repeats=1)
    assert cost.per_step >= 0.0 and cost.baseline >= 0.0
    d = cost.as_dict()
    assert d["method"] == "q+softmax" and d["measured_steps"] == 1000
