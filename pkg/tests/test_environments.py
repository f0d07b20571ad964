import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from driftls.environments import (
    ArmSpec,
    ArmStream,
    Ellipsoid,
    EventRecord,
    FinitePool,
    LinearEnv,
    NoiseSpec,
    SynthStreamConfig,
    UnitBall,
    gen_arm_set,
    read_event_log,
    sample_arms,
    synth_news_stream,
    write_event_log,
)
from driftls.exceptions import EventLogError
from driftls.rng import make_rng

from conftest import unit_rows


class TestNoiseSpec:
    def test_uniform_bounded_and_centered(self):
        xi = NoiseSpec("uniform").draw(make_rng(0), 40000)
        assert np.all(np.abs(xi) <= 1.0)
        assert abs(xi.mean()) <= 0.015  # 5 sigma

    def test_rademacher(self):
        xi = NoiseSpec("rademacher").draw(make_rng(1), 10000)
        assert set(np.unique(xi)) == {-1.0, 1.0}
        assert abs(xi.mean()) <= 0.05

    def test_tgauss_respects_clip(self):
        xi = NoiseSpec("tgauss", sigma=1.0, clip=0.5).draw(make_rng(2), 5000)
        assert np.all(np.abs(xi) <= 0.5)
        assert xi.std() > 0.1

    def test_none(self):
        assert NoiseSpec("none").draw(make_rng(3), 7).sum() == 0.0

    def test_scalar_draw(self):
        v = NoiseSpec("uniform").draw(make_rng(4))
        assert isinstance(v, float)

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec("cauchy")
        with pytest.raises(ValueError):
            NoiseSpec("tgauss", sigma=0.0)


class TestUnitBall:
    def test_admits(self):
        ball = UnitBall(3)
        assert ball.admits([1.0, 0.0, 0.0])
        assert ball.admits([0.1, 0.1, 0.1])
        assert not ball.admits([1.01, 0.0, 0.0])

    def test_best_response_is_unit_aligned(self):
        ball = UnitBall(2)
        theta = np.array([3.0, 4.0])
        best = ball.best_response(theta)
        assert_allclose(best, [0.6, 0.8], rtol=1e-15)

    def test_best_response_optimal_over_samples(self):
        ball = UnitBall(4)
        theta = make_rng(5).standard_normal(4)
        best_val = ball.best_response(theta) @ theta
        for x in unit_rows(make_rng(6), 200, 4):
            assert x @ theta <= best_val + 1e-12

    def test_zero_theta_warns(self):
        ball = UnitBall(3)
        with pytest.warns(RuntimeWarning):
            best = ball.best_response(np.zeros(3))
        assert np.linalg.norm(best) == pytest.approx(1.0)


class TestEllipsoid:
    Q = np.diag([4.0, 1.0])

    def test_admits(self):
        ell = Ellipsoid(self.Q)
        assert ell.admits([0.5, 0.0])    # x^T Q x = 1 exactly
        assert ell.admits([0.0, 1.0])
        assert not ell.admits([0.51, 0.0])

    def test_best_response_on_boundary(self):
        ell = Ellipsoid(self.Q)
        theta = np.array([1.0, 1.0])
        best = ell.best_response(theta)
        assert best @ self.Q @ best == pytest.approx(1.0, rel=1e-12)

    def test_best_response_optimal_over_boundary_samples(self):
        ell = Ellipsoid(self.Q)
        theta = np.array([2.0, -1.0])
        best_val = ell.best_response(theta) @ theta
        # boundary points are Q^{-1/2} u for unit u
        root_inv = np.diag([0.5, 1.0])
        for u in unit_rows(make_rng(7), 300, 2):
            x = root_inv @ u
            assert x @ theta <= best_val + 1e-12

    def test_rejects_small_or_asymmetric_q(self):
        with pytest.raises(ValueError):
            Ellipsoid(np.diag([0.5, 2.0]))
        with pytest.raises(ValueError):
            Ellipsoid(np.array([[2.0, 1.0], [0.0, 2.0]]))

    def test_zero_theta_warns(self):
        ell = Ellipsoid(self.Q)
        with pytest.warns(RuntimeWarning):
            best = ell.best_response(np.zeros(2))
        assert ell.admits(best)


class TestFinitePool:
    def test_admits_members_only(self):
        arms = np.array([[1.0, 0.0], [0.0, 1.0]])
        pool = FinitePool(arms)
        assert pool.admits([1.0, 0.0])
        assert not pool.admits([0.7, 0.7])

    def test_best_response_first_argmax(self):
        arms = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        pool = FinitePool(arms)
        assert_array_equal(pool.best_response([2.0, 1.0]), arms[0])

    def test_norm_cap(self):
        with pytest.raises(ValueError):
            FinitePool(np.array([[1.5, 0.0]]))

    def test_zero_theta_warns(self):
        pool = FinitePool(np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.warns(RuntimeWarning):
            best = pool.best_response(np.zeros(2))
        assert_array_equal(best, [1.0, 0.0])


class TestLinearEnv:
    def _env(self, **kw):
        return LinearEnv([0.6, 0.0], UnitBall(2), rng=0, **kw)

    def test_linear_rewards_centered_on_mean(self):
        env = self._env()
        x = np.array([1.0, 0.0])
        ys = env.rewards(x, 5000)
        assert np.all(np.abs(ys - 0.6) <= 1.0)
        assert ys.mean() == pytest.approx(0.6, abs=0.05)

    def test_click_rewards_are_bernoulli(self):
        env = self._env(reward_model="click")
        ys = env.rewards([1.0, 0.0], 20000)
        assert set(np.unique(ys)) <= {0.0, 1.0}
        # E[clip(0.6 + 0.5 U, 0, 1)] = 0.595 for U ~ uniform(-1, 1)
        assert ys.mean() == pytest.approx(0.595, abs=0.02)

    def test_unadmitted_action_rejected(self):
        env = self._env()
        with pytest.raises(ValueError):
            env.reward([2.0, 0.0])

    def test_best_value(self):
        assert self._env().best_value() == pytest.approx(0.6)

    def test_mean_reward(self):
        assert self._env().mean_reward([0.0, 1.0]) == 0.0

    def test_dimension_and_model_checks(self):
        with pytest.raises(ValueError):
            LinearEnv([1.0, 0.0, 0.0], UnitBall(2))
        with pytest.raises(ValueError):
            self._env(reward_model="logit")

    def test_reward_stream_deterministic(self):
        a = self._env().rewards([1.0, 0.0], 10)
        b = self._env().rewards([1.0, 0.0], 10)
        assert_array_equal(a, b)


class TestArms:
    def test_sample_arms_unit_rows(self):
        xs = sample_arms(ArmSpec(k=40, dim=7), make_rng(8))
        assert xs.shape == (40, 7)
        assert_allclose(np.linalg.norm(xs, axis=1), 1.0, rtol=1e-12)

    def test_sparsity_level(self):
        xs = sample_arms(ArmSpec(k=200, dim=100, sparsity=0.1), make_rng(9))
        active = (xs != 0).sum(axis=1)
        assert np.all(active >= 1)
        assert 8.5 <= active.mean() <= 11.5

    def test_extreme_sparsity_keeps_one_coordinate(self):
        xs = sample_arms(ArmSpec(k=500, dim=3, sparsity=0.01), make_rng(10))
        assert np.all((xs != 0).sum(axis=1) >= 1)
        assert_allclose(np.linalg.norm(xs, axis=1), 1.0, rtol=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ArmSpec(k=0, dim=2)
        with pytest.raises(ValueError):
            ArmSpec(k=2, dim=2, sparsity=0.0)
        with pytest.raises(ValueError):
            ArmSpec(k=2, dim=2, sparsity=1.5)

    def test_fixed_stream_serves_one_pool(self):
        stream = ArmStream(ArmSpec(k=4, dim=3, fixed=True), rng=11)
        assert_array_equal(stream.arms(1), stream.arms(99))

    def test_fresh_stream_redraws(self):
        stream = ArmStream(ArmSpec(k=4, dim=3), rng=12)
        assert not np.array_equal(stream.arms(1), stream.arms(2))

    def test_gen_arm_set_ids(self):
        pairs = gen_arm_set(ArmSpec(k=3, dim=2), 5, make_rng(13))
        assert [p[0] for p in pairs] == [0, 1, 2]
        assert all(p[1].shape == (2,) for p in pairs)


class TestEventLog:
    def _records(self):
        rng = make_rng(14)
        xs = unit_rows(rng, 3, 2)
        return [
            EventRecord(t=1, arms=[(0, xs[0]), (1, xs[1])], chosen=0, reward=1.0),
            EventRecord(t=2, arms=[("a", xs[2])]),  # unlabeled round
            EventRecord(t=3, arms=[(0, xs[0])], chosen=0, reward=0.0),
        ]

    def test_round_trip_exact(self, tmp_path):
        path = tmp_path / "log.jsonl"
        assert write_event_log(path, self._records()) == 3
        back = list(read_event_log(path))
        assert [r.t for r in back] == [1, 2, 3]
        assert back[0].chosen == 0 and back[0].reward == 1.0
        assert back[1].chosen is None and back[1].reward is None
        assert back[1].arms[0][0] == "a"
        for orig, rt in zip(self._records(), back):
            for (ido, xo), (idr, xr) in zip(orig.arms, rt.arms):
                assert ido == idr
                assert_array_equal(xo, xr)

    def test_write_validates_with_line_number(self, tmp_path):
        bad = self._records()
        bad[1] = EventRecord(t=2, arms=[(0, [3.0, 0.0])])  # norm > 1
        with pytest.raises(EventLogError) as err:
            write_event_log(tmp_path / "bad.jsonl", bad)
        assert err.value.line == 2

    @pytest.mark.parametrize(
        "line,what",
        [
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}]', "invalid JSON"),
            ('[1, 2]', "must be a JSON object"),
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}], "zap": 1}', "unknown fields"),
            ('{"t": 1}', "missing fields"),
            ('{"t": 1, "arms": [{"id": 0}]}', "exactly"),
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}, {"id": 0, "x": [1.0]}]}',
             "duplicate"),
            ('{"t": 1, "arms": [{"id": 0, "x": [2.0]}]}', "norm"),
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}], "chosen": 7, "reward": 1.0}',
             "not among"),
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}], "reward": 1.0}',
             "without a chosen"),
            ('{"t": 1, "arms": [{"id": 0, "x": [1.0]}], "chosen": 0}',
             "without a reward"),
            ('{"t": -1, "arms": [{"id": 0, "x": [1.0]}]}', "non-negative"),
            ('{"t": 1, "arms": []}', "non-empty"),
        ],
    )
    def test_read_failures_carry_line_numbers(self, tmp_path, line, what):
        path = tmp_path / "log.jsonl"
        good = '{"t": 1, "arms": [{"id": 0, "x": [1.0]}]}'
        path.write_text(good + "\n" + line + "\n")
        with pytest.raises(EventLogError) as err:
            list(read_event_log(path))
        assert err.value.line == 2
        assert what in str(err.value)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text('{"t": 1, "arms": [{"id": 0, "x": [1.0]}]}\n\n')
        assert len(list(read_event_log(path))) == 1


class TestSynthStream:
    def test_deterministic_bytes(self, tmp_path):
        cfg = SynthStreamConfig(dim=4, k=3, horizon=50)
        p1, s1 = synth_news_stream(cfg, 7, tmp_path / "a.jsonl")
        p2, s2 = synth_news_stream(cfg, 7, tmp_path / "b.jsonl")
        assert open(p1, "rb").read() == open(p2, "rb").read()
        assert open(s1, "rb").read() == open(s2, "rb").read()

    def test_sidecar_contents(self, tmp_path):
        cfg = SynthStreamConfig(dim=4, k=3, horizon=20, theta_norm=2.0)
        _, sidecar = synth_news_stream(cfg, 8, tmp_path / "log.jsonl")
        truth = json.loads(open(sidecar).read())
        theta = np.asarray(truth["theta_star"])
        assert theta.shape == (4,)
        assert np.linalg.norm(theta) == pytest.approx(2.0)
        assert truth["k"] == 3 and truth["horizon"] == 20
        assert truth["logging_policy"] == "uniform"

    def test_log_is_replayable_and_informative(self, tmp_path):
        cfg = SynthStreamConfig(dim=5, k=4, horizon=2000)
        log, sidecar = synth_news_stream(cfg, 9, tmp_path / "log.jsonl")
        theta = np.asarray(json.loads(open(sidecar).read())["theta_star"])
        best_rewards, rewards = [], []
        for rec in read_event_log(log):
            feats = {i: x for i, x in rec.arms}
            means = {i: x @ theta for i, x in feats.items()}
            rewards.append(rec.reward)
            if rec.chosen == max(means, key=means.get):
                best_rewards.append(rec.reward)
        assert len(rewards) == 2000
        # picking the truly best arm must click more often than average
        assert np.mean(best_rewards) > np.mean(rewards)
