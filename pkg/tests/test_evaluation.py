import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lapo import evaluation as E
from lapo.config import TrainConfig
from lapo.dataset import TransitionDataset, generate
from lapo.envs import ObstacleNav2D, make_env
from lapo.errors import ConfigError, ContractError
from lapo.trainer import train

ANCHORS = E.ScoreAnchors(-2.0, 6.0)


def test_normalized_score_anchors():
    assert E.normalized_score(6.0, ANCHORS) == 100.0
    assert E.normalized_score(-2.0, ANCHORS) == 0.0
    assert E.normalized_score(2.0, ANCHORS) == 50.0
    with pytest.raises(ConfigError):
        E.ScoreAnchors(1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(-100, 100), st.floats(0.01, 100))
def test_normalized_score_is_affine(alpha, lo, width):
    a = E.ScoreAnchors(lo, lo + width)
    ret = alpha * a.random_return + (1 - alpha) * a.expert_return
    assert E.normalized_score(ret, a) == pytest.approx(100 * (1 - alpha), abs=1e-6)


def test_committed_anchors_cover_acceptance_envs():
    table = E.load_anchors()
    for key in ("obstacle-nav", "sparse-maze", "multitask-point:forward"):
        assert key in table
    fw = table["multitask-point:forward"]
    assert fw.random_return == pytest.approx(0.0, abs=0.5) and fw.expert_return > 35


def test_anchor_computation_matches_committed_file():
    fresh = E.compute_anchors(["obstacle-nav", "multitask-point:forward"], n_episodes=200)
    table = E.load_anchors()
    assert fresh["obstacle-nav"]["random_return"] == table["obstacle-nav"].random_return
    assert fresh["multitask-point:forward"]["expert_return"] == pytest.approx(
        table["multitask-point:forward"].expert_return, rel=0.01)


def test_histogram_counts_and_csv(tmp_path):
    rng = np.random.default_rng(0)
    acts = rng.uniform(-0.1, 0.1, (777, 2))
    h = E.histogram_of(acts, 0.1, 50)
    assert h.total == 777 and len(h.edges) == 51
    h.to_csv(tmp_path / "h.csv")
    back = E.Histogram.from_csv(tmp_path / "h.csv")
    np.testing.assert_array_equal(back.counts, h.counts)
    np.testing.assert_array_equal(back.edges, h.edges)


def _const_dataset(a0):
    n = 30
    return TransitionDataset("obstacle-nav", np.zeros((n, 2)), np.tile(a0, (n, 1)), np.zeros(n),
                             np.zeros((n, 2)), np.zeros(n, bool), np.ones(n, bool), np.zeros(n, np.uint8))


def test_constant_action_dataset_occupies_one_bin():
    h = E.action_histogram(_const_dataset([0.033, 0.0]), [0.0, 0.0])
    assert (h.counts > 0).sum() == 1 and h.total == 30


def test_empty_selection_is_zero_histogram():
    h = E.action_histogram(_const_dataset([0.0, 0.0]), [0.5, 0.5])
    assert h.total == 0


def test_bimodal_dataset_has_two_separated_regions():
    ds = generate(ObstacleNav2D(), [("left", 0.5), ("right", 0.5)], 100, np.random.default_rng(0))
    h = E.action_histogram(ds, [0.0, 0.0])
    occ = h.counts > 0
    centers = 0.5 * (h.edges[1:] + h.edges[:-1])
    assert h.total == 100
    assert occ[centers < -0.02].any() and occ[centers > 0.02].any()
    assert not occ[np.abs(centers) < 0.015].any()


def test_support_overlap_cases():
    edges = E.bin_edges(1.0, 4)
    data = E.Histogram(edges, np.array([0, 3, 5, 0]))
    assert E.support_overlap(data, data) == 1.0
    assert E.support_overlap(E.Histogram(edges, np.array([4, 0, 0, 6])), data) == 0.0
    assert E.support_overlap(E.Histogram(edges, np.array([2, 1, 1, 0])), data) == 0.5
    with pytest.raises(ContractError):
        E.support_overlap(E.Histogram(E.bin_edges(1.0, 5), np.ones(5, int)), data)
    assert E.support_overlap(E.Histogram(edges, np.zeros(4, int)), data) == 0.0


@pytest.fixture(scope="module")
def trained():
    ds = generate(ObstacleNav2D(), [("left", 0.5), ("right", 0.5)], 10, np.random.default_rng(0))
    out = {}
    for m in ("lapo", "awac-gmm"):
        out[m] = train(TrainConfig(method=m, steps=30, batch_size=32, hidden=(16, 16), eval_interval=0),
                       ds.offline()).checkpoint
    return out


def test_evaluate_is_deterministic_and_pure(trained):
    ck = trained["lapo"]
    before = ck.to_bytes()
    env = make_env("obstacle-nav")
    r1 = E.evaluate(ck, env, 3, np.random.default_rng(5))
    r2 = E.evaluate(ck, env, 3, np.random.default_rng(5))
    assert r1 == r2 and ck.to_bytes() == before
    parsed = json.loads(r1.to_json())
    assert set(parsed) == {"mean_return", "return_std", "success_rate", "n_episodes", "env", "method",
                           "seed", "normalized_score"}
    with pytest.raises(ConfigError):
        E.evaluate(ck, make_env("sparse-maze"), 1, np.random.default_rng(0))


@pytest.mark.parametrize("view", ["cvae", "overall"])
def test_checkpoint_histograms_conserve_counts(trained, view):
    h = E.action_histogram(trained["lapo"], [0.0, 0.0], n=1234, view=view)
    assert h.total == 1234
    g = E.action_histogram(trained["awac-gmm"], [0.0, 0.0], n=500)
    assert g.total == 500
    with pytest.raises(ConfigError):
        E.action_histogram(trained["lapo"], [0.0, 0.0], view="sideways")


def test_bad_inputs():
    with pytest.raises(ContractError):
        E.action_histogram("data.lapd", [0.0, 0.0])
    with pytest.raises(ConfigError):
        E.action_histogram(_const_dataset([0.0, 0.0]), [0.0, 0.0], bins=0)


class _Scripted:
    """Wraps a fixed action rule in the agent interface used by evaluate_agent."""

    def __init__(self, act_fn):
        self.act_fn = act_fn
        self.config = TrainConfig(method="bc")

    def act(self, states, rng=None):
        return np.array([self.act_fn(s, rng) for s in np.atleast_2d(states)])


def test_zero_policy_on_still_task_scores_zero():
    env = make_env("multitask-point:still")
    rep = E.evaluate_agent(_Scripted(lambda s, r: np.zeros(1)), env, None, 3, np.random.default_rng(0))
    assert rep.mean_return == 0.0 and rep.success_rate == 1.0


def test_scripted_expert_agent_always_succeeds():
    env = ObstacleNav2D()
    agent = _Scripted(lambda s, r: env.expert_action("left", s, r))
    rep = E.evaluate_agent(agent, env, None, 20, np.random.default_rng(1), method="expert")
    assert rep.success_rate == 1.0 and rep.method == "expert"
