import numpy as np
import pytest
from scipy import stats as sps

from lapo import dataset as D
from lapo.envs import MultiTaskPoint, ObstacleNav2D, SparseMaze
from lapo.errors import ConfigError, ContractError, FormatError


def random_dataset(rng):
    """Arbitrary (not env-consistent) dataset with random shapes and contents."""
    n = int(rng.integers(1, 60))
    sd, ad = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    tags = tuple(f"t{i}" for i in range(int(rng.integers(0, 4))))
    stats = D.NormStats(rng.normal(size=sd), rng.uniform(0.1, 2, sd)) if rng.random() < 0.5 else None
    return D.TransitionDataset(
        rng.choice(["obstacle-nav", "multitask-point:forward", "sparse-maze", "ünï"]),
        rng.normal(size=(n, sd)) * 10 ** rng.uniform(-5, 5), rng.normal(size=(n, ad)),
        rng.normal(size=n), rng.normal(size=(n, sd)), rng.random(n) < 0.3, rng.random(n) < 0.2,
        rng.integers(0, max(len(tags), 1), n).astype(np.uint8), tags, stats)


@pytest.fixture(scope="module")
def bimodal():
    return D.generate(ObstacleNav2D(), [("left", 0.5), ("right", 0.5)], 40, np.random.default_rng(0))


def test_generate_episode_counts_and_provenance(bimodal):
    starts = bimodal.episode_starts
    assert starts.sum() == 40
    labels = np.array(bimodal.labels())
    assert (labels[starts] == "left").sum() == 20
    assert bimodal.tags == ("left", "right")
    np.testing.assert_array_equal(np.abs(bimodal.actions) <= 0.1, True)


def test_largest_remainder_counts():
    ds = D.generate(SparseMaze(), [("expert", 0.1), ("noisy", 0.9)], 15, np.random.default_rng(0))
    labels = np.array(ds.labels())[ds.episode_starts]
    assert (labels == "expert").sum() == 2 and (labels == "noisy").sum() == 13


def test_generate_is_env_consistent(bimodal):
    env = ObstacleNav2D()
    for i in range(0, len(bimodal), 7):
        s2, r, d = env.dynamics(bimodal.states[i], bimodal.actions[i])
        np.testing.assert_array_equal(s2, bimodal.next_states[i])
        assert r == bimodal.rewards[i] and d == bimodal.terminals[i]


def test_generate_validates_mix():
    env = ObstacleNav2D()
    with pytest.raises(ConfigError):
        D.generate(env, [("left", 0.7)], 10, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        D.generate(env, [("up", 1.0)], 10, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        D.generate(env, [], 10, np.random.default_rng(0))


def test_truncation_is_not_terminal():
    ds = D.generate(MultiTaskPoint(), [("forward", 1.0)], 2, np.random.default_rng(0))
    assert len(ds) == 100 and not ds.terminals.any()


def test_relabel_recomputes_rewards():
    ds = D.generate(MultiTaskPoint(), [("backward", 1.0)], 3, np.random.default_rng(1))
    fw = D.relabel(ds, "forward")
    assert fw.env_id == "multitask-point:forward"
    np.testing.assert_array_equal(fw.rewards, ds.next_states[:, 1])
    np.testing.assert_array_equal(fw.actions, ds.actions)
    with pytest.raises(ConfigError):
        D.relabel(ds, "jump")


def test_mix_merges_tags_and_env_ids():
    rng = np.random.default_rng(0)
    env = MultiTaskPoint()
    parts = [D.relabel(D.generate(env, [(m, 1.0)], 2, rng), "forward") for m in env.modes]
    mixed = D.mix(parts)
    assert mixed.env_id == "multitask-point:forward" and len(mixed) == 300
    assert mixed.tags == ("forward", "backward", "still")
    assert mixed.labels()[150] == "backward"
    raw = D.mix([D.generate(MultiTaskPoint("backward"), [("still", 1.0)], 1, rng),
                 D.generate(MultiTaskPoint(), [("still", 1.0)], 1, rng)])
    assert raw.env_id == "multitask-point:mixed"
    with pytest.raises(ConfigError):
        D.mix([parts[0], D.generate(SparseMaze(), [("expert", 1.0)], 1, rng)])


def test_offline_view_has_no_labels(bimodal):
    off = bimodal.offline()
    assert not hasattr(off, "provenance") and not hasattr(off, "tags")
    assert len(off) == len(bimodal)


def test_sample_batch_is_uniform():
    rng = np.random.default_rng(0)
    ds = random_dataset(np.random.default_rng(5))
    n = len(ds)
    counts = np.zeros(n)
    ident = {ds.rewards[i]: i for i in range(n)}
    for _ in range(200):
        b = D.sample_batch(ds, 256, rng)
        for r in b.rewards:
            counts[ident[r]] += 1
    assert sps.chisquare(counts).pvalue > 1e-3
    with pytest.raises(ConfigError):
        D.sample_batch(ds, 0, rng)


def test_normalize_two_pass_oracle():
    rng = np.random.default_rng(2)
    ds = random_dataset(rng)
    out, stats = D.normalize_states(ds)
    x = ds.states
    n = len(x)
    mean = [sum(x[i, j] for i in range(n)) / n for j in range(x.shape[1])]
    var = [sum((x[i, j] - mean[j]) ** 2 for i in range(n)) / n for j in range(x.shape[1])]
    std = np.maximum(np.sqrt(var), D.STD_FLOOR)
    np.testing.assert_allclose(stats.mean, mean, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(stats.std, std, rtol=1e-10)
    np.testing.assert_allclose(out.next_states, (ds.next_states - stats.mean) / stats.std)
    const = D.compute_stats(np.ones((5, 2)))
    np.testing.assert_array_equal(const.std, D.STD_FLOOR)


def test_roundtrip_identity_on_random_datasets(tmp_path):
    rng = np.random.default_rng(123)
    for k in range(100):
        ds = random_dataset(rng)
        again = D.from_bytes(D.to_bytes(ds))
        assert ds.equals(again), k
        assert D.to_bytes(again) == D.to_bytes(ds)
    D.save(ds, tmp_path / "d.lapd")
    assert D.load(tmp_path / "d.lapd").equals(ds)


def test_format_errors(tmp_path):
    ds = random_dataset(np.random.default_rng(7))
    buf = D.to_bytes(ds)
    with pytest.raises(FormatError, match="magic"):
        D.from_bytes(b"XXXX" + buf[4:])
    bumped = buf[:4] + (D.VERSION + 1).to_bytes(4, "little") + buf[8:]
    with pytest.raises(FormatError, match=f"version {D.VERSION + 1}.*version {D.VERSION}"):
        D.from_bytes(bumped)
    with pytest.raises(FormatError, match="truncated"):
        D.from_bytes(buf[:-3])
    with pytest.raises(FormatError, match="trailing"):
        D.from_bytes(buf + b"\0")
    missing = tmp_path / "nope.lapd"
    with pytest.raises(FormatError, match="nope.lapd"):
        D.load(missing)


def test_empty_dataset_rejected():
    with pytest.raises(ContractError):
        D.TransitionDataset("sparse-maze", np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)),
                            np.zeros(0, bool), np.zeros(0, bool), np.zeros(0, np.uint8))


def test_relabel_is_idempotent_and_backward_negates_forward():
    ds = D.generate(MultiTaskPoint(), [("forward", 1.0)], 2, np.random.default_rng(3))
    fw = D.relabel(ds, "forward")
    assert D.relabel(fw, "forward").equals(fw)
    bw = D.relabel(fw, "backward")
    np.testing.assert_array_equal(bw.rewards, -fw.rewards)
    assert D.relabel(bw, "forward").equals(fw)


def test_mixed_thirds_have_equal_provenance():
    rng = np.random.default_rng(4)
    env = MultiTaskPoint()
    mixed = D.mix([D.relabel(D.generate(env, [(m, 1.0)], 5, rng), "forward") for m in env.modes])
    labels = np.array(mixed.labels())
    assert (labels == "forward").mean() == pytest.approx(1 / 3)


def test_singleton_batch_and_seeded_batches():
    one = D.TransitionDataset("sparse-maze", np.ones((1, 2)), np.zeros((1, 2)), np.array([2.5]), np.ones((1, 2)),
                              np.zeros(1, bool), np.ones(1, bool), np.zeros(1, np.uint8))
    b = D.sample_batch(one, 1, np.random.default_rng(0))
    assert b.rewards.tolist() == [2.5] and b.states.shape == (1, 2)
    ds = random_dataset(np.random.default_rng(9))
    b1 = D.sample_batch(ds, 64, np.random.default_rng(42))
    b2 = D.sample_batch(ds, 64, np.random.default_rng(42))
    for x, y in zip(b1, b2):
        np.testing.assert_array_equal(x, y)


def test_normalized_states_are_standard():
    ds = D.generate(ObstacleNav2D(), [("left", 0.5), ("right", 0.5)], 20, np.random.default_rng(5))
    out, _ = D.normalize_states(ds)
    np.testing.assert_allclose(out.states.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.states.std(axis=0), 1.0, rtol=1e-12)
    again, stats = D.normalize_states(out)
    np.testing.assert_allclose(stats.mean, 0.0, atol=1e-12)
    np.testing.assert_allclose(stats.std, 1.0, rtol=1e-12)
    np.testing.assert_allclose(again.states, out.states, atol=1e-12)
