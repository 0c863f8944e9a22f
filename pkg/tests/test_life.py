import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lifelens import life
from conftest import naive_step, place


def test_dead_grid_stays_dead():
    g = np.zeros((16, 16), np.uint8)
    assert np.array_equal(life.step(g), g)


def test_block_is_still_life():
    g = place((8, 8), [(3, 3), (3, 4), (4, 3), (4, 4)])
    assert np.array_equal(naive_step(g), g)
    assert np.array_equal(life.step(g), g)


def test_blinker_rotates():
    h = place((8, 8), [(4, 3), (4, 4), (4, 5)])
    v = place((8, 8), [(3, 4), (4, 4), (5, 4)])
    assert np.array_equal(naive_step(h), v)
    assert np.array_equal(life.step(h), v)
    assert np.array_equal(life.step(life.step(h)), h)


def test_blinker_wraps_across_edge():
    h = place((8, 8), [(0, 7), (0, 0), (0, 1)])
    assert np.array_equal(life.step(h), naive_step(h))
    assert life.step(h)[7, 0] == 1


def test_step_does_not_modify_input(rng):
    g = (rng.random((16, 16)) < 0.4).astype(np.uint8)
    before = g.copy()
    life.step(g)
    assert np.array_equal(g, before)


def test_step_matches_naive_oracle(rng):
    grids = (rng.random((200, 16, 16)) < rng.random((200, 1, 1))).astype(np.uint8)
    batched = life.step(grids)
    for g, s in zip(grids, batched):
        assert np.array_equal(s, naive_step(g))


def test_step_rejects_non_binary():
    with pytest.raises(ValueError):
        life.step(np.full((8, 8), 2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-20, 20), st.integers(-20, 20))
def test_translation_equivariance(seed, dx, dy):
    g = (np.random.default_rng(seed).random((12, 10)) < 0.4).astype(np.uint8)
    assert np.array_equal(life.step(life.shift(g, dx, dy)), life.shift(life.step(g), dx, dy))


def test_evolve_one_step(rng):
    g = (rng.random((16, 16)) < 0.4).astype(np.uint8)
    seq = life.evolve(g, 1)
    assert seq.shape == (2, 16, 16)
    assert np.array_equal(seq[0], g) and np.array_equal(seq[1], life.step(g))


def test_evolve_blinker_period_two():
    h = place((8, 8), [(4, 3), (4, 4), (4, 5)])
    v = naive_step(h)
    seq = life.evolve(h, 2)
    assert np.array_equal(seq, np.stack([h, v, h]))


def test_evolve_dead():
    seq = life.evolve(np.zeros((8, 8), np.uint8), 3)
    assert seq.shape == (4, 8, 8) and not seq.any()


def test_evolve_zero_steps_rejected():
    with pytest.raises(ValueError):
        life.evolve(np.zeros((8, 8), np.uint8), 0)


def test_random_grid_extremes():
    dead = life.random_grid(life.GenConfig(density=0.0), np.random.default_rng(0))
    alive = life.random_grid(life.GenConfig(density=1.0, warmup_prob=0.0), np.random.default_rng(0))
    assert not dead.any()
    assert alive.all()


def test_random_grid_deterministic():
    cfg = life.GenConfig(density=0.5, seed=9)
    assert np.array_equal(life.random_grid(cfg, cfg.rng()), life.random_grid(cfg, cfg.rng()))


def test_warmup_applies_evolution():
    cfg = life.GenConfig(warmup_prob=1.0, warmup_steps=2, seed=3)
    raw = life.GenConfig(warmup_prob=0.0, seed=3)
    g = life.random_grids(cfg, cfg.rng(), 4)
    r = life.random_grids(raw, raw.rng(), 4)
    assert np.array_equal(g, life.evolve(r, 2)[:, -1])


@pytest.mark.parametrize("kw", [dict(density=1.5), dict(warmup_prob=-0.1), dict(height=4), dict(width=65),
                                dict(warmup_steps=-1)])
def test_gen_config_validation(kw):
    with pytest.raises(ValueError):
        life.GenConfig(**kw)


def test_make_dataset_deterministic():
    cfg = life.GenConfig(seed=7)
    a = life.make_dataset(cfg, 2, 3)
    b = life.make_dataset(cfg, 2, 3)
    assert a == b
    assert all(np.array_equal(x.truth, y.truth) for x, y in zip(a, b))


def test_make_dataset_sequences_follow_rule():
    for ex in life.make_dataset(life.GenConfig(seed=11), 50, 3):
        assert ex.truth.shape == (4, 16, 16)
        assert np.array_equal(ex.first, ex.truth[0]) and np.array_equal(ex.target, ex.truth[-1])
        for j in range(3):
            assert np.array_equal(ex.truth[j + 1], naive_step(ex.truth[j]))


def test_make_dataset_minimal():
    ds = life.make_dataset(life.GenConfig(), 1, 1)
    assert len(ds) == 1 and ds[0].truth.shape[0] == 2


@pytest.mark.parametrize("count,g", [(0, 2), (3, 0)])
def test_make_dataset_rejects_bad_sizes(count, g):
    with pytest.raises(ValueError):
        life.make_dataset(life.GenConfig(), count, g)


def test_example_truth_is_read_only():
    ex = life.make_dataset(life.GenConfig(), 1, 2)[0]
    with pytest.raises(ValueError):
        ex.truth[0, 0, 0] = 1
