import numpy as np
import pytest

from milk.datamodel.interactions import InteractionSet
from milk.errors import EmptyDatasetError
from milk.objective.sampling import TripleSampler, sample_triples


def test_triples_are_valid(tiny_bundle, rng):
    train = tiny_bundle.train
    batch = TripleSampler(train, tiny_bundle.warm_items).sample(500, rng)
    assert len(batch) == 500
    keys = set(train.pair_keys().tolist())
    for u, i, j in zip(batch.users, batch.pos_items, batch.neg_items):
        assert int(u) * train.n_items + int(i) in keys
        assert int(u) * train.n_items + int(j) not in keys
    assert np.isin(batch.neg_items, tiny_bundle.warm_items).all()
    assert batch.items().tolist() == sorted(set(batch.pos_items.tolist()) | set(batch.neg_items.tolist()))


def test_dense_user_falls_back_to_scan(rng):
    # 用户 0 只有物品 4 可作负样本
    pairs = [(0, i) for i in range(4)] + [(1, 0)]
    batch = sample_triples(InteractionSet(2, 5, np.array(pairs)), 200, rng)
    assert set(batch.neg_items[batch.users == 0].tolist()) == {4}


def test_saturated_users_are_skipped(rng):
    pairs = [(0, 0), (0, 1), (1, 0)]
    batch = sample_triples(InteractionSet(2, 2, np.array(pairs)), 50, rng)
    assert set(batch.users.tolist()) == {1}
    assert set(batch.neg_items.tolist()) == {1}


def test_no_negatives_available(rng):
    with pytest.raises(EmptyDatasetError):
        sample_triples(InteractionSet(1, 2, np.array([(0, 0), (0, 1)])), 10, rng)
    with pytest.raises(EmptyDatasetError):
        sample_triples(InteractionSet(1, 2, np.empty((0, 2))), 10, rng)
