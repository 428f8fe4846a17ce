import numpy as np
import pytest

from milk.datamodel.missingness import apply_missingness
from milk.datamodel.split import make_new_item_split
from milk.datamodel.synthetic import SyntheticSpec, generate_synthetic
from milk.load_config.load_config import TrainConfig


def build_bundle(n_users=60, n_items=40, dims=(6, 5), k=4, interactions_per_user=6, new_ratio=0.2, protocol="FTMT", seed=0):
    interactions, features = generate_synthetic(
        SyntheticSpec(n_users=n_users, n_items=n_items, k=k, dims=list(dims), interactions_per_user=interactions_per_user, seed=seed)
    )
    bundle = make_new_item_split(interactions, features, new_ratio, seed)
    return apply_missingness(bundle, protocol, seed=seed)


@pytest.fixture
def make_bundle():
    return build_bundle


@pytest.fixture
def tiny_bundle():
    return build_bundle()


@pytest.fixture
def tiny_config():
    return TrainConfig(d=4, batch_size=64, max_epochs=3, patience=5, lr=0.01, alpha=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def isolated_log_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MILK_LOG_DIR", str(tmp_path / "logs"))
