import json

import numpy as np
import pytest

from milk.datamodel.features import ModalityFeatureBank
from milk.datamodel.imputation import prepare_features
from milk.datamodel.interactions import InteractionSet
from milk.datamodel.split import bundle_from_manifest
from milk.errors import EmptyReportError
from milk.evaluation.evaluator import GROUPS, evaluate, item_groups, write_report
from milk.evaluation.inference import infer_new_item_scores
from milk.evaluation.metrics import ndcg_at_k, rank_items, recall_at_k
from milk.model.params import init_params


@pytest.fixture
def trained(tiny_bundle):
    params = init_params(tiny_bundle.n_users, tiny_bundle.features.dims, d=4, seed=2)
    params.user_embeddings *= 100
    _, eval_features = prepare_features(tiny_bundle, "mean")
    return tiny_bundle, params, eval_features


def brute_force(bundle, params, features, split, k):
    candidates = bundle.split_items(split)
    pairs = bundle.split_pairs(split)
    trained_users = set(bundle.trained_users.tolist())
    recalls, ndcgs = [], []
    for user in pairs.users:
        if int(user) not in trained_users:
            continue
        scores, _ = infer_new_item_scores(params, features, np.array([user]), candidates)
        ranking = rank_items(scores[0], candidates).tolist()
        relevant = set(pairs.positives(user).tolist())
        recalls.append(recall_at_k(ranking, relevant, k))
        ndcgs.append(ndcg_at_k(ranking, relevant, k))
    return float(np.mean(recalls)), float(np.mean(ndcgs)), len(recalls)


def test_matches_brute_force(trained):
    bundle, params, features = trained
    for split in ("val", "test"):
        report = evaluate(bundle, params, features, split, ks=(1, 2, 10))
        for k in (1, 2, 10):
            recall, ndcg, n_users = brute_force(bundle, params, features, split, k)
            assert report.metric("recall", k) == pytest.approx(recall, abs=1e-12)
            assert report.metric("ndcg", k) == pytest.approx(ndcg, abs=1e-12)
            assert report.n_users == n_users


def test_single_user_perfect_ranking():
    pairs = np.array([[0, 0], [0, 1], [0, 3]])
    interactions = InteractionSet(1, 4, pairs)
    features = ModalityFeatureBank([np.eye(4)[:, :2] + 0.0, np.eye(4)[:, 2:] + 0.0])
    bundle = bundle_from_manifest(interactions, features, {"seed": 0, "val_items": [2], "test_items": [3]})
    params = init_params(1, [2, 2], d=2, seed=0)
    params.user_embeddings[:] = 1.0
    report = evaluate(bundle, params, features, "test", ks=(10,))
    assert report.metric("recall", 10) == 1.0
    assert report.metric("ndcg", 10) == 1.0


def test_group_metrics_recombine_to_overall(trained):
    bundle, params, features = trained
    report = evaluate(bundle, params, features, "test", ks=(2, 10), group_breakdown=True, keep_per_user=True)
    assert set(report.groups) == set(GROUPS)

    candidates = np.sort(bundle.test_items)
    labels = item_groups(bundle.test_mask, candidates)
    pairs = bundle.test_pairs
    users = [u for u in pairs.users if u in set(bundle.trained_users.tolist())]
    relevant = np.zeros((len(users), len(candidates)), dtype=bool)
    for row, user in enumerate(users):
        relevant[row, np.searchsorted(candidates, pairs.positives(user))] = True
    n_relevant = relevant.sum(axis=1)

    for k in ("2", "10"):
        recombined = np.zeros(len(users))
        for g, name in enumerate(GROUPS):
            if name not in report.group_members:
                continue
            members = report.group_members[name]
            share = (relevant[members] & (labels == g)).sum(axis=1) / n_relevant[members]
            recombined[members] += report.per_user[name][k]["recall"] * share
        np.testing.assert_allclose(recombined, report.per_user["overall"][k]["recall"], atol=1e-9)
        assert report.metrics[k]["recall"] == pytest.approx(recombined.mean(), abs=1e-9)


def test_scores_do_not_depend_on_held_out_interactions(trained):
    bundle, params, features = trained
    scores_before, _ = infer_new_item_scores(params, features, bundle.trained_users, bundle.test_items)
    emptied = bundle_from_manifest(bundle.train, bundle.features, bundle.manifest(), bundle.train_mask, bundle.test_mask)
    scores_after, _ = infer_new_item_scores(params, features, emptied.trained_users, emptied.test_items)
    np.testing.assert_array_equal(scores_before, scores_after)


def test_empty_split():
    interactions = InteractionSet(2, 10, np.array([[0, 0], [1, 1], [0, 2], [1, 5]]))
    features = ModalityFeatureBank([np.ones((10, 2)), np.ones((10, 2))])
    bundle = bundle_from_manifest(interactions, features, {"seed": 0, "val_items": [5], "test_items": [8, 9]})
    params = init_params(2, [2, 2], d=2, seed=0)
    with pytest.raises(EmptyReportError):
        evaluate(bundle, params, features, "test")


def test_write_report(tmp_path, trained):
    bundle, params, features = trained
    report = evaluate(bundle, params, features, "test", ks=(10, 20), group_breakdown=True)
    path = write_report(report, tmp_path / "metrics", "test")

    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["protocol"] == "FTMT"
    assert set(data["K"]) == {"10", "20"}
    assert set(data["K"]["10"]) == {"recall", "ndcg"}
    assert set(data["groups"]) == set(GROUPS)
    assert data["n_users"] == report.n_users
    assert data["seed"] == 0

    csv_lines = (tmp_path / "metrics" / "test.csv").read_text(encoding="utf-8").splitlines()
    assert csv_lines[0] == "variant,group,metric,value"
    assert len(csv_lines) > 1
