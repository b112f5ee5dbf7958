import numpy as np
import pytest

from protosarc.data import Dataset, DatasetManifest
from protosarc.errors import DataError
from protosarc.explain import (ProjectedModel, evaluate, explain,
                               project_prototypes)
from protosarc.model import (IncongruityHead, ModelParams, OutputHead,
                             PrototypeBank, forward)
from protosarc.synthetic import gaussian_clusters_dataset, random_instance

from conftest import make_record


def small_model(d_s=4, d_m=4, k_a=4, k_b=2, seed=0):
    params, _ = random_instance(seed=seed, k_a=k_a, k_b=k_b, d_s=d_s, d_m=d_m)
    return params


def pool_dataset(n=30, d_s=4, d_m=4, seed=1):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        y = i % 2
        z = (i // 2) % 2
        records.append(make_record(
            i, y, z,
            e_ct=rng.normal(y * 3.0, 1.0, d_s),
            e_ep=rng.normal(z * 2.0 - 1.0, 0.5, d_m),
            e_ip=rng.normal(((z if y == 0 else 1 - z) * 2.0 - 1.0), 0.5, d_m),
            e_full=rng.normal(z * 2.0 - 1.0, 0.5, d_m),
        ))
    return Dataset(records=records, d_s=d_s, d_m=d_m,
                   manifest=DatasetManifest(d_s=d_s, d_m=d_m))


def test_projection_exact_match_gives_zero_distance():
    ds = pool_dataset()
    params = small_model()
    target = next(r for r in ds.records if r.y == int(params.bank.semantic_class[0]))
    params.bank.semantic[0] = target.e_ct.copy()
    model = project_prototypes(params, ds, seed=0)
    src = model.projection.semantic[0]
    assert src.record_id == target.id
    assert src.distance == 0.0
    np.testing.assert_array_equal(model.params.bank.semantic[0], target.e_ct)


def test_projection_nearest_of_class_pool():
    d = 2
    records = [
        make_record(0, 0, 0, [1.0, 0.0], [0.0] * d, [0.0] * d, e_full=[0.0] * d),
        make_record(1, 0, 0, [3.0, 0.0], [0.0] * d, [0.0] * d, e_full=[0.0] * d),
        make_record(2, 1, 0, [0.1, 0.0], [0.0] * d, [0.0] * d, e_full=[0.5] * d),
        make_record(3, 0, 1, [9.0, 0.0], [0.0] * d, [0.0] * d, e_full=[1.0] * d),
        make_record(4, 1, 1, [8.0, 0.0], [0.0] * d, [0.0] * d, e_full=[1.0] * d),
    ]
    ds = Dataset(records=records, d_s=d, d_m=d, manifest=DatasetManifest(d_s=d, d_m=d))
    bank = PrototypeBank(
        semantic=np.array([[0.0, 0.0], [5.0, 0.0]]),
        semantic_class=np.array([0, 1]),
        sentiment=np.array([[0.0, 0.0], [1.0, 1.0]]),
        sentiment_polarity=np.array([0, 1]),
    )
    params = ModelParams(
        bank=bank, head=OutputHead(theta=np.zeros(2 + 4), bias=0.0),
        inco_head=IncongruityHead(W1=np.zeros((2, 2)), b1=np.zeros(2),
                                  W2=np.zeros(2), b2=0.0))
    model = project_prototypes(params, ds, seed=0)
    # class-0 prototype at origin projects onto (1,0), not the closer (0.1,0)
    # which belongs to class 1
    assert model.projection.semantic[0].record_id == "r0"
    assert model.projection.semantic[0].distance == pytest.approx(1.0)
    np.testing.assert_array_equal(model.params.bank.semantic[0], [1.0, 0.0])


def test_projection_unrestricted_pool():
    d = 2
    records = [
        make_record(0, 0, 0, [1.0, 0.0], [0.0] * d, [0.0] * d, e_full=[0.0] * d),
        make_record(1, 1, 0, [0.1, 0.0], [0.0] * d, [0.0] * d, e_full=[0.5] * d),
        make_record(2, 0, 1, [4.0, 0.0], [0.0] * d, [0.0] * d, e_full=[1.0] * d),
        make_record(3, 1, 1, [5.0, 0.0], [0.0] * d, [0.0] * d, e_full=[1.0] * d),
    ]
    ds = Dataset(records=records, d_s=d, d_m=d, manifest=DatasetManifest(d_s=d, d_m=d))
    params = small_model(d_s=2, d_m=2, k_a=2)
    params.bank.semantic = np.array([[0.0, 0.0], [5.0, 0.0]])
    params.bank.semantic_class = np.array([0, 1])
    model = project_prototypes(params, ds, seed=0, restrict_tag=False,
                               project_sentiment=False)
    assert model.projection.semantic[0].record_id == "r1"


def test_projection_optimality_exhaustive():
    ds = pool_dataset(n=40)
    params = small_model()
    model = project_prototypes(params, ds, seed=3)
    y = ds.labels()
    sem = ds.semantic_matrix()
    for j, src in enumerate(model.projection.semantic):
        tag = int(params.bank.semantic_class[j])
        pool = sem[y == tag]
        dists = np.linalg.norm(pool - params.bank.semantic[j][None, :], axis=1)
        assert src.distance <= dists.min() + 1e-12


def test_projection_sampling_containing_nearest_matches_full():
    ds = pool_dataset(n=20)
    params = small_model()
    full = project_prototypes(params, ds, sample_frac=1.0, seed=5)
    sampled = project_prototypes(params, ds, sample_frac=0.5, seed=5)
    for f, s in zip(full.projection.semantic, sampled.projection.semantic):
        if f.record_id == s.record_id:
            assert f.distance == s.distance
        else:
            # the sampled pool missed the true nearest neighbor
            assert s.distance >= f.distance


def test_projection_bad_sample_frac():
    ds = pool_dataset()
    with pytest.raises(DataError, match="sample_frac"):
        project_prototypes(small_model(), ds, sample_frac=0.0)


def test_projection_defaults_to_tenth_above_pool_threshold(monkeypatch):
    import importlib
    ex = importlib.import_module("protosarc.explain")
    ds = pool_dataset(n=30)
    monkeypatch.setattr(ex, "LARGE_POOL_THRESHOLD", 20)
    model = ex.project_prototypes(small_model(), ds, sample_frac=None, seed=0)
    assert model.projection.sample_frac == 0.1
    monkeypatch.setattr(ex, "LARGE_POOL_THRESHOLD", 100)
    model = ex.project_prototypes(small_model(), ds, sample_frac=None, seed=0)
    assert model.projection.sample_frac == 1.0


def test_projection_sentiment_uses_nonsarcastic_full_vectors():
    ds = pool_dataset(n=30)
    params = small_model()
    model = project_prototypes(params, ds, seed=0)
    ids = {r.id: r for r in ds.records}
    for src in model.projection.sentiment:
        rec = ids[src.record_id]
        assert rec.y == 0
        assert rec.z_full == src.tag


def test_explain_requires_projection():
    params = small_model()
    ds = pool_dataset()
    model = ProjectedModel(params=params, projection=None)
    with pytest.raises(DataError, match="projected"):
        explain(model, ds.records[0])


def test_explain_stale_version_refused():
    ds = pool_dataset()
    params = small_model()
    model = project_prototypes(params, ds, seed=0)
    model.params.param_version += 1  # simulates training after projection
    with pytest.raises(DataError, match="stale"):
        explain(model, ds.records[0])


def test_explain_source_record_ranks_first():
    ds = pool_dataset(n=24)
    params = small_model()
    model = project_prototypes(params, ds, seed=1)
    src = model.projection.semantic[0]
    rec = next(r for r in ds.records if r.id == src.record_id)
    expl = explain(model, rec, top_k=model.params.bank.k_a)
    assert expl.prototypes[0]["distance"] == 0.0
    assert expl.prototypes[0]["record_id"] == src.record_id


def test_explain_full_ranking_sorted_and_consistent():
    ds = pool_dataset(n=24)
    params = small_model()
    model = project_prototypes(params, ds, seed=2)
    rec = ds.records[5]
    expl = explain(model, rec, top_k=model.params.bank.k_a)
    assert len(expl.prototypes) == model.params.bank.k_a
    dists = [p["distance"] for p in expl.prototypes]
    sims = [p["similarity"] for p in expl.prototypes]
    assert dists == sorted(dists)
    assert sims == sorted(sims, reverse=True)


def test_explain_top_k_clamped():
    ds = pool_dataset(n=24)
    model = project_prototypes(small_model(), ds, seed=2)
    expl = explain(model, ds.records[0], top_k=999)
    assert len(expl.prototypes) == model.params.bank.k_a


def test_explain_deterministic():
    ds = pool_dataset(n=24)
    model = project_prototypes(small_model(), ds, seed=2)
    a = explain(model, ds.records[3], top_k=3)
    b = explain(model, ds.records[3], top_k=3)
    assert a.to_dict() == b.to_dict()


def test_explain_renders_input_text_with_id_fallback():
    import warnings
    ds = pool_dataset(n=24)
    model = project_prototypes(small_model(), ds, seed=2)
    rec = ds.records[3]
    assert f"input: {rec.text}" in explain(model, rec, top_k=2).to_text()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec.text = ""
        expl = explain(model, rec, top_k=2)
    assert f"input: {rec.id}" in expl.to_text()


def test_projection_prediction_consistency():
    # projected vectors fully determine the post-projection predictions
    ds = gaussian_clusters_dataset(60, seed=9)
    params, _ = random_instance(seed=9, d_s=16, d_m=8)
    model = project_prototypes(params, ds, seed=0)
    for rec in ds.records[:10]:
        assert forward(rec, model.params).prob == forward(rec, model.params).prob
        tr1 = forward(rec, model.params)
        tr2 = forward(rec, model.params.copy())
        assert tr1.prob == tr2.prob


def _confusion_model():
    # prob > 0.5 iff e_ct is closer to the class-1 prototype at (10, 0, ...)
    d_s, d_m = 3, 2
    bank = PrototypeBank(
        semantic=np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]),
        semantic_class=np.array([0, 1]),
        sentiment=np.array([[0.0, 0.0], [1.0, 1.0]]),
        sentiment_polarity=np.array([0, 1]),
        sigma_semantic=5.0,
    )
    theta = np.zeros(2 + 4)
    theta[0], theta[1] = -8.0, 8.0
    return ModelParams(
        bank=bank, head=OutputHead(theta=theta, bias=0.0),
        inco_head=IncongruityHead(W1=np.zeros((2, 4)), b1=np.zeros(4),
                                  W2=np.zeros(4), b2=0.0))


def _eval_dataset(pattern):
    # pattern: list of (true_label, predicted_label); position encodes prediction
    records = []
    for i, (y, pred) in enumerate(pattern):
        x = 10.0 if pred == 1 else 0.0
        records.append(make_record(i, y, 0, [x, 0.0, 0.0], [0.0, 0.0], [0.0, 0.0],
                                   e_full=[0.0, 0.0]))
    return Dataset(records=records, d_s=3, d_m=2,
                   manifest=DatasetManifest(d_s=3, d_m=2))


def test_evaluate_all_correct():
    ds = _eval_dataset([(0, 0), (1, 1), (0, 0), (1, 1)])
    m = evaluate(_confusion_model(), ds)
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)
    assert not m.zero_division


def test_evaluate_confusion_arithmetic():
    pattern = ([(1, 1)] * 2 + [(0, 1)] * 1 + [(1, 0)] * 1 + [(0, 0)] * 6)
    m = evaluate(_confusion_model(), _eval_dataset(pattern))
    assert m.confusion == {"tp": 2, "fp": 1, "fn": 1, "tn": 6}
    assert m.precision == pytest.approx(2 / 3)
    assert m.recall == pytest.approx(2 / 3)
    assert m.f1 == pytest.approx(2 / 3)
    assert m.accuracy == pytest.approx(0.8)


def test_evaluate_degenerate_all_negative_flags_zero_division():
    pattern = [(1, 0), (1, 0), (0, 0)]
    m = evaluate(_confusion_model(), _eval_dataset(pattern))
    assert m.precision == 0.0
    assert m.zero_division
