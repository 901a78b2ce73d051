import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermetric import knn
from hypermetric.core import DistanceMatrix


def _line(points):
    p = np.array(points)
    return DistanceMatrix(tuple(range(1, len(p) + 1)), np.abs(p[:, None] - p[None, :]))


def test_sign_and_rounding():
    assert knn.sign_fn(0) == 1 and knn.sign_fn(-2) == -1 and knn.sign_fn(3) == 1
    assert knn.round_half_up(0.5) == 1 and knn.round_half_up(2.5) == 3 and knn.round_half_up(2.4) == 2
    assert [knn.objective_sign(a) for a in (1, 2, 3, 5)] == [1, -1, 1, -1]


def test_knnall_includes_ties():
    # vertex 1 at 0; training 2,3 at distance 1 and 4 at distance 2
    M = _line([0, 1, -1, 2])
    assert knn.knnall_neighbors(M, [2, 3, 4], 1, 1) == [2, 3]
    assert knn.knnall_neighbors(M, [2, 3, 4], 1, 3) == [2, 3, 4]


def test_knn1_exactly_k_with_random_ties():
    M = _line([0, 1, -1, 2])
    seen = set()
    for seed in range(30):
        nb = knn.knn1_neighbors(M, [2, 3, 4], 1, 1, rng=np.random.default_rng(seed))
        assert len(nb) == 1 and nb[0] in (2, 3)
        seen.add(nb[0])
    assert seen == {2, 3}
    assert knn.knn1_neighbors(M, [2, 3, 4], 1, 2, tiebreak=[0, 1, 2]) == [2, 3]


def test_invalid_requests():
    M = _line([0, 1, 2])
    with pytest.raises(ValueError, match="k must"):
        knn.knnall_neighbors(M, [2, 3], 1, 0)
    with pytest.raises(ValueError, match="fewer than"):
        knn.knnall_neighbors(M, [2, 3], 1, 3)
    with pytest.raises(ValueError, match="training set"):
        knn.knn1_neighbors(M, [1, 2], 1, 1)
    with pytest.raises(ValueError, match="unknown method"):
        knn.run_experiment(M, "knn2", [1])
    with pytest.raises(ValueError):
        knn.predict({}, [])


def test_predict_zero_sum_is_positive():
    assert knn.predict({1: 1, 2: -1}, [1, 2]) == 1
    assert knn.predict({1: -1, 2: -1, 3: 1}, [1, 2, 3]) == -1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=6, max_size=25), st.integers(0, 2**31), st.integers(1, 4))
def test_batch_matches_per_vertex(points, seed, k):
    M = _line(points)
    rng = np.random.default_rng(seed)
    verts = list(M.vertex_index)
    train, test = verts[: len(verts) // 2], verts[len(verts) // 2:]
    k = min(k, len(train))
    y = np.array([knn.objective_sign(v) for v in train])
    S = M.entries[np.ix_([M.position(v) for v in test], [M.position(v) for v in train])]
    tb = rng.permuted(np.broadcast_to(np.arange(len(train)), S.shape), axis=1)
    f = dict(zip(train, y.tolist()))
    s_all = knn.batch_scores(S, y, k, "knnall")
    s_one = knn.batch_scores(S, y, k, "knn1", tb)
    for r, a in enumerate(test):
        assert knn.sign_fn(s_all[r]) == knn.predict(f, knn.knnall_neighbors(M, train, a, k))
        assert knn.sign_fn(s_one[r]) == knn.predict(f, knn.knn1_neighbors(M, train, a, k, tiebreak=tb[r]))


def test_split_sizes():
    rng = np.random.default_rng(0)
    s = knn.make_split(list(range(1, 2001)), knn.objective_sign, 0.7, rng)
    assert len(s.train) == 1400 and len(s.test) == 600
    assert not {v for v, _ in s.train} & set(s.test)
    with pytest.raises(ValueError):
        knn.make_split([1, 2], knn.objective_sign, 1.0, rng)


def test_experiment_determinism_and_jobs():
    rng = np.random.default_rng(3)
    M = _line(rng.integers(0, 40, size=200).tolist())
    a = knn.run_experiment(M, "knn1", [1, 2, 3], trials=4, master_seed=9, jobs=1, record=(2, 3))
    b = knn.run_experiment(M, "knn1", [1, 2, 3], trials=4, master_seed=9, jobs=8, record=(2, 3))
    assert a.rows == b.rows and a.predictions == b.predictions
    c = knn.run_experiment(M, "knn1", [1, 2, 3], trials=4, master_seed=10)
    assert c.rows != a.rows
    assert len(a.predictions) == 60


def test_sanity_floor_when_k_covers_training():
    # with every training vertex voting, knnall predicts the training majority
    pts = list(range(30))
    M = _line(pts)
    rep = knn.run_experiment(M, "knnall", [21], trials=3, split_fraction=0.7, labels=lambda v: 1)
    assert rep.averages == [0.0]


def test_report_csv(tmp_path):
    M = _line(list(range(20)))
    rep = knn.run_experiment(M, "knnall", [1, 2], trials=2, record=(1, 2))
    rep.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "trial,k=1,k=2" and lines[-1].startswith("Average,") and len(lines) == 4
    rep.write_predictions(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().startswith("vertex,true_sign,predicted_sign\n")
