import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermetric.core import (
    CountProfile,
    ExplicitHypergraph,
    HypergraphFormatError,
    VertexNotFound,
    count_profile,
    distance_matrix,
    format_hypergraph,
    metric_d,
    neighborhood,
    parse_hypergraph,
    profile_table,
    profiles_equivalent,
)


@pytest.fixture
def small():
    # path 1-2-3 plus a labelled triangle {3,4,5} and an isolated vertex 6
    return ExplicitHypergraph.from_edges(
        [((1, 2), "a"), ((2, 3), "a"), ((3, 4, 5), "b"), ((4, 5), "b")],
        vertices=range(1, 7),
    )


def test_neighborhood(small):
    assert neighborhood(small, 1) == {1, 2}
    assert neighborhood(small, 3) == {2, 3, 4, 5}
    assert neighborhood(small, 6) == {6}


def test_unknown_vertex(small):
    with pytest.raises(VertexNotFound, match="vertex not in hypergraph: 99"):
        neighborhood(small, 99)


def test_count_profile_containment(small):
    p = count_profile(small, 3)
    # {1,2} is not inside N(3) = {2,3,4,5}
    assert p.counts == {(2, "a"): 1, (3, "b"): 1, (2, "b"): 1}
    assert count_profile(small, 6).total() == 0
    assert count_profile(small, 1).counts == {(2, "a"): 1}


def test_metric_and_equivalence(small):
    p4, p5 = count_profile(small, 4), count_profile(small, 5)
    assert profiles_equivalent(p4, p5) and metric_d(p4, p5) == 0
    assert metric_d(count_profile(small, 1), count_profile(small, 3)) == 2


def test_mismatched_property_sets():
    p = CountProfile(1, 2, ("a",), {(2, "a"): 1})
    q = CountProfile(2, 2, ("b",), {})
    with pytest.raises(ValueError, match="mismatched property sets"):
        metric_d(p, q)


@pytest.mark.parametrize(
    "edges, msg",
    [
        ([((), 0)], "at least one vertex"),
        ([((1, 1), 0)], "repeats"),
        ([((1, 2), 0), ((2, 1), 0)], "duplicate"),
    ],
)
def test_malformed_edges(edges, msg):
    with pytest.raises(HypergraphFormatError, match=msg):
        ExplicitHypergraph.from_edges(edges)


def test_undeclared_vertex():
    with pytest.raises(HypergraphFormatError, match="not declared"):
        ExplicitHypergraph.from_edges([((1, 5), 0)], vertices=[1, 2])


def test_distance_matrix(small):
    M = distance_matrix([count_profile(small, v) for v in small.vertices])
    M.check()
    assert M.value(4, 5) == 0
    assert M.value(1, 3) == M.value(3, 1) == 2
    with pytest.raises(ValueError, match="no profiles"):
        distance_matrix([])


def test_table_roundtrip(small):
    t = profile_table(small)
    assert t.profile(3) == count_profile(small, 3)
    assert t.distinct_count() == len({frozenset(count_profile(small, v).counts.items()) for v in small.vertices})
    assert t.restrict([4, 5]).distinct_count() == 1


def test_big_integers_stay_exact():
    big = 10**30
    p = CountProfile(1, 2, (0,), {(2, 0): big})
    q = CountProfile(2, 2, (0,), {(2, 0): 1})
    M = distance_matrix([p, q])
    assert M.value(1, 2) == big - 1


def test_text_format_roundtrip(small):
    text = format_hypergraph(small)
    H = parse_hypergraph(text)
    assert H.vertices == small.vertices
    assert {(e, lab) for e, lab in H.edges} == {(e, lab) for e, lab in small.edges}


def test_text_format_errors():
    with pytest.raises(HypergraphFormatError):
        parse_hypergraph("edge 0 1 x\n")
    with pytest.raises(HypergraphFormatError):
        parse_hypergraph("edge 0\n")
    with pytest.raises(HypergraphFormatError):
        parse_hypergraph("bogus 1 2\n")


def test_csv_outputs(small, tmp_path):
    M = distance_matrix([count_profile(small, v) for v in small.vertices])
    M.write_csv(tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert len(rows) == 1 + len(small.vertices)
    profile_table(small).write_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().startswith("vertex,m,property,count\n")


# -- metric axioms over random profiles ---------------------------------------

KEYS = [(m, P) for m in (1, 2, 3) for P in (0, 1)]
counts = st.dictionaries(st.sampled_from(KEYS), st.integers(0, 10**20), max_size=len(KEYS))


def _prof(c, owner=0):
    return CountProfile(owner, 3, (0, 1), c)


@settings(max_examples=300, deadline=None)
@given(counts, counts, counts)
def test_metric_axioms(a, b, c):
    p, q, r = _prof(a), _prof(b), _prof(c)
    assert metric_d(p, q) == metric_d(q, p) >= 0
    assert (metric_d(p, q) == 0) == profiles_equivalent(p, q)
    assert metric_d(p, r) <= metric_d(p, q) + metric_d(q, r)
    assert metric_d(p, p) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(counts, min_size=1, max_size=12))
def test_matrix_matches_pairwise(rows):
    profs = [_prof(c, i) for i, c in enumerate(rows)]
    M = distance_matrix(profs)
    for i, p in enumerate(profs):
        for j, q in enumerate(profs):
            assert M.entries[i, j] == metric_d(p, q)


def test_duplicate_rows_exact_and_int64():
    big = 10**30
    profs = [CountProfile(i, 2, (0,), {(2, 0): c}) for i, c in enumerate([big, 1, big, 1, 7])]
    M = distance_matrix(profs)
    assert M.entries.dtype == object
    assert M.value(0, 2) == 0 and M.value(1, 0) == big - 1 and M.value(4, 2) == big - 7
    small = [CountProfile(i, 2, (0,), {(2, 0): c}) for i, c in enumerate([3, 1, 3, 0])]
    assert distance_matrix(small).entries.tolist() == [[0, 2, 0, 3], [2, 0, 2, 1], [0, 2, 0, 3], [3, 1, 3, 0]]
