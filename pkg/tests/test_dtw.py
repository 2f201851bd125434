import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from templar.dtw import DtwOptions, Metric, Normalize, dtw_distance, local_distance
from templar.errors import (
    EmptyInputError,
    IncompatibleFeaturesError,
    InfeasibleBandError,
    ShapeError,
)
from templar.mfcc import FeatureMatrix

METRICS = list(Metric)


def seq(max_len=6, dim=2):
    return arrays(
        np.float64,
        st.tuples(st.integers(1, max_len), st.just(dim)),
        elements=st.floats(-10, 10, allow_subnormal=False),
    )


def test_local_distance_cases():
    assert local_distance([0, 3], [4, 0], Metric.EUCLIDEAN) == 5.0
    assert local_distance([1, 2], [2, 4], Metric.MANHATTAN) == 3.0
    assert local_distance([0, 3], [4, 0], Metric.SQUARED_EUCLIDEAN) == 25.0
    for m in METRICS:
        assert local_distance([1.5, -2, 7], [1.5, -2, 7], m) == 0.0
    with pytest.raises(ShapeError):
        local_distance([1, 2], [1, 2, 3])


def test_hand_case():
    res = dtw_distance([1, 2, 3], [2, 3, 4], DtwOptions(Metric.MANHATTAN, return_path=True))
    assert res.distance == 2.0
    assert res.path == [(0, 0), (1, 0), (2, 1), (2, 2)]
    assert res.cells_evaluated == 9


def test_single_frame_is_local_distance():
    assert dtw_distance([[0, 3]], [[4, 0]]).distance == 5.0


def test_identity():
    a = np.random.default_rng(0).normal(size=(20, 12))
    for m in METRICS:
        res = dtw_distance(a, a, DtwOptions(m, return_path=True))
        assert res.distance == 0.0
        assert res.path == [(i, i) for i in range(20)]


def test_tie_break_prefers_diagonal_then_left():
    res = dtw_distance(np.zeros(3), np.zeros(2), DtwOptions(return_path=True))
    assert res.path == [(0, 0), (1, 0), (2, 1)]
    res = dtw_distance(np.zeros(2), np.zeros(3), DtwOptions(return_path=True))
    assert res.path == [(0, 0), (0, 1), (1, 2)]


@settings(max_examples=200, deadline=None)
@given(seq(), seq(), st.sampled_from(METRICS))
def test_matches_brute_force(a, b, metric):
    expected = oracles.brute_force_dtw(a.tolist(), b.tolist(), metric.value)
    got = dtw_distance(a, b, DtwOptions(metric)).distance
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seq(), seq(), st.integers(0, 6))
def test_band_matches_brute_force(a, b, r):
    opts = DtwOptions(Metric.MANHATTAN, band_radius=r)
    if abs(len(a) - len(b)) > r:
        with pytest.raises(InfeasibleBandError):
            dtw_distance(a, b, opts)
        return
    expected = oracles.brute_force_dtw(a.tolist(), b.tolist(), "manhattan", band=r)
    assert dtw_distance(a, b, opts).distance == pytest.approx(expected, rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seq(10, 3), seq(10, 3), st.sampled_from(METRICS))
def test_symmetry(a, b, metric):
    opts = DtwOptions(metric)
    assert dtw_distance(a, b, opts).distance == pytest.approx(
        dtw_distance(b, a, opts).distance, rel=1e-12, abs=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(seq(10, 3), seq(10, 3), st.integers(0, 12))
def test_band_monotonicity(a, b, r):
    free = dtw_distance(a, b).distance
    if abs(len(a) - len(b)) > r:
        return
    banded = dtw_distance(a, b, DtwOptions(band_radius=r)).distance
    assert banded >= free
    if r >= max(len(a), len(b)):
        assert banded == free


@settings(max_examples=100, deadline=None)
@given(seq(12, 3), seq(12, 3), st.sampled_from(METRICS))
def test_path_cost_equals_distance(a, b, metric):
    res = dtw_distance(a, b, DtwOptions(metric, return_path=True))
    path = res.path
    assert path[0] == (0, 0) and path[-1] == (len(a) - 1, len(b) - 1)
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}
    total = sum(oracles.local(a[i], b[j], metric.value) for i, j in path)
    assert total == pytest.approx(res.distance, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(seq(8, 3), seq(8, 3), st.floats(0.01, 100), st.sampled_from([Metric.EUCLIDEAN, Metric.MANHATTAN]))
def test_homogeneity(a, b, g, metric):
    opts = DtwOptions(metric)
    base = dtw_distance(a, b, opts).distance
    assert dtw_distance(a * g, b * g, opts).distance == pytest.approx(g * base, rel=1e-9, abs=1e-9)


def test_path_length_normalization(rng):
    a, b = rng.normal(size=(7, 4)), rng.normal(size=(11, 4))
    raw = dtw_distance(a, b).distance
    norm = dtw_distance(a, b, DtwOptions(normalize=Normalize.PATH_LENGTH_AVERAGE)).distance
    assert norm == pytest.approx(raw / 18)


def test_cells_evaluated_with_band():
    res = dtw_distance(np.zeros(5), np.zeros(5), DtwOptions(band_radius=1))
    assert res.cells_evaluated == 5 + 4 + 4


def test_empty_and_shape_errors():
    with pytest.raises(EmptyInputError):
        dtw_distance(np.zeros((0, 2)), np.zeros((3, 2)))
    with pytest.raises(ShapeError):
        dtw_distance(np.zeros((3, 2)), np.zeros((3, 3)))


def test_infeasible_band():
    with pytest.raises(InfeasibleBandError):
        dtw_distance(np.zeros(3), np.zeros(6), DtwOptions(band_radius=2))


def test_fingerprint_mismatch(rng):
    a = FeatureMatrix(rng.normal(size=(4, 12)), 1)
    b = FeatureMatrix(rng.normal(size=(5, 12)), 2)
    with pytest.raises(IncompatibleFeaturesError):
        dtw_distance(a, b)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = dtw_distance(a, b, DtwOptions(strict=False))
    assert res.distance > 0
    assert any("fingerprint" in str(w.message) for w in caught)


def test_negative_band_rejected():
    with pytest.raises(ValueError):
        DtwOptions(band_radius=-1)
