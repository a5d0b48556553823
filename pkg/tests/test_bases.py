import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poissoncs.bases import (
    localization_brute,
    localization_closed,
    make_basis,
)
from poissoncs.errors import BudgetExceededError

ALL_KINDS = ["dct", "dht", "dwt"]


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("p", [4, 8, 16, 32])
def test_orthonormal_with_constant_first_column(kind, p):
    b = make_basis(kind, p)
    gram = b.matrix.T @ b.matrix
    assert np.abs(gram - np.eye(p)).max() <= 1e-10
    assert np.all(b.matrix[:, 0] == p**-0.5)
    assert b.L <= 1.0


def test_dct_accepts_non_power_of_two():
    b = make_basis("dct", 6)
    assert np.abs(b.matrix.T @ b.matrix - np.eye(6)).max() <= 1e-10


def test_dct4_first_column_is_half():
    b = make_basis("dct", 4)
    np.testing.assert_array_equal(b.matrix[:, 0], np.full(4, 0.5))


def test_dwt2_matrix():
    b = make_basis("dwt", 2)
    r = 2**-0.5
    np.testing.assert_allclose(b.matrix, [[r, r], [r, -r]], atol=1e-15)


def test_dht4_entries_and_orthogonality():
    b = make_basis("dht", 4)
    assert set(np.unique(b.matrix)) == {-0.5, 0.5}
    np.testing.assert_allclose(b.matrix.T @ b.matrix, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("kind,p", [("dht", 6), ("dwt", 12), ("dht", 1), ("dct", 1)])
def test_invalid_dimensions_rejected(kind, p):
    with pytest.raises(ValueError):
        make_basis(kind, p)


def test_synthesize_dc_only_gives_flat_signal():
    b = make_basis("dct", 16)
    theta = np.zeros(16)
    theta[0] = 16**-0.5
    np.testing.assert_allclose(b.synthesize(theta), np.full(16, 1 / 16), atol=1e-15)


def test_analyze_flat_signal_gives_dc_only():
    b = make_basis("dht", 16)
    theta = b.analyze(np.full(16, 1 / 16))
    np.testing.assert_allclose(theta[0], 16**-0.5, atol=1e-15)
    np.testing.assert_allclose(theta[1:], 0.0, atol=1e-15)


def test_dwt4_haar_expansion_of_first_pixel():
    b = make_basis("dwt", 4)
    theta = np.array([0.5, 0.5, 2**-0.5, 0.0])
    np.testing.assert_allclose(b.synthesize(theta), [1, 0, 0, 0], atol=1e-14)
    np.testing.assert_allclose(b.analyze(np.eye(4)[0]), theta, atol=1e-14)


def test_dimension_mismatch_raises():
    b = make_basis("dct", 8)
    with pytest.raises(ValueError):
        b.synthesize(np.zeros(7))
    with pytest.raises(ValueError):
        b.analyze(np.zeros(9))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_and_isometry(seed):
    rng = np.random.default_rng(seed)
    kind = ALL_KINDS[seed % 3]
    b = make_basis(kind, 16)
    theta = rng.normal(size=16)
    f = b.synthesize(theta)
    np.testing.assert_allclose(b.analyze(f), theta, atol=1e-10)
    assert abs(np.linalg.norm(f) - np.linalg.norm(theta)) <= 1e-10


# --- localization values ---------------------------------------------------


def test_closed_forms_match_published_values():
    assert localization_closed("dht", 4, 1) == pytest.approx(0.5, abs=1e-15)
    assert localization_closed("dct", 64, 2) == pytest.approx(2 * math.sqrt(2) / 8, abs=1e-15)
    # saturation toward 1/(sqrt(2)-1) for deep wavelet stacks
    lim = 1 / (math.sqrt(2) - 1)
    assert localization_closed("dwt", 2**20, 25) == pytest.approx(lim, rel=1e-3)
    # beyond the stack depth the value no longer grows with k
    assert localization_closed("dwt", 2**20, 60) == localization_closed("dwt", 2**20, 25)


def test_dht_table_variant_flag():
    assert localization_closed("dht", 16, 3, table_variant=True) == pytest.approx(
        math.sqrt(2) * 3 / 4
    )
    assert localization_closed("dht", 16, 3) == pytest.approx(3 / 4)


def test_localization_k_range_validated():
    with pytest.raises(ValueError):
        localization_closed("dct", 8, 0)
    with pytest.raises(ValueError):
        localization_closed("dct", 8, 8)
    with pytest.raises(ValueError):
        localization_brute(make_basis("dct", 8), 0)


def test_brute_values_on_small_cases():
    # independent expectations: single-column sup norms and two-column stacking
    assert localization_brute(make_basis("dwt", 4), 1) == pytest.approx(2**-0.5, abs=1e-15)
    assert localization_brute(make_basis("dht", 4), 2) == pytest.approx(1.0, abs=1e-15)
    assert localization_brute(make_basis("dct", 8), 1) == pytest.approx(
        math.sqrt(2 / 8) * math.cos(math.pi / 16), abs=1e-14
    )


def test_brute_agrees_with_row_topk_oracle():
    # independent route: max over rows of the sum of the k largest |entries|
    for kind in ALL_KINDS:
        b = make_basis(kind, 16)
        absd = np.abs(b.non_dc)
        for k in (1, 2, 3):
            topk = np.sort(absd, axis=1)[:, -k:].sum(axis=1).max()
            assert localization_brute(b, k) == pytest.approx(topk, abs=1e-12)


@pytest.mark.parametrize("kind", ["dwt", "dht"])
@pytest.mark.parametrize("p", [4, 8, 16, 32])
def test_brute_equals_closed_for_dwt_and_dht(kind, p):
    b = make_basis(kind, p)
    for k in range(1, min(5, p)):
        closed = localization_closed(kind, p, k)
        assert localization_brute(b, k) == pytest.approx(closed, abs=1e-12)


@pytest.mark.parametrize("p", [8, 16, 32, 64])
def test_dct_brute_below_closed_upper_bound(p):
    b = make_basis("dct", p)
    for k in (1, 2):
        assert localization_brute(b, k) <= localization_closed("dct", p, k) + 1e-15


def test_brute_monotone_in_k():
    for kind in ALL_KINDS:
        b = make_basis(kind, 16)
        vals = [localization_brute(b, k) for k in range(1, 6)]
        assert all(b_ >= a_ - 1e-15 for a_, b_ in zip(vals, vals[1:]))


def test_max_non_dc_entry_is_k1_value():
    for kind in ALL_KINDS:
        b = make_basis(kind, 16)
        assert localization_brute(b, 1) == pytest.approx(np.abs(b.non_dc).max(), abs=1e-15)


def test_brute_budget_guard_names_count():
    b = make_basis("dct", 32)
    with pytest.raises(BudgetExceededError) as err:
        localization_brute(b, 5, budget=1000)
    assert err.value.required == math.comb(31, 5) * 32
    assert err.value.budget == 1000
