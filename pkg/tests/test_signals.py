import numpy as np
import pytest

from poissoncs.bases import make_basis
from poissoncs.signals import (
    delta_like_dwt_signal,
    packing_signal,
    packing_spec,
    split_packing_signal,
    triangular_signal,
    validate_class_membership,
)


def hamming(a, b):
    return int(np.sum(np.sign(a) != np.sign(b)))


@pytest.mark.parametrize("kind", ["dct", "dht", "dwt"])
def test_packing_signals_are_class_members(kind):
    basis = make_basis(kind, 32)
    for seed in range(50):
        sig = packing_signal(basis, 4, seed)
        assert sig.membership.passed
        assert np.count_nonzero(sig.theta[1:]) == 4
        assert sig.theta[0] == 32**-0.5


def test_packing_amplitude_dht4():
    basis = make_basis("dht", 4)
    sig = packing_signal(basis, 1, 3)
    nz = sig.theta[1:][sig.theta[1:] != 0]
    assert abs(nz[0]) == pytest.approx(0.5, abs=1e-15)  # 1/(p*lambda_1) with lambda_1 = 1/2
    assert sig.f.min() >= -1e-12 and abs(np.abs(sig.f).sum() - 1) <= 1e-10


def test_packing_pixel_floor():
    # pixels cannot drop below 1/p - alpha*lambda = 0
    basis = make_basis("dwt", 64)
    for seed in range(20):
        sig = packing_signal(basis, 5, seed)
        assert sig.f.min() >= -1e-12


def test_packing_energy_identity():
    basis = make_basis("dct", 64)
    spec = packing_spec(basis, 6)
    sig = packing_signal(basis, 6, 9)
    energy = float(np.sum(sig.theta[1:] ** 2))
    assert energy == pytest.approx(6 * spec.alpha**2, rel=1e-12)
    assert spec.eta_sq == pytest.approx(3 * spec.alpha**2, rel=1e-15)


def test_packing_pair_separation():
    basis = make_basis("dht", 32)
    k = 4
    spec = packing_spec(basis, k)
    kept = 0
    for seed in range(0, 400, 2):
        a = packing_signal(basis, k, seed)
        b = packing_signal(basis, k, seed + 1)
        if hamming(a.theta[1:], b.theta[1:]) >= k / 2:
            kept += 1
            d2 = float(np.sum((a.theta - b.theta) ** 2))
            assert spec.eta_sq - 1e-15 <= d2 <= 8 * spec.eta_sq + 1e-15
    assert kept > 100  # the filter keeps most random pairs


def test_packing_deterministic():
    basis = make_basis("dct", 16)
    a, b = packing_signal(basis, 3, 5), packing_signal(basis, 3, 5)
    np.testing.assert_array_equal(a.theta, b.theta)


def test_split_packing_support_partition():
    basis = make_basis("dwt", 64)
    sig = split_packing_signal(basis, 6, 4, 4, 0)
    one_based = np.nonzero(sig.theta[1:])[0] + 2
    assert (one_based <= 16).sum() == 4
    assert (one_based > 16).sum() == 2
    assert sig.membership.passed
    with pytest.raises(ValueError):
        split_packing_signal(basis, 3, 4, 4, 0)


def test_triangular_example_values():
    sig = triangular_signal(16, 3)
    np.testing.assert_allclose(
        sig.theta[:5], [0.25, 0.25, 2 / 12, 1 / 12, 0.0], atol=1e-15
    )
    assert np.count_nonzero(sig.theta[1:]) == 3
    assert sig.membership.passed


def test_triangular_degenerate_s1_formula_and_report():
    sig = triangular_signal(64, 1)
    assert sig.theta[1] == pytest.approx(1 / 8, abs=1e-15)
    # the linear-decay profile is not nonnegative at s = 1; the report says so
    assert not sig.membership.passed
    assert not sig.membership.nonneg_ok


@pytest.mark.parametrize("p,s", [(16, 3), (64, 5), (128, 10), (256, 10)])
def test_triangular_members_at_moderate_sparsity(p, s):
    assert triangular_signal(p, s).membership.passed


def test_delta_truncated_p4():
    sig = delta_like_dwt_signal(4, 2, 1)
    np.testing.assert_allclose(sig.theta, [0.5, 0.5, 2**-0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(sig.f, [1, 0, 0, 0], atol=1e-14)


def test_delta_full_expansion_any_position():
    for pos in (1, 5, 16):
        sig = delta_like_dwt_signal(16, 4, pos)
        np.testing.assert_allclose(sig.f, np.eye(16)[pos - 1], atol=1e-14)
        assert np.count_nonzero(sig.theta) == 1 + 4
        assert sig.membership.passed


def test_delta_pair_distance():
    a = delta_like_dwt_signal(32, 5, 3)
    b = delta_like_dwt_signal(32, 5, 20)
    assert float(np.sum((a.f - b.f) ** 2)) == pytest.approx(2.0, abs=1e-12)


def test_delta_truncation_is_block_average():
    sig = delta_like_dwt_signal(16, 2, 1)
    np.testing.assert_allclose(sig.f[:4], 0.25, atol=1e-14)
    np.testing.assert_allclose(sig.f[4:], 0.0, atol=1e-14)
    assert sig.membership.passed


def test_delta_truncated_offset_position_unsupported():
    with pytest.raises(ValueError):
        delta_like_dwt_signal(16, 2, 3)
    with pytest.raises(ValueError):
        delta_like_dwt_signal(16, 4, 17)


def test_membership_flags():
    basis = make_basis("dct", 16)
    theta = np.zeros(16)
    theta[0] = 16**-0.5
    assert validate_class_membership(basis, theta, 0).passed
    # an overweight fine-scale wavelet coefficient breaks nonnegativity
    bw = make_basis("dwt", 16)
    theta = np.zeros(16)
    theta[0] = 16**-0.5
    theta[15] = 1.0
    report = validate_class_membership(bw, theta, 1)
    assert not report.nonneg_ok and not report.passed


def test_membership_energy_cap():
    # class members satisfy ||theta_bar||^2 <= min(1, s * L^2)
    for kind in ["dct", "dht", "dwt"]:
        basis = make_basis(kind, 32)
        for seed in range(10):
            sig = packing_signal(basis, 4, seed)
            energy = float(np.sum(sig.theta[1:] ** 2))
            assert energy <= min(1.0, 4 * basis.L**2) + 1e-12
