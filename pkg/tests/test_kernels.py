import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.kernels import (KernelError, KernelFamily, KernelSpec, design_matrix, kernel_value,
                          pairwise_squared_distances, square_covariance_matrix, squared_distance)

ALL_FAMILIES = list(KernelFamily)

@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_kernel_is_one_at_zero_distance(family):
    assert kernel_value(family, 0.7, 0.0) == pytest.approx(1.0)

@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_kernel_decreases_with_distance(family):
    values = kernel_value(family, 1.3, np.linspace(0.0, 25.0, 50))
    assert np.all(np.diff(values) < 0.0)
    assert np.all(values > 0.0)

def test_closed_form_values():
    assert kernel_value("rbf", 1.0, 2.0) == pytest.approx(math.exp(-1.0))
    assert kernel_value(KernelFamily.EXPONENTIAL, 1.0, 1.0) == pytest.approx(math.exp(-1.0))
    assert kernel_value(KernelFamily.MATERN32, 2.0, 4.0) == pytest.approx(
        (1.0 + math.sqrt(3.0)) * math.exp(-math.sqrt(3.0)))
    assert kernel_value(KernelFamily.MATERN52, 2.0, 4.0) == pytest.approx(
        (1.0 + math.sqrt(5.0) + 5.0 / 3.0) * math.exp(-math.sqrt(5.0)))

def test_family_aliases():
    assert KernelFamily.from_name("Gaussian") is KernelFamily.SQUARED_EXPONENTIAL
    assert KernelFamily.from_name("matern-52") is KernelFamily.MATERN52
    assert KernelFamily.from_name("laplacian") is KernelFamily.EXPONENTIAL
    with pytest.raises(KernelError, match="Unknown kernel family"):
        KernelFamily.from_name("cosine")

def test_invalid_length_rejected():
    with pytest.raises(KernelError):
        kernel_value("rbf", 0.0, 1.0)
    with pytest.raises(KernelError):
        kernel_value("rbf", -1.0, 1.0)

def test_spec_validates_lengths():
    assert KernelSpec.multi_zeta("rbf", 2.0).lengths == (2.0, 3.0)
    assert KernelSpec.multi_zeta("rbf", 1.0, (1.5, 5.0)).n_zeta == 3
    with pytest.raises(KernelError, match="strictly increasing"):
        KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, (1.0, 1.0))
    with pytest.raises(KernelError):
        KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, ())
    with pytest.raises(KernelError):
        KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, (float("inf"),))

def test_pairwise_distances_match_pointwise(rng):
    rows = rng.normal(size=(6, 4))
    centers = rng.normal(size=(3, 4))
    r2 = pairwise_squared_distances(rows, centers)
    assert r2.shape == (6, 3)
    for i in range(6):
        for j in range(3):
            assert r2[i, j] == pytest.approx(squared_distance(rows[i], centers[j]))

def test_dimension_mismatch():
    with pytest.raises(KernelError, match="Dimension mismatch"):
        pairwise_squared_distances(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(KernelError):
        squared_distance([0.0, 1.0], [0.0])

def test_design_matrix_blocks(rng):
    rows = rng.normal(size=(7, 2))
    centers = rows[:4]
    spec = KernelSpec.multi_zeta("rbf", 0.8, (1.5, 3.0))
    B = design_matrix(rows, centers, spec)
    assert B.shape == (7, 12)
    for z, length in enumerate(spec.lengths):
        block = design_matrix(rows, centers, KernelSpec.single("rbf", length))
        assert_allclose(B[:, 4 * z:4 * (z + 1)], block)
    # centers are training rows, so each block has ones on its diagonal
    assert_allclose(np.diag(B[:4, :4]), 1.0)
    assert np.all((B > 0.0) & (B <= 1.0))

def test_square_covariance_matrix(rng):
    points = rng.normal(size=(5, 3))
    K = square_covariance_matrix(points, "matern52", 1.1, delta=0.25)
    assert_allclose(K, K.T)
    assert_allclose(np.diag(K), 1.25)
    assert np.all(np.linalg.eigvalsh(K) > 0.0)
    with pytest.raises(KernelError):
        square_covariance_matrix(points, "rbf", 1.0, delta=-1.0)

@pytest.mark.parametrize("family,l,r2,expected", [
    (KernelFamily.MATERN32, 1.0, 3.0, 0.1991483),
    (KernelFamily.SQUARED_EXPONENTIAL, 5.0, 25.0, 0.6065307),
    (KernelFamily.EXPONENTIAL, 2.0, 4.0, math.exp(-1.0)),
])
def test_tabulated_values(family, l, r2, expected):
    assert kernel_value(family, l, r2) == pytest.approx(expected, abs=5e-8)

def test_two_point_double_zeta_matrix():
    points = np.array([[0.0], [2.0]])
    B = design_matrix(points, points, KernelSpec.multi_zeta("rbf", math.sqrt(2.0), (2.0,)))
    assert B.shape == (2, 4)
    assert_allclose(B[:, :2], [[1.0, 0.3678794], [0.3678794, 1.0]], atol=5e-8)
    assert_allclose(B[:, 2:], [[1.0, 0.7788008], [0.7788008, 1.0]], atol=5e-8)

@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_design_matrix_translation_invariant(rng, family):
    rows = rng.normal(size=(9, 3))
    centers = rng.normal(size=(4, 3))
    shift = rng.normal(scale=5.0, size=3)
    spec = KernelSpec.multi_zeta(family, 0.9, (1.5,))
    assert_allclose(design_matrix(rows + shift, centers + shift, spec), design_matrix(rows, centers, spec),
                    rtol=0.0, atol=1e-12)

@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_unregularized_covariance_is_psd(rng, family):
    for _ in range(20):
        points = rng.normal(size=(int(rng.integers(2, 9)), 2))
        K = square_covariance_matrix(points, family, float(rng.uniform(0.3, 2.0)))
        assert_allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() >= -1e-10
