import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.dataset import (CSVFormatError, Dataset, DatasetError, Normalizer, load_csv, morse_coupled_potential,
                          save_csv, split, standardize, synth_potential, training_size)

def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path

class TestLoadCSV:
    def test_single_row(self, tmp_path):
        dataset = load_csv(write(tmp_path, "x1,x2,y\n0,0,1.5\n"))
        assert dataset.dimension == 2
        assert dataset.n_total == 1
        assert dataset.targets[0] == 1.5
        assert dataset.input_names == ("x1", "x2")
        assert dataset.target_name == "y"

    def test_row_order_and_scientific_notation(self, tmp_path):
        dataset = load_csv(write(tmp_path, "r,e\n1e-3,2\n-4.5E2,3\n7,1\n\n"))
        assert_array_equal(dataset.inputs[:, 0], [1e-3, -450.0, 7.0])
        assert_array_equal(dataset.targets, [2.0, 3.0, 1.0])

    def test_non_numeric_cell_names_line(self, tmp_path):
        with pytest.raises(CSVFormatError, match="non-numeric") as excinfo:
            load_csv(write(tmp_path, "x1,x2,y\n1,2,3\n0,abc,1\n"))
        assert excinfo.value.line == 3

    def test_header_only(self, tmp_path):
        with pytest.raises(CSVFormatError, match="zero data rows"):
            load_csv(write(tmp_path, "x1,x2,y\n"))

    def test_long_row_is_ragged(self, tmp_path):
        with pytest.raises(CSVFormatError, match="ragged"):
            load_csv(write(tmp_path, "x1,x2,y\n1,2,3\n1,2,3,4\n"))

    def test_short_row(self, tmp_path):
        with pytest.raises(CSVFormatError):
            load_csv(write(tmp_path, "x1,x2,y\n1,2,3\n1,2\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "absent.csv")

    def test_save_then_load(self, tmp_path):
        original = synth_potential(3, 10, seed=5)
        loaded = load_csv(save_csv(original, tmp_path / "synth.csv"), target_unit="dimensionless")
        assert_array_equal(loaded.inputs, original.inputs)
        assert_array_equal(loaded.targets, original.targets)
        assert loaded.input_names == original.input_names

class TestStandardize:
    def test_symmetric_column_unchanged(self):
        standardized, _ = standardize(Dataset(np.array([[-1.0], [1.0]]), np.zeros(2)))
        assert_allclose(standardized.inputs[:, 0], [-1.0, 1.0])

    def test_population_std(self):
        standardized, normalizer = standardize(Dataset(np.array([[0.0], [2.0]]), np.array([5.0, 6.0])))
        assert_allclose(standardized.inputs[:, 0], [-1.0, 1.0])
        assert normalizer.means[0] == 1.0
        assert normalizer.stds[0] == 1.0
        assert_array_equal(standardized.targets, [5.0, 6.0])

    def test_constant_column_named(self):
        dataset = Dataset(np.array([[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]]), np.zeros(3), input_names=("a", "b"))
        with pytest.raises(DatasetError, match="column b has zero variance"):
            standardize(dataset)

    def test_moments_and_inverse(self, rng):
        inputs = rng.normal(5.0, 30.0, size=(200, 4))
        standardized, normalizer = standardize(Dataset(inputs, np.zeros(200)))
        assert np.all(np.abs(standardized.inputs.mean(axis=0)) <= 1e-10)
        assert np.all(np.abs(standardized.inputs.var(axis=0) - 1.0) <= 1e-10)
        assert_allclose(normalizer.invert(standardized.inputs), inputs, rtol=0, atol=1e-12 * np.abs(inputs).max())

    def test_normalizer_dict(self):
        normalizer = Normalizer(np.array([1.0, -2.0]), np.array([0.5, 3.0]))
        restored = Normalizer.from_dict(normalizer.to_dict())
        assert_array_equal(restored.means, normalizer.means)
        assert_array_equal(restored.stds, normalizer.stds)

class TestSplit:
    @pytest.mark.parametrize("n_centers,expected", [(250, 350), (2000, 2800), (20, 28), (1, 1)])
    def test_training_size(self, n_centers, expected):
        assert training_size(n_centers, 1.4) == expected

    def test_indices(self):
        dataset = synth_potential(2, 100, seed=1)
        indices = split(dataset, 20, 1.4, test_size=30, seed=99)
        assert (indices.n_centers, indices.n_train, indices.n_test) == (20, 28, 30)
        assert_array_equal(indices.center_idx, indices.train_idx[:20])
        assert not set(indices.train_idx) & set(indices.test_idx)
        assert max(indices.train_idx.max(), indices.test_idx.max()) < 100

    def test_deterministic(self):
        dataset = synth_potential(2, 100, seed=1)
        first = split(dataset, 10, seed=3)
        second = split(dataset, 10, seed=3)
        assert_array_equal(first.train_idx, second.train_idx)
        assert_array_equal(first.test_idx, second.test_idx)
        assert not np.array_equal(first.train_idx, split(dataset, 10, seed=4).train_idx)

    def test_default_test_size_takes_remainder(self):
        indices = split(synth_potential(1, 50, seed=1), 10, seed=0)
        assert indices.n_test == 50 - 14

    def test_insufficient_rows(self):
        with pytest.raises(DatasetError, match="need 64 .* has 50"):
            split(synth_potential(1, 50, seed=1), 25, 1.4, test_size=29)

    def test_disjoint_centers(self):
        indices = split(synth_potential(2, 100, seed=1), 10, 1.4, test_size=20, seed=5, disjoint_centers=True)
        assert indices.n_train == 14
        assert not set(indices.center_idx) & set(indices.train_idx)
        assert not set(indices.center_idx) & set(indices.test_idx)

class TestSynthPotential:
    def test_closed_form_values(self):
        assert morse_coupled_potential(np.zeros(5))[0] == 0.0
        single = (1.0 - math.exp(-0.5)) ** 2
        assert morse_coupled_potential([1.0])[0] == pytest.approx(0.1548181, abs=1e-7)
        assert morse_coupled_potential([1.0, 1.0])[0] == pytest.approx(2 * single + 0.1)
        assert morse_coupled_potential([1.0, 1.0])[0] == pytest.approx(0.4096363, abs=1e-7)

    def test_permutation_symmetry(self, rng):
        x = rng.uniform(-1.5, 1.5, size=(10, 6))
        assert_allclose(morse_coupled_potential(x), morse_coupled_potential(x[:, ::-1]), rtol=1e-12)

    def test_sampling(self):
        dataset = synth_potential(4, 300, seed=8, box_halfwidth=2.0)
        assert dataset.inputs.shape == (300, 4)
        assert np.all(np.abs(dataset.inputs) <= 2.0)
        assert dataset.target_unit == "dimensionless"
        assert_array_equal(dataset.inputs, synth_potential(4, 300, seed=8, box_halfwidth=2.0).inputs)

    def test_invalid_parameters(self):
        with pytest.raises(DatasetError):
            synth_potential(0, 10)
        with pytest.raises(DatasetError):
            synth_potential(2, 10, box_halfwidth=0.0)
