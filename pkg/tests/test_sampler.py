import numpy as np
import pytest

from pairsim.config import ClusterSpec
from pairsim.data import LabeledDataset, gen_clusters
from pairsim.errors import SamplingError
from pairsim.sampler import flat_sample, pk_sample


@pytest.fixture
def benchmark_dataset():
    return gen_clusters(ClusterSpec(n_classes=16, per_class=20, dim=32))


class TestPkSample:
    """Test suite for P-K sampling."""

    def test_batch_size(self, benchmark_dataset, rng):
        """Test P=16, K=5 -> 80 rows."""
        batch = pk_sample(benchmark_dataset, 16, 5, rng)
        assert len(batch) == 80

    def test_every_class_once_when_p_is_n(self, benchmark_dataset, rng):
        """Test that P equal to the class count draws every class K times."""
        batch = pk_sample(benchmark_dataset, 16, 5, rng)
        assert np.array_equal(np.bincount(batch.labels, minlength=16), np.full(16, 5))

    def test_distinct_samples(self, benchmark_dataset, rng):
        """Test that no row is drawn twice."""
        batch = pk_sample(benchmark_dataset, 8, 5, rng)
        assert len(np.unique(batch.indices)) == 40
        assert len(np.unique(batch.labels)) == 8

    def test_grouped_by_class(self, benchmark_dataset, rng):
        """Test that the K samples of a class are contiguous."""
        batch = pk_sample(benchmark_dataset, 4, 3, rng)
        assert np.all(batch.labels.reshape(4, 3) == batch.labels.reshape(4, 3)[:, :1])

    def test_deterministic_per_state(self, benchmark_dataset):
        """Test that equal generator states give equal batches."""
        a = pk_sample(benchmark_dataset, 6, 4, np.random.default_rng(9))
        b = pk_sample(benchmark_dataset, 6, 4, np.random.default_rng(9))
        assert np.array_equal(a.indices, b.indices)

    def test_too_few_classes(self, benchmark_dataset, rng):
        """Test that P above the class count is rejected."""
        with pytest.raises(SamplingError):
            pk_sample(benchmark_dataset, 17, 2, rng)

    def test_small_class(self, rng):
        """Test that a class with fewer than K samples is rejected."""
        dataset = LabeledDataset(np.eye(5), np.array([0, 0, 0, 1, 1]))
        with pytest.raises(SamplingError, match="fewer than K"):
            pk_sample(dataset, 2, 3, rng)


class TestFlatSample:
    """Test suite for flat sampling."""

    def test_size_and_uniqueness(self, small_dataset, rng):
        """Test that rows are distinct."""
        batch = flat_sample(small_dataset, 10, rng)
        assert len(np.unique(batch.indices)) == 10

    @pytest.mark.parametrize("size", [0, 25])
    def test_bad_size(self, small_dataset, rng, size):
        """Test that the batch must fit in the dataset."""
        with pytest.raises(SamplingError):
            flat_sample(small_dataset, size, rng)


if __name__ == "__main__":
    pytest.main([__file__])
