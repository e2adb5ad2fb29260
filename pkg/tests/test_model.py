import numpy as np
import pytest

from pairsim.errors import DegenerateFeatureError, InvalidParamsError
from pairsim.model import EmbeddingModel, init_model


class TestInitModel:
    """Test suite for init_model."""

    def test_same_seed_same_parameters(self):
        """Test that a seed fully determines the parameters."""
        a = init_model(42, 8, 4, n_classes=3, hidden=6)
        b = init_model(42, 8, 4, n_classes=3, hidden=6)
        for x, y in zip(a.parameters(), b.parameters()):
            assert np.array_equal(x, y)

    def test_different_seed_differs(self):
        """Test that different seeds give different parameters."""
        assert not np.array_equal(init_model(1, 8, 4).layers[0], init_model(2, 8, 4).layers[0])

    def test_single_layer_without_hidden(self):
        """Test that omitting hidden gives one linear layer."""
        model = init_model(0, 8, 4)
        assert len(model.layers) == 1
        assert model.hidden is None
        assert model.class_weights is None

    def test_shapes(self):
        """Test layer and class-weight shapes."""
        model = init_model(0, 8, 4, n_classes=5, hidden=6)
        assert [layer.shape for layer in model.layers] == [(8, 6), (6, 4)]
        assert model.class_weights.shape == (5, 4)
        assert (model.din, model.dim, model.hidden, model.n_classes) == (8, 4, 6, 5)

    def test_uniform_bound(self):
        """Test that weights stay within 1/sqrt(fan_in)."""
        model = init_model(0, 16, 4)
        assert np.all(np.abs(model.layers[0]) <= 1.0 / np.sqrt(16))

    def test_initial_similarities_near_zero(self, rng):
        """Test that random inputs embed to nearly orthogonal directions at D=32."""
        units = init_model(5, 32, 32).embed_units(rng.normal(size=(100, 32)))
        scores = units @ units.T
        off_diagonal = scores[~np.eye(100, dtype=bool)]
        assert abs(off_diagonal.mean()) < 0.3

    def test_non_positive_dims(self):
        """Test that zero dimensions are rejected."""
        with pytest.raises(InvalidParamsError):
            init_model(0, 0, 4)


class TestEmbeddingModel:
    """Test suite for EmbeddingModel."""

    def test_embeddings_are_unit_norm(self, rng):
        """Test that every embedding has norm 1 within 1e-9."""
        units = init_model(0, 6, 3, hidden=4).embed_units(rng.normal(size=(20, 6)) * 50.0)
        assert np.all(np.abs(np.linalg.norm(units, axis=1) - 1.0) < 1e-9)

    def test_zero_embedding_raises(self):
        """Test that an input mapped to zero is a degenerate feature."""
        with pytest.raises(DegenerateFeatureError):
            EmbeddingModel.identity(2).embed(np.zeros((1, 2)))

    def test_width_mismatch(self):
        """Test that inputs of the wrong width are rejected."""
        with pytest.raises(InvalidParamsError):
            EmbeddingModel.identity(3).embed(np.ones((2, 4)))

    def test_embedding_dim_at_least_two(self):
        """Test that D=1 is rejected."""
        with pytest.raises(InvalidParamsError):
            EmbeddingModel([np.ones((3, 1))])

    def test_layers_must_chain(self):
        """Test that mismatched layer shapes are rejected."""
        with pytest.raises(InvalidParamsError):
            EmbeddingModel([np.ones((3, 4)), np.ones((5, 2))])

    def test_non_finite_parameters(self):
        """Test that NaN weights are rejected."""
        with pytest.raises(InvalidParamsError):
            EmbeddingModel([np.full((2, 2), np.nan)])

    def test_class_weight_width(self):
        """Test that class weights must match the embedding dim."""
        with pytest.raises(InvalidParamsError):
            EmbeddingModel.identity(3, np.ones((4, 2)))

    def test_copy_is_independent(self):
        """Test that modifying a copy leaves the original untouched."""
        model = init_model(0, 3, 2, n_classes=2)
        clone = model.copy()
        clone.layers[0][0, 0] += 1.0
        clone.class_weights[0, 0] += 1.0
        assert model.layers[0][0, 0] != clone.layers[0][0, 0]
        assert model.class_weights[0, 0] != clone.class_weights[0, 0]

    def test_backward_kills_radial_direction(self, rng):
        """Test that a gradient along the embedding itself has no effect."""
        model = EmbeddingModel.identity(3)
        units, cache = model.embed(rng.normal(size=(4, 3)))
        grads = model.backward(cache, 2.5 * units)
        assert np.allclose(grads[0], 0.0)


if __name__ == "__main__":
    pytest.main([__file__])
