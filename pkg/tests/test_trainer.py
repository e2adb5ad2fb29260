from unittest.mock import Mock

import numpy as np
import pytest

from pairsim.config import TrainConfig
from pairsim.data import Batch, LabeledDataset
from pairsim.errors import InvalidParamsError, TrainingDivergedError
from pairsim.grads import ParamGradients, _anchor_groups, backprop_to_params, batch_objective
from pairsim.loss_type import LossType, Paradigm, SimilarityKind
from pairsim.losses import make_params
from pairsim.model import EmbeddingModel, init_model
from pairsim.sampler import pk_sample
from pairsim.trainer import train, train_step


def _zero_grads(model, batch, loss_type, params, paradigm):
    return ParamGradients(
        loss=0.5,
        layer_grads=[np.zeros_like(layer) for layer in model.layers],
        class_weight_grad=None if model.class_weights is None else np.zeros_like(model.class_weights),
        mean_sp=0.0,
        mean_sn=0.0,
        n_anchors=len(batch),
        hardest_pairs=np.zeros((len(batch), 2)),
    )


@pytest.fixture
def pair_config():
    return TrainConfig(
        paradigm=Paradigm.PAIR_WISE,
        loss=LossType.CIRCLE,
        gamma=64.0,
        m=0.25,
        lr=0.01,
        iterations=20,
        P=4,
        K=3,
        embed_dim=4,
        seed=5,
    )


class TestTrainStep:
    """Test suite for a single update."""

    def test_zero_gradient_stub_keeps_model(self, small_dataset, pair_config, rng):
        """Test that the update only depends on the injected gradients."""
        model = init_model(0, small_dataset.din, 4)
        batch = pk_sample(small_dataset, 4, 3, rng)
        updated, stats = train_step(model, batch, pair_config, grad_fn=_zero_grads)
        assert np.array_equal(updated.layers[0], model.layers[0])
        assert stats.loss == 0.5
        assert stats.grad_norm == 0.0

    def test_grad_fn_receives_loss_params(self, small_dataset, pair_config, rng):
        """Test that train_step passes the configured loss to the gradient function."""
        grad_fn = Mock(side_effect=_zero_grads)
        model = init_model(0, small_dataset.din, 4)
        train_step(model, pk_sample(small_dataset, 4, 3, rng), pair_config, grad_fn=grad_fn)
        _, _, loss_type, params, paradigm = grad_fn.call_args.args
        assert loss_type == LossType.CIRCLE
        assert params == make_params(LossType.CIRCLE, 64.0, 0.25)
        assert paradigm == Paradigm.PAIR_WISE

    def test_satisfied_triplet_batch_is_not_updated(self):
        """Test that a batch meeting every margin leaves the model unchanged."""
        features = np.array([[1.0, 0.0], [1.0, 0.01], [-1.0, 0.0], [-1.0, 0.01]])
        batch = Batch(features, np.array([0, 0, 1, 1]), np.arange(4))
        config = TrainConfig(loss=LossType.TRIPLET, gamma=1.0, m=0.3, P=2, K=2, embed_dim=2)
        model = EmbeddingModel.identity(2)
        updated, stats = train_step(model, batch, config)
        assert stats.loss == 0.0
        assert np.array_equal(updated.layers[0], model.layers[0])

    def test_circle_step_descends_frozen_objective(self, small_dataset, rng):
        """Test that a small step lowers the batch loss with the weights held at their values."""
        config = TrainConfig(loss=LossType.CIRCLE, gamma=64.0, m=0.25, P=4, K=3, embed_dim=4)
        params = make_params(config.loss, config.gamma, config.m)
        for seed in range(10):
            model = init_model(seed, small_dataset.din, 4)
            batch = pk_sample(small_dataset, 4, 3, rng)
            grads = backprop_to_params(model, batch, config.loss, params, config.paradigm)
            updated, _ = train_step(model, batch, config, lr=1e-5)
            before = batch_objective(model, batch, config.loss, params, config.paradigm, grads.alphas)
            after = batch_objective(updated, batch, config.loss, params, config.paradigm, grads.alphas)
            assert after < before

    def test_am_softmax_step_descends(self, small_dataset, rng):
        """Test that a small step lowers the AM-Softmax batch loss."""
        config = TrainConfig(loss=LossType.AM_SOFTMAX, gamma=16.0, m=0.35, P=4, K=3, embed_dim=4)
        params = make_params(config.loss, config.gamma, config.m)
        for seed in range(10):
            model = init_model(seed, small_dataset.din, 4)
            batch = pk_sample(small_dataset, 4, 3, rng)
            updated, stats = train_step(model, batch, config, lr=1e-4)
            after = batch_objective(updated, batch, config.loss, params, config.paradigm)
            assert after < stats.loss

    def test_non_finite_gradients_abort(self, small_dataset, pair_config, rng):
        """Test that a NaN loss raises with a diagnostic."""

        def nan_grads(*args):
            grads = _zero_grads(*args)
            grads.loss = float("nan")
            return grads

        model = init_model(0, small_dataset.din, 4)
        with pytest.raises(TrainingDivergedError, match="non-finite"):
            train_step(model, pk_sample(small_dataset, 4, 3, rng), pair_config, grad_fn=nan_grads)


class TestTrain:
    """Test suite for full training runs."""

    def test_row_count_and_columns(self, small_dataset, pair_config):
        """Test one finite row per iteration."""
        record = train(small_dataset, pair_config)
        frame = record.to_frame()
        assert len(record) == pair_config.iterations
        assert list(frame.columns) == ["iter", "mean_sp", "mean_sn", "loss", "lr"]
        assert np.all(np.isfinite(frame.to_numpy()))

    def test_deterministic(self, small_dataset, pair_config):
        """Test that identical inputs give bit-identical records."""
        a = train(small_dataset, pair_config)
        b = train(small_dataset, pair_config)
        assert a.to_frame().equals(b.to_frame())
        assert np.array_equal(a.model.layers[0], b.model.layers[0])

    def test_seed_changes_run(self, small_dataset, pair_config):
        """Test that another seed gives another trajectory."""
        a = train(small_dataset, pair_config)
        b = train(small_dataset, pair_config.with_overrides(seed=6))
        assert not a.to_frame().equals(b.to_frame())

    def test_zero_iterations(self, small_dataset, pair_config):
        """Test that no iterations leave the model unchanged and the record empty."""
        model = init_model(0, small_dataset.din, 4)
        record = train(small_dataset, pair_config.with_overrides(iterations=0), model=model)
        assert len(record) == 0
        assert record.model is model
        assert record.snapshots_frame().empty

    def test_learning_rate_schedule(self, small_dataset, pair_config):
        """Test that the recorded rate follows the default milestones."""
        frame = train(small_dataset, pair_config).to_frame()
        assert np.isclose(frame["lr"].iloc[0], 0.01)
        assert np.isclose(frame["lr"].iloc[10], 0.001)
        assert np.isclose(frame["lr"].iloc[19], 1e-5)

    def test_snapshots(self, small_dataset, pair_config):
        """Test per-anchor hardest pairs every snapshot_every iterations."""
        record = train(small_dataset, pair_config.with_overrides(snapshot_every=5))
        assert [iteration for iteration, _ in record.snapshots] == [0, 5, 10, 15]
        frame = record.snapshots_frame()
        assert list(frame.columns) == ["iter", "sn_max", "sp_min"]
        assert len(frame) == 4 * 12

    def test_class_level_separable(self):
        """Test that class-level training on two separable classes pulls sp up and sn down."""
        features = np.concatenate([
            np.random.default_rng(0).normal([1.0, 0.0], 0.05, size=(20, 2)),
            np.random.default_rng(1).normal([0.0, 1.0], 0.05, size=(20, 2)),
        ])
        dataset = LabeledDataset(features, np.repeat([0, 1], 20))
        # class weights start close together, so every sample sees a large sn
        model = EmbeddingModel.identity(2, class_weights=np.array([[1.0, 0.6], [0.6, 1.0]]))
        config = TrainConfig(
            paradigm=Paradigm.CLASS_LEVEL,
            loss=LossType.AM_SOFTMAX,
            gamma=8.0,
            m=0.2,
            lr=0.02,
            lr_schedule=(),
            iterations=200,
            batch_size=8,
            embed_dim=2,
            seed=1,
        )
        frame = train(dataset, config, model=model).to_frame()
        assert frame["mean_sn"].iloc[0] > 0.4
        assert frame["mean_sp"].iloc[-10:].mean() > frame["mean_sp"].iloc[:10].mean()
        assert frame["mean_sn"].iloc[-10:].mean() < frame["mean_sn"].iloc[:10].mean()

    def test_class_level_anchor_sizes(self, small_dataset):
        """Test that every class-level anchor sees K = 1 and L = N - 1."""
        model = init_model(0, small_dataset.din, 4, n_classes=small_dataset.n_classes)
        batch = Batch.from_indices(small_dataset, [0, 6, 12, 18])
        _, _, _, anchors = _anchor_groups(model, batch, Paradigm.CLASS_LEVEL, SimilarityKind.COSINE)
        assert len(anchors) == 4
        assert all((group.K, group.L) == (1, small_dataset.n_classes - 1) for *_, group in anchors)

    def test_wrong_model_width(self, small_dataset, pair_config):
        """Test that a model of the wrong input width is rejected."""
        with pytest.raises(InvalidParamsError):
            train(small_dataset, pair_config, model=init_model(0, small_dataset.din + 1, 4))


if __name__ == "__main__":
    pytest.main([__file__])
