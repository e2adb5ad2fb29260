import pytest

from pairsim.config import (
    CIRCLE_PRESETS,
    GAMMA_SWEEP_VALUES,
    LOSS_DEFAULTS,
    M_SWEEP_VALUES,
    TrainConfig,
    config_hash,
)
from pairsim.errors import InvalidParamsError
from pairsim.loss_type import LossType, Paradigm


class TestTrainConfig:
    """Test suite for TrainConfig validation and serialization."""

    def test_defaults(self):
        """Test the face-recognition defaults and the P-K batch."""
        config = TrainConfig()
        assert (config.gamma, config.m) == (256.0, 0.25)
        assert (config.P, config.K) == (16, 5)

    @pytest.mark.parametrize("P, K", [(1, 5), (16, 1)])
    def test_pair_wise_batch_limits(self, P, K):
        """Test that pair-wise batches need P >= 2 and K >= 2."""
        with pytest.raises(InvalidParamsError):
            TrainConfig(P=P, K=K)

    def test_softmax_is_class_level_only(self):
        """Test that plain Softmax cannot be trained pair-wise."""
        with pytest.raises(InvalidParamsError):
            TrainConfig(loss=LossType.SOFTMAX, paradigm=Paradigm.PAIR_WISE)
        TrainConfig(loss=LossType.SOFTMAX, paradigm=Paradigm.CLASS_LEVEL, gamma=1.0, m=0.0)

    def test_bad_milestone(self):
        """Test that a milestone fraction must lie in (0, 1]."""
        with pytest.raises(InvalidParamsError):
            TrainConfig(lr_schedule=((1.5, 0.1),))

    def test_dict_round_trip(self):
        """Test to_dict and from_dict agree."""
        config = TrainConfig(loss=LossType.AM_SOFTMAX, gamma=64.0, m=0.35, hidden=8, seed=3)
        assert TrainConfig.from_dict(config.to_dict()) == config

    def test_unknown_keys_rejected(self):
        """Test that from_dict refuses keys it does not know."""
        with pytest.raises(InvalidParamsError, match="unknown"):
            TrainConfig.from_dict({"gamma": 1.0, "momentum": 0.9})

    def test_with_overrides(self):
        """Test that overrides return a new validated config."""
        config = TrainConfig().with_overrides(gamma=64.0)
        assert config.gamma == 64.0
        with pytest.raises(InvalidParamsError):
            TrainConfig().with_overrides(lr=-1.0)


class TestDefaults:
    """Test suite for loss defaults, presets and sweep grids."""

    def test_loss_defaults(self):
        """Test the per-loss fallbacks."""
        assert LOSS_DEFAULTS.get(LossType.CIRCLE) == (256.0, 0.25)
        assert LOSS_DEFAULTS.get(LossType.NORMFACE)[1] == 0.0

    def test_presets(self):
        """Test the task-family presets."""
        assert CIRCLE_PRESETS["reid"] == (128.0, 0.25)
        assert CIRCLE_PRESETS["fine_grained"] == (80.0, 0.4)

    def test_sweep_grids(self):
        """Test the gamma and m sweep values."""
        assert GAMMA_SWEEP_VALUES == (32.0, 64.0, 128.0, 256.0, 512.0, 1024.0)
        assert len(M_SWEEP_VALUES) == 11
        assert M_SWEEP_VALUES[0] == -0.2 and M_SWEEP_VALUES[-1] == 0.3
        assert 0.0 in M_SWEEP_VALUES


class TestConfigHash:
    """Test suite for config_hash."""

    def test_key_order_irrelevant(self):
        """Test that the hash is taken over the canonical form."""
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})

    def test_length_and_sensitivity(self):
        """Test a 10-digit hex digest that changes with the content."""
        digest = config_hash({"a": 1})
        assert len(digest) == 10
        assert digest != config_hash({"a": 2})


if __name__ == "__main__":
    pytest.main([__file__])
