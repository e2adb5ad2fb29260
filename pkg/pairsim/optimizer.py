from abc import ABC, abstractmethod
from typing import Sequence, Tuple

from pairsim.errors import InvalidParamsError
from pairsim.grads import ParamGradients
from pairsim.model import EmbeddingModel


class StepSchedule:
    """Piecewise-constant learning rate.

    Each (fraction, multiplier) milestone scales the rate once the iteration
    reaches fraction * iterations; milestones compound.
    """

    def __init__(
        self,
        base_lr: float,
        iterations: int,
        milestones: Sequence[Tuple[float, float]] = (),
    ):
        if not base_lr > 0:
            raise InvalidParamsError(f"learning rate must be positive, got {base_lr}")
        self.base_lr = base_lr
        self.iterations = iterations
        self.milestones = sorted(milestones)

    def learning_rate(self, iteration: int) -> float:
        lr = self.base_lr
        for fraction, multiplier in self.milestones:
            if iteration >= fraction * self.iterations:
                lr *= multiplier
        return lr


class ParameterOptimizer(ABC):

    @abstractmethod
    def step(self, model: EmbeddingModel, grads: ParamGradients, lr: float) -> EmbeddingModel:
        pass


class SGD(ParameterOptimizer):
    """Plain gradient descent, no momentum and no weight decay."""

    def step(self, model: EmbeddingModel, grads: ParamGradients, lr: float) -> EmbeddingModel:
        assert len(grads.layer_grads) == len(model.layers), "gradient/layer count mismatch"

        layers = [layer - lr * grad for layer, grad in zip(model.layers, grads.layer_grads)]

        class_weights = model.class_weights
        if class_weights is not None and grads.class_weight_grad is not None:
            class_weights = class_weights - lr * grads.class_weight_grad
        elif class_weights is not None:
            class_weights = class_weights.copy()

        return EmbeddingModel(layers, class_weights)
