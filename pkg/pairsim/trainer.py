import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from pairsim.config import TrainConfig
from pairsim.data import Batch, LabeledDataset
from pairsim.errors import InvalidParamsError, TrainingDivergedError
from pairsim.grads import ParamGradients, backprop_to_params
from pairsim.loss_type import Paradigm
from pairsim.losses import make_params
from pairsim.model import EmbeddingModel, init_model
from pairsim.optimizer import SGD, ParameterOptimizer, StepSchedule
from pairsim.sampler import flat_sample, pk_sample

logger = logging.getLogger(__name__)

GradFn = Callable[..., ParamGradients]


@dataclass
class StepStats:
    loss: float
    mean_sp: float
    mean_sn: float
    lr: float
    n_anchors: int
    grad_norm: float
    hardest_pairs: np.ndarray


@dataclass
class TrajectoryRow:
    iteration: int
    mean_sp: float
    mean_sn: float
    loss: float
    lr: float


@dataclass
class RunRecord:
    """Per-iteration batch statistics of a training run and its final model."""

    rows: List[TrajectoryRow]
    model: EmbeddingModel
    config: TrainConfig
    # (iteration, per-anchor (max sn, min sp) rows) taken every `snapshot_every` steps
    snapshots: List[Tuple[int, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "iter": [row.iteration for row in self.rows],
                "mean_sp": [row.mean_sp for row in self.rows],
                "mean_sn": [row.mean_sn for row in self.rows],
                "loss": [row.loss for row in self.rows],
                "lr": [row.lr for row in self.rows],
            }
        )

    def snapshots_frame(self) -> pd.DataFrame:
        frames = [
            pd.DataFrame({"iter": iteration, "sn_max": points[:, 0], "sp_min": points[:, 1]})
            for iteration, points in self.snapshots
        ]
        if not frames:
            return pd.DataFrame(columns=["iter", "sn_max", "sp_min"])
        return pd.concat(frames, ignore_index=True)

    def final_gap(self) -> float:
        """mean_sp - mean_sn of the last recorded iteration."""
        last = self.rows[-1]
        return last.mean_sp - last.mean_sn


def _grad_norm(grads: ParamGradients) -> float:
    squares = sum(float(np.sum(grad**2)) for grad in grads.layer_grads)
    if grads.class_weight_grad is not None:
        squares += float(np.sum(grads.class_weight_grad**2))
    return float(np.sqrt(squares))


def train_step(
    model: EmbeddingModel,
    batch: Batch,
    config: TrainConfig,
    lr: Optional[float] = None,
    grad_fn: GradFn = backprop_to_params,
    optimizer: Optional[ParameterOptimizer] = None,
) -> Tuple[EmbeddingModel, StepStats]:
    """One SGD update on `batch`.

    `grad_fn` computes the batch loss and parameter gradients; the update
    itself never depends on which loss produced them.
    """
    lr = config.lr if lr is None else lr
    optimizer = optimizer or SGD()
    params = make_params(config.loss, config.gamma, config.m)

    grads = grad_fn(model, batch, config.loss, params, config.paradigm)

    grad_norm = _grad_norm(grads)
    if not (np.isfinite(grads.loss) and np.isfinite(grad_norm)):
        raise TrainingDivergedError(
            f"non-finite loss {grads.loss} or gradient norm {grad_norm} "
            f"(loss={config.loss.value}, gamma={config.gamma}, m={config.m}, lr={lr})"
        )

    updated = optimizer.step(model, grads, lr)
    stats = StepStats(
        loss=grads.loss,
        mean_sp=grads.mean_sp,
        mean_sn=grads.mean_sn,
        lr=lr,
        n_anchors=grads.n_anchors,
        grad_norm=grad_norm,
        hardest_pairs=grads.hardest_pairs,
    )
    return updated, stats


def _initial_model(dataset: LabeledDataset, config: TrainConfig, seed) -> EmbeddingModel:
    n_classes = dataset.n_classes if config.paradigm == Paradigm.CLASS_LEVEL else None
    return init_model(seed, dataset.din, config.embed_dim, n_classes, config.hidden)


def train(
    dataset: LabeledDataset,
    config: TrainConfig,
    progress: bool = False,
    model: Optional[EmbeddingModel] = None,
) -> RunRecord:
    """Run `config.iterations` sample-and-update steps.

    Initialization and batch sampling draw from two independent children of
    `config.seed`, so a run is a pure function of (dataset, config).
    """
    init_seed, sample_seed = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(sample_seed)

    if model is None:
        model = _initial_model(dataset, config, init_seed)
    if model.din != dataset.din:
        raise InvalidParamsError(f"model expects {model.din} features, dataset has {dataset.din}")

    schedule = StepSchedule(config.lr, config.iterations, config.lr_schedule)
    optimizer = SGD()
    rows: List[TrajectoryRow] = []
    snapshots: List[Tuple[int, np.ndarray]] = []

    for iteration in tqdm(range(config.iterations), disable=not progress):
        if config.paradigm == Paradigm.PAIR_WISE:
            batch = pk_sample(dataset, config.P, config.K, rng)
        else:
            batch = flat_sample(dataset, config.batch_size, rng)

        lr = schedule.learning_rate(iteration)
        model, stats = train_step(model, batch, config, lr=lr, optimizer=optimizer)

        rows.append(TrajectoryRow(iteration, stats.mean_sp, stats.mean_sn, stats.loss, lr))
        if config.snapshot_every and iteration % config.snapshot_every == 0:
            snapshots.append((iteration, stats.hardest_pairs.copy()))

        logger.debug(
            "iter %d loss %.6f mean_sp %.4f mean_sn %.4f lr %.2e",
            iteration,
            stats.loss,
            stats.mean_sp,
            stats.mean_sn,
            lr,
        )

    if rows:
        logger.info(
            "trained %s (%s) for %d iterations: loss %.6f, mean_sp %.4f, mean_sn %.4f",
            config.loss.value,
            config.paradigm.value,
            config.iterations,
            rows[-1].loss,
            rows[-1].mean_sp,
            rows[-1].mean_sn,
        )

    return RunRecord(rows, model, config, snapshots)
