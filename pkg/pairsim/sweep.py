import logging
from multiprocessing import Manager, Process
from typing import Sequence

import pandas as pd

from pairsim.config import TrainConfig
from pairsim.data import LabeledDataset
from pairsim.errors import InvalidParamsError
from pairsim.loss_type import SweepAxis
from pairsim.metric_compute_functions import compute_recall_at_k
from pairsim.timer import Timer
from pairsim.trainer import train

logger = logging.getLogger(__name__)


def train_and_store_result(
    index: int,
    dataset: LabeledDataset,
    config: TrainConfig,
    return_dict,
) -> None:
    record = train(dataset, config)
    units = record.model.embed_units(dataset.features)
    r1 = compute_recall_at_k(units, dataset.labels, [1])[1]

    return_dict[index] = {
        "r1": r1,
        "final_loss": record.rows[-1].loss if record.rows else float("nan"),
        "final_gap": record.final_gap() if record.rows else float("nan"),
    }


def sweep(
    dataset: LabeledDataset,
    base_config: TrainConfig,
    axis: SweepAxis,
    values: Sequence[float],
    workers: int = 0,
) -> pd.DataFrame:
    """Independent training run per value of `axis`, scored by R@1 on `dataset`.

    Every run keeps the base seed so only the swept hyper-parameter changes.
    With `workers` > 0 runs execute in that many worker processes at a time;
    the table is always in the order of `values`.
    """
    values = list(values)
    if not values:
        raise InvalidParamsError("sweep needs at least one value")

    configs = [base_config.with_overrides(**{axis.value: float(v)}) for v in values]

    manager = Manager() if workers > 0 else None
    return_dict = manager.dict() if manager is not None else {}

    timer = Timer()
    timer.start(f"sweep over {axis.value}")

    try:
        if workers > 0:
            for start in range(0, len(configs), workers):
                processes = []
                for i in range(start, min(start + workers, len(configs))):
                    p = Process(
                        target=train_and_store_result, args=(i, dataset, configs[i], return_dict)
                    )
                    p.start()
                    processes.append(p)

                for p in processes:
                    p.join()
        else:
            # Run directly without multiprocessing
            for i, config in enumerate(configs):
                train_and_store_result(i, dataset, config, return_dict)

        timer.stop(iterations=len(configs))

        missing = [values[i] for i in range(len(values)) if i not in return_dict]
        if missing:
            raise RuntimeError(f"sweep workers returned no result for {axis.value} = {missing}")

        table = pd.DataFrame(
            {
                "value": [float(v) for v in values],
                "r1": [return_dict[i]["r1"] for i in range(len(values))],
                "final_loss": [return_dict[i]["final_loss"] for i in range(len(values))],
                "final_gap": [return_dict[i]["final_gap"] for i in range(len(values))],
            }
        )
    finally:
        if manager is not None:
            manager.shutdown()

    logger.info(
        "%s sweep: R@1 spread %.4f over %d values",
        axis.value,
        table["r1"].max() - table["r1"].min(),
        len(values),
    )
    return table
