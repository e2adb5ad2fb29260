import json
import os
import re
from copy import deepcopy
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pandas.api.types import is_numeric_dtype

from pairsim.config import TrainConfig
from pairsim.data import LabeledDataset
from pairsim.errors import CheckpointError, DatasetParseError, InvalidParamsError
from pairsim.loss_type import Paradigm
from pairsim.metrics import MetricsReport
from pairsim.model import EmbeddingModel
from pairsim.trainer import RunRecord

PathLike = Union[str, Path]

CHECKPOINT_FORMAT = "pairsim-ckpt-v1"

FLOAT_FORMAT = "%.17g"
GRADFIELD_FLOAT_FORMAT = "%.6g"


def _ensure_parent(out_path: PathLike) -> None:
    out_dir = Path(out_path).parent
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)


def _write_csv(frame: pd.DataFrame, out_path: PathLike, float_format: str = FLOAT_FORMAT) -> None:
    _ensure_parent(out_path)
    frame.to_csv(out_path, index=False, float_format=float_format, lineterminator="\n")


def convert_numpy_types(data):
    """Recursively turn numpy scalars and arrays into plain Python values."""
    if isinstance(data, dict):
        return {str(key): convert_numpy_types(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [convert_numpy_types(value) for value in data]
    if isinstance(data, np.ndarray):
        return data.tolist()
    if isinstance(data, np.integer):
        return int(data)
    if isinstance(data, np.floating):
        return float(data)
    return data


def export_results_to_json(results: dict, out_path: PathLike) -> None:
    _ensure_parent(out_path)

    results_jsonified = convert_numpy_types(deepcopy(results))

    with open(out_path, "w") as f:
        json.dump(results_jsonified, f, indent=4, sort_keys=True)
        f.write("\n")


# dataset CSV: header `label,f0,f1,...`, one row per sample


def save_dataset(path: PathLike, dataset: LabeledDataset) -> None:
    frame = pd.DataFrame(
        dataset.features, columns=[f"f{k}" for k in range(dataset.din)]
    )
    frame.insert(0, "label", dataset.labels)
    _write_csv(frame, path)


_PARSER_LINE = re.compile(r"line (\d+)")


def load_dataset(path: PathLike) -> LabeledDataset:
    """Read a dataset CSV. Line numbers in errors count the header as line 1."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise DatasetParseError("no rows", line=1)
    except pd.errors.ParserError as err:
        match = _PARSER_LINE.search(str(err))
        line = int(match.group(1)) if match else None
        raise DatasetParseError(f"malformed row: {err}", line=line)

    columns = list(frame.columns)
    expected = ["label"] + [f"f{k}" for k in range(len(columns) - 1)]
    if len(columns) < 2 or columns != expected:
        raise DatasetParseError(
            f"header must be label,f0,f1,... got {','.join(map(str, columns))}", line=1
        )
    if frame.empty:
        raise DatasetParseError("no rows", line=2)

    for column in columns:
        if is_numeric_dtype(frame[column]):
            continue
        coerced = pd.to_numeric(frame[column], errors="coerce")
        bad = coerced.isna() & frame[column].notna()
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DatasetParseError(
            f"non-numeric value {frame[column].iloc[row]!r} in column {column}", line=row + 2
        )

    missing = frame.isna().any(axis=1).to_numpy()
    if missing.any():
        row = int(np.flatnonzero(missing)[0])
        raise DatasetParseError("missing value (row shorter than header)", line=row + 2)

    labels = frame["label"].to_numpy(dtype=np.float64)
    unknown = (labels < 0) | (labels != np.round(labels))
    if unknown.any():
        row = int(np.flatnonzero(unknown)[0])
        raise DatasetParseError(f"unknown label {labels[row]!r}", line=row + 2)

    # ids must cover [0, N); with a gap, the first id >= N is the unknown one
    n_seen = np.unique(labels).size
    beyond = labels >= n_seen
    if beyond.any():
        row = int(np.flatnonzero(beyond)[0])
        raise DatasetParseError(
            f"unknown label {int(labels[row])}: {n_seen} classes present, ids must cover 0..{n_seen - 1}",
            line=row + 2,
        )

    features = frame[columns[1:]].to_numpy(dtype=np.float64)
    try:
        return LabeledDataset(features, labels.astype(np.int64))
    except InvalidParamsError as err:
        raise DatasetParseError(str(err))


# checkpoint: sorted-key JSON document tagged with CHECKPOINT_FORMAT


@dataclass
class Checkpoint:
    model: EmbeddingModel
    paradigm: Paradigm
    config: Optional[TrainConfig]


def save_checkpoint(
    path: PathLike,
    model: EmbeddingModel,
    config: Optional[TrainConfig] = None,
    paradigm: Optional[Paradigm] = None,
) -> None:
    if paradigm is None:
        paradigm = config.paradigm if config is not None else Paradigm.PAIR_WISE

    document = {
        "format": CHECKPOINT_FORMAT,
        "din": model.din,
        "dim": model.dim,
        "hidden": model.hidden,
        "n_classes": model.n_classes,
        "paradigm": paradigm.value,
        "layers": [layer.tolist() for layer in model.layers],
        "class_weights": None if model.class_weights is None else model.class_weights.tolist(),
        "config": None if config is None else config.to_dict(),
    }

    _ensure_parent(path)
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")


def load_checkpoint(path: PathLike, din: Optional[int] = None) -> Checkpoint:
    """Read a checkpoint; `din`, when given, must match the stored input width."""
    try:
        with open(path) as f:
            document = json.load(f)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}")
    except json.JSONDecodeError as err:
        raise CheckpointError(f"checkpoint is not valid JSON: {err}")

    version = document.get("format") if isinstance(document, dict) else None
    if version != CHECKPOINT_FORMAT:
        raise CheckpointError(
            f"unsupported checkpoint format {version!r}, expected {CHECKPOINT_FORMAT!r}"
        )

    try:
        model = EmbeddingModel(
            [np.asarray(layer, dtype=np.float64) for layer in document["layers"]],
            None
            if document["class_weights"] is None
            else np.asarray(document["class_weights"], dtype=np.float64),
        )
        paradigm = Paradigm(document["paradigm"])
        config = None if document["config"] is None else TrainConfig.from_dict(document["config"])
    except (KeyError, TypeError, ValueError) as err:
        raise CheckpointError(f"corrupt checkpoint: {err}")

    if model.din != document["din"] or model.dim != document["dim"]:
        raise CheckpointError(
            f"stored dims ({document['din']}, {document['dim']}) do not match the parameters"
        )
    if din is not None and model.din != din:
        raise CheckpointError(f"checkpoint expects {model.din} input features, data has {din}")

    return Checkpoint(model, paradigm, config)


# training record and analysis tables


def save_record(path: PathLike, record: RunRecord) -> None:
    _write_csv(record.to_frame(), path)


def save_snapshots(path: PathLike, record: RunRecord) -> None:
    _write_csv(record.snapshots_frame(), path)


def save_gradient_field(path: PathLike, field_frame: pd.DataFrame) -> None:
    _write_csv(field_frame[["sn", "sp", "d_sn", "d_sp", "loss"]], path, GRADFIELD_FLOAT_FORMAT)


def save_scatter(path: PathLike, points: np.ndarray) -> None:
    frame = pd.DataFrame(np.asarray(points).reshape(-1, 2), columns=["sn", "sp"])
    _write_csv(frame, path)


def save_table(path: PathLike, frame: pd.DataFrame) -> None:
    _write_csv(frame, path)


def save_metrics_report(csv_path: PathLike, json_path: PathLike, report: MetricsReport) -> None:
    """Flat `metric,key,value` CSV plus a JSON summary of the same report."""
    _write_csv(pd.DataFrame(report.rows(), columns=["metric", "key", "value"]), csv_path)
    export_results_to_json(report.jsonify(), json_path)
