"""Command-line front end: gen | train | eval | gradfield | sweep.

Every subcommand writes its resolved configuration next to its outputs.
Failures print a single line ``error: <category>: <message>`` to stderr and
exit non-zero (2 for usage errors, 1 otherwise).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from pairsim.config import (
    CIRCLE_PRESETS,
    GAMMA_SWEEP_VALUES,
    LOSS_DEFAULTS,
    M_SWEEP_VALUES,
    ClusterSpec,
    GridSpec,
    TrainConfig,
    config_hash,
)
from pairsim.data import gen_clusters
from pairsim.errors import PairSimError
from pairsim.export import (
    export_results_to_json,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
    save_gradient_field,
    save_metrics_report,
    save_record,
    save_scatter,
    save_snapshots,
    save_table,
)
from pairsim.geometry import gradient_field
from pairsim.loss_type import LossType, Paradigm, SweepAxis
from pairsim.losses import CircleParams, make_params
from pairsim.metrics import DEFAULT_FAR_TARGETS, DEFAULT_KS, MetricsCalculator
from pairsim.sweep import sweep
from pairsim.trainer import train
from pairsim.visualizer import Visualizer

logger = logging.getLogger(__name__)

GRADFIELD_LOSSES = (LossType.TRIPLET.value, LossType.AM_SOFTMAX.value, LossType.CIRCLE.value)


class CliArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        sys.stderr.write(f"error: usage: {_one_line(message)}\n")
        sys.exit(2)


def _one_line(message: object) -> str:
    return " ".join(str(message).split())


def _add_common_flags(parser: argparse.ArgumentParser, default_seed: int = 0) -> None:
    parser.add_argument("--seed", type=int, default=default_seed)
    parser.add_argument("--out-dir", default="runs", help="root directory for run outputs")
    parser.add_argument("--tag", default=None, help="run directory prefix (default: subcommand)")
    parser.add_argument(
        "--config", default=None, help="JSON file whose keys override the parsed flags"
    )
    parser.add_argument("-v", "--verbose", action="store_true")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset CSV written by `gen`")
    parser.add_argument(
        "--paradigm", choices=[p.value for p in Paradigm], default=Paradigm.PAIR_WISE.value
    )
    parser.add_argument("--loss", choices=LossType.ids(), default=LossType.CIRCLE.value)
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--m", type=float, default=None)
    parser.add_argument("--preset", choices=sorted(CIRCLE_PRESETS), default=None)
    parser.add_argument("--lr", type=float, default=TrainConfig.lr)
    parser.add_argument("--iterations", type=int, default=TrainConfig.iterations)
    parser.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    parser.add_argument("--P", type=int, default=TrainConfig.P)
    parser.add_argument("--K", type=int, default=TrainConfig.K)
    parser.add_argument("--embed-dim", type=int, default=TrainConfig.embed_dim)
    parser.add_argument("--hidden", type=int, default=None)
    parser.add_argument("--snapshot-every", type=int, default=0)
    parser.add_argument("--progress", action="store_true")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="pairsim", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    gen = subparsers.add_parser("gen", help="generate a synthetic cluster dataset")
    _add_common_flags(gen, default_seed=ClusterSpec.seed)
    gen.add_argument("--classes", type=int, default=ClusterSpec.n_classes)
    gen.add_argument("--per-class", type=int, default=ClusterSpec.per_class)
    gen.add_argument("--dim", type=int, default=ClusterSpec.dim)
    gen.add_argument("--center-scale", type=float, default=ClusterSpec.center_scale)
    gen.add_argument("--sigma", type=float, default=ClusterSpec.noise_sigma)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(handler=cmd_gen)

    train_parser = subparsers.add_parser("train", help="train an embedding model")
    _add_common_flags(train_parser)
    _add_train_flags(train_parser)
    train_parser.add_argument("--plot", action="store_true")
    train_parser.set_defaults(handler=cmd_train)

    evaluate = subparsers.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_common_flags(evaluate)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--ks", type=int, nargs="+", default=list(DEFAULT_KS))
    evaluate.add_argument("--far", type=float, nargs="+", default=list(DEFAULT_FAR_TARGETS))
    evaluate.add_argument("--scatter", action="store_true", help="also write scatter.csv")
    evaluate.add_argument("--all-pairs", action="store_true")
    evaluate.add_argument(
        "--boundary-m",
        type=float,
        default=None,
        help="circle relaxation for the satisfied-side test (default: the checkpoint's m)",
    )
    evaluate.add_argument("--plot", action="store_true")
    evaluate.set_defaults(handler=cmd_eval)

    gradfield_parser = subparsers.add_parser("gradfield", help="tabulate single-pair gradient fields")
    _add_common_flags(gradfield_parser)
    gradfield_parser.add_argument("--loss", choices=LossType.ids(), nargs="+", default=list(GRADFIELD_LOSSES))
    gradfield_parser.add_argument("--gamma", type=float, default=None)
    gradfield_parser.add_argument("--m", type=float, nargs="+", default=None)
    gradfield_parser.add_argument("--resolution", type=int, default=GridSpec.resolution)
    gradfield_parser.add_argument("--range", choices=["unit", "full"], default="unit")
    gradfield_parser.set_defaults(handler=cmd_gradfield)

    sweep_parser = subparsers.add_parser("sweep", help="sweep gamma or m and report R@1")
    _add_common_flags(sweep_parser)
    _add_train_flags(sweep_parser)
    sweep_parser.add_argument("--axis", choices=[a.value for a in SweepAxis], default="gamma")
    sweep_parser.add_argument("--values", type=float, nargs="*", default=None)
    sweep_parser.add_argument("--workers", type=int, default=0)
    sweep_parser.set_defaults(handler=cmd_sweep)

    return parser


def _subcommand_actions(parser: argparse.ArgumentParser, command: str) -> dict:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return {a.dest: a for a in action.choices[command]._actions}
    return {a.dest: a for a in parser._actions}


def _coerce_config_value(parser: argparse.ArgumentParser, key: str, action: argparse.Action, value):
    """Convert a JSON value the way argparse would convert the same flag text."""
    if value is None and action.default is None:
        return None

    if action.nargs == 0:
        if not isinstance(value, bool):
            parser.error(f"config key {key!r} expects true or false, got {value!r}")
        return value

    many = action.nargs in ("+", "*") or isinstance(action.nargs, int)
    items = value if many else [value]
    if many and (not isinstance(value, list) or (action.nargs == "+" and not value)):
        parser.error(f"config key {key!r} expects a list, got {value!r}")

    converted = []
    for item in items:
        if isinstance(item, (list, dict)):
            parser.error(f"config key {key!r} expects a single value, got {item!r}")
        text = str(item)
        try:
            item = action.type(text) if action.type is not None else text
        except (TypeError, ValueError):
            parser.error(f"invalid value {text!r} for config key {key!r}")
        if action.choices is not None and item not in action.choices:
            parser.error(f"invalid choice {item!r} for config key {key!r}")
        converted.append(item)

    return converted if many else converted[0]


def apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Override parsed flags with the keys of the `--config` JSON file."""
    if args.config is None:
        return

    try:
        with open(args.config) as f:
            overrides = json.load(f)
    except (OSError, json.JSONDecodeError) as err:
        parser.error(f"cannot read --config {args.config}: {err}")

    if not isinstance(overrides, dict):
        parser.error("--config must hold a JSON object")

    actions = _subcommand_actions(parser, args.command)
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest in ("command", "handler", "config", "help") or dest not in actions:
            parser.error(f"unknown config key {key!r} for {args.command}")
        setattr(args, dest, _coerce_config_value(parser, key, actions[dest], value))


def _run_dir(args: argparse.Namespace, echo: dict) -> Path:
    tag = args.tag or args.command
    run_dir = Path(args.out_dir) / f"{tag}-{config_hash(echo)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    export_results_to_json(echo, run_dir / "config.json")
    return run_dir


def _loss_hyperparams(args: argparse.Namespace, loss: LossType) -> Tuple[float, float]:
    gamma, m = LOSS_DEFAULTS.get(loss)
    if getattr(args, "preset", None):
        gamma, m = CIRCLE_PRESETS[args.preset]
    if args.gamma is not None:
        gamma = args.gamma
    if args.m is not None:
        m = args.m
    return float(gamma), float(m)


def _train_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> TrainConfig:
    try:
        loss = LossType(args.loss)
        paradigm = Paradigm(args.paradigm)
    except ValueError as err:
        parser.error(str(err))

    gamma, m = _loss_hyperparams(args, loss)
    return TrainConfig(
        paradigm=paradigm,
        loss=loss,
        gamma=gamma,
        m=m,
        lr=args.lr,
        iterations=args.iterations,
        batch_size=args.batch_size,
        P=args.P,
        K=args.K,
        embed_dim=args.embed_dim,
        hidden=args.hidden,
        snapshot_every=args.snapshot_every,
        seed=args.seed,
    )


def cmd_gen(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    spec = ClusterSpec(
        n_classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        center_scale=args.center_scale,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    dataset = gen_clusters(spec)

    output = Path(args.output)
    save_dataset(output, dataset)
    export_results_to_json(
        {"command": "gen", "output": str(output), **spec.to_dict()},
        output.with_name(output.stem + ".config.json"),
    )

    logger.info("wrote %d rows (%d classes) to %s", len(dataset), spec.n_classes, output)
    print(output)
    return 0


def cmd_train(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _train_config(parser, args)
    dataset = load_dataset(args.data)

    run_dir = _run_dir(args, {"command": "train", "data": str(args.data), **config.to_dict()})
    record = train(dataset, config, progress=args.progress)

    save_checkpoint(run_dir / "checkpoint.json", record.model, config)
    save_record(run_dir / "record.csv", record)
    if record.snapshots:
        save_snapshots(run_dir / "snapshots.csv", record)
    if args.plot and len(record):
        Visualizer.plot_trajectory(record.to_frame(), run_dir, "trajectory", title=config.loss.value)

    print(run_dir)
    return 0


def _boundary_params(args: argparse.Namespace, config: Optional[TrainConfig]) -> CircleParams:
    m = args.boundary_m
    if m is None and config is not None and config.loss == LossType.CIRCLE and config.m > 0:
        m = config.m
    return CircleParams.reduced(256.0, 0.25 if m is None else m)


def cmd_eval(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    dataset = load_dataset(args.data)
    checkpoint = load_checkpoint(args.checkpoint, din=dataset.din)
    boundary = _boundary_params(args, checkpoint.config)

    echo = {
        "command": "eval",
        "checkpoint": str(args.checkpoint),
        "data": str(args.data),
        "ks": list(args.ks),
        "far": list(args.far),
        "all_pairs": bool(args.all_pairs),
        "boundary_m": boundary.m,
    }
    run_dir = _run_dir(args, echo)

    calculator = MetricsCalculator(args.ks, args.far, boundary, args.all_pairs)
    report = calculator.compute(checkpoint.model, dataset)
    save_metrics_report(run_dir / "metrics.csv", run_dir / "metrics.json", report)

    if args.scatter:
        save_scatter(run_dir / "scatter.csv", report.pair_scatter)
    if args.plot:
        Visualizer.plot_scatter(report.pair_scatter, run_dir, "scatter", boundary=boundary)

    print(run_dir)
    return 0


def cmd_gradfield(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.resolution < 2:
        parser.error(f"--resolution must be at least 2, got {args.resolution}")

    grid = GridSpec.full(args.resolution) if args.range == "full" else GridSpec(resolution=args.resolution)
    losses: List[LossType] = [LossType(loss) for loss in args.loss]

    echo = {
        "command": "gradfield",
        "loss": [loss.value for loss in losses],
        "gamma": args.gamma,
        "m": args.m,
        "resolution": args.resolution,
        "range": args.range,
    }
    run_dir = _run_dir(args, echo)

    for loss in losses:
        default_gamma, default_m = LOSS_DEFAULTS.get(loss)
        gamma = default_gamma if args.gamma is None else args.gamma
        for m in args.m or [default_m]:
            params = make_params(loss, gamma, m)
            field_frame = gradient_field(loss, params, grid)
            save_gradient_field(run_dir / f"gradfield_{loss.value}_m{m:g}.csv", field_frame)

    print(run_dir)
    return 0


def cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    axis = SweepAxis(args.axis)
    if args.values is None:
        values = list(GAMMA_SWEEP_VALUES if axis == SweepAxis.GAMMA else M_SWEEP_VALUES)
    elif len(args.values) == 0:
        parser.error("--values needs at least one value")
    else:
        values = [float(v) for v in args.values]

    config = _train_config(parser, args)
    dataset = load_dataset(args.data)

    echo = {
        "command": "sweep",
        "data": str(args.data),
        "axis": axis.value,
        "values": values,
        "workers": args.workers,
        **config.to_dict(),
    }
    run_dir = _run_dir(args, echo)

    table = sweep(dataset, config, axis, values, workers=args.workers)
    save_table(run_dir / f"sweep_{axis.value}.csv", table)

    print(run_dir)
    return 0


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    apply_config_file(parser, args)

    try:
        return args.handler(args, parser)
    except PairSimError as err:
        sys.stderr.write(f"error: {err.category}: {_one_line(err)}\n")
        return 1
    except OSError as err:
        sys.stderr.write(f"error: io: {_one_line(err)}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
