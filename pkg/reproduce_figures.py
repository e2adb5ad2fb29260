import datetime
import logging
from multiprocessing import Manager, Process

from pairsim.data import gen_clusters
from pairsim.export import export_results_to_json, save_table
from pairsim.loss_type import SweepAxis
from pairsim.losses import CircleParams
from pairsim.metrics import MetricsCalculator
from pairsim.sweep import sweep
from pairsim.trainer import train
from pairsim.visualizer import Visualizer
from config import *

logger = logging.getLogger("reproduce_figures")


def train_and_store_result(index, seed, return_dict):

    dataset = gen_clusters(BENCHMARK)
    calculator = MetricsCalculator(boundary=CircleParams.reduced(CIRCLE_CONFIG.gamma, CIRCLE_CONFIG.m))

    result = {"seed": seed}
    for name, config in (("circle", CIRCLE_CONFIG), ("am_softmax", AM_SOFTMAX_CONFIG)):
        record = train(dataset, config.with_overrides(seed=seed))
        report = calculator.compute(record.model, dataset)

        rows = record.to_frame()
        early = max(1, NUM_ITERATIONS // 10)
        result[name] = {
            "record": rows,
            "snapshots": record.snapshots_frame(),
            "scatter": report.pair_scatter,
            "early_sp_increase": rows["mean_sp"].iloc[early] - rows["mean_sp"].iloc[0],
            "early_sn_decrease": rows["mean_sn"].iloc[0] - rows["mean_sn"].iloc[early],
            "final_gap": record.final_gap(),
            "metrics": report.jsonify(),
        }

    return_dict[index] = result


def main():
    manager = Manager()
    return_dict = manager.dict()

    processes = []
    if WORKERS > 0:
        for i, seed in enumerate(SEEDS):
            p = Process(target=train_and_store_result, args=(i, seed, return_dict))
            p.start()
            processes.append(p)

        for p in processes:
            p.join()
    else:
        # Run directly without multiprocessing
        for i, seed in enumerate(SEEDS):
            train_and_store_result(i, seed, return_dict)

    timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
    out_dir = f"{OUT_DIR}/{timestamp}_benchmark"

    summary = {}
    for i, seed in enumerate(SEEDS):
        result = return_dict[i]
        for name in ("circle", "am_softmax"):
            run = result[name]
            file_name = f"seed{seed}_{name}"
            save_table(f"{out_dir}/{file_name}_record.csv", run["record"])
            save_table(f"{out_dir}/{file_name}_snapshots.csv", run["snapshots"])
            Visualizer.plot_trajectory(run["record"], out_dir, f"{file_name}_trajectory", title=name)
            Visualizer.plot_scatter(
                run["scatter"],
                out_dir,
                f"{file_name}_scatter",
                boundary=CircleParams.reduced(CIRCLE_CONFIG.gamma, CIRCLE_CONFIG.m),
                am_margin=AM_SOFTMAX_MARGIN if name == "am_softmax" else None,
                title=name,
            )

        summary[f"seed{seed}"] = {
            name: {
                key: result[name][key]
                for key in ("early_sp_increase", "early_sn_decrease", "final_gap", "metrics")
            }
            for name in ("circle", "am_softmax")
        }
        logger.info(
            "seed %d: final gap circle %.4f vs am_softmax %.4f",
            seed,
            result["circle"]["final_gap"],
            result["am_softmax"]["final_gap"],
        )

    summary["tangent_circle_m"] = TANGENT_CIRCLE_M
    export_results_to_json(summary, f"{out_dir}/summary.json")

    gamma_table = sweep(
        gen_clusters(BENCHMARK), CIRCLE_CONFIG, SweepAxis.GAMMA, GAMMA_VALUES, workers=WORKERS
    )
    save_table(f"{out_dir}/sweep_gamma.csv", gamma_table)


if __name__ == "__main__":

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logger.info("Starting %d processes for %d seeds...", WORKERS, len(SEEDS))

    main()

    logger.info("Done")
