import numpy as np
import pytest

from config import AM_SOFTMAX_CONFIG, BENCHMARK, CIRCLE_CONFIG, GAMMA_VALUES, NUM_ITERATIONS, SEEDS
from pairsim.config import ClusterSpec, TrainConfig
from pairsim.data import gen_clusters
from pairsim.export import load_checkpoint, load_dataset, save_checkpoint, save_dataset
from pairsim.loss_type import LossType, SweepAxis
from pairsim.losses import CircleParams
from pairsim.metrics import MetricsCalculator
from pairsim.sweep import sweep
from pairsim.trainer import train


def test_pipeline_through_files(tmp_path):
    """Test that evaluating a reloaded checkpoint on a reloaded dataset matches memory."""
    dataset = gen_clusters(ClusterSpec(n_classes=5, per_class=6, dim=8, seed=4))
    config = TrainConfig(loss=LossType.CIRCLE, gamma=64.0, m=0.25, iterations=10, P=4, K=3, embed_dim=6, seed=4)
    record = train(dataset, config)

    save_dataset(tmp_path / "data.csv", dataset)
    save_checkpoint(tmp_path / "ckpt.json", record.model, config)
    reloaded = load_dataset(tmp_path / "data.csv")
    checkpoint = load_checkpoint(tmp_path / "ckpt.json", din=reloaded.din)

    calculator = MetricsCalculator(ks=[1, 4], far_targets=[0.1])
    in_memory = calculator.compute(record.model, dataset)
    from_files = calculator.compute(checkpoint.model, reloaded)

    assert from_files.recall_at_k == in_memory.recall_at_k
    assert np.array_equal(from_files.pair_scatter, in_memory.pair_scatter)


@pytest.fixture(scope="module")
def benchmark_runs():
    """Circle and AM-Softmax runs on the benchmark, per seed, trained once per module."""
    dataset = gen_clusters(BENCHMARK)
    calculator = MetricsCalculator(
        ks=[1], far_targets=[0.1], boundary=CircleParams.reduced(CIRCLE_CONFIG.gamma, CIRCLE_CONFIG.m)
    )

    runs = {}
    for seed in SEEDS:
        for name, config in (("circle", CIRCLE_CONFIG), ("am_softmax", AM_SOFTMAX_CONFIG)):
            record = train(dataset, config.with_overrides(seed=seed))
            runs[seed, name] = (record, calculator.compute(record.model, dataset))
    return runs


@pytest.mark.slow
@pytest.mark.parametrize("name", ["circle", "am_softmax"])
def test_benchmark_training_separates_classes(benchmark_runs, name):
    """Test that a benchmark run widens the gap between mean sp and mean sn."""
    frame = benchmark_runs[SEEDS[0], name][0].to_frame()

    gap = frame["mean_sp"] - frame["mean_sn"]
    assert gap.tail(10).mean() > gap.head(10).mean()
    assert np.isfinite(frame["loss"]).all()


@pytest.mark.slow
@pytest.mark.parametrize("seed", SEEDS)
class TestBenchmarkClaims:
    """Seeded circle vs AM-Softmax comparisons on the desk-scale benchmark."""

    def test_early_sp_rise_beats_sn_fall(self, benchmark_runs, seed):
        """Test that circle loss lifts mean sp faster than it lowers mean sn at the start."""
        frame = benchmark_runs[seed, "circle"][0].to_frame()
        early = NUM_ITERATIONS // 10

        sp_rise = frame["mean_sp"].iloc[early] - frame["mean_sp"].iloc[0]
        sn_fall = frame["mean_sn"].iloc[0] - frame["mean_sn"].iloc[early]
        assert sp_rise > sn_fall

    def test_circle_ends_with_wider_gap(self, benchmark_runs, seed):
        """Test that circle loss ends with a larger mean sp - mean sn than AM-Softmax."""
        circle = benchmark_runs[seed, "circle"][0].final_gap()
        am_softmax = benchmark_runs[seed, "am_softmax"][0].final_gap()
        assert circle > am_softmax

    def test_circle_scatter_is_tighter(self, benchmark_runs, seed):
        """Test that the circle hardest-pair scatter has the smaller total variance."""
        circle = benchmark_runs[seed, "circle"][1]
        am_softmax = benchmark_runs[seed, "am_softmax"][1]
        assert circle.scatter_variance < am_softmax.scatter_variance

    def test_circle_anchors_end_satisfied(self, benchmark_runs, seed):
        """Test that at least 90% of anchors end inside the circle boundary."""
        assert benchmark_runs[seed, "circle"][1].satisfied_fraction >= 0.9

    def test_retrieval(self, benchmark_runs, seed):
        """Test that a circle-trained model retrieves same-class neighbours."""
        assert benchmark_runs[seed, "circle"][1].rank1 > 0.8


@pytest.mark.slow
def test_recall_robust_to_gamma():
    """Test that R@1 barely moves across scale factors from 32 to 1024."""
    table = sweep(gen_clusters(BENCHMARK), CIRCLE_CONFIG, SweepAxis.GAMMA, GAMMA_VALUES)

    assert table["value"].tolist() == [32.0, 64.0, 128.0, 256.0, 512.0, 1024.0]
    assert table["r1"].max() - table["r1"].min() <= 0.05


if __name__ == "__main__":
    pytest.main([__file__])
