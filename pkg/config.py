import psutil

from pairsim.config import CIRCLE_PRESETS, GAMMA_SWEEP_VALUES, ClusterSpec, TrainConfig
from pairsim.geometry import tangent_relaxation
from pairsim.loss_type import LossType, Paradigm

# desk-scale stand-in for the large benchmarks; centers sit far enough out for
# a linear map to separate the classes, close enough that within-class
# similarity still has room to rise
BENCHMARK = ClusterSpec(
    n_classes=16, per_class=20, dim=32, center_scale=1.0, noise_sigma=0.1, seed=7
)

SEEDS = [7, 11, 13]

NUM_ITERATIONS = 600

CIRCLE_CONFIG = TrainConfig(
    paradigm=Paradigm.PAIR_WISE,
    loss=LossType.CIRCLE,
    gamma=CIRCLE_PRESETS["reid"][0],
    m=0.25,
    lr=0.01,
    iterations=NUM_ITERATIONS,
    P=16,
    K=5,
    embed_dim=32,
    snapshot_every=60,
)

AM_SOFTMAX_MARGIN = 0.35

AM_SOFTMAX_CONFIG = CIRCLE_CONFIG.with_overrides(loss=LossType.AM_SOFTMAX, m=AM_SOFTMAX_MARGIN)

# circle relaxation whose boundary touches the AM-Softmax line
TANGENT_CIRCLE_M = tangent_relaxation(AM_SOFTMAX_MARGIN)

GAMMA_VALUES = list(GAMMA_SWEEP_VALUES)

OUT_DIR = "output"

WORKERS = psutil.cpu_count()
