from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from pairsim.geometry import decision_boundary
from pairsim.losses import CircleParams


class Visualizer:

    @staticmethod
    def plot_trajectory(
        record_frame: pd.DataFrame,
        out_dir: str,
        file_name: str,
        title: str = "Similarity trajectory",
    ) -> Path:
        """
        Plot batch mean s_p and s_n over iterations and save directly to file.

        Args:
            record_frame: Frame with columns iter, mean_sp, mean_sn (see RunRecord.to_frame)
            out_dir: Directory to save plot
            file_name: File name without extension
        """
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)

        plt.figure(figsize=(10, 6))
        plt.plot(record_frame["iter"], record_frame["mean_sp"], "b-", linewidth=2, label="mean s_p")
        plt.plot(record_frame["iter"], record_frame["mean_sn"], "r-", linewidth=2, label="mean s_n")
        plt.title(title, fontsize=14, fontweight="bold")
        plt.xlabel("Iteration", fontsize=12)
        plt.ylabel("Cosine similarity", fontsize=12)
        plt.ylim(-1.0, 1.0)
        plt.legend()
        plt.grid(True, alpha=0.3)
        plt.tight_layout()

        target = out_path / f"{file_name}.png"
        plt.savefig(target, dpi=150)
        plt.close()
        return target

    @staticmethod
    def plot_scatter(
        points: np.ndarray,
        out_dir: str,
        file_name: str,
        boundary: Optional[CircleParams] = None,
        am_margin: Optional[float] = None,
        title: str = "Similarity pairs after training",
    ) -> Path:
        """
        Plot (s_n, s_p) pairs with the circle boundary arc and, optionally,
        the straight boundary s_p - s_n = am_margin.
        """
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)

        plt.figure(figsize=(7, 7))
        points = np.asarray(points).reshape(-1, 2)
        plt.scatter(points[:, 0], points[:, 1], s=8, alpha=0.6, label="pairs")

        if boundary is not None:
            circle = decision_boundary(boundary)
            sn, sp = circle.points()
            # only the arc inside the similarity square is meaningful
            visible = (np.abs(sn) <= 1.0) & (np.abs(sp) <= 1.0)
            plt.plot(sn[visible], sp[visible], "g.", markersize=2, label="circle boundary")

        if am_margin is not None:
            sn = np.linspace(-1.0, 1.0, 201)
            sp = sn + am_margin
            visible = np.abs(sp) <= 1.0
            plt.plot(sn[visible], sp[visible], "k--", linewidth=1, label="line boundary")

        plt.xlim(-1.0, 1.0)
        plt.ylim(-1.0, 1.0)
        plt.xlabel("s_n", fontsize=12)
        plt.ylabel("s_p", fontsize=12)
        plt.title(title, fontsize=14, fontweight="bold")
        plt.legend()
        plt.grid(True, alpha=0.3)
        plt.tight_layout()

        target = out_path / f"{file_name}.png"
        plt.savefig(target, dpi=150)
        plt.close()
        return target
