import numpy as np
import pandas as pd
import pytest

from pairsim.losses import CircleParams
from pairsim.visualizer import Visualizer


class TestVisualizer:
    """Test suite for the PNG plots."""

    def test_plot_trajectory(self, tmp_path):
        """Test that the trajectory plot is written."""
        frame = pd.DataFrame(
            {"iter": [0, 1, 2], "mean_sp": [0.1, 0.3, 0.5], "mean_sn": [0.0, -0.05, -0.1]}
        )
        target = Visualizer.plot_trajectory(frame, tmp_path, "trajectory")
        assert target == tmp_path / "trajectory.png"
        assert target.stat().st_size > 0

    def test_plot_scatter_with_boundaries(self, tmp_path):
        """Test the scatter plot with both decision boundaries."""
        points = np.array([[0.1, 0.8], [0.2, 0.7], [0.0, 0.9]])
        target = Visualizer.plot_scatter(
            points, tmp_path / "plots", "scatter", boundary=CircleParams.reduced(256.0, 0.25), am_margin=0.35
        )
        assert target.exists()


if __name__ == "__main__":
    pytest.main([__file__])
