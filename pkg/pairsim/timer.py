import logging
import time
from typing import Optional

logger = logging.getLogger(__name__)


class Timer:
    def __init__(self):
        self.start_time = None
        self.name = ""

    def start(self, name: str = ""):
        """Starts the timer for a named task."""
        self.name = name
        self.start_time = time.perf_counter()

    def stop(self, iterations: int = 0) -> Optional[float]:
        """Stops the timer and logs the elapsed time and throughput."""
        if self.start_time is None:
            logger.warning("Timer was not started.")
            return None

        elapsed_time = time.perf_counter() - self.start_time
        logger.info("%s took %.4f seconds.", self.name, elapsed_time)

        if iterations > 0 and elapsed_time > 0:
            logger.info("Throughput: %.4f it/s.", iterations / elapsed_time)

        self.start_time = None
        return elapsed_time
