"""
Stage timing for experiment runs
Wall-clock durations per named stage, recorded into run manifests
"""

import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator

logger = logging.getLogger(__name__)


class StageTimer:
    """Accumulates wall-clock seconds per stage"""

    def __init__(self):
        self.timings: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = round(self.timings.get(name, 0.0) + elapsed, 6)
            logger.info(f"Stage {name} finished in {elapsed:.3f}s")

    def as_dict(self) -> Dict[str, float]:
        return dict(sorted(self.timings.items()))
