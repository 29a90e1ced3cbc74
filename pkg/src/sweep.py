"""
Energy Sweep

Runs the per-energy work items of the spectral analyses on a process pool
and assembles the same reports as the sequential functions in `spectral`.
Work items are module-level functions bound with `functools.partial`, so
they pickle across the pool.
"""

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOL, DEFAULT_Y_LADDER, SWEEP_MAX_WORKERS
from .errors import ParameterError
from .measure import AtomicMeasure
from .spectral import (
    ReflectionlessDefect,
    SpectralReport,
    Thresholds,
    energy_record,
    reflectionless_point,
    validate_energies,
    validate_ladder,
)

logger = logging.getLogger(__name__)


class EnergySweep:
    """Evaluate spectral quantities over an energy grid in parallel."""

    def __init__(self, max_workers: Optional[int] = SWEEP_MAX_WORKERS):
        if max_workers is not None and max_workers < 1:
            raise ParameterError(f"max_workers must be at least 1, got {max_workers}")
        self.max_workers = max_workers

    async def _map(self, func: Callable[[float], Any], energies: Sequence[float]) -> List[Any]:
        """Apply `func` to every energy on the pool; results keep the grid order."""
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [loop.run_in_executor(executor, func, energy) for energy in energies]
            return list(await asyncio.gather(*futures))

    async def sigma_ac(
        self,
        measure: AtomicMeasure,
        energies: Sequence[float],
        ladder: Sequence[float] = DEFAULT_Y_LADDER,
        thresholds: Optional[Thresholds] = None,
        t: float = 0.0,
        tol: float = DEFAULT_TOL,
        b_max: Optional[float] = None,
        allow_negative: bool = False,
    ) -> SpectralReport:
        """
        Parallel counterpart of `spectral.sigma_ac_estimate`.

        Args:
            measure: halfline vertex measure
            energies: energy grid
            ladder: strictly decreasing distances to the real axis
            thresholds: classification thresholds

        Returns:
            SpectralReport identical to the sequential one
        """
        grid = validate_energies(energies, allow_negative)
        ladder = validate_ladder(ladder)
        thresholds = thresholds or Thresholds()
        work = partial(
            energy_record,
            measure,
            ladder=ladder,
            thresholds=thresholds,
            t=t,
            tol=tol,
            b_max=b_max,
        )
        records = await self._map(work, grid.tolist())
        report = SpectralReport(grid, ladder, records, thresholds, t)
        logger.info(
            f"Swept {grid.size} energies with {self.max_workers or 'default'} workers: "
            f"ac-like fraction {report.ac_fraction():.3f}"
        )
        return report

    async def reflectionless(
        self,
        measure: AtomicMeasure,
        t: float,
        energies: Sequence[float],
        y: float,
        tol: float = DEFAULT_TOL,
    ) -> ReflectionlessDefect:
        """Parallel counterpart of `spectral.reflectionless_defect`."""
        if not y > 0:
            raise ParameterError(f"y must be positive, got {y}")
        grid = validate_energies(energies, allow_negative=True)
        work = partial(reflectionless_point, measure, t, y=y, tol=tol)
        points = await self._map(work, grid.tolist())
        return ReflectionlessDefect(
            energies=grid,
            y=float(y),
            defects=np.array([p[2] for p in points]),
            t=float(t),
            m_plus_values=[p[0] for p in points],
            m_minus_values=[p[1] for p in points],
        )
