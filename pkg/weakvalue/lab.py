import logging
from dataclasses import replace
from types import TracebackType
from typing import Dict, List, Optional, Sequence, Tuple, Type, Union

from weakvalue._executor import Executor
from weakvalue.analysis import (
    BiasRow,
    Interval,
    SweepRow,
    ValidityReport,
    bias_curve,
    postselection_angles,
    sweep_row,
    validity_region,
)
from weakvalue.config import Config
from weakvalue.detector import (
    CountMap,
    DetectionConfig,
    PixelGrid,
    ShiftCalibration,
    calibrate_shifts,
    calibration_states,
    derive_seed,
    pixel_probability_map,
    simulate_counts,
)
from weakvalue.meter import CouplingConfig, MeterOrder, MeterPrediction, sequential_meter
from weakvalue.polarization import make_linear_state

logger = logging.getLogger(__name__)


class Lab:
    """
    Asynchronous front end of the weak-value simulator
    Every computation runs on a worker pool, so independent sweep rows and
    calibration runs proceed concurrently while results keep their input order.
    """

    def __init__(self, threads: Optional[int] = None) -> None:
        """
        Parameters
        ----------
        threads (optional):
            Worker thread bound, see Config.
        """
        self.config: Config = Config(threads)

        self.executor: Executor = Executor(self.config)

    async def predict(
        self,
        theta_i: float,
        theta_f: float,
        coupling: CouplingConfig,
        order: Union[MeterOrder, int, str] = MeterOrder.EXACT,
    ) -> MeterPrediction:
        """Meter centroids for one pair of linear pre- and post-selections.
        Parameters
        ----------
        theta_i, theta_f:
            Polarization angles in radians.
        coupling:
            Shifts and pointer width.
        order (optional):
            EXACT, 1 or 3.
        Raises
        ------
        VanishingPostselectionError
            If the post-selection never succeeds.
        """
        return await self.executor.run(
            sequential_meter, make_linear_state(theta_i), make_linear_state(theta_f), coupling, order
        )

    async def sweep(
        self,
        theta_i: float,
        theta_f_list: Sequence[float],
        coupling: CouplingConfig,
        mc: Optional[DetectionConfig] = None,
        grid: Optional[PixelGrid] = None,
    ) -> List[SweepRow]:
        """Sweep the post-selection angle.
        Parameters
        ----------
        theta_i:
            Pre-selection angle in radians.
        theta_f_list:
            Post-selection angles, one output row each.
        coupling:
            Shifts and pointer width.
        mc (optional):
            Detection settings; when given every row also carries a Monte Carlo
            readout seeded from mc.seed and the row index.
        grid (optional):
            Pixel array for the Monte Carlo readout.
        Returns
        -------
        rows:
            One SweepRow per angle in input order. Orthogonal settings are
            flagged divergent instead of raising.
        """
        count = len(theta_f_list)
        logger.info('sweeping %d post-selections at theta_i=%r', count, theta_i)
        return await self.executor.map(
            sweep_row,
            range(count),
            [theta_i] * count,
            theta_f_list,
            [coupling] * count,
            [mc] * count,
            [grid] * count,
        )

    async def sweep_weak_values(
        self,
        theta_i: float,
        targets: Sequence[float],
        coupling: CouplingConfig,
        mc: Optional[DetectionConfig] = None,
        grid: Optional[PixelGrid] = None,
    ) -> List[SweepRow]:
        """Sweep over requested weak values of PI_H instead of raw angles."""
        return await self.sweep(theta_i, postselection_angles(theta_i, targets), coupling, mc, grid)

    async def regions(
        self,
        coupling: CouplingConfig,
        epsilon: float = Config.Defaults.epsilon,
        search: Interval = Config.Defaults.search,
    ) -> Dict[str, ValidityReport]:
        """Validity regions of each axis with a nonzero shift.
        Returns
        -------
        reports:
            Mapping 'x' and/or 'y' to the ValidityReport of that crystal.
        Raises
        ------
        DegenerateRegionError
            If epsilon is too small for order 1 to hold on [0, 1].
        """
        axes = [(name, a) for name, a in (('x', coupling.a_x), ('y', coupling.a_y)) if a > 0]
        reports = await self.executor.map(
            validity_region,
            [a for _, a in axes],
            [coupling.sigma] * len(axes),
            [epsilon] * len(axes),
            [search] * len(axes),
        )
        return {name: report for (name, _), report in zip(axes, reports)}

    async def bias(self, a: float, sigma: float, a_w_grid: Sequence[float]) -> List[BiasRow]:
        return await self.executor.run(bias_curve, a, sigma, list(a_w_grid))

    async def simulate(
        self,
        theta_i: float,
        theta_f: float,
        coupling: CouplingConfig,
        detection: DetectionConfig,
        grid: Optional[PixelGrid] = None,
    ) -> CountMap:
        """Monte Carlo count map of one acquisition.
        Raises
        ------
        VanishingPostselectionError
            If the post-selection never succeeds.
        """
        psi_i, psi_f = make_linear_state(theta_i), make_linear_state(theta_f)
        probmap = await self.executor.run(pixel_probability_map, psi_i, psi_f, coupling, grid)
        counts = await self.executor.run(simulate_counts, probmap, detection)
        metadata = dict(counts.metadata, theta_i=repr(theta_i), theta_f=repr(theta_f))
        return replace(counts, metadata=metadata)

    async def calibrate(
        self,
        coupling: CouplingConfig,
        detection: DetectionConfig,
        grid: Optional[PixelGrid] = None,
    ) -> Tuple[ShiftCalibration, CountMap, CountMap]:
        """Simulate the |H> and |V> calibration runs and recover the shifts.
        Returns
        -------
        calibration, counts_h, counts_v:
            Recovered shifts with standard errors and the two count maps. The
            runs use seeds derived from detection.seed with indices 0 and 1.
        """
        h, v = calibration_states()
        probmaps = await self.executor.map(pixel_probability_map, [h, v], [h, v], [coupling] * 2, [grid] * 2)
        runs = [replace(detection, seed=derive_seed(detection.seed, index)) for index in range(2)]
        counts_h, counts_v = await self.executor.map(simulate_counts, probmaps, runs)
        calibration = calibrate_shifts(counts_h, counts_v, background=detection.dark_mean_per_pixel or None)
        logger.info(
            'calibrated a_x=%.4f+-%.4f a_y=%.4f+-%.4f',
            calibration.a_x,
            calibration.stderr_a_x,
            calibration.a_y,
            calibration.stderr_a_y,
        )
        return calibration, counts_h, counts_v

    async def __aenter__(self) -> "Lab":
        return self

    async def __aexit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        self.executor.close()

    async def close(self) -> None:
        self.executor.close()
