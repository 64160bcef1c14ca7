# Monte Carlo Kolmogorov distances and convergence-rate regression.

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from config import get_settings
from models.empirics import ModelFamily, RateFit, RatePoint, SampleBatch
from services.applications import ModelCatalog
from services.samplers import ModelSampler
from utils.errors import (
    ConfigError,
    EmptyBatch,
    NonpositiveDk,
    TooFewPoints,
    ZeroVariance,
)
from utils.rng import derive_seed, shard_generator, shard_sizes

logger = logging.getLogger(__name__)

# asymptotic mean of sqrt(N) times the one-sample KS statistic
KS_MEAN_SCALE = 0.8269


class MonteCarlo:
    @staticmethod
    def mc_sd(samples: int) -> float:
        return KS_MEAN_SCALE / math.sqrt(samples)

    @staticmethod
    def sample_raw(model, samples: int, seed: int, threads: Optional[int] = None) -> np.ndarray:
        """Raw statistic values, shard by shard; identical for every thread count"""
        settings = get_settings()
        threads = settings.THREADS if threads is None else max(1, int(threads))
        sizes = shard_sizes(samples, settings.SHARD_SIZE)

        def run(shard: int) -> np.ndarray:
            return ModelSampler.raw(model, shard_generator(seed, shard), sizes[shard])

        logger.debug("sampling %s: %d shards on %d threads", model.kind, len(sizes), threads)
        if threads == 1 or len(sizes) == 1:
            parts = [run(i) for i in range(len(sizes))]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(run, range(len(sizes))))
        return np.concatenate(parts)

    @staticmethod
    def sample_statistic(model, samples: int, seed: int, threads: Optional[int] = None) -> SampleBatch:
        """Standardized samples, centred and scaled with the closed-form moments"""
        if samples < 1:
            raise EmptyBatch("at least one sample is required")
        mean, var = ModelCatalog.moments(model)
        if var <= 0.0:
            raise ZeroVariance(f"{model.kind} statistic has zero variance")
        raw = MonteCarlo.sample_raw(model, samples, seed, threads)
        return SampleBatch(values=(raw - mean) / math.sqrt(var), model=model, seed=int(seed))

    @staticmethod
    def empirical_kolmogorov(batch: Union[SampleBatch, Sequence[float], np.ndarray]) -> float:
        """One-sample KS statistic against N(0,1), both one-sided gaps"""
        values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=np.float64)
        if values.size == 0:
            raise EmptyBatch("empirical Kolmogorov distance of an empty batch")
        return float(stats.kstest(values, "norm", method="asymp").statistic)

    @staticmethod
    def rate_fit(points: Sequence[RatePoint]) -> RateFit:
        if len(points) < 3:
            raise TooFewPoints(f"a rate fit needs at least 3 points, got {len(points)}")
        if any(pt.dk <= 0.0 for pt in points):
            raise NonpositiveDk("every d_K must be positive on a log scale")
        x = np.log([pt.n for pt in points])
        y = np.log([pt.dk for pt in points])
        fit = stats.linregress(x, y)
        return RateFit(
            slope=float(fit.slope),
            intercept=float(fit.intercept),
            r_squared=float(min(1.0, fit.rvalue ** 2)),
            points=len(points),
        )

    @staticmethod
    def sweep(
        family: ModelFamily,
        n_grid: Sequence[int],
        samples: int,
        seed: int,
        threads: Optional[int] = None,
    ) -> List[RatePoint]:
        grid = [int(n) for n in n_grid]
        if any(b <= a for a, b in zip(grid[:-1], grid[1:])):
            raise ConfigError("n_grid", f"grid {grid} is not strictly increasing")
        points = []
        for n in grid:
            model = family.at(n)
            batch = MonteCarlo.sample_statistic(model, samples, derive_seed(seed, n), threads)
            point = RatePoint(
                n=n,
                dk=MonteCarlo.empirical_kolmogorov(batch),
                mc_sd=MonteCarlo.mc_sd(samples),
                prediction=ModelCatalog.rate_prediction(model, family.regime, family.eps),
            )
            logger.info("sweep %s n=%d dk=%.6f prediction=%.6f", family.kind, n, point.dk, point.prediction)
            points.append(point)
        return points

    @staticmethod
    def predicted_exponent(family: ModelFamily, n_grid: Sequence[int]) -> float:
        """Slope of log prediction against log n over the grid"""
        grid = [int(n) for n in n_grid]
        if len(grid) < 2:
            return float("nan")
        predictions = [ModelCatalog.rate_prediction(family.at(n), family.regime, family.eps) for n in grid]
        return float(stats.linregress(np.log(grid), np.log(predictions)).slope)
