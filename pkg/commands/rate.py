import logging
import time
from typing import Tuple

from config import get_settings
from models.schemas import ExperimentConfig, ResultRecord
from services.empirics import MonteCarlo
from utils.errors import ConfigError

from commands.common import RATE_COLUMNS, build_family, emit, new_record

logger = logging.getLogger(__name__)


def cmd_rate(cfg: ExperimentConfig) -> Tuple[ResultRecord, int]:
    """Monte Carlo sweep over n_grid, the log-log fit and the predicted exponent"""
    started = time.perf_counter()
    settings = get_settings()
    if not cfg.n_grid:
        raise ConfigError("n_grid", "a rate sweep needs an n grid")
    family = build_family(cfg)
    samples = cfg.samples or settings.DEFAULT_SAMPLES
    seed = settings.DEFAULT_SEED if cfg.seed is None else cfg.seed

    points = MonteCarlo.sweep(family, cfg.n_grid, samples, seed, cfg.threads)
    summary = {
        "predicted_exponent": MonteCarlo.predicted_exponent(family, cfg.n_grid),
        "samples": samples,
        "seed": seed,
    }
    if len(points) >= 3:
        fit = MonteCarlo.rate_fit(points)
        summary.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared)
    else:
        logger.warning("%d grid points: no slope fitted", len(points))

    record = new_record(cfg, started, rows=[point.model_dump() for point in points], summary=summary)
    emit(cfg, record, RATE_COLUMNS)
    return record, 0
