import sys
from pathlib import Path

# Add the project root directory to Python path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import argparse
import logging

from config import get_settings
from models.schemas import ExperimentConfig
from commands.common import build_model
from services.empirics import MonteCarlo
from utils.batch_io import write_batch
from utils.errors import RademacherError

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def sample_batch(cfg: ExperimentConfig, path: str) -> int:
    """Draw standardized samples of one model instance and store them as an RSMB file"""
    settings = get_settings()
    model = build_model(cfg)
    samples = cfg.samples or settings.DEFAULT_SAMPLES
    seed = settings.DEFAULT_SEED if cfg.seed is None else cfg.seed
    batch = MonteCarlo.sample_statistic(model, samples, seed, cfg.threads)
    write_batch(path, batch.values)
    logger.info("%s: empirical d_K %.6f over %d samples", path, MonteCarlo.empirical_kolmogorov(batch), batch.count)
    return batch.count


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Write a Monte Carlo batch to an RSMB file")
    parser.add_argument("path")
    parser.add_argument("--model", required=True)
    parser.add_argument("--n", type=int)
    parser.add_argument("--p", type=float)
    parser.add_argument("--d", type=int, default=0)
    parser.add_argument("--kappa", type=int, default=1)
    parser.add_argument("--alpha")
    parser.add_argument("--pattern")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    args = parser.parse_args()
    values = {k: v for k, v in vars(args).items() if k != "path" and v is not None}
    try:
        sample_batch(ExperimentConfig.build(command="rate", **values), args.path)
    except RademacherError as exc:
        sys.stderr.write(f"{exc}\n")
        sys.exit(exc.exit_code)
