import os
import sys
from pathlib import Path

# Add the project root directory to Python path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import logging

import pandas as pd

from services.empirics import MonteCarlo
from utils.batch_io import read_batch
from utils.errors import RademacherError
from utils.json_encoder import json_serialize

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def inspect_batch(path: str) -> dict:
    """Count, moments and the KS distance to N(0,1) of a stored batch"""
    values = read_batch(path)
    summary = pd.Series(values).describe().to_dict()
    summary["empirical_dk"] = MonteCarlo.empirical_kolmogorov(values)
    summary["mc_sd"] = MonteCarlo.mc_sd(values.shape[0])
    return summary


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.stderr.write("usage: inspect_batch.py FILE [FILE ...]\n")
        sys.exit(2)
    for path in sys.argv[1:]:
        try:
            print(json_serialize({"path": os.path.abspath(path), **inspect_batch(path)}, indent=2))
        except RademacherError as exc:
            logger.error("%s", exc)
            sys.exit(exc.exit_code)
