import logging
import time
from typing import Tuple

from models.schemas import CheckFailure, ExperimentConfig, Provenance, ResultRecord
from services.verification import Verifier, parse_filter

from commands.common import VERIFY_COLUMNS, emit, new_record

logger = logging.getLogger(__name__)

MONTE_CARLO_CHECKS = ("empirical cross-validation", "determinism")


def failure_row(failure: CheckFailure) -> dict:
    if failure.check in MONTE_CARLO_CHECKS:
        provenance = Provenance.MONTE_CARLO
    elif failure.check.startswith("kol_r0"):
        provenance = Provenance.GRID_APPROXIMATE
    else:
        provenance = Provenance.EXACT
    return dict(failure.model_dump(), provenance=provenance.value)


def cmd_verify(cfg: ExperimentConfig) -> Tuple[ResultRecord, int]:
    """Runs the selected check suites; failures are results, so only the exit code reports them"""
    started = time.perf_counter()
    suites = parse_filter(cfg.filter)
    report = Verifier(seed=cfg.seed, samples=cfg.samples).run(suites)
    for failure in report.failures:
        logger.error("FAILED %s: %s margin=%.3e %s", failure.check, failure.inequality, failure.margin, failure.detail)
    record = new_record(
        cfg,
        started,
        rows=[failure_row(failure) for failure in report.failures],
        summary={"suites": report.suites, "checks_run": report.checks_run, "passed": report.passed},
        failures=report.failures,
    )
    emit(cfg, record, VERIFY_COLUMNS)
    return record, 0 if report.passed else 1
