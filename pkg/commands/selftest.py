import time
from typing import Tuple

from models.schemas import ExperimentConfig, ResultRecord
from services.verification import Verifier

from commands.common import VERIFY_COLUMNS, emit, new_record
from commands.verify import failure_row


def cmd_selftest(cfg: ExperimentConfig) -> Tuple[ResultRecord, int]:
    started = time.perf_counter()
    report = Verifier(seed=cfg.seed).selftest()
    record = new_record(
        cfg,
        started,
        rows=[failure_row(failure) for failure in report.failures],
        summary={"checks_run": report.checks_run, "passed": report.passed},
        failures=report.failures,
    )
    emit(cfg, record, VERIFY_COLUMNS)
    return record, 0 if report.passed else 1
