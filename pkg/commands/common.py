import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from config import get_settings
from models.applications import (
    ComplexConfig,
    DegreeCountConfig,
    HypercubeConfig,
    SubgraphConfig,
    TwoRunsConfig,
    resolve_pattern,
)
from models.empirics import ModelFamily, PLaw
from models.schemas import ExperimentConfig, OutputFormat, ResultRecord
from utils.errors import ConfigError
from utils.json_encoder import json_serialize

logger = logging.getLogger(__name__)

BOUND_COLUMNS = ["model", "n", "p", "d", "kappa_dim", "variant", "value", "provenance"]
RATE_COLUMNS = ["n", "dk", "mc_sd", "prediction", "provenance"]
VERIFY_COLUMNS = ["check", "inequality", "margin", "detail", "provenance"]


def _require(cfg: ExperimentConfig, *fields: str) -> None:
    for field in fields:
        if getattr(cfg, field) is None:
            raise ConfigError(field, f"required for the {cfg.model} model")


def build_model(cfg: ExperimentConfig):
    """The model instance an ExperimentConfig describes"""
    if cfg.model is None:
        raise ConfigError("model", "a model is required")
    if cfg.model == "two_runs":
        _require(cfg, "alpha")
        return TwoRunsConfig(alpha=cfg.alpha)
    _require(cfg, "n", "p")
    if cfg.model == "subgraph":
        return SubgraphConfig(n=cfg.n, p=cfg.p, pattern=resolve_pattern(cfg.pattern or "triangle"))
    if cfg.model == "degree":
        return DegreeCountConfig(n=cfg.n, p=cfg.p, d=cfg.d)
    if cfg.model == "complex":
        return ComplexConfig(n=cfg.n, kappa=cfg.kappa, p=cfg.p)
    return HypercubeConfig(n=cfg.n, p=cfg.p, d=cfg.d)


def build_family(cfg: ExperimentConfig) -> ModelFamily:
    if cfg.model is None:
        raise ConfigError("model", "a model is required")
    if cfg.model != "two_runs" and cfg.p_law is None:
        raise ConfigError("p_law", f"required for a {cfg.model} sweep")
    return ModelFamily(
        kind=cfg.model,
        p_law=PLaw.parse(cfg.p_law) if cfg.p_law is not None else None,
        d=cfg.d,
        kappa=cfg.kappa,
        pattern=resolve_pattern(cfg.pattern or "triangle") if cfg.model == "subgraph" else None,
        regime=cfg.regime,
        eps=cfg.eps,
    )


def new_record(cfg: ExperimentConfig, started: float, **fields) -> ResultRecord:
    return ResultRecord(
        experiment_id=cfg.experiment_id(),
        command=cfg.command,
        inputs=cfg.model_dump(mode="json", exclude_none=True),
        wall_time=time.perf_counter() - started,
        version=get_settings().VERSION,
        **fields,
    )


def _open_target(out: Optional[str]):
    if not out:
        return sys.stdout, False
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    return open(out, "w", encoding="utf-8", newline=""), True


def write_table(rows: Sequence[Dict[str, Any]], columns: List[str], out: Optional[str]) -> None:
    frame = pd.DataFrame(list(rows), columns=columns)
    handle, owned = _open_target(out)
    try:
        frame.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")
    finally:
        if owned:
            handle.close()


def emit(cfg: ExperimentConfig, record: ResultRecord, columns: List[str]) -> None:
    """CSV rows (stable for identical inputs) or the whole record as JSON"""
    if cfg.format == OutputFormat.JSON:
        handle, owned = _open_target(cfg.out)
        try:
            handle.write(json_serialize(record, indent=2) + "\n")
        finally:
            if owned:
                handle.close()
        return
    write_table(record.rows, columns, cfg.out)
    if record.summary:
        summary = json_serialize(record.summary, indent=2) + "\n"
        if cfg.out:
            with open(os.path.splitext(cfg.out)[0] + ".summary.json", "w", encoding="utf-8") as handle:
                handle.write(summary)
        else:
            sys.stderr.write(summary)
    logger.info("%s finished: %d rows", cfg.command.value, len(record.rows))
