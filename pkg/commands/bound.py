import logging
import time
from typing import Dict, List, Tuple

from config import get_settings
from models.bounds import SecondOrderVariant
from models.schemas import BoundVariant, ExperimentConfig, OutputRow, Provenance, ResultRecord
from services.applications import ModelCatalog, TwoRunsModel, j1j2_bound
from services.malliavin import RademacherCalculus
from services.stein_bounds import SteinBounds
from utils.errors import NotPureChaos

from commands.common import BOUND_COLUMNS, build_model, emit, new_record

logger = logging.getLogger(__name__)

# chaos mass below this counts as absent when deciding purity
PURITY_TOL = 1e-8

SECOND_ORDER = {
    BoundVariant.SECOND_R1: SecondOrderVariant.R1,
    BoundVariant.SECOND_R2: SecondOrderVariant.R2,
}

TERM_LABELS = {"b1": "B1", "b2": "B2", "b3": "B3", "b4": "B4", "b5": "B5", "kappa": "kappa", "a3": "A3"}


def _model_fields(model) -> Dict:
    """model,n,p,d,kappa_dim columns of one instance"""
    if model.kind == "two_runs":
        return {"model": model.kind, "n": len(model.alpha), "p": 0.5, "d": None, "kappa_dim": None}
    return {
        "model": model.kind,
        "n": model.n,
        "p": model.p,
        "d": getattr(model, "d", None) if model.kind in ("degree", "hypercube") else None,
        "kappa_dim": model.kappa if model.kind == "complex" else None,
    }


def _pure_order(F) -> int:
    """The single chaos level carrying F, or raise NotPureChaos"""
    mass = RademacherCalculus.to_chaos(F).level_mass()
    levels = [level for level, value in enumerate(mass) if value > PURITY_TOL]
    if len(levels) != 1 or levels[0] == 0:
        raise NotPureChaos(f"chaos mass on levels {levels}")
    return levels[0]


def bound_values(F, variant: BoundVariant, refine: int) -> List[Tuple[str, float, Provenance]]:
    """(variant, value, provenance) triples for a standardized functional"""
    wanted = list(BoundVariant) if variant == BoundVariant.ALL else [variant]
    rows = [
        ("kolmogorov_exact", RademacherCalculus.kolmogorov_exact(F), Provenance.EXACT),
        ("wasserstein_exact", SteinBounds.wasserstein_exact(F), Provenance.EXACT),
    ]
    terms = None
    r0 = None
    for item in wanted:
        if item == BoundVariant.ALL:
            continue
        if item in (BoundVariant.R0, BoundVariant.GAMMA0) and r0 is None:
            r0 = SteinBounds.kol_r0(F, refine=refine)
        if item == BoundVariant.R0:
            rows.append((item.value, r0.value, Provenance.GRID_APPROXIMATE))
        elif item == BoundVariant.R1:
            rows.append((item.value, SteinBounds.kol_r1(F), Provenance.EXACT))
        elif item == BoundVariant.R2:
            rows.append((item.value, SteinBounds.kol_r2(F), Provenance.EXACT))
        elif item == BoundVariant.GAMMA0:
            rows.append((item.value, SteinBounds.gamma0_first_term(F) + r0.sup_term, Provenance.GRID_APPROXIMATE))
        elif item == BoundVariant.FOURTH:
            try:
                order = _pure_order(F)
            except NotPureChaos:
                if variant == BoundVariant.FOURTH:
                    raise
                logger.info("skipping the fourth-moment bound: functional is not a pure chaos")
                continue
            rows.append((item.value, SteinBounds.fourth_moment_bound(F, order).bound, Provenance.EXACT))
        else:
            if terms is None:
                terms = SteinBounds.bound_terms(F)
            if item == BoundVariant.SECOND_W:
                value = SteinBounds.second_order_wasserstein(terms)
            else:
                value = SteinBounds.second_order_kolmogorov(terms, SECOND_ORDER[item])
            rows.append((item.value, value, Provenance.EXACT))
    if terms is not None:
        for field, label in TERM_LABELS.items():
            rows.append((label, getattr(terms, field), Provenance.EXACT))
    return rows


def cmd_bound(cfg: ExperimentConfig) -> Tuple[ResultRecord, int]:
    started = time.perf_counter()
    model = build_model(cfg)
    m = ModelCatalog.check_exact(model)
    refine = cfg.refine or get_settings().DEFAULT_REFINE
    logger.info("bound %s on %d coordinates, variant %s", model.kind, m, cfg.variant.value)

    F = ModelCatalog.functional(model)
    fields = _model_fields(model)
    values = bound_values(F, cfg.variant, refine)
    if model.kind == "two_runs":
        f, g = TwoRunsModel.kernels(model)
        values.append(("j1j2", j1j2_bound(f, g, cfg.constant), Provenance.EXACT))
    rows = [
        OutputRow(**fields, variant=name, value=value, provenance=provenance).model_dump(mode="json")
        for name, value, provenance in values
    ]

    record = new_record(cfg, started, rows=rows)
    emit(cfg, record, BOUND_COLUMNS)
    return record, 0
