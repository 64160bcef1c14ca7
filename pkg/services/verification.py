# Named check suites behind `verify` and `selftest`. A check compares two sides
# of an inequality; its margin is rhs + tolerance - lhs and it fails when negative.

import itertools
import logging
import math
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from config import get_settings
from models.applications import (
    PATTERNS,
    ComplexConfig,
    DegreeCountConfig,
    HypercubeConfig,
    SubgraphConfig,
    TwoRunsConfig,
)
from models.bounds import SecondOrderVariant
from models.functional import Functional
from models.schemas import CheckFailure, VerifyReport
from models.space import BiasedSpace, make_space
from services.applications import DegreeModel, ModelCatalog, SubgraphModel
from services.empirics import MonteCarlo
from services.malliavin import RademacherCalculus, normalize_kernel
from services.normal import NormalDistribution
from services.stein_bounds import SteinBounds
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

SUITES = ("core", "stein", "models", "bounds", "empirics")
BOUND_TOL = 1e-9


def random_space(rng: np.random.Generator, m: int) -> BiasedSpace:
    return make_space(rng.uniform(0.05, 0.95, size=m))


def random_functional(rng: np.random.Generator, space: BiasedSpace) -> Functional:
    return Functional(space=space, values=rng.normal(size=space.size))


def random_kernel(rng: np.random.Generator, m: int, order: int) -> np.ndarray:
    return normalize_kernel(rng.normal(size=(m,) * order))


def pure_chaos(rng: np.random.Generator, space: BiasedSpace, order: int) -> Tuple[Functional, np.ndarray]:
    """Standardized J_order(f) and its kernel"""
    f = random_kernel(rng, space.m, order)
    f /= math.sqrt(math.factorial(order) * float(np.sum(f ** 2)))
    return RademacherCalculus.multiple_integral(space, order, f), f


def desk_models() -> List:
    """Desk-scale instances of all five models"""
    corpus = []
    for n, p, d in itertools.product((3, 4, 5), (0.2, 0.5, 0.7), (0, 1)):
        corpus.append(DegreeCountConfig(n=n, p=p, d=d))
    for name, n, p in itertools.product(("edge", "path2", "triangle"), (3, 4), (0.3, 0.6)):
        corpus.append(SubgraphConfig(n=n, p=p, pattern=PATTERNS[name]))
    for n, p in itertools.product((4, 5), (0.3, 0.6)):
        corpus.append(ComplexConfig(n=n, kappa=2, p=p))
    for n in (2, 3):
        for d in range(n + 1):
            corpus.append(HypercubeConfig(n=n, p=0.4, d=d))
    for alpha in ((1.0,), (1.0, 1.0, 1.0), (0.5, -1.0, 2.0, 1.0), (1.0, 0.0, 1.0, 0.0, 1.0)):
        corpus.append(TwoRunsConfig(alpha=alpha))
    return corpus


def describe(model) -> str:
    fields = model.model_dump(exclude={"kind"})
    if "pattern" in fields:
        fields["pattern"] = model.pattern.name
    return f"{model.kind}(" + ", ".join(f"{k}={v}" for k, v in fields.items()) + ")"


class Verifier:
    def __init__(self, seed: Optional[int] = None, trials: int = 200, samples: Optional[int] = None):
        settings = get_settings()
        self.seed = settings.DEFAULT_SEED if seed is None else int(seed)
        self.trials = trials
        self.samples = settings.DEFAULT_SAMPLES if samples is None else int(samples)
        self.rtol = settings.IDENTITY_RTOL
        self.rng = np.random.default_rng(self.seed)
        self.checks_run = 0
        self.failures: List[CheckFailure] = []

    def check(self, name: str, inequality: str, lhs: float, rhs: float, tol: float = 0.0, detail: str = "") -> bool:
        self.checks_run += 1
        margin = float(rhs) + tol - float(lhs)
        if not margin >= 0.0:
            self.failures.append(CheckFailure(check=name, inequality=inequality, margin=margin, detail=detail))
            logger.warning("check %s failed: %s (margin %.3e) %s", name, inequality, margin, detail)
            return False
        return True

    def close(self, name: str, a, b, detail: str = "") -> bool:
        """max |a - b| <= rtol * max(1, |a|, |b|)"""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        return self.check(name, "|lhs - rhs| <= rtol * scale", float(np.max(np.abs(a - b))), self.rtol * scale, detail=detail)

    def _random_pair(self) -> Tuple[BiasedSpace, Functional]:
        space = random_space(self.rng, int(self.rng.integers(1, 11)))
        return space, random_functional(self.rng, space)

    def core(self) -> None:
        C = RademacherCalculus
        for _ in range(self.trials):
            space, F = self._random_pair()
            G = random_functional(self.rng, space)
            u = [random_functional(self.rng, space) for _ in range(space.m)]
            grads = C.gradient_table(F)
            lhs = float(np.dot(space.weights, np.sum(grads * np.stack([v.values for v in u]), axis=0)))
            rhs = C.expectation(F * C.divergence(u))
            self.close("duality", lhs, rhs, detail=f"m={space.m}")

            back = C.from_chaos(C.to_chaos(F))
            self.close("chaos round trip", back.values, F.values)
            self.close("chaos variance", C.to_chaos(F).variance(), C.variance(F))

            for k in range(space.m):
                dfg = C.gradient(F * G, k).values
                x_k = Functional.coordinate_x(space, k).values
                df, dg = C.gradient(F, k).values, C.gradient(G, k).values
                expected = G.values * df + F.values * dg - x_k / math.sqrt(space.pq[k]) * df * dg
                self.close("product formula", dfg, expected, detail=f"k={k}")

            centred = F.values - C.expectation(F)
            self.close("L L^-1 centering", C.apply_L(C.apply_L_inv(F)).values, centred)

            var = C.variance(F)
            energy = C.dirichlet_energy(F)
            self.check("poincare", "Var F <= E sum (D_k F)^2", var, energy, tol=self.rtol * max(1.0, energy))
            high = float(C.chaos_levels(F)[2:].sum())
            if high > 1e-8:
                self.check("poincare strict", "Var F < E sum (D_k F)^2 off the first chaos", var, energy - 0.5 * high)

            inv = C.apply_L_inv(F)
            for k in range(space.m):
                dk = C.gradient(F, k)
                dk_inv = C.gradient(inv, k)
                for q in (2, 4):
                    self.check("L^-1 contraction", f"||D_k L^-1 F||_{q} <= ||D_k F||_{q}",
                               C.norm(dk_inv, q), C.norm(dk, q), tol=1e-12)
                self.check("gradient sup norm", "||D_k F||_inf <= ||F||_inf",
                           C.norm(dk, np.inf), C.norm(F, np.inf), tol=1e-12)

            self.close("E inner = Var", C.expectation(C.malliavin_inner(F)), var)
            self.close("E gamma0 = Var", C.expectation(C.gamma0(F, -inv)), var)

        for _ in range(max(1, self.trials // 4)):
            m = int(self.rng.integers(3, 9))
            space = random_space(self.rng, m)
            p, q = (int(x) for x in self.rng.integers(1, 4, size=2))
            f, g = random_kernel(self.rng, m, p), random_kernel(self.rng, m, q)
            J_f = C.multiple_integral(space, p, f)
            J_g = C.multiple_integral(space, q, g)
            expected = math.factorial(p) * float(np.sum(f * g)) if p == q else 0.0
            self.close("isometry", C.expectation(J_f * J_g), expected, detail=f"orders {p},{q}")

        self.phi_pin()

    def phi_pin(self) -> None:
        self.check("phi pin", "|Phi(1.959964) - 0.975| <= 1e-6",
                   abs(NormalDistribution.cdf(1.959964) - 0.975), 1e-6)
        self.check("phi pin", "Phi(0) = 1/2", abs(NormalDistribution.cdf(0.0) - 0.5), 0.0)
        z = np.linspace(-8.0, 8.0, 161)
        symmetric = np.max(np.abs(NormalDistribution.cdf(z) + NormalDistribution.cdf(-z) - 1.0))
        self.check("phi pin", "Phi(z) + Phi(-z) = 1", float(symmetric), 1e-15)

    def stein(self) -> None:
        x = np.arange(-8.0, 8.0 + 1e-12, 1.0 / 64.0)
        z = np.arange(-4.0, 4.0 + 1e-12, 1.0 / 16.0)
        X, Z = np.meshgrid(x, z)
        f = SteinBounds.stein_solution(Z, X)
        self.check("stein solution bound", "|f_z| <= sqrt(2 pi)/4",
                   float(np.max(np.abs(f))), math.sqrt(2.0 * math.pi) / 4.0, tol=1e-12)
        xf = X * f
        self.check("stein solution bound", "|x f_z(x)| <= 1", float(np.max(np.abs(xf))), 1.0, tol=1e-12)
        self.check("stein solution monotone", "x f_z(x) non-decreasing",
                   float(-np.min(np.diff(xf, axis=1))), 0.0, tol=1e-12)
        h = 1e-5
        derivative = (SteinBounds.stein_solution(Z, X + h) - SteinBounds.stein_solution(Z, X - h)) / (2.0 * h)
        residual = np.abs(derivative - xf - ((X <= Z) - NormalDistribution.cdf(Z)))
        off = np.abs(X - Z) > 2.0 * h
        self.check("stein equation", "|f' - x f - (1{x<=z} - Phi(z))| <= 1e-6",
                   float(np.max(residual[off])), 1e-6)

    def models(self) -> None:
        rel = 1e-9
        instances = []
        for n in range(2, 7):
            for d in range(n):
                instances.extend(DegreeCountConfig(n=n, p=p, d=d) for p in (0.3, 0.5))
        for name in ("edge", "path2", "triangle"):
            for n in range(PATTERNS[name].vertex_count, 6):
                instances.extend(SubgraphConfig(n=n, p=p, pattern=PATTERNS[name]) for p in (0.3, 0.5))
        for n in (3, 4, 5):
            instances.extend(ComplexConfig(n=n, kappa=2, p=p) for p in (0.3, 0.5))
        for n in (1, 2, 3):
            for d in range(n + 1):
                instances.extend(HypercubeConfig(n=n, p=p, d=d) for p in (0.3, 0.5))
        for length in (1, 3, 8, 15):
            instances.append(TwoRunsConfig(alpha=tuple(self.rng.normal(size=length))))

        for model in instances:
            label = describe(model)
            raw = ModelCatalog.raw_functional(model)
            mean, var = ModelCatalog.moments(model)
            for what, got, want in (("mean", RademacherCalculus.expectation(raw), mean),
                                    ("variance", RademacherCalculus.variance(raw), var)):
                self.check(f"closed-form {what}", f"enumerated {what} = closed form",
                           abs(got - want), rel * max(1.0, abs(want)), detail=label)

            F = ModelCatalog.functional(model)
            self.check("standardized", "|E F| <= 1e-10", abs(RademacherCalculus.expectation(F)), 1e-10, detail=label)
            self.check("standardized", "|Var F - 1| <= 1e-10", abs(RademacherCalculus.variance(F) - 1.0), 1e-10, detail=label)

            bounds = ModelCatalog.gradient_bounds(model)
            grads = RademacherCalculus.gradient_table(F)
            self.check("gradient bound", "|D_k F| <= first-order bound",
                       float(np.max(np.abs(grads))), bounds.first, tol=1e-12, detail=label)
            space = F.space
            for k, l in itertools.product(range(space.m), repeat=2):
                if k == l:
                    continue
                second = RademacherCalculus.iterated_gradient(F, k, l).values
                limit = bounds.second if bounds.adjacency[k, l] else 0.0
                if not self.check("iterated gradient bound", "|D_l D_k F| <= second-order bound",
                                  float(np.max(np.abs(second))), limit, tol=1e-12, detail=f"{label} k={k} l={l}"):
                    break

            if model.kind == "degree":
                diffs = DegreeModel.degree_differences(model)
                top = 0 if model.d == 0 else 2
                self.check("degree difference range", f"(V_d)_k^+ - (V_d)_k^- <= {top}",
                           int(diffs.max()), top, detail=label)
                self.check("degree difference range", "(V_d)_k^+ - (V_d)_k^- >= -2",
                           -int(diffs.min()), 2, detail=label)

        triangle = PATTERNS["triangle"]
        ps = np.linspace(0.05, 0.95, 19)
        psi_p = [SubgraphModel.psi(10, p, triangle) for p in ps]
        self.check("psi monotone", "psi non-decreasing in p", float(-np.min(np.diff(psi_p))), 0.0, tol=1e-12)
        psi_n = [SubgraphModel.psi(n, 0.1, triangle) for n in range(3, 40)]
        self.check("psi monotone", "psi non-decreasing in n", float(-np.min(np.diff(psi_n))), 0.0, tol=1e-12)

    def _bound_corpus(self) -> Iterable[Tuple[str, Functional, Optional[Tuple[int, np.ndarray]]]]:
        for model in desk_models():
            yield describe(model), ModelCatalog.functional(model), None
        for _ in range(6):
            space = random_space(self.rng, int(self.rng.integers(2, 7)))
            F = RademacherCalculus.standardize(random_functional(self.rng, space))
            yield f"random m={space.m}", F, None
        for m, order in ((4, 2), (6, 2), (8, 2), (5, 3)):
            space = random_space(self.rng, m)
            F, f = pure_chaos(self.rng, space, order)
            yield f"J_{order} m={m}", F, (order, f)

    def bounds(self) -> None:
        refine = get_settings().DEFAULT_REFINE
        for label, F, chaos in self._bound_corpus():
            dk = RademacherCalculus.kolmogorov_exact(F)
            terms = SteinBounds.bound_terms(F)
            r1 = SteinBounds.kol_r1(F)
            values = {
                "kol_r1": r1,
                "kol_r2": SteinBounds.kol_r2(F),
                "second-order R1": SteinBounds.second_order_kolmogorov(terms, SecondOrderVariant.R1),
                "second-order R2": SteinBounds.second_order_kolmogorov(terms, SecondOrderVariant.R2),
            }
            if F.space.m <= 12:
                r0 = SteinBounds.kol_r0(F, refine=refine).value
                values["kol_r0"] = r0
                if F.space.m <= 6:
                    self.check("kol_r0 below kol_r1", "kol_r0 <= kol_r1", r0, r1, tol=BOUND_TOL, detail=label)
            if chaos is not None:
                order, f = chaos
                values["fourth-moment"] = SteinBounds.fourth_moment_bound(F, order, f).bound
            for name, value in values.items():
                self.check(f"{name} validity", f"kolmogorov_exact <= {name}", dk, value, tol=BOUND_TOL, detail=label)

            w1 = SteinBounds.wasserstein_exact(F)
            self.check("wasserstein validity", "W1 <= second-order Wasserstein bound",
                       w1, SteinBounds.second_order_wasserstein(terms), tol=BOUND_TOL, detail=label)

            report = SteinBounds.bound_consistency(F, terms)
            self.check("inner-product consistency", "E|1 - <DF,-DL^-1F>| <= sqrt15/2 sqrt B1 + sqrt3/2 sqrt B2",
                       report.inner_gap, report.inner_bound, tol=BOUND_TOL, detail=label)
            self.check("divergence consistency", "2E|delta(u)| <= 4sqrt B3 + 4sqrt6 sqrt B4 + 4sqrt3 sqrt B5",
                       report.divergence_term, report.divergence_bound, tol=BOUND_TOL, detail=label)

    def empirics(self) -> None:
        models = [
            DegreeCountConfig(n=3, p=0.5, d=0),
            SubgraphConfig(n=4, p=0.5, pattern=PATTERNS["triangle"]),
            ComplexConfig(n=4, kappa=2, p=0.4),
            HypercubeConfig(n=2, p=0.5, d=0),
            TwoRunsConfig(alpha=(1.0, 1.0, 1.0)),
        ]
        floor = 5.0 * MonteCarlo.mc_sd(self.samples)
        for model in models:
            label = describe(model)
            exact = RademacherCalculus.kolmogorov_exact(ModelCatalog.functional(model))
            batch = MonteCarlo.sample_statistic(model, self.samples, self.seed, threads=1)
            empirical = MonteCarlo.empirical_kolmogorov(batch)
            self.check("empirical cross-validation", "|empirical d_K - exact d_K| <= 5 mc_sd",
                       abs(empirical - exact), floor, detail=label)
            again = MonteCarlo.sample_statistic(model, self.samples, self.seed, threads=4)
            self.check("determinism", "batches identical across thread counts",
                       float(np.max(np.abs(batch.values - again.values))), 0.0, detail=label)

    def run(self, suites: Optional[Iterable[str]] = None) -> VerifyReport:
        selected = list(SUITES if not suites else suites)
        runners: Dict[str, Callable[[], None]] = {name: getattr(self, name) for name in SUITES}
        for name in selected:
            logger.info("running %s checks", name)
            runners[name]()
        return VerifyReport(suites=selected, checks_run=self.checks_run, failures=list(self.failures))

    def selftest(self) -> VerifyReport:
        """Duality, isometry, product formula and the Phi pin on a handful of small functionals"""
        trials, self.trials = self.trials, 8
        try:
            self.core()
        finally:
            self.trials = trials
        return VerifyReport(suites=["selftest"], checks_run=self.checks_run, failures=list(self.failures))


def parse_filter(text: Optional[str]) -> List[str]:
    if not text:
        return list(SUITES)
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ConfigError("filter", f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    return names
