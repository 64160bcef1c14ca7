import math

import numpy as np
import pytest
from scipy import stats

from models.applications import (
    PATTERNS,
    ComplexConfig,
    DegreeCountConfig,
    HypercubeConfig,
    SubgraphConfig,
    TwoRunsConfig,
)
from models.empirics import ModelFamily, PLaw, RatePoint, SampleBatch
from services.applications import ModelCatalog, SubgraphModel, TwoRunsModel
from services.empirics import MonteCarlo
from services.malliavin import RademacherCalculus
from services.samplers import (
    ModelSampler,
    coordinate_members,
    expand_members,
    sparse_edges,
    success_positions,
)
from utils.combinatorics import coface_table
from utils.errors import (
    BadProbability,
    ConfigError,
    EmptyBatch,
    NonpositiveDk,
    TooFewPoints,
    ZeroVariance,
)
from utils.rng import derive_seed, shard_generator, shard_sizes

DESK_MODELS = [
    DegreeCountConfig(n=3, p=0.5, d=0),
    DegreeCountConfig(n=5, p=0.3, d=1),
    SubgraphConfig(n=4, p=0.5, pattern=PATTERNS["triangle"]),
    SubgraphConfig(n=5, p=0.7, pattern=PATTERNS["path2"]),
    ComplexConfig(n=4, kappa=2, p=0.4),
    HypercubeConfig(n=2, p=0.5, d=0),
    HypercubeConfig(n=3, p=0.6, d=2),
    TwoRunsConfig(alpha=(1.0, 1.0, 1.0)),
]


def point(n, dk):
    return RatePoint(n=n, dk=dk, mc_sd=0.0, prediction=1.0)


# random streams

def test_shard_sizes():
    assert shard_sizes(10, 4) == [4, 4, 2]
    assert shard_sizes(8, 4) == [4, 4]
    assert shard_sizes(0, 4) == []


def test_shard_streams_are_independent_and_reproducible():
    a = shard_generator(7, 0).random(5)
    assert np.array_equal(a, shard_generator(7, 0).random(5))
    assert not np.array_equal(a, shard_generator(7, 1).random(5))
    assert derive_seed(7, 64) == derive_seed(7, 64)
    assert derive_seed(7, 64) != derive_seed(7, 128)


# samplers

def test_success_positions(rng):
    positions = success_positions(rng, 200_000, 0.01)
    assert np.all(np.diff(positions) > 0)
    assert positions.min() >= 0 and positions.max() < 200_000
    assert abs(positions.shape[0] - 2000) < 6 * math.sqrt(2000)


def test_sparse_edges_frequency(rng):
    for p in (0.05, 0.5, 0.9):
        sample, coordinate, flip = sparse_edges(rng, 20_000, 10, p)
        assert flip == (p > 0.5)
        drawn = sample.shape[0] / 200_000
        present = 1.0 - drawn if flip else drawn
        assert present == pytest.approx(p, abs=5 * math.sqrt(p * (1 - p) / 200_000))
        assert coordinate.min() >= 0 and coordinate.max() < 10


def test_coordinate_members_inverts_a_table():
    table = np.array([[0, 2], [1, 2], [0, 3]])
    indptr, members = coordinate_members(table, 5)
    assert indptr.tolist() == [0, 2, 3, 5, 6, 6]
    assert sorted(members[indptr[2]:indptr[3]].tolist()) == [0, 1]
    hit_sample, hit_group = expand_members(np.array([0, 1, 1]), np.array([2, 0, 4]), indptr, members)
    assert hit_sample.tolist() == [0, 0, 1, 1]
    assert sorted(hit_group[:2].tolist()) == [0, 1]
    assert sorted(hit_group[2:].tolist()) == [0, 2]


def _dense_presence(seed, rows, m, p):
    sample, coordinate, flip = sparse_edges(shard_generator(seed, 0), rows, m, p)
    present = np.full((rows, m), flip)
    present[sample, coordinate] = not flip
    return present


@pytest.mark.parametrize("p", [0.2, 0.7])
def test_sparse_counts_match_dense_counts(p):
    rows = 3000
    sub = SubgraphConfig(n=6, p=p, pattern=PATTERNS["triangle"])
    present = _dense_presence(8, rows, 15, p)
    copies = SubgraphModel.copies(6, PATTERNS["triangle"])
    expected = present[:, copies].all(axis=2).sum(axis=1)
    assert np.array_equal(ModelSampler.subgraph(sub, shard_generator(8, 0), rows), expected)

    cpx = ComplexConfig(n=5, kappa=2, p=p)
    present = _dense_presence(9, rows, 10, p)
    expected = (~present[:, coface_table(5, 2)].any(axis=2)).sum(axis=1)
    assert np.array_equal(ModelSampler.complex(cpx, shard_generator(9, 0), rows), expected)


@pytest.mark.parametrize("model", DESK_MODELS, ids=lambda m: m.kind)
def test_sampler_moments_match_closed_forms(model):
    mean, var = ModelCatalog.moments(model)
    values = ModelSampler.raw(model, shard_generator(11, 0), 200_000)
    assert values.shape == (200_000,)
    assert values.mean() == pytest.approx(mean, abs=5 * math.sqrt(var / 200_000))
    assert values.var() == pytest.approx(var, rel=0.05)


@pytest.mark.parametrize("model", DESK_MODELS, ids=lambda m: m.kind)
def test_sampler_support_matches_exact_law(model):
    atoms, _ = RademacherCalculus.law(ModelCatalog.raw_functional(model))
    values = np.unique(ModelSampler.raw(model, shard_generator(3, 0), 5000))
    assert np.all(np.isclose(values[:, None], atoms[None, :]).any(axis=1))


def test_sampler_beyond_exact_cap():
    model = DegreeCountConfig(n=400, p=1 / 400, d=0)
    mean, var = ModelCatalog.moments(model)
    values = ModelSampler.raw(model, shard_generator(5, 0), 20_000)
    assert values.mean() == pytest.approx(mean, abs=5 * math.sqrt(var / 20_000))


# batches

def test_sample_statistic_is_deterministic():
    model = DegreeCountConfig(n=4, p=0.4, d=1)
    a = MonteCarlo.sample_statistic(model, 50_000, 99, threads=1)
    b = MonteCarlo.sample_statistic(model, 50_000, 99, threads=1)
    c = MonteCarlo.sample_statistic(model, 50_000, 99, threads=4)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.values, c.values)
    assert a.count == 50_000
    assert not np.array_equal(a.values, MonteCarlo.sample_statistic(model, 50_000, 100).values)


def test_sample_statistic_is_standardized():
    batch = MonteCarlo.sample_statistic(DegreeCountConfig(n=3, p=0.5, d=0), 200_000, 1)
    assert abs(batch.values.mean()) <= 4 / math.sqrt(200_000) * 2
    assert batch.values.std() == pytest.approx(1.0, rel=0.02)


def test_sample_statistic_errors():
    with pytest.raises(EmptyBatch):
        MonteCarlo.sample_statistic(DegreeCountConfig(n=3, p=0.5), 0, 1)
    with pytest.raises(ZeroVariance):
        MonteCarlo.sample_statistic(TwoRunsConfig(alpha=(0.0, 0.0)), 100, 1)


def test_sample_batch_validation():
    model = DegreeCountConfig(n=3, p=0.5)
    with pytest.raises(EmptyBatch):
        SampleBatch(values=[], model=model, seed=1)
    with pytest.raises(ConfigError):
        SampleBatch(values=[0.0, float("inf")], model=model, seed=1)
    batch = SampleBatch(values=[0.5, -0.5], model=model, seed=1)
    assert not batch.values.flags.writeable


# Kolmogorov statistic and fits

def test_empirical_kolmogorov_examples():
    assert MonteCarlo.empirical_kolmogorov([0.0]) == pytest.approx(0.5)
    N = 1000
    quantiles = stats.norm.ppf((np.arange(1, N + 1) - 0.5) / N)
    assert MonteCarlo.empirical_kolmogorov(quantiles) == pytest.approx(1 / (2 * N))
    with pytest.raises(EmptyBatch):
        MonteCarlo.empirical_kolmogorov(np.array([]))


def test_mc_sd():
    assert MonteCarlo.mc_sd(10 ** 6) == pytest.approx(0.8269e-3)


def test_rate_fit_exact_power_law():
    fit = MonteCarlo.rate_fit([point(n, n ** -0.5) for n in (64, 128, 256, 512)])
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.points == 4


def test_rate_fit_noisy_power_law(rng):
    grid = [64, 128, 256, 512, 1024]
    points = [point(n, min(1.0, 3 * n ** -0.5 * (1 + 0.01 * rng.normal()))) for n in grid]
    assert MonteCarlo.rate_fit(points).slope == pytest.approx(-0.5, abs=0.05)


def test_rate_fit_errors():
    with pytest.raises(TooFewPoints):
        MonteCarlo.rate_fit([point(8, 0.1), point(16, 0.05)])
    with pytest.raises(NonpositiveDk):
        MonteCarlo.rate_fit([point(8, 0.1), point(16, 0.0), point(32, 0.02)])


# p-laws and families

@pytest.mark.parametrize("text, n, expected", [
    ("1/n", 4, 0.25),
    ("2.5 / n", 10, 0.25),
    ("n^-0.5", 16, 0.25),
    ("0.5*n^-0.5", 4, 0.25),
    ("0.3", 1000, 0.3),
])
def test_p_law(text, n, expected):
    assert PLaw.parse(text)(n) == pytest.approx(expected)


def test_p_law_errors():
    with pytest.raises(ConfigError, match="p_law"):
        PLaw.parse("one over n")
    with pytest.raises(BadProbability):
        PLaw.parse("2/n")(2)


def test_model_family():
    family = ModelFamily(kind="degree", p_law=PLaw.parse("1/n"), d=0)
    model = family.at(64)
    assert isinstance(model, DegreeCountConfig)
    assert model.p == pytest.approx(1 / 64)
    assert ModelFamily(kind="two_runs").at(5).alpha == (1.0,) * 5
    with pytest.raises(ConfigError):
        ModelFamily(kind="degree").at(10)
    with pytest.raises(ConfigError):
        ModelFamily(kind="lattice")


# sweeps

def test_sweep_two_runs_predictions():
    family = ModelFamily(kind="two_runs")
    grid = [8, 16, 32]
    points = MonteCarlo.sweep(family, grid, 4000, seed=5, threads=2)
    assert [pt.n for pt in points] == grid
    for pt in points:
        assert pt.prediction == pytest.approx(TwoRunsModel.rate_bound(TwoRunsConfig(alpha=(1.0,) * pt.n)))
        assert pt.provenance == "monte-carlo"
        assert 0.0 < pt.dk < 1.0
    assert MonteCarlo.predicted_exponent(family, [64, 128, 256, 512, 1024]) == pytest.approx(-0.5, abs=0.01)


def test_sweep_rejects_unsorted_grid():
    with pytest.raises(ConfigError, match="n_grid"):
        MonteCarlo.sweep(ModelFamily(kind="two_runs"), [16, 8, 32], 100, seed=1)


def test_rate_fit_of_constant_distances_is_flat():
    fit = MonteCarlo.rate_fit([point(n, 0.02) for n in (8, 16, 32, 64)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("model", DESK_MODELS, ids=lambda m: m.kind)
def test_empirical_matches_exact_distance(model):
    samples = 100_000
    exact = RademacherCalculus.kolmogorov_exact(ModelCatalog.functional(model))
    batch = MonteCarlo.sample_statistic(model, samples, seed=2024)
    assert abs(MonteCarlo.empirical_kolmogorov(batch) - exact) <= 5 * MonteCarlo.mc_sd(samples)


# full-size runs

@pytest.mark.slow
@pytest.mark.parametrize("model", DESK_MODELS, ids=lambda m: m.kind)
def test_empirical_matches_exact_distance_full(model):
    samples = 10 ** 6
    exact = RademacherCalculus.kolmogorov_exact(ModelCatalog.functional(model))
    batch = MonteCarlo.sample_statistic(model, samples, seed=2024, threads=4)
    assert abs(MonteCarlo.empirical_kolmogorov(batch) - exact) <= 5 * MonteCarlo.mc_sd(samples)


@pytest.mark.slow
def test_isolated_vertex_rate():
    family = ModelFamily(kind="degree", p_law=PLaw.parse("1/n"), d=0)
    points = MonteCarlo.sweep(family, [64, 128, 256, 512, 1024], 10 ** 6, seed=1, threads=4)
    assert -0.65 <= MonteCarlo.rate_fit(points).slope <= -0.35


@pytest.mark.slow
def test_two_runs_rate():
    family = ModelFamily(kind="two_runs")
    points = MonteCarlo.sweep(family, [64, 128, 256, 512, 1024], 10 ** 6, seed=1, threads=4)
    assert -0.65 <= MonteCarlo.rate_fit(points).slope <= -0.35


@pytest.mark.slow
def test_triangle_counts_within_predicted_rate():
    family = ModelFamily(kind="subgraph", p_law=PLaw.parse("n^-0.5"), pattern=PATTERNS["triangle"])
    for pt in MonteCarlo.sweep(family, [16, 24, 32, 48, 64], 10 ** 5, seed=1, threads=4):
        assert pt.dk <= 3 * pt.prediction


@pytest.mark.slow
def test_hypercube_within_predicted_rate():
    family = ModelFamily(kind="hypercube", p_law=PLaw.parse("1/n"), d=0)
    for pt in MonteCarlo.sweep(family, list(range(6, 15)), 10 ** 5, seed=1, threads=4):
        assert pt.dk <= 3 * 1.5 ** (-pt.n / 2)
