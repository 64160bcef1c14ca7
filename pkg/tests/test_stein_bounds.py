import math

import numpy as np
import pytest

from models.applications import TwoRunsConfig
from models.bounds import BoundTerms, SecondOrderVariant
from models.functional import Functional
from models.space import make_space, symmetric_space
from services.applications import TwoRunsModel
from services.malliavin import RademacherCalculus
from services.stein_bounds import SteinBounds
from utils.errors import NotPureChaos, NotStandardized


@pytest.fixture
def y1():
    return Functional.coordinate_y(symmetric_space(1), 0)


@pytest.fixture
def y1y2():
    return Functional.monomial(symmetric_space(2), [0, 1])


def test_bound_terms_single_coordinate(y1):
    t = SteinBounds.bound_terms(y1)
    assert (t.b1, t.b2, t.b4, t.b5) == (0.0, 0.0, 0.0, 0.0)
    assert t.b3 == pytest.approx(4.0)
    assert t.kappa == pytest.approx(0.25)
    assert t.a3 == pytest.approx(2.0)


def test_bound_terms_product(y1y2):
    t = SteinBounds.bound_terms(y1y2)
    assert [t.b1, t.b2, t.b3, t.b4, t.b5] == pytest.approx([2.0, 8.0, 8.0, 8.0, 32.0])
    assert t.kappa == pytest.approx(0.5)


def test_bound_terms_of_constant():
    t = SteinBounds.bound_terms(Functional.constant(symmetric_space(3, 0.2), 1.5))
    assert [t.b1, t.b2, t.b3, t.b4, t.b5, t.a3] == [0.0] * 6
    assert t.kappa == pytest.approx(3 * 0.16)


def test_second_order_kolmogorov_arithmetic(y1, y1y2):
    zero = BoundTerms(b1=0, b2=0, b3=0, b4=0, b5=0, kappa=1.0, a3=0)
    for variant in SecondOrderVariant:
        assert SteinBounds.second_order_kolmogorov(zero, variant) == 0.0
    assert SteinBounds.second_order_kolmogorov(SteinBounds.bound_terms(y1), "R2") == pytest.approx(4.0)

    expected = (
        math.sqrt(15) / 2 * math.sqrt(2) + math.sqrt(3) / 2 * math.sqrt(8)
        + 2 * math.sqrt(8) + 2 * math.sqrt(6) * math.sqrt(8) + 2 * math.sqrt(3) * math.sqrt(32)
    )
    assert SteinBounds.second_order_kolmogorov(SteinBounds.bound_terms(y1y2), SecondOrderVariant.R1) == pytest.approx(expected)


def test_second_order_wasserstein(y1):
    assert SteinBounds.second_order_wasserstein(SteinBounds.bound_terms(y1)) == pytest.approx(2.0)
    t = BoundTerms(b1=1, b2=1, b3=0, b4=0, b5=0, kappa=0, a3=0)
    expected = math.sqrt(15 / (2 * math.pi)) + math.sqrt(3 / (2 * math.pi))
    assert SteinBounds.second_order_wasserstein(t) == pytest.approx(expected)


def test_kol_r2_examples(y1, y1y2):
    assert SteinBounds.kol_r2(y1) == pytest.approx(4.0)
    assert SteinBounds.inner_gap(y1y2) == pytest.approx(0.0, abs=1e-12)
    assert SteinBounds.kol_r2(y1y2) == pytest.approx(8.0)
    space = symmetric_space(2)
    F = (Functional.coordinate_y(space, 0) + Functional.coordinate_y(space, 1)) / math.sqrt(2.0)
    assert SteinBounds.kol_r2(F) == pytest.approx(4.0)


def test_kol_r1_single_coordinate(y1):
    assert np.allclose(SteinBounds.divergence_weights(y1), 2.0)
    assert SteinBounds.divergence_term(y1) == pytest.approx(2.0)
    assert SteinBounds.kol_r1(y1) == pytest.approx(4.0)


def test_bounds_require_standardized_input():
    F = Functional.coordinate_y(symmetric_space(1), 0) * 2.0
    for bound in (SteinBounds.kol_r1, SteinBounds.kol_r2, SteinBounds.kol_r0, SteinBounds.gamma0_first_term):
        with pytest.raises(NotStandardized):
            bound(F)


def test_stein_solution_properties():
    x = np.arange(-8.0, 8.0 + 1e-12, 1.0 / 16.0)
    for z in (-3.0, -0.5, 0.0, 1.25, 4.0):
        f = SteinBounds.stein_solution(z, x)
        assert np.max(np.abs(f)) <= math.sqrt(2 * math.pi) / 4 + 1e-12
        assert np.max(np.abs(x * f)) <= 1 + 1e-12
        assert np.min(np.diff(x * f)) >= -1e-12


def test_stein_solution_is_finite_far_out():
    assert np.all(np.isfinite(SteinBounds.stein_solution(0.0, np.array([-40.0, 40.0]))))


def test_z_grid_contains_atoms_and_tails():
    atoms = np.array([-1.0, 0.5, 2.0])
    grid = SteinBounds.z_grid(atoms, 3)
    assert set(atoms) <= set(grid)
    assert grid[0] == -10.0 and grid[-1] == 10.0
    assert grid.shape[0] == 3 + 2 * 3 + 2


def test_kol_r0_single_coordinate(y1):
    result = SteinBounds.kol_r0(y1, refine=64)
    assert result.approximate
    assert result.refine == 64
    assert math.isfinite(result.value)
    assert result.value >= RademacherCalculus.kolmogorov_exact(y1)
    assert result.value <= SteinBounds.kol_r1(y1) + 1e-9
    with pytest.raises(ValueError):
        SteinBounds.kol_r0(y1, refine=0)


def test_gamma0_first_term():
    fair = Functional.coordinate_y(symmetric_space(1), 0)
    assert SteinBounds.gamma0_first_term(fair) == pytest.approx(0.0, abs=1e-12)
    biased = Functional.coordinate_y(symmetric_space(1, 0.3), 0)
    assert SteinBounds.gamma0_first_term(biased) > 0.0
    assert SteinBounds.gamma0_first_term(Functional.monomial(symmetric_space(2), [0, 1])) == pytest.approx(0.0, abs=1e-12)


def test_maximal_influence():
    assert SteinBounds.maximal_influence(np.array([[0.0, 0.5], [0.5, 0.0]])) == pytest.approx(0.25)
    assert SteinBounds.maximal_influence(np.zeros((3, 3))) == 0.0
    assert SteinBounds.maximal_influence(np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0)


def test_gamma_m():
    assert SteinBounds.gamma_m(1) == 2
    assert SteinBounds.gamma_m(2) == 72


def test_fourth_moment_bound(y1y2):
    report = SteinBounds.fourth_moment_bound(y1y2, 2)
    assert report.fourth_moment == pytest.approx(1.0)
    assert report.max_influence == pytest.approx(0.25)
    c1 = (3 + 4 * math.sqrt(25 * 5)) / 4
    c2 = (3 + 4 * math.sqrt(25 * 9 * 72)) / 4
    assert report.bound == pytest.approx(c1 * math.sqrt(2) + c2 * 0.5)


def test_fourth_moment_bound_rejects_mixed_chaos():
    space = symmetric_space(2)
    F = (Functional.coordinate_y(space, 0) + Functional.monomial(space, [0, 1])) / math.sqrt(2.0)
    with pytest.raises(NotPureChaos):
        SteinBounds.fourth_moment_bound(F, 2)


def test_bounds_dominate_exact_distances(standardized_corpus):
    for F in standardized_corpus:
        dk = RademacherCalculus.kolmogorov_exact(F)
        terms = SteinBounds.bound_terms(F)
        assert dk <= SteinBounds.kol_r1(F) + 1e-9
        assert dk <= SteinBounds.kol_r2(F) + 1e-9
        assert dk <= SteinBounds.kol_r0(F, refine=8).value + 1e-9
        for variant in SecondOrderVariant:
            assert dk <= SteinBounds.second_order_kolmogorov(terms, variant) + 1e-9
        assert SteinBounds.wasserstein_exact(F) <= SteinBounds.second_order_wasserstein(terms) + 1e-9
        assert SteinBounds.bound_consistency(F, terms).holds


def test_bound_terms_ignore_coordinate_labels(make_functional, rng):
    F = RademacherCalculus.standardize(make_functional(5))
    perm = rng.permutation(5)
    index = np.arange(F.space.size)
    source = np.zeros_like(index)
    for j, k in enumerate(perm):
        source |= ((index >> j) & 1) << k
    G = Functional(space=make_space(F.space.p[perm].tolist()), values=F.values[source])
    assert RademacherCalculus.variance(G) == pytest.approx(1.0)

    a, b = SteinBounds.bound_terms(F), SteinBounds.bound_terms(G)
    for field in ("b1", "b2", "b3", "b4", "b5", "kappa", "a3"):
        assert getattr(b, field) == pytest.approx(getattr(a, field), rel=1e-10, abs=1e-14)


def test_sup_term_is_nonnegative_on_the_grid(standardized_corpus):
    for F in standardized_corpus:
        atoms, _ = RademacherCalculus.law(F)
        weights = SteinBounds.divergence_weights(F)
        values = [SteinBounds.sup_term(F, z, weights) for z in SteinBounds.z_grid(atoms, 8)]
        assert min(values) >= -1e-10


def test_kol_r0_grid_counts_each_atom_once():
    F = TwoRunsModel.functional(TwoRunsConfig(alpha=(1.0, 1.0, 1.0)))
    atoms, _ = RademacherCalculus.law(F)
    assert atoms.shape[0] == 4
    assert SteinBounds.kol_r0(F, refine=8).grid_size == 4 + 3 * 8 + 2
