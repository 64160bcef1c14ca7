import sys
from pathlib import Path

import numpy as np
import pytest

project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from config import get_settings
from models.space import symmetric_space
from services.malliavin import RademacherCalculus
from services.verification import pure_chaos, random_functional, random_space


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def make_functional(rng):
    """Random functional on a mixed-bias space with p_k in [0.05, 0.95]"""
    def factory(m=4):
        space = random_space(rng, m)
        return random_functional(rng, space)
    return factory


@pytest.fixture
def standardized_corpus(rng):
    """Standardized random functionals plus a few pure chaoses"""
    corpus = []
    for m in (2, 3, 4, 5):
        space = random_space(rng, m)
        corpus.append(RademacherCalculus.standardize(random_functional(rng, space)))
    for m, order in ((4, 2), (5, 3)):
        corpus.append(pure_chaos(rng, random_space(rng, m), order)[0])
    return corpus


@pytest.fixture
def fair2():
    return symmetric_space(2)


@pytest.fixture
def settings_env(monkeypatch):
    """Set RSL_* variables for one test; the settings cache is cleared around it"""
    get_settings.cache_clear()

    def setenv(name, value):
        monkeypatch.setenv(name, str(value))
        get_settings.cache_clear()

    yield setenv
    get_settings.cache_clear()
