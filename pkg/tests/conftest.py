import os

import numpy as np
import pytest

from levy_dividend_opt import (
    JumpMixture,
    JumpTerm,
    ModelSpec,
    SNFunctionals,
    SPFunctionals,
    ThresholdOptimizer,
    build_scale,
)

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MODEL_DIR = os.path.join(ROOT, "models")


def make_case1() -> ModelSpec:
    return ModelSpec(
        drift=1.5, sigma=0.2, jumps=JumpMixture(1.0, (JumpTerm(1.0, 1.0),)),
        delta=1.0, q=0.05,
    )


def make_case2() -> ModelSpec:
    return ModelSpec(
        drift=5.0, sigma=0.0, jumps=JumpMixture(0.01, (JumpTerm(1.0, 1.0),)),
        delta=0.1, q=0.05,
    )


def make_bm() -> ModelSpec:
    return ModelSpec(
        drift=0.0, sigma=float(np.sqrt(2.0)), jumps=JumpMixture(0.0),
        delta=1.0, q=0.05,
    )


def make_sp_desk() -> ModelSpec:
    return ModelSpec(
        drift=-1.0, sigma=0.2,
        jumps=JumpMixture(1.5, (JumpTerm(0.7, 1.0), JumpTerm(0.3, 3.0))),
        delta=1.0, q=0.05, side="spectrally-positive",
    )


@pytest.fixture(scope="session")
def case1():
    return make_case1()


@pytest.fixture(scope="session")
def case2():
    return make_case2()


@pytest.fixture(scope="session")
def bm():
    return make_bm()


@pytest.fixture(scope="session")
def sp_desk():
    return make_sp_desk()


@pytest.fixture(scope="session")
def pair1(case1):
    return build_scale(case1)


@pytest.fixture(scope="session")
def pair2(case2):
    return build_scale(case2)


@pytest.fixture(scope="session")
def pair_bm(bm):
    return build_scale(bm)


@pytest.fixture(scope="session")
def fn1(pair1):
    return SNFunctionals(pair1)


@pytest.fixture(scope="session")
def fn2(pair2):
    return SNFunctionals(pair2)


@pytest.fixture(scope="session")
def fn_bm(pair_bm):
    return SNFunctionals(pair_bm)


@pytest.fixture(scope="session")
def opt1(fn1):
    return ThresholdOptimizer(fn1)


@pytest.fixture(scope="session")
def opt2(fn2):
    return ThresholdOptimizer(fn2)


@pytest.fixture(scope="session")
def spf(sp_desk):
    return SPFunctionals(sp_desk)


@pytest.fixture(scope="session")
def model_dir():
    return MODEL_DIR
