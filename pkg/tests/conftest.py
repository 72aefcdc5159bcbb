import pathlib

import pytest

from qmem.electromech import BvdParams, ShuntCircuit

DATA_DIR = pathlib.Path(__file__).parent / "data"

# published device point used across the suite
PAPER_BVD = dict(C0=8.96e-16, Cm=1.38e-19, Lm=18.9)


@pytest.fixture
def paper_bvd() -> BvdParams:
    return BvdParams(**PAPER_BVD)


@pytest.fixture
def fluxonium_shunt() -> ShuntCircuit:
    return ShuntCircuit(Cr=30e-15, f_r=100e6)


@pytest.fixture
def snail_shunt() -> ShuntCircuit:
    return ShuntCircuit(Cr=0.26e-12, Lr=75e-9)


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR
