import numpy as np
import pytest

from hfsmlab import kernel, lepage, synth


@pytest.fixture(scope="session")
def table_a15h05():
    return kernel.build_table(1.5, 0.5)


@pytest.fixture(scope="session")
def draw_main():
    return lepage.draw_lepage(1.5, 0.5, 10001, master_seed=11, draw_id=0)


@pytest.fixture(scope="session")
def ens128(table_a15h05):
    cfg = synth.SynthConfig(alpha=1.5, hurst=0.5, dt=2.0 ** -13)
    return synth.ensemble(cfg, 128, 321, kernel_table=table_a15h05)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)
