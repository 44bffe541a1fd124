import numpy as np
import pytest

# one line per acceptance criterion, echoed after the test run
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("=== acceptance summary ===")
        for line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)

from twinfed.data import Dataset
from twinfed.engine import FederatedEngine, FLConfig, Strategy
from twinfed.nn import LayeredParams, ModelArch, init_params


def rng(seed=0):
    return np.random.default_rng(seed)


def random_params(arch: ModelArch, seed=0) -> LayeredParams:
    return init_params(arch, rng(seed))


def make_dataset(n=40, d=4, seed=0, name="ds") -> Dataset:
    r = rng(seed)
    x = r.normal(size=(n, d))
    y = (x[:, 0] + 0.3 * r.normal(size=n) > 0).astype(int)
    if y.min() == y.max():  # guarantee both classes
        y[0] = 1 - y[0]
    return Dataset(x, y, name=name)


def tiny_engine(strategy=None, seed=0, num_clients=4, rounds=3, twin=True, **fl_kw):
    kw = dict(
        num_clients=num_clients,
        client_fraction=0.5,
        local_epochs=1,
        batch_size=8,
        max_rounds=rounds,
        target_accuracy=0.999,
        seed=seed,
    )
    kw.update(fl_kw)
    fl = FLConfig(**kw)
    d = 4
    shards = [make_dataset(24, d, seed=100 + i, name=f"c{i}") for i in range(num_clients)]
    test = make_dataset(60, d, seed=7, name="test")
    twin_data = make_dataset(80, d, seed=9, name="twin") if twin else None
    arch = ModelArch((d, 6, 5, 1))
    return FederatedEngine(fl, arch, shards, test, strategy or Strategy(), twin_data=twin_data)


@pytest.fixture
def tmp_output(tmp_path, monkeypatch):
    monkeypatch.setenv("TWINFED_OUTPUT_ROOT", str(tmp_path))
    return tmp_path
