import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from explainit import model as model_mod
from explainit.dataset import Dataset
from explainit.synth import BlobSpec, gen_blobs

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Every binary SVM trained anywhere in the suite is checked against the KKT
# conditions at its own training tolerance.
_KKT_LOG = []
_real_train = model_mod.svm_train_binary


def _checked_train(X, y, *args, **kwargs):
    svm = _real_train(X, y, *args, **kwargs)
    tol = kwargs.get("tol", args[2] if len(args) > 2 else 1e-3)
    bad = model_mod.kkt_violations(svm, np.asarray(X, dtype=float), y, tol)
    _KKT_LOG.append((len(y), tol, len(bad)))
    return svm


@pytest.fixture(autouse=True)
def kkt_every_training(monkeypatch):
    monkeypatch.setattr(model_mod, "svm_train_binary", _checked_train)
    start = len(_KKT_LOG)
    yield
    failures = [entry for entry in _KKT_LOG[start:] if entry[2]]
    assert not failures, f"KKT violated after training (n, tol, n_bad): {failures}"


@pytest.fixture(scope="session")
def kkt_log():
    return _KKT_LOG


@pytest.fixture(scope="session")
def blobs3():
    """Three well separated clusters, 40 rows each, 4 informative + 2 noise dims."""
    return gen_blobs(BlobSpec(n_per_cluster=40, k=3, informative=4, noise=2, separation=12.0, seed=7))


@pytest.fixture
def tiny():
    return Dataset(["a", "b"], np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]))


# ----------------------------------------------------------- acceptance lines

_ACCEPTANCE = {}
_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    prev = _ACCEPTANCE.get(n, (True, m.group(2)))
    if report.when == "call" or failed:
        _ACCEPTANCE[n] = (prev[0] and not failed, m.group(2))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, name = _ACCEPTANCE[n]
        terminalreporter.write_line(f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {name.replace('_', ' ')}")
