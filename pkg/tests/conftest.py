import numpy as np
import pytest

from brw import kernels
from brw.params import ParameterSet

_KERNEL_NAMES = ["vertex_digits", "vertex_digits_multi", "leaf_values", "leaf_values_batch",
                 "gw_level_sizes"]
BACKENDS = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])

GOLDEN_POLY = "-1,-1,1"


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = kernels.backend(request.param)
    for name in _KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def golden():
    return ParameterSet.from_minpoly(GOLDEN_POLY)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])
