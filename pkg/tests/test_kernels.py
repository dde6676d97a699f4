from __future__ import annotations

import os
import subprocess
import sys

import pytest

from fpm2d import kernels
from fpm2d.assembly import Discretization
from fpm2d.benchmarks import patch


def test_python_fallback_is_always_available():
    assert kernels.get("python") is not None
    with pytest.raises(ValueError):
        kernels.get("fortran")


@pytest.mark.skipif("compiled" not in kernels.IMPLEMENTATIONS, reason="extension not built")
@pytest.mark.parametrize("order", [1, 2])
def test_compiled_and_python_kernels_agree(order):
    model = patch("25", layout="random")
    a = Discretization(model, order=order, kernel="python").K
    b = Discretization(model, order=order, kernel="compiled").K
    assert abs(a - b).max() < 1e-13 * abs(a).max()


def test_environment_forces_fallback():
    env = dict(os.environ, FPM2D_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", "import fpm2d.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
