"""Shared test configuration.

Registers a hypothesis profile without deadlines (jit compilation makes
first calls slow) and warms the compiled kernels once per session so
individual tests measure steady-state behavior.
"""

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("package", deadline=None, max_examples=25)
settings.load_profile("package")


@pytest.fixture(scope="session", autouse=True)
def _warm_compiled_kernels():
    from gbsdense.hafnian import hafnian

    hafnian(np.ones((4, 4)))
