import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def psr_oracle(gamma, W):
    """PSR via math.erfc only, independent of the package's scipy path."""
    bit_error = 0.5 * math.erfc(4.0 * math.sqrt(gamma) / math.sqrt(2.0))
    return (1.0 - bit_error) ** W


def sinr_oracle(kappa, W, hi=50.0):
    """Bisection for the SINR meeting a PSR target."""
    lo = 0.0
    if psr_oracle(lo, W) >= kappa:
        return 0.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if psr_oracle(mid, W) < kappa:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def riccati_oracle(F, H, R1, R2):
    """Positive root of the scalar lossless Riccati fixed-point equation, by bisection."""
    g = lambda P: F * F * P + R1 - (F * P * H) ** 2 / (H * H * P + R2) - P
    lo, hi = 0.0, 1.0
    while g(hi) > 0:
        hi *= 2
    for _ in range(300):
        mid = (lo + hi) / 2
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20191016)


# acceptance verdicts, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
