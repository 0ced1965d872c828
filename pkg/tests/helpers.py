"""Small shared helpers for the test-suite."""

import math

from tfqkd.core import ChannelParams, IntensitySet

# lines collected by the acceptance tests, printed once at the end of the run
ACCEPTANCE_LINES: dict = {}


def ref_channel(eta=1e-3, pd=1e-7, fraction=0.02):
    return ChannelParams.with_default_misalignment(eta, pd, fraction)


def ints(*vals, ordered=True):
    return IntensitySet(vals, ordered=ordered)


def rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


def close(a, b, rtol=1e-12, atol=0.0):
    return math.isclose(a, b, rel_tol=rtol, abs_tol=atol)


# command lines behind the frozen files in tests/fixtures
FIXTURE_RUNS = {
    "sweep_infinite.csv": ["sweep", "--decoys", "inf", "--pd", "1e-7",
                           "--loss-start", "0", "--loss-end", "80", "--loss-step", "10"],
    "sweep_two.csv": ["sweep", "--decoys", "2", "--pd", "1e-6",
                      "--loss-start", "0", "--loss-end", "60", "--loss-step", "15"],
    "fluctuate_two.csv": ["fluctuate", "--decoys", "2", "--pd", "1e-7", "--magnitude", "0.4",
                          "--loss-start", "0", "--loss-end", "60", "--loss-step", "20"],
    "optimize_four.json": ["optimize", "--decoys", "4", "--pd", "1e-7", "--loss", "40"],
}
