"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from consensus_lab import (
    DualPowerParams,
    SimTrace,
    random_connected_graph,
)


@pytest.fixture
def bench_rho() -> DualPowerParams:
    """The shaping parameters used by the benchmark replays."""
    return DualPowerParams(alpha=1.0, beta=2.0, p=1.5, q=3.0, k=0.5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_graphs(count: int, n: int, seed: int, extra_edges: int = 3):
    """A reproducible batch of random connected graphs."""
    gen = np.random.default_rng(seed)
    return [random_connected_graph(n, extra_edges=extra_edges, rng=gen) for _ in range(count)]


def synthetic_trace(times, states, h: float = 1e-3, **kwargs) -> SimTrace:
    """Build a trace directly from arrays, for analysis tests."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    diam = states.max(axis=1) - states.min(axis=1)
    sigma = kwargs.pop("sigma", np.zeros(len(times), dtype=np.int64))
    return SimTrace(
        times=times,
        states=states,
        sigma=np.asarray(sigma, dtype=np.int64),
        controls=kwargs.pop("controls", None),
        diameter=diam,
        h=h,
        **kwargs,
    )


def sample_valid_rho(gen: np.random.Generator) -> DualPowerParams:
    """Draw shaping parameters inside the deadline regime.

    Coefficients are log-uniform on [0.1, 10]; the exponent products
    k*p and k*q are drawn directly so the regime constraint holds by
    construction.
    """
    alpha = float(np.exp(gen.uniform(np.log(0.1), np.log(10.0))))
    beta = float(np.exp(gen.uniform(np.log(0.1), np.log(10.0))))
    k = float(gen.uniform(0.1, 3.0))
    kp = float(gen.uniform(0.05, 0.85))
    kq = float(gen.uniform(1.1, 9.0))
    return DualPowerParams(alpha=alpha, beta=beta, p=kp / k, q=kq / k, k=k)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # The acceptance module stores one line per delivery criterion;
    # print them as a closing section so the gate is visible in any run.
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
