"""Scalar convergence-time machinery for the dual-power feedback family.

The protocols drive disagreement through feedback of the form
``(alpha |v|**p + beta |v|**q)**k * sign(v)``.  When ``k*p < 1 < k*q``
the scalar system ``dx/dt = -(alpha |x|**p + beta |x|**q)**k * sign(x)``
reaches the origin from any initial condition within a finite horizon
that does not depend on the initial condition.  ``settling_bound``
evaluates that horizon in closed form through the gamma function;
``scalar_settling_oracle`` measures it by direct integration and is used
to validate the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import NDArray

__all__ = [
    "DualPowerParams",
    "dual_power",
    "gamma_function",
    "settling_bound",
    "scalar_settling_oracle",
    "lyapunov_rate_check",
]


@dataclass(frozen=True)
class DualPowerParams:
    """Exponent and coefficient set ``(alpha, beta, p, q, k)`` for the feedback.

    Construction only requires positivity (``p`` and ``q`` may be zero).
    The stronger exponent ordering ``k*p < 1 < k*q`` needed for an
    initial-condition-free deadline is checked by
    :meth:`require_fixed_time`, so parameter sets outside that region can
    still be simulated.
    """

    alpha: float
    beta: float
    p: float
    q: float
    k: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "k"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("p", "q"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    def require_fixed_time(self) -> None:
        """Raise unless the exponents put the feedback in the deadline regime."""
        if not self.k * self.p < 1.0:
            raise ValueError(
                f"deadline regime requires k*p < 1, got k*p = {self.k * self.p}"
            )
        if not self.k * self.q > 1.0:
            raise ValueError(
                f"deadline regime requires k*q > 1, got k*q = {self.k * self.q}"
            )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "p": self.p,
            "q": self.q,
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DualPowerParams":
        return cls(
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            p=float(data["p"]),
            q=float(data["q"]),
            k=float(data["k"]),
        )


def dual_power(
    v: float | NDArray[np.float64], params: DualPowerParams
) -> float | NDArray[np.float64]:
    """Magnitude of the feedback: ``(alpha |v|**p + beta |v|**q)**k``."""
    mag = np.abs(v)
    return (params.alpha * mag**params.p + params.beta * mag**params.q) ** params.k


# Lanczos approximation, g = 7, 9 coefficients.  Accurate to ~1e-13 in
# double precision over the real line away from the poles.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(z: float) -> float:
    """Gamma function for positive real arguments via the Lanczos series.

    Relative error stays below 1e-12 over the range the settling bound
    needs.  Uses the reflection identity on ``(0, 0.5)`` where the
    series alone loses accuracy.
    """
    z = float(z)
    if not z > 0.0:
        raise ValueError(f"gamma_function requires z > 0, got {z}")
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * gamma_function(1.0 - z))
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for idx in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[idx] / (z + idx)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def settling_bound(params: DualPowerParams) -> float:
    """Worst-case convergence time of the scalar dual-power system.

    Equals the improper integral of ``1 / (alpha s**p + beta s**q)**k``
    over ``s in (0, inf)``, evaluated in closed form:

    ``gamma((1-kp)/(q-p)) * gamma((kq-1)/(q-p))
    / (alpha**k * gamma(k) * (q-p)) * (alpha/beta)**((1-kp)/(q-p))``

    Requires ``k*p < 1 < k*q``; the integral diverges otherwise.
    """
    params.require_fixed_time()
    a, b, p, q, k = params.alpha, params.beta, params.p, params.q, params.k
    span = q - p
    lo = (1.0 - k * p) / span
    hi = (k * q - 1.0) / span
    return (
        gamma_function(lo)
        * gamma_function(hi)
        / (a**k * gamma_function(k) * span)
        * (a / b) ** lo
    )


@njit(cache=True, fastmath=True)
def _integrate_scalar(
    x0: float,
    alpha: float,
    beta: float,
    p: float,
    q: float,
    k: float,
    h: float,
    threshold: float,
    max_steps: int,
) -> float:
    # Explicit Euler from the step start point with a step limiter: each
    # update may shrink |x| by at most 10%, so the fast tail at large |x|
    # is resolved geometrically instead of overshooting, and near the
    # threshold the iteration cannot chatter across zero.  Because the
    # speed is largest at the step start, each limited step covers at
    # least as much ground as the true flow does in the same interval,
    # so the accumulated time never exceeds the true settling time.
    x = abs(x0)
    t = 0.0
    steps = 0
    while x > threshold:
        if steps >= max_steps:
            return -1.0
        speed = (alpha * x**p + beta * x**q) ** k
        dt = h
        move = speed * dt
        cap = 0.1 * x
        if move > cap:
            move = cap
            dt = cap / speed
        x -= move
        t += dt
        steps += 1
    return t


def scalar_settling_oracle(
    params: DualPowerParams,
    x0: float,
    h: float = 1e-6,
    threshold: float = 1e-9,
    max_steps: int = 2_000_000_000,
) -> float:
    """Measured convergence time of the scalar dual-power system.

    Integrates ``dx/dt = -(alpha |x|**p + beta |x|**q)**k * sign(x)``
    from ``x0`` until ``|x| <= threshold`` and returns the elapsed time.
    The integrator underestimates the true time by construction, so the
    result is a certified lower bound that also stays below
    :func:`settling_bound` for valid parameters.
    """
    if x0 == 0.0:
        return 0.0
    if not h > 0.0:
        raise ValueError("step size must be positive")
    if not threshold > 0.0:
        raise ValueError("threshold must be positive")
    t = _integrate_scalar(
        float(x0),
        params.alpha,
        params.beta,
        params.p,
        params.q,
        params.k,
        float(h),
        float(threshold),
        int(max_steps),
    )
    if t < 0.0:
        raise RuntimeError(
            f"no threshold crossing within {max_steps} steps; "
            "check that k*p < 1 holds or relax the threshold"
        )
    return t


def lyapunov_rate_check(
    times: NDArray[np.float64],
    values: NDArray[np.float64],
    rho: DualPowerParams,
    T_c: float,
    rel_slack: float = 0.05,
    floor: float = 1e-3,
) -> tuple[bool, float]:
    """Audit the decay inequality that certifies the deadline ``T_c``.

    A nonnegative function decaying along trajectories at rate
    ``dV/dt <= -(gamma(rho)/T_c) * (alpha V**p + beta V**q)**k`` reaches
    zero before ``T_c`` from any start, by the scalar settling bound.
    This check numerically differentiates a sampled ``V`` (forward
    differences) and verifies that inequality at every sample with
    ``V > floor``, allowing a relative slack band for discretization
    noise near the sliding set.  Returns ``(ok, max_violation)`` where
    positive violation means the slackened bound failed somewhere.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")
    if np.any(values < 0.0):
        raise ValueError("Lyapunov values must be non-negative")
    if not T_c > 0.0:
        raise ValueError("T_c must be positive")
    gamma = settling_bound(rho)
    v = values[:-1]
    dv = np.diff(values) / np.diff(times)
    rate = (gamma / T_c) * (rho.alpha * v**rho.p + rho.beta * v**rho.q) ** rho.k
    active = v > floor
    if not np.any(active):
        return True, 0.0
    # Violation is positive where dV/dt exceeds the slackened bound.
    violation = dv[active] + (1.0 - rel_slack) * rate[active]
    worst = float(np.max(violation))
    return worst <= 0.0, worst
