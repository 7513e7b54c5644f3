"""Executable checks for the inequality toolkit behind the convergence proofs.

Four facts about the scalar map ``f(x) = x * (alpha x**p + beta x**q)**k``
and about p-norms are used when bounding the disagreement dynamics:
monotonicity of ``f``, convexity of ``f``, a Jensen-type mean inequality,
and the ordering of p-norms.  Each is exposed here as a callable oracle
returning the inequality margin, so property suites and the Lyapunov rate
verification can share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .settling import DualPowerParams

__all__ = [
    "PolyFunc",
    "jensen_poly_check",
    "norm_ordering_check",
]


@dataclass(frozen=True)
class PolyFunc:
    """The scalar map ``f(x) = x * (alpha x**p + beta x**q)**k`` on ``x > 0``.

    Increasing and convex for every parameter set in the deadline regime;
    both facts feed the disagreement-contraction argument.
    """

    rho: DualPowerParams

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def eval(self, x: float) -> float:
        if not x > 0.0:
            raise ValueError("f is defined on x > 0")
        r = self.rho
        return x * (r.alpha * x**r.p + r.beta * x**r.q) ** r.k

    def second_derivative(self, x: float) -> float:
        """Closed-form second derivative of ``f``; positive on ``x > 0``.

        ``(k/x) (alpha x**p + beta x**q)**(k-2) * (
        alpha**2 p (kp+1) x**(2p)
        + alpha beta (2kpq + p + q + (q-p)**2) x**(p+q)
        + beta**2 q (kq+1) x**(2q))``
        """
        if not x > 0.0:
            raise ValueError("f is defined on x > 0")
        a, b, p, q, k = (
            self.rho.alpha,
            self.rho.beta,
            self.rho.p,
            self.rho.q,
            self.rho.k,
        )
        inner = a * x**p + b * x**q
        bracket = (
            a * a * p * (k * p + 1.0) * x ** (2.0 * p)
            + a * b * (2.0 * k * p * q + p + q + (q - p) ** 2) * x ** (p + q)
            + b * b * q * (k * q + 1.0) * x ** (2.0 * q)
        )
        return (k / x) * inner ** (k - 2.0) * bracket


def jensen_poly_check(
    rho: DualPowerParams, a: NDArray[np.float64]
) -> tuple[bool, float]:
    """Mean-of-f versus f-of-mean inequality for positive samples.

    For positive ``a_1 .. a_n`` the convexity of :class:`PolyFunc` gives
    ``mean_i f(a_i) >= f(mean_i a_i)``.  Returns ``(holds, margin)`` with
    ``margin = left - right``; equality (margin 0) when all entries agree.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("need at least one sample")
    if not np.all(a > 0.0):
        raise ValueError("samples must be positive")
    if np.all(a == a.flat[0]):
        # Jensen equality case; short-circuit so rounding in the mean
        # cannot produce a spurious nonzero margin.
        return True, 0.0
    al, be, p, q, k = rho.alpha, rho.beta, rho.p, rho.q, rho.k
    # One vectorized evaluation covers samples and mean, so both sides
    # share a code path and rounding.
    pts = np.append(a, np.mean(a))
    f = pts * (al * pts**p + be * pts**q) ** k
    margin = float(np.mean(f[:-1]) - f[-1])
    return margin >= 0.0, margin


def norm_ordering_check(
    z: NDArray[np.float64], l: float, r: float
) -> tuple[bool, float]:
    """p-norm ordering ``||z||_l <= ||z||_r`` for exponents ``l >= r >= 1``.

    Returns ``(holds, margin)`` with ``margin = ||z||_r - ||z||_l``.
    """
    if not (l >= r >= 1.0):
        raise ValueError("need l >= r >= 1")
    z = np.asarray(z, dtype=float)
    norm_l = float(np.sum(np.abs(z) ** l) ** (1.0 / l))
    norm_r = float(np.sum(np.abs(z) ** r) ** (1.0 / r))
    margin = norm_r - norm_l
    return margin >= 0.0, margin
