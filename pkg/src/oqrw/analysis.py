"""
Statistics of walk distributions: moments, total variation, comparison with a
discretized normal law, and Konno's limit density for unitary walks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral

import numpy as np
from scipy import integrate, special

from .errors import DegenerateDistributionError, OutsideSupportError
from .walk import WalkDistribution


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    total_mass: float


def _lattice_arrays(d: WalkDistribution) -> tuple[np.ndarray, np.ndarray]:
    sites = list(d.probs)
    if not all(isinstance(v, Integral) for v in sites):
        raise TypeError("moments need integer vertex labels")
    x = np.array(sites, dtype=np.float64)
    p = np.array([d.probs[v] for v in sites], dtype=np.float64)
    return x, p


def moments(d: WalkDistribution) -> MomentSummary:
    """Mean and variance of an integer-labelled distribution."""
    x, p = _lattice_arrays(d)
    mass = float(p.sum())
    mean = float(np.dot(p, x))
    # centered form avoids cancellation in sum(x^2 p) - mean^2
    var = float(np.dot(p, (x - mean) ** 2)) + mean * mean * (1.0 - mass)
    return MomentSummary(mean, max(var, 0.0), mass)


def total_variation(a: WalkDistribution, b: WalkDistribution) -> float:
    """``(1/2) sum_i |a_i - b_i|`` over the union of supports."""
    keys = set(a.probs) | set(b.probs)
    return 0.5 * math.fsum(abs(a.probs.get(k, 0.0) - b.probs.get(k, 0.0)) for k in keys)


def _normal_cdf(z):
    return 0.5 * special.erfc(-np.asarray(z) / math.sqrt(2.0))


def discretized_normal(sites, mean: float, variance: float, spacing: int = 1) -> np.ndarray:
    """Normal mass of the cells ``[s - spacing/2, s + spacing/2)`` around each site."""
    s = np.asarray(sites, dtype=np.float64)
    sd = math.sqrt(variance)
    return _normal_cdf((s + spacing / 2 - mean) / sd) - _normal_cdf((s - spacing / 2 - mean) / sd)


def gaussian_discrepancy(d: WalkDistribution) -> float:
    """
    Total variation between ``d`` and a normal law with matching mean and
    variance, integrated over lattice cells.

    When the support lies on one parity class the comparison uses that
    sublattice (cells of width 2), and the variance is reduced by the
    Sheppard term ``h^2 / 12`` whenever that leaves it positive.
    """
    m = moments(d)
    if m.variance <= 0.0:
        raise DegenerateDistributionError("distribution has zero variance")
    x, p = _lattice_arrays(d)
    parities = {int(v) % 2 for v in x}
    h = 2 if len(parities) == 1 else 1
    var = m.variance - h * h / 12.0
    if var <= 0.0:
        var = m.variance
    lo, hi = int(x.min()), int(x.max())
    k = int(math.ceil(10.0 * math.sqrt(var) / h)) + 1
    grid = np.arange(lo - k * h, hi + k * h + 1, h)
    q = discretized_normal(grid, m.mean, var, h)
    emp = dict(zip(x.astype(int).tolist(), p.tolist()))
    tv = math.fsum(abs(emp.pop(int(s), 0.0) - qs) for s, qs in zip(grid, q))
    tv += math.fsum(emp.values())
    # normal mass beyond the grid
    tv += float(_normal_cdf((grid[0] - h / 2 - m.mean) / math.sqrt(var)) + _normal_cdf(-(grid[-1] + h / 2 - m.mean) / math.sqrt(var)))
    return 0.5 * tv


def konno_density(a: float, lam: float, x: float) -> float:
    """
    ``sqrt(1 - a^2) (1 - lam x) / (pi (1 - x^2) sqrt(a^2 - x^2))`` on ``|x| < a``.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if abs(x) >= a:
        raise OutsideSupportError(f"|x| = {abs(x)} is outside the support (-{a}, {a})")
    return math.sqrt(1 - a * a) * (1 - lam * x) / (math.pi * (1 - x * x) * math.sqrt(a * a - x * x))


def konno_mass(a: float, lam: float, lo: float, hi: float) -> float:
    """
    Integral of :func:`konno_density` over ``[lo, hi]`` clipped to ``(-a, a)``.

    The inverse square-root endpoint singularities are handled as an
    algebraic quadrature weight.
    """
    lo, hi = max(lo, -a), min(hi, a)
    if hi <= lo:
        return 0.0
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    c = math.sqrt(1 - a * a) / math.pi

    def smooth(x):
        # density = smooth(x) * (x + a)^-1/2 * (a - x)^-1/2
        return c * (1 - lam * x) / (1 - x * x)

    if lo == -a and hi == a:
        val, _ = integrate.quad(smooth, -a, a, weight="alg", wvar=(-0.5, -0.5), epsabs=1e-13, epsrel=1e-12)
        return float(val)
    # split so each piece carries at most one singular endpoint
    mid = 0.5 * (lo + hi)
    total = 0.0
    for left, right in ((lo, mid), (mid, hi)):
        wl = -0.5 if left == -a else 0.0
        wr = -0.5 if right == a else 0.0

        def f(x, wl=wl, wr=wr):
            # restore the factors not absorbed by the weight
            val = smooth(x)
            if wl == 0.0:
                val /= math.sqrt(x + a)
            if wr == 0.0:
                val /= math.sqrt(a - x)
            return val

        v, _ = integrate.quad(f, left, right, weight="alg", wvar=(wl, wr), epsabs=1e-13, epsrel=1e-12)
        total += v
    return float(total)


def hadamard_konno_discrepancy(d: WalkDistribution, n: int, lam: float = 0.0, a: float = 1 / math.sqrt(2)) -> float:
    """
    Total variation between the law of ``X_n / n`` and the Konno density,
    comparing masses of the parity sublattice cells of width ``2/n``.
    """
    x, p = _lattice_arrays(d)
    emp = dict(zip(x.astype(int).tolist(), p.tolist()))
    lo = -n
    sites = range(lo, n + 1, 2)
    tv = 0.0
    for s in sites:
        q = konno_mass(a, lam, (s - 1) / n, (s + 1) / n)
        tv += abs(emp.pop(s, 0.0) - q)
    tv += sum(emp.values())
    return 0.5 * tv
