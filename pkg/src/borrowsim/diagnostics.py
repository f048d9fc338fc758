"""Posterior shape diagnostics for two-component normal mixtures.

Mode and antimode finding by derivative sign scan plus bisection, the
mode-to-antimode density ratio used to grade bimodality strength, a
(weight x conflict) map of that ratio, and level-set highest-density
intervals which may come out disjoint when the posterior splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .gaussian import GaussianMixture, SufficientStat, mixture_cdf, mixture_pdf
from .priors import Normal
from . import inference, priors

__all__ = [
    "BimodalityReport",
    "find_modes",
    "bimodality_ratio",
    "obm",
    "bimodality_map",
    "hpd_disjoint",
]

_SCAN_POINTS = 2000
_REFINE_TOL = 1e-9


@dataclass(frozen=True)
class BimodalityReport:
    """Stationary-point summary of a two-component mixture density.

    ``ratio`` is the smaller mode density divided by the antimode density
    (1 when unimodal, by the merging-modes limit).
    """

    n_modes: int
    modes: tuple[tuple[float, float], ...]
    antimode: tuple[float, float] | None
    ratio: float


def _pdf_derivative(x, m: GaussianMixture):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for w, c in zip(m.weights, m.components):
        if w == 0.0:
            continue
        z = (x - c.mean) / c.sd
        phi = np.exp(-0.5 * z * z) / (c.sd * math.sqrt(2 * math.pi))
        out += -w * phi * (x - c.mean) / (c.sd * c.sd)
    return out


def _bisect_sign_change(f, lo, hi, f_lo):
    # Plain bisection on a sign change, to interval width <= _REFINE_TOL.
    while hi - lo > _REFINE_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo > 0) == (f_mid > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_modes(m: GaussianMixture) -> BimodalityReport:
    """Locate the modes (and antimode, if any) of a 2-component mixture.

    Stationary points are bracketed by a derivative sign scan on a
    2000-point grid spanning [min mean - 6 max sd, max mean + 6 max sd]
    and refined by bisection; a mixture of two normals has at most two
    modes, so the refinement grid is not binding.
    """
    if len(m) != 2:
        raise ValueError(f"mode finding is defined for 2 components, got {len(m)}")
    means = m.means()
    sds = m.sds()
    lo = float(means.min() - 6.0 * sds.max())
    hi = float(means.max() + 6.0 * sds.max())
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    deriv = _pdf_derivative(grid, m)

    sign = np.sign(deriv)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    scalar_deriv = lambda x: float(_pdf_derivative(x, m))

    maxima: list[float] = []
    minima: list[float] = []
    for i in flips:
        x = _bisect_sign_change(scalar_deriv, grid[i], grid[i + 1], deriv[i])
        if deriv[i] > 0:
            maxima.append(x)
        else:
            minima.append(x)

    if len(maxima) <= 1:
        x = maxima[0] if maxima else float(grid[np.argmax(mixture_pdf(grid, m))])
        return BimodalityReport(1, ((x, float(mixture_pdf(x, m))),), None, 1.0)

    x1, x2 = maxima[0], maxima[-1]
    f1 = float(mixture_pdf(x1, m))
    f2 = float(mixture_pdf(x2, m))
    between = [x for x in minima if x1 < x < x2]
    if between:
        xa = between[0]
        fa = float(mixture_pdf(xa, m))
    else:
        # Dead zone between far-separated modes: density underflowed to 0
        # on the whole scan stretch; take the grid minimum there.
        inner = grid[(grid > x1) & (grid < x2)]
        vals = mixture_pdf(inner, m)
        j = int(np.argmin(vals))
        xa, fa = float(inner[j]), float(vals[j])
    ratio = min(f1, f2) / fa if fa > 0.0 else math.inf
    return BimodalityReport(
        2, ((x1, f1), (x2, f2)), (xa, fa), float(ratio)
    )


def bimodality_ratio(m: GaussianMixture) -> float:
    """min(mode densities) / antimode density; 1 for a unimodal mixture."""
    return find_modes(m).ratio


# Short alias matching the result-table column name.
obm = bimodality_ratio


def bimodality_map(scenario, w_grid=None, bias_grid=None) -> np.ndarray:
    """Posterior bimodality ratio over a (weight x bias) grid.

    The posterior is built with the observed current mean pinned to the
    true mean (the scenario's null value); the external mean sits at
    null + bias. Requires the Normal robust form (the k-component
    heavy-tail bank can have more than two modes and is out of scope).

    Returns an array of shape (len(w_grid), len(bias_grid)).
    """
    if not isinstance(scenario.prior.form, Normal):
        raise TypeError("bimodality is assessed for the Normal robust form only")
    sd_ext = scenario.external.sigma / math.sqrt(scenario.external.n)
    if w_grid is None:
        w_grid = np.round(np.arange(0.0, 1.0 + 1e-12, 0.01), 10)
    if bias_grid is None:
        bias_grid = np.arange(0.0, 4.0 * sd_ext + 1e-12, sd_ext / 10.0)
    w_grid = np.asarray(w_grid, dtype=float)
    bias_grid = np.asarray(bias_grid, dtype=float)

    data = SufficientStat(scenario.null_mean, scenario.n, scenario.sigma)
    out = np.empty((w_grid.size, bias_grid.size))
    for j, bias in enumerate(bias_grid):
        external = SufficientStat(
            scenario.null_mean + bias, scenario.external.n, scenario.external.sigma
        )
        base = replace(scenario.prior, external=external)
        for i, w in enumerate(w_grid):
            spec = replace(base, informative_weight=float(w))
            mix = priors.build_mixture_prior(spec, current=data)
            post = inference.posterior(mix, data)
            out[i, j] = find_modes(post.posterior).ratio
    return out


def hpd_disjoint(m: GaussianMixture, level: float):
    """Highest-density region of the mixture at the given mass level.

    Finds the density cutoff whose superlevel set carries exactly
    ``level`` mass (root search on the cutoff; set mass via CDF
    differences at the level-set boundaries) and returns
    ``(is_disjoint, intervals)``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level!r}")
    means = m.means()
    sds = m.sds()
    lo = float(means.min() - 9.0 * sds.max())
    hi = float(means.max() + 9.0 * sds.max())
    grid = np.linspace(lo, hi, 8001)
    pdf_grid = mixture_pdf(grid, m)
    peak = float(pdf_grid.max())

    def intervals_at(c):
        vals = pdf_grid - c
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        crossings = [
            brentq(lambda x: mixture_pdf(x, m) - c, grid[i], grid[i + 1],
                   xtol=1e-13, rtol=8.9e-16)
            for i in idx
        ]
        # The density dips below any positive cutoff at the grid edges, so
        # crossings pair up as (enter, leave).
        if len(crossings) % 2 == 1:
            crossings = crossings[:-1] if vals[0] > 0 else crossings[1:]
        return [(crossings[i], crossings[i + 1]) for i in range(0, len(crossings), 2)]

    def mass_minus_level(c):
        return sum(
            mixture_cdf(b, m) - mixture_cdf(a, m) for a, b in intervals_at(c)
        ) - level

    c_hi = peak * (1.0 - 1e-9)
    c_lo = peak * 1e-12
    cutoff = brentq(mass_minus_level, c_lo, c_hi, xtol=peak * 1e-14, rtol=8.9e-16)
    result = intervals_at(cutoff)
    mass = mass_minus_level(cutoff) + level
    if abs(mass - level) > 1e-6:
        raise RuntimeError(
            f"level-set root search left mass {mass:.8f} != {level:.8f}"
        )
    return len(result) > 1, result
