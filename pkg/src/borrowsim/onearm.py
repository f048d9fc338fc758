"""One-arm operating characteristics.

Monte Carlo estimates of the type-I-error rate, power and RMSE of the
borrowing test, a deterministic route via the rejection region in the
observed mean (the decision depends on the data only through it), and the
propagation of the prior mixture weight into its posterior counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .gaussian import SufficientStat
from .inference import exact_t_tail_oracle, posterior_bank, prior_bank_params
from .priors import StudentT
from .scenarios import OneArmScenario, base_normals

__all__ = [
    "one_arm_tie",
    "one_arm_power",
    "one_arm_rmse",
    "one_arm_rejection_region",
    "one_arm_tie_exact",
    "one_arm_power_exact",
    "weight_propagation",
    "WeightPropagation",
]

# Per-chunk element budget for the (components x reps) work matrices.
_CHUNK_ELEMENTS = 4 << 20


def _chunks(total: int, n_components: int):
    step = max(_CHUNK_ELEMENTS // max(n_components, 1), 4096)
    for start in range(0, total, step):
        yield slice(start, min(start + step, total))


def posterior_stats(s: OneArmScenario, bias: float, ybar: np.ndarray):
    """Tail probability, posterior mean and informative weight per draw."""
    external = s.external_at(bias)
    variances, log_w, info_mean, robust_loc = prior_bank_params(s.prior, external)
    J = variances.size
    ybar = np.asarray(ybar, dtype=float)
    tails = np.empty_like(ybar)
    pmeans = np.empty_like(ybar)
    w_info = np.empty_like(ybar)
    for sl in _chunks(ybar.size, J):
        yb = ybar[sl]
        if robust_loc is None:
            means = np.empty((J, yb.size))
            means[0] = info_mean
            means[1:] = yb
        else:
            means = np.concatenate(([info_mean], np.full(J - 1, robust_loc)))
        W, pm, pv = posterior_bank(means, variances, log_w, yb, s.n, s.sigma)
        sd = np.sqrt(pv)[:, None]
        tails[sl] = np.einsum("jr,jr->r", W, ndtr((s.null_mean - pm) / sd))
        pmeans[sl] = np.einsum("jr,jr->r", W, pm)
        w_info[sl] = W[0]
    return tails, pmeans, w_info


def _draws(s: OneArmScenario, at_mean: float) -> np.ndarray:
    z = base_normals(s.seed, s.scenario_id, "current", s.reps)
    return at_mean + s.se * z


def one_arm_tie(s: OneArmScenario, bias: float) -> float:
    """Monte Carlo rejection rate with the truth at the null boundary."""
    tails, _, _ = posterior_stats(s, bias, _draws(s, s.null_mean))
    return float(np.mean(tails <= s.alpha))


def one_arm_power(s: OneArmScenario, bias: float) -> float:
    """Monte Carlo rejection rate with the truth at the alternative."""
    tails, _, _ = posterior_stats(s, bias, _draws(s, s.alt_mean))
    return float(np.mean(tails <= s.alpha))


def one_arm_rmse(s: OneArmScenario, bias: float, true_mean: float | None = None):
    """RMSE of the posterior mean around the truth, raw and standardized.

    Standardization divides by the exact RMSE of the maximum-likelihood
    estimate, sigma / sqrt(n).
    """
    if true_mean is None:
        true_mean = s.null_mean
    _, pmeans, _ = posterior_stats(s, bias, _draws(s, true_mean))
    rmse = float(np.sqrt(np.mean((pmeans - true_mean) ** 2)))
    return rmse, rmse / s.se


def mean_posterior_weight(s: OneArmScenario, bias: float) -> float:
    """Monte Carlo mean of the posterior informative weight at the null."""
    _, _, w_info = posterior_stats(s, bias, _draws(s, s.null_mean))
    return float(np.mean(w_info))


def _tail_function(s: OneArmScenario, bias: float, use_exact_t: bool):
    if use_exact_t:
        if not isinstance(s.prior.form, StudentT):
            raise TypeError("exact-t decisions need a StudentT robust form")
        external = s.external_at(bias)
        spec = replace(s.prior, external=external)

        def tail(y: float) -> float:
            return exact_t_tail_oracle(
                spec, SufficientStat(float(y), s.n, s.sigma), s.null_mean
            )

        return tail

    def tail(y: float) -> float:
        t, _, _ = posterior_stats(s, bias, np.array([float(y)]))
        return float(t[0])

    return tail


def one_arm_rejection_region(
    s: OneArmScenario,
    bias: float,
    *,
    use_exact_t: bool = False,
    scan_points: int | None = None,
):
    """Intervals of observed means where the test rejects.

    Boundaries come from a sign scan of tail(ybar) - alpha over
    null +- 12 se followed by root refinement; under prior-data conflict
    the region can be a union of two intervals, which is exactly the
    mechanism behind non-monotone error rates. Open ends are +-inf.
    """
    if scan_points is None:
        scan_points = 161 if use_exact_t else 2001
    tail = _tail_function(s, bias, use_exact_t)
    lo = s.null_mean - 12.0 * s.se
    hi = s.null_mean + 12.0 * s.se
    if use_exact_t:
        ys = np.linspace(lo, hi, scan_points)
        vals = np.array([tail(y) for y in ys]) - s.alpha
    else:
        ys = np.linspace(lo, hi, scan_points)
        vals, _, _ = posterior_stats(s, bias, ys)
        vals = vals - s.alpha

    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    crossings = [
        brentq(lambda y: tail(y) - s.alpha, ys[i], ys[i + 1], xtol=1e-12)
        for i in idx
    ]
    edges = [lo] + crossings + [hi]
    intervals: list[tuple[float, float]] = []
    for a, b in zip(edges[:-1], edges[1:]):
        if tail(0.5 * (a + b)) <= s.alpha:
            left = -math.inf if a == lo else a
            right = math.inf if b == hi else b
            if intervals and intervals[-1][1] == left:
                intervals[-1] = (intervals[-1][0], right)
            else:
                intervals.append((left, right))
    return intervals


def _region_probability(intervals, mean: float, se: float) -> float:
    total = 0.0
    for a, b in intervals:
        hi = 1.0 if math.isinf(b) else float(ndtr((b - mean) / se))
        lo = 0.0 if math.isinf(a) else float(ndtr((a - mean) / se))
        total += hi - lo
    return total


def one_arm_tie_exact(s: OneArmScenario, bias: float, **kwargs) -> float:
    """Noise-free TIE: Gaussian mass of the rejection region at the null."""
    region = one_arm_rejection_region(s, bias, **kwargs)
    return _region_probability(region, s.null_mean, s.se)


def one_arm_power_exact(s: OneArmScenario, bias: float, **kwargs) -> float:
    region = one_arm_rejection_region(s, bias, **kwargs)
    return _region_probability(region, s.alt_mean, s.se)


@dataclass(frozen=True)
class WeightPropagation:
    """Posterior informative weight across (dispersion, bias, weight) cells.

    ``mean`` holds Monte Carlo means over data drawn at the null;
    ``at_expected`` holds the plug-in value at the expected observed mean.
    """

    n_robust_grid: tuple[float, ...]
    bias_grid: tuple[float, ...]
    w_grid: tuple[float, ...]
    mean: np.ndarray
    at_expected: np.ndarray


def _log_marginal_ratio(s: OneArmScenario, spec, bias: float, ybar):
    """log(robust-block marginal / informative marginal) per draw."""
    external = s.external_at(bias)
    variances, _, info_mean, robust_loc = prior_bank_params(
        replace(spec, informative_weight=0.5), external
    )
    J = variances.size
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    pred = variances + s.sigma**2 / s.n
    lm = np.empty((J, ybar.size))
    lm[0] = -0.5 * (np.log(2 * np.pi * pred[0]) + (ybar - info_mean) ** 2 / pred[0])
    for j in range(1, J):
        m = ybar if robust_loc is None else robust_loc
        lm[j] = -0.5 * (np.log(2 * np.pi * pred[j]) + (ybar - m) ** 2 / pred[j])
    if J == 2:
        block = lm[1]
    else:
        sub = lm[1:] - math.log(J - 1)
        peak = sub.max(axis=0)
        block = peak + np.log(np.exp(sub - peak).sum(axis=0))
    return block - lm[0]


def weight_propagation(
    s: OneArmScenario,
    w_grid,
    bias_grid,
    n_robust_grid=None,
) -> WeightPropagation:
    """Expected posterior weight of the informative component per cell.

    The posterior weight is w / (w + (1 - w) r) with r the ratio of the
    robust-block marginal to the informative marginal, so the data enter
    only through r; each (dispersion, bias) pair shares one r vector
    across the whole weight grid.
    """
    w_grid = tuple(float(w) for w in w_grid)
    bias_grid = tuple(float(b) for b in bias_grid)
    if n_robust_grid is None:
        n_robust_grid = (s.prior.n_robust if s.prior.n_robust is not None else 1.0,)
    n_robust_grid = tuple(float(v) for v in n_robust_grid)

    mean = np.empty((len(n_robust_grid), len(bias_grid), len(w_grid)))
    at_expected = np.empty_like(mean)
    ybar = _draws(s, s.null_mean)
    for d, n_rob in enumerate(n_robust_grid):
        spec = replace(s.prior, n_robust=n_rob, robust_variance=None)
        for b, bias in enumerate(bias_grid):
            log_r = _log_marginal_ratio(s, spec, bias, ybar)
            log_r0 = _log_marginal_ratio(s, spec, bias, s.null_mean)[0]
            for i, w in enumerate(w_grid):
                if w == 0.0:
                    mean[d, b, i] = 0.0
                    at_expected[d, b, i] = 0.0
                elif w == 1.0:
                    mean[d, b, i] = 1.0
                    at_expected[d, b, i] = 1.0
                else:
                    odds = math.log(w) - math.log1p(-w)
                    mean[d, b, i] = float(
                        np.mean(1.0 / (1.0 + np.exp(log_r - odds)))
                    )
                    at_expected[d, b, i] = 1.0 / (1.0 + math.exp(log_r0 - odds))
    return WeightPropagation(n_robust_grid, bias_grid, w_grid, mean, at_expected)
