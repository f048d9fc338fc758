"""Posterior computation under the mixture prior.

Component-wise conjugate updates, marginal-likelihood weight updates in
log space (so extreme prior-data conflict never underflows), posterior
tail probabilities and means, the two-arm superiority probability, and a
deterministic quadrature oracle for the exact heavy-tailed robust
component. The array kernel at the bottom is shared with the Monte Carlo
engines, which call it on whole vectors of observed means at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr
from scipy.stats import t as _student_t

from .gaussian import (
    GaussianComponent,
    GaussianMixture,
    SufficientStat,
    mixture_cdf,
)
from .priors import (
    CurrentMean,
    ExternalMean,
    MixturePriorSpec,
    Normal,
    NullBoundary,
    StudentT,
    build_informative,
    gamma_precision_quantiles,
    resolve_location,
)

__all__ = [
    "PosteriorSummary",
    "posterior",
    "tail_probability",
    "posterior_mean",
    "prob_t_not_better",
    "exact_t_tail_oracle",
    "posterior_bank",
    "prior_bank_params",
]


@dataclass(frozen=True)
class PosteriorSummary:
    """Mixture posterior plus the quantities read off it downstream.

    ``w_informative`` is the posterior weight of component 0 (the
    informative component by construction); ``sub_weights`` are the
    weights of the robust block renormalized within the block, which do
    not depend on the informative weight at all.
    """

    posterior: GaussianMixture
    w_informative: float
    sub_weights: tuple[float, ...]
    mean: float
    tail_at: tuple[float, float] | None = None


def posterior_bank(means, variances, log_weights, ybar, n, sigma):
    """Vectorized conjugate + weight update over a component bank.

    Parameters
    ----------
    means : array (J,) or (J, R)
        Prior component means; a (J, R) shape carries data-dependent
        locations (one per observed mean).
    variances, log_weights : array (J,)
        Prior component variances and log prior weights (-inf allowed).
    ybar : scalar or array (R,)
        Observed current mean(s).
    n, sigma : int, float
        Current sample size and known per-observation sd.

    Returns
    -------
    post_weights : (J, R) posterior component weights (columns sum to 1)
    post_means : (J, R)
    post_vars : (J,)
    """
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    variances = np.asarray(variances, dtype=float)
    log_weights = np.asarray(log_weights, dtype=float)
    means = np.asarray(means, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    if not (np.all(np.isfinite(ybar)) and np.all(np.isfinite(variances))):
        raise ValueError("degenerate data: non-finite inputs to the weight update")

    data_precision = n / (sigma * sigma)
    pred_var = (variances + 1.0 / data_precision)[:, None]
    log_marg = -0.5 * (np.log(2.0 * np.pi * pred_var) + (ybar[None, :] - means) ** 2 / pred_var)
    logw = log_weights[:, None] + log_marg
    logw -= logw.max(axis=0, keepdims=True)
    post_w = np.exp(logw)
    norm = post_w.sum(axis=0, keepdims=True)
    if not np.all(norm > 0.0):
        raise ValueError("degenerate data: every component weight underflowed")
    post_w /= norm

    post_var = 1.0 / (1.0 / variances + data_precision)
    post_mean = post_var[:, None] * (means / variances[:, None] + ybar[None, :] * data_precision)
    return post_w, post_mean, post_var


def prior_bank_params(spec: MixturePriorSpec, external: SufficientStat):
    """Array form of the prior for the vectorized engines.

    Returns ``(variances, log_weights, informative_mean, robust_location)``
    where ``robust_location`` is None when the location policy tracks the
    observed current mean (the engines then substitute it per draw).
    """
    informative = build_informative(external)
    w = spec.informative_weight
    if isinstance(spec.location, ExternalMean):
        robust_loc: float | None = external.mean
    elif isinstance(spec.location, NullBoundary):
        robust_loc = spec.location.value
    elif isinstance(spec.location, CurrentMean):
        robust_loc = None
    else:
        raise TypeError(f"unknown location policy {spec.location!r}")

    with np.errstate(divide="ignore"):
        if isinstance(spec.form, Normal):
            variances = np.array([informative.variance, spec.resolved_robust_variance()])
            log_weights = np.log(np.array([w, 1.0 - w]))
        else:
            form = spec.form
            lam = gamma_precision_quantiles(form.df, form.k)
            variances = np.concatenate(([informative.variance], form.scale**2 / lam))
            log_weights = np.concatenate(
                ([np.log(w)], np.full(form.k, np.log(1.0 - w) - math.log(form.k)))
            )
    return variances, log_weights, informative.mean, robust_loc


def posterior(
    prior: GaussianMixture,
    data: SufficientStat,
    null_value: float | None = None,
) -> PosteriorSummary:
    """Full mixture posterior for one dataset.

    Component j keeps its identity; its new weight is proportional to the
    old weight times the marginal likelihood of the data under it.
    """
    means = prior.means()
    variances = prior.sds() ** 2
    with np.errstate(divide="ignore"):
        logw = np.log(np.asarray(prior.weights))
    post_w, post_mean, post_var = posterior_bank(
        means, variances, logw, data.mean, data.n, data.sigma
    )
    post_w = post_w[:, 0]
    post_mean = post_mean[:, 0]
    comps = tuple(
        GaussianComponent(m, math.sqrt(v)) for m, v in zip(post_mean, post_var)
    )
    mixture = GaussianMixture(comps, tuple(post_w))

    # Robust-block weights renormalized within the block; independent of
    # the informative prior weight, so well defined even at w = 1 (a
    # zero-mass block falls back to equal within-block prior weights,
    # matching the equal-split construction).
    if len(prior) > 1:
        block = np.asarray(prior.weights[1:])
        total = block.sum()
        with np.errstate(divide="ignore"):
            sub_log = (
                np.log(block / total)
                if total > 0.0
                else np.full(block.size, -math.log(block.size))
            )
        sub_log = sub_log + np.array(
            [
                -0.5 * (math.log(2 * math.pi * pv) + (data.mean - m) ** 2 / pv)
                for m, pv in zip(
                    means[1:], variances[1:] + data.sigma**2 / data.n
                )
            ]
        )
        sub_log -= sub_log.max()
        sub = np.exp(sub_log)
        sub /= sub.sum()
        sub_weights = tuple(float(x) for x in sub)
    else:
        sub_weights = ()

    mean = float(np.dot(post_w, post_mean))
    summary = PosteriorSummary(
        posterior=mixture,
        w_informative=float(post_w[0]),
        sub_weights=sub_weights,
        mean=mean,
    )
    if null_value is not None:
        summary = PosteriorSummary(
            posterior=mixture,
            w_informative=summary.w_informative,
            sub_weights=sub_weights,
            mean=mean,
            tail_at=(null_value, tail_probability(summary, null_value)),
        )
    return summary


def tail_probability(post: PosteriorSummary, threshold: float) -> float:
    """Posterior probability that the parameter lies at or below ``threshold``."""
    return float(mixture_cdf(threshold, post.posterior))


def posterior_mean(post: PosteriorSummary) -> float:
    """Weighted mean of the posterior component means."""
    return post.mean


def prob_t_not_better(post_c: PosteriorSummary, post_t: GaussianComponent) -> float:
    """Probability that the treatment parameter is not above the control one.

    Treatment and control posteriors are independent; the treatment
    posterior is a single normal (flat or conjugate unit-information
    prior), the control posterior a mixture.
    """
    total = 0.0
    for w, c in zip(post_c.posterior.weights, post_c.posterior.components):
        if w == 0.0:
            continue
        s = math.sqrt(post_t.sd**2 + c.sd**2)
        total += w * float(ndtr((c.mean - post_t.mean) / s))
    return total


def _t_pdf(x, loc, scale, df):
    return _student_t.pdf((x - loc) / scale, df) / scale


def exact_t_tail_oracle(
    spec: MixturePriorSpec,
    data: SufficientStat,
    null_value: float,
    rel_tol: float = 1e-6,
) -> float:
    """Tail probability under the exact heavy-tailed robust component.

    Adaptive quadrature of the unnormalized posterior
    w * informative(x) * likelihood + (1 - w) * t(x) * likelihood over a
    +-15-combined-sd window, split at the threshold. Serves as the
    reference the normal-bank approximation is checked against.
    """
    form = spec.form
    if not isinstance(form, StudentT):
        raise TypeError("the exact-t oracle needs a StudentT robust form")
    informative = build_informative(spec.external)
    loc = resolve_location(spec.location, spec.external, current=data)
    w = spec.informative_weight
    se = data.se
    t_sd = form.scale * math.sqrt(form.df / (form.df - 2.0))

    def unnorm(x):
        like = math.exp(-0.5 * ((data.mean - x) / se) ** 2) / (se * math.sqrt(2 * math.pi))
        z = (x - informative.mean) / informative.sd
        p_ext = math.exp(-0.5 * z * z) / (informative.sd * math.sqrt(2 * math.pi))
        return (w * p_ext + (1.0 - w) * _t_pdf(x, loc, form.scale, form.df)) * like

    span = 15.0 * max(se, informative.sd, t_sd)
    lo = min(data.mean, informative.mean, loc) - span
    hi = max(data.mean, informative.mean, loc) + span
    if not lo < null_value < hi:
        # Threshold outside the window: the tail is numerically 0 or 1.
        return 0.0 if null_value <= lo else 1.0

    anchors = sorted({data.mean, informative.mean, loc})
    below = [a for a in anchors if lo < a < null_value]
    above = [a for a in anchors if null_value < a < hi]
    num, err_num = quad(unnorm, lo, null_value, points=below, limit=400, epsabs=0.0, epsrel=1e-10)
    rest, err_rest = quad(unnorm, null_value, hi, points=above, limit=400, epsabs=0.0, epsrel=1e-10)
    den = num + rest
    if den <= 0.0 or not math.isfinite(den):
        raise RuntimeError("quadrature non-convergence: vanishing posterior mass")
    tail = num / den
    # Error of the ratio, first order in the piece errors.
    err = (err_num + tail * (err_num + err_rest)) / den
    if err > rel_tol * max(tail, 1e-12):
        raise RuntimeError(
            f"quadrature non-convergence: estimated error {err:g} for tail {tail:g}"
        )
    return tail
