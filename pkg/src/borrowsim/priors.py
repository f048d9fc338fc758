"""Construction of the robust two-part mixture prior.

The prior is ``w * informative + (1 - w) * robust``. The informative part
comes straight from the external data; the robust part is configured by a
location policy, a dispersion (effective sample size or explicit
variance) and a functional form. A heavy-tailed robust component is
represented as an equal-weight bank of normals whose precisions sit at
Gamma quantiles, so the whole prior stays a normal mixture and posterior
updates stay closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import gamma as _gamma

from .gaussian import GaussianComponent, GaussianMixture, SufficientStat

__all__ = [
    "ExternalMean",
    "NullBoundary",
    "CurrentMean",
    "LocationPolicy",
    "Normal",
    "StudentT",
    "RobustForm",
    "MixturePriorSpec",
    "build_informative",
    "unit_information_variance",
    "resolve_location",
    "t_to_normal_mixture",
    "t_scale_matching_variance",
    "build_mixture_prior",
]


@dataclass(frozen=True)
class ExternalMean:
    """Center the robust component at the observed external mean."""


@dataclass(frozen=True)
class NullBoundary:
    """Center the robust component at the null-hypothesis boundary.

    One-arm trials only: for hybrid-control trials the boundary between
    the hypotheses is a line, not a point.
    """

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"null boundary must be finite, got {self.value!r}")


@dataclass(frozen=True)
class CurrentMean:
    """Center the robust component at the observed current (control) mean.

    Makes the prior data-dependent; it is resolved per analyzed dataset.
    """


LocationPolicy = ExternalMean | NullBoundary | CurrentMean


@dataclass(frozen=True)
class Normal:
    """Robust component is a single normal."""


@dataclass(frozen=True)
class StudentT:
    """Robust component is a location-scale t, approximated by k normals.

    ``scale`` follows the convention that df -> inf recovers
    N(location, scale**2); the exact t variance is scale**2 * df/(df-2).
    """

    df: float = 3.0
    scale: float = 1.0
    k: int = 100

    def __post_init__(self):
        if not (math.isfinite(self.df) and self.df > 2.0):
            raise ValueError(f"df must be > 2 for a finite variance, got {self.df!r}")
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be > 0, got {self.scale!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))


RobustForm = Normal | StudentT


@dataclass(frozen=True)
class MixturePriorSpec:
    """Everything needed to materialize the mixture prior.

    Dispersion of a Normal robust component may be given either as
    ``n_robust`` (effective sample size; variance sigma**2 / n_robust) or
    as an explicit ``robust_variance``, but not both. A StudentT form
    carries its own scale and ignores these two fields.
    """

    informative_weight: float
    external: SufficientStat
    location: LocationPolicy = field(default_factory=ExternalMean)
    form: RobustForm = field(default_factory=Normal)
    n_robust: float | None = 1.0
    robust_variance: float | None = None

    def __post_init__(self):
        w = self.informative_weight
        if not (math.isfinite(w) and 0.0 <= w <= 1.0):
            raise ValueError(f"informative weight must be in [0, 1], got {w!r}")
        if isinstance(self.form, Normal):
            if self.robust_variance is not None:
                if self.n_robust is not None:
                    raise ValueError(
                        "give either n_robust or robust_variance, not both"
                    )
                if not (math.isfinite(self.robust_variance) and self.robust_variance > 0):
                    raise ValueError(
                        f"robust_variance must be > 0, got {self.robust_variance!r}"
                    )
            else:
                if self.n_robust is None:
                    raise ValueError("a Normal robust component needs a dispersion")
                if not (math.isfinite(self.n_robust) and self.n_robust > 0):
                    raise ValueError(f"n_robust must be > 0, got {self.n_robust!r}")

    def resolved_robust_variance(self) -> float:
        """Variance of a Normal robust component."""
        if not isinstance(self.form, Normal):
            raise TypeError("robust variance is only defined for the Normal form")
        if self.robust_variance is not None:
            return self.robust_variance
        return self.external.sigma ** 2 / self.n_robust

    def effective_n_robust(self) -> float | None:
        """Effective sample size of a Normal robust component, if defined."""
        if not isinstance(self.form, Normal):
            return None
        if self.robust_variance is not None:
            return self.external.sigma ** 2 / self.robust_variance
        return self.n_robust


def build_informative(external: SufficientStat) -> GaussianComponent:
    """Informative component: flat-prior posterior of the external data."""
    return GaussianComponent(external.mean, external.sigma / math.sqrt(external.n))


def unit_information_variance(sigma: float) -> float:
    """Prior variance worth exactly one observation.

    The Fisher information of a single normal observation with known sd is
    1/sigma**2, so the unit-information variance is sigma**2.
    """
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise ValueError(f"sigma must be > 0, got {sigma!r}")
    return sigma * sigma


def resolve_location(
    policy: LocationPolicy,
    external: SufficientStat,
    current: SufficientStat | None = None,
) -> float:
    """Concrete robust-component center under the given policy."""
    if isinstance(policy, ExternalMean):
        return external.mean
    if isinstance(policy, NullBoundary):
        return policy.value
    if isinstance(policy, CurrentMean):
        if current is None:
            raise ValueError(
                "CurrentMean location needs the current data to resolve"
            )
        return current.mean
    raise TypeError(f"unknown location policy {policy!r}")


def gamma_precision_quantiles(df: float, k: int) -> np.ndarray:
    """Precision grid for the t approximation.

    Quantiles of Gamma(shape df/2, rate df/2) at the midpoint levels
    (i - 0.5)/k, i = 1..k. Midpoints avoid the undefined 0 and 1 levels.
    """
    levels = (np.arange(1, k + 1) - 0.5) / k
    lam = _gamma.ppf(levels, a=df / 2.0, scale=2.0 / df)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise ValueError(f"Gamma quantiles failed for df={df!r}")
    return lam


def t_to_normal_mixture(mu: float, form: StudentT) -> GaussianMixture:
    """Equal-weight normal bank approximating a location-scale t.

    A t with df degrees of freedom is a normal scale mixture whose
    precision is Gamma(df/2, df/2) distributed; component i gets variance
    scale**2 / lambda_i with lambda_i the (i - 0.5)/k Gamma quantile.
    Component variances are strictly decreasing in i.
    """
    lam = gamma_precision_quantiles(form.df, form.k)
    comps = tuple(
        GaussianComponent(mu, form.scale / math.sqrt(l)) for l in lam
    )
    weights = tuple([1.0 / form.k] * form.k)
    return GaussianMixture(comps, weights)


def t_scale_matching_variance(variance: float, df: float) -> float:
    """Scale making the exact t variance equal ``variance``.

    Used by the scale-sensitivity sweeps; the default convention instead
    matches the df -> inf normal limit.
    """
    if not (variance > 0 and df > 2):
        raise ValueError("need variance > 0 and df > 2")
    return math.sqrt(variance * (df - 2.0) / df)


def build_mixture_prior(
    spec: MixturePriorSpec,
    current: SufficientStat | None = None,
) -> GaussianMixture:
    """Materialize the prior. Component 0 is always the informative one."""
    informative = build_informative(spec.external)
    loc = resolve_location(spec.location, spec.external, current)
    w = spec.informative_weight
    if isinstance(spec.form, Normal):
        robust = GaussianComponent(loc, math.sqrt(spec.resolved_robust_variance()))
        return GaussianMixture((informative, robust), (w, 1.0 - w))
    t_bank = t_to_normal_mixture(loc, spec.form)
    comps = (informative,) + t_bank.components
    weights = (w,) + tuple((1.0 - w) * wk for wk in t_bank.weights)
    return GaussianMixture(comps, weights)
