"""Tests, intervals and diagnostics built on the ECDM estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ecdm.core import (
    EstimateBundle,
    PairedSample,
    bundle_from_terms,
    ecdm_terms,
    estimate_bundle,
    split_sizes,
    structure_corrections,
    _degenerate,
)
from ecdm.errors import DegenerateScale, UndefinedDiagnostic
from ecdm.normal import normal_quantile, normal_upper_tail

KAPPA_THRESHOLD = 0.01


def _check_alpha(alpha: float, upper: float = 0.5) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < upper:
        raise ValueError(f"alpha must lie in (0, {upper}), got {alpha}")
    return alpha


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    degenerate: bool = False

    def covers(self, value: float) -> bool:
        # a degenerate interval is empty: the raw upper end fell below zero
        return not self.degenerate and self.lower <= value <= self.upper


def confidence_interval(t_hat: float, delta_scale: float, alpha: float) -> ConfidenceInterval:
    """Two-sided ``1 - alpha`` interval for Delta with the lower end clamped at 0.

    An all-negative raw interval is reported as ``[0, 0]`` and flagged
    degenerate instead of being inverted.
    """
    if not delta_scale > 0:
        raise ValueError(f"delta_scale must be positive, got {delta_scale}")
    alpha = _check_alpha(alpha, 1.0)
    half = normal_quantile(alpha / 2) * delta_scale
    upper = t_hat + half
    if upper < 0:
        return ConfidenceInterval(0.0, 0.0, degenerate=True)
    return ConfidenceInterval(max(t_hat - half, 0.0), upper)


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    ci_lower: float
    ci_upper: float
    ci_degenerate: bool = False
    two_sided: bool = False
    bundle: Optional[EstimateBundle] = None

    __test__ = False  # keep pytest from collecting this class

    @property
    def interval(self) -> ConfidenceInterval:
        return ConfidenceInterval(self.ci_lower, self.ci_upper, self.ci_degenerate)


def decide(estimate: float, delta_scale: float, alpha: float, two_sided: bool = False,
           bundle: Optional[EstimateBundle] = None) -> TestOutcome:
    """Standardize ``estimate`` by ``delta_scale`` and apply the normal threshold.

    One-sided: reject when the statistic strictly exceeds ``z_alpha``.
    Two-sided: reject when its absolute value exceeds ``z_{alpha/2}``.
    """
    alpha = _check_alpha(alpha)
    stat = estimate / delta_scale
    if two_sided:
        crit = normal_quantile(alpha / 2)
        p_value = min(1.0, 2.0 * normal_upper_tail(abs(stat)))
        reject = abs(stat) > crit
    else:
        crit = normal_quantile(alpha)
        p_value = normal_upper_tail(stat)
        reject = stat > crit
    ci = confidence_interval(estimate, delta_scale, alpha)
    return TestOutcome(
        statistic=stat,
        critical_value=crit,
        p_value=p_value,
        reject=bool(reject),
        alpha=alpha,
        ci_lower=ci.lower,
        ci_upper=ci.upper,
        ci_degenerate=ci.degenerate,
        two_sided=two_sided,
        bundle=bundle,
    )


def correlation_test(sample: PairedSample, alpha: float = 0.05) -> TestOutcome:
    """One-sided test of zero cross-correlation between the two blocks."""
    _check_alpha(alpha)
    bundle = estimate_bundle(sample)
    return decide(bundle.t_hat, bundle.delta_scale, alpha, bundle=bundle)


def kappa_hat(bundle: EstimateBundle, n: Optional[int] = None) -> float:
    """``W_1n W_2n / (n T_n)^2``; small values point to the strong-signal regime."""
    n = bundle.n if n is None else n
    if bundle.t_hat == 0:
        raise UndefinedDiagnostic("kappa is undefined when T_n = 0")
    return bundle.w1 * bundle.w2 / (n * bundle.t_hat) ** 2


def rv_hat(bundle: EstimateBundle) -> float:
    """Estimated RV-coefficient, reported raw (it can fall outside [0, 1])."""
    denom = bundle.w1 * bundle.w2
    if not denom > 0:
        raise DegenerateScale("RV-coefficient needs W_1n W_2n > 0")
    return bundle.t_hat / math.sqrt(denom)


@dataclass(frozen=True)
class Diagnostics:
    kappa: Optional[float]
    rv: float
    rv_clamped: float
    kappa_small: Optional[bool]
    threshold: float = KAPPA_THRESHOLD


def diagnostics(bundle: EstimateBundle, threshold: float = KAPPA_THRESHOLD) -> Diagnostics:
    try:
        kappa = kappa_hat(bundle)
    except UndefinedDiagnostic:
        kappa = None
    rv = rv_hat(bundle)
    return Diagnostics(
        kappa=kappa,
        rv=rv,
        rv_clamped=min(max(rv, 0.0), 1.0),
        kappa_small=None if kappa is None else kappa < threshold,
        threshold=threshold,
    )


@dataclass(frozen=True)
class StructureHypothesis:
    """Candidate cross-covariance ``Sigma0`` (``p1 x p2``)."""

    sigma0: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma0, dtype=np.float64)
        if s.ndim != 2:
            raise ValueError(f"sigma0 must be a matrix, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("sigma0 contains non-finite entries")
        s.setflags(write=False)
        object.__setattr__(self, "sigma0", s)

    @property
    def sigma0_norm_sq(self) -> float:
        return math.fsum((self.sigma0.ravel() ** 2).tolist())

    def check(self, sample: PairedSample) -> None:
        if self.sigma0.shape != (sample.p1, sample.p2):
            raise ValueError(
                f"sigma0 has shape {self.sigma0.shape}, sample partition needs "
                f"{(sample.p1, sample.p2)}"
            )


def _structure(sample: PairedSample, hyp: StructureHypothesis):
    hyp.check(sample)
    table, centred, a1, a2 = ecdm_terms(sample)
    bundle = bundle_from_terms(sample.n, a1, a2)
    n = sample.n
    n1, n2 = split_sizes(n)
    e1, e2 = structure_corrections(centred, table, hyp.sigma0)
    correction = (n1 / (n1 - 1)) * math.fsum(e1.tolist()) + (n2 / (n2 - 1)) * math.fsum(e2.tolist())
    t0 = bundle.t_hat - 2.0 / (n * (n - 1)) * correction + hyp.sigma0_norm_sq
    return t0, bundle


def structure_stat(sample: PairedSample, hyp: StructureHypothesis) -> float:
    """Unbiased estimate of ``||Sigma_* - Sigma0||_F^2``; equals ``t_hat`` when Sigma0 = 0."""
    return _structure(sample, hyp)[0]


def structure_test(sample: PairedSample, hyp: StructureHypothesis, alpha: float = 0.05,
                   two_sided: bool = False) -> TestOutcome:
    """Test ``Sigma_* = Sigma0`` with the statistic standardized by the usual null scale."""
    _check_alpha(alpha)
    t0, bundle = _structure(sample, hyp)
    if bundle.w1 == 0:
        raise _degenerate(sample, 1)
    if bundle.w2 == 0:
        raise _degenerate(sample, 2)
    return decide(t0, bundle.delta_scale, alpha, two_sided=two_sided, bundle=bundle)
