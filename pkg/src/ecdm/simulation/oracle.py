"""Population quantities for a simulation scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ecdm.errors import UnsupportedAssumption
from ecdm.normal import normal_cdf, normal_quantile
from ecdm.simulation.model import scenario_model
from ecdm.simulation.scenario import Distribution, SimScenario

# Var(w^2): 2 for N(0,1); 14 for (chi2_1 - 1)/sqrt(2), whose 4th central moment is 60/4
FOURTH_MOMENT_VAR = {
    Distribution.GAUSSIAN_I: 2.0,
    Distribution.CHISQ_II: 14.0,
}


@dataclass(frozen=True)
class OracleQuantities:
    delta: float
    delta_scale_pop: float
    k_pop: Optional[float]
    l_pop: Optional[float]
    rho_pop: float
    tr_sigma1_sq: float
    tr_sigma2_sq: float
    a3_ratio_1: float
    a3_ratio_2: float
    a45_ratio: Optional[float]  # None when delta = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def variance_constant(scenario: SimScenario, sigma_diff: Optional[np.ndarray] = None) -> float:
    """Asymptotic standard deviation ``K`` of the estimator under the scenario.

    ``sigma_diff`` replaces ``Sigma_*`` inside the first-order terms, giving
    the structure-test analogue; by default it is ``Sigma_*`` itself.
    """
    try:
        m = FOURTH_MOMENT_VAR[scenario.distribution]
    except KeyError:
        raise UnsupportedAssumption(
            f"{scenario.distribution.value} violates the moment conditions behind K"
        ) from None
    model = scenario_model(scenario)
    g1, g2 = model.gamma()
    s1, s2 = model.sigma1, model.sigma2
    star = g1 @ g2.T
    diff = star if sigma_diff is None else sigma_diff
    n = scenario.sample_size
    upsilon = np.trace(s1 @ diff @ s2 @ diff.T)
    sd = star @ diff.T
    fourth = np.trace(sd @ sd)
    gsum = (m - 2.0) * float(np.sum(np.einsum("aj,ab,bj->j", g1, diff, g2) ** 2))
    psi = np.trace(s1 @ s1) * np.trace(s2 @ s2)
    delta = float(np.sum(star * star))
    k2 = 4.0 * (upsilon + fourth + gsum) / n + 2.0 * (psi + delta**2) / n**2
    return math.sqrt(k2)


def oracle_quantities(scenario: SimScenario) -> OracleQuantities:
    """Population truths; ``K`` and the asymptotic power are None for family III."""
    model = scenario_model(scenario)
    s1, s2 = model.sigma1, model.sigma2
    star = model.sigma_star()
    n = scenario.sample_size
    delta = float(np.sum(star * star))
    s1sq, s2sq = s1 @ s1, s2 @ s2
    tr1, tr2 = float(np.trace(s1sq)), float(np.trace(s2sq))
    psi = tr1 * tr2
    delta_pop = math.sqrt(2.0 * psi) / n
    try:
        k = variance_constant(scenario)
    except UnsupportedAssumption:
        k = None
    l_pop = None
    if k is not None:
        l_pop = normal_cdf(delta / k - normal_quantile(scenario.alpha) * delta_pop / k)
    return OracleQuantities(
        delta=delta,
        delta_scale_pop=delta_pop,
        k_pop=k,
        l_pop=l_pop,
        rho_pop=delta / math.sqrt(psi),
        tr_sigma1_sq=tr1,
        tr_sigma2_sq=tr2,
        a3_ratio_1=float(np.sum(s1sq * s1sq)) / tr1**2,
        a3_ratio_2=float(np.sum(s2sq * s2sq)) / tr2**2,
        a45_ratio=psi / (n**2 * delta**2) if delta > 0 else None,
    )
