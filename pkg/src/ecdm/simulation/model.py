"""Generative model: factor loadings, random streams and sample draws."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ecdm.core import PairedSample
from ecdm.simulation.covariance import build_sigma, sym_eig
from ecdm.simulation.scenario import Coupling, Distribution, SimScenario

T_DOF = 10
SHARED = 2  # 0-based coordinate 3, reused by block 2 in case (b)


def replication_stream(seed: int, rep: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, rep)``.

    Streams for different replications are statistically independent and
    do not depend on how replications are spread across workers.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ScenarioModel:
    scenario: SimScenario
    sigma1: np.ndarray
    sigma2: np.ndarray
    eig1: np.ndarray
    eig2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray

    @property
    def load1(self) -> np.ndarray:
        """``H_1 Lambda_1^{1/2}`` (``p1 x p1``)."""
        return self.h1 * np.sqrt(np.clip(self.eig1, 0.0, None))

    @property
    def load2(self) -> np.ndarray:
        return self.h2 * np.sqrt(np.clip(self.eig2, 0.0, None))

    def gamma(self) -> tuple[np.ndarray, np.ndarray]:
        """Full loading matrices ``Gamma_1`` (``p1 x p``) and ``Gamma_2`` (``p2 x p``).

        Coordinates ``0..p1-1`` drive block 1 and ``p1..p-1`` block 2; in
        case (b) block 2 takes coordinate 3 in place of its own third one.
        """
        sc = self.scenario
        p1, p = sc.cov.p1, sc.p
        g1 = np.zeros((p1, p))
        g1[:, :p1] = self.load1
        g2 = np.zeros((sc.cov.p2, p))
        g2[:, p1:] = self.load2
        if sc.coupling is Coupling.SHARED_COORDINATE_CASE_B:
            g2[:, SHARED] = g2[:, p1 + SHARED]
            g2[:, p1 + SHARED] = 0.0
        return g1, g2

    def sigma_star(self) -> np.ndarray:
        g1, g2 = self.gamma()
        return g1 @ g2.T


@lru_cache(maxsize=8)
def scenario_model(scenario: SimScenario) -> ScenarioModel:
    s1, s2 = build_sigma(scenario.cov)
    e1, h1 = sym_eig(s1)
    e2, h2 = sym_eig(s2)
    return ScenarioModel(scenario, s1, s2, e1, e2, h1, h2)


def draw_w(distribution: Distribution, rng: np.random.Generator, n: int, q: int) -> np.ndarray:
    """``n x q`` standardized innovations (mean 0, identity covariance)."""
    z = rng.standard_normal((n, q))
    if distribution is Distribution.GAUSSIAN_I:
        return z
    if distribution is Distribution.CHISQ_II:
        return (z * z - 1.0) / np.sqrt(2.0)
    if distribution is Distribution.T10_III:
        u = rng.chisquare(T_DOF, size=(n, 1))
        return z * np.sqrt((T_DOF - 2) / u)
    raise ValueError(f"unknown distribution {distribution!r}")


def gen_sample(scenario: SimScenario, rng: np.random.Generator) -> PairedSample:
    model = scenario_model(scenario)
    p1 = scenario.cov.p1
    w = draw_w(scenario.distribution, rng, scenario.sample_size, scenario.p)
    w1 = w[:, :p1]
    w2 = w[:, p1:].copy()
    if scenario.coupling is Coupling.SHARED_COORDINATE_CASE_B:
        w2[:, SHARED] = w[:, SHARED]
    x = np.hstack([w1 @ model.load1.T, w2 @ model.load2.T])
    return PairedSample(x, p1)
