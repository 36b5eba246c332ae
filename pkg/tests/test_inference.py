import math

import numpy as np
import pytest

from ecdm import (
    ConfidenceInterval,
    PairedSample,
    StructureHypothesis,
    UndefinedDiagnostic,
    confidence_interval,
    correlation_test,
    estimate_bundle,
    kappa_hat,
    normal_cdf,
    normal_quantile,
    rv_hat,
    structure_stat,
    structure_test,
    t_hat,
)
from ecdm.core import EstimateBundle
from ecdm.errors import DegenerateScale
from ecdm.inference import decide, diagnostics
from ecdm.simulation import CovSpec, SimScenario, gen_sample, replication_stream, scenario_model

from oracles import naive_structure_stat, rel_err


def _bundle(t, w1, w2, n):
    return EstimateBundle(t, w1, w2, math.sqrt(2 * w1 * w2) / n, 1.0, n)


def test_large_statistic_rejects():
    out = decide(352.5, 7.296, 0.05)
    assert out.statistic == pytest.approx(48.3, abs=0.05)
    assert out.reject
    assert out.critical_value == pytest.approx(1.645, abs=5e-4)


def test_boundary_is_not_rejected():
    z = normal_quantile(0.05)
    out = decide(z, 1.0, 0.05)
    assert out.statistic == out.critical_value
    assert not out.reject


def test_outcome_invariants(rng):
    for _ in range(50):
        sample = PairedSample(rng.normal(size=(12, 6)) + 0.3 * rng.normal(size=(12, 1)), 3)
        out = correlation_test(sample, 0.05)
        assert out.reject == (out.statistic > out.critical_value)
        assert 0 <= out.ci_lower <= out.ci_upper
        assert abs(out.p_value + normal_cdf(out.statistic) - 1) < 1e-12


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.7, -1])
def test_alpha_range(toy, alpha):
    with pytest.raises(ValueError):
        correlation_test(toy, alpha)


def test_confidence_interval_examples():
    ci = confidence_interval(0.0, 1.0, 0.05)
    assert ci.lower == 0 and ci.upper == pytest.approx(1.95996, abs=1e-5)
    ci = confidence_interval(352.5, 7.296, 0.05)
    assert ci.lower == pytest.approx(338.2, abs=0.1)
    assert ci.upper == pytest.approx(366.8, abs=0.1)
    ci = confidence_interval(-5.0, 1.0, 0.05)
    assert (ci.lower, ci.upper, ci.degenerate) == (0.0, 0.0, True)
    assert not ci.covers(0.0)
    with pytest.raises(ValueError):
        confidence_interval(1.0, 0.0, 0.05)


def test_interval_covers():
    assert ConfidenceInterval(0.0, 2.0).covers(0.0)
    assert not ConfidenceInterval(0.5, 2.0).covers(0.0)


def test_kappa_examples():
    assert kappa_hat(_bundle(10.0, 100.0, 100.0, 10), 10) == 1.0
    with pytest.raises(UndefinedDiagnostic):
        kappa_hat(_bundle(0.0, 1.0, 1.0, 10))
    d = diagnostics(_bundle(352.5, 1.0, 1.0, 10))
    assert d.kappa_small


def test_rv_examples():
    assert rv_hat(_bundle(5.0, 25.0, 4.0, 10)) == 0.5
    with pytest.raises(DegenerateScale):
        rv_hat(EstimateBundle(1.0, 0.0, 4.0, 0.0, 1.0, 10))
    d = diagnostics(_bundle(-3.0, 1.0, 1.0, 10))
    assert d.rv == -3.0 and d.rv_clamped == 0.0


def test_rv_statistic_identity(rng):
    for _ in range(20):
        sample = PairedSample(rng.normal(size=(10, 5)), 2)
        b = estimate_bundle(sample)
        assert rv_hat(b) * b.n / math.sqrt(2) == pytest.approx(b.statistic, rel=1e-13)


def test_structure_zero_reduces_bitwise(rng):
    for _ in range(20):
        sample = PairedSample(rng.normal(size=(9, 7)), 3)
        hyp = StructureHypothesis(np.zeros((3, 4)))
        assert structure_stat(sample, hyp) == t_hat(sample)
        a = structure_test(sample, hyp, 0.05)
        b = correlation_test(sample, 0.05)
        assert (a.statistic, a.reject, a.p_value, a.ci_lower, a.ci_upper) == (
            b.statistic, b.reject, b.p_value, b.ci_lower, b.ci_upper)


def test_structure_matches_oracle(toy, rng):
    sigma0 = [[0.7]]
    assert rel_err(structure_stat(toy, StructureHypothesis(sigma0)),
                   naive_structure_stat(toy.data.tolist(), 1, sigma0)) <= 1e-10
    for _ in range(30):
        n = int(rng.integers(4, 11))
        p1, p2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        x = rng.normal(size=(n, p1 + p2)) + 5
        s0 = rng.normal(size=(p1, p2))
        got = structure_stat(PairedSample(x, p1), StructureHypothesis(s0))
        assert rel_err(got, naive_structure_stat(x.tolist(), p1, s0.tolist())) <= 1e-10


def test_structure_dimension_mismatch(toy):
    with pytest.raises(ValueError):
        structure_stat(toy, StructureHypothesis(np.zeros((2, 1))))


def test_two_sided_structure_rule():
    out = decide(-3.0, 1.0, 0.05, two_sided=True)
    assert out.critical_value == pytest.approx(1.95996, abs=1e-5)
    assert out.reject
    assert out.p_value == pytest.approx(2 * normal_cdf(-3.0))
    assert not decide(-3.0, 1.0, 0.05).reject


@pytest.mark.slow
def test_null_rejection_frequency_identity_blocks():
    rng = np.random.default_rng(31)
    reps = 2000
    hits = sum(
        correlation_test(PairedSample(rng.standard_normal((50, 200)), 100), 0.05).reject
        for _ in range(reps)
    )
    assert abs(hits / reps - 0.05) <= 0.02


def _case_b(p, **kw):
    return SimScenario(CovSpec(p // 2, p // 2, scaled=False), coupling="shared_coordinate_case_b", **kw)


@pytest.mark.slow
def test_structure_at_truth_unbiased_and_sized():
    # n = 100 keeps the finite-n variance inflation (about 1 + 5.5/n) small
    sc = _case_b(200, n=100, seed=4)
    hyp = StructureHypothesis(scenario_model(sc).sigma_star())
    stats, rejects = [], []
    for r in range(2000):
        sample = gen_sample(sc, replication_stream(sc.seed, r))
        stats.append(structure_stat(sample, hyp))
        rejects.append(structure_test(sample, hyp, 0.05).reject)
    stats = np.array(stats)
    assert abs(stats.mean()) < 3 * stats.std(ddof=1) / math.sqrt(len(stats))
    assert abs(np.mean(rejects) - 0.05) <= 0.02


@pytest.mark.slow
def test_structure_power_grows_with_dimension():
    powers = []
    for p in (32, 128, 512):
        sc = _case_b(p, seed=8)
        hyp = StructureHypothesis(-scenario_model(sc).sigma_star())
        powers.append(np.mean([
            structure_test(gen_sample(sc, replication_stream(sc.seed, r)), hyp).reject
            for r in range(300)
        ]))
    assert powers[0] < powers[1] < powers[2] or powers[2] == 1.0
    assert powers[2] >= 0.95
