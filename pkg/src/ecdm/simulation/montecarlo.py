"""Monte Carlo engine: replications, summaries and report files."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ecdm.baselines import sr_bundle
from ecdm.core import bundle_from_terms, ecdm_terms
from ecdm.inference import (
    StructureHypothesis,
    confidence_interval,
    kappa_hat,
    structure_stat,
)
from ecdm.normal import normal_cdf, normal_quantile, normal_upper_tail
from ecdm.simulation.model import gen_sample, replication_stream, scenario_model
from ecdm.simulation.oracle import OracleQuantities, oracle_quantities
from ecdm.simulation.scenario import SimScenario

COLUMNS = (
    "rep", "t_hat", "w1", "w2", "delta_scale", "statistic", "p_value", "reject",
    "ci_lower", "ci_upper", "ci_covers", "kappa", "rho",
    "sr_delta", "sr_w1", "sr_w2", "sr_statistic", "sr_reject", "t0_truth",
)


def replicate(scenario: SimScenario, rep: int, delta: float) -> dict:
    """One replication: draw a sample from its own stream and compute every statistic."""
    sample = gen_sample(scenario, replication_stream(scenario.seed, rep))
    n = sample.n
    _, _, a1, a2 = ecdm_terms(sample)
    b = bundle_from_terms(n, a1, a2)
    z = normal_quantile(scenario.alpha)
    stat = b.t_hat / b.delta_scale
    ci = confidence_interval(b.t_hat, b.delta_scale, scenario.alpha)
    sr = sr_bundle(sample)
    sr_stat = sr.delta_sr / sr.delta_scale_sr if sr.scale_defined else None
    row = {
        "rep": rep,
        "t_hat": b.t_hat,
        "w1": b.w1,
        "w2": b.w2,
        "delta_scale": b.delta_scale,
        "statistic": stat,
        "p_value": normal_upper_tail(stat),
        "reject": int(stat > z),
        "ci_lower": ci.lower,
        "ci_upper": ci.upper,
        "ci_covers": int(ci.covers(delta)),
        "kappa": kappa_hat(b) if b.t_hat != 0 else None,
        "rho": b.t_hat / math.sqrt(b.w1 * b.w2),
        "sr_delta": sr.delta_sr,
        "sr_w1": sr.w1_sr,
        "sr_w2": sr.w2_sr,
        "sr_statistic": sr_stat,
        "sr_reject": None if sr_stat is None else int(sr_stat > z),
        "t0_truth": None,
    }
    if scenario.structure_truth:
        hyp = StructureHypothesis(scenario_model(scenario).sigma_star())
        row["t0_truth"] = structure_stat(sample, hyp)
    return row


def _run_chunk(args) -> list[dict]:
    scenario, reps, delta = args
    return [replicate(scenario, r, delta) for r in reps]


def _mean_var(x: np.ndarray) -> dict:
    m = len(x)
    var = float(np.var(x, ddof=1)) if m > 1 else float("nan")
    return {"mean": float(np.mean(x)), "var": var, "se": math.sqrt(var / m) if m > 1 else None}


def _rate(x: np.ndarray) -> dict:
    m = len(x)
    if m == 0:
        return {"rate": None, "se": None, "count": 0}
    r = float(np.mean(x))
    return {"rate": r, "se": math.sqrt(r * (1 - r) / m), "count": m}


def ks_distance(values, cdf=normal_cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance to ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float))
    m = len(x)
    f = np.array([cdf(v) for v in x])
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m)))


def _normal_pdf(x, mu=0.0):
    return np.exp(-0.5 * (x - mu) ** 2) / math.sqrt(2 * math.pi)


def histogram(values: np.ndarray, shift: float) -> dict:
    """Freedman-Diaconis histogram with N(0,1) and N(shift,1) densities at bin centres."""
    edges = np.histogram_bin_edges(values, bins="fd")
    counts, _ = np.histogram(values, bins=edges)
    centres = (edges[:-1] + edges[1:]) / 2
    width = np.diff(edges)
    return {
        "edges": edges.tolist(),
        "counts": counts.tolist(),
        "density": (counts / (counts.sum() * width)).tolist(),
        "null_density": _normal_pdf(centres).tolist(),
        "alt_density": _normal_pdf(centres, shift).tolist(),
    }


def _column(rows, name) -> np.ndarray:
    return np.array([r[name] for r in rows if r[name] is not None], dtype=float)


def summarize(scenario: SimScenario, oracle: OracleQuantities, rows: list[dict]) -> dict:
    t = _column(rows, "t_hat")
    stat = _column(rows, "statistic")
    delta = oracle.delta
    shift = delta / oracle.delta_scale_pop
    kappa = _column(rows, "kappa")
    out = {
        "scenario": scenario.to_dict(),
        "n": scenario.sample_size,
        "oracle": oracle.as_dict(),
        "replications": len(rows),
        "reject_rate": _rate(_column(rows, "reject")),
        "sr_reject_rate": _rate(_column(rows, "sr_reject")),
        "sr_undefined": sum(r["sr_statistic"] is None for r in rows),
        "t_hat": _mean_var(t),
        "w1": _mean_var(_column(rows, "w1")),
        "w2": _mean_var(_column(rows, "w2")),
        "sr_delta": _mean_var(_column(rows, "sr_delta")),
        "rho": _mean_var(_column(rows, "rho")),
        "kappa_median": float(np.median(kappa)) if len(kappa) else None,
        "inv_kappa_median": float(np.median(1.0 / kappa)) if len(kappa) else None,
        "ci_coverage": _rate(_column(rows, "ci_covers")),
        "ks_null": ks_distance(stat),
        "ks_shifted": ks_distance(stat, lambda v: normal_cdf(v - shift)),
        "var_t_over_delta_scale_sq": float(np.var(t, ddof=1)) / oracle.delta_scale_pop**2,
        "var_t_over_k_sq": (float(np.var(t, ddof=1)) / oracle.k_pop**2) if oracle.k_pop else None,
        "histogram": histogram(stat, shift),
    }
    if delta > 0:
        out["t_over_delta"] = _mean_var(t / delta)
        out["sr_over_delta"] = _mean_var(_column(rows, "sr_delta") / delta)
        out["k_sq_over_delta_sq"] = oracle.k_pop**2 / delta**2 if oracle.k_pop else None
    if scenario.structure_truth:
        out["t0_truth"] = _mean_var(_column(rows, "t0_truth"))
    return out


@dataclass
class SimReport:
    scenario: SimScenario
    oracle: OracleQuantities
    rows: list[dict]
    summary: dict

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = out / "replications.csv"
        write_rows(self.rows, table)
        summary = out / "summary.json"
        summary.write_text(json.dumps(_finite(self.summary), indent=2, sort_keys=True) + "\n")
        return summary, table


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_rows(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])


def _chunks(reps: int, size: int):
    return [range(s, min(s + size, reps)) for s in range(0, reps, size)]


def run_monte_carlo(scenario: SimScenario, workers: int = 1, chunk_size: Optional[int] = None) -> SimReport:
    """Run all replications and aggregate them in replication order.

    Replication ``r`` always uses the stream keyed by ``(seed, r)``, so the
    rows are identical for any ``workers``.
    """
    oracle = oracle_quantities(scenario)
    reps = scenario.replications
    if workers <= 1:
        rows = _run_chunk((scenario, range(reps), oracle.delta))
    else:
        size = chunk_size or max(1, math.ceil(reps / (4 * workers)))
        tasks = [(scenario, c, oracle.delta) for c in _chunks(reps, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for chunk in pool.map(_run_chunk, tasks) for row in chunk]
    return SimReport(scenario, oracle, rows, summarize(scenario, oracle, rows))
