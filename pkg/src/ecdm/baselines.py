"""Srivastava-Reid estimators, the Gaussian-only benchmark for the ECDM test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ecdm.core import PairedSample
from ecdm.errors import NonpositiveScale
from ecdm.inference import TestOutcome, decide


def _centred_gram(block: np.ndarray) -> np.ndarray:
    x = np.asarray(block, dtype=np.float64)
    x = x - x.mean(axis=0)
    return x @ x.T


def _correction(n: int) -> float:
    return (n - 1) ** 2 / ((n - 2) * (n + 1))


def _check_n(n: int) -> None:
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")


def _sr_delta_from_grams(g1: np.ndarray, g2: np.ndarray, n: int) -> float:
    # tr(S* S*') = sum_{j,k} G1[j,k] G2[j,k] / (n-1)^2, never forming the p1 x p2 matrix
    cross = math.fsum((g1 * g2).ravel().tolist()) / (n - 1) ** 2
    tr1 = np.trace(g1) / (n - 1)
    tr2 = np.trace(g2) / (n - 1)
    return _correction(n) * (cross - tr1 * tr2 / (n - 1))


def _sr_w_from_gram(g: np.ndarray, n: int) -> float:
    tr_sq = math.fsum((g * g).ravel().tolist()) / (n - 1) ** 2
    tr = np.trace(g) / (n - 1)
    return _correction(n) * (tr_sq - tr * tr / (n - 1))


def sr_delta(sample: PairedSample) -> float:
    g1 = _centred_gram(sample.block1)
    g2 = _centred_gram(sample.block2)
    return _sr_delta_from_grams(g1, g2, sample.n)


def sr_w(block: np.ndarray, n: Optional[int] = None) -> float:
    """Bias-corrected ``tr(S_i^2)``; may be negative."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim == 1:
        block = block[:, None]
    n = block.shape[0] if n is None else n
    if block.shape[0] != n:
        raise ValueError(f"block has {block.shape[0]} rows, expected {n}")
    _check_n(n)
    return _sr_w_from_gram(_centred_gram(block), n)


@dataclass(frozen=True)
class SrBundle:
    delta_sr: float
    w1_sr: float
    w2_sr: float
    n: int

    @property
    def scale_defined(self) -> bool:
        return self.w1_sr * self.w2_sr > 0

    @property
    def delta_scale_sr(self) -> Optional[float]:
        if not self.scale_defined:
            return None
        return math.sqrt(2.0 * self.w1_sr * self.w2_sr) / self.n


def sr_bundle(sample: PairedSample) -> SrBundle:
    n = sample.n
    g1 = _centred_gram(sample.block1)
    g2 = _centred_gram(sample.block2)
    return SrBundle(
        delta_sr=_sr_delta_from_grams(g1, g2, n),
        w1_sr=_sr_w_from_gram(g1, n),
        w2_sr=_sr_w_from_gram(g2, n),
        n=n,
    )


def sr_test(sample: PairedSample, alpha: float = 0.05) -> TestOutcome:
    """The same one-sided rule applied to ``Delta_SR / delta_SR``."""
    b = sr_bundle(sample)
    if not b.scale_defined:
        raise NonpositiveScale(
            f"W_1(SR) * W_2(SR) = {b.w1_sr * b.w2_sr:.6g} is not positive"
        )
    return decide(b.delta_sr, b.delta_scale_sr, alpha)
