"""Block covariance constructions and a symmetric eigensolver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CovSpec:
    """Two blocks ``Sigma_i[j, k] = b_j b_k base_i ** (|j - k| ** (1/3))``.

    When ``scaled`` the diagonal weights are ``b_j^2 = 0.5 + j / (p_i + 1)``,
    which makes ``tr(Sigma_i) = p_i``; otherwise ``b = 1``.
    """

    p1: int
    p2: int
    base1: float = 0.3
    base2: float = 0.4
    scaled: bool = True

    def __post_init__(self):
        for name in ("p1", "p2"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("base1", "base2"):
            if not 0.0 < float(getattr(self, name)) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")


def decay_matrix(p: int, base: float, scaled: bool) -> np.ndarray:
    idx = np.arange(p)
    lag = np.abs(idx[:, None] - idx[None, :]).astype(float)
    sigma = base ** np.cbrt(lag)
    if scaled:
        b = np.sqrt(0.5 + np.arange(1, p + 1) / (p + 1))
        sigma = np.outer(b, b) * sigma  # exactly symmetric
    return sigma


def build_sigma(spec: CovSpec) -> tuple[np.ndarray, np.ndarray]:
    return (
        decay_matrix(spec.p1, spec.base1, spec.scaled),
        decay_matrix(spec.p2, spec.base2, spec.scaled),
    )


def sym_eig(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors (columns).

    Each eigenvector is signed so that its largest-magnitude entry is positive.
    """
    a = np.asarray(sigma, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((a + a.T) / 2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    return vals, vecs
