"""ECDM estimator kernel.

For every index sum ``k = i + j`` the sample is split into two disjoint
halves; observation ``i`` is centred with the mean of the first half and
observation ``j`` with the mean of the second, so the two centred vectors
are independent and every pairwise product is unbiased up to the factor
``1 / u_n``.

Sample indices are 1-based at every public entry point. Internally rows
are 0-based and index sets are stored as half-open ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ecdm.errors import DegenerateScale


@dataclass(frozen=True)
class PairedSample:
    """An ``n x p`` observation matrix whose first ``p1`` columns form block 1."""

    data: np.ndarray
    p1: int
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"data must be a 2-d matrix, got shape {data.shape}")
        n, p = data.shape
        if n < 4:
            raise ValueError(f"need at least 4 samples, got n={n}")
        p1 = int(self.p1)
        if not 1 <= p1 <= p - 1:
            raise ValueError(f"p1 must lie in [1, {p - 1}], got {self.p1}")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite entries")
        if self.names is not None and len(self.names) != p:
            raise ValueError(f"{len(self.names)} column names for {p} columns")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "p1", p1)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def p2(self) -> int:
        return self.p - self.p1

    @property
    def block1(self) -> np.ndarray:
        return self.data[:, : self.p1]

    @property
    def block2(self) -> np.ndarray:
        return self.data[:, self.p1 :]

    def column_name(self, index: int) -> str:
        if self.names is not None:
            return str(self.names[index])
        return f"column {index + 1}"


def split_sizes(n: int) -> tuple[int, int]:
    n1 = (n + 1) // 2
    return n1, n - n1


def unbiasing_factor(n: int) -> float:
    """u_n = n1 n2 / ((n1 - 1)(n2 - 1))."""
    n1, n2 = split_sizes(n)
    return n1 * n2 / ((n1 - 1) * (n2 - 1))


def _index_ranges(n: int, k: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    # 0-based half-open ranges for the two halves of index sum k
    n1, n2 = split_sizes(n)
    f = k // 2
    if f >= n1:
        first = [(f - n1, f)]
    else:
        first = [(0, f), (f + n2, n)]
    if f <= n1:
        second = [(f, f + n2)]
    else:
        second = [(0, f - n1), (f, n)]
    return first, second


def _check_nk(n: int, k: int) -> None:
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if not 3 <= k <= 2 * n - 1:
        raise ValueError(f"k must lie in [3, {2 * n - 1}], got {k}")


def ecdm_index_sets(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the 1-based index sets ``(V1, V2)`` for index sum ``k``.

    >>> [v.tolist() for v in ecdm_index_sets(4, 3)]
    [[1, 4], [2, 3]]
    """
    _check_nk(n, k)
    first, second = _index_ranges(n, k)
    v1 = np.concatenate([np.arange(lo, hi) for lo, hi in first]) + 1
    v2 = np.concatenate([np.arange(lo, hi) for lo, hi in second]) + 1
    return v1, v2


@lru_cache(maxsize=64)
def _range_table(n: int) -> np.ndarray:
    """Array ``r[half, k, piece] = (lo, hi)``; empty pieces are ``(0, 0)``."""
    table = np.zeros((2, 2 * n, 2, 2), dtype=np.intp)
    for k in range(3, 2 * n):
        for half, ranges in enumerate(_index_ranges(n, k)):
            for piece, (lo, hi) in enumerate(ranges):
                table[half, k, piece] = (lo, hi)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=64)
def _pair_index(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # row-major upper triangle: (i, j) in lexicographic order
    iu, ju = np.triu_indices(n, 1)
    ks = iu + ju + 2
    for a in (iu, ju, ks):
        a.setflags(write=False)
    return iu, ju, ks


@dataclass(frozen=True)
class SplitTable:
    """Index sets and cached half means for every ``k`` in ``3..2n-1``.

    Means are stored for the column-centred data, ``centred_means[half, k]``
    (rows ``k < 3`` are unused). :meth:`mean` adds the centre back.
    """

    n: int
    n1: int
    n2: int
    p1: int
    center: np.ndarray
    centred_means: np.ndarray = field(repr=False)

    @property
    def ks(self) -> range:
        return range(3, 2 * self.n)

    def index_sets(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return ecdm_index_sets(self.n, k)

    def mean(self, block: int, half: int, k: int) -> np.ndarray:
        """Mean of ``block`` (1 or 2) over the rows of half ``half`` (1 or 2) for sum ``k``."""
        _check_nk(self.n, k)
        cols = self._block_slice(block)
        return self.center[cols] + self.centred_means[half - 1, k, cols]

    def _block_slice(self, block: int) -> slice:
        if block == 1:
            return slice(0, self.p1)
        if block == 2:
            return slice(self.p1, None)
        raise ValueError(f"block must be 1 or 2, got {block}")


def _centre(sample: PairedSample) -> tuple[np.ndarray, np.ndarray]:
    data = sample.data
    center = data.mean(axis=0)
    centred = data - center
    # constant columns centre to exact zeros, so a constant block gives W = 0
    constant = np.ptp(data, axis=0) == 0
    centred[:, constant] = 0.0
    return center, centred


def _half_means(centred: np.ndarray) -> np.ndarray:
    n, p = centred.shape
    n1, n2 = split_sizes(n)
    csum = np.zeros((n + 1, p))
    np.cumsum(centred, axis=0, out=csum[1:])
    rt = _range_table(n)
    means = np.zeros((2, 2 * n, p))
    for half, size in ((0, n1), (1, n2)):
        lo = rt[half, :, :, 0]
        hi = rt[half, :, :, 1]
        sums = (csum[hi[:, 0]] - csum[lo[:, 0]]) + (csum[hi[:, 1]] - csum[lo[:, 1]])
        means[half] = sums / size
    means[:, :3] = 0.0
    return means


def build_split_table(sample: PairedSample) -> SplitTable:
    center, centred = _centre(sample)
    return _table_from_centred(sample, center, centred)


def _table_from_centred(sample, center, centred) -> SplitTable:
    n = sample.n
    n1, n2 = split_sizes(n)
    means = _half_means(centred)
    means.setflags(write=False)
    center.setflags(write=False)
    return SplitTable(n=n, n1=n1, n2=n2, p1=sample.p1, center=center, centred_means=means)


def _cross_products(x: np.ndarray, m_first: np.ndarray, m_second: np.ndarray) -> np.ndarray:
    """Centred inner products ``(x_i - m1[k]) . (x_j - m2[k])`` over all pairs i < j.

    ``x`` is one centred block; ``m_first``/``m_second`` are its half means
    indexed by ``k``. Costs O(n^2 p) through three matrix products.
    """
    n = x.shape[0]
    iu, ju, ks = _pair_index(n)
    gram = x @ x.T
    x_dot_second = x @ m_second.T
    x_dot_first = x @ m_first.T
    means_dot = np.einsum("kp,kp->k", m_first, m_second)
    return gram[iu, ju] - x_dot_second[iu, ks] - x_dot_first[ju, ks] + means_dot[ks]


def _block_terms(centred: np.ndarray, table: SplitTable, block: int) -> np.ndarray:
    cols = table._block_slice(block)
    return _cross_products(
        centred[:, cols], table.centred_means[0, :, cols], table.centred_means[1, :, cols]
    )


def _weighted_sum(terms: np.ndarray, n: int) -> float:
    # fsum is exactly rounded, so the result does not depend on summation order
    return 2.0 * unbiasing_factor(n) / (n * (n - 1)) * math.fsum(terms.tolist())


def pair_term(sample: PairedSample, table: SplitTable, i: int, j: int) -> float:
    """The pairwise term for 1-based indices ``i < j``, read off the cached means."""
    n = sample.n
    if not (1 <= i < j <= n):
        raise ValueError(f"need 1 <= i < j <= {n}, got i={i}, j={j}")
    k = i + j
    xi, xj = sample.data[i - 1], sample.data[j - 1]
    out = 1.0
    for block in (1, 2):
        cols = table._block_slice(block)
        a = xi[cols] - table.mean(block, 1, k)
        b = xj[cols] - table.mean(block, 2, k)
        out *= float(a @ b)
    return out


def t_hat(sample: PairedSample) -> float:
    """Unbiased estimate of the squared Frobenius norm of the cross-covariance."""
    center, centred = _centre(sample)
    table = _table_from_centred(sample, center, centred)
    a1 = _block_terms(centred, table, 1)
    a2 = _block_terms(centred, table, 2)
    return _weighted_sum(a1 * a2, sample.n)


def w_stat(block: np.ndarray, table: SplitTable, block_id: int) -> float:
    """Unbiased estimate of ``tr(Sigma_i^2)`` for one block.

    ``block`` must be the raw block-``block_id`` columns of the sample the
    table was built from.
    """
    block = np.asarray(block, dtype=np.float64)
    cols = table._block_slice(block_id)
    width = table.center[cols].shape[0]
    if block.shape != (table.n, width):
        raise ValueError(f"block {block_id} must have shape {(table.n, width)}, got {block.shape}")
    centred = block - table.center[cols]
    centred[:, np.ptp(block, axis=0) == 0] = 0.0
    a = _cross_products(centred, table.centred_means[0, :, cols], table.centred_means[1, :, cols])
    return _weighted_sum(a * a, table.n)


@dataclass(frozen=True)
class EstimateBundle:
    t_hat: float
    w1: float
    w2: float
    delta_scale: float
    u_n: float
    n: int

    @property
    def statistic(self) -> float:
        return self.t_hat / self.delta_scale


def _constant_columns(sample: PairedSample, block: int) -> list[str]:
    cols = range(sample.p1) if block == 1 else range(sample.p1, sample.p)
    ptp = np.ptp(sample.data, axis=0)
    return [sample.column_name(c) for c in cols if ptp[c] == 0]


def _degenerate(sample: PairedSample, block: int) -> DegenerateScale:
    const = _constant_columns(sample, block)
    if const:
        detail = "constant column(s): " + ", ".join(const)
    else:
        detail = "no pairwise variation"
    return DegenerateScale(f"W_{block}n = 0 for block {block} ({detail})", block=block, columns=const)


def ecdm_terms(sample: PairedSample) -> tuple[SplitTable, np.ndarray, np.ndarray, np.ndarray]:
    """Split table, centred data and per-pair block products ``(a1, a2)``."""
    center, centred = _centre(sample)
    table = _table_from_centred(sample, center, centred)
    a1 = _block_terms(centred, table, 1)
    a2 = _block_terms(centred, table, 2)
    return table, centred, a1, a2


def bundle_from_terms(n: int, a1: np.ndarray, a2: np.ndarray) -> EstimateBundle:
    t = _weighted_sum(a1 * a2, n)
    w1 = _weighted_sum(a1 * a1, n)
    w2 = _weighted_sum(a2 * a2, n)
    return EstimateBundle(
        t_hat=t,
        w1=w1,
        w2=w2,
        delta_scale=math.sqrt(2.0 * w1 * w2) / n,
        u_n=unbiasing_factor(n),
        n=n,
    )


def estimate_bundle(sample: PairedSample) -> EstimateBundle:
    """T_n, W_1n, W_2n and the null scale in one pass over the split table.

    Raises
    ------
    DegenerateScale
        If either block has ``W_in = 0`` (typically a constant block).
    """
    _, _, a1, a2 = ecdm_terms(sample)
    bundle = bundle_from_terms(sample.n, a1, a2)
    if bundle.w1 == 0:
        raise _degenerate(sample, 1)
    if bundle.w2 == 0:
        raise _degenerate(sample, 2)
    return bundle


def structure_corrections(
    centred: np.ndarray, table: SplitTable, sigma0: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair quadratic forms ``(x1 - m1)' Sigma0 (x2 - m2)`` for rows i and j.

    The first array uses row ``i`` with first-half means, the second row
    ``j`` with second-half means, both at ``k = i + j``.
    """
    n = table.n
    iu, ju, ks = _pair_index(n)
    x1 = centred[:, : table.p1]
    x2 = centred[:, table.p1 :]
    y = x1 @ sigma0
    diag = np.einsum("np,np->n", y, x2)
    out = []
    for half, rows in ((0, iu), (1, ju)):
        m1 = table.centred_means[half, :, : table.p1]
        m2 = table.centred_means[half, :, table.p1 :]
        my = m1 @ sigma0
        e = diag[:, None] - y @ m2.T - x2 @ my.T + np.einsum("kp,kp->k", my, m2)[None, :]
        out.append(e[rows, ks])
    return out[0], out[1]
